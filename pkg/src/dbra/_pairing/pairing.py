"""Optimal-ate pairing over BLS12-family curves.

Each parameter set is fixed by the curve integer u (and coefficient b = 4);
everything else (p, r, cofactors, twist, Frobenius constants) is derived at
construction time.  Both supported curves use an M-type sextic twist, so G2
points live on y^2 = x^3 + b*xi and line values untwist into the sparse
w^0/w^2/w^3 slots of Fp12 handled by f12_mul_line.

The final exponentiation uses the lattice decomposition

    (u-1)^2 * (u+p) * (u^2+p^2-1) + 3  ==  3 * (p^4 - p^2 + 1) / r

so the reported value is the cube of the classical reduced ate pairing; that
is still a bilinear non-degenerate pairing onto the same subgroup of order r,
which is all the layers above rely on.
"""

from __future__ import annotations

import hashlib

from gmpy2 import isqrt, mpz

from . import curves, fields
from .curves import (
    f2_sqrt,
    fp_sqrt,
    g1_add,
    g1_from_label,
    g1_mul,
    g1_neg,
    g1_on_curve,
    g2_add,
    g2_from_label,
    g2_mul,
    g2_neg,
    g2_on_curve,
    naf_digits,
)
from .fields import (
    F12_ONE,
    f2_inv,
    f2_mul,
    f2_neg,
    f2_scale,
    f2_sqr,
    f2_sub,
    f12_conj,
    f12_cyc_sqr,
    f12_frob,
    f12_inv,
    f12_mul,
    f12_mul_line,
    f12_sqr,
    frobenius_table,
)

# curve integers; both sets use b = 4 and the M-type twist by xi = 1 + i
_CURVE_U = {
    128: -mpz(0xD201000000010000),
    192: -mpz(0x7FFFFEFFFFFFFFFFFFFFFF80000),
}

_GENERATOR_LABEL = b"dbra/bls12/gen/v1"


class Curve:
    """Derived constants and pairing engine for one BLS12 parameter set."""

    def __init__(self, level: int):
        if level not in _CURVE_U:
            raise ValueError("unsupported security level: %r" % (level,))
        self.level = level
        u = _CURVE_U[level]
        self.u = u
        self.r = u ** 4 - u ** 2 + 1
        self.p = (u - 1) ** 2 * self.r // 3 + u
        p = self.p
        if p % 4 != 3 or p % 6 != 1:
            raise AssertionError("field congruences violated")
        self.b = mpz(4)
        self.bt = fields.f2_xi_mul((self.b, mpz(0)), p)
        self.h1 = (u - 1) ** 2 // 3

        t = u + 1
        t2 = t * t - 2 * p
        f = isqrt((4 * p * p - t2 * t2) // 3)
        if f * f != (4 * p * p - t2 * t2) // 3:
            raise AssertionError("CM equation violated")
        n = None
        for cand in (p * p + 1 - (t2 - 3 * f) // 2, p * p + 1 - (t2 + 3 * f) // 2):
            if cand % self.r == 0:
                n = cand
                break
        if n is None:
            raise AssertionError("no r-divisible sextic twist order")
        self.h2 = n // self.r

        self.fp_width = (p.bit_length() + 7) // 8
        self.scalar_width = (self.r.bit_length() + 7) // 8
        self._frob1 = frobenius_table(1, p)
        self._frob2 = frobenius_table(2, p)
        self._u_naf = naf_digits(-u if u < 0 else u)

        self.g1 = g1_from_label(_GENERATOR_LABEL, self.b, self.h1, p)
        self.g2 = g2_from_label(_GENERATOR_LABEL, self.bt, self.h2, p)
        if g1_mul(self.r, self.g1, p) is not None:
            raise AssertionError("G1 generator has wrong order")
        if g2_mul(self.r, self.g2, p) is not None:
            raise AssertionError("G2 generator has wrong order")

    # --- pairing ------------------------------------------------------------

    def _miller_step_tables(self, qs):
        return [(q, g2_neg(q, self.p)) for q in qs]

    def pairing_product(self, pairs):
        """Product of e(P_i, Q_i) with a single shared final exponentiation."""
        p = self.p
        live = [(P, Q, g2_neg(Q, p)) for (P, Q) in pairs
                if P is not None and Q is not None]
        if not live:
            return F12_ONE
        f = F12_ONE
        ts = [Q for (_, Q, _) in live]
        for d in self._u_naf[1:]:
            f = f12_sqr(f, p)
            for idx, (P, Q, negQ) in enumerate(live):
                T = ts[idx]
                xt, yt = T
                sq = f2_sqr(xt, p)
                num = ((3 * sq[0]) % p, (3 * sq[1]) % p)
                lam = f2_mul(num, f2_inv(((2 * yt[0]) % p, (2 * yt[1]) % p), p), p)
                la = f2_sub(f2_mul(lam, xt, p), yt, p)
                lb = f2_scale(f2_neg(lam, p), P[0], p)
                f = f12_mul_line(f, la, lb, P[1], p)
                x3 = f2_sub(f2_sub(f2_sqr(lam, p), xt, p), xt, p)
                y3 = f2_sub(f2_mul(lam, f2_sub(xt, x3, p), p), yt, p)
                T = (x3, y3)
                if d:
                    S = Q if d == 1 else negQ
                    xs, ys = S
                    lam = f2_mul(f2_sub(ys, T[1], p),
                                 f2_inv(f2_sub(xs, T[0], p), p), p)
                    la = f2_sub(f2_mul(lam, T[0], p), T[1], p)
                    lb = f2_scale(f2_neg(lam, p), P[0], p)
                    f = f12_mul_line(f, la, lb, P[1], p)
                    x3 = f2_sub(f2_sub(f2_sqr(lam, p), T[0], p), xs, p)
                    y3 = f2_sub(f2_mul(lam, f2_sub(T[0], x3, p), p), T[1], p)
                    T = (x3, y3)
                ts[idx] = T
        if self.u < 0:
            f = f12_conj(f, p)
        return self.final_exp(f)

    def pairing(self, P, Q):
        return self.pairing_product([(P, Q)])

    def _exp_abs_u(self, m):
        """m^|u| for unitary m (conjugate is the inverse)."""
        p = self.p
        out = None
        conj = f12_conj(m, p)
        for d in self._u_naf:
            if out is not None:
                out = f12_cyc_sqr(out, p)
            if d == 1:
                out = m if out is None else f12_mul(out, m, p)
            elif d == -1:
                out = conj if out is None else f12_mul(out, conj, p)
        return out

    def _exp_u(self, m):
        out = self._exp_abs_u(m)
        return f12_conj(out, self.p) if self.u < 0 else out

    def final_exp(self, f):
        p = self.p
        # easy part: f^((p^6 - 1)(p^2 + 1))
        m = f12_mul(f12_conj(f, p), f12_inv(f, p), p)
        m = f12_mul(f12_frob(m, self._frob2, False, p), m, p)
        # hard part via the (u-1)^2 (u+p) (u^2+p^2-1) + 3 chain
        y0 = f12_mul(self._exp_u(m), f12_conj(m, p), p)          # m^(u-1)
        y1 = f12_mul(self._exp_u(y0), f12_conj(y0, p), p)        # m^(u-1)^2
        y2 = f12_mul(self._exp_u(y1), f12_frob(y1, self._frob1, True, p), p)
        y3 = f12_mul(f12_mul(self._exp_u(self._exp_u(y2)),
                             f12_frob(y2, self._frob2, False, p), p),
                     f12_conj(y2, p), p)
        m3 = f12_mul(f12_sqr(m, p), m, p)
        return f12_mul(y3, m3, p)

    # --- group helpers --------------------------------------------------------

    def g1_exp(self, k, P=None):
        return g1_mul(k % self.r, self.g1 if P is None else P, self.p)

    def g2_exp(self, k, P=None):
        return g2_mul(k % self.r, self.g2 if P is None else P, self.p)

    def g1_op(self, P, Q):
        return g1_add(P, Q, self.p)

    def g2_op(self, P, Q):
        return g2_add(P, Q, self.p)

    def g1_inverse(self, P):
        return g1_neg(P, self.p)

    def g2_inverse(self, P):
        return g2_neg(P, self.p)

    def gt_identity(self):
        return F12_ONE

    def gt_mul(self, a, b):
        return f12_mul(a, b, self.p)

    def gt_exp(self, a, k):
        k = k % self.r
        if k == 0:
            return F12_ONE
        p = self.p
        if f12_mul(a, f12_conj(a, p), p) != F12_ONE:
            return fields.f12_pow(a, k, p)
        # unitary elements (every honest pairing output): NAF with free
        # inversion and the cheap cyclotomic squaring
        conj = f12_conj(a, p)
        out = None
        for d in naf_digits(k):
            if out is not None:
                out = f12_cyc_sqr(out, p)
            if d == 1:
                out = a if out is None else f12_mul(out, a, p)
            elif d == -1:
                out = conj if out is None else f12_mul(out, conj, p)
        return out

    def gt_comb_table(self, a):
        """Fixed-base comb table for gt_exp_comb; None when a is outside GT.

        Four teeth over quarter-width chunks of the exponent. Build cost is
        about three plain exponentiations' worth of squarings, repaid after
        the first reuse of the same base.
        """
        p = self.p
        if f12_mul(a, f12_conj(a, p), p) != F12_ONE:
            return None
        chunk = (self.r.bit_length() + 3) // 4
        powers = [a]
        for _ in range(3):
            q = powers[-1]
            for _ in range(chunk):
                q = f12_cyc_sqr(q, p)
            powers.append(q)
        table = [None] * 16
        for m in range(1, 16):
            acc = None
            for j in range(4):
                if m >> j & 1:
                    acc = powers[j] if acc is None else f12_mul(acc, powers[j], p)
            table[m] = acc
        return chunk, table

    def gt_exp_comb(self, comb, k):
        chunk, table = comb
        k = k % self.r
        if k == 0:
            return F12_ONE
        p = self.p
        out = None
        for i in range(chunk - 1, -1, -1):
            if out is not None:
                out = f12_cyc_sqr(out, p)
            m = (k >> i & 1) | (k >> (chunk + i) & 1) << 1 \
                | (k >> (2 * chunk + i) & 1) << 2 | (k >> (3 * chunk + i) & 1) << 3
            if m:
                out = table[m] if out is None else f12_mul(out, table[m], p)
        return F12_ONE if out is None else out

    def gt_inverse(self, a):
        return f12_inv(a, self.p)

    def hash_to_scalar(self, data: bytes) -> mpz:
        width = self.scalar_width + 16
        h = hashlib.shake_256(b"dbra/h2s|" + data).digest(width)
        return mpz(int.from_bytes(h, "big") % self.r)

    # --- codecs ---------------------------------------------------------------

    def _fp_bytes(self, v) -> bytes:
        return int(v).to_bytes(self.fp_width, "big")

    def _fp_read(self, raw: bytes):
        v = mpz(int.from_bytes(raw, "big"))
        if v >= self.p:
            raise ValueError("field element out of range")
        return v

    def g1_bytes(self, P) -> bytes:
        if P is None:
            return b"\x00" + bytes(self.fp_width)
        x, y = P
        tag = 3 if y > self.p - y else 2
        return bytes([tag]) + self._fp_bytes(x)

    def g1_from_bytes(self, raw: bytes):
        if len(raw) != 1 + self.fp_width:
            raise ValueError("bad G1 encoding length")
        tag = raw[0]
        if tag == 0:
            if any(raw[1:]):
                raise ValueError("bad identity encoding")
            return None
        if tag not in (2, 3):
            raise ValueError("bad G1 prefix")
        x = self._fp_read(raw[1:])
        y = fp_sqrt((x * x * x + self.b) % self.p, self.p)
        if y is None:
            raise ValueError("not a curve x-coordinate")
        if (y > self.p - y) != (tag == 3):
            y = self.p - y
        P = (x, y)
        if g1_mul(self.r, P, self.p) is not None:
            raise ValueError("point outside the prime-order subgroup")
        return P

    def g2_bytes(self, P) -> bytes:
        if P is None:
            return b"\x00" + bytes(2 * self.fp_width)
        x, y = P
        neg = (y[1], y[0]) > ((self.p - y[1]) % self.p, (self.p - y[0]) % self.p)
        tag = 3 if neg else 2
        return bytes([tag]) + self._fp_bytes(x[0]) + self._fp_bytes(x[1])

    def g2_from_bytes(self, raw: bytes):
        if len(raw) != 1 + 2 * self.fp_width:
            raise ValueError("bad G2 encoding length")
        tag = raw[0]
        if tag == 0:
            if any(raw[1:]):
                raise ValueError("bad identity encoding")
            return None
        if tag not in (2, 3):
            raise ValueError("bad G2 prefix")
        x = (self._fp_read(raw[1:1 + self.fp_width]),
             self._fp_read(raw[1 + self.fp_width:]))
        rhs = fields.f2_add(f2_mul(f2_sqr(x, self.p), x, self.p), self.bt, self.p)
        y = f2_sqrt(rhs, self.p)
        if y is None:
            raise ValueError("not a twist x-coordinate")
        neg = (y[1], y[0]) > ((self.p - y[1]) % self.p, (self.p - y[0]) % self.p)
        if neg != (tag == 3):
            y = f2_neg(y, self.p)
        P = (x, y)
        if g2_mul(self.r, P, self.p) is not None:
            raise ValueError("point outside the prime-order subgroup")
        return P

    def gt_bytes(self, a) -> bytes:
        out = []
        for c6 in a:
            for c2 in c6:
                out.append(self._fp_bytes(c2[0]))
                out.append(self._fp_bytes(c2[1]))
        return b"".join(out)

    def gt_from_bytes(self, raw: bytes):
        if len(raw) != 12 * self.fp_width:
            raise ValueError("bad GT encoding length")
        vals = [self._fp_read(raw[i * self.fp_width:(i + 1) * self.fp_width])
                for i in range(12)]
        return (((vals[0], vals[1]), (vals[2], vals[3]), (vals[4], vals[5])),
                ((vals[6], vals[7]), (vals[8], vals[9]), (vals[10], vals[11])))

    def g1_is_valid(self, P):
        return g1_on_curve(P, self.b, self.p)

    def g2_is_valid(self, P):
        return g2_on_curve(P, self.bt, self.p)


_CACHE: dict = {}


def get_curve(level: int) -> Curve:
    if level not in _CACHE:
        _CACHE[level] = Curve(level)
    return _CACHE[level]
