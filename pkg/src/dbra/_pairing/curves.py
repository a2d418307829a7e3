"""Affine short-Weierstrass arithmetic for the two source groups.

G1 lives on E(Fp): y^2 = x^3 + b with Fp coordinates, G2 on the sextic twist
E'(Fp2): y^2 = x^3 + b'.  Points are (x, y) tuples, None is the identity.
Inversions go through gmpy2, which makes affine formulas faster in Python
than Jacobian ones (a modular inverse costs about seven multiplications
here, not seventy).
"""

from __future__ import annotations

import hashlib

from gmpy2 import invert, mpz, powmod

from .fields import (
    f2_add,
    f2_inv,
    f2_mul,
    f2_neg,
    f2_sqr,
    f2_sub,
)


def naf_digits(n):
    """Non-adjacent form of n > 0, most significant digit first."""
    digits = []
    while n:
        if n & 1:
            d = 2 - (n % 4)
            n -= d
        else:
            d = 0
        digits.append(d)
        n >>= 1
    digits.reverse()
    return tuple(digits)


# --- G1: coordinates in Fp --------------------------------------------------

def g1_neg(P, p):
    if P is None:
        return None
    return (P[0], (-P[1]) % p)


def g1_add(P, Q, p):
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return None
        lam = (3 * x1 * x1) * invert(2 * y1 % p, p) % p
    else:
        lam = (y2 - y1) * invert((x2 - x1) % p, p) % p
    x3 = (lam * lam - x1 - x2) % p
    y3 = (lam * (x1 - x3) - y1) % p
    return (x3, y3)


def g1_mul(k, P, p):
    if P is None or k == 0:
        return None
    if k < 0:
        return g1_mul(-k, g1_neg(P, p), p)
    out = None
    neg = g1_neg(P, p)
    for d in naf_digits(k):
        out = g1_add(out, out, p)
        if d == 1:
            out = g1_add(out, P, p)
        elif d == -1:
            out = g1_add(out, neg, p)
    return out


def g1_on_curve(P, b, p):
    if P is None:
        return True
    x, y = P
    return (y * y - (x * x * x + b)) % p == 0


# --- G2: coordinates in Fp2 -------------------------------------------------

def g2_neg(P, p):
    if P is None:
        return None
    return (P[0], f2_neg(P[1], p))


def g2_add(P, Q, p):
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if f2_add(y1, y2, p) == (0, 0):
            return None
        sq = f2_sqr(x1, p)
        num = ((3 * sq[0]) % p, (3 * sq[1]) % p)
        den = f2_inv(((2 * y1[0]) % p, (2 * y1[1]) % p), p)
        lam = f2_mul(num, den, p)
    else:
        lam = f2_mul(f2_sub(y2, y1, p), f2_inv(f2_sub(x2, x1, p), p), p)
    x3 = f2_sub(f2_sub(f2_sqr(lam, p), x1, p), x2, p)
    y3 = f2_sub(f2_mul(lam, f2_sub(x1, x3, p), p), y1, p)
    return (x3, y3)


def g2_mul(k, P, p):
    if P is None or k == 0:
        return None
    if k < 0:
        return g2_mul(-k, g2_neg(P, p), p)
    out = None
    neg = g2_neg(P, p)
    for d in naf_digits(k):
        out = g2_add(out, out, p)
        if d == 1:
            out = g2_add(out, P, p)
        elif d == -1:
            out = g2_add(out, neg, p)
    return out


def g2_on_curve(P, bt, p):
    if P is None:
        return True
    x, y = P
    x3 = f2_mul(f2_sqr(x, p), x, p)
    return f2_sqr(y, p) == f2_add(x3, bt, p)


# --- square roots -----------------------------------------------------------

def fp_sqrt(a, p):
    """Square root in Fp (p = 3 mod 4), or None."""
    a = a % p
    y = powmod(a, (p + 1) // 4, p)
    return y if (y * y) % p == a else None


def f2_sqrt(z, p):
    """Square root in Fp2 (p = 3 mod 4), or None."""
    a, b = z[0] % p, z[1] % p
    if b == 0:
        y = fp_sqrt(a, p)
        if y is not None:
            return (y, mpz(0))
        y = fp_sqrt((-a) % p, p)
        return None if y is None else (mpz(0), y)
    n = (a * a + b * b) % p
    s = fp_sqrt(n, p)
    if s is None:
        return None
    inv2 = invert(mpz(2), p)
    t = (a + s) * inv2 % p
    x0 = fp_sqrt(t, p)
    if x0 is None:
        x0 = fp_sqrt((a - s) * inv2 % p, p)
        if x0 is None:
            return None
    x1 = b * invert((2 * x0) % p, p) % p
    cand = (x0, x1)
    return cand if f2_sqr(cand, p) == (a, b) else None


# --- deterministic point derivation -----------------------------------------

def _field_candidates(label, p, count):
    width = (p.bit_length() + 7) // 8 + 16
    for ctr in range(count):
        h = hashlib.shake_256(b"%s|%d" % (label, ctr)).digest(width)
        yield mpz(int.from_bytes(h, "big") % p)


def g1_from_label(label, b, cofactor, p):
    """Derive a G1 generator candidate from a label via try-and-increment."""
    for x in _field_candidates(label + b"/g1", p, 1 << 16):
        y = fp_sqrt((x * x * x + b) % p, p)
        if y is None:
            continue
        if y > p - y:
            y = p - y
        P = g1_mul(cofactor, (x, y), p)
        if P is not None:
            return P
    raise ValueError("generator derivation failed")


def g2_from_label(label, bt, cofactor, p):
    for x0 in _field_candidates(label + b"/g2", p, 1 << 16):
        x = (x0, mpz(1))
        rhs = f2_add(f2_mul(f2_sqr(x, p), x, p), bt, p)
        y = f2_sqrt(rhs, p)
        if y is None:
            continue
        if (y[1], y[0]) > ((p - y[1]) % p, (p - y[0]) % p):
            y = f2_neg(y, p)
        P = g2_mul(cofactor, (x, y), p)
        if P is not None:
            return P
    raise ValueError("generator derivation failed")
