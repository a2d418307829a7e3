"""Extension-field tower arithmetic for the BLS12 backend.

The tower is the usual 2-3-2 construction over a base prime p = 3 (mod 4):

    Fp2  = Fp[i]  / (i^2 + 1)
    Fp6  = Fp2[v] / (v^3 - xi),   xi = 1 + i
    Fp12 = Fp6[w] / (w^2 - v)

Elements are plain tuples (gmpy2 mpz coordinates): Fp2 is (a, b) for a + b*i,
Fp6 is a triple of Fp2, Fp12 a pair of Fp6.  Functions take the modulus
explicitly; there is no per-element object overhead.

Viewing Fp12 over the basis (1, w, w^2, w^3, w^4, w^5) with Fp2 coefficients
(a0..a5), the embedding is c0 = (a0, a2, a4), c1 = (a1, a3, a5).  Sparse
multiplication by Miller-loop line values and the Frobenius maps are written
against that basis.
"""

from __future__ import annotations

from gmpy2 import invert, mpz

_ZERO = mpz(0)
_ONE = mpz(1)

F2_ZERO = (_ZERO, _ZERO)
F2_ONE = (_ONE, _ZERO)
F6_ZERO = (F2_ZERO, F2_ZERO, F2_ZERO)
F6_ONE = (F2_ONE, F2_ZERO, F2_ZERO)
F12_ONE = (F6_ONE, F6_ZERO)


# --- Fp2 --------------------------------------------------------------------

def f2_add(x, y, p):
    return ((x[0] + y[0]) % p, (x[1] + y[1]) % p)


def f2_sub(x, y, p):
    return ((x[0] - y[0]) % p, (x[1] - y[1]) % p)


def f2_neg(x, p):
    return ((-x[0]) % p, (-x[1]) % p)


def f2_conj(x, p):
    return (x[0], (-x[1]) % p)


def f2_mul(x, y, p):
    a, b = x
    c, d = y
    t0 = a * c
    t1 = b * d
    t2 = (a + b) * (c + d)
    return ((t0 - t1) % p, (t2 - t0 - t1) % p)


def f2_sqr(x, p):
    a, b = x
    t = a * b
    return ((a + b) * (a - b) % p, (t + t) % p)


def f2_scale(x, k, p):
    return ((x[0] * k) % p, (x[1] * k) % p)


def f2_xi_mul(x, p):
    # (a + bi)(1 + i) = (a - b) + (a + b)i
    a, b = x
    return ((a - b) % p, (a + b) % p)


def f2_inv(x, p):
    a, b = x
    n = invert((a * a + b * b) % p, p)
    return ((a * n) % p, (-b * n) % p)


def f2_pow(x, e, p):
    out = F2_ONE
    base = x
    while e:
        if e & 1:
            out = f2_mul(out, base, p)
        base = f2_sqr(base, p)
        e >>= 1
    return out


# --- Fp6 --------------------------------------------------------------------

def f6_add(x, y, p):
    return (f2_add(x[0], y[0], p), f2_add(x[1], y[1], p), f2_add(x[2], y[2], p))


def f6_sub(x, y, p):
    return (f2_sub(x[0], y[0], p), f2_sub(x[1], y[1], p), f2_sub(x[2], y[2], p))


def f6_neg(x, p):
    return (f2_neg(x[0], p), f2_neg(x[1], p), f2_neg(x[2], p))


def f6_mul(x, y, p):
    a0, a1, a2 = x
    b0, b1, b2 = y
    v0 = f2_mul(a0, b0, p)
    v1 = f2_mul(a1, b1, p)
    v2 = f2_mul(a2, b2, p)
    t = f2_mul(f2_add(a1, a2, p), f2_add(b1, b2, p), p)
    r0 = f2_add(v0, f2_xi_mul(f2_sub(f2_sub(t, v1, p), v2, p), p), p)
    t = f2_mul(f2_add(a0, a1, p), f2_add(b0, b1, p), p)
    r1 = f2_add(f2_sub(f2_sub(t, v0, p), v1, p), f2_xi_mul(v2, p), p)
    t = f2_mul(f2_add(a0, a2, p), f2_add(b0, b2, p), p)
    r2 = f2_add(f2_sub(f2_sub(t, v0, p), v2, p), v1, p)
    return (r0, r1, r2)


def f6_sqr(x, p):
    return f6_mul(x, x, p)


def f6_v_mul(x, p):
    # multiply by v: (c0, c1, c2) -> (xi*c2, c0, c1)
    return (f2_xi_mul(x[2], p), x[0], x[1])


def f6_inv(x, p):
    a0, a1, a2 = x
    t0 = f2_sub(f2_sqr(a0, p), f2_xi_mul(f2_mul(a1, a2, p), p), p)
    t1 = f2_sub(f2_xi_mul(f2_sqr(a2, p), p), f2_mul(a0, a1, p), p)
    t2 = f2_sub(f2_sqr(a1, p), f2_mul(a0, a2, p), p)
    den = f2_add(f2_mul(a0, t0, p),
                 f2_xi_mul(f2_add(f2_mul(a2, t1, p), f2_mul(a1, t2, p), p), p),
                 p)
    inv = f2_inv(den, p)
    return (f2_mul(t0, inv, p), f2_mul(t1, inv, p), f2_mul(t2, inv, p))


# --- Fp12 -------------------------------------------------------------------

def f12_mul(x, y, p):
    a0, a1 = x
    b0, b1 = y
    t0 = f6_mul(a0, b0, p)
    t1 = f6_mul(a1, b1, p)
    r1 = f6_mul(f6_add(a0, a1, p), f6_add(b0, b1, p), p)
    r1 = f6_sub(f6_sub(r1, t0, p), t1, p)
    return (f6_add(t0, f6_v_mul(t1, p), p), r1)


def f12_sqr(x, p):
    a0, a1 = x
    t = f6_mul(a0, a1, p)
    r0 = f6_mul(f6_add(a0, a1, p), f6_add(a0, f6_v_mul(a1, p), p), p)
    r0 = f6_sub(f6_sub(r0, t, p), f6_v_mul(t, p), p)
    return (r0, f6_add(t, t, p))


def f12_cyc_sqr(x, p):
    """Squaring restricted to unitary elements (norm 1), via three squarings
    in Fp4 = Fp2[w^3].  Roughly half the base-field multiplications of
    f12_sqr, and flattened into one frame because this sits inside every
    target-group exponentiation loop."""
    (z0, z4, z3), (z2, z1, z5) = x

    def fp4_sqr(a, b):
        a0, a1 = a
        b0, b1 = b
        sa0 = (a0 + a1) * (a0 - a1) % p
        sa1 = 2 * a0 * a1 % p
        sb0 = (b0 + b1) * (b0 - b1) % p
        sb1 = 2 * b0 * b1 % p
        s0, s1 = a0 + b0, a1 + b1
        c10 = ((s0 + s1) * (s0 - s1) - sa0 - sb0) % p
        c11 = (2 * s0 * s1 - sa1 - sb1) % p
        return ((sa0 + sb0 - sb1) % p, (sa1 + sb0 + sb1) % p), (c10, c11)

    t0, t1 = fp4_sqr(z0, z1)
    r0 = ((3 * t0[0] - 2 * z0[0]) % p, (3 * t0[1] - 2 * z0[1]) % p)
    r1 = ((3 * t1[0] + 2 * z1[0]) % p, (3 * t1[1] + 2 * z1[1]) % p)
    t0, t1 = fp4_sqr(z2, z3)
    t2, t3 = fp4_sqr(z4, z5)
    r4 = ((3 * t0[0] - 2 * z4[0]) % p, (3 * t0[1] - 2 * z4[1]) % p)
    r5 = ((3 * t1[0] + 2 * z5[0]) % p, (3 * t1[1] + 2 * z5[1]) % p)
    xt3 = (t3[0] - t3[1], t3[0] + t3[1])
    r2 = ((3 * xt3[0] + 2 * z2[0]) % p, (3 * xt3[1] + 2 * z2[1]) % p)
    r3 = ((3 * t2[0] - 2 * z3[0]) % p, (3 * t2[1] - 2 * z3[1]) % p)
    return ((r0, r4, r3), (r2, r1, r5))


def f12_conj(x, p):
    return (x[0], f6_neg(x[1], p))


def f12_inv(x, p):
    a0, a1 = x
    n = f6_sub(f6_sqr(a0, p), f6_v_mul(f6_sqr(a1, p), p), p)
    ninv = f6_inv(n, p)
    return (f6_mul(a0, ninv, p), f6_neg(f6_mul(a1, ninv, p), p))


def f12_mul_line(f, la, lb, yp, p):
    """Multiply f by the sparse line value la + lb*w^2 + (yp, 0)*w^3.

    la, lb are Fp2; yp is an Fp coordinate of the pairing argument.
    """
    c = (yp % p, _ZERO)
    d0, d1 = f
    # s = (la, lb, 0) in Fp6; t0 = d0 * s
    a0, a1, a2 = d0
    v0 = f2_mul(a0, la, p)
    v1 = f2_mul(a1, lb, p)
    t0 = (f2_add(v0, f2_xi_mul(f2_mul(a2, lb, p), p), p),
          f2_sub(f2_sub(f2_mul(f2_add(a0, a1, p), f2_add(la, lb, p), p), v0, p), v1, p),
          f2_add(f2_mul(a2, la, p), v1, p))
    # s' = (0, c, 0) in Fp6; t1 = d1 * s'
    b0, b1, b2 = d1
    t1 = (f2_xi_mul(f2_scale(b2, c[0], p), p),
          f2_scale(b0, c[0], p),
          f2_scale(b1, c[0], p))
    # Karatsuba cross term with s + s' = (la, lb + c, 0)
    m = f2_add(lb, c, p)
    a0, a1, a2 = f6_add(d0, d1, p)
    v0 = f2_mul(a0, la, p)
    v1 = f2_mul(a1, m, p)
    cross = (f2_add(v0, f2_xi_mul(f2_mul(a2, m, p), p), p),
             f2_sub(f2_sub(f2_mul(f2_add(a0, a1, p), f2_add(la, m, p), p), v0, p), v1, p),
             f2_add(f2_mul(a2, la, p), v1, p))
    r1 = f6_sub(f6_sub(cross, t0, p), t1, p)
    return (f6_add(t0, f6_v_mul(t1, p), p), r1)


def f12_coeffs(x):
    """Fp2 coefficients (a0..a5) over the w-power basis."""
    c0, c1 = x
    return (c0[0], c1[0], c0[1], c1[1], c0[2], c1[2])


def f12_from_coeffs(a):
    return ((a[0], a[2], a[4]), (a[1], a[3], a[5]))


def f12_frob(x, table, conjugate, p):
    """Frobenius power: coefficient-wise conjugation and twist by table[k]."""
    out = []
    for k, a in enumerate(f12_coeffs(x)):
        if conjugate:
            a = f2_conj(a, p)
        out.append(f2_mul(a, table[k], p))
    return f12_from_coeffs(out)


def f12_pow(x, e, p):
    out = F12_ONE
    base = x
    while e:
        if e & 1:
            out = f12_mul(out, base, p)
        base = f12_sqr(base, p)
        e >>= 1
    return out


def frobenius_table(power, p, xi=(mpz(1), mpz(1))):
    """Precompute xi^(k * (p^power - 1) / 6) for k = 0..5."""
    e = (p ** power - 1) // 6
    base = f2_pow(xi, e, p)
    out = [F2_ONE]
    for _ in range(5):
        out.append(f2_mul(out[-1], base, p))
    return tuple(out)
