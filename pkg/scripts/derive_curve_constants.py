#!/usr/bin/env python3
"""Derive and verify the BLS12 parameter sets baked into dbra._pairing.params.

A BLS12 curve is fixed by the integer u and the base-curve coefficient b:

    r = u^4 - u^2 + 1
    p = (u - 1)^2 * r / 3 + u
    E/Fp:  y^2 = x^3 + b          order  h1 * r,  h1 = (u - 1)^2 / 3
    E'/Fp2: y^2 = x^3 + b * xi    (or b / xi), the sextic twist hosting G2

This script checks primality, congruences needed by the field tower
(p = 3 mod 4 so Fp2 = Fp[i]/(i^2+1); xi = 1+i a non-square non-cube so the
6-2-... tower closes), determines which twist carries a subgroup of order r
and its cofactor, and confirms the final-exponentiation decomposition

    (x-1)^2 * (x+p) * (x^2+p^2-1) + 3  ==  3 * (p^4 - p^2 + 1) / r

used by the Miller-loop backend.  For the 192-bit level it searches a fresh
low-weight u of ~107 bits.  Output is a literal block for params.py.
"""

from __future__ import annotations

import itertools
import sys

import gmpy2
from gmpy2 import mpz


# --- Fp2 helpers (tuples (a, b) meaning a + b*i, i^2 = -1) ------------------

def f2_mul(x, y, p):
    a, b = x
    c, d = y
    t0 = a * c
    t1 = b * d
    t2 = (a + b) * (c + d)
    return ((t0 - t1) % p, (t2 - t0 - t1) % p)


def f2_pow(x, e, p):
    out = (mpz(1), mpz(0))
    base = x
    while e:
        if e & 1:
            out = f2_mul(out, base, p)
        base = f2_mul(base, base, p)
        e >>= 1
    return out


def f2_inv(x, p):
    a, b = x
    n = gmpy2.invert((a * a + b * b) % p, p)
    return ((a * n) % p, (-b * n) % p)


def f2_sqrt(z, p):
    """Square root in Fp2 for p = 3 mod 4, or None."""
    a, b = z
    if b == 0:
        if gmpy2.powmod(a, (p - 1) // 2, p) <= 1:
            return (gmpy2.powmod(a, (p + 1) // 4, p), mpz(0))
        y = gmpy2.powmod((-a) % p, (p + 1) // 4, p)
        return (mpz(0), y)
    n = (a * a + b * b) % p
    s = gmpy2.powmod(n, (p + 1) // 4, p)
    if (s * s) % p != n:
        return None
    inv2 = gmpy2.invert(mpz(2), p)
    t = ((a + s) * inv2) % p
    x0 = gmpy2.powmod(t, (p + 1) // 4, p)
    if (x0 * x0) % p != t:
        t = ((a - s) * inv2) % p
        x0 = gmpy2.powmod(t, (p + 1) // 4, p)
        if (x0 * x0) % p != t:
            return None
    x1 = (b * gmpy2.invert(2 * x0 % p, p)) % p
    cand = (x0, x1)
    return cand if f2_mul(cand, cand, p) == (a % p, b % p) else None


# --- affine curve ops over Fp2 (None = infinity) ----------------------------

def tw_add(P, Q, bb, p):
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1[0] + y2[0]) % p == 0 and (y1[1] + y2[1]) % p == 0:
            return None
        sq = f2_mul(x1, x1, p)
        num = (3 * sq[0] % p, 3 * sq[1] % p)
        lam = f2_mul(num, f2_inv((2 * y1[0] % p, 2 * y1[1] % p), p), p)
    else:
        dy = ((y2[0] - y1[0]) % p, (y2[1] - y1[1]) % p)
        dx = ((x2[0] - x1[0]) % p, (x2[1] - x1[1]) % p)
        lam = f2_mul(dy, f2_inv(dx, p), p)
    x3 = f2_mul(lam, lam, p)
    x3 = ((x3[0] - x1[0] - x2[0]) % p, (x3[1] - x1[1] - x2[1]) % p)
    t = ((x1[0] - x3[0]) % p, (x1[1] - x3[1]) % p)
    y3 = f2_mul(lam, t, p)
    y3 = ((y3[0] - y1[0]) % p, (y3[1] - y1[1]) % p)
    return (x3, y3)


def tw_mul(k, P, bb, p):
    out = None
    add = P
    while k:
        if k & 1:
            out = tw_add(out, add, bb, p)
        add = tw_add(add, add, bb, p)
        k >>= 1
    return out


def tw_point(bb, p, seed):
    """Sample a point on y^2 = x^3 + bb by x-increment from seed."""
    x0 = mpz(seed)
    while True:
        x = (x0, mpz(1))
        x3 = f2_mul(f2_mul(x, x, p), x, p)
        rhs = ((x3[0] + bb[0]) % p, (x3[1] + bb[1]) % p)
        y = f2_sqrt(rhs, p)
        if y is not None:
            return (x, y)
        x0 += 1


# --- per-curve derivation ---------------------------------------------------

def examine(u, b, name):
    u = mpz(u)
    r = u ** 4 - u ** 2 + 1
    num = (u - 1) ** 2 * r
    assert num % 3 == 0, "3 must divide (u-1)^2 r"
    p = num // 3 + u
    print(f"== {name}:  u = {hex(u)}  ({u.bit_length()} bits)")
    print(f"   p bits = {p.bit_length()}   r bits = {r.bit_length()}")
    assert gmpy2.is_prime(p), "p not prime"
    assert gmpy2.is_prime(r), "r not prime"
    assert p % 4 == 3, "need p = 3 mod 4 for Fp2 = Fp[i]"
    assert p % 6 == 1, "need p = 1 mod 6 for sextic twist"

    t = u + 1
    h1 = (u - 1) ** 2 // 3
    assert p + 1 - t == h1 * r, "G1 cofactor formula"

    # tower checks for xi = 1 + i
    xi = (mpz(1), mpz(1))
    p2 = p * p
    assert f2_pow(xi, (p2 - 1) // 2, p) != (mpz(1), mpz(0)), "xi is a square"
    assert (p2 - 1) % 3 == 0
    assert f2_pow(xi, (p2 - 1) // 3, p) != (mpz(1), mpz(0)), "xi is a cube"

    # twist order: t2 = trace of E(Fp2); 4*p^2 - t2^2 = 3*f^2
    t2 = t * t - 2 * p
    f2v = (4 * p2 - t2 * t2) // 3
    f = gmpy2.isqrt(f2v)
    assert f * f == f2v, "CM equation failed"
    candidates = [p2 + 1 - (s1 * t2 + s2 * 3 * f) // 2
                  for s1 in (1, -1) for s2 in (1, -1)]

    found = None
    for kind, bb in (("M", f2_mul((mpz(b), mpz(0)), xi, p)),
                     ("D", f2_mul((mpz(b), mpz(0)), f2_inv(xi, p), p))):
        for n in candidates:
            if n % r != 0:
                continue
            ok = all(tw_mul(n, tw_point(bb, p, 7 + s), bb, p) is None
                     for s in range(3))
            if ok:
                found = (kind, bb, n)
                break
        if found:
            break
    assert found, "no sextic twist of order divisible by r"
    kind, bb, n = found
    h2 = n // r
    P = tw_point(bb, p, 13)
    G = tw_mul(h2, P, bb, p)
    assert G is not None and tw_mul(r, G, bb, p) is None, "cofactor clearing"
    print(f"   twist = {kind}-type   (b' = b*xi if M, b/xi if D)")
    print(f"   h2 = {hex(h2)}")

    # final exponentiation decomposition
    assert (p ** 4 - p ** 2 + 1) % r == 0
    hard = (p ** 4 - p ** 2 + 1) // r
    chain = (u - 1) ** 2 * (u + p) * (u ** 2 + p ** 2 - 1) + 3
    assert chain == 3 * hard, "final-exp chain identity failed"
    print("   final-exp chain identity verified")
    return dict(name=name, u=u, b=b, p=p, r=r, h1=h1, h2=h2, twist=kind)


def search_192():
    """Find a low-weight u of ~107 bits giving a valid BLS12 parameter set."""
    base = 107
    for w in range(2, 5):
        for signs in itertools.product((1, -1), repeat=w):
            for exps in itertools.combinations(range(4, base - 2), w - 1):
                for top_sign in (1, -1):
                    u = top_sign * (mpz(1) << base)
                    for s, e in zip(signs, exps):
                        u += s * (mpz(1) << e)
                    if (u - 1) % 3 != 0:
                        continue
                    r = u ** 4 - u ** 2 + 1
                    if not gmpy2.is_prime(r):
                        continue
                    p = (u - 1) ** 2 * r // 3 + u
                    if p % 4 != 3 or p % 6 != 1:
                        continue
                    if not gmpy2.is_prime(p):
                        continue
                    try:
                        return examine(u, 4, "bls12-192level")
                    except AssertionError:
                        continue
    raise SystemExit("search failed")


def main():
    examine(-mpz(0xD201000000010000), 4, "bls12-381")
    info = search_192()
    print()
    print("paste into params.py:")
    print(f"U_192 = {hex(info['u'])}")
    print(f"B_192 = {info['b']}")
    print(f"TWIST_192 = {info['twist']!r}")


if __name__ == "__main__":
    main()
