"""Brute-force truth tables for the match law, written from the definition.

These oracles deliberately avoid every other module's logic: a match is
recomputed position by position from the plain-language rule so that the
cryptographic layers can be validated against an independent source of
truth.  Table sizes are capped because the tables are meant for exhaustive
testing, not production evaluation.
"""

from __future__ import annotations

from itertools import product
from typing import Dict, Optional, Tuple

from .core import AttributeSchema

SPACE_CAP = 10 ** 5


def brute_match(attributes, distance_bound: int, pattern,
                key_distance: int) -> bool:
    """The match rule, spelled out: every non-wildcard position must agree
    and the key's distance may not exceed the ciphertext's bound."""
    if len(attributes) != len(pattern):
        return False
    for value, wanted in zip(attributes, pattern):
        if wanted is not None and wanted != value:
            return False
    return key_distance <= distance_bound


def brute_oracle(schema: AttributeSchema, d_max: Optional[int] = None
                 ) -> Dict[tuple, bool]:
    """Full truth table over (attributes, d_ct, pattern, d_key)."""
    if d_max is None:
        d_max = schema.d_max
    domains = [domain for _, domain in schema.dimensions]
    n_vectors = 1
    n_patterns = 1
    for domain in domains:
        n_vectors *= len(domain)
        n_patterns *= len(domain) + 1
    if n_vectors * d_max * n_patterns * d_max > SPACE_CAP:
        raise ValueError("truth table exceeds %d rows" % SPACE_CAP)
    table = {}
    for attrs in product(*domains):
        for d_ct in range(1, d_max + 1):
            for pattern in product(*[(None,) + tuple(d) for d in domains]):
                for d_key in range(1, d_max + 1):
                    table[(attrs, d_ct, pattern, d_key)] = brute_match(
                        attrs, d_ct, pattern, d_key)
    return table


def binary_vectors(width: int) -> Tuple[Tuple[int, ...], ...]:
    return tuple(product((0, 1), repeat=width))


def binary_patterns(width: int) -> Tuple[Tuple[Optional[int], ...], ...]:
    return tuple(product((0, 1, None), repeat=width))


def hve_truth(width: int) -> Dict[tuple, bool]:
    """Wildcard-match truth table over binary vectors of one width."""
    if (2 ** width) * (3 ** width) > SPACE_CAP:
        raise ValueError("truth table exceeds %d rows" % SPACE_CAP)
    return {(x, y): all(p is None or p == v for v, p in zip(x, y))
            for x in binary_vectors(width) for y in binary_patterns(width)}
