"""The brute-force oracles themselves, pinned against hand-computed rows.

Everything downstream is validated against these tables, so the tables get
their own frozen fixtures here.
"""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dbra.core import AttributeSchema
from dbra.oracle import (binary_patterns, binary_vectors, brute_match,
                         brute_oracle, hve_truth)


def test_match_rule_hand_rows():
    # one binary dimension, d_max 1: the only grants are exact-or-wildcard
    assert brute_match((0,), 1, (None,), 1) is True
    assert brute_match((0,), 1, (0,), 1) is True
    assert brute_match((0,), 1, (1,), 1) is False
    assert brute_match((1,), 1, (1,), 1) is True
    # distance gate
    assert brute_match((1,), 1, (1,), 2) is False
    assert brute_match((1,), 2, (1,), 2) is True
    # width mismatch never matches
    assert brute_match((1, 0), 1, (1,), 1) is False


def test_single_binary_dimension_table():
    schema = AttributeSchema((("bit", (0, 1)),), d_max=1)
    table = brute_oracle(schema)
    # 2 vectors x 1 bound x 3 patterns x 1 key distance
    assert len(table) == 6
    assert sum(table.values()) == 4
    truth = {
        ((0,), 1, (None,), 1): True,
        ((0,), 1, (0,), 1): True,
        ((0,), 1, (1,), 1): False,
        ((1,), 1, (None,), 1): True,
        ((1,), 1, (0,), 1): False,
        ((1,), 1, (1,), 1): True,
    }
    assert table == truth


def test_distance_is_a_pure_threshold():
    schema = AttributeSchema((("bit", (0, 1)),), d_max=3)
    table = brute_oracle(schema)
    for (attrs, d_ct, pattern, d_key), ok in table.items():
        vector_ok = table[(attrs, max(d_ct, d_key), pattern, 1)]
        assert ok == (vector_ok and d_key <= d_ct)


def test_wildcard_only_pattern_matches_everything():
    schema = AttributeSchema((("a", (0, 1)), ("b", (0, "y", "z"))), d_max=2)
    table = brute_oracle(schema)
    for (attrs, d_ct, pattern, d_key), ok in table.items():
        if pattern == (None, None):
            assert ok == (d_key <= d_ct)


def test_space_cap_enforced():
    wide = AttributeSchema(tuple(("d%d" % i, (0, 1)) for i in range(9)), d_max=4)
    with pytest.raises(ValueError):
        brute_oracle(wide)
    with pytest.raises(ValueError):
        hve_truth(11)


def test_relabeling_domains_preserves_table_shape():
    """The oracle treats attribute values as opaque labels."""
    s1 = AttributeSchema((("k", (0, "b")),), d_max=2)
    s2 = AttributeSchema((("k", (0, 20)),), d_max=2)
    t1, t2 = brute_oracle(s1), brute_oracle(s2)
    rename = {0: 0, "b": 20, None: None}
    for (attrs, d_ct, pattern, d_key), ok in t1.items():
        key2 = (tuple(rename[v] for v in attrs), d_ct,
                tuple(rename[v] for v in pattern), d_key)
        assert t2[key2] == ok


def test_hve_truth_small_widths():
    t1 = hve_truth(1)
    assert t1 == {
        ((0,), (0,)): True, ((0,), (1,)): False, ((0,), (None,)): True,
        ((1,), (0,)): False, ((1,), (1,)): True, ((1,), (None,)): True,
    }
    t2 = hve_truth(2)
    assert len(t2) == 4 * 9
    # count check: each vector matches patterns whose fixed part agrees => 2^w
    for x in binary_vectors(2):
        assert sum(t2[(x, y)] for y in binary_patterns(2)) == 4


@given(st.integers(1, 6), st.data())
def test_hve_truth_matches_rule(width, data):
    x = data.draw(st.tuples(*[st.sampled_from((0, 1))] * width))
    y = data.draw(st.tuples(*[st.sampled_from((0, 1, None))] * width))
    expected = all(p is None or p == v for v, p in zip(x, y))
    assert hve_truth(width)[(x, y)] == expected
