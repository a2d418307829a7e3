"""Vector-matching KEM validated exhaustively against the plain truth table."""

import pytest

from dbra import hve
from dbra.errors import DecodeError, SchemaError
from dbra.oracle import binary_patterns, binary_vectors, hve_truth


@pytest.fixture(scope="module")
def keypair(ctx):
    return hve.setup(ctx, 2)


def test_exhaustive_width_two(ctx, keypair):
    """All 36 (vector, pattern) combinations agree with the truth table.

    A matching pattern must recover the session key; a mismatching one must
    recover something else (never an exception: failure is indistinguishable
    from success until the derived AEAD key is used).
    """
    pk, msk = keypair
    truth = hve_truth(2)
    keys = {y: hve.derive(msk, y) for y in binary_patterns(2)}
    for x in binary_vectors(2):
        session, header = hve.encap(pk, x)
        for y, key in keys.items():
            recovered = hve.decap(key, header)
            assert (recovered == session) == truth[(x, y)], (x, y)


def test_all_wildcard_key_shape_and_decap(keypair):
    pk, msk = keypair
    key = hve.derive(msk, (None, None))
    assert key.d0 is not None and key.components == ()
    session, header = hve.encap(pk, (1, 0))
    assert hve.decap(key, header) == session


def test_fresh_randomness_per_encap(keypair):
    pk, _ = keypair
    s1, h1 = hve.encap(pk, (0, 1))
    s2, h2 = hve.encap(pk, (0, 1))
    assert s1 != s2
    assert hve.encode_header(h1) != hve.encode_header(h2)


def test_key_share_split_is_fresh_but_equivalent(ctx, keypair):
    pk, msk = keypair
    # two selected positions: the additive split of y is freshly random
    k1 = hve.derive(msk, (1, 1))
    k2 = hve.derive(msk, (1, 1))
    assert hve.encode_key(k1) != hve.encode_key(k2)
    session, header = hve.encap(pk, (1, 1))
    assert hve.decap(k1, header) == session
    assert hve.decap(k2, header) == session


def test_header_layout_independent_of_vector(keypair):
    """Same width, same byte structure: the vector is not readable from
    lengths or element placement."""
    pk, _ = keypair
    encodings = [hve.encode_header(hve.encap(pk, x)[1])
                 for x in binary_vectors(2)]
    assert len({len(e) for e in encodings}) == 1


def test_input_validation(ctx, keypair):
    pk, msk = keypair
    with pytest.raises(SchemaError):
        hve.encap(pk, (0, 1, 0))
    with pytest.raises(SchemaError):
        hve.encap(pk, (0, 2))
    with pytest.raises(SchemaError):
        hve.derive(msk, (0,))
    with pytest.raises(SchemaError):
        hve.derive(msk, (0, 3))
    with pytest.raises(SchemaError):
        hve.setup(ctx, 0)
    key = hve.derive(msk, (0, None))
    other_pk, _ = hve.setup(ctx, 3)
    _, header3 = hve.encap(other_pk, (0, 1, 1))
    with pytest.raises(SchemaError):
        hve.decap(key, header3)


def test_public_key_codec(ctx, keypair):
    pk, _ = keypair
    raw = hve.encode_public_key(pk)
    back = hve.decode_public_key(ctx, raw)
    assert back.width == pk.width
    assert back.g == pk.g and back.y_gt == pk.y_gt
    assert back.slots == pk.slots
    with pytest.raises(DecodeError):
        hve.decode_public_key(ctx, raw[:-3])


def test_key_codec(ctx, keypair):
    pk, msk = keypair
    for pattern in ((0, None), (1, 0), (None, None)):
        key = hve.derive(msk, pattern)
        back = hve.decode_key(ctx, hve.encode_key(key))
        assert back == key
        session, header = hve.encap(pk, (1, 0))
        assert (hve.decap(back, header) == session) == \
            (hve.decap(key, header) == session)


def test_key_codec_rejects_inconsistent_components(ctx, keypair):
    _, msk = keypair
    from dbra import wire
    key = hve.derive(msk, (0, None))
    raw = hve.encode_key(key)
    _, _, fields = wire.open_envelope(raw)
    # drop one component: count no longer matches the pattern
    bad = wire.envelope(wire.TAG_HVE_KEY, 0, fields[:-1])
    with pytest.raises(DecodeError):
        hve.decode_key(ctx, bad)
    # d0 present alongside selected positions
    bad2 = wire.envelope(wire.TAG_HVE_KEY, 0,
                         [fields[0], fields[2], fields[2], fields[3]])
    with pytest.raises(DecodeError):
        hve.decode_key(ctx, bad2)


def test_header_codec(ctx, keypair):
    pk, msk = keypair
    session, header = hve.encap(pk, (1, 1))
    back = hve.decode_header(ctx, hve.encode_header(header))
    assert back == header
    key = hve.derive(msk, (1, None))
    assert hve.decap(key, back) == session
    with pytest.raises(DecodeError):
        hve.decode_header(ctx, hve.encode_header(header)[:10])


def test_master_persistence_roundtrip(ctx, keypair):
    pk, msk = keypair
    back = hve.master_from_fields(pk, hve.master_fields(msk))
    assert back == msk
    key = hve.derive(back, (1, 0))
    session, header = hve.encap(pk, (1, 0))
    assert hve.decap(key, header) == session
    with pytest.raises(DecodeError):
        hve.master_from_fields(pk, hve.master_fields(msk)[:-1])
