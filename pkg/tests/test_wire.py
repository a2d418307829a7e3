"""Envelope and text map codec contracts."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dbra import wire
from dbra.errors import DecodeError


def test_envelope_roundtrip():
    fields = [b"", b"a", b"\x00" * 300]
    raw = wire.envelope(wire.TAG_HVE_PK, 7, fields)
    tag, epoch, got = wire.open_envelope(raw)
    assert (tag, epoch, got) == (wire.TAG_HVE_PK, 7, fields)
    assert wire.peek_tag(raw) == wire.TAG_HVE_PK


def test_open_envelope_checks_expected_tag():
    raw = wire.envelope(wire.TAG_HVE_PK, 0, [b"x"])
    wire.open_envelope(raw, expect_tag=wire.TAG_HVE_PK)
    with pytest.raises(DecodeError):
        wire.open_envelope(raw, expect_tag=wire.TAG_HIBE_PK)


def test_envelope_rejects_bad_magic_and_version():
    raw = wire.envelope(wire.TAG_HVE_PK, 0, [])
    with pytest.raises(DecodeError):
        wire.open_envelope(b"XBRA" + raw[4:])
    with pytest.raises(DecodeError):
        wire.open_envelope(raw[:4] + b"\x99" + raw[5:])
    with pytest.raises(DecodeError):
        wire.open_envelope(raw[:9])


def test_envelope_epoch_range():
    wire.envelope(wire.TAG_HIBE_KEY, (1 << 32) - 1, [])
    with pytest.raises(ValueError):
        wire.envelope(wire.TAG_HIBE_KEY, 1 << 32, [])
    with pytest.raises(ValueError):
        wire.envelope(wire.TAG_HIBE_KEY, -1, [])


def test_field_length_cap():
    wire.pack_fields([b"x" * 0xFFFF])
    with pytest.raises(ValueError):
        wire.pack_fields([b"x" * 0x10000])


def test_truncated_fields_detected():
    raw = wire.pack_fields([b"abc", b"defg"])
    with pytest.raises(DecodeError):
        wire.unpack_fields(raw[:-1])
    with pytest.raises(DecodeError):
        wire.unpack_fields(b"\x00")


@given(st.lists(st.binary(max_size=2000), max_size=8))
def test_fields_roundtrip(fields):
    assert wire.unpack_fields(wire.pack_fields(fields)) == fields


def test_textmap_sorted_and_escaped():
    text = wire.dump_textmap({"b": "x\ny", "a": "back\\slash"})
    assert text == "a=back\\\\slash\nb=x\\ny\n"
    assert wire.load_textmap(text) == {"a": "back\\slash", "b": "x\ny"}


def test_textmap_rejects_bad_keys():
    for key in ("", "a=b", "a\nb", "a\\b"):
        with pytest.raises(ValueError):
            wire.dump_textmap({key: "v"})


def test_textmap_load_errors():
    with pytest.raises(DecodeError):
        wire.load_textmap("no separator here")
    with pytest.raises(DecodeError):
        wire.load_textmap("a=1\na=2")
    with pytest.raises(DecodeError):
        wire.load_textmap("a=bad\\escape")


def test_textmap_empty():
    assert wire.dump_textmap({}) == ""
    assert wire.load_textmap("") == {}
    assert wire.load_textmap("\n  \n") == {}


@given(st.dictionaries(
    st.text(st.characters(blacklist_characters="=\n\\", blacklist_categories=("Cs",)),
            min_size=1, max_size=12),
    st.text(st.characters(blacklist_categories=("Cs",)), max_size=40),
    max_size=6))
def test_textmap_roundtrip(mapping):
    assert wire.load_textmap(wire.dump_textmap(mapping)) == mapping
