"""Binary envelope and canonical text map codecs.

Every serialized crypto object shares one envelope: magic, format version,
a type tag, a 32-bit big-endian epoch, then the object's fields in
declaration order, each behind a 16-bit big-endian length.  Objects the
revocation procedure never touches (the vector-matching layer) carry epoch 0.

Text maps are the canonical line format used for repository manifests,
metadata, and machine-readable CLI output: sorted keys, one "key=value"
per line, backslash escapes for newlines and backslashes.
"""

from __future__ import annotations

import struct

from .errors import DecodeError

MAGIC = b"DBRA"
VERSION = 1

TAG_HIBE_PK = 0x02
TAG_HIBE_KEY = 0x03
TAG_HIBE_HEADER = 0x04
TAG_HVE_PK = 0x05
TAG_HVE_KEY = 0x06
TAG_HVE_HEADER = 0x07
TAG_DBRA_CIPHERTEXT = 0x08
TAG_DBRA_KEY = 0x09
TAG_KEY_MESSAGE = 0x0A
# composite/private objects, outside the core tag set
TAG_DBRA_PK = 0x0B
TAG_DBRA_MSK = 0x0C
TAG_NODE_STATE = 0x0E

_MAX_FIELD = 0xFFFF


def pack_fields(fields) -> bytes:
    out = []
    for f in fields:
        if len(f) > _MAX_FIELD:
            raise ValueError("field exceeds 16-bit length prefix")
        out.append(struct.pack(">H", len(f)))
        out.append(bytes(f))
    return b"".join(out)


def unpack_fields(raw: bytes) -> list:
    fields = []
    off = 0
    n = len(raw)
    while off < n:
        if off + 2 > n:
            raise DecodeError("truncated field length")
        (length,) = struct.unpack_from(">H", raw, off)
        off += 2
        if off + length > n:
            raise DecodeError("truncated field body")
        fields.append(raw[off:off + length])
        off += length
    return fields


def envelope(tag: int, epoch: int, fields) -> bytes:
    if not 0 <= epoch < 1 << 32:
        raise ValueError("epoch out of range")
    return MAGIC + bytes([VERSION, tag]) + struct.pack(">I", epoch) + pack_fields(fields)


def open_envelope(raw: bytes, expect_tag: int | None = None):
    """Return (tag, epoch, fields); validates magic and version."""
    if len(raw) < 10 or raw[:4] != MAGIC:
        raise DecodeError("bad envelope magic")
    if raw[4] != VERSION:
        raise DecodeError("unsupported envelope version")
    tag = raw[5]
    (epoch,) = struct.unpack_from(">I", raw, 6)
    if expect_tag is not None and tag != expect_tag:
        raise DecodeError("unexpected object tag 0x%02x" % tag)
    return tag, epoch, unpack_fields(raw[10:])


def peek_tag(raw: bytes) -> int:
    if len(raw) < 10 or raw[:4] != MAGIC or raw[4] != VERSION:
        raise DecodeError("bad envelope magic")
    return raw[5]


# --- canonical text maps -----------------------------------------------------

def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace("\n", "\\n")


def _unescape(value: str) -> str:
    out = []
    it = iter(value)
    for ch in it:
        if ch != "\\":
            out.append(ch)
            continue
        nxt = next(it, None)
        if nxt == "n":
            out.append("\n")
        elif nxt == "\\":
            out.append("\\")
        else:
            raise DecodeError("bad escape in text map")
    return "".join(out)


def dump_textmap(mapping: dict) -> str:
    lines = []
    for key in sorted(mapping):
        if not key or any(c in key for c in "=\n\\"):
            raise ValueError("bad text map key: %r" % key)
        lines.append("%s=%s" % (key, _escape(str(mapping[key]))))
    return "\n".join(lines) + ("\n" if lines else "")


def load_textmap(text: str) -> dict:
    out = {}
    # split on "\n" only: every other character is value payload
    for ln, line in enumerate(text.split("\n"), 1):
        if not line.strip():
            continue
        if "=" not in line:
            raise DecodeError("text map line %d has no separator" % ln)
        key, _, value = line.partition("=")
        if key in out:
            raise DecodeError("duplicate text map key %r" % key)
        out[key] = _unescape(value)
    return out
