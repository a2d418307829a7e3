"""Hidden-vector KEM over binary positions with wildcard keys.

The ciphertext header commits to a bit vector x without revealing it; a key
is derived for a pattern y over {0, 1, *}.  Decapsulation recovers the
session key exactly when every non-wildcard key position equals the
ciphertext bit.  On a mismatch it produces a uniformly wrong value rather
than an error, and the header's byte layout is identical for every x of the
same width, which is what the layers above lean on for attribute privacy.

Per position the master key holds four exponents (t, v, r, m); the header
splits its randomness s into (s - s_i, s_i) across the (T, V) pair when
x_i = 1 and across (R, M) when x_i = 0.  Key components carry additive
shares a_i of the master y on the side selected by the pattern bit, so the
pairing product telescopes to E(g, g)^(y s) only when all selected sides
line up.  An all-wildcard pattern has no shares; its key is the single
element g^y paired against c0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional, Tuple

from . import wire
from .errors import DecodeError, SchemaError
from .groups import (
    LEFT,
    GroupContext,
    Scalar,
    SourceElement,
    TargetElement,
    pair,
    pair_product,
)

WILDCARD = None


@dataclass(frozen=True)
class HvePublicKey:
    ctx: GroupContext
    width: int
    g: SourceElement
    y_gt: TargetElement
    slots: Tuple[Tuple[SourceElement, SourceElement, SourceElement, SourceElement], ...]


@dataclass(frozen=True)
class HveMasterKey:
    params: HvePublicKey
    y: Scalar
    exponents: Tuple[Tuple[Scalar, Scalar, Scalar, Scalar], ...]


@dataclass(frozen=True)
class HveKey:
    width: int
    pattern: Tuple[Optional[int], ...]
    components: Tuple[Tuple[int, SourceElement, SourceElement], ...]
    d0: Optional[SourceElement]  # set only for the all-wildcard pattern


@dataclass(frozen=True)
class HveHeader:
    c0: SourceElement
    positions: Tuple[Tuple[SourceElement, SourceElement], ...]

    @property
    def width(self) -> int:
        return len(self.positions)


def _check_vector(x, width: int) -> Tuple[int, ...]:
    vec = tuple(int(b) for b in x)
    if len(vec) != width:
        raise SchemaError("vector width mismatch")
    if any(b not in (0, 1) for b in vec):
        raise SchemaError("vector positions must be bits")
    return vec


def _check_pattern(pattern, width: int) -> Tuple[Optional[int], ...]:
    pat = tuple(None if b is None else int(b) for b in pattern)
    if len(pat) != width:
        raise SchemaError("pattern width mismatch")
    if any(b not in (0, 1, None) for b in pat):
        raise SchemaError("pattern positions must be bits or wildcards")
    return pat


# --- algorithms -------------------------------------------------------------

def setup(ctx: GroupContext, width: int):
    if width < 1:
        raise SchemaError("width must be positive")
    g = ctx.generator
    y = ctx.random_scalar()
    exps = tuple(tuple(ctx.random_scalar() for _ in range(4)) for _ in range(width))
    slots = tuple(tuple(g.exp(e) for e in quad) for quad in exps)
    pk = HvePublicKey(ctx, width, g, ctx.gt_generator.exp(y), slots)
    return pk, HveMasterKey(pk, y, exps)


def derive(msk: HveMasterKey, pattern) -> HveKey:
    """Key for a pattern over {0, 1, *}; fresh share split per call."""
    pk = msk.params
    ctx = pk.ctx
    pat = _check_pattern(pattern, pk.width)
    selected = [i for i, b in enumerate(pat) if b is not None]
    if not selected:
        return HveKey(pk.width, pat, (), pk.g.exp(msk.y))
    shares = {}
    acc = ctx.scalar(0)
    for i in selected[:-1]:
        shares[i] = ctx.random_scalar()
        acc = acc + shares[i]
    shares[selected[-1]] = msk.y - acc
    comps = []
    for i in selected:
        t, v, r, m = msk.exponents[i]
        first, second = (t, v) if pat[i] == 1 else (r, m)
        a = shares[i]
        comps.append((i,
                      pk.g.exp(a * first.inverse()),
                      pk.g.exp(a * second.inverse())))
    return HveKey(pk.width, pat, tuple(comps), None)


def encap(pk: HvePublicKey, x):
    """Session key and header hiding the bit vector x; returns (K, hdr)."""
    ctx = pk.ctx
    vec = _check_vector(x, pk.width)
    s = ctx.random_scalar()
    session = pk.y_gt.exp(s)
    c0 = pk.g.restrict(LEFT).exp(s)
    positions = []
    for i, bit in enumerate(vec):
        t_el, v_el, r_el, m_el = pk.slots[i]
        first, second = (t_el, v_el) if bit == 1 else (r_el, m_el)
        s_i = ctx.random_scalar()
        positions.append((first.restrict(LEFT).exp(s - s_i),
                          second.restrict(LEFT).exp(s_i)))
    return session, HveHeader(c0, tuple(positions))


def decap(key: HveKey, header: HveHeader) -> TargetElement:
    """Recover the session key; uniformly wrong on any pattern mismatch."""
    if key.width != header.width:
        raise SchemaError("key and header width differ")
    if key.d0 is not None:
        return pair(header.c0, key.d0)
    terms = []
    for i, first, second in key.components:
        x_el, w_el = header.positions[i]
        terms.append((x_el, first))
        terms.append((w_el, second))
    return pair_product(terms)


# --- serialization ----------------------------------------------------------

def _u16(v: int) -> bytes:
    return struct.pack(">H", v)


def _read_u16(raw: bytes) -> int:
    if len(raw) != 2:
        raise DecodeError("bad integer field")
    return struct.unpack(">H", raw)[0]


def encode_public_key(pk: HvePublicKey) -> bytes:
    fields = [_u16(pk.width), pk.g.encode(), pk.y_gt.encode()]
    for quad in pk.slots:
        fields.extend(e.encode() for e in quad)
    return wire.envelope(wire.TAG_HVE_PK, 0, fields)


def decode_public_key(ctx: GroupContext, raw: bytes) -> HvePublicKey:
    _, _, fields = wire.open_envelope(raw, wire.TAG_HVE_PK)
    if len(fields) < 3:
        raise DecodeError("truncated public key")
    width = _read_u16(fields[0])
    if len(fields) != 3 + 4 * width:
        raise DecodeError("public key field count mismatch")
    g = SourceElement.decode(ctx, fields[1])
    y_gt = TargetElement.decode(ctx, fields[2])
    els = [SourceElement.decode(ctx, f) for f in fields[3:]]
    slots = tuple(tuple(els[4 * i:4 * i + 4]) for i in range(width))
    return HvePublicKey(ctx, width, g, y_gt, slots)


_PAT_BYTE = {0: 0, 1: 1, None: 2}
_BYTE_PAT = {0: 0, 1: 1, 2: None}


def encode_key(key: HveKey) -> bytes:
    fields = [bytes(_PAT_BYTE[b] for b in key.pattern),
              key.d0.encode() if key.d0 is not None else b""]
    for _, first, second in key.components:
        fields.append(first.encode())
        fields.append(second.encode())
    return wire.envelope(wire.TAG_HVE_KEY, 0, fields)


def decode_key(ctx: GroupContext, raw: bytes) -> HveKey:
    _, _, fields = wire.open_envelope(raw, wire.TAG_HVE_KEY)
    if len(fields) < 2:
        raise DecodeError("truncated key")
    try:
        pattern = tuple(_BYTE_PAT[b] for b in fields[0])
    except KeyError:
        raise DecodeError("bad pattern byte") from None
    selected = [i for i, b in enumerate(pattern) if b is not None]
    d0 = SourceElement.decode(ctx, fields[1]) if fields[1] else None
    els = [SourceElement.decode(ctx, f) for f in fields[2:]]
    if len(els) != 2 * len(selected):
        raise DecodeError("key component count mismatch")
    if selected and d0 is not None:
        raise DecodeError("unexpected master component")
    if not selected and d0 is None:
        raise DecodeError("missing master component")
    comps = tuple((i, els[2 * k], els[2 * k + 1]) for k, i in enumerate(selected))
    return HveKey(len(pattern), pattern, comps, d0)


def encode_header(header: HveHeader) -> bytes:
    fields = [header.c0.encode()]
    for x_el, w_el in header.positions:
        fields.append(x_el.encode())
        fields.append(w_el.encode())
    return wire.envelope(wire.TAG_HVE_HEADER, 0, fields)


def decode_header(ctx: GroupContext, raw: bytes) -> HveHeader:
    _, _, fields = wire.open_envelope(raw, wire.TAG_HVE_HEADER)
    if not fields or len(fields) % 2 != 1:
        raise DecodeError("header field count mismatch")
    c0 = SourceElement.decode(ctx, fields[0])
    els = [SourceElement.decode(ctx, f) for f in fields[1:]]
    positions = tuple((els[2 * i], els[2 * i + 1]) for i in range(len(els) // 2))
    return HveHeader(c0, positions)


def master_fields(msk: HveMasterKey) -> list:
    """Secret exponents as envelope fields (for private-state persistence)."""
    fields = [msk.y.encode()]
    for quad in msk.exponents:
        fields.extend(s.encode() for s in quad)
    return fields


def master_from_fields(pk: HvePublicKey, fields) -> HveMasterKey:
    ctx = pk.ctx
    if len(fields) != 1 + 4 * pk.width:
        raise DecodeError("master key field count mismatch")
    y = Scalar.decode(ctx, fields[0])
    scalars = [Scalar.decode(ctx, f) for f in fields[1:]]
    exps = tuple(tuple(scalars[4 * i:4 * i + 4]) for i in range(pk.width))
    return HveMasterKey(pk, y, exps)
