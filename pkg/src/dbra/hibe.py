"""Hierarchical identity-based KEM with constant-size headers and revocation.

Construction sketch (all elements mirrored two-slot values, so the algebra
reads like a symmetric group):

    setup:    g1 = g^alpha, random g2, g3, h_1..h_l; master secret g2^alpha
    key(id):  (g2^alpha * (h_1^I1 ... h_k^Ik * g3)^r,  g^r,  h_{k+1}^r .. h_l^r)
    encap:    K = E(g1, g2)^s; header = (omega = 1,  g^s,  (h^id * g3)^s)
    decap:    K = omega * E(c_s, a0) / E(a1, c_id)

A key for a prefix of the header identity extends a0 with its delegation
components before decapsulating.  Headers carry only their depth, not the
identity, so the extension assumes component value 1 per level; distance
identities in this package are exactly the unary strings 1^d, which makes
prefix decapsulation total on the intended domain.

Revocation rotates alpha by a fresh beta: the public key, master key, every
still-valid key and every still-valid header get one multiplicative update
and move to the next epoch.  The header's omega starts as the identity and
is the revocation carrier: each epoch multiplies in E(c_s, g2^-beta) so
that refreshed keys keep recovering the original session.  Nothing else in
the header moves, the enclosing ciphertext bytes outside the header never
change, and the work per header is one pairing regardless of depth.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Optional, Tuple

from . import wire
from .errors import DecodeError, DepthError, EpochMismatch
from .groups import (
    LEFT,
    RIGHT,
    GroupContext,
    Scalar,
    SourceElement,
    TargetElement,
    pair,
    pair_product,
)


def _check_identity(ctx: GroupContext, identity, max_depth: int,
                    allow_empty: bool = False) -> Tuple[Scalar, ...]:
    parts = tuple(c if isinstance(c, Scalar) else ctx.scalar(c) for c in identity)
    if not parts and not allow_empty:
        raise DepthError("identity must have at least one component")
    if len(parts) > max_depth:
        raise DepthError("identity exceeds max depth %d" % max_depth)
    if any(c.value == 0 for c in parts):
        raise DepthError("identity components must be nonzero")
    return parts


@dataclass(frozen=True)
class HibePublicKey:
    ctx: GroupContext
    max_depth: int
    g: SourceElement
    g1: SourceElement
    g2: SourceElement
    g3: SourceElement
    h: Tuple[SourceElement, ...]
    epoch: int = 0

    @cached_property
    def _gt12(self) -> TargetElement:
        return pair(self.g1, self.g2)

    def id_hash(self, identity: Tuple[Scalar, ...]) -> SourceElement:
        """h_1^I1 * ... * h_k^Ik * g3."""
        acc = self.g3
        for c, h in zip(identity, self.h):
            acc = acc.mul(h.exp(c))
        return acc


@dataclass(frozen=True)
class HibeMasterKey:
    params: HibePublicKey
    alpha: Scalar
    master: SourceElement
    epoch: int = 0


@dataclass(frozen=True)
class HibeKey:
    params: HibePublicKey
    identity: Tuple[Scalar, ...]
    a0: SourceElement
    a1: SourceElement
    b: Tuple[SourceElement, ...]  # delegation components for levels k+1..l
    epoch: int = 0

    @property
    def depth(self) -> int:
        return len(self.identity)


@dataclass(frozen=True)
class HibeHeader:
    omega: TargetElement
    c_s: SourceElement
    c_id: SourceElement
    depth: int
    epoch: int = 0


@dataclass(frozen=True)
class HibeRevocation:
    beta_blind_g: SourceElement
    beta_blind_g2: SourceElement
    epoch: int


@dataclass(frozen=True)
class HibeRevokeResult:
    pk: HibePublicKey
    msk: HibeMasterKey
    headers: Tuple[HibeHeader, ...]
    keys: Tuple[HibeKey, ...]
    update: HibeRevocation


# --- algorithms -------------------------------------------------------------

def setup(ctx: GroupContext, max_depth: int):
    if max_depth < 1:
        raise DepthError("max depth must be positive")
    g = ctx.generator
    alpha = ctx.random_scalar()
    g1 = g.exp(alpha)
    g2 = g.exp(ctx.random_scalar())
    g3 = g.exp(ctx.random_scalar())
    h = tuple(g.exp(ctx.random_scalar()) for _ in range(max_depth))
    pk = HibePublicKey(ctx, max_depth, g, g1, g2, g3, h)
    msk = HibeMasterKey(pk, alpha, g2.exp(alpha))
    return pk, msk


def _fresh_key(msk: HibeMasterKey, identity: Tuple[Scalar, ...]) -> HibeKey:
    pk = msk.params
    r = pk.ctx.random_scalar()
    a0 = msk.master.mul(pk.id_hash(identity).exp(r))
    a1 = pk.g.exp(r)
    b = tuple(pk.h[j].exp(r) for j in range(len(identity), pk.max_depth))
    return HibeKey(pk, identity, a0, a1, b, msk.epoch)


def derive(msk: HibeMasterKey, identity) -> HibeKey:
    parts = _check_identity(msk.params.ctx, identity, msk.params.max_depth)
    return _fresh_key(msk, parts)


def master_view(msk: HibeMasterKey) -> HibeKey:
    """Depth-0 key: decapsulates headers at every depth."""
    return _fresh_key(msk, ())


def delegate(key: HibeKey, extension) -> HibeKey:
    pk = key.params
    ext = _check_identity(pk.ctx, extension, pk.max_depth)
    child_id = key.identity + ext
    if len(child_id) > pk.max_depth:
        raise DepthError("delegation exceeds max depth %d" % pk.max_depth)
    k = key.depth
    a0 = key.a0
    for idx, c in enumerate(ext):
        a0 = a0.mul(key.b[idx].exp(c))
    # re-randomize so the child reveals nothing about the parent's randomness
    t = pk.ctx.random_scalar()
    a0 = a0.mul(pk.id_hash(child_id).exp(t))
    a1 = key.a1.mul(pk.g.exp(t))
    b = tuple(key.b[len(ext) + j].mul(pk.h[len(child_id) + j].exp(t))
              for j in range(pk.max_depth - len(child_id)))
    return HibeKey(pk, child_id, a0, a1, b, key.epoch)


def encap(pk: HibePublicKey, identity):
    """Fresh session key and a header bound to the identity; returns (K, hdr)."""
    ctx = pk.ctx
    parts = _check_identity(ctx, identity, pk.max_depth)
    s = ctx.random_scalar()
    session = pk._gt12.exp(s)
    omega = TargetElement.identity(ctx)
    c_s = pk.g.restrict(LEFT).exp(s)
    c_id = pk.id_hash(parts).restrict(RIGHT).exp(s)
    return session, HibeHeader(omega, c_s, c_id, len(parts), pk.epoch)


def decap(key: HibeKey, header: HibeHeader) -> TargetElement:
    """Recover the session key; garbage (not an error) on a non-prefix key.

    Header identities are the unary strings 1^depth, so levels beyond the
    key's depth extend a0 with the stored delegation components verbatim.
    """
    a0 = key.a0
    for j in range(key.depth, header.depth):
        idx = j - key.depth
        if idx >= len(key.b):
            break
        a0 = a0.mul(key.b[idx])
    quotient = pair_product([(header.c_s, a0),
                             (key.a1.inverse(), header.c_id)])
    return header.omega.mul(quotient)


def revoke(pk: HibePublicKey, msk: HibeMasterKey, headers, keys) -> HibeRevokeResult:
    """Rotate the master secret; refresh the given headers and keys in place.

    Anything left out of the batch stays bound to the old epoch and can no
    longer be decapsulated with refreshed material (and vice versa).
    """
    headers = tuple(headers)
    keys = tuple(keys)
    for obj in (msk,) + headers + keys:
        if obj.epoch != pk.epoch:
            raise EpochMismatch("revocation inputs span epochs")
    ctx = pk.ctx
    beta = ctx.random_scalar()
    blind_g = pk.g.exp(beta)
    blind_g2 = pk.g2.exp(beta)
    epoch = pk.epoch + 1

    new_pk = replace(pk, g1=pk.g1.mul(blind_g), epoch=epoch)
    new_msk = HibeMasterKey(new_pk, msk.alpha + beta,
                            msk.master.mul(blind_g2), epoch)
    unblind = blind_g2.inverse()
    new_headers = tuple(
        replace(h, omega=h.omega.mul(pair(h.c_s, unblind)), epoch=epoch)
        for h in headers)
    new_keys = tuple(
        HibeKey(new_pk, k.identity, k.a0.mul(blind_g2), k.a1, k.b, epoch)
        for k in keys)
    update = HibeRevocation(blind_g, blind_g2, epoch)
    return HibeRevokeResult(new_pk, new_msk, new_headers, new_keys, update)


# --- serialization ----------------------------------------------------------

def _u16(v: int) -> bytes:
    return struct.pack(">H", v)


def _read_u16(raw: bytes) -> int:
    if len(raw) != 2:
        raise DecodeError("bad integer field")
    return struct.unpack(">H", raw)[0]


def encode_public_key(pk: HibePublicKey) -> bytes:
    fields = [_u16(pk.max_depth), pk.g.encode(), pk.g1.encode(),
              pk.g2.encode(), pk.g3.encode()]
    fields.extend(h.encode() for h in pk.h)
    return wire.envelope(wire.TAG_HIBE_PK, pk.epoch, fields)


def decode_public_key(ctx: GroupContext, raw: bytes) -> HibePublicKey:
    _, epoch, fields = wire.open_envelope(raw, wire.TAG_HIBE_PK)
    if len(fields) < 5:
        raise DecodeError("truncated public key")
    max_depth = _read_u16(fields[0])
    if len(fields) != 5 + max_depth:
        raise DecodeError("public key field count mismatch")
    els = [SourceElement.decode(ctx, f) for f in fields[1:]]
    return HibePublicKey(ctx, max_depth, els[0], els[1], els[2], els[3],
                         tuple(els[4:]), epoch)


def encode_key(key: HibeKey) -> bytes:
    fields = [_u16(key.depth)]
    fields.extend(c.encode() for c in key.identity)
    fields.append(key.a0.encode())
    fields.append(key.a1.encode())
    fields.extend(b.encode() for b in key.b)
    return wire.envelope(wire.TAG_HIBE_KEY, key.epoch, fields)


def decode_key(pk: HibePublicKey, raw: bytes) -> HibeKey:
    _, epoch, fields = wire.open_envelope(raw, wire.TAG_HIBE_KEY)
    if not fields:
        raise DecodeError("truncated key")
    depth = _read_u16(fields[0])
    if len(fields) != 1 + depth + 2 + (pk.max_depth - depth):
        raise DecodeError("key field count mismatch")
    ctx = pk.ctx
    identity = tuple(Scalar.decode(ctx, f) for f in fields[1:1 + depth])
    a0 = SourceElement.decode(ctx, fields[1 + depth])
    a1 = SourceElement.decode(ctx, fields[2 + depth])
    b = tuple(SourceElement.decode(ctx, f) for f in fields[3 + depth:])
    return HibeKey(pk, identity, a0, a1, b, epoch)


def encode_header(header: HibeHeader) -> bytes:
    fields = [_u16(header.depth), header.omega.encode(),
              header.c_s.encode(), header.c_id.encode()]
    return wire.envelope(wire.TAG_HIBE_HEADER, header.epoch, fields)


def decode_header(ctx: GroupContext, raw: bytes) -> HibeHeader:
    _, epoch, fields = wire.open_envelope(raw, wire.TAG_HIBE_HEADER)
    if len(fields) != 4:
        raise DecodeError("header field count mismatch")
    return HibeHeader(TargetElement.decode(ctx, fields[1]),
                      SourceElement.decode(ctx, fields[2]),
                      SourceElement.decode(ctx, fields[3]),
                      _read_u16(fields[0]), epoch)
