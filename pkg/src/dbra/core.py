"""Distance-bounded revokable attribute encryption.

A ciphertext is bound to a policy pair (x, d): an attribute vector over a
declared schema plus a maximum social distance.  A key carries a pattern y
(symbols or wildcards) and its own distance.  Decryption succeeds exactly
when every fixed pattern position equals the ciphertext symbol and the
key's distance does not exceed the ciphertext's bound.

Layering: the attribute vector is bit-encoded and sealed under the
hidden-vector KEM; that inner ciphertext plus the vector header are sealed
again under the hierarchical KEM at the unary identity 1^d.  The outer seal
deliberately does not authenticate the hierarchical header, because
revocation rewrites the header's blinding factor in place while leaving
every other ciphertext byte untouched.  Any failure anywhere in the stack
surfaces as the one constant AccessDenied value.

Symbols may be ints or strings; each dimension's domain must contain the
reserved symbol 0 meaning "no value".  On the wire symbols travel as domain
indexes, never as raw values.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

from . import hibe, hve, wire
from .errors import (
    AccessDenied,
    DbraError,
    DecodeError,
    DepthError,
    EpochMismatch,
    SchemaError,
)
from .groups import (
    GroupContext,
    Scalar,
    SymmetricKey,
    aead_open,
    aead_seal,
    derive_key,
)

Symbol = Union[int, str]

_HVE_LABEL = b"dbra/hve/v1"
_HIBE_LABEL = b"dbra/hibe/v1"
_NONCE = 12


# --- schema and bit encoding ------------------------------------------------

@dataclass(frozen=True)
class AttributeSchema:
    """Named dimensions with finite symbol domains, plus the distance cap."""

    dimensions: Tuple[Tuple[str, Tuple[Symbol, ...]], ...]
    d_max: int

    def __post_init__(self):
        object.__setattr__(self, "dimensions",
                           tuple((str(n), tuple(d)) for n, d in self.dimensions))
        names = [n for n, _ in self.dimensions]
        if not names:
            raise SchemaError("schema needs at least one dimension")
        if len(set(names)) != len(names):
            raise SchemaError("duplicate dimension names")
        for name, domain in self.dimensions:
            if len(domain) < 2:
                raise SchemaError("domain of %r needs at least two symbols" % name)
            if len(set(domain)) != len(domain):
                raise SchemaError("duplicate symbols in %r" % name)
            if 0 not in domain:
                raise SchemaError("domain of %r lacks the reserved symbol 0" % name)
        if self.d_max < 1:
            raise SchemaError("d_max must be at least 1")

    @property
    def width(self) -> int:
        return len(self.dimensions)

    def dim_bits(self, j: int) -> int:
        return max(1, math.ceil(math.log2(len(self.dimensions[j][1]))))

    @property
    def bit_width(self) -> int:
        return sum(self.dim_bits(j) for j in range(self.width))

    def symbol_index(self, j: int, symbol: Symbol) -> int:
        name, domain = self.dimensions[j]
        try:
            return domain.index(symbol)
        except ValueError:
            raise SchemaError("symbol %r not in domain of %r" % (symbol, name)) from None


def encode_attributes(schema: AttributeSchema, values) -> Tuple[int, ...]:
    """Big-endian index bits per dimension, concatenated."""
    values = tuple(values)
    if len(values) != schema.width:
        raise SchemaError("expected %d attribute values" % schema.width)
    bits = []
    for j, value in enumerate(values):
        idx = schema.symbol_index(j, value)
        n = schema.dim_bits(j)
        bits.extend((idx >> (n - 1 - k)) & 1 for k in range(n))
    return tuple(bits)


def encode_pattern(schema: AttributeSchema, pattern) -> Tuple[Optional[int], ...]:
    """Like encode_attributes; a None symbol becomes that many wildcard bits."""
    pattern = tuple(pattern)
    if len(pattern) != schema.width:
        raise SchemaError("expected %d pattern symbols" % schema.width)
    bits = []
    for j, symbol in enumerate(pattern):
        n = schema.dim_bits(j)
        if symbol is None:
            bits.extend([None] * n)
        else:
            idx = schema.symbol_index(j, symbol)
            bits.extend((idx >> (n - 1 - k)) & 1 for k in range(n))
    return tuple(bits)


# --- policy pairs, key patterns, the match law ------------------------------

@dataclass(frozen=True)
class PolicyPair:
    schema: AttributeSchema
    attributes: Tuple[Symbol, ...]
    distance: int

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        encode_attributes(self.schema, self.attributes)
        if not 1 <= self.distance <= self.schema.d_max:
            raise SchemaError("ciphertext distance outside 1..d_max")


@dataclass(frozen=True)
class KeyPattern:
    schema: AttributeSchema
    pattern: Tuple[Optional[Symbol], ...]
    distance: int

    def __post_init__(self):
        object.__setattr__(self, "pattern", tuple(self.pattern))
        encode_pattern(self.schema, self.pattern)
        if not 1 <= self.distance <= self.schema.d_max:
            raise SchemaError("key distance outside 1..d_max")


def match_oracle(pair: PolicyPair, kp: KeyPattern) -> bool:
    """Ground-truth decryption law, straight from the definitions."""
    if pair.schema != kp.schema:
        raise SchemaError("policy pair and key pattern use different schemas")
    vector_ok = all(p is None or p == x
                    for x, p in zip(pair.attributes, kp.pattern))
    return vector_ok and kp.distance <= pair.distance


# --- key material -----------------------------------------------------------

@dataclass(frozen=True)
class DbraPublicKey:
    ctx: GroupContext
    schema: AttributeSchema
    hve_pk: hve.HvePublicKey
    hibe_pk: hibe.HibePublicKey
    epoch: int = 0


@dataclass(frozen=True)
class DbraMasterKey:
    pk: DbraPublicKey
    hve_msk: hve.HveMasterKey
    hibe_msk: hibe.HibeMasterKey
    epoch: int = 0


@dataclass(frozen=True)
class DbraKey:
    schema: AttributeSchema
    pattern: KeyPattern
    hve_key: hve.HveKey
    hibe_key: hibe.HibeKey
    epoch: int = 0


@dataclass(frozen=True)
class DbraCiphertext:
    hibe_header: hibe.HibeHeader
    outer_nonce: bytes
    outer_blob: bytes
    epoch: int = 0


@dataclass(frozen=True)
class DbraRevokeResult:
    pk: DbraPublicKey
    msk: DbraMasterKey
    ciphertexts: Tuple[DbraCiphertext, ...]
    keys: Tuple[DbraKey, ...]


# --- algorithms -------------------------------------------------------------

def setup(ctx: GroupContext, schema: AttributeSchema):
    hve_pk, hve_msk = hve.setup(ctx, schema.bit_width)
    hibe_pk, hibe_msk = hibe.setup(ctx, schema.d_max)
    pk = DbraPublicKey(ctx, schema, hve_pk, hibe_pk)
    return pk, DbraMasterKey(pk, hve_msk, hibe_msk)


def encrypt(pk: DbraPublicKey, pair: PolicyPair, plaintext: bytes) -> DbraCiphertext:
    if pair.schema != pk.schema:
        raise SchemaError("policy pair schema differs from key schema")
    ctx = pk.ctx
    bits = encode_attributes(pk.schema, pair.attributes)
    k_inner, hve_header = hve.encap(pk.hve_pk, bits)
    inner_nonce = ctx.rng.random_bytes(_NONCE)
    inner = aead_seal(derive_key(k_inner, _HVE_LABEL), inner_nonce, bytes(plaintext))
    hdr_bytes = hve.encode_header(hve_header)
    payload = struct.pack(">I", len(hdr_bytes)) + hdr_bytes + inner_nonce + inner
    k_outer, hibe_header = hibe.encap(pk.hibe_pk, (1,) * pair.distance)
    outer_nonce = ctx.rng.random_bytes(_NONCE)
    outer = aead_seal(derive_key(k_outer, _HIBE_LABEL), outer_nonce, payload)
    return DbraCiphertext(hibe_header, outer_nonce, outer, pk.epoch)


def decrypt(key: DbraKey, ct: DbraCiphertext) -> bytes:
    """Plaintext on a full match; the uniform AccessDenied on anything else.

    There is no epoch or structure short-circuit: a stale key walks the
    whole decryption path and fails inside the outer seal like any other
    mismatch.
    """
    ctx = key.hibe_key.params.ctx
    try:
        k_outer = hibe.decap(key.hibe_key, ct.hibe_header)
        payload = aead_open(derive_key(k_outer, _HIBE_LABEL),
                            ct.outer_nonce, ct.outer_blob)
        if len(payload) < 4:
            raise DecodeError("short payload")
        (hdr_len,) = struct.unpack_from(">I", payload)
        if len(payload) < 4 + hdr_len + _NONCE:
            raise DecodeError("short payload")
        hve_header = hve.decode_header(ctx, payload[4:4 + hdr_len])
        inner_nonce = payload[4 + hdr_len:4 + hdr_len + _NONCE]
        inner = payload[4 + hdr_len + _NONCE:]
        k_inner = hve.decap(key.hve_key, hve_header)
        return aead_open(derive_key(k_inner, _HVE_LABEL), inner_nonce, inner)
    except DbraError:
        raise AccessDenied() from None


def derive(msk: DbraMasterKey, kp: KeyPattern) -> DbraKey:
    if kp.schema != msk.pk.schema:
        raise SchemaError("key pattern schema differs from master schema")
    bits = encode_pattern(msk.pk.schema, kp.pattern)
    hve_key = hve.derive(msk.hve_msk, bits)
    hibe_key = hibe.derive(msk.hibe_msk, (1,) * kp.distance)
    return DbraKey(msk.pk.schema, kp, hve_key, hibe_key, msk.epoch)


def delegate(key: DbraKey, extension: int) -> DbraKey:
    """Weaken a key by extension hops; the pattern itself is untouched."""
    if extension < 1:
        raise DepthError("extension must be at least 1")
    new_d = key.pattern.distance + extension
    if new_d > key.schema.d_max:
        raise DepthError("delegation beyond d_max")
    hibe_key = hibe.delegate(key.hibe_key, (1,) * extension)
    kp = replace(key.pattern, distance=new_d)
    return DbraKey(key.schema, kp, key.hve_key, hibe_key, key.epoch)


def revoke(pk: DbraPublicKey, msk: DbraMasterKey, ciphertexts, keys) -> DbraRevokeResult:
    """Advance one epoch: refresh the given ciphertexts and keys, strand the rest."""
    ciphertexts = tuple(ciphertexts)
    keys = tuple(keys)
    for obj in (msk,) + ciphertexts + keys:
        if obj.epoch != pk.epoch:
            raise EpochMismatch("revocation inputs span epochs")
    res = hibe.revoke(pk.hibe_pk, msk.hibe_msk,
                      [ct.hibe_header for ct in ciphertexts],
                      [k.hibe_key for k in keys])
    epoch = res.update.epoch
    new_pk = replace(pk, hibe_pk=res.pk, epoch=epoch)
    new_msk = DbraMasterKey(new_pk, msk.hve_msk, res.msk, epoch)
    new_cts = tuple(replace(ct, hibe_header=hdr, epoch=epoch)
                    for ct, hdr in zip(ciphertexts, res.headers))
    new_keys = tuple(DbraKey(k.schema, k.pattern, k.hve_key, hk, epoch)
                     for k, hk in zip(keys, res.keys))
    return DbraRevokeResult(new_pk, new_msk, new_cts, new_keys)


# --- serialization ----------------------------------------------------------

_WILD = 0xFFFF


def _schema_map(schema: AttributeSchema) -> dict:
    out = {"d_max": schema.d_max, "dims": len(schema.dimensions)}
    for j, (name, domain) in enumerate(schema.dimensions):
        out["dim.%d.name" % j] = name
        parts = []
        for sym in domain:
            if isinstance(sym, int):
                parts.append("i%d" % sym)
            else:
                if "," in sym:
                    raise SchemaError("symbol %r may not contain a comma" % sym)
                parts.append("s" + sym)
        out["dim.%d.domain" % j] = ",".join(parts)
    return out


def _schema_from_map(m: dict) -> AttributeSchema:
    try:
        d_max = int(m["d_max"])
        count = int(m["dims"])
        dims = []
        for j in range(count):
            name = m["dim.%d.name" % j]
            domain = []
            for part in m["dim.%d.domain" % j].split(","):
                if part.startswith("i"):
                    domain.append(int(part[1:]))
                elif part.startswith("s"):
                    domain.append(part[1:])
                else:
                    raise DecodeError("bad symbol encoding %r" % part)
            dims.append((name, tuple(domain)))
    except (KeyError, ValueError) as exc:
        raise DecodeError("bad schema map: %s" % exc) from None
    return AttributeSchema(tuple(dims), d_max)


def encode_schema(schema: AttributeSchema) -> bytes:
    return wire.dump_textmap(_schema_map(schema)).encode()


def decode_schema(raw: bytes) -> AttributeSchema:
    return _schema_from_map(wire.load_textmap(raw.decode()))


def encode_public_key(pk: DbraPublicKey) -> bytes:
    fields = [encode_schema(pk.schema),
              hve.encode_public_key(pk.hve_pk),
              hibe.encode_public_key(pk.hibe_pk)]
    return wire.envelope(wire.TAG_DBRA_PK, pk.epoch, fields)


def decode_public_key(ctx: GroupContext, raw: bytes) -> DbraPublicKey:
    _, epoch, fields = wire.open_envelope(raw, wire.TAG_DBRA_PK)
    if len(fields) != 3:
        raise DecodeError("public key field count mismatch")
    schema = decode_schema(fields[0])
    hve_pk = hve.decode_public_key(ctx, fields[1])
    hibe_pk = hibe.decode_public_key(ctx, fields[2])
    return DbraPublicKey(ctx, schema, hve_pk, hibe_pk, epoch)


def encode_master_key(msk: DbraMasterKey) -> bytes:
    fields = [msk.hibe_msk.alpha.encode(), msk.hibe_msk.master.encode()]
    fields.extend(hve.master_fields(msk.hve_msk))
    return wire.envelope(wire.TAG_DBRA_MSK, msk.epoch, fields)


def decode_master_key(pk: DbraPublicKey, raw: bytes) -> DbraMasterKey:
    _, epoch, fields = wire.open_envelope(raw, wire.TAG_DBRA_MSK)
    if len(fields) < 2:
        raise DecodeError("truncated master key")
    from .groups import SourceElement
    alpha = Scalar.decode(pk.ctx, fields[0])
    master = SourceElement.decode(pk.ctx, fields[1])
    hibe_msk = hibe.HibeMasterKey(pk.hibe_pk, alpha, master, epoch)
    hve_msk = hve.master_from_fields(pk.hve_pk, fields[2:])
    return DbraMasterKey(pk, hve_msk, hibe_msk, epoch)


def _encode_pattern_symbols(schema: AttributeSchema, pattern) -> bytes:
    out = []
    for j, sym in enumerate(pattern):
        out.append(_WILD if sym is None else schema.symbol_index(j, sym))
    return struct.pack(">%dH" % len(out), *out)


def _decode_pattern_symbols(schema: AttributeSchema, raw: bytes):
    if len(raw) != 2 * schema.width:
        raise DecodeError("bad pattern length")
    idxs = struct.unpack(">%dH" % schema.width, raw)
    out = []
    for j, idx in enumerate(idxs):
        if idx == _WILD:
            out.append(None)
        else:
            _, domain = schema.dimensions[j]
            if idx >= len(domain):
                raise DecodeError("pattern index out of domain")
            out.append(domain[idx])
    return tuple(out)


def encode_key(key: DbraKey) -> bytes:
    fields = [_encode_pattern_symbols(key.schema, key.pattern.pattern),
              struct.pack(">I", key.pattern.distance),
              hve.encode_key(key.hve_key),
              hibe.encode_key(key.hibe_key)]
    return wire.envelope(wire.TAG_DBRA_KEY, key.epoch, fields)


def decode_key(pk: DbraPublicKey, raw: bytes) -> DbraKey:
    _, epoch, fields = wire.open_envelope(raw, wire.TAG_DBRA_KEY)
    if len(fields) != 4:
        raise DecodeError("key field count mismatch")
    pattern = _decode_pattern_symbols(pk.schema, fields[0])
    if len(fields[1]) != 4:
        raise DecodeError("bad distance field")
    (distance,) = struct.unpack(">I", fields[1])
    kp = KeyPattern(pk.schema, pattern, distance)
    hve_key = hve.decode_key(pk.ctx, fields[2])
    hibe_key = hibe.decode_key(pk.hibe_pk, fields[3])
    return DbraKey(pk.schema, kp, hve_key, hibe_key, epoch)


def encode_ciphertext(ct: DbraCiphertext) -> bytes:
    fields = [hibe.encode_header(ct.hibe_header), ct.outer_nonce, ct.outer_blob]
    return wire.envelope(wire.TAG_DBRA_CIPHERTEXT, ct.epoch, fields)


def decode_ciphertext(ctx: GroupContext, raw: bytes) -> DbraCiphertext:
    _, epoch, fields = wire.open_envelope(raw, wire.TAG_DBRA_CIPHERTEXT)
    if len(fields) != 3:
        raise DecodeError("ciphertext field count mismatch")
    header = hibe.decode_header(ctx, fields[0])
    if len(fields[1]) != _NONCE:
        raise DecodeError("bad nonce length")
    return DbraCiphertext(header, fields[1], fields[2], epoch)
