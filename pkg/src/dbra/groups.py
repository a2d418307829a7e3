"""Bilinear group substrate with a symmetric-pairing contract.

The schemes above this module are written for a symmetric pairing e(g, g).
Efficient curves are asymmetric, so an element of the abstract group is
carried here as a dual-slot value: a left (G1) point and/or a right (G2)
point with the same discrete logarithm relative to the fixed generator pair.
`pair` consumes the left slot of its first argument and the right slot of
the second; mirrored elements therefore behave exactly like elements of a
symmetric group, while protocol messages may drop the slot they never need.

Also hosted here because every layer shares them: scalar arithmetic, the
HKDF-based key derivation from target-group elements, and the AEAD used to
carry actual message bytes.
"""

from __future__ import annotations

import hashlib
import os
import threading
from dataclasses import dataclass

from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from ._pairing import get_curve
from .errors import AccessDenied, DecodeError, SlotMismatch

NONCE_BYTES = 12
KEY_BYTES = 32

_KDF_SALT = b"dbra/kdf/v1"

LEFT = 1
RIGHT = 2
BOTH = LEFT | RIGHT


# --- randomness -------------------------------------------------------------

class RandomSource:
    """Uniform bytes and scalars; system-backed or deterministic."""

    def random_bytes(self, n: int) -> bytes:
        raise NotImplementedError

    def random_scalar(self, order) -> int:
        # 16 surplus bytes push the modulo bias below 2^-128
        width = (int(order).bit_length() + 7) // 8 + 16
        v = int.from_bytes(self.random_bytes(width), "big")
        return v % (int(order) - 1) + 1

    def child(self, label: bytes) -> "RandomSource":
        raise NotImplementedError


class SystemRandom(RandomSource):
    def random_bytes(self, n: int) -> bytes:
        return os.urandom(n)

    def child(self, label: bytes) -> "RandomSource":
        return self


class SeededRandom(RandomSource):
    """shake_256 output stream keyed by a seed; reproducible across runs."""

    def __init__(self, seed: bytes):
        self._seed = bytes(seed)
        self._counter = 0
        self._lock = threading.Lock()

    def random_bytes(self, n: int) -> bytes:
        with self._lock:
            ctr = self._counter
            self._counter += 1
        h = hashlib.shake_256(b"%s|stream|%d" % (self._seed, ctr))
        return h.digest(n)

    def child(self, label: bytes) -> "RandomSource":
        h = hashlib.shake_256(b"%s|child|%s" % (self._seed, label))
        return SeededRandom(h.digest(32))


# --- context ----------------------------------------------------------------

class GroupContext:
    """One initialized parameter set: curve, generators, randomness source."""

    def __init__(self, level: int = 128, seed: bytes | None = None):
        self.curve = get_curve(level)
        self.level = level
        self.order = int(self.curve.r)
        self.rng: RandomSource = SystemRandom() if seed is None else SeededRandom(seed)
        self.generator = SourceElement(self, self.curve.g1, self.curve.g2, BOTH)
        self.gt_generator = TargetElement(self, self.curve.pairing(self.curve.g1,
                                                                   self.curve.g2))

    @property
    def scalar_width(self) -> int:
        return self.curve.scalar_width

    def random_scalar(self) -> "Scalar":
        return Scalar(self, self.rng.random_scalar(self.order))

    def scalar(self, value: int) -> "Scalar":
        return Scalar(self, value % self.order)

    def hash_to_scalar(self, data: bytes) -> "Scalar":
        return Scalar(self, int(self.curve.hash_to_scalar(data)))

    def __repr__(self):
        return "GroupContext(level=%d)" % self.level


def group_setup(level: int = 128, seed: bytes | None = None) -> GroupContext:
    if level not in (128, 192):
        raise ValueError("security level must be 128 or 192")
    return GroupContext(level, seed)


# --- scalars ----------------------------------------------------------------

class Scalar:
    """Exponent modulo the group order."""

    __slots__ = ("ctx", "value")

    def __init__(self, ctx: GroupContext, value: int):
        self.ctx = ctx
        self.value = value % ctx.order

    def __add__(self, other: "Scalar") -> "Scalar":
        return Scalar(self.ctx, self.value + other.value)

    def __sub__(self, other: "Scalar") -> "Scalar":
        return Scalar(self.ctx, self.value - other.value)

    def __mul__(self, other: "Scalar") -> "Scalar":
        return Scalar(self.ctx, self.value * other.value)

    def __neg__(self) -> "Scalar":
        return Scalar(self.ctx, -self.value)

    def inverse(self) -> "Scalar":
        return Scalar(self.ctx, pow(self.value, -1, self.ctx.order))

    def __eq__(self, other):
        return isinstance(other, Scalar) and self.value == other.value

    def __hash__(self):
        return hash(self.value)

    def __repr__(self):
        return "Scalar(%d)" % self.value

    def encode(self) -> bytes:
        return self.value.to_bytes(self.ctx.scalar_width, "big")

    @classmethod
    def decode(cls, ctx: GroupContext, raw: bytes) -> "Scalar":
        if len(raw) != ctx.scalar_width:
            raise DecodeError("bad scalar length")
        v = int.from_bytes(raw, "big")
        if v >= ctx.order:
            raise DecodeError("scalar out of range")
        return cls(ctx, v)


# --- group elements ---------------------------------------------------------

class SourceElement:
    """Source-group element with optional left (G1) and right (G2) slots."""

    __slots__ = ("ctx", "_left", "_right", "mask")

    def __init__(self, ctx: GroupContext, left, right, mask: int):
        self.ctx = ctx
        self._left = left if mask & LEFT else None
        self._right = right if mask & RIGHT else None
        self.mask = mask

    @classmethod
    def identity(cls, ctx: GroupContext, mask: int = BOTH) -> "SourceElement":
        return cls(ctx, None, None, mask)

    @property
    def left(self):
        if not self.mask & LEFT:
            raise SlotMismatch("left slot absent")
        return self._left

    @property
    def right(self):
        if not self.mask & RIGHT:
            raise SlotMismatch("right slot absent")
        return self._right

    def restrict(self, mask: int) -> "SourceElement":
        """Drop slots outside mask (e.g. before shipping a ciphertext part)."""
        keep = self.mask & mask
        if keep != mask:
            raise SlotMismatch("required slot absent")
        return SourceElement(self.ctx, self._left, self._right, mask)

    def mul(self, other: "SourceElement") -> "SourceElement":
        mask = self.mask & other.mask
        if not mask:
            raise SlotMismatch("no common slot for mul")
        c = self.ctx.curve
        left = c.g1_op(self._left, other._left) if mask & LEFT else None
        right = c.g2_op(self._right, other._right) if mask & RIGHT else None
        return SourceElement(self.ctx, left, right, mask)

    def __mul__(self, other):
        return self.mul(other)

    def exp(self, k) -> "SourceElement":
        e = k.value if isinstance(k, Scalar) else int(k)
        c = self.ctx.curve
        left = c.g1_exp(e, self._left) if self.mask & LEFT else None
        right = c.g2_exp(e, self._right) if self.mask & RIGHT else None
        return SourceElement(self.ctx, left, right, self.mask)

    def __pow__(self, k):
        return self.exp(k)

    def inverse(self) -> "SourceElement":
        c = self.ctx.curve
        left = c.g1_inverse(self._left) if self.mask & LEFT else None
        right = c.g2_inverse(self._right) if self.mask & RIGHT else None
        return SourceElement(self.ctx, left, right, self.mask)

    def __eq__(self, other):
        return (isinstance(other, SourceElement)
                and self.mask == other.mask
                and self._left == other._left
                and self._right == other._right)

    def __hash__(self):
        return hash((self.mask, self._left, self._right))

    def __repr__(self):
        slots = {1: "left", 2: "right", 3: "both"}[self.mask]
        return "SourceElement(<%s>)" % slots

    def encode(self) -> bytes:
        c = self.ctx.curve
        out = [bytes([self.mask])]
        if self.mask & LEFT:
            out.append(c.g1_bytes(self._left))
        if self.mask & RIGHT:
            out.append(c.g2_bytes(self._right))
        return b"".join(out)

    @classmethod
    def decode(cls, ctx: GroupContext, raw: bytes) -> "SourceElement":
        if not raw:
            raise DecodeError("empty element encoding")
        mask = raw[0]
        if mask not in (LEFT, RIGHT, BOTH):
            raise DecodeError("bad slot mask")
        c = ctx.curve
        off = 1
        left = right = None
        try:
            if mask & LEFT:
                end = off + 1 + c.fp_width
                left = c.g1_from_bytes(raw[off:end])
                off = end
            if mask & RIGHT:
                end = off + 1 + 2 * c.fp_width
                right = c.g2_from_bytes(raw[off:end])
                off = end
        except ValueError as exc:
            raise DecodeError(str(exc)) from None
        if off != len(raw):
            raise DecodeError("trailing bytes in element encoding")
        return cls(ctx, left, right, mask)


class TargetElement:
    """Target-group element (pairing output domain)."""

    __slots__ = ("ctx", "value", "_comb")

    def __init__(self, ctx: GroupContext, value):
        self.ctx = ctx
        self.value = value
        self._comb = None

    @classmethod
    def identity(cls, ctx: GroupContext) -> "TargetElement":
        return cls(ctx, ctx.curve.gt_identity())

    def mul(self, other: "TargetElement") -> "TargetElement":
        return TargetElement(self.ctx, self.ctx.curve.gt_mul(self.value, other.value))

    def __mul__(self, other):
        return self.mul(other)

    def exp(self, k) -> "TargetElement":
        e = k.value if isinstance(k, Scalar) else int(k)
        curve = self.ctx.curve
        if self._comb is None:
            # pays for itself on the second exponentiation of the same base
            self._comb = curve.gt_comb_table(self.value) or False
        if self._comb is not False:
            return TargetElement(self.ctx, curve.gt_exp_comb(self._comb, e))
        return TargetElement(self.ctx, curve.gt_exp(self.value, e))

    def __pow__(self, k):
        return self.exp(k)

    def inverse(self) -> "TargetElement":
        return TargetElement(self.ctx, self.ctx.curve.gt_inverse(self.value))

    def __eq__(self, other):
        return isinstance(other, TargetElement) and self.value == other.value

    def __hash__(self):
        return hash(self.value)

    def __repr__(self):
        return "TargetElement(%s...)" % self.encode()[:8].hex()

    def encode(self) -> bytes:
        return self.ctx.curve.gt_bytes(self.value)

    @classmethod
    def decode(cls, ctx: GroupContext, raw: bytes) -> "TargetElement":
        try:
            return cls(ctx, ctx.curve.gt_from_bytes(raw))
        except ValueError as exc:
            raise DecodeError(str(exc)) from None


def pair(a: SourceElement, b: SourceElement) -> TargetElement:
    """e(a, b) via a's left slot and b's right slot."""
    return TargetElement(a.ctx, a.ctx.curve.pairing(a.left, b.right))


def pair_product(pairs) -> TargetElement:
    """Product of pairings sharing one final exponentiation."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("empty pairing product")
    ctx = pairs[0][0].ctx
    return TargetElement(ctx, ctx.curve.pairing_product(
        [(a.left, b.right) for (a, b) in pairs]))


# --- key derivation and AEAD ------------------------------------------------

@dataclass(frozen=True)
class SymmetricKey:
    material: bytes

    def __post_init__(self):
        if len(self.material) != KEY_BYTES:
            raise ValueError("symmetric keys are %d bytes" % KEY_BYTES)

    def __repr__(self):
        return "SymmetricKey(<%d bytes>)" % len(self.material)


def derive_key(k: TargetElement, label: bytes) -> SymmetricKey:
    """Map a target-group element to a 32-byte key, domain-separated by label."""
    if not label:
        raise ValueError("derive_key label must be non-empty")
    hkdf = HKDF(algorithm=hashes.SHA256(), length=KEY_BYTES,
                salt=_KDF_SALT, info=bytes(label))
    return SymmetricKey(hkdf.derive(k.encode()))


def aead_seal(key: SymmetricKey, nonce: bytes, plaintext: bytes,
              ad: bytes = b"") -> bytes:
    if len(nonce) != NONCE_BYTES:
        raise ValueError("nonce must be %d bytes" % NONCE_BYTES)
    return AESGCM(key.material).encrypt(nonce, plaintext, ad or None)


def aead_open(key: SymmetricKey, nonce: bytes, ciphertext: bytes,
              ad: bytes = b"") -> bytes:
    if len(nonce) != NONCE_BYTES:
        raise ValueError("nonce must be %d bytes" % NONCE_BYTES)
    try:
        return AESGCM(key.material).decrypt(nonce, ciphertext, ad or None)
    except Exception:
        raise AccessDenied() from None
