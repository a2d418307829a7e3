"""Per-user protocol engine for sharing over an untrusted repository.

Each participant runs one node.  The node keeps all secrets locally: the
master key pair, content keys for its own publications, the ring of
decryption keys received from friends, and the registry of keys it has
issued.  The repository only ever sees sealed blobs, attribute-hiding
ciphertexts, public keys, and opaque mailbox messages.

Publishing seals the content once under a fresh symmetric key and encrypts
that key separately under each policy rule.  Links deliver derived keys
through mailboxes; receive_and_propagate re-delegates incoming keys one hop
further along the node's own links, weakening the distance bound each hop.
Revoking a link refreshes the owner's ciphertexts and every surviving key
in a single compare-and-swap, so a revoked key is stranded at the old epoch
while nobody else notices a change.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from . import core, wire
from .core import AttributeSchema, DbraKey, KeyPattern
from .errors import (AccessDenied, ConflictError, DbraError, DecodeError,
                     NotFoundError)
from .groups import GroupContext, SeededRandom, SymmetricKey, NONCE_BYTES, \
    aead_open, aead_seal, group_setup
from .policy import ConditionUniverse, Policy, compile_policy, \
    derive_key_pattern, parse_policy

_RESOURCE_AD = b"dbra/resource/v1"


def _content_ad(owner: str, name: str) -> bytes:
    return b"|".join([_RESOURCE_AD, owner.encode(), name.encode()])


# --- mailbox messages -------------------------------------------------------

def encode_key_message(owner: str, chain, key: DbraKey, pk_raw: bytes) -> bytes:
    fields = [owner.encode(), ",".join(chain).encode(),
              core.encode_key(key), pk_raw]
    return wire.envelope(wire.TAG_KEY_MESSAGE, key.epoch, fields)


def decode_key_message(ctx: GroupContext, raw: bytes):
    _, epoch, fields = wire.open_envelope(raw, wire.TAG_KEY_MESSAGE)
    if len(fields) != 4:
        raise DecodeError("key message carries %d fields" % len(fields))
    owner = fields[0].decode()
    chain = tuple(p for p in fields[1].decode().split(",") if p)
    pk = core.decode_public_key(ctx, fields[3])
    key = core.decode_key(pk, fields[2])
    if key.epoch != epoch:
        raise DecodeError("key message epoch disagrees with key")
    return owner, chain, key, fields[3]


# --- node state -------------------------------------------------------------

@dataclass
class Publication:
    policy: str
    sk: SymmetricKey
    version: int


@dataclass
class RingEntry:
    owner: str
    chain: Tuple[str, ...]
    key: DbraKey
    pk_raw: bytes


@dataclass(frozen=True)
class PropagateReport:
    stored: int = 0
    forwarded: int = 0
    dropped: int = 0


class OsnNode:
    """One user's view of the protocol: secrets, links, and repository I/O."""

    def __init__(self, repo, user_id: str, pk, msk,
                 universe: Optional[ConditionUniverse] = None):
        self.repo = repo
        self.user_id = user_id
        self.pk = pk
        self.msk = msk
        self.universe = universe
        self.publications: Dict[str, Publication] = {}
        self.key_ring: Dict[Tuple[str, Tuple[str, ...]], RingEntry] = {}
        self.issued: Dict[str, List[DbraKey]] = {}
        self.links: Dict[str, int] = {}

    @property
    def ctx(self) -> GroupContext:
        return self.pk.ctx

    @property
    def epoch(self) -> int:
        return self.pk.epoch

    @classmethod
    def enroll(cls, repo, user_id: str,
               universe: Optional[ConditionUniverse] = None,
               schema: Optional[AttributeSchema] = None,
               level: int = 128, seed: Optional[bytes] = None) -> "OsnNode":
        if (universe is None) == (schema is None):
            raise ValueError("enroll takes a condition universe or a schema")
        if universe is not None:
            schema = universe.schema
        ctx = group_setup(level, seed)
        pk, msk = core.setup(ctx, schema)
        repo.put_public_key(user_id, core.encode_public_key(pk))
        return cls(repo, user_id, pk, msk, universe)

    # --- publishing ---------------------------------------------------------

    def _compile(self, policy) -> Tuple[str, List[core.PolicyPair]]:
        if isinstance(policy, str):
            policy = parse_policy(policy)
        if not isinstance(policy, Policy):
            raise TypeError("policy must be text or a parsed Policy")
        if self.universe is None:
            raise DbraError("node enrolled without a condition universe "
                            "cannot compile policies")
        return str(policy), compile_policy(policy, self.universe)

    def publish(self, name: str, content: bytes, policy=None,
                pairs: Optional[List[core.PolicyPair]] = None,
                metadata: Optional[Dict[str, str]] = None) -> int:
        """Seal content under a fresh key and post one ciphertext per rule."""
        if (policy is None) == (pairs is None):
            raise ValueError("publish takes a policy or explicit pairs")
        if policy is not None:
            policy_text, pairs = self._compile(policy)
        else:
            policy_text = ""
        rng = self.ctx.rng
        sk = SymmetricKey(rng.random_bytes(32))
        nonce = rng.random_bytes(NONCE_BYTES)
        permanent = nonce + aead_seal(sk, nonce, content,
                                      _content_ad(self.user_id, name))
        blobs = [core.encode_ciphertext(core.encrypt(self.pk, pair, sk.material))
                 for pair in pairs]
        version = self.repo.put_resource(self.user_id, name, permanent, blobs,
                                         metadata or {})
        self.publications[name] = Publication(policy_text, sk, version)
        return version

    # --- linking ------------------------------------------------------------

    def create_link(self, peer: str, credentials: Optional[dict] = None,
                    distance: int = 1, pattern: Optional[KeyPattern] = None,
                    edge: int = 1) -> DbraKey:
        """Issue a key to peer and record the outgoing link."""
        if peer == self.user_id:
            raise ValueError("cannot link a node to itself")
        if edge < 1:
            raise ValueError("edge weight must be at least 1")
        if pattern is None:
            if self.universe is None or credentials is None:
                raise DbraError("need credentials (with a universe) or an "
                                "explicit key pattern")
            pattern = derive_key_pattern(self.universe, credentials, distance)
        key = core.derive(self.msk, pattern)
        self.issued.setdefault(peer, []).append(key)
        self.links[peer] = edge
        self.repo.mailbox_post(peer, encode_key_message(
            self.user_id, (peer,), key, core.encode_public_key(self.pk)))
        return key

    def _owner_epoch(self, owner: str) -> int:
        pk_raw, _ = self.repo.get_public_key(owner)
        return wire.open_envelope(pk_raw, wire.TAG_DBRA_PK)[1]

    def receive_and_propagate(self) -> PropagateReport:
        """Drain the mailbox, keep fresh keys, re-delegate along own links."""
        stored = forwarded = dropped = 0
        for raw in self.repo.mailbox_fetch(self.user_id):
            try:
                owner, chain, key, pk_raw = decode_key_message(self.ctx, raw)
                if key.epoch != self._owner_epoch(owner):
                    dropped += 1
                    continue
            except (DbraError, NotFoundError):
                dropped += 1
                continue
            for k in [k for k, e in self.key_ring.items()
                      if e.owner == owner and e.key.epoch < key.epoch]:
                del self.key_ring[k]
            self.key_ring[(owner, chain)] = RingEntry(owner, chain, key, pk_raw)
            stored += 1
            for peer, edge in self.links.items():
                if peer == owner or peer in chain:
                    continue
                if key.pattern.distance + edge > key.schema.d_max:
                    continue
                child = core.delegate(key, edge)
                self.repo.mailbox_post(peer, encode_key_message(
                    owner, chain + (peer,), child, pk_raw))
                forwarded += 1
        return PropagateReport(stored, forwarded, dropped)

    # --- access -------------------------------------------------------------

    def access(self, owner: str, name: str) -> bytes:
        """Read a resource; any failure past name resolution is uniform."""
        record = self.repo.get_resource(owner, name)
        if owner == self.user_id and name in self.publications:
            sk = self.publications[name].sk
            return aead_open(sk, record.permanent[:NONCE_BYTES],
                             record.permanent[NONCE_BYTES:],
                             _content_ad(owner, name))
        candidates = [e.key for e in self.key_ring.values() if e.owner == owner]
        for blob in record.revocable:
            try:
                ct = core.decode_ciphertext(self.ctx, blob)
            except DbraError:
                continue
            for key in candidates:
                try:
                    material = core.decrypt(key, ct)
                except AccessDenied:
                    continue
                sk = SymmetricKey(material)
                return aead_open(sk, record.permanent[:NONCE_BYTES],
                                 record.permanent[NONCE_BYTES:],
                                 _content_ad(owner, name))
        raise AccessDenied()

    # --- revocation ---------------------------------------------------------

    def revoke_link(self, peer: str, attempts: int = 5) -> int:
        """Cut a link and strand every key issued over it."""
        if peer not in self.links and peer not in self.issued:
            raise NotFoundError("no link to %r" % peer)
        self.links.pop(peer, None)
        self.issued.pop(peer, None)
        last_conflict = None
        for _ in range(attempts):
            names = [n for n, _, _ in self.repo.list_resources(self.user_id)]
            cts, spans = [], []
            for name in names:
                record = self.repo.get_resource(self.user_id, name)
                spans.append((name, len(record.revocable)))
                cts.extend(core.decode_ciphertext(self.ctx, b)
                           for b in record.revocable)
            survivors = [(p, i) for p, keys in self.issued.items()
                         for i in range(len(keys))]
            result = core.revoke(self.pk, self.msk, cts,
                                 [self.issued[p][i] for p, i in survivors])
            replacements, pos = {}, 0
            for name, count in spans:
                replacements[name] = [core.encode_ciphertext(ct) for ct in
                                      result.ciphertexts[pos:pos + count]]
                pos += count
            try:
                self.repo.swap_revocable(self.user_id, self.pk.epoch,
                                         core.encode_public_key(result.pk),
                                         replacements)
            except ConflictError as exc:
                last_conflict = exc
                continue
            self.pk, self.msk = result.pk, result.msk
            for (p, i), key in zip(survivors, result.keys):
                self.issued[p][i] = key
            pk_raw = core.encode_public_key(self.pk)
            for other, keys in self.issued.items():
                for key in keys:
                    self.repo.mailbox_post(other, encode_key_message(
                        self.user_id, (other,), key, pk_raw))
            return self.pk.epoch
        raise last_conflict

    # --- persistence --------------------------------------------------------

    def save(self) -> bytes:
        meta = {"user": self.user_id, "level": self.ctx.level}
        rng = self.ctx.rng
        if isinstance(rng, SeededRandom):
            meta["rng"] = rng.random_bytes(32).hex()
        if self.universe is not None:
            meta["universe"] = ", ".join(str(c)
                                         for c in self.universe.conditions)
        for peer, edge in self.links.items():
            meta["link.%s" % peer] = edge
        for idx, (name, pub) in enumerate(sorted(self.publications.items())):
            meta["pub.%d.name" % idx] = name
            meta["pub.%d.policy" % idx] = pub.policy
            meta["pub.%d.sk" % idx] = pub.sk.material.hex()
            meta["pub.%d.version" % idx] = pub.version
        meta["pubs"] = len(self.publications)
        meta["rings"] = len(self.key_ring)
        meta["issued"] = sum(len(v) for v in self.issued.values())
        fields = [wire.dump_textmap(meta).encode(),
                  core.encode_public_key(self.pk),
                  core.encode_master_key(self.msk)]
        for entry in self.key_ring.values():
            fields.append(";".join([entry.owner, ",".join(entry.chain)]).encode())
            fields.append(core.encode_key(entry.key))
            fields.append(entry.pk_raw)
        for peer, keys in self.issued.items():
            for key in keys:
                fields.append(peer.encode())
                fields.append(core.encode_key(key))
        return wire.envelope(wire.TAG_NODE_STATE, self.pk.epoch, fields)

    @classmethod
    def load(cls, repo, raw: bytes) -> "OsnNode":
        _, _, fields = wire.open_envelope(raw, wire.TAG_NODE_STATE)
        meta = wire.load_textmap(fields[0].decode())
        seed = bytes.fromhex(meta["rng"]) if "rng" in meta else None
        ctx = group_setup(int(meta["level"]), seed)
        pk = core.decode_public_key(ctx, fields[1])
        msk = core.decode_master_key(pk, fields[2])
        universe = None
        if meta.get("universe"):
            rule = parse_policy(meta["universe"]).rules[0]
            universe = ConditionUniverse(rule.attribute_conditions(),
                                         pk.schema.d_max)
        node = cls(repo, meta["user"], pk, msk, universe)
        for key_name, value in meta.items():
            if key_name.startswith("link."):
                node.links[key_name[5:]] = int(value)
        for idx in range(int(meta.get("pubs", 0))):
            node.publications[meta["pub.%d.name" % idx]] = Publication(
                meta["pub.%d.policy" % idx],
                SymmetricKey(bytes.fromhex(meta["pub.%d.sk" % idx])),
                int(meta["pub.%d.version" % idx]))
        pos = 3
        for _ in range(int(meta["rings"])):
            owner, _, chain_csv = fields[pos].decode().partition(";")
            chain = tuple(p for p in chain_csv.split(",") if p)
            entry_pk = core.decode_public_key(ctx, fields[pos + 2])
            key = core.decode_key(entry_pk, fields[pos + 1])
            node.key_ring[(owner, chain)] = RingEntry(owner, chain, key,
                                                      fields[pos + 2])
            pos += 3
        for _ in range(int(meta["issued"])):
            peer = fields[pos].decode()
            key = core.decode_key(pk, fields[pos + 1])
            node.issued.setdefault(peer, []).append(key)
            pos += 2
        return node
