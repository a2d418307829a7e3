"""Protocol engine: publish, link, propagate, access, revoke, persist.

Small multi-node graphs over an embedded repository; the repository is the
only channel between nodes, exactly as deployed.
"""

import pytest

from dbra import core, node as node_mod, wire
from dbra.errors import (AccessDenied, DbraError, DecodeError, NotFoundError)
from dbra.node import OsnNode, encode_key_message, decode_key_message
from dbra.policy import parse_policy, universe_for
from dbra.repo import RepositoryStore


POLICY = 'team = "core", dist(u, 2)'


@pytest.fixture()
def repo(tmp_path):
    return RepositoryStore(tmp_path / "repo")


def enroll(repo, user, policy=POLICY, d_max=2):
    uni = universe_for([parse_policy(policy)], d_max)
    return OsnNode.enroll(repo, user, uni)


def test_enroll_validations(repo):
    uni = universe_for([parse_policy(POLICY)], 2)
    with pytest.raises(ValueError):
        OsnNode.enroll(repo, "x", uni, schema=uni.schema)
    with pytest.raises(ValueError):
        OsnNode.enroll(repo, "x")


def test_publish_and_owner_access(repo):
    alice = enroll(repo, "alice")
    v = alice.publish("doc", b"my words", POLICY, metadata={"title": "Doc"})
    assert v == 1
    assert alice.access("alice", "doc") == b"my words"
    assert alice.publish("doc", b"edited", POLICY) == 2
    assert alice.access("alice", "doc") == b"edited"
    rec = repo.get_resource("alice", "doc")
    assert b"my words" not in rec.permanent and b"edited" not in rec.permanent
    with pytest.raises(ValueError):
        alice.publish("x", b"c")
    with pytest.raises(ValueError):
        alice.publish("x", b"c", POLICY, pairs=[])


def test_link_and_direct_access(repo):
    alice = enroll(repo, "alice")
    bob = enroll(repo, "bob")
    alice.publish("doc", b"shared", POLICY)
    alice.create_link("bob", {"team": "core"}, distance=1)
    report = bob.receive_and_propagate()
    assert report.stored == 1 and report.dropped == 0
    assert bob.access("alice", "doc") == b"shared"
    # resources published after the link are covered by the same key
    alice.publish("later", b"afterwards", POLICY)
    assert bob.access("alice", "later") == b"afterwards"


def test_unsatisfied_credentials_mean_denial(repo):
    alice = enroll(repo, "alice")
    mallory = enroll(repo, "mallory")
    alice.publish("doc", b"secret", POLICY)
    alice.create_link("mallory", {"team": "sales"}, distance=1)
    mallory.receive_and_propagate()
    with pytest.raises(AccessDenied):
        mallory.access("alice", "doc")


def test_no_key_no_access_and_unknown_resource(repo):
    alice = enroll(repo, "alice")
    eve = enroll(repo, "eve")
    alice.publish("doc", b"secret", POLICY)
    with pytest.raises(AccessDenied):
        eve.access("alice", "doc")
    with pytest.raises(NotFoundError):
        eve.access("alice", "ghost")


def test_propagation_weakens_distance(repo):
    alice = enroll(repo, "alice")
    bob = enroll(repo, "bob")
    carol = enroll(repo, "carol")
    alice.publish("near", b"close friends only",
                  'team = "core", dist(u, 1)')
    alice.publish("far", b"friends of friends", POLICY)
    alice.create_link("bob", {"team": "core"}, distance=1)
    bob.create_link("carol", {"team": "core"}, distance=1)
    report = bob.receive_and_propagate()
    assert report.stored == 1 and report.forwarded == 1
    carol.receive_and_propagate()
    assert bob.access("alice", "near") == b"close friends only"
    assert bob.access("alice", "far") == b"friends of friends"
    assert carol.access("alice", "far") == b"friends of friends"
    with pytest.raises(AccessDenied):
        carol.access("alice", "near")


def test_forwarding_respects_distance_cap(repo):
    alice = enroll(repo, "alice")
    bob = enroll(repo, "bob")
    enroll(repo, "carol")
    alice.create_link("bob", {"team": "core"}, distance=2)  # already at d_max
    bob.create_link("carol", {"team": "core"})
    report = bob.receive_and_propagate()
    assert report.stored == 1 and report.forwarded == 0


def test_forwarding_skips_owner_and_chain(repo):
    alice = enroll(repo, "alice")
    bob = enroll(repo, "bob")
    alice.create_link("bob", {"team": "core"}, distance=1)
    bob.create_link("alice", {"team": "core"})  # back-link to the owner
    report = bob.receive_and_propagate()
    assert report.forwarded == 0
    # alice's mailbox holds only bob's own issuance, never an echoed key
    owners = [decode_key_message(alice.ctx, raw)[0]
              for raw in repo.mailbox_fetch("alice")]
    assert owners == ["bob"]


def test_stale_key_messages_dropped(repo):
    alice = enroll(repo, "alice")
    bob = enroll(repo, "bob")
    enroll(repo, "carol")
    alice.create_link("bob", {"team": "core"}, distance=1)
    alice.create_link("carol", {"team": "core"}, distance=1)
    alice.revoke_link("carol")
    # bob's mailbox: the original epoch-0 key, then the refreshed epoch-1 key
    report = bob.receive_and_propagate()
    assert report.dropped == 1 and report.stored == 1
    (entry,) = bob.key_ring.values()
    assert entry.key.epoch == 1


def test_revocation_end_to_end(repo):
    alice = enroll(repo, "alice")
    bob = enroll(repo, "bob")
    carol = enroll(repo, "carol")
    alice.publish("doc", b"version zero", POLICY)
    alice.create_link("bob", {"team": "core"}, distance=1)
    alice.create_link("carol", {"team": "core"}, distance=1)
    bob.receive_and_propagate()
    carol.receive_and_propagate()
    assert bob.access("alice", "doc") == b"version zero"
    assert carol.access("alice", "doc") == b"version zero"

    assert alice.revoke_link("bob") == 1
    carol.receive_and_propagate()
    with pytest.raises(AccessDenied):
        bob.access("alice", "doc")
    assert carol.access("alice", "doc") == b"version zero"
    # the owner's local key keeps working across epochs
    assert alice.access("alice", "doc") == b"version zero"
    with pytest.raises(NotFoundError):
        alice.revoke_link("bob")


def test_revocation_strands_chained_keys(repo):
    alice = enroll(repo, "alice")
    bob = enroll(repo, "bob")
    carol = enroll(repo, "carol")
    alice.publish("doc", b"chained", POLICY)
    alice.create_link("bob", {"team": "core"}, distance=1)
    bob.create_link("carol", {"team": "core"})
    bob.receive_and_propagate()
    carol.receive_and_propagate()
    assert carol.access("alice", "doc") == b"chained"
    alice.revoke_link("bob")
    # carol's only key arrived through bob; it is stranded with bob's
    carol.receive_and_propagate()
    with pytest.raises(AccessDenied):
        carol.access("alice", "doc")


def test_key_ring_size_stays_put_under_publishing(repo):
    alice = enroll(repo, "alice")
    bob = enroll(repo, "bob")
    alice.create_link("bob", {"team": "core"}, distance=1)
    bob.receive_and_propagate()
    msk_before = core.encode_master_key(alice.msk)
    ring_before = len(bob.key_ring)
    for i in range(10):
        alice.publish("doc%d" % i, b"body %d" % i, POLICY)
    bob.receive_and_propagate()
    assert len(bob.key_ring) == ring_before
    assert core.encode_master_key(alice.msk) == msk_before
    for i in range(10):
        assert bob.access("alice", "doc%d" % i) == b"body %d" % i


def test_create_link_validations(repo):
    alice = enroll(repo, "alice")
    with pytest.raises(ValueError):
        alice.create_link("alice", {"team": "core"})
    with pytest.raises(ValueError):
        alice.create_link("bob", {"team": "core"}, edge=0)
    with pytest.raises(DbraError):
        alice.create_link("bob")


def test_explicit_pattern_link(repo):
    alice = enroll(repo, "alice")
    bob = enroll(repo, "bob")
    alice.publish("doc", b"direct pattern", POLICY)
    pattern = core.KeyPattern(alice.pk.schema, (None,), 1)
    alice.create_link("bob", pattern=pattern)
    bob.receive_and_propagate()
    assert bob.access("alice", "doc") == b"direct pattern"


def test_key_message_codec(repo):
    alice = enroll(repo, "alice")
    pattern = core.KeyPattern(alice.pk.schema, (None,), 1)
    key = core.derive(alice.msk, pattern)
    pk_raw = core.encode_public_key(alice.pk)
    raw = encode_key_message("alice", ("bob", "carol"), key, pk_raw)
    owner, chain, key2, pk2_raw = decode_key_message(alice.ctx, raw)
    assert (owner, chain, pk2_raw) == ("alice", ("bob", "carol"), pk_raw)
    assert core.encode_key(key2) == core.encode_key(key)
    _, _, fields = wire.open_envelope(raw)
    with pytest.raises(DecodeError):
        decode_key_message(alice.ctx,
                           wire.envelope(wire.TAG_KEY_MESSAGE, 7, fields))
    with pytest.raises(DecodeError):
        decode_key_message(alice.ctx,
                           wire.envelope(wire.TAG_KEY_MESSAGE, 0, fields[:2]))


def test_save_load_roundtrip(repo, tmp_path):
    alice = enroll(repo, "alice")
    bob = enroll(repo, "bob")
    alice.publish("notes.2026.txt", b"dotted name", POLICY)
    alice.publish("doc", b"plain", POLICY)
    alice.create_link("bob", {"team": "core"}, distance=1)
    bob.receive_and_propagate()

    alice2 = OsnNode.load(repo, alice.save())
    assert alice2.user_id == "alice"
    assert alice2.links == {"bob": 1}
    assert set(alice2.publications) == {"notes.2026.txt", "doc"}
    assert alice2.publications["doc"].version == 1
    assert alice2.access("alice", "notes.2026.txt") == b"dotted name"
    assert [str(c) for c in alice2.universe.conditions] == \
        [str(c) for c in alice.universe.conditions]
    # issued keys survive, so revocation still works from the restored node
    assert sum(len(v) for v in alice2.issued.values()) == 1

    bob2 = OsnNode.load(repo, bob.save())
    assert bob2.access("alice", "doc") == b"plain"

    # a restored owner can still publish and the old reader still follows
    alice2.publish("fresh", b"after restore", POLICY)
    assert bob2.access("alice", "fresh") == b"after restore"


def test_save_load_then_revoke(repo):
    alice = enroll(repo, "alice")
    bob = enroll(repo, "bob")
    carol = enroll(repo, "carol")
    alice.publish("doc", b"guarded", POLICY)
    alice.create_link("bob", {"team": "core"}, distance=1)
    alice.create_link("carol", {"team": "core"}, distance=1)
    bob.receive_and_propagate()
    carol.receive_and_propagate()

    alice2 = OsnNode.load(repo, alice.save())
    alice2.revoke_link("bob")
    carol.receive_and_propagate()
    with pytest.raises(AccessDenied):
        bob.access("alice", "doc")
    assert carol.access("alice", "doc") == b"guarded"
