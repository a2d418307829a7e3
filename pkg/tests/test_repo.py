"""Repository: embedded store semantics, concurrency, and the socket server.

The socket tests run a real server on a Unix socket under a temp directory
and exercise the same assertions through RepositoryClient.
"""

import threading

import pytest

from dbra import core, wire
from dbra.errors import ConflictError, NotFoundError, RepositoryError
from dbra.repo import (RepositoryClient, RepositoryServer, RepositoryStore,
                       audit_stored_tags)


@pytest.fixture()
def store(tmp_path):
    return RepositoryStore(tmp_path / "repo")


@pytest.fixture()
def served(tmp_path):
    backing = RepositoryStore(tmp_path / "served")
    server = RepositoryServer(backing, tmp_path / "repo.sock")
    server.serve_background()
    try:
        yield RepositoryClient(tmp_path / "repo.sock"), backing
    finally:
        server.shutdown()
        server.server_close()


def _fill(repo):
    repo.put_public_key("alice", b"alice pk bytes")
    v = repo.put_resource("alice", "doc", b"permanent blob",
                          [b"rev one", b"rev two"], {"policy": "p", "k": "v"})
    return v


def test_public_key_lifecycle(store):
    assert store.put_public_key("alice", b"pk") == 0
    assert store.get_public_key("alice") == (b"pk", 0)
    with pytest.raises(ConflictError):
        store.put_public_key("alice", b"other")
    with pytest.raises(NotFoundError):
        store.get_public_key("bob")


def test_resource_roundtrip_and_versions(store):
    assert _fill(store) == 1
    rec = store.get_resource("alice", "doc")
    assert rec.version == 1
    assert rec.permanent == b"permanent blob"
    assert rec.revocable == (b"rev one", b"rev two")
    assert rec.metadata == {"policy": "p", "k": "v"}
    # republish bumps the version and replaces metadata wholesale
    v2 = store.put_resource("alice", "doc", b"new perm", [b"r"], {"x": "y"})
    assert v2 == 2
    rec2 = store.get_resource("alice", "doc")
    assert (rec2.version, rec2.permanent, rec2.metadata) == (2, b"new perm",
                                                            {"x": "y"})
    assert store.list_resources("alice") == [("doc", 2, {"x": "y"})]


def test_dotted_resource_names(store):
    store.put_public_key("alice", b"pk")
    store.put_resource("alice", "notes.2026.txt", b"perm", [b"r"], {})
    rec = store.get_resource("alice", "notes.2026.txt")
    assert rec.name == "notes.2026.txt" and rec.version == 1


def test_name_validation(store):
    for bad in ("", "a b", "x/y", ".hidden", "-lead", "a" * 65, "ow\n"):
        with pytest.raises(RepositoryError):
            store.put_public_key(bad, b"pk")
    store.put_public_key("ok", b"pk")
    with pytest.raises(RepositoryError):
        store.put_resource("ok", "bad/name", b"p", [], {})


def test_unknown_resource(store):
    store.put_public_key("alice", b"pk")
    with pytest.raises(NotFoundError):
        store.get_resource("alice", "ghost")
    with pytest.raises(NotFoundError):
        store.put_resource("ghostowner", "doc", b"p", [], {})


def test_swap_revocable_cas(store):
    _fill(store)
    epoch = store.swap_revocable("alice", 0, b"pk v1", {"doc": [b"rev three"]})
    assert epoch == 1
    assert store.get_public_key("alice") == (b"pk v1", 1)
    rec = store.get_resource("alice", "doc")
    assert rec.revocable == (b"rev three",)
    assert rec.permanent == b"permanent blob"  # untouched by the swap
    with pytest.raises(ConflictError):
        store.swap_revocable("alice", 0, b"pk", {"doc": [b"stale"]})
    with pytest.raises(NotFoundError):
        store.swap_revocable("alice", 1, b"pk", {"ghost": [b"x"]})


def test_swap_race_has_one_winner(store):
    _fill(store)
    results = []

    def attempt(tag):
        try:
            results.append((tag, store.swap_revocable(
                "alice", 0, b"pk-" + tag, {"doc": [b"by " + tag]})))
        except ConflictError:
            results.append((tag, None))

    threads = [threading.Thread(target=attempt, args=(b"%d" % i,))
               for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    winners = [r for r in results if r[1] == 1]
    assert len(winners) == 1
    (tag, _) = winners[0]
    assert store.get_public_key("alice") == (b"pk-" + tag, 1)
    assert store.get_resource("alice", "doc").revocable == (b"by " + tag,)


def test_durability_across_reopen(store):
    _fill(store)
    store.swap_revocable("alice", 0, b"pk v1", {"doc": [b"r2"]})
    reopened = RepositoryStore(store.root)
    assert reopened.get_public_key("alice") == (b"pk v1", 1)
    assert reopened.get_resource("alice", "doc").revocable == (b"r2",)


def test_mailbox_fifo_drain(store):
    store.mailbox_post("bob", b"first")
    store.mailbox_post("bob", b"second")
    store.mailbox_post("carol", b"hers")
    assert store.mailbox_fetch("bob") == [b"first", b"second"]
    assert store.mailbox_fetch("bob") == []
    assert store.mailbox_fetch("carol") == [b"hers"]
    assert store.mailbox_fetch("nobody") == []


def test_stored_tags_never_include_key_material(ctx, store):
    """Custodian's audit: whatever envelopes land in blob storage, none is a
    vector-layer key or a composite decryption key."""
    schema = core.AttributeSchema((("b", (0, 1)),), d_max=2)
    pk, msk = core.setup(ctx, schema)
    store.put_public_key("owner", core.encode_public_key(pk))
    ct = core.encrypt(pk, core.PolicyPair(schema, (1,), 1), b"body")
    store.put_resource("owner", "doc", b"sealed body",
                       [core.encode_ciphertext(ct)], {})
    # key messages travel through mailboxes, which the audit ignores
    key = core.derive(msk, core.KeyPattern(schema, (None,), 1))
    store.mailbox_post("friend", core.encode_key(key))
    tags = audit_stored_tags(store)
    assert wire.TAG_DBRA_CIPHERTEXT in tags or wire.TAG_DBRA_PK in tags
    assert wire.TAG_HVE_KEY not in tags
    assert wire.TAG_DBRA_KEY not in tags
    assert wire.TAG_HIBE_KEY not in tags


def test_blob_size_limit(store):
    store.put_public_key("alice", b"pk")
    with pytest.raises(RepositoryError):
        store.put_resource("alice", "big", b"x" * (64 * 1024 * 1024 + 1), [], {})
    with pytest.raises(RepositoryError):
        store.mailbox_post("alice", b"x" * (64 * 1024 * 1024 + 1))


def test_socket_parity_full_surface(served):
    client, backing = served
    assert client.put_public_key("alice", b"pk bytes") == 0
    assert client.get_public_key("alice") == (b"pk bytes", 0)
    v = client.put_resource("alice", "doc", b"perm", [b"r1", b"r2"],
                            {"m": "line one\nline two"})
    assert v == 1
    rec = client.get_resource("alice", "doc")
    assert (rec.permanent, rec.revocable) == (b"perm", (b"r1", b"r2"))
    assert rec.metadata == {"m": "line one\nline two"}
    assert client.list_resources("alice") == [("doc", 1,
                                               {"m": "line one\nline two"})]
    assert client.swap_revocable("alice", 0, b"pk2", {"doc": [b"r3"]}) == 1
    assert client.get_resource("alice", "doc").revocable == (b"r3",)
    client.mailbox_post("bob", b"msg")
    assert client.mailbox_fetch("bob") == [b"msg"]
    # errors cross the wire as typed exceptions
    with pytest.raises(NotFoundError):
        client.get_public_key("ghost")
    with pytest.raises(ConflictError):
        client.put_public_key("alice", b"again")
    with pytest.raises(ConflictError):
        client.swap_revocable("alice", 0, b"pk", {})
    # server-side state agrees with what the client observed
    assert backing.get_public_key("alice") == (b"pk2", 1)


def test_socket_concurrent_clients(served):
    client, _ = served
    client.put_public_key("owner", b"pk")
    errors = []

    def worker(i):
        try:
            client.put_resource("owner", "res%d" % i, b"p%d" % i, [b"r"], {})
            assert client.get_resource("owner", "res%d" % i).permanent == b"p%d" % i
        except Exception as exc:  # pragma: no cover - failure detail
            errors.append(exc)

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(12)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert len(client.list_resources("owner")) == 12
