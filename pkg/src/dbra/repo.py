"""Untrusted ciphertext repository: embedded store, wire protocol, server.

The repository holds only what a curious operator may see: owner public
keys, sealed resource blobs (one permanent content blob plus the revocable
header-bearing ciphertexts), manifest metadata, and opaque mailbox messages
in transit.  Decryption keys never reach it in any recognizable form.

Storage is a content-addressed blob directory plus one manifest file per
owner.  Manifests are rewritten atomically (temp file + rename), so a
reader always observes a complete epoch-consistent snapshot, never a mix of
old and new revocable ciphertexts.  swap_revocable is the only epoch bump
and is guarded by compare-and-swap on the expected epoch.

The wire protocol is one request per connection on a Unix socket:
opcode byte + u32 length + u32-prefixed fields; responses are a status byte
(ok / not_found / conflict / error) + u32 length + payload.
"""

from __future__ import annotations

import hashlib
import os
import re
import socket
import socketserver
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

from . import wire
from .errors import ConflictError, NotFoundError, RepositoryError

# \Z, not $: "$" would accept a trailing newline
_NAME_RE = re.compile(r"\A[A-Za-z0-9][A-Za-z0-9_.-]{0,63}\Z")
MAX_PAYLOAD = 64 * 1024 * 1024

OP_PUT_PK = 0x01
OP_GET_PK = 0x02
OP_PUT_RESOURCE = 0x03
OP_GET_RESOURCE = 0x04
OP_LIST_RESOURCES = 0x05
OP_SWAP_REVOCABLE = 0x06
OP_MAILBOX_POST = 0x07
OP_MAILBOX_FETCH = 0x08

ST_OK = 0x00
ST_NOT_FOUND = 0x01
ST_CONFLICT = 0x02
ST_ERROR = 0x03


def _check_name(kind: str, value: str) -> str:
    if not _NAME_RE.match(value):
        raise RepositoryError("invalid %s %r" % (kind, value))
    return value


def pack32(fields) -> bytes:
    out = []
    for f in fields:
        out.append(struct.pack(">I", len(f)))
        out.append(bytes(f))
    return b"".join(out)


def unpack32(raw: bytes) -> list:
    fields = []
    off = 0
    while off < len(raw):
        if off + 4 > len(raw):
            raise RepositoryError("truncated field length")
        (length,) = struct.unpack_from(">I", raw, off)
        off += 4
        if off + length > len(raw):
            raise RepositoryError("truncated field body")
        fields.append(raw[off:off + length])
        off += length
    return fields


@dataclass(frozen=True)
class ResourceRecord:
    owner: str
    name: str
    version: int
    metadata: Dict[str, str]
    permanent: bytes
    revocable: Tuple[bytes, ...]


# --- embedded store ---------------------------------------------------------

class RepositoryStore:
    """Directory-backed store implementing the full repository interface."""

    def __init__(self, root):
        self.root = Path(root)
        (self.root / "blobs").mkdir(parents=True, exist_ok=True)
        (self.root / "owners").mkdir(exist_ok=True)
        (self.root / "mailbox").mkdir(exist_ok=True)
        self._locks: Dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, owner: str) -> threading.Lock:
        with self._locks_guard:
            if owner not in self._locks:
                self._locks[owner] = threading.Lock()
            return self._locks[owner]

    # blob layer

    def _put_blob(self, data: bytes) -> str:
        if len(data) > MAX_PAYLOAD:
            raise RepositoryError("blob exceeds size limit")
        ref = hashlib.sha256(data).hexdigest()
        path = self.root / "blobs" / ref
        if not path.exists():
            tmp = path.with_name(".%s.tmp.%d" % (ref, os.getpid()))
            tmp.write_bytes(data)
            os.replace(tmp, path)
        return ref

    def _get_blob(self, ref: str) -> bytes:
        try:
            return (self.root / "blobs" / ref).read_bytes()
        except FileNotFoundError:
            raise NotFoundError("missing blob %s" % ref) from None

    # manifest layer

    def _manifest_path(self, owner: str) -> Path:
        return self.root / "owners" / owner / "manifest.txt"

    def _read_manifest(self, owner: str) -> dict:
        try:
            text = self._manifest_path(owner).read_text()
        except FileNotFoundError:
            raise NotFoundError("unknown owner %r" % owner) from None
        return wire.load_textmap(text)

    def _write_manifest(self, owner: str, manifest: dict):
        path = self._manifest_path(owner)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(".manifest.tmp.%d" % os.getpid())
        tmp.write_text(wire.dump_textmap(manifest))
        os.replace(tmp, path)

    @staticmethod
    def _resource_names(manifest: dict):
        listed = manifest.get("resources", "")
        return [n for n in listed.split(",") if n]

    # repository interface

    def put_public_key(self, owner: str, pk_bytes: bytes) -> int:
        _check_name("owner id", owner)
        with self._lock(owner):
            if self._manifest_path(owner).exists():
                raise ConflictError("owner %r already enrolled" % owner)
            ref = self._put_blob(pk_bytes)
            self._write_manifest(owner, {"epoch": 0, "pk": ref, "resources": ""})
        return 0

    def get_public_key(self, owner: str) -> Tuple[bytes, int]:
        manifest = self._read_manifest(owner)
        return self._get_blob(manifest["pk"]), int(manifest["epoch"])

    def put_resource(self, owner: str, name: str, permanent: bytes,
                     revocable, metadata: Optional[Dict[str, str]] = None) -> int:
        _check_name("owner id", owner)
        _check_name("resource name", name)
        revocable = [bytes(b) for b in revocable]
        with self._lock(owner):
            manifest = self._read_manifest(owner)
            names = self._resource_names(manifest)
            prefix = "res.%s." % name
            version = int(manifest.get(prefix + "version", 0)) + 1
            for key in [k for k in manifest if k.startswith(prefix)]:
                del manifest[key]
            manifest[prefix + "version"] = version
            manifest[prefix + "permanent"] = self._put_blob(permanent)
            manifest[prefix + "revocable"] = ",".join(self._put_blob(b)
                                                     for b in revocable)
            for k, v in (metadata or {}).items():
                manifest[prefix + "meta." + k] = v
            if name not in names:
                names.append(name)
            manifest["resources"] = ",".join(names)
            self._write_manifest(owner, manifest)
        return version

    def _record(self, owner: str, name: str, manifest: dict) -> ResourceRecord:
        prefix = "res.%s." % name
        if prefix + "version" not in manifest:
            raise NotFoundError("unknown resource %r" % name)
        refs = [r for r in manifest[prefix + "revocable"].split(",") if r]
        meta = {k[len(prefix) + 5:]: v for k, v in manifest.items()
                if k.startswith(prefix + "meta.")}
        return ResourceRecord(owner, name, int(manifest[prefix + "version"]),
                              meta, self._get_blob(manifest[prefix + "permanent"]),
                              tuple(self._get_blob(r) for r in refs))

    def get_resource(self, owner: str, name: str) -> ResourceRecord:
        return self._record(owner, name, self._read_manifest(owner))

    def list_resources(self, owner: str):
        manifest = self._read_manifest(owner)
        out = []
        for name in self._resource_names(manifest):
            prefix = "res.%s." % name
            meta = {k[len(prefix) + 5:]: v for k, v in manifest.items()
                    if k.startswith(prefix + "meta.")}
            out.append((name, int(manifest[prefix + "version"]), meta))
        return out

    def swap_revocable(self, owner: str, expected_epoch: int, pk_bytes: bytes,
                       replacements: Dict[str, list]) -> int:
        """Atomically install refreshed ciphertexts and bump the epoch."""
        with self._lock(owner):
            manifest = self._read_manifest(owner)
            if int(manifest["epoch"]) != expected_epoch:
                raise ConflictError("epoch moved (expected %d, found %s)"
                                    % (expected_epoch, manifest["epoch"]))
            names = self._resource_names(manifest)
            for name in replacements:
                if name not in names:
                    raise NotFoundError("unknown resource %r" % name)
            manifest["epoch"] = expected_epoch + 1
            manifest["pk"] = self._put_blob(pk_bytes)
            for name, blobs in replacements.items():
                manifest["res.%s.revocable" % name] = ",".join(
                    self._put_blob(bytes(b)) for b in blobs)
            self._write_manifest(owner, manifest)
        return expected_epoch + 1

    # mailboxes

    def _mailbox_dir(self, recipient: str) -> Path:
        _check_name("recipient", recipient)
        return self.root / "mailbox" / recipient

    def mailbox_post(self, recipient: str, payload: bytes):
        if len(payload) > MAX_PAYLOAD:
            raise RepositoryError("message exceeds size limit")
        box = self._mailbox_dir(recipient)
        box.mkdir(parents=True, exist_ok=True)
        with self._lock("mailbox/" + recipient):
            existing = sorted(box.glob("*.msg"))
            seq = int(existing[-1].stem) + 1 if existing else 0
            tmp = box / (".%010d.tmp" % seq)
            tmp.write_bytes(payload)
            os.replace(tmp, box / ("%010d.msg" % seq))

    def mailbox_fetch(self, recipient: str):
        """Drain the mailbox in FIFO order; fetched messages are deleted."""
        box = self._mailbox_dir(recipient)
        if not box.is_dir():
            return []
        out = []
        with self._lock("mailbox/" + recipient):
            for path in sorted(box.glob("*.msg")):
                out.append(path.read_bytes())
                path.unlink()
        return out


def audit_stored_tags(store: RepositoryStore):
    """Envelope tags visible in non-mailbox storage (custodian's view)."""
    tags = set()
    for path in (store.root / "blobs").iterdir():
        data = path.read_bytes()
        if data[:4] == wire.MAGIC and len(data) > 5 and data[4] == wire.VERSION:
            tags.add(data[5])
    return tags


# --- wire protocol ----------------------------------------------------------

def _encode_meta(meta: Dict[str, str]) -> bytes:
    return wire.dump_textmap(meta).encode()


def _decode_meta(raw: bytes) -> Dict[str, str]:
    return wire.load_textmap(raw.decode())


def _handle_request(store: RepositoryStore, opcode: int, payload: bytes):
    fields = unpack32(payload)

    def text(i):
        return fields[i].decode()

    if opcode == OP_PUT_PK:
        epoch = store.put_public_key(text(0), fields[1])
        return pack32([struct.pack(">I", epoch)])
    if opcode == OP_GET_PK:
        pk, epoch = store.get_public_key(text(0))
        return pack32([pk, struct.pack(">I", epoch)])
    if opcode == OP_PUT_RESOURCE:
        version = store.put_resource(text(0), text(1), fields[3], fields[4:],
                                     _decode_meta(fields[2]))
        return pack32([struct.pack(">I", version)])
    if opcode == OP_GET_RESOURCE:
        rec = store.get_resource(text(0), text(1))
        return pack32([struct.pack(">I", rec.version), _encode_meta(rec.metadata),
                       rec.permanent, *rec.revocable])
    if opcode == OP_LIST_RESOURCES:
        entries = store.list_resources(text(0))
        out = []
        for name, version, meta in entries:
            body = dict(meta)
            body["name"] = name
            body["version"] = version
            out.append(wire.dump_textmap(body).encode())
        return pack32(out)
    if opcode == OP_SWAP_REVOCABLE:
        (expected,) = struct.unpack(">I", fields[1])
        replacements = {}
        idx = 3
        while idx < len(fields):
            name = fields[idx].decode()
            (count,) = struct.unpack(">I", fields[idx + 1])
            blobs = fields[idx + 2:idx + 2 + count]
            if len(blobs) != count:
                raise RepositoryError("truncated swap request")
            replacements[name] = blobs
            idx += 2 + count
        epoch = store.swap_revocable(text(0), expected, fields[2], replacements)
        return pack32([struct.pack(">I", epoch)])
    if opcode == OP_MAILBOX_POST:
        store.mailbox_post(text(0), fields[1])
        return b""
    if opcode == OP_MAILBOX_FETCH:
        return pack32(store.mailbox_fetch(text(0)))
    raise RepositoryError("unknown opcode 0x%02x" % opcode)


def _recv_exact(sock, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise RepositoryError("connection closed mid-message")
        buf += chunk
    return buf


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        try:
            head = _recv_exact(self.request, 5)
            opcode = head[0]
            (length,) = struct.unpack(">I", head[1:])
            if length > MAX_PAYLOAD:
                raise RepositoryError("payload too large")
            payload = _recv_exact(self.request, length)
        except RepositoryError:
            return
        try:
            body = _handle_request(self.server.store, opcode, payload)
            status = ST_OK
        except NotFoundError as exc:
            status, body = ST_NOT_FOUND, str(exc).encode()
        except ConflictError as exc:
            status, body = ST_CONFLICT, str(exc).encode()
        except Exception as exc:
            status, body = ST_ERROR, str(exc).encode()
        self.request.sendall(bytes([status]) + struct.pack(">I", len(body)) + body)


class RepositoryServer(socketserver.ThreadingMixIn, socketserver.UnixStreamServer):
    """Serves one RepositoryStore on a Unix socket."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, store: RepositoryStore, socket_path):
        self.store = store
        path = Path(socket_path)
        if path.exists():
            path.unlink()
        super().__init__(str(path), _Handler)

    def serve_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread


class RepositoryClient:
    """Socket-backed implementation of the repository interface."""

    def __init__(self, socket_path):
        self.socket_path = str(socket_path)

    def _call(self, opcode: int, fields) -> bytes:
        payload = pack32(fields)
        with socket.socket(socket.AF_UNIX, socket.SOCK_STREAM) as sock:
            sock.connect(self.socket_path)
            sock.sendall(bytes([opcode]) + struct.pack(">I", len(payload)) + payload)
            head = _recv_exact(sock, 5)
            status = head[0]
            (length,) = struct.unpack(">I", head[1:])
            body = _recv_exact(sock, length) if length else b""
        if status == ST_OK:
            return body
        message = body.decode(errors="replace") or "repository error"
        if status == ST_NOT_FOUND:
            raise NotFoundError(message)
        if status == ST_CONFLICT:
            raise ConflictError(message)
        raise RepositoryError(message)

    def put_public_key(self, owner: str, pk_bytes: bytes) -> int:
        body = unpack32(self._call(OP_PUT_PK, [owner.encode(), pk_bytes]))
        return struct.unpack(">I", body[0])[0]

    def get_public_key(self, owner: str):
        body = unpack32(self._call(OP_GET_PK, [owner.encode()]))
        return body[0], struct.unpack(">I", body[1])[0]

    def put_resource(self, owner, name, permanent, revocable, metadata=None):
        fields = [owner.encode(), name.encode(), _encode_meta(metadata or {}),
                  permanent, *revocable]
        body = unpack32(self._call(OP_PUT_RESOURCE, fields))
        return struct.unpack(">I", body[0])[0]

    def get_resource(self, owner: str, name: str) -> ResourceRecord:
        body = unpack32(self._call(OP_GET_RESOURCE, [owner.encode(), name.encode()]))
        return ResourceRecord(owner, name, struct.unpack(">I", body[0])[0],
                              _decode_meta(body[1]), body[2], tuple(body[3:]))

    def list_resources(self, owner: str):
        out = []
        for blob in unpack32(self._call(OP_LIST_RESOURCES, [owner.encode()])):
            entry = wire.load_textmap(blob.decode())
            name = entry.pop("name")
            version = int(entry.pop("version"))
            out.append((name, version, entry))
        return out

    def swap_revocable(self, owner, expected_epoch, pk_bytes, replacements):
        fields = [owner.encode(), struct.pack(">I", expected_epoch), pk_bytes]
        for name, blobs in replacements.items():
            fields.append(name.encode())
            fields.append(struct.pack(">I", len(blobs)))
            fields.extend(blobs)
        body = unpack32(self._call(OP_SWAP_REVOCABLE, fields))
        return struct.unpack(">I", body[0])[0]

    def mailbox_post(self, recipient: str, payload: bytes):
        self._call(OP_MAILBOX_POST, [recipient.encode(), payload])

    def mailbox_fetch(self, recipient: str):
        return unpack32(self._call(OP_MAILBOX_FETCH, [recipient.encode()]))
