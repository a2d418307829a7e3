"""Command-line front end.

State lives under a home directory (default ~/.dbra): a `config` text map
naming the repository (directory path or Unix socket) and a private
`users/` directory holding one state blob per enrolled user.  State files
carry master key material, so the directory is created 0700 and the files
0600.

Exit codes: 0 success, 1 I/O or protocol failure, 2 usage, 3 access
denied.  Denials print exactly "access denied" with no cause; everything
the caller may want to parse is emitted as a canonical text map.
"""

import argparse
import os
import sys
from pathlib import Path

from . import bench as bench_mod
from . import scenario as scenario_mod
from .errors import AccessDenied, DbraError
from .node import OsnNode
from .policy import parse_policy, universe_for
from .repo import RepositoryClient, RepositoryServer, RepositoryStore
from .wire import dump_textmap, load_textmap

EX_OK = 0
EX_FAIL = 1
EX_USAGE = 2
EX_DENIED = 3


class CliError(Exception):
    pass


def _home(args) -> Path:
    return Path(args.home).expanduser()


def _read_config(home: Path) -> dict:
    path = home / "config"
    try:
        return load_textmap(path.read_text())
    except FileNotFoundError:
        raise CliError("no configuration at %s; run setup first" % path)


def _open_repo(config: dict):
    if "socket" in config:
        return RepositoryClient(config["socket"])
    return RepositoryStore(config["repo"])


def _state_path(home: Path, user: str) -> Path:
    return home / "users" / ("%s.state" % user)


def _load_node(home: Path, repo, user: str) -> OsnNode:
    path = _state_path(home, user)
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise CliError("user %r is not enrolled here" % user)
    return OsnNode.load(repo, raw)


def _save_node(home: Path, node: OsnNode) -> None:
    users = home / "users"
    users.mkdir(parents=True, exist_ok=True)
    os.chmod(users, 0o700)
    path = _state_path(home, node.user_id)
    tmp = path.with_suffix(".tmp")
    tmp.write_bytes(node.save())
    os.chmod(tmp, 0o600)
    os.replace(tmp, path)


def _emit(mapping: dict) -> None:
    sys.stdout.write(dump_textmap(mapping))


def _parse_kv(pairs) -> dict:
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise CliError("expected key=value, got %r" % item)
        out[key] = value
    return out


# --- subcommand bodies ------------------------------------------------------

def _cmd_setup(args) -> int:
    home = _home(args)
    home.mkdir(parents=True, exist_ok=True)
    os.chmod(home, 0o700)
    config = {}
    if args.socket:
        config["socket"] = args.socket
    else:
        store_root = Path(args.repo).expanduser()
        RepositoryStore(store_root)
        config["repo"] = str(store_root)
    config["level"] = str(args.level)
    (home / "config").write_text(dump_textmap(config))
    _emit({"home": str(home), **config})
    return EX_OK


def _cmd_enroll(args) -> int:
    home = _home(args)
    config = _read_config(home)
    repo = _open_repo(config)
    policy = parse_policy(args.universe)
    universe = universe_for([policy], args.dmax)
    seed = bytes.fromhex(args.seed) if args.seed else None
    node = OsnNode.enroll(repo, args.user, universe=universe,
                          level=int(config.get("level", 128)), seed=seed)
    _save_node(home, node)
    _emit({"user": node.user_id, "epoch": node.epoch,
           "conditions": len(universe.conditions),
           "d_max": universe.d_max})
    return EX_OK


def _cmd_publish(args) -> int:
    home = _home(args)
    repo = _open_repo(_read_config(home))
    node = _load_node(home, repo, args.user)
    content = Path(args.file).read_bytes() if args.file != "-" \
        else sys.stdin.buffer.read()
    version = node.publish(args.name, content, policy=args.policy,
                           metadata=_parse_kv(args.meta))
    _save_node(home, node)
    _emit({"owner": node.user_id, "name": args.name, "version": version,
           "bytes": len(content)})
    return EX_OK


def _cmd_link(args) -> int:
    home = _home(args)
    repo = _open_repo(_read_config(home))
    node = _load_node(home, repo, args.user)
    credentials = {k: _literal(v) for k, v in _parse_kv(args.cred).items()}
    node.create_link(args.peer, credentials=credentials,
                     distance=args.dist, edge=args.edge)
    _save_node(home, node)
    _emit({"user": node.user_id, "peer": args.peer,
           "distance": args.dist, "edge": args.edge})
    return EX_OK


def _literal(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def _cmd_propagate(args) -> int:
    home = _home(args)
    repo = _open_repo(_read_config(home))
    node = _load_node(home, repo, args.user)
    report = node.receive_and_propagate()
    _save_node(home, node)
    _emit({"user": node.user_id, "stored": report.stored,
           "forwarded": report.forwarded, "dropped": report.dropped})
    return EX_OK


def _cmd_revoke(args) -> int:
    home = _home(args)
    repo = _open_repo(_read_config(home))
    node = _load_node(home, repo, args.user)
    epoch = node.revoke_link(args.peer)
    _save_node(home, node)
    _emit({"user": node.user_id, "peer": args.peer, "epoch": epoch})
    return EX_OK


def _cmd_access(args) -> int:
    home = _home(args)
    repo = _open_repo(_read_config(home))
    node = _load_node(home, repo, args.user)
    content = node.access(args.owner, args.name)
    if args.out and args.out != "-":
        Path(args.out).write_bytes(content)
    else:
        sys.stdout.buffer.write(content)
    return EX_OK


def _cmd_repo_serve(args) -> int:
    store = RepositoryStore(Path(args.root).expanduser())
    server = RepositoryServer(store, args.socket)
    sys.stderr.write("serving %s on %s\n" % (args.root, args.socket))
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EX_OK


def _cmd_bench(args) -> int:
    reports = []
    if args.axis in ("size", "both"):
        reports.append(bench_mod.measure_publish_size(
            repetitions=args.reps, inner=args.inner, rounds=args.rounds))
    if args.axis in ("width", "both"):
        reports.append(bench_mod.measure_encrypt_width(
            repetitions=args.reps, rounds=args.rounds))
    sys.stdout.write(bench_mod.render_reports(reports))
    return EX_OK


def _cmd_scenario(args) -> int:
    text = Path(args.script).read_text()
    seed = bytes.fromhex(args.seed) if args.seed else b"dbra-scenario"
    transcript = scenario_mod.run_scenario_text(text, seed=seed)
    sys.stdout.write(scenario_mod.format_transcript(transcript))
    return EX_OK if transcript.ok else EX_FAIL


# --- argument wiring --------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dbra",
        description="attribute- and distance-gated sharing over an "
                    "untrusted repository")
    parser.add_argument("--home", default="~/.dbra",
                        help="state directory (default ~/.dbra)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("setup", help="write configuration, create the store")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--repo", help="embedded store directory")
    g.add_argument("--socket", help="repository service socket")
    p.add_argument("--level", type=int, default=128, choices=(128, 192))
    p.set_defaults(func=_cmd_setup)

    p = sub.add_parser("enroll", help="create a user and post its public key")
    p.add_argument("user")
    p.add_argument("--universe", required=True,
                   help="policy text listing every condition the user "
                        "will ever reference")
    p.add_argument("--dmax", type=int, default=3)
    p.add_argument("--seed", help="hex seed for deterministic keys")
    p.set_defaults(func=_cmd_enroll)

    p = sub.add_parser("publish", help="encrypt and post a resource")
    p.add_argument("user")
    p.add_argument("name")
    p.add_argument("file", help="input path, or - for stdin")
    p.add_argument("--policy", required=True)
    p.add_argument("--meta", action="append", metavar="K=V")
    p.set_defaults(func=_cmd_publish)

    p = sub.add_parser("link", help="issue a key to a peer")
    p.add_argument("user")
    p.add_argument("peer")
    p.add_argument("--cred", action="append", metavar="K=V",
                   help="peer credential; repeatable")
    p.add_argument("--dist", type=int, default=1)
    p.add_argument("--edge", type=int, default=1)
    p.set_defaults(func=_cmd_link)

    p = sub.add_parser("propagate", help="drain the mailbox, forward keys")
    p.add_argument("user")
    p.set_defaults(func=_cmd_propagate)

    p = sub.add_parser("revoke", help="cut a link and refresh ciphertexts")
    p.add_argument("user")
    p.add_argument("peer")
    p.set_defaults(func=_cmd_revoke)

    p = sub.add_parser("access", help="fetch and decrypt a resource")
    p.add_argument("user")
    p.add_argument("owner")
    p.add_argument("name")
    p.add_argument("-o", "--out", help="output path instead of stdout")
    p.set_defaults(func=_cmd_access)

    p = sub.add_parser("repo-serve", help="run the repository service")
    p.add_argument("--root", required=True)
    p.add_argument("--socket", required=True)
    p.set_defaults(func=_cmd_repo_serve)

    p = sub.add_parser("bench", help="measure publish/encrypt scaling")
    p.add_argument("--axis", choices=("size", "width", "both"),
                   default="both")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--inner", type=int, default=40)
    p.add_argument("--rounds", type=int, default=3)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("scenario", help="run a scripted fixture")
    p.add_argument("script")
    p.add_argument("--seed", help="hex seed")
    p.set_defaults(func=_cmd_scenario)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AccessDenied:
        sys.stdout.write("access denied\n")
        return EX_DENIED
    except CliError as exc:
        sys.stderr.write("dbra: %s\n" % exc)
        return EX_FAIL
    except DbraError as exc:
        sys.stderr.write("dbra: %s\n" % exc)
        return EX_FAIL
    except OSError as exc:
        sys.stderr.write("dbra: %s\n" % exc)
        return EX_FAIL


if __name__ == "__main__":
    sys.exit(main())
