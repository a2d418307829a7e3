"""CLI behavior through in-process main(): exit codes, output, file modes."""

import os
import stat

import pytest

from dbra.cli import EX_DENIED, EX_FAIL, EX_OK, EX_USAGE, main
from dbra.wire import load_textmap

POLICY = 'team = "core", dist(u, 2)'


@pytest.fixture()
def home(tmp_path):
    """Configured home with an embedded store."""
    home = tmp_path / "home"
    rc = main(["--home", str(home), "setup", "--repo",
               str(tmp_path / "store")])
    assert rc == EX_OK
    return home


def run(home, *argv):
    return main(["--home", str(home), *argv])


def enroll(home, user):
    assert run(home, "enroll", user, "--universe", POLICY, "--dmax", "2") == EX_OK


def test_setup_writes_config(tmp_path, capsys):
    home = tmp_path / "home"
    rc = main(["--home", str(home), "setup", "--repo", str(tmp_path / "st"),
               "--level", "192"])
    assert rc == EX_OK
    out = load_textmap(capsys.readouterr().out)
    assert out["level"] == "192"
    assert out["repo"] == str(tmp_path / "st")
    config = load_textmap((home / "config").read_text())
    assert config["level"] == "192"
    assert (tmp_path / "st" / "blobs").is_dir()


def test_setup_requires_exactly_one_backend(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--home", str(tmp_path / "h"), "setup"])
    assert exc.value.code == EX_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["--home", str(tmp_path / "h"), "setup", "--repo", "a",
              "--socket", "b"])
    assert exc.value.code == EX_USAGE


def test_usage_errors_exit_two(capsys):
    for argv in (["frobnicate"], [], ["enroll"], ["setup", "--repo", "r",
                                                  "--level", "96"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == EX_USAGE


def test_enroll_emits_text_map_and_restricts_modes(home, capsys):
    enroll(home, "alice")
    out = load_textmap(capsys.readouterr().out)
    assert out == {"user": "alice", "epoch": "0", "conditions": "1",
                   "d_max": "2"}
    users = home / "users"
    assert stat.S_IMODE(os.stat(users).st_mode) == 0o700
    assert stat.S_IMODE(os.stat(users / "alice.state").st_mode) == 0o600


def test_publish_link_propagate_access_flow(home, tmp_path, capsys):
    enroll(home, "alice")
    enroll(home, "bob")
    src = tmp_path / "doc.txt"
    src.write_bytes(b"the document body")
    capsys.readouterr()
    assert run(home, "publish", "alice", "doc", str(src),
               "--policy", POLICY, "--meta", "title=Doc") == EX_OK
    out = load_textmap(capsys.readouterr().out)
    assert out["version"] == "1" and out["bytes"] == "17"

    assert run(home, "link", "alice", "bob", "--cred", "team=core") == EX_OK
    capsys.readouterr()
    assert run(home, "propagate", "bob") == EX_OK
    out = load_textmap(capsys.readouterr().out)
    assert out["stored"] == "1"

    dest = tmp_path / "out.bin"
    assert run(home, "access", "bob", "alice", "doc", "-o", str(dest)) == EX_OK
    assert dest.read_bytes() == b"the document body"
    capsys.readouterr()
    assert run(home, "access", "bob", "alice", "doc") == EX_OK
    assert capsys.readouterr().out == "the document body"


def test_publish_from_stdin(home, tmp_path, capsys, monkeypatch):
    enroll(home, "alice")
    capsys.readouterr()

    class FakeStdin:
        buffer = __import__("io").BytesIO(b"piped body")

    monkeypatch.setattr("sys.stdin", FakeStdin())
    assert run(home, "publish", "alice", "piped", "-",
               "--policy", POLICY) == EX_OK
    out = load_textmap(capsys.readouterr().out)
    assert out["bytes"] == "10"
    assert run(home, "access", "alice", "alice", "piped") == EX_OK
    assert capsys.readouterr().out == "piped body"


def test_denied_access_prints_exactly_and_exits_three(home, tmp_path, capsys):
    enroll(home, "alice")
    enroll(home, "eve")
    src = tmp_path / "s.txt"
    src.write_bytes(b"secret")
    run(home, "publish", "alice", "doc", str(src), "--policy", POLICY)
    capsys.readouterr()
    rc = run(home, "access", "eve", "alice", "doc")
    captured = capsys.readouterr()
    assert rc == EX_DENIED
    assert captured.out == "access denied\n"
    assert captured.err == ""


def test_revoke_then_denied(home, tmp_path, capsys):
    enroll(home, "alice")
    enroll(home, "bob")
    src = tmp_path / "s.txt"
    src.write_bytes(b"steady state")
    run(home, "publish", "alice", "doc", str(src), "--policy", POLICY)
    run(home, "link", "alice", "bob", "--cred", "team=core")
    run(home, "propagate", "bob")
    capsys.readouterr()
    assert run(home, "access", "bob", "alice", "doc") == EX_OK
    capsys.readouterr()
    assert run(home, "revoke", "alice", "bob") == EX_OK
    out = load_textmap(capsys.readouterr().out)
    assert out["epoch"] == "1"
    rc = run(home, "access", "bob", "alice", "doc")
    captured = capsys.readouterr()
    assert rc == EX_DENIED and captured.out == "access denied\n"


def test_io_failures_exit_one(home, tmp_path, capsys):
    # unknown user state
    assert run(home, "publish", "ghost", "doc", "x", "--policy", POLICY) == EX_FAIL
    assert "not enrolled" in capsys.readouterr().err
    # missing config
    assert main(["--home", str(tmp_path / "nohome"), "enroll", "u",
                 "--universe", POLICY]) == EX_FAIL
    assert "run setup first" in capsys.readouterr().err
    # missing input file
    enroll(home, "alice")
    capsys.readouterr()
    assert run(home, "publish", "alice", "doc", str(tmp_path / "missing"),
               "--policy", POLICY) == EX_FAIL
    # malformed credential
    assert run(home, "link", "alice", "bob", "--cred", "nosign") == EX_FAIL
    # revoking a link that never existed
    assert run(home, "revoke", "alice", "stranger") == EX_FAIL


def test_bad_policy_text_exits_one(home, capsys):
    enroll(home, "alice")
    capsys.readouterr()
    assert run(home, "enroll", "mallory", "--universe", "=== nope") == EX_FAIL
    assert "dbra:" in capsys.readouterr().err


def test_scenario_subcommand(home, tmp_path, capsys):
    script = tmp_path / "s.scn"
    script.write_text(
        "step enroll o universe 'a = 1' dmax 1 expect granted\n"
        "step publish o doc content 'hi' policy 'a = 1' expect granted\n"
        "step access o o doc content 'hi' expect granted\n")
    assert run(home, "scenario", str(script)) == EX_OK
    assert "3/3 steps as expected" in capsys.readouterr().out
    script.write_text(
        "step enroll o universe 'a = 1' dmax 1 expect denied\n")
    assert run(home, "scenario", str(script)) == EX_FAIL
    assert "0/1 steps as expected" in capsys.readouterr().out
