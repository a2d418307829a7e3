"""Scripted multi-user runs against an in-process repository.

Scenario files are line-oriented.  Blank lines and `#` comments are
skipped; every other line reads

    step <verb> <args...> expect <granted|denied|error>

with verbs enroll, link, publish, access, delegate-propagate and revoke.
Positional arguments come first, then keyword options; shell-style quoting
applies, so policy texts ride along as single tokens.  The first enroll
that carries `universe` and `dmax` options sets the defaults inherited by
later enrolls.

The runner drives real nodes over a real (temporary) repository store, so
mailbox delivery, epoch bumps and compare-and-swap all behave exactly as
they would against a served repository.  Outcomes are deterministic for a
fixed seed: each user's randomness is derived from the run seed and the
user id.
"""

from __future__ import annotations

import hashlib
import shlex
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .core import KeyPattern
from .errors import AccessDenied, DbraError
from .node import OsnNode
from .policy import ConditionUniverse, parse_policy, universe_for
from .repo import RepositoryStore

VERBS = ("enroll", "link", "publish", "access", "delegate-propagate",
         "revoke")
OUTCOMES = ("granted", "denied", "error")
_POSITIONAL = {"enroll": 1, "link": 2, "publish": 2, "access": 3,
               "delegate-propagate": 1, "revoke": 2}
_OPTIONS = {"enroll": ("universe", "dmax", "level"),
            "publish": ("content", "policy"),
            "link": ("cred", "dist", "pattern", "edge"),
            "access": ("content",),
            "delegate-propagate": (), "revoke": ()}


class ScenarioError(DbraError):
    """The script itself is malformed or references unknown users."""


@dataclass(frozen=True)
class Step:
    line_no: int
    verb: str
    positional: Tuple[str, ...]
    options: Dict[str, object]
    expect: str
    text: str


@dataclass(frozen=True)
class StepResult:
    step: Step
    actual: str
    ok: bool
    detail: str = ""


@dataclass
class Transcript:
    results: List[StepResult] = field(default_factory=list)
    state_dump: str = ""

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)


def _parse_line(line_no: int, line: str) -> Optional[Step]:
    tokens = shlex.split(line, comments=True)
    if not tokens:
        return None
    if tokens[0] != "step" or len(tokens) < 4:
        raise ScenarioError("line %d: expected 'step <verb> ... expect "
                            "<outcome>'" % line_no)
    verb = tokens[1]
    if verb not in VERBS:
        raise ScenarioError("line %d: unknown verb %r" % (line_no, verb))
    if tokens[-2] != "expect" or tokens[-1] not in OUTCOMES:
        raise ScenarioError("line %d: missing or bad expect clause" % line_no)
    body = tokens[2:-2]
    n_pos = _POSITIONAL[verb]
    if len(body) < n_pos:
        raise ScenarioError("line %d: %s needs %d positional arguments"
                            % (line_no, verb, n_pos))
    positional = tuple(body[:n_pos])
    options: Dict[str, object] = {}
    rest = body[n_pos:]
    i = 0
    while i < len(rest):
        key = rest[i]
        if key not in _OPTIONS[verb] or i + 1 >= len(rest):
            raise ScenarioError("line %d: bad option %r for %s"
                                % (line_no, key, verb))
        if key == "cred":
            options.setdefault("cred", []).append(rest[i + 1])
        else:
            options[key] = rest[i + 1]
        i += 2
    return Step(line_no, verb, positional, options, tokens[-1], line.strip())


def parse_scenario(text: str) -> List[Step]:
    steps = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        step = _parse_line(line_no, line)
        if step is not None:
            steps.append(step)
    if not steps:
        raise ScenarioError("scenario has no steps")
    return steps


def _literal(token: str):
    try:
        return int(token)
    except ValueError:
        return token


def _credentials(tokens) -> dict:
    creds = {}
    for token in tokens:
        name, sep, value = token.partition("=")
        if not sep:
            raise ScenarioError("credential %r is not name=value" % token)
        creds[name] = _literal(value)
    return creds


def _pattern_values(token: str):
    return tuple(None if part in ("*", "?") else _literal(part)
                 for part in token.split(","))


class _World:
    def __init__(self, root: Path, seed: bytes, level: int):
        self.store = RepositoryStore(root)
        self.seed = seed
        self.level = level
        self.nodes: Dict[str, OsnNode] = {}
        self.universe: Optional[ConditionUniverse] = None

    def node(self, user: str) -> OsnNode:
        if user not in self.nodes:
            raise ScenarioError("user %r is not enrolled" % user)
        return self.nodes[user]

    def run_step(self, step: Step) -> str:
        handler = getattr(self, "_do_" + step.verb.replace("-", "_"))
        return handler(step)

    def _do_enroll(self, step: Step) -> str:
        (user,) = step.positional
        if "universe" in step.options:
            policies = [parse_policy(str(step.options["universe"]))]
            self.universe = universe_for(policies,
                                         int(step.options.get("dmax", 3)))
        if self.universe is None:
            raise ScenarioError("first enroll must declare universe and dmax")
        seed = hashlib.shake_256(self.seed + b"/" + user.encode()).digest(32)
        self.nodes[user] = OsnNode.enroll(
            self.store, user, universe=self.universe,
            level=int(step.options.get("level", self.level)), seed=seed)
        return ""

    def _do_publish(self, step: Step) -> str:
        owner, name = step.positional
        content = str(step.options.get("content", "content of %s" % name))
        policy = step.options.get("policy")
        if policy is None:
            raise ScenarioError("publish needs a policy option")
        self.node(owner).publish(name, content.encode(), str(policy))
        return ""

    def _do_link(self, step: Step) -> str:
        owner, peer = step.positional
        node = self.node(owner)
        self.node(peer)
        distance = int(step.options.get("dist", 1))
        pattern = None
        if "pattern" in step.options:
            pattern = KeyPattern(node.pk.schema,
                                 _pattern_values(str(step.options["pattern"])),
                                 distance)
        creds = _credentials(step.options.get("cred", []))
        node.create_link(peer, credentials=creds, distance=distance,
                         pattern=pattern,
                         edge=int(step.options.get("edge", 1)))
        return ""

    def _do_delegate_propagate(self, step: Step) -> str:
        report = self.node(step.positional[0]).receive_and_propagate()
        return "stored=%d forwarded=%d dropped=%d" % (
            report.stored, report.forwarded, report.dropped)

    def _do_access(self, step: Step) -> str:
        user, owner, name = step.positional
        plaintext = self.node(user).access(owner, name)
        if "content" in step.options:
            wanted = str(step.options["content"]).encode()
            if plaintext != wanted:
                raise _ContentMismatch(wanted, plaintext)
        return plaintext.decode(errors="replace")

    def _do_revoke(self, step: Step) -> str:
        owner, peer = step.positional
        return "epoch=%d" % self.node(owner).revoke_link(peer)

    def dump(self) -> str:
        lines = []
        for user in sorted(self.nodes):
            node = self.nodes[user]
            lines.append("user %s: epoch=%d ring=%d links=%s issued=%s"
                         % (user, node.epoch, len(node.key_ring),
                            sorted(node.links), sorted(node.issued)))
            for name, _, _ in self.store.list_resources(user):
                record = self.store.get_resource(user, name)
                lines.append("  resource %s: v%d, %d revocable"
                             % (name, record.version, len(record.revocable)))
        return "\n".join(lines)


class _ContentMismatch(Exception):
    def __init__(self, wanted: bytes, got: bytes):
        super().__init__()
        self.wanted = wanted
        self.got = got


def run_scenario(steps, seed: bytes = b"dbra-scenario",
                 level: int = 128) -> Transcript:
    """Execute steps in order; stop recording details after first divergence."""
    transcript = Transcript()
    with tempfile.TemporaryDirectory(prefix="dbra-scn-") as tmp:
        world = _World(Path(tmp), seed, level)
        for step in steps:
            try:
                detail = world.run_step(step)
                actual = "granted"
            except AccessDenied:
                actual, detail = "denied", ""
            except _ContentMismatch as exc:
                result = StepResult(step, "granted", False,
                                    "content mismatch: wanted %r, got %r"
                                    % (exc.wanted, exc.got))
                transcript.results.append(result)
                transcript.state_dump = world.dump()
                continue
            except ScenarioError:
                raise
            except (DbraError, ValueError) as exc:
                actual, detail = "error", str(exc)
            ok = actual == step.expect
            transcript.results.append(StepResult(step, actual, ok, detail))
            if not ok and not transcript.state_dump:
                transcript.state_dump = world.dump()
    return transcript


def run_scenario_text(text: str, seed: bytes = b"dbra-scenario",
                      level: int = 128) -> Transcript:
    return run_scenario(parse_scenario(text), seed, level)


def format_transcript(transcript: Transcript) -> str:
    lines = []
    for result in transcript.results:
        mark = "ok  " if result.ok else "FAIL"
        lines.append("%s line %d: %s" % (mark, result.step.line_no,
                                         result.step.text))
        if not result.ok:
            lines.append("     expected %s, got %s%s"
                         % (result.step.expect, result.actual,
                            " (%s)" % result.detail if result.detail else ""))
    if not transcript.ok and transcript.state_dump:
        lines.append("state at first divergence:")
        lines.extend("  " + l for l in transcript.state_dump.splitlines())
    lines.append("%d/%d steps as expected"
                 % (sum(r.ok for r in transcript.results),
                    len(transcript.results)))
    return "\n".join(lines) + "\n"
