"""Access policy language: parsing, evaluation, and compilation.

Concrete syntax (whitespace-insensitive):

    policy := rule (";" rule)*
    rule   := cond ("," cond)*
    cond   := ident pred literal | "dist" "(" "u" "," int ")"
    pred   := "=" | "<=" | "<" | ">" | ">=" | "!="

A policy is a disjunction of rules; a rule is a conjunction of attribute
conditions plus an optional social-distance bound.  Literals are integers
or double-quoted strings.

Compilation targets a condition universe: the owner's ordered list of
attribute conditions, each of which becomes one binary dimension of the
induced schema.  A rule compiles to the vector selecting exactly its
conditions, with the rule's distance bound (or d_max when absent).  Key
patterns come from credentials: a satisfied condition becomes a wildcard,
an unsatisfied one pins the dimension to 0, so the key opens precisely the
rules whose required conditions the holder satisfies.  Ordered predicates
are evaluated here, at issuance time, never inside the ciphertext.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, Tuple, Union

from .core import AttributeSchema, KeyPattern, PolicyPair
from .errors import PolicyError, PolicySyntaxError, PolicyTypeError

Literal = Union[int, str]

PREDICATES = ("=", "<=", "<", ">", ">=", "!=")


@dataclass(frozen=True)
class AttributeCondition:
    attribute: str
    predicate: str
    value: Literal

    def __post_init__(self):
        if self.predicate not in PREDICATES:
            raise PolicyError("unknown predicate %r" % self.predicate)

    def __str__(self):
        if isinstance(self.value, str):
            lit = '"%s"' % (self.value.replace("\\", "\\\\")
                            .replace('"', '\\"').replace("\n", "\\n"))
        else:
            lit = str(self.value)
        return "%s %s %s" % (self.attribute, self.predicate, lit)


@dataclass(frozen=True)
class DistanceCondition:
    bound: int

    def __str__(self):
        return "dist(u, %d)" % self.bound


Condition = Union[AttributeCondition, DistanceCondition]


@dataclass(frozen=True)
class PolicyRule:
    conditions: Tuple[Condition, ...]

    def attribute_conditions(self) -> Tuple[AttributeCondition, ...]:
        return tuple(c for c in self.conditions if isinstance(c, AttributeCondition))

    def distance_bound(self) -> Union[int, None]:
        bounds = [c.bound for c in self.conditions if isinstance(c, DistanceCondition)]
        return min(bounds) if bounds else None

    def __str__(self):
        return ", ".join(str(c) for c in self.conditions)


@dataclass(frozen=True)
class Policy:
    rules: Tuple[PolicyRule, ...]

    def __str__(self):
        return "; ".join(str(r) for r in self.rules)


# --- parser -----------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<pred><=|>=|!=|=|<|>)
  | (?P<int>-?\d+)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<punct>[;,()])
""", re.VERBOSE)


class _Tokens:
    def __init__(self, text: str):
        self.items = []
        line, col = 1, 1
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                raise PolicySyntaxError("unexpected character %r" % text[pos],
                                        line, col)
            kind = m.lastgroup
            value = m.group()
            if kind != "ws":
                self.items.append((kind, value, line, col))
            for ch in value:
                if ch == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
            pos = m.end()
        self.items.append(("eof", "", line, col))
        self.idx = 0

    def peek(self):
        return self.items[self.idx]

    def next(self):
        tok = self.items[self.idx]
        if tok[0] != "eof":
            self.idx += 1
        return tok

    def expect(self, kind: str, value: Union[str, None] = None):
        tok = self.next()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value if value is not None else kind
            raise PolicySyntaxError("expected %s, found %r" % (want, tok[1] or "end"),
                                    tok[2], tok[3])
        return tok


def _unquote(raw: str, line: int, col: int) -> str:
    out = []
    it = iter(raw[1:-1])
    for ch in it:
        if ch != "\\":
            out.append(ch)
            continue
        nxt = next(it, None)
        if nxt in ('"', "\\"):
            out.append(nxt)
        elif nxt == "n":
            out.append("\n")
        else:
            raise PolicySyntaxError("bad string escape", line, col)
    return "".join(out)


def _parse_condition(toks: _Tokens) -> Condition:
    kind, value, line, col = toks.next()
    if kind != "ident":
        raise PolicySyntaxError("expected condition, found %r" % (value or "end"),
                                line, col)
    if value == "dist" and toks.peek()[1] == "(":
        toks.expect("punct", "(")
        toks.expect("ident", "u")
        toks.expect("punct", ",")
        num = toks.expect("int")
        toks.expect("punct", ")")
        bound = int(num[1])
        if bound < 1:
            raise PolicySyntaxError("distance bound must be positive",
                                    num[2], num[3])
        return DistanceCondition(bound)
    pred = toks.expect("pred")
    kind, lit, lline, lcol = toks.next()
    if kind == "int":
        return AttributeCondition(value, pred[1], int(lit))
    if kind == "str":
        return AttributeCondition(value, pred[1], _unquote(lit, lline, lcol))
    raise PolicySyntaxError("expected literal, found %r" % (lit or "end"),
                            lline, lcol)


def parse_policy(text: str) -> Policy:
    toks = _Tokens(text)
    rules = []
    while True:
        conds = [_parse_condition(toks)]
        while toks.peek()[1] == ",":
            toks.next()
            conds.append(_parse_condition(toks))
        rules.append(PolicyRule(tuple(conds)))
        tok = toks.next()
        if tok[0] == "eof":
            break
        if tok[1] != ";":
            raise PolicySyntaxError("expected ';' or end, found %r" % tok[1],
                                    tok[2], tok[3])
    return Policy(tuple(rules))


def print_policy(policy: Policy) -> str:
    return str(policy)


# --- evaluation -------------------------------------------------------------

def evaluate_condition(cond: AttributeCondition, credentials: Dict[str, Literal]) -> bool:
    """Truth of one condition against a credential map; absent attribute is False."""
    if cond.attribute not in credentials:
        return False
    held = credentials[cond.attribute]
    want = cond.value
    if isinstance(held, bool) or isinstance(want, bool):
        raise PolicyTypeError("boolean credentials are not supported")
    if isinstance(held, str) != isinstance(want, str):
        raise PolicyTypeError("type mismatch on %r" % cond.attribute)
    if cond.predicate == "=":
        return held == want
    if cond.predicate == "!=":
        return held != want
    if isinstance(held, str):
        raise PolicyTypeError("ordered predicate on string attribute %r"
                              % cond.attribute)
    return {"<": held < want, "<=": held <= want,
            ">": held > want, ">=": held >= want}[cond.predicate]


# --- condition universes and compilation ------------------------------------

@dataclass(frozen=True)
class ConditionUniverse:
    """Owner's ordered condition list; induces one binary dimension each."""

    conditions: Tuple[AttributeCondition, ...]
    d_max: int

    def __post_init__(self):
        if len(set(self.conditions)) != len(self.conditions):
            raise PolicyError("duplicate conditions in universe")
        if not self.conditions:
            raise PolicyError("universe needs at least one condition")

    @property
    def schema(self) -> AttributeSchema:
        dims = tuple(("c%d" % j, (0, 1)) for j in range(len(self.conditions)))
        return AttributeSchema(dims, self.d_max)


def universe_for(policies, d_max: int) -> ConditionUniverse:
    """Universe covering every attribute condition used by the given policies."""
    seen = []
    for pol in policies:
        for rule in pol.rules:
            for cond in rule.attribute_conditions():
                if cond not in seen:
                    seen.append(cond)
    return ConditionUniverse(tuple(seen), d_max)


def compile_policy(policy: Policy, universe: ConditionUniverse):
    """One policy pair per rule over the universe's induced schema."""
    schema = universe.schema
    pairs = []
    for rule in policy.rules:
        wanted = rule.attribute_conditions()
        for cond in wanted:
            if cond not in universe.conditions:
                raise PolicyError("condition %s outside the universe" % cond)
        x = tuple(1 if cond in wanted else 0 for cond in universe.conditions)
        bound = rule.distance_bound()
        d = universe.d_max if bound is None else bound
        if d > universe.d_max:
            raise PolicyError("distance bound %d exceeds d_max" % d)
        pairs.append(PolicyPair(schema, x, d))
    return pairs


def derive_key_pattern(universe: ConditionUniverse,
                       credentials: Dict[str, Literal],
                       distance: int) -> KeyPattern:
    """Wildcard satisfied conditions, pin unsatisfied ones to 0."""
    pattern = tuple(None if evaluate_condition(cond, credentials) else 0
                    for cond in universe.conditions)
    return KeyPattern(universe.schema, pattern, distance)
