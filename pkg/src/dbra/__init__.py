"""Attribute- and distance-gated sharing over untrusted storage.

Layered construction: a hidden-vector layer decides who (attribute
pattern with wildcards), a prefix-delegatable layer decides how far
(social distance, with delegation extending distance and batch
revocation rotating it away).  `core` composes the two into a single
encrypt/derive/delegate/revoke API, `node` runs the owner-side
protocol against a `repo` store, and `scenario`/`bench`/`cli` wrap it
for scripted and interactive use.
"""

from .core import (AttributeSchema, DbraCiphertext, DbraKey,
                   DbraMasterKey, DbraPublicKey, KeyPattern, PolicyPair,
                   decrypt, delegate, derive, encrypt, match_oracle,
                   revoke, setup)
from .errors import (AccessDenied, ConflictError, DbraError, DecodeError,
                     EpochMismatch, NotFoundError, PolicyError,
                     RepositoryError, SchemaError)
from .groups import GroupContext, group_setup
from .node import OsnNode
from .oracle import brute_match, brute_oracle
from .policy import (ConditionUniverse, Policy, compile_policy,
                     derive_key_pattern, parse_policy, universe_for)
from .repo import RepositoryClient, RepositoryServer, RepositoryStore
from .scenario import run_scenario, run_scenario_text

__version__ = "0.1.0"

__all__ = [
    "AccessDenied", "AttributeSchema", "ConditionUniverse", "ConflictError",
    "DbraCiphertext", "DbraError", "DbraKey", "DbraMasterKey",
    "DbraPublicKey", "DecodeError", "EpochMismatch", "GroupContext",
    "KeyPattern", "NotFoundError", "OsnNode", "Policy", "PolicyError",
    "PolicyPair", "RepositoryClient", "RepositoryServer", "RepositoryStore",
    "RepositoryError", "SchemaError",
    "brute_match", "brute_oracle", "compile_policy", "decrypt",
    "delegate", "derive", "derive_key_pattern", "encrypt", "group_setup",
    "match_oracle", "parse_policy", "revoke", "run_scenario",
    "run_scenario_text", "setup", "universe_for",
]
