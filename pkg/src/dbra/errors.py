"""Exception hierarchy shared across the package.

AccessDenied is deliberately stateless: every failed decryption raises the
same value no matter which layer refused, so callers (and attackers watching
them) cannot distinguish a pattern mismatch from a distance bound from a
revoked epoch.
"""

from __future__ import annotations


class DbraError(Exception):
    """Base class for all library errors."""


class AccessDenied(DbraError):
    """Uniform decryption failure; carries no cause information."""

    def __init__(self):
        super().__init__()

    def __str__(self):
        return "access denied"

    def __repr__(self):
        return "AccessDenied()"

    def __eq__(self, other):
        return type(other) is AccessDenied

    def __hash__(self):
        return hash(AccessDenied)


class SlotMismatch(DbraError):
    """A group operation needed a source-element slot that is absent."""


class DecodeError(DbraError):
    """A serialized object failed structural or range validation."""


class SchemaError(DbraError):
    """Attribute vector, pattern, or symbol inconsistent with the schema."""


class DepthError(DbraError):
    """Identity or distance outside the bounds fixed at setup."""


class EpochMismatch(DbraError):
    """Revocation inputs span different epochs."""


class PolicyError(DbraError):
    """Base for policy language failures."""


class PolicySyntaxError(PolicyError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__("%s (line %d, column %d)" % (message, line, column))
        self.line = line
        self.column = column


class PolicyTypeError(PolicyError):
    """Predicate applied across incompatible literal/credential types."""


class RepositoryError(DbraError):
    """Base for repository failures (I/O, protocol, payload limits)."""


class NotFoundError(RepositoryError):
    """Requested owner, resource, or blob does not exist."""


class ConflictError(RepositoryError):
    """Optimistic concurrency check failed (stale epoch or duplicate)."""
