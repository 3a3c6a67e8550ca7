"""Exception types raised by the engine."""

from __future__ import annotations


class CapstoneGameError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CapstoneGameError, ValueError):
    """An input violates a model invariant.

    ``path`` names the offending field (``"coefficients.p3"``,
    ``"actions.student.e"``) when one is known.
    """

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class UnknownActionError(CapstoneGameError, LookupError):
    """An observed action is not part of a likelihood table's action set."""

    def __init__(self, action: object):
        self.action = action
        super().__init__(f"action {action!r} is not in the likelihood table")
