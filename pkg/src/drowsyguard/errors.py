"""Exception hierarchy shared across the package.

``SchemaError`` deliberately subclasses ``ParseError`` so stream consumers
can treat "this line is unusable" as one family while tests can still
distinguish malformed records from schema violations.
"""

from __future__ import annotations


class DrowsyguardError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(DrowsyguardError):
    """A wire-format line could not be parsed (malformed record, missing field)."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message if line_no is None else f"line {line_no}: {message}")
        self.line_no = line_no


class SchemaError(ParseError):
    """A structurally valid record that violates the frame schema."""


class OutOfOrder(DrowsyguardError):
    """Timestamps within a session must be strictly increasing."""


class NoFace(DrowsyguardError):
    """Operation requires a frame with a detected face."""


class IndexOutOfRange(DrowsyguardError, IndexError):
    """Landmark index outside [0, 468)."""


class DegenerateEye(DrowsyguardError):
    """Horizontal eye width collapsed below the degeneracy guard (corrupt landmarks)."""


class EmptyWindow(DrowsyguardError):
    """Rolling window holds no frames yet."""


class ConfigError(DrowsyguardError, ValueError):
    """Configuration violates an invariant (CLI maps this to exit code 2)."""


class TargetOutOfRange(DrowsyguardError, ValueError):
    """Requested synthetic EAR target outside [0, 1]."""


class InvalidScenario(DrowsyguardError, ValueError):
    """Scenario definition violates its invariants."""


class UnsortedEvents(DrowsyguardError):
    """evaluate() requires events sorted by timestamp."""


class SourceUnavailable(DrowsyguardError):
    """Frame source could not be opened."""


class SinkBackpressure(DrowsyguardError):
    """Event sink queue overflowed; a sink is not keeping up."""


class BadLineBudgetExceeded(DrowsyguardError):
    """Too many unparseable lines in one session."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
