"""Custom exceptions for hgpartners."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from hgpartners.reports import BoundReport


class HgPartnersError(Exception):
    """Base exception for hgpartners errors."""


class ConfigurationError(HgPartnersError):
    """Raised when configuration is invalid or missing."""


class InvalidParameter(HgPartnersError, ValueError):
    """Raised when an argument lies outside an operation's domain."""


class DegenerateDecomposition(HgPartnersError):
    """Raised when the pivot entry of a decomposition vanishes."""


class NotHyperbolic(HgPartnersError):
    """Raised when an element is not hyperbolic."""


class LogUndefined(HgPartnersError):
    """Raised when the principal matrix logarithm does not exist."""


class ConstructionFailed(HgPartnersError):
    """Raised when a group presentation fails its relator check."""


class TrivialWord(HgPartnersError):
    """Raised when a word reduces to the identity."""


class NotPrimitive(HgPartnersError):
    """Raised when a class is a proper power."""


class IdentifyFailed(HgPartnersError):
    """Raised when a deck transformation cannot be identified."""


class BallTooSmall(IdentifyFailed):
    """Raised when a near miss lies outside the certified ball."""


class ReductionFailed(IdentifyFailed):
    """Raised when point reduction does not terminate."""


class NotInSection(HgPartnersError):
    """Raised when section coordinates exceed the section radius."""


class BoundViolated(HgPartnersError):
    """Raised when a verified inequality has negative slack."""

    def __init__(self, msg: str, report: BoundReport | None = None) -> None:
        super().__init__(msg)
        self.report = report


class ConditionViolated(HgPartnersError):
    """Raised when a construction's hypotheses do not hold."""


class EncounterTypeMismatch(ConditionViolated):
    """Raised when encounters have the wrong kind or arrangement."""


class WordSplitFailed(ConditionViolated):
    """Raised when rewired words collapse to a trivial or power class."""


class AngleTooLarge(ConditionViolated):
    """Raised when a self-crossing is not a small-angle crossing."""
