"""Tests for exceptions module."""

from __future__ import annotations

import pytest

from hgpartners.exceptions import AngleTooLarge
from hgpartners.exceptions import BallTooSmall
from hgpartners.exceptions import BoundViolated
from hgpartners.exceptions import ConditionViolated
from hgpartners.exceptions import ConfigurationError
from hgpartners.exceptions import EncounterTypeMismatch
from hgpartners.exceptions import HgPartnersError
from hgpartners.exceptions import IdentifyFailed
from hgpartners.exceptions import InvalidParameter
from hgpartners.exceptions import NotHyperbolic
from hgpartners.exceptions import ReductionFailed
from hgpartners.exceptions import WordSplitFailed
from hgpartners.reports import BoundReport


class TestExceptions:
    """Tests for custom exceptions."""

    def test_base_exception(self) -> None:
        """HgPartnersError should be base for all."""
        exc = HgPartnersError("test error")
        assert str(exc) == "test error"
        assert isinstance(exc, Exception)

    def test_invalid_parameter_is_value_error(self) -> None:
        """Callers may catch domain errors as ValueError."""
        assert isinstance(InvalidParameter("eps"), ValueError)

    def test_identify_family(self) -> None:
        """Ball and reduction failures are identification failures."""
        assert isinstance(BallTooSmall("x"), IdentifyFailed)
        assert isinstance(ReductionFailed("x"), IdentifyFailed)

    def test_condition_family(self) -> None:
        """Refusals of a construction share one parent."""
        for cls in (EncounterTypeMismatch, WordSplitFailed, AngleTooLarge):
            assert issubclass(cls, ConditionViolated)

    def test_bound_violated_carries_report(self) -> None:
        """The failing report travels with the exception."""
        report = BoundReport()
        report.add("action", 2.0, 1.0)
        exc = BoundViolated("failed", report=report)
        assert exc.report is report
        assert BoundViolated("failed").report is None

    def test_exceptions_can_be_caught_by_base(self) -> None:
        """All exceptions should be catchable by base class."""
        exceptions = [
            ConfigurationError("test"),
            InvalidParameter("test"),
            NotHyperbolic("test"),
            BoundViolated("test"),
            AngleTooLarge("test"),
        ]

        for exc in exceptions:
            with pytest.raises(HgPartnersError):
                raise exc
