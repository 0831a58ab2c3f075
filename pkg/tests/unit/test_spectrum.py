"""Tests for class enumeration, the length spectrum and pair catalogs."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from hgpartners import spectrum
from hgpartners import words
from hgpartners.exceptions import InvalidParameter
from hgpartners.exceptions import WordSplitFailed
from hgpartners.flow import EncounterKind
from hgpartners.flow import detect_encounters
from hgpartners.flow import orbit_from_word
from hgpartners.fuchsian import SurfaceGroup
from hgpartners.partners import partner_single_antiparallel
from hgpartners.reports import BoundReport
from hgpartners.spectrum import PairCatalogEntry
from hgpartners.spectrum import SpectrumEntry

GENERATOR_PERIOD = 2 * math.acosh(1 + math.sqrt(2))


@pytest.fixture(scope="module")
def entries(grp: SurfaceGroup) -> list[SpectrumEntry]:
    return spectrum.enumerate_classes(grp, 2)


def _pair(action_diff: float) -> PairCatalogEntry:
    return PairCatalogEntry(
        "single_antiparallel", "ab", "aB", action_diff, 0.0, 5.0, BoundReport()
    )


class TestEnumerateClasses:
    """Tests for the class enumeration."""

    def test_generators(self, grp: SurfaceGroup) -> None:
        """Length one gives the eight generator classes."""
        found = spectrum.enumerate_classes(grp, 1)
        assert len(found) == 8
        assert {e.cls.word for e in found} == set("abcdABCD")
        assert all(e.multiplicity == 8 for e in found)
        assert found[0].period == pytest.approx(GENERATOR_PERIOD)

    def test_counts(
        self, grp: SurfaceGroup, entries: list[SpectrumEntry]
    ) -> None:
        """Squares only appear with include_powers."""
        assert len(entries) == 32
        assert all(e.primitive for e in entries)
        with_powers = spectrum.enumerate_classes(
            grp, 2, include_powers=True
        )
        assert len(with_powers) == 40
        assert sum(not e.primitive for e in with_powers) == 8

    def test_sorted(self, entries: list[SpectrumEntry]) -> None:
        """Entries are ordered by period."""
        periods = [e.period for e in entries]
        assert periods == sorted(periods)
        assert spectrum.shortest_period(entries) == periods[0]

    def test_parallel_jobs(
        self, grp: SurfaceGroup, entries: list[SpectrumEntry]
    ) -> None:
        """Worker count does not change the result."""
        assert spectrum.enumerate_classes(grp, 2, jobs=4) == entries

    @pytest.mark.parametrize("max_len", [0, 13])
    def test_length_range(self, grp: SurfaceGroup, max_len: int) -> None:
        """max_len must lie in [1, 12]."""
        with pytest.raises(InvalidParameter, match="max_len"):
            spectrum.enumerate_classes(grp, max_len)


class TestSpectrum:
    """Tests for multiplicities and the inverse pairing."""

    def test_even_multiplicities(self, entries: list[SpectrumEntry]) -> None:
        """Every period is shared by a class and its inverse."""
        lengths = spectrum.length_spectrum(entries)
        assert sum(count for _, count in lengths) == len(entries)
        assert all(count % 2 == 0 for _, count in lengths)

    def test_audit(self, entries: list[SpectrumEntry]) -> None:
        """The enumeration is closed under inversion."""
        audit = spectrum.inverse_pair_audit(entries)
        assert audit["ok"]
        assert audit["classes"] == 32
        assert spectrum.missing_inverses(entries) == []

    def test_missing_inverse(self, entries: list[SpectrumEntry]) -> None:
        """Dropping a class exposes its inverse."""
        kept = [e for e in entries if e.cls.word != "A"]
        assert spectrum.missing_inverses(kept) == ["a"]
        assert not spectrum.inverse_pair_audit(kept)["ok"]

    def test_to_dict(self, entries: list[SpectrumEntry]) -> None:
        """Entries carry signed and lettered words."""
        data = entries[0].to_dict()
        assert data["word"] == entries[0].cls.word
        assert data["multiplicity"] == entries[0].multiplicity

    def test_empty(self) -> None:
        """No entries give no periods."""
        assert spectrum.shortest_period([]) == math.inf
        assert spectrum.length_spectrum([]) == []


class TestFormFactor:
    """Tests for the binned diagonal sum."""

    def test_unit_counts(self, entries: list[SpectrumEntry]) -> None:
        """Unit weights count every orbit once."""
        top = entries[-1].period + 1.0
        rows = spectrum.form_factor_diagonal(
            entries, spectrum.tau_edges(top, 10)
        )
        assert len(rows) == 10
        assert sum(k for _, k in rows) == len(entries)
        assert rows[0][0] == pytest.approx(top / 20)

    def test_sinh_weight(self, grp: SurfaceGroup) -> None:
        """sinh weights apply 1 / (2 sinh(T/2)) per orbit."""
        found = spectrum.enumerate_classes(grp, 1)
        rows = spectrum.form_factor_diagonal(
            found, [0.0, 10.0], weight="sinh"
        )
        expected = 8 / (2 * math.sinh(GENERATOR_PERIOD / 2))
        assert rows[0][1] == pytest.approx(expected)

    def test_empty(self) -> None:
        """No orbits give a zero curve."""
        rows = spectrum.form_factor_diagonal([], np.linspace(0, 1, 5))
        assert [k for _, k in rows] == [0.0] * 4


class TestPairCatalog:
    """Tests for pair catalogs and their histograms."""

    def test_generators_have_no_pairs(self, grp: SurfaceGroup) -> None:
        """Single-letter orbits have no encounters."""
        assert spectrum.pair_catalog(grp, 1, 0.25) == []

    def test_action_histogram(self) -> None:
        """Counts add up to the catalog size."""
        catalog = [_pair(x) for x in (-0.1, -0.05, 0.0, 0.02)]
        rows = spectrum.action_histogram(catalog, bins=4)
        assert len(rows) == 4
        assert sum(n for _, n in rows) == 4
        assert spectrum.action_histogram([]) == []

    def test_entry_to_dict(self) -> None:
        """Catalog entries list both words."""
        data = _pair(0.1).to_dict()
        assert data["letters"] == ["ab", "aB"]
        assert data["bounds"]["passed"] is True


class TestWriters:
    """Tests for spectrum and catalog files."""

    def test_spectrum_csv(
        self, tmp_path: Path, entries: list[SpectrumEntry]
    ) -> None:
        """One row per class below the header."""
        path = spectrum.write_spectrum_csv(tmp_path / "s.csv", entries)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "period,multiplicity,word,trace,primitive"
        assert len(lines) == 33

    def test_catalog_json(self, tmp_path: Path) -> None:
        """The run configuration is echoed next to the pairs."""
        path = spectrum.write_catalog_json(
            tmp_path / "c.json", [_pair(0.1)], {"eps": 0.25}
        )
        text = path.read_text(encoding="utf-8")
        assert '"eps": 0.25' in text
        assert '"single_antiparallel"' in text

    def test_xy_csv(self, tmp_path: Path) -> None:
        """Custom headers are written first."""
        path = spectrum.write_xy_csv(
            tmp_path / "k.csv", [(0.5, 2.0)], ("tau", "K")
        )
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines == ["tau,K", "0.5,2"]


@pytest.mark.slow
class TestMirrorEntry:
    """Tests for finding a catalog pair from its second orbit."""

    def test_single_pair_is_symmetric(self, grp: SurfaceGroup) -> None:
        """The partner leads back to the orbit with the opposite action."""
        orbit = orbit_from_word(grp, "aaaabAAAAc")
        encs = detect_encounters(
            orbit, 0.25, 0.0625, kinds=(EncounterKind.ANTIPARALLEL,)
        )
        entry = None
        for enc in encs:
            try:
                result = partner_single_antiparallel(orbit, enc)
            except WordSplitFailed:
                continue
            entry = PairCatalogEntry.from_result(result)
            break
        assert entry is not None

        mirror = spectrum.mirror_entry(grp, entry, 0.25, 0.0625)
        assert mirror is not None
        assert mirror.topology == entry.topology
        assert mirror.class_a == entry.class_b
        inverse = grp.canonical_class(words.formal_inverse(entry.class_a))
        assert mirror.class_b in (entry.class_a, inverse.word)
        slack = (
            entry.bound_report["action"].rhs
            + mirror.bound_report["action"].rhs
        )
        assert mirror.action_diff == pytest.approx(
            -entry.action_diff, abs=1e-6
        )
        assert abs(mirror.target + entry.target) <= slack + 1e-6

    def test_unknown_pair(self, grp: SurfaceGroup) -> None:
        """A pair no construction reproduces has no mirror."""
        entry = PairCatalogEntry(
            "aas", "aB", "abC", 0.0, 0.0, 5.0, BoundReport()
        )
        assert spectrum.mirror_entry(grp, entry, 0.25) is None

    def test_crossing_pairs_refused(self, grp: SurfaceGroup) -> None:
        """Crossing pairs are not rebuilt from encounters."""
        entry = PairCatalogEntry(
            "two_crossings", "aB", "abC", 0.0, 0.0, 5.0, BoundReport()
        )
        with pytest.raises(InvalidParameter, match="two_crossings"):
            spectrum.mirror_entry(grp, entry, 0.25)
