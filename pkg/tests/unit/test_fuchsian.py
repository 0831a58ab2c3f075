"""Tests for the octagon group, its ball and quotient geometry."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from hgpartners import fuchsian
from hgpartners import moebius
from hgpartners import words
from hgpartners.exceptions import ConfigurationError
from hgpartners.exceptions import ConstructionFailed
from hgpartners.exceptions import InvalidParameter
from hgpartners.exceptions import TrivialWord
from hgpartners.fuchsian import SurfaceGroup

GENERATOR_TRACE = 2 * (1 + math.sqrt(2))
GENERATOR_PERIOD = 2 * math.acosh(1 + math.sqrt(2))


class TestGenerators:
    """Tests for the side pairings."""

    def test_relator_is_identity(self, grp: SurfaceGroup) -> None:
        """The relator should evaluate to the identity."""
        assert grp.relator_residual() < 1e-9

    def test_generator_traces(self, grp: SurfaceGroup) -> None:
        """All generators are conjugate rotations of one element."""
        for letter in "abcdABCD":
            assert grp.generators[letter].trace == pytest.approx(
                GENERATOR_TRACE
            )

    def test_inverses(self, grp: SurfaceGroup) -> None:
        """Capital letters are inverses."""
        product = grp.generators["b"] @ grp.generators["B"]
        assert product.isclose(moebius.E)

    def test_bad_relator(self) -> None:
        """A relator that is not trivial should fail construction."""
        with pytest.raises(ConstructionFailed, match="Relator"):
            SurfaceGroup(fuchsian.octagon_generators(), "aBcD", ball_radius=1)

    def test_extended_precision(self) -> None:
        """The extended group should satisfy the relator too."""
        ext = fuchsian.octagon_group(ball_radius=1, precision="extended")
        assert ext.evaluate("a").m.dtype == np.longdouble
        assert ext.relator_residual() < 1e-9


class TestBall:
    """Tests for the cached element ball."""

    def test_sphere_sizes(self, grp: SurfaceGroup) -> None:
        """Spheres should grow as 1, 8, 56, 392, 2736, 19096."""
        sizes = np.bincount(grp.ball.lengths).tolist()
        assert sizes == [1, 8, 56, 392, 2736, 19096]
        assert len(grp.ball) == 22289

    def test_sorted_by_displacement(self, grp: SurfaceGroup) -> None:
        """Elements are ordered by how far they move i."""
        assert np.all(np.diff(grp.ball.displacement) >= 0)
        assert grp.ball.words[0] == ""

    def test_certified_radius(self, grp: SurfaceGroup) -> None:
        """The certification radius of the default ball."""
        assert grp.rho_cert == pytest.approx(7.562, abs=1e-3)

    def test_count_within(self, grp: SurfaceGroup) -> None:
        """Generators sit at the same displacement."""
        disp = grp.ball.displacement[1]
        assert grp.ball.count_within(disp + 1e-9) == 9

    def test_radius_must_be_positive(self) -> None:
        """A ball needs at least one sphere."""
        with pytest.raises(InvalidParameter, match="radius"):
            fuchsian.build_ball(fuchsian.octagon_generators(), 0)


class TestConstants:
    """Tests for sigma0 and the circumradius."""

    def test_circumradius(self) -> None:
        """The octagon circumradius."""
        assert fuchsian.CIRCUMRADIUS == pytest.approx(2.4484, abs=1e-4)

    def test_sigma0_bounds(self, grp: SurfaceGroup) -> None:
        """sigma0 is 0.9 times at least the systole."""
        assert 0.9 * GENERATOR_PERIOD - 1e-9 <= grp.sigma0
        assert grp.sigma0 < 2 * grp.circumradius

    def test_sigma0_rejects_length(self, grp: SurfaceGroup) -> None:
        """max_len must be positive."""
        with pytest.raises(InvalidParameter):
            fuchsian.sigma0_estimate(grp, 0)


class TestClasses:
    """Tests for conjugacy classes."""

    def test_generator_class(self, grp: SurfaceGroup) -> None:
        """A generator class has the systole as its period."""
        cls = grp.canonical_class("a")
        assert cls.word == "a"
        assert cls.trace == pytest.approx(GENERATOR_TRACE)
        assert cls.period == pytest.approx(3.0571, abs=1e-4)

    def test_conjugates_agree(self, grp: SurfaceGroup) -> None:
        """Conjugate words give the same class and period."""
        first = grp.canonical_class("ab")
        second = grp.canonical_class("cbaC")
        assert first == second

    def test_trivial(self, grp: SurfaceGroup) -> None:
        """The relator has no class."""
        with pytest.raises(TrivialWord):
            grp.canonical_class(grp.relator)

    def test_inverse_classes(self, grp: SurfaceGroup) -> None:
        """Time reversal maps a class to the class of the inverse."""
        first = grp.canonical_class("ab")
        second = grp.canonical_class("BA")
        assert fuchsian.are_inverse_classes(grp, first, second)
        assert first.period == pytest.approx(second.period)

    def test_evaluate_word(self, grp: SurfaceGroup) -> None:
        """Empty words and rotated relators evaluate to the identity."""
        assert fuchsian.evaluate_word(grp, "").isclose(moebius.E)
        rotated = grp.relator[3:] + grp.relator[:3]
        assert fuchsian.evaluate_word(grp, rotated).isclose(moebius.E, 1e-9)

    def test_is_primitive(self, grp: SurfaceGroup) -> None:
        """Squares are not primitive."""
        assert fuchsian.is_primitive(grp, grp.canonical_class("a"))
        assert not fuchsian.is_primitive(grp, grp.canonical_class("abab"))
        assert fuchsian.is_primitive(grp, grp.canonical_class("abac"))

    def test_to_dict(self, grp: SurfaceGroup) -> None:
        """Signed letters are included."""
        data = grp.canonical_class("aB").to_dict()
        assert [list(x) for x in data["signed"]] == [[0, 1], [1, -1]]


class TestIdentify:
    """Tests for deck transformation search."""

    def test_finds_word(self, grp: SurfaceGroup) -> None:
        """Should recover the element relating two lifts."""
        h = moebius.d(0.3) @ moebius.a(0.5)
        g = grp.evaluate("ab") @ h
        word = grp.identify(g, h, 0.1)
        assert word is not None
        assert grp.evaluate(word).isclose(grp.evaluate("ab"), 1e-9)

    def test_finds_identity(self, grp: SurfaceGroup) -> None:
        """Nearby lifts are related by the empty word."""
        h = moebius.d(1.1) @ moebius.a(0.2)
        assert grp.identify(h @ moebius.a(0.01), h, 0.1) == ""

    def test_miss_returns_none(self, grp: SurfaceGroup) -> None:
        """Points a unit apart on one orbit are not identified."""
        h = moebius.d(0.7) @ moebius.a(0.4)
        assert grp.identify(h @ moebius.a(1.0), h, 0.1) is None

    def test_tolerance_range(self, grp: SurfaceGroup) -> None:
        """tol must stay below sigma0 / 2."""
        with pytest.raises(InvalidParameter, match="sigma0"):
            grp.identify(moebius.E, moebius.E, grp.sigma0)

    def test_reduce_point(self, grp: SurfaceGroup) -> None:
        """g should equal evaluate(word) r."""
        g = grp.evaluate("abCd") @ moebius.d(0.2) @ moebius.a(0.3)
        word, r = grp.reduce_point(g)
        rebuilt = grp.evaluate(word) @ r
        assert rebuilt.isclose(g, 1e-8 * g.norm())
        assert moebius.displacement(r) <= grp.circumradius + 1e-9


class TestQuotientDistance:
    """Tests for distances on the quotient."""

    def test_same_orbit(self, grp: SurfaceGroup) -> None:
        """Translates are at distance zero."""
        h = moebius.d(0.5) @ moebius.a(0.1)
        est = grp.quotient_distance(h, grp.evaluate("cD") @ h)
        assert est.value == pytest.approx(0.0, abs=1e-9)
        assert est.exact

    def test_flow_distance(self, grp: SurfaceGroup) -> None:
        """Short flow segments are not folded."""
        h = moebius.d(2.0) @ moebius.a(0.3)
        est = grp.quotient_distance(h, h @ moebius.a(0.5))
        assert est.value == pytest.approx(0.5, abs=1e-9)


class TestGroupCache:
    """Tests for the shared group cache."""

    def test_cached_instance(self) -> None:
        """Repeated calls share one group until the cache is cleared."""
        first = fuchsian.octagon_group(ball_radius=2)
        assert fuchsian.octagon_group(ball_radius=2) is first
        fuchsian.clear_group_cache()
        assert fuchsian.octagon_group(ball_radius=2) is not first

    def test_load_octagon(self, grp: SurfaceGroup) -> None:
        """The name octagon resolves to the cached group."""
        assert fuchsian.load_group("octagon") is fuchsian.octagon_group()


class TestPresentationFiles:
    """Tests for loading groups from JSON."""

    def test_round_trip(self, grp: SurfaceGroup, tmp_path: Path) -> None:
        """A written presentation should rebuild the same generators."""
        path = tmp_path / "group.json"
        path.write_text(json.dumps(grp.to_dict()), encoding="utf-8")
        loaded = fuchsian.load_group(str(path), ball_radius=2)
        assert loaded.ball_radius == 2
        for letter in "abcd":
            assert loaded.generators[letter].isclose(
                grp.generators[letter], 1e-14
            )

    def test_missing_file(self, tmp_path: Path) -> None:
        """Unreadable files are configuration errors."""
        with pytest.raises(ConfigurationError, match="Cannot load"):
            fuchsian.load_group(str(tmp_path / "nope.json"))

    def test_malformed(self, tmp_path: Path) -> None:
        """Missing generators are configuration errors."""
        path = tmp_path / "group.json"
        path.write_text(json.dumps({"relator": "aBcDAbCd"}), encoding="utf-8")
        with pytest.raises(ConfigurationError, match="Malformed"):
            fuchsian.load_group(str(path))

    def test_keeps_seed(self, grp: SurfaceGroup, tmp_path: Path) -> None:
        """The sampling seed should survive a write and reload."""
        data = grp.to_dict()
        data["seed"] = 7
        path = tmp_path / "group.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        assert fuchsian.load_group(str(path), ball_radius=2).seed == 7
        assert fuchsian.load_group(str(path), 2, seed=3).seed == 3


class TestReduce:
    """Tests for reduction against the group's relator."""

    def test_uses_group_relator(self, grp: SurfaceGroup) -> None:
        """Group reduction should agree with the relator it was built on."""
        word = "aBcDAbC"
        assert grp.reduce(word) == words.reduce_word(word, grp.relator)
        assert grp.reduce(word) == "D"
        assert fuchsian.reduce_word(grp, word) == "D"

    def test_other_relator(self) -> None:
        """Pieces come from the relator passed in."""
        assert words.reduce_word("abcdA") == "abcdA"
        assert words.reduce_word("abcdA", relator="abcdABCD") == "dcb"
