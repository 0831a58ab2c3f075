"""Partner routes on orbits built to carry the encounters each route needs.

Every designed word is made of equal blocks of letters; encounters are
sorted into blocks by the letters their times fall on.
"""

from __future__ import annotations

import itertools
import json
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from hgpartners.exceptions import ConditionViolated
from hgpartners.flow import Crossing
from hgpartners.flow import Encounter
from hgpartners.flow import EncounterKind
from hgpartners.flow import PeriodicOrbit
from hgpartners.flow import detect_encounters
from hgpartners.flow import detect_self_crossings
from hgpartners.flow import orbit_from_word
from hgpartners.fuchsian import SurfaceGroup
from hgpartners.fuchsian import are_inverse_classes
from hgpartners.partners import MAX_ANGLE
from hgpartners.partners import ROUTES
from hgpartners.partners import PartnerResult
from hgpartners.partners import Topology
from hgpartners.partners import aas_layout
from hgpartners.partners import api_layout
from hgpartners.partners import crossing_partner
from hgpartners.partners import orbits_coincide
from hgpartners.partners import partner_aas
from hgpartners.partners import partner_api
from hgpartners.partners import partner_ppi
from hgpartners.partners import ppi_layout
from hgpartners.partners import predicted_word

DESIGNED = Path(__file__).parent.parent / "fixtures" / "designed_orbits.json"
# Encounter radius handed to a route, relative to the larger coordinate.
EPS_MARGIN = 1.25
ANTI = EncounterKind.ANTIPARALLEL
PAR = EncounterKind.PARALLEL

Layout = Callable[..., tuple[list[float], list[str], Any]]

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def designed() -> dict[str, Any]:
    return json.loads(DESIGNED.read_text(encoding="utf-8"))


def _block(orbit: PeriodicOrbit, t: float, size: int) -> int:
    """Index of the letter block the orbit runs through at time t."""
    letter = np.searchsorted(
        orbit.anchor_times, t % orbit.period, side="right"
    )
    return (int(letter) - 1) // size


def _size(enc: Encounter) -> float:
    return max(abs(enc.u), abs(enc.s))


def _smallest(
    orbit: PeriodicOrbit,
    encs: list[Encounter],
    size: int,
    blocks: tuple[int, int],
) -> Encounter:
    """The encounter of smallest coordinates joining the two blocks."""
    wanted = set(blocks)
    joining = [
        enc
        for enc in encs
        if {_block(orbit, enc.t1, size), _block(orbit, enc.t2, size)}
        == wanted
    ]
    assert joining, blocks
    return min(joining, key=_size)


def _route_eps(*encs: Encounter) -> float:
    return EPS_MARGIN * max(_size(enc) for enc in encs)


def _check_partner(
    result: PartnerResult,
    layout: Layout,
    topology: Topology,
    encs: tuple[Encounter, Encounter],
) -> None:
    """Bounds hold, the class is the predicted one and it is new."""
    orbit = result.original
    grp = orbit.grp
    assert result.topology is topology
    assert result.bound_report.passed
    breaks, witnesses, _ = layout(orbit, *encs)
    word = predicted_word(orbit, breaks, witnesses, ROUTES[topology])
    assert grp.canonical_class(word).word == result.partner.cls.word
    assert result.predicted_class.word == result.partner.cls.word
    assert result.distinctness
    assert result.partner.cls.word != orbit.cls.word
    assert not are_inverse_classes(grp, orbit.cls, result.partner.cls)


def _orbit(grp: SurfaceGroup, data: dict[str, Any]) -> PeriodicOrbit:
    return orbit_from_word(grp, data["word"])


class TestAasRoute:
    """Two hairpin turns on different blocks give aas partners."""

    @pytest.fixture(scope="class")
    def setup(
        self, grp: SurfaceGroup, designed: dict[str, Any]
    ) -> tuple[PeriodicOrbit, list[Encounter]]:
        data = designed["aas"]
        orbit = _orbit(grp, data)
        encs = detect_encounters(
            orbit, data["radius"], data["dt"], kinds=(ANTI,)
        )
        turns = [
            _smallest(orbit, encs, data["block"], (q, q))
            for q in range(len(data["word"]) // data["block"])
        ]
        return orbit, turns

    def test_partners(
        self, setup: tuple[PeriodicOrbit, list[Encounter]]
    ) -> None:
        """Every pair of turns rewires into a new verified orbit."""
        orbit, turns = setup
        built = 0
        for first, second in itertools.combinations(turns, 2):
            eps = _route_eps(first, second)
            try:
                result = partner_aas(orbit, first, second, eps=eps)
            except ConditionViolated:
                continue
            _check_partner(result, aas_layout, Topology.AAS, (first, second))
            assert result.conditions.passed
            built += 1
        assert built > 0

    def test_orders_agree(
        self, setup: tuple[PeriodicOrbit, list[Encounter]]
    ) -> None:
        """Swapping the two encounters traces the same partner orbit."""
        orbit, turns = setup
        first, second = turns[0], turns[1]
        eps = _route_eps(first, second)
        forward = partner_aas(
            orbit, first, second, eps=eps, enforce_conditions=False
        )
        backward = partner_aas(
            orbit, second, first, eps=eps, enforce_conditions=False
        )
        assert forward.partner.cls.word == backward.partner.cls.word
        assert orbits_coincide(forward.partner, backward.partner, 0.05)
        assert forward.action_diff == pytest.approx(
            backward.action_diff, abs=1e-9
        )


class TestIntertwinedRoutes:
    """Blocks revisited in the same or opposite direction."""

    def _pair(
        self,
        grp: SurfaceGroup,
        data: dict[str, Any],
        kinds: tuple[EncounterKind, EncounterKind],
    ) -> tuple[PeriodicOrbit, tuple[Encounter, Encounter]]:
        orbit = _orbit(grp, data)
        encs = detect_encounters(orbit, data["radius"], data["dt"])
        found = []
        for blocks, kind in zip(data["pairs"], kinds, strict=True):
            same = [enc for enc in encs if enc.kind is kind]
            found.append(
                _smallest(orbit, same, data["block"], tuple(blocks))
            )
        return orbit, (found[0], found[1])

    def test_ppi(self, grp: SurfaceGroup, designed: dict[str, Any]) -> None:
        """Two parallel revisits cross over into a partner."""
        orbit, encs = self._pair(grp, designed["ppi"], (PAR, PAR))
        result = partner_ppi(orbit, *encs, eps=_route_eps(*encs))
        _check_partner(result, ppi_layout, Topology.PPI, encs)

    def test_api(self, grp: SurfaceGroup, designed: dict[str, Any]) -> None:
        """A parallel and an antiparallel revisit give a partner."""
        orbit, encs = self._pair(grp, designed["api"], (PAR, ANTI))
        result = partner_api(orbit, *encs, eps=_route_eps(*encs))
        _check_partner(result, api_layout, Topology.API, encs)


def _turn_crossings(
    orbit: PeriodicOrbit, size: int, dt: float
) -> list[Crossing]:
    """Per block, the most nearly head-on crossing with its loop inside."""
    best: dict[int, Crossing] = {}
    for crossing in detect_self_crossings(orbit, dt):
        if not abs(crossing.psi) < MAX_ANGLE:
            continue
        block = _block(orbit, crossing.tau, size)
        if _block(orbit, crossing.tau + crossing.L, size) != block:
            continue
        if block not in best or abs(crossing.psi) < abs(best[block].psi):
            best[block] = crossing
    return list(best.values())


class TestCrossingRoute:
    """Nearly head-on self-crossings at hairpin turns."""

    def test_partners(
        self, grp: SurfaceGroup, designed: dict[str, Any]
    ) -> None:
        """Removing two crossings gives a shorter verified partner."""
        data = designed["crossings"]
        built = 0
        for word in data["words"]:
            orbit = orbit_from_word(grp, word)
            crossings = _turn_crossings(orbit, data["block"], data["dt"])
            for c1, c2 in itertools.combinations(crossings, 2):
                try:
                    result = crossing_partner(orbit, c1, c2)
                except ConditionViolated:
                    continue
                assert result.topology is Topology.TWO_CROSSINGS
                assert result.bound_report.passed
                assert result.bound_report["action_sin"].passed
                assert result.bound_report["shorter"].passed
                assert result.partner.period < orbit.period
                assert result.predicted_class.word == result.partner.cls.word
                assert result.distinctness
                built += 1
        assert built > 0
