"""Closing and connecting near-returns into periodic orbits.

Each construction reads the deck element zeta off the lifted flow, takes
the new periodic point from the axis of zeta and then measures the
coordinates and distances that the closing estimates speak about. Every
inequality goes into the result's ``BoundReport``.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from typing import Any

import numpy as np

from hgpartners import moebius
from hgpartners import words
from hgpartners.exceptions import DegenerateDecomposition
from hgpartners.exceptions import IdentifyFailed
from hgpartners.exceptions import InvalidParameter
from hgpartners.exceptions import NotInSection
from hgpartners.flow import PeriodicOrbit
from hgpartners.flow import QuotientPoint
from hgpartners.flow import SectionCoords
from hgpartners.flow import SectionVariant
from hgpartners.flow import flow_with_word
from hgpartners.flow import orbit_from_word
from hgpartners.flow import section_coords
from hgpartners.moebius import MoebiusElement
from hgpartners.reports import BoundReport

logger = logging.getLogger(__name__)

GRID_STEP = 0.1
# Section radius for locating the new periodic point near its base.
MEASURE_RADIUS = 0.5
PERIOD_MATCH_TOL = 1e-8
DEFAULT_METRIC_FACTOR = math.sqrt(2.0)


@dataclasses.dataclass
class ClosingResult:
    """A periodic orbit obtained by closing or connecting.

    ``sigma`` and ``eta`` are the section coordinates of the new periodic
    point relative to the construction's base point (minus the leading
    u e^{-T1} term for the connecting lemma).
    """

    new_orbit: PeriodicOrbit
    zeta_word: str
    sigma: float
    eta: float
    T_new: float
    T: float
    bound_report: BoundReport
    new_point: tuple[float, float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "class_word": words.to_signed(self.new_orbit.cls.word),
            "zeta_word": words.to_signed(self.zeta_word),
            "sigma": self.sigma,
            "eta": self.eta,
            "T": self.T,
            "T_new": self.T_new,
            "new_point": list(self.new_point),
            "bounds": self.bound_report.to_dict(),
        }


def _grid(length: float) -> np.ndarray:
    n = max(1, math.ceil(length / GRID_STEP))
    return np.linspace(0.0, length, n + 1)


def _fresh_coords(
    x: QuotientPoint, z: QuotientPoint, coords: SectionCoords
) -> SectionCoords:
    radius = 2 * max(abs(coords.u), abs(coords.s)) + 1e-6
    fresh = section_coords(x, z, coords.variant, radius, time_tol=1e-6)
    if fresh is None:
        msg = "Flowed point is not in the section of the start point"
        raise IdentifyFailed(msg)
    return fresh


def _measure(
    x: QuotientPoint, orbit: PeriodicOrbit, variant: SectionVariant
) -> SectionCoords:
    """Section coordinates of the orbit's time origin seen from x."""
    try:
        coords = section_coords(
            x, orbit.base, variant, MEASURE_RADIUS, time_tol=math.inf
        )
    except (NotInSection, DegenerateDecomposition) as exc:
        msg = f"New periodic point is not near its base: {exc}"
        raise IdentifyFailed(msg) from exc
    if coords is None:
        msg = "New periodic point is not near its base"
        raise IdentifyFailed(msg)
    return coords


def _shadow(
    start: QuotientPoint, orbit: PeriodicOrbit, offset: float, length: float
) -> float:
    """Largest quotient distance between phi_t(start) and the orbit.

    The orbit is read at time offset + t, for t on the grid over
    [0, length].
    """
    point, prev, worst = start, 0.0, 0.0
    for t in _grid(length):
        point = point.flow(float(t) - prev)
        prev = float(t)
        dist = point.distance(orbit.point(offset + prev)).value
        worst = max(worst, dist)
    return worst


def _add_period_match(
    report: BoundReport, orbit: PeriodicOrbit, t_new: float
) -> None:
    report.add(
        "trace_period",
        abs(orbit.period - t_new),
        PERIOD_MATCH_TOL * max(1.0, t_new),
    )


def _check_return(T: float) -> None:
    if not T >= 1:
        msg = f"Return time must be >= 1, got {T}"
        raise InvalidParameter(msg)


def _closed(
    x: QuotientPoint, zeta_word: str, conjugator: MoebiusElement
) -> PeriodicOrbit:
    return orbit_from_word(
        x.grp, zeta_word, conjugator=conjugator, allow_powers=True
    )


def close_orbit_I(
    x: QuotientPoint,
    T: float,
    coords: SectionCoords,
    metric_factor: float = DEFAULT_METRIC_FACTOR,
) -> ClosingResult:
    """Close a near-return phi_T(x) = x c_u b_s into a periodic orbit.

    Raises:
        InvalidParameter: If T < 1.
        IdentifyFailed: If the return cannot be matched.
        BoundViolated: If a closing estimate fails.
    """
    _check_return(T)
    trail, z = flow_with_word(x, T)
    coords = _fresh_coords(x, z, coords)
    u, s = coords.u, coords.s
    t_eff = T - coords.residual_time
    zeta_word = x.grp.reduce(trail + words.formal_inverse(coords.witness))
    prec = x.rep.precision
    zeta_rel = moebius.a(t_eff, prec) @ moebius.b(-s, prec) @ moebius.c(
        -u, prec
    )
    p, t_new = moebius.axis_normal_form(zeta_rel)
    orbit = _closed(x, zeta_word, x.rep @ p)
    found = _measure(x, orbit, SectionVariant.P)
    sigma, eta = found.u, found.s
    decay = math.exp(-t_eff)

    report = BoundReport()
    report.add(
        "period",
        abs((t_new - t_eff) / 2 - math.log1p(u * s)),
        5 * abs(u * s) * decay,
    )
    report.add("sigma", abs(sigma), 2 * abs(u) * decay)
    report.add("eta", abs(eta), 1.5 * abs(s))
    _add_period_match(report, orbit, t_new)
    report.add(
        "shadowing",
        _shadow(x, orbit, -found.residual_time, t_eff),
        (2 * abs(u) + abs(eta)) * metric_factor,
    )
    report.check("closing lemma I")
    logger.info(
        "Closed orbit of class %s, T=%.9g -> T'=%.9g",
        orbit.cls.word,
        t_eff,
        t_new,
    )
    return ClosingResult(
        orbit, zeta_word, sigma, eta, t_new, t_eff, report, (sigma, eta)
    )


def close_orbit_II(
    x: QuotientPoint,
    T: float,
    coords: SectionCoords,
    metric_factor: float = DEFAULT_METRIC_FACTOR,
) -> ClosingResult:
    """Close a near-return phi_T(x) = x b_s c_u (P' section).

    Raises:
        InvalidParameter: If T < 1 or coords are not P' coordinates.
        IdentifyFailed: If the return cannot be matched.
        BoundViolated: If a closing estimate fails.
    """
    _check_return(T)
    if coords.variant is not SectionVariant.PPRIME:
        msg = "close_orbit_II needs P' section coordinates"
        raise InvalidParameter(msg)
    trail, z = flow_with_word(x, T)
    coords = _fresh_coords(x, z, coords)
    u, s = coords.u, coords.s
    t_eff = T - coords.residual_time
    zeta_word = x.grp.reduce(trail + words.formal_inverse(coords.witness))
    prec = x.rep.precision
    zeta_rel = moebius.a(t_eff, prec) @ moebius.c(-u, prec) @ moebius.b(
        -s, prec
    )
    p, t_new = moebius.axis_normal_form(zeta_rel)
    orbit = _closed(x, zeta_word, x.rep @ p)
    found = _measure(x, orbit, SectionVariant.PPRIME)
    sigma, eta = found.u, found.s
    decay = math.exp(-t_eff)

    report = BoundReport()
    report.add("period", abs((t_new - t_eff) / 2), 4 * abs(u * s) * decay)
    report.add("sigma", abs(sigma), 2 * abs(u) * decay)
    report.add("eta", abs(eta), 1.5 * abs(s))
    _add_period_match(report, orbit, t_new)
    report.add(
        "shadowing",
        _shadow(x, orbit, -found.residual_time, t_eff),
        (2 * abs(u) + abs(eta)) * metric_factor,
    )
    report.check("closing lemma II")
    logger.info(
        "Closed orbit (P') of class %s, T=%.9g -> T'=%.9g",
        orbit.cls.word,
        t_eff,
        t_new,
    )
    return ClosingResult(
        orbit, zeta_word, sigma, eta, t_new, t_eff, report, (sigma, eta)
    )


def _class_word_at(orbit: PeriodicOrbit, t: float) -> tuple[str, str]:
    """(word of gamma with r a_T = gamma r, lift word) at orbit time t."""
    lift_word, _ = orbit.lift(t)
    gamma = words.formal_inverse(lift_word) + orbit.word + lift_word
    return words.free_reduce(gamma), lift_word


def connect_orbits(
    o1: PeriodicOrbit,
    o2: PeriodicOrbit,
    coords: SectionCoords,
    t1: float = 0.0,
    t2: float = 0.0,
    eps: float | None = None,
    metric_factor: float = DEFAULT_METRIC_FACTOR,
) -> ClosingResult:
    """Connect two periodic orbits through a section hit.

    ``coords`` must place o2.point(t2) in the section through
    o1.point(t1), as ``find_section_hits`` reports it.

    Args:
        o1: First orbit, through the section base.
        o2: Second orbit.
        coords: Section coordinates (u, s) of the hit.
        t1: Orbit time of the base on o1.
        t2: Orbit time of the hit on o2.
        eps: Section radius of the estimates; defaults to max(|u|, |s|).
        metric_factor: Scale applied to distance thresholds.

    Raises:
        InvalidParameter: If T1 + T2 < 1.
        IdentifyFailed: If the hit cannot be matched.
        BoundViolated: If an estimate of the connecting lemma fails.
    """
    T1, T2 = o1.period, o2.period
    if T1 + T2 < 1:
        msg = f"T1 + T2 must be >= 1, got {T1 + T2}"
        raise InvalidParameter(msg)
    x1 = o1.point(t1)
    x2 = o2.point(t2)
    coords = _fresh_coords(x1, x2, coords)
    u, s = coords.u, coords.s
    eps = max(abs(u), abs(s)) if eps is None else eps
    gamma1, _ = _class_word_at(o1, t1)
    gamma2, _ = _class_word_at(o2, t2)
    nu = coords.witness
    gamma2_moved = nu + gamma2 + words.formal_inverse(nu)
    zeta_word = o1.grp.reduce(gamma2_moved + gamma1)

    prec = x1.rep.precision
    cb = moebius.c(u, prec) @ moebius.b(s, prec)
    m = cb @ moebius.a(T2, prec) @ cb.inverse() @ moebius.a(T1, prec)
    p, t_new = moebius.axis_normal_form(m)
    orbit = _closed(x1, zeta_word, x1.rep @ p)
    found = _measure(x1, orbit, SectionVariant.P)
    big_u, eta, tau = found.u, found.s, found.residual_time
    sigma = big_u - u * math.exp(-T1)

    report = BoundReport()
    report.add(
        "period",
        abs((t_new - T1 - T2) / 2 - math.log1p(u * s)),
        7 * abs(u * s) * (math.exp(-T1) + math.exp(-T2)),
    )
    report.add("sigma", abs(sigma), 2 * abs(u) * math.exp(-T1 - T2))
    report.add("eta", abs(eta), 1.5 * abs(s))
    _add_period_match(report, orbit, t_new)
    first = _shadow(x1, orbit, -tau, T1)
    report.add("shadow_first", first, 5 * eps * metric_factor)
    second = _shadow(x2, orbit, T1 - tau, T2)
    report.add("shadow_second", second, 5 * eps * metric_factor)
    report.check("connecting lemma")
    logger.info(
        "Connected %s and %s into %s, T'=%.9g",
        o1.cls.word,
        o2.cls.word,
        orbit.cls.word,
        t_new,
    )
    return ClosingResult(
        orbit,
        zeta_word,
        sigma,
        eta,
        t_new,
        T1 + T2,
        report,
        (big_u, eta),
    )
