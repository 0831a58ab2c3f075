"""Partner orbits of periodic orbits with one or two 2-encounters.

All constructions share one mechanism. The orbit is cut at its piercing
points into legs, and a route lists the legs in the order the partner
runs through them, each either forwards or time reversed. Consecutive
legs are glued by the deck transformation that matches the end of one
leg with the start of the next. The glue words spell the partner's
class word, and the glued product of flow segments is a matrix whose
axis is the partner's periodic point. Leg closeness and the action
difference are then measured on that exact point.

The predicted class is computed separately, from the encounter
witnesses and the rewrite rule of the topology, and must agree with the
class the gluing produced.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from collections.abc import Sequence
from typing import Any

import numpy as np
from scipy import optimize

from hgpartners import moebius
from hgpartners import words
from hgpartners.exceptions import AngleTooLarge
from hgpartners.exceptions import ConditionViolated
from hgpartners.exceptions import DegenerateDecomposition
from hgpartners.exceptions import EncounterTypeMismatch
from hgpartners.exceptions import HgPartnersError
from hgpartners.exceptions import InvalidParameter
from hgpartners.exceptions import NotInSection
from hgpartners.exceptions import TrivialWord
from hgpartners.exceptions import WordSplitFailed
from hgpartners.flow import Crossing
from hgpartners.flow import Encounter
from hgpartners.flow import EncounterKind
from hgpartners.flow import PeriodicOrbit
from hgpartners.flow import QuotientPoint
from hgpartners.flow import SectionVariant
from hgpartners.flow import detect_encounters
from hgpartners.flow import orbit_from_word
from hgpartners.flow import refine_encounter
from hgpartners.flow import section_coords
from hgpartners.flow import section_tolerance
from hgpartners.fuchsian import ConjClass
from hgpartners.fuchsian import SurfaceGroup
from hgpartners.moebius import MoebiusElement
from hgpartners.reports import BoundReport

logger = logging.getLogger(__name__)

GRID_STEP = 0.1
SHIFT_STEP = 0.05
TRACE_MATCH_TOL = 1e-8
DEFAULT_METRIC_FACTOR = math.sqrt(2.0)
MAX_ANGLE = 1 / 3
CROSSING_EPS_FACTOR = 1.2
MAX_PAIRS = 200


class Topology(enum.StrEnum):
    SINGLE_ANTIPARALLEL = "single_antiparallel"
    AAS = "aas"
    PPI = "ppi"
    API = "api"
    TWO_CROSSINGS = "two_crossings"


Route = tuple[tuple[int, bool], ...]

# (leg index, time reversed); leg i runs from breakpoint i to i + 1.
ROUTES: dict[Topology, Route] = {
    Topology.SINGLE_ANTIPARALLEL: ((0, True), (1, False)),
    Topology.AAS: ((0, True), (3, False), (2, True), (1, False)),
    Topology.PPI: ((1, False), (0, False), (3, False), (2, False)),
    Topology.API: ((0, True), (1, True), (3, False), (2, False)),
}
ROUTES[Topology.TWO_CROSSINGS] = ROUTES[Topology.AAS]

# Partner uniqueness holds for eps below eps_star / divisor.
UNIQUENESS_DIVISORS = {
    Topology.SINGLE_ANTIPARALLEL: 18,
    Topology.AAS: 40,
    Topology.PPI: 38,
    Topology.API: 38,
    Topology.TWO_CROSSINGS: 12,
}


@dataclasses.dataclass(frozen=True)
class PartnershipCertificate:
    """Witness that two periodic orbits form an eps-orbit pair.

    Original leg j covers ``original_breaks[j]..original_breaks[j+1]``
    measured from the original's time ``origin[0]``; it is shadowed by
    partner leg ``permutation[j]``, whose breaks are measured from the
    partner's time ``origin[1]``. A reversed leg is shadowed by the
    time reversal of the partner, aligned at the partner leg's end.
    """

    original_breaks: tuple[float, ...]
    partner_breaks: tuple[float, ...]
    permutation: tuple[int, ...]
    reversed: tuple[bool, ...]
    leg_distances: tuple[float, ...]
    origin: tuple[float, float]
    eps: float

    @property
    def legs(self) -> int:
        return len(self.permutation)

    @property
    def closeness(self) -> float:
        return max(self.leg_distances)

    def to_dict(self) -> dict[str, Any]:
        return {
            "original_breaks": list(self.original_breaks),
            "partner_breaks": list(self.partner_breaks),
            "permutation": list(self.permutation),
            "reversed": list(self.reversed),
            "leg_distances": list(self.leg_distances),
            "origin": list(self.origin),
            "eps": self.eps,
        }


@dataclasses.dataclass
class Rewiring:
    """A glued pseudo-orbit and the periodic orbit at its axis.

    ``sections[k]`` holds the section coordinates (sigma, eta) of the
    partner point next to the start of route leg k, ``points[k]`` that
    partner point itself.
    """

    word: str
    period: float
    orbit: PeriodicOrbit
    sections: list[tuple[float, float]]
    points: list[QuotientPoint]
    certificate: PartnershipCertificate | None


@dataclasses.dataclass
class PartnerResult:
    """A constructed partner orbit and everything verified about it."""

    original: PeriodicOrbit
    partner: PeriodicOrbit
    predicted_class: ConjClass
    topology: Topology
    action_diff: float
    target: float
    bound_report: BoundReport
    closeness: float
    distinctness: bool
    certificate: PartnershipCertificate
    eps: float
    encounters: tuple[Encounter, ...]
    conditions: BoundReport
    intermediate: BoundReport
    uniqueness: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {
            "topology": str(self.topology),
            "original_class": words.to_signed(self.original.cls.word),
            "partner_class": words.to_signed(self.partner.cls.word),
            "predicted_class": words.to_signed(self.predicted_class.word),
            "letters": {
                "original": self.original.cls.word,
                "partner": self.partner.cls.word,
            },
            "T": self.original.period,
            "T_partner": self.partner.period,
            "action_diff": self.action_diff,
            "target": self.target,
            "closeness": self.closeness,
            "distinctness": self.distinctness,
            "eps": self.eps,
            "encounters": [enc.to_dict() for enc in self.encounters],
            "bounds": self.bound_report.to_dict(),
            "conditions": self.conditions.to_dict(),
            "intermediate": self.intermediate.to_dict(),
            "uniqueness": self.uniqueness,
            "certificate": self.certificate.to_dict(),
        }


def _grid(length: float) -> np.ndarray:
    n = max(1, math.ceil(length / GRID_STEP))
    return np.linspace(0.0, length, n + 1)


def _arc(start: float, end: float, period: float) -> float:
    return (end - start) % period


def _inside(p: float, start: float, end: float, period: float) -> bool:
    return 0 < _arc(start, p, period) < _arc(start, end, period)


def _unwrap(times: Sequence[float], period: float) -> list[float]:
    """Times as an increasing sequence starting at times[0]."""
    start = times[0]
    return [start + _arc(start, t, period) for t in times]


def _durations(breaks: Sequence[float], period: float) -> list[float]:
    tail = breaks[0] + period - breaks[-1]
    return [b - a for a, b in zip(breaks, breaks[1:], strict=False)] + [tail]


def _flip(enc: Encounter) -> Encounter:
    """The same antiparallel encounter based at its other point."""
    return dataclasses.replace(
        enc, t1=enc.t2, t2=enc.t1, coords=enc.coords.swapped()
    )


def _require_kind(enc: Encounter, kind: EncounterKind) -> None:
    if enc.kind is not kind:
        msg = f"Expected a {kind} encounter, got {enc.kind}"
        raise EncounterTypeMismatch(msg)


def _check_eps(grp: SurfaceGroup, eps: float) -> None:
    if not 0 < eps < grp.sigma0 / 8:
        msg = f"eps={eps} must lie in (0, sigma0/8={grp.sigma0 / 8:.6g})"
        raise InvalidParameter(msg)


def _check_coords(eps: float, encs: Sequence[Encounter]) -> None:
    for enc in encs:
        if not (abs(enc.u) < eps and abs(enc.s) < eps):
            msg = (
                f"Encounter coordinates ({enc.u:.6g}, {enc.s:.6g}) "
                f"exceed eps={eps:.6g}"
            )
            raise ConditionViolated(msg)


def _lift_words(
    orbit: PeriodicOrbit, breaks: Sequence[float]
) -> tuple[list[str], list[MoebiusElement]]:
    """Lift words and points at the breaks, closed up by one period."""
    lifts = [orbit.lift(b) for b in breaks]
    pis = [w for w, _ in lifts]
    pis.append(words.free_reduce(orbit.word + pis[0]))
    points = [r for _, r in lifts]
    points.append(points[0])
    return pis, points


def rewire(
    orbit: PeriodicOrbit,
    breaks: Sequence[float],
    route: Route,
    radius: float,
) -> Rewiring:
    """Glue the legs of orbit along route into a periodic orbit.

    Args:
        orbit: The original orbit.
        breaks: Increasing leg boundaries within one period.
        route: Legs in partner order with their orientation.
        radius: Section radius of the encounters being rewired.

    Raises:
        WordSplitFailed: If two consecutive legs do not join or the
            glued word is trivial.
        NotHyperbolic: If the glued product is not hyperbolic.
    """
    grp = orbit.grp
    prec = grp.precision
    durations = _durations(breaks, orbit.period)
    pis, points = _lift_words(orbit, breaks)
    trails = [
        grp.reduce(words.formal_inverse(pis[i]) + pis[i + 1])
        for i in range(len(breaks))
    ]
    legs = []
    for index, backwards in route:
        if backwards:
            legs.append(
                (
                    points[index + 1] @ moebius.D_PI,
                    words.formal_inverse(trails[index]),
                    points[index] @ moebius.D_PI,
                )
            )
        else:
            legs.append((points[index], trails[index], points[index + 1]))

    tol = section_tolerance(grp, radius)
    n = len(legs)
    pieces, steps = [], []
    for k, (_, trail, end) in enumerate(legs):
        following = legs[(k + 1) % n][0]
        glue = grp.identify(end, following, tol)
        if glue is None:
            msg = f"Route leg {k} does not join route leg {(k + 1) % n}"
            raise WordSplitFailed(msg)
        pieces.append(trail + glue)
        junction = end.inverse() @ grp.evaluate(glue) @ following
        steps.append(moebius.a(durations[route[k][0]], prec) @ junction)

    forms = []
    for k in range(n):
        m = MoebiusElement.identity(prec)
        for j in range(n):
            m = m @ steps[(k + j) % n]
        forms.append(moebius.axis_normal_form(m))
    cubs = [moebius.decompose_cub(form.p) for form in forms]
    elapsed = []
    for k in range(n):
        link = forms[k].p.inverse() @ steps[k] @ forms[(k + 1) % n].p
        rho = 2 * math.log(abs(float(link.a)))
        elapsed.append(float(cubs[k].t) - float(cubs[(k + 1) % n].t) + rho)

    sections = [(float(c.u), float(c.s)) for c in cubs]
    section_points = [
        QuotientPoint(
            start @ moebius.c(sigma, prec) @ moebius.b(eta, prec), grp
        )
        for (start, _, _), (sigma, eta) in zip(legs, sections, strict=True)
    ]
    dists = []
    for k, (index, backwards) in enumerate(route):
        taus = _grid(durations[index])
        shift = elapsed[k] - durations[index] if backwards else 0.0
        sigma, eta = sections[k]
        profile = moebius.cb_profile(
            sigma * np.exp(taus), eta * np.exp(-taus), shift
        )
        dists.append(float(np.max(profile)))

    word = grp.reduce("".join(pieces))
    start = legs[0][0] @ forms[0].p @ moebius.a(-float(cubs[0].t), prec)
    try:
        partner = orbit_from_word(
            grp, word, conjugator=start, allow_powers=True
        )
    except TrivialWord as exc:
        msg = "Rewired word is trivial"
        raise WordSplitFailed(msg) from exc

    certificate = None
    if sorted(index for index, _ in route) == list(range(len(breaks))):
        perm = [0] * n
        flags = [False] * n
        by_leg = [0.0] * n
        for k, (index, backwards) in enumerate(route):
            perm[index] = k
            flags[index] = backwards
            by_leg[index] = dists[k]
        certificate = PartnershipCertificate(
            original_breaks=tuple(
                [b - breaks[0] for b in breaks] + [orbit.period]
            ),
            partner_breaks=tuple(
                float(v) for v in np.concatenate([[0.0], np.cumsum(elapsed)])
            ),
            permutation=tuple(perm),
            reversed=tuple(flags),
            leg_distances=tuple(by_leg),
            origin=(breaks[0] % orbit.period, 0.0),
            eps=math.inf,
        )
    logger.debug(
        "Rewired %s along %s: %s, T'=%.9g",
        orbit.cls.word,
        route,
        partner.cls.word,
        forms[0].period,
    )
    return Rewiring(
        word, forms[0].period, partner, sections, section_points, certificate
    )


def predicted_word(
    orbit: PeriodicOrbit,
    breaks: Sequence[float],
    witnesses: Sequence[str],
    route: Route,
) -> str:
    """Rewrite the orbit word by the route, using encounter witnesses.

    With lifts g_i = nu_i pi_i^{-1} ... the pieces gamma_i satisfy
    g_i a_{T_i} = gamma_i g_{i+1}; the route concatenates gamma_i for
    forward legs and gamma_i^{-1} for reversed ones.
    """
    pis, _ = _lift_words(orbit, breaks)
    nus = [*witnesses, witnesses[0]]
    marks = [
        nu + words.formal_inverse(pi) for nu, pi in zip(nus, pis, strict=True)
    ]
    gammas = [
        marks[i] + words.formal_inverse(marks[i + 1])
        for i in range(len(breaks))
    ]
    parts = [
        words.formal_inverse(gammas[index]) if backwards else gammas[index]
        for index, backwards in route
    ]
    return orbit.grp.reduce("".join(parts))


def _match_classes(
    grp: SurfaceGroup, constructed: ConjClass, word: str
) -> ConjClass:
    try:
        predicted = grp.canonical_class(word)
    except TrivialWord as exc:
        msg = "Predicted partner class is trivial"
        raise WordSplitFailed(msg) from exc
    if predicted.word == constructed.word:
        return predicted
    msg = (
        f"Constructed class {constructed.word} (trace "
        f"{constructed.trace:.12g}) differs from predicted {predicted.word} "
        f"(trace {predicted.trace:.12g})"
    )
    raise WordSplitFailed(msg)


def _distinct(
    grp: SurfaceGroup, original: ConjClass, partner: ConjClass
) -> bool:
    inverse = grp.canonical_class(words.formal_inverse(original.word))
    return partner.word not in (original.word, inverse.word)


def _uniqueness(
    topology: Topology, scale: float, eps_star: float
) -> dict[str, Any]:
    limit = eps_star / UNIQUENESS_DIVISORS[topology]
    return {
        "scale": scale,
        "eps_star": eps_star,
        "limit": limit,
        "unique": scale < limit,
    }


def _build(
    orbit: PeriodicOrbit,
    topology: Topology,
    breaks: Sequence[float],
    witnesses: Sequence[str],
    radius: float,
) -> tuple[Rewiring, ConjClass]:
    route = ROUTES[topology]
    rewiring = rewire(orbit, breaks, route, radius)
    predicted = _match_classes(
        orbit.grp,
        rewiring.orbit.cls,
        predicted_word(orbit, breaks, witnesses, route),
    )
    if not words.is_primitive_word(rewiring.orbit.cls.word):
        msg = f"Partner class {rewiring.orbit.cls.word} is a proper power"
        raise WordSplitFailed(msg)
    return rewiring, predicted


def _finish(
    orbit: PeriodicOrbit,
    topology: Topology,
    rewiring: Rewiring,
    predicted: ConjClass,
    encs: tuple[Encounter, ...],
    eps: float,
    target: float,
    action_bound: float,
    closeness_limit: float,
    conditions: BoundReport,
    intermediate: BoundReport,
    uniqueness: dict[str, Any],
    strict: bool,
    extra: BoundReport | None = None,
) -> PartnerResult:
    action_diff = (rewiring.period - orbit.period) / 2
    certificate = dataclasses.replace(
        rewiring.certificate, eps=closeness_limit
    )
    report = BoundReport()
    report.add("action", abs(action_diff - target), action_bound)
    report.add("closeness", certificate.closeness, closeness_limit)
    report.add(
        "trace_period",
        abs(rewiring.orbit.period - rewiring.period),
        TRACE_MATCH_TOL * max(1.0, rewiring.period),
    )
    if extra is not None:
        report.extend(extra)
    report.check(f"{topology} partner")
    if strict:
        intermediate.check(f"{topology} intermediate estimates")
    distinct = _distinct(orbit.grp, orbit.cls, rewiring.orbit.cls)
    if not distinct:
        logger.warning(
            "Partner of %s (%s) repeats the original class or its inverse",
            orbit.cls.word,
            topology,
        )
    logger.info(
        "Built %s partner %s of %s: action difference %.6g, target %.6g",
        topology,
        rewiring.orbit.cls.word,
        orbit.cls.word,
        action_diff,
        target,
    )
    return PartnerResult(
        original=orbit,
        partner=rewiring.orbit,
        predicted_class=predicted,
        topology=topology,
        action_diff=action_diff,
        target=target,
        bound_report=report,
        closeness=certificate.closeness,
        distinctness=distinct,
        certificate=certificate,
        eps=eps,
        encounters=encs,
        conditions=conditions,
        intermediate=intermediate,
        uniqueness=uniqueness,
    )


def _eps_star(grp: SurfaceGroup, eps_star: float | None) -> float:
    return grp.sigma0 / 4 if eps_star is None else eps_star


def partner_single_antiparallel(
    orbit: PeriodicOrbit,
    enc: Encounter,
    eps: float | None = None,
    metric_factor: float = DEFAULT_METRIC_FACTOR,
    eps_star: float | None = None,
    strict: bool = False,
) -> PartnerResult:
    """Partner of an orbit with one antiparallel 2-encounter.

    With x = point(t1), y = point(t2) and T(y) = x c_u b_s, the partner
    runs the stretch x -> y backwards and y -> x forwards; its class is
    {gamma_1^{-1} gamma_2}.

    Args:
        orbit: The original orbit, T > 1.
        enc: An antiparallel encounter of the orbit.
        eps: Encounter radius bound; defaults to the encounter radius.
        metric_factor: Scale of distance thresholds.
        eps_star: Expansivity constant; defaults to sigma0 / 4.
        strict: Also enforce the finer single-encounter estimates.

    Raises:
        EncounterTypeMismatch: If the encounter is parallel.
        ConditionViolated: If the coordinates exceed eps or the
            closeness radius eps' reaches 8 eps.
        WordSplitFailed: If the rewired class is trivial, a proper
            power, or differs from the prediction.
        BoundViolated: If a verified estimate fails.
    """
    _require_kind(enc, EncounterKind.ANTIPARALLEL)
    grp = orbit.grp
    eps = enc.radius if eps is None else eps
    _check_eps(grp, eps)
    if not orbit.period > 1:
        msg = f"Orbit period must exceed 1, got {orbit.period}"
        raise InvalidParameter(msg)
    _check_coords(eps, (enc,))
    period = orbit.period
    breaks = _unwrap([enc.t1, enc.t2], period)
    t1, t2 = _durations(breaks, period)
    topology = Topology.SINGLE_ANTIPARALLEL
    u, s = enc.u, enc.s
    eps_prime = eps + 2 * (
        abs(u - s * math.exp(-t1)) + abs(s - u * math.exp(-t2))
    )
    conditions = BoundReport()
    conditions.add("eps_prime", eps_prime, 8 * eps)
    _enforce(conditions, topology)
    rewiring, predicted = _build(
        orbit, topology, breaks, ["", enc.coords.witness], eps
    )

    s_t = u - s * math.exp(-t1)
    u_t = s - u * math.exp(-t2)
    sigma_leg, eta = rewiring.sections[1]
    sigma = sigma_leg - u * math.exp(-t2)
    intermediate = BoundReport()
    intermediate.add("sigma", abs(sigma), 2 * abs(u_t) * math.exp(-period))
    intermediate.add(
        "eta",
        abs(eta - s_t),
        2 * s_t * s_t * abs(u_t) + 2 * abs(s_t) * math.exp(-period),
    )
    intermediate.add(
        "action_fine",
        abs((rewiring.period - period) / 2 - math.log1p(s_t * u_t)),
        abs(s_t * u_t) * math.exp(-period),
    )
    return _finish(
        orbit,
        topology,
        rewiring,
        predicted,
        (enc,),
        eps,
        target=math.log1p(u * s),
        action_bound=12 * eps**2 * (math.exp(-t1) + math.exp(-t2)),
        closeness_limit=eps_prime * metric_factor,
        conditions=conditions,
        intermediate=intermediate,
        uniqueness=_uniqueness(topology, eps, _eps_star(grp, eps_star)),
        strict=strict,
    )


def aas_layout(
    orbit: PeriodicOrbit, enc1: Encounter, enc2: Encounter
) -> tuple[list[float], list[str], tuple[Encounter, Encounter]]:
    """Label two serial antiparallel encounters as x, y, z, w.

    The first encounter becomes T(z) in P(y), the second T(w) in P(x),
    with the cyclic order x, y, z, w along the orbit.

    Returns:
        (breaks from x, witnesses per break, relabeled encounters).

    Raises:
        EncounterTypeMismatch: If an encounter is parallel or the two
            encounters interleave.
    """
    _require_kind(enc1, EncounterKind.ANTIPARALLEL)
    _require_kind(enc2, EncounterKind.ANTIPARALLEL)
    period = orbit.period
    others = (enc2.t1, enc2.t2)
    if not any(_inside(p, enc1.t1, enc1.t2, period) for p in others):
        first = enc1
    elif not any(_inside(p, enc1.t2, enc1.t1, period) for p in others):
        first = _flip(enc1)
    else:
        msg = "Antiparallel encounters interleave; aas needs them serial"
        raise EncounterTypeMismatch(msg)
    z = first.t2
    if _arc(z, enc2.t1, period) < _arc(z, enc2.t2, period):
        second = _flip(enc2)
    else:
        second = enc2
    breaks = _unwrap([second.t1, first.t1, first.t2, second.t2], period)
    witnesses = ["", "", first.coords.witness, second.coords.witness]
    return breaks, witnesses, (first, second)


def ppi_layout(
    orbit: PeriodicOrbit, enc1: Encounter, enc2: Encounter
) -> tuple[list[float], list[str], tuple[Encounter, Encounter]]:
    """Label two intertwined parallel encounters as x < y < z < w.

    z lies in P(x) and w in P(y). The encounters may trade roles so
    that both are based at their earlier point.

    Raises:
        EncounterTypeMismatch: If an encounter is antiparallel or the
            two are not intertwined.
    """
    _require_kind(enc1, EncounterKind.PARALLEL)
    _require_kind(enc2, EncounterKind.PARALLEL)
    period = orbit.period
    first_in = _inside(enc2.t1, enc1.t1, enc1.t2, period)
    second_in = _inside(enc2.t2, enc1.t1, enc1.t2, period)
    if first_in == second_in:
        msg = "Parallel encounters are not intertwined"
        raise EncounterTypeMismatch(msg)
    first, second = (enc1, enc2) if first_in else (enc2, enc1)
    breaks = _unwrap([first.t1, second.t1, first.t2, second.t2], period)
    witnesses = ["", "", first.coords.witness, second.coords.witness]
    return breaks, witnesses, (first, second)


def api_layout(
    orbit: PeriodicOrbit, enc_par: Encounter, enc_anti: Encounter
) -> tuple[list[float], list[str], tuple[Encounter, Encounter]]:
    """Label intertwined parallel and antiparallel encounters.

    z lies in P(x) and T(w) in P(y), with y between x and z.

    Raises:
        EncounterTypeMismatch: On wrong kinds or a serial arrangement.
    """
    _require_kind(enc_par, EncounterKind.PARALLEL)
    _require_kind(enc_anti, EncounterKind.ANTIPARALLEL)
    period = orbit.period
    x, z = enc_par.t1, enc_par.t2
    first_in = _inside(enc_anti.t1, x, z, period)
    second_in = _inside(enc_anti.t2, x, z, period)
    if first_in == second_in:
        msg = "Parallel and antiparallel encounters are not intertwined"
        raise EncounterTypeMismatch(msg)
    second = enc_anti if first_in else _flip(enc_anti)
    breaks = _unwrap([x, second.t1, z, second.t2], period)
    witnesses = ["", "", enc_par.coords.witness, second.coords.witness]
    return breaks, witnesses, (enc_par, second)


def _two_encounter_eps(
    grp: SurfaceGroup,
    encs: tuple[Encounter, Encounter],
    eps: float | None,
) -> float:
    eps = max(e.radius for e in encs) if eps is None else eps
    _check_eps(grp, eps)
    _check_coords(eps, encs)
    return eps


def _enforce(conditions: BoundReport, topology: Topology) -> None:
    if not conditions.passed:
        names = ", ".join(e.name for e in conditions.violations)
        msg = f"{topology} conditions fail: {names}"
        raise ConditionViolated(msg)


def _aas_conditions(
    eps: float, u1: float, s1: float, ts: Sequence[float]
) -> BoundReport:
    e1, e2, e3, _ = (math.exp(-t) for t in ts)
    conditions = BoundReport()
    # Entries read lhs < rhs, so |u1| and |s1| sit on the right.
    conditions.add("u1", 6 * eps * e2, abs(u1))
    conditions.add(
        "s1",
        30 * eps**3 + 13 * eps * e1 + 5 * eps * e2 + 3 * eps * e3,
        abs(s1),
    )
    return conditions


def _intermediate_section(
    rewiring: Rewiring, base_leg: int, target_leg: int, radius: float
) -> tuple[float, float] | None:
    base = rewiring.points[base_leg].time_reverse()
    try:
        coords = section_coords(
            base,
            rewiring.points[target_leg],
            SectionVariant.P,
            radius,
            time_tol=math.inf,
        )
    except (NotInSection, DegenerateDecomposition):
        return None
    if coords is None:
        return None
    return coords.u, coords.s


def _aas_intermediate(
    orbit: PeriodicOrbit,
    breaks: Sequence[float],
    encs: tuple[Encounter, Encounter],
    eps: float,
) -> BoundReport:
    ts = _durations(breaks, orbit.period)
    first, second = encs
    report = BoundReport()
    route: Route = ((3, False), (2, True), (1, True), (0, True))
    try:
        half = rewire(orbit, breaks, route, eps)
    except HgPartnersError as exc:
        logger.debug("aas intermediate orbit unavailable: %s", exc)
        report.add("intermediate_orbit", math.inf, 0.0)
        return report
    report.add(
        "half_action",
        abs(
            (half.period - orbit.period) / 2
            - math.log1p(second.u * second.s)
        ),
        12 * eps**2 * (math.exp(-ts[3]) + math.exp(-sum(ts[:3]))),
    )
    coords = _intermediate_section(half, 2, 3, 2 * eps)
    u_t, s_t = coords if coords is not None else (math.inf, math.inf)
    report.add(
        "u1_tilde",
        abs(u_t - first.s),
        7 * eps * math.exp(-ts[0]) + 2 * eps * math.exp(-ts[2]),
    )
    report.add("s1_tilde", abs(s_t - first.u), eps * math.exp(-ts[2]))
    return report


def _aas_core(
    orbit: PeriodicOrbit,
    enc1: Encounter,
    enc2: Encounter,
    eps: float | None,
    enforce_conditions: bool,
    topology: Topology,
) -> tuple[
    list[float],
    tuple[Encounter, Encounter],
    float,
    BoundReport,
    Rewiring,
    ConjClass,
]:
    breaks, witnesses, encs = aas_layout(orbit, enc1, enc2)
    eps = _two_encounter_eps(orbit.grp, encs, eps)
    ts = _durations(breaks, orbit.period)
    conditions = _aas_conditions(eps, encs[0].u, encs[0].s, ts)
    if enforce_conditions:
        _enforce(conditions, topology)
    rewiring, predicted = _build(orbit, topology, breaks, witnesses, eps)
    return breaks, encs, eps, conditions, rewiring, predicted


def _target(encs: Sequence[Encounter]) -> float:
    return sum(math.log1p(enc.u * enc.s) for enc in encs)


def partner_aas(
    orbit: PeriodicOrbit,
    enc1: Encounter,
    enc2: Encounter,
    eps: float | None = None,
    metric_factor: float = DEFAULT_METRIC_FACTOR,
    eps_star: float | None = None,
    strict: bool = False,
    enforce_conditions: bool = True,
) -> PartnerResult:
    """Partner of an orbit with two serial antiparallel encounters.

    The class is {gamma_1^{-1} gamma_4 gamma_3^{-1} gamma_2}.

    Raises:
        EncounterTypeMismatch: On parallel or interleaved encounters.
        ConditionViolated: If the coordinate conditions on (u1, s1)
            fail and enforce_conditions is set.
        WordSplitFailed: If the rewired class is degenerate or differs
            from the prediction.
        BoundViolated: If a verified estimate fails.
    """
    topology = Topology.AAS
    breaks, encs, eps, conditions, rewiring, predicted = _aas_core(
        orbit, enc1, enc2, eps, enforce_conditions, topology
    )
    ts = _durations(breaks, orbit.period)
    e = [math.exp(-t) for t in ts]
    return _finish(
        orbit,
        topology,
        rewiring,
        predicted,
        encs,
        eps,
        target=_target(encs),
        action_bound=eps**2
        * (21 * e[0] + 30 * e[1] + 12 * e[2] + 19 * e[3]),
        closeness_limit=20 * eps * metric_factor,
        conditions=conditions,
        intermediate=_aas_intermediate(orbit, breaks, encs, eps),
        uniqueness=_uniqueness(
            topology, eps, _eps_star(orbit.grp, eps_star)
        ),
        strict=strict,
    )


def _parallel_intermediate(
    orbit: PeriodicOrbit,
    breaks: Sequence[float],
    enc: Encounter,
    eps: float,
) -> BoundReport:
    """Closing estimates of the two loops cut out by the encounter (x, z)."""
    halves = [breaks[0], breaks[2]]
    ts = _durations(halves, orbit.period)
    us = enc.u * enc.s
    report = BoundReport()
    for index, target, factor in ((0, math.log1p(us), 5), (1, 0.0, 4)):
        try:
            loop = rewire(orbit, halves, ((index, False),), eps)
        except HgPartnersError as exc:
            logger.debug("Loop %d unavailable: %s", index, exc)
            report.add(f"loop{index}_action", math.inf, 0.0)
            continue
        report.add(
            f"loop{index}_action",
            abs((loop.period - ts[index]) / 2 - target),
            factor * abs(us) * math.exp(-ts[index]),
        )
    return report


def _intertwined_conditions(
    eps: float,
    encs: tuple[Encounter, Encounter],
    ts: Sequence[float],
    with_alternative: bool,
) -> tuple[BoundReport, bool]:
    e1, e2, e3, e4 = (math.exp(-t) for t in ts)
    first, second = encs
    report = BoundReport()
    report.add("u1", 9 * eps * e3, abs(first.u))
    report.add("s1", 72 * eps**3 + 5 * eps * e4 + 2 * eps * e2, abs(first.s))
    held = report.passed
    if with_alternative:
        alt = BoundReport()
        alt.add("u2", 9 * eps * e4, abs(second.u))
        alt.add("s2", 72 * eps**3 + 5 * eps * e1 + 2 * eps * e3, abs(second.s))
        held = held or alt.passed
        report.extend(alt)
    return report, held


def partner_ppi(
    orbit: PeriodicOrbit,
    enc1: Encounter,
    enc2: Encounter,
    eps: float | None = None,
    metric_factor: float = DEFAULT_METRIC_FACTOR,
    eps_star: float | None = None,
    strict: bool = False,
    enforce_conditions: bool = True,
) -> PartnerResult:
    """Partner of an orbit with two intertwined parallel encounters.

    The class is {gamma_2 gamma_1 gamma_4 gamma_3}. Either of the two
    symmetric coordinate conditions suffices.

    Raises:
        EncounterTypeMismatch: On antiparallel or serial encounters.
        ConditionViolated: If neither condition holds and
            enforce_conditions is set.
        WordSplitFailed: If the rewired class is degenerate or differs
            from the prediction.
        BoundViolated: If a verified estimate fails.
    """
    topology = Topology.PPI
    breaks, witnesses, encs = ppi_layout(orbit, enc1, enc2)
    eps = _two_encounter_eps(orbit.grp, encs, eps)
    ts = _durations(breaks, orbit.period)
    conditions, held = _intertwined_conditions(eps, encs, ts, True)
    if enforce_conditions and not held:
        msg = f"{topology} conditions fail for both encounters"
        raise ConditionViolated(msg)
    rewiring, predicted = _build(orbit, topology, breaks, witnesses, eps)
    e = [math.exp(-t) for t in ts]
    return _finish(
        orbit,
        topology,
        rewiring,
        predicted,
        encs,
        eps,
        target=_target(encs),
        action_bound=54 * eps**4 + 25 * eps**2 * sum(e),
        closeness_limit=19 * eps * metric_factor,
        conditions=conditions,
        intermediate=_parallel_intermediate(orbit, breaks, encs[0], eps),
        uniqueness=_uniqueness(
            topology, eps, _eps_star(orbit.grp, eps_star)
        ),
        strict=strict,
    )


def partner_api(
    orbit: PeriodicOrbit,
    enc_par: Encounter,
    enc_anti: Encounter,
    eps: float | None = None,
    metric_factor: float = DEFAULT_METRIC_FACTOR,
    eps_star: float | None = None,
    strict: bool = False,
    enforce_conditions: bool = True,
) -> PartnerResult:
    """Partner of an orbit with intertwined parallel and antiparallel
    encounters.

    The class is {gamma_1^{-1} gamma_2^{-1} gamma_4 gamma_3}.

    Raises:
        EncounterTypeMismatch: On wrong kinds or a serial arrangement.
        ConditionViolated: If the condition on (u1, s1) fails and
            enforce_conditions is set.
        WordSplitFailed: If the rewired class is degenerate or differs
            from the prediction.
        BoundViolated: If a verified estimate fails.
    """
    topology = Topology.API
    breaks, witnesses, encs = api_layout(orbit, enc_par, enc_anti)
    eps = _two_encounter_eps(orbit.grp, encs, eps)
    ts = _durations(breaks, orbit.period)
    conditions, _ = _intertwined_conditions(eps, encs, ts, False)
    if enforce_conditions:
        _enforce(conditions, topology)
    rewiring, predicted = _build(orbit, topology, breaks, witnesses, eps)
    e1, _, e3, e4 = (math.exp(-t) for t in ts)
    return _finish(
        orbit,
        topology,
        rewiring,
        predicted,
        encs,
        eps,
        target=_target(encs),
        action_bound=54 * eps**4 + 25 * eps**2 * (e1 + e3 + e4),
        closeness_limit=19 * eps * metric_factor,
        conditions=conditions,
        intermediate=_parallel_intermediate(orbit, breaks, encs[0], eps),
        uniqueness=_uniqueness(
            topology, eps, _eps_star(orbit.grp, eps_star)
        ),
        strict=strict,
    )


def crossing_encounter(
    orbit: PeriodicOrbit, crossing: Crossing, eps: float
) -> Encounter:
    """The antiparallel encounter of a nearly head-on self-crossing.

    T(point(tau + L + tau')) = point(tau) d_psi, where d_psi
    decomposes as c_u b_s a_tau'.

    Raises:
        WordSplitFailed: If the crossing does not snap onto a section.
    """
    prec = orbit.grp.precision
    shift = float(moebius.decompose_cub(moebius.d(crossing.psi, prec)).t)
    t2 = (crossing.tau + crossing.L + shift) % orbit.period
    enc = refine_encounter(
        orbit, orbit, crossing.tau, t2, EncounterKind.ANTIPARALLEL, eps
    )
    if enc is None:
        msg = f"Crossing at tau={crossing.tau:.6g} gives no section hit"
        raise WordSplitFailed(msg)
    return enc


def crossing_partner(
    orbit: PeriodicOrbit,
    c1: Crossing,
    c2: Crossing,
    metric_factor: float = DEFAULT_METRIC_FACTOR,
    eps_star: float | None = None,
    strict: bool = False,
) -> PartnerResult:
    """Partner of an orbit with two small-angle self-crossings.

    Each crossing is turned into an antiparallel encounter and the pair
    is rewired as two serial antiparallel encounters, with
    eps = 1.2 |sin(phi / 2)| for the larger deviation phi from a
    head-on crossing.

    Raises:
        AngleTooLarge: If phi >= 1/3.
        InvalidParameter: If phi is zero.
        EncounterTypeMismatch: If the two crossing loops interleave.
        WordSplitFailed: If the rewiring degenerates.
        BoundViolated: If a verified estimate fails.
    """
    phi = max(abs(c1.psi), abs(c2.psi))
    if not phi < MAX_ANGLE:
        msg = f"Crossing deviation {phi:.6g} must be below {MAX_ANGLE:.6g}"
        raise AngleTooLarge(msg)
    if phi == 0:
        msg = "Crossing deviation must be nonzero"
        raise InvalidParameter(msg)
    half_sin = abs(math.sin(phi / 2))
    eps = CROSSING_EPS_FACTOR * half_sin
    topology = Topology.TWO_CROSSINGS
    enc1 = crossing_encounter(orbit, c1, eps)
    enc2 = crossing_encounter(orbit, c2, eps)
    breaks, encs, eps, conditions, rewiring, predicted = _aas_core(
        orbit, enc1, enc2, eps, False, topology
    )
    ts = _durations(breaks, orbit.period)
    e = [math.exp(-t) for t in ts]
    target = _target(encs)
    action_diff = (rewiring.period - orbit.period) / 2
    checks = BoundReport()
    checks.add(
        "action_sin",
        abs(action_diff - target),
        half_sin**2 * (21 * e[0] + 31 * e[1] + 13 * e[2] + 19 * e[3]),
    )
    checks.add("shorter", rewiring.period, orbit.period)
    return _finish(
        orbit,
        topology,
        rewiring,
        predicted,
        encs,
        eps,
        target=target,
        action_bound=eps**2
        * (21 * e[0] + 30 * e[1] + 12 * e[2] + 19 * e[3]),
        closeness_limit=36 * half_sin * metric_factor,
        conditions=conditions,
        intermediate=BoundReport(),
        uniqueness=_uniqueness(
            topology, phi, _eps_star(orbit.grp, eps_star)
        ),
        strict=strict,
        extra=checks,
    )


def _near_count(grp: SurfaceGroup) -> int:
    return grp.ball.count_within(2 * grp.circumradius + 1.0)


def _distances_to(
    grp: SurfaceGroup, target: np.ndarray, mats: np.ndarray
) -> np.ndarray:
    """Quotient distances from one reduced matrix to many, below 1."""
    near = grp.ball.matrices[: _near_count(grp)].astype(np.float64)
    cand = np.einsum("kij,njl->nkil", near, mats.astype(np.float64))
    dist = moebius.group_distance_batch(
        np.asarray(target, dtype=np.float64), cand.reshape(-1, 2, 2)
    )
    return dist.reshape(len(mats), len(near)).min(axis=1)


def _point_distance(x: QuotientPoint, y: QuotientPoint) -> float:
    return float(
        _distances_to(x.grp, x.rep.m, y.rep.m[np.newaxis])[0]
    )


def best_shift(
    o1: PeriodicOrbit, o2: PeriodicOrbit
) -> tuple[float, float]:
    """Time on o2 closest to o1.base, with that distance.

    A scan on a 0.05 grid is refined by bounded scalar minimization.
    """
    target = o1.base
    times, mats = o2.sample(SHIFT_STEP)
    dist = _distances_to(o1.grp, target.rep.m, mats)
    k = int(np.argmin(dist))
    guess = float(times[k])
    res = optimize.minimize_scalar(
        lambda t: _point_distance(target, o2.point(t)),
        bounds=(guess - SHIFT_STEP, guess + SHIFT_STEP),
        method="bounded",
        options={"xatol": 1e-10},
    )
    if res.success and res.fun < dist[k]:
        return float(res.x) % o2.period, float(res.fun)
    return guess, float(dist[k])


def _shadow_distances(
    o1: PeriodicOrbit, o2: PeriodicOrbit, shift: float, length: float
) -> np.ndarray:
    return np.array(
        [
            _point_distance(o1.point(t), o2.point(t + shift))
            for t in _grid(length)
        ]
    )


def orbits_coincide(
    o1: PeriodicOrbit, o2: PeriodicOrbit, eps: float
) -> bool:
    """Whether o2 stays eps-close to o1 for a whole period.

    Orbits whose periods differ by more than sqrt(2) eps never coincide.
    """
    if abs(o1.period - o2.period) > math.sqrt(2.0) * eps:
        return False
    shift, start = best_shift(o1, o2)
    if start >= eps:
        return False
    dist = _shadow_distances(o1, o2, shift, o1.period)
    return bool(np.max(dist) < eps)


def _trivial_certificate(
    o: PeriodicOrbit, p: PeriodicOrbit, eps: float
) -> PartnershipCertificate | None:
    shift, _ = best_shift(o, p)
    half = o.period / 2
    legs = []
    for start, partner_start in ((0.0, 0.0), (half, p.period / 2)):
        dist = _shadow_distances(
            o.shifted(start), p.shifted(partner_start), shift, half
        )
        legs.append(float(np.max(dist)))
    if max(legs) >= eps:
        return None
    return PartnershipCertificate(
        original_breaks=(0.0, half, o.period),
        partner_breaks=(0.0, p.period / 2, p.period),
        permutation=(0, 1),
        reversed=(False, False),
        leg_distances=tuple(legs),
        origin=(0.0, shift),
        eps=eps,
    )


def _candidate_layouts(
    o: PeriodicOrbit, radius: float, dt: float
) -> list[tuple[list[float], Route]]:
    encs = detect_encounters(o, radius, dt)
    found: list[tuple[list[float], Route]] = []
    for enc in encs:
        if enc.kind is EncounterKind.ANTIPARALLEL:
            found.append(
                (
                    _unwrap([enc.t1, enc.t2], o.period),
                    ROUTES[Topology.SINGLE_ANTIPARALLEL],
                )
            )
    layouts = {
        (EncounterKind.ANTIPARALLEL, EncounterKind.ANTIPARALLEL): (
            aas_layout,
            Topology.AAS,
        ),
        (EncounterKind.PARALLEL, EncounterKind.PARALLEL): (
            ppi_layout,
            Topology.PPI,
        ),
        (EncounterKind.PARALLEL, EncounterKind.ANTIPARALLEL): (
            api_layout,
            Topology.API,
        ),
    }
    pairs = 0
    for i, first in enumerate(encs):
        for second in encs[i + 1 :]:
            for a, b in ((first, second), (second, first)):
                entry = layouts.get((a.kind, b.kind))
                if entry is None or pairs >= MAX_PAIRS:
                    continue
                layout, topology = entry
                try:
                    breaks, _, _ = layout(o, a, b)
                except EncounterTypeMismatch:
                    continue
                pairs += 1
                found.append((breaks, ROUTES[topology]))
    return found


def verify_partnership(
    o: PeriodicOrbit,
    p: PeriodicOrbit,
    eps: float,
    radius: float | None = None,
    dt: float | None = None,
) -> PartnershipCertificate | None:
    """Search a leg decomposition witnessing that o and p are eps-paired.

    Orbits of the same class get the trivial two-leg certificate. Other
    candidates are the rewirings of o at one or two of its encounters of
    the given radius.

    Args:
        o: The original orbit.
        p: The candidate partner.
        eps: Closeness required on every leg.
        radius: Encounter radius of the search; defaults to
            min(0.25, 0.99 sigma0 / 8).
        dt: Encounter scan step; defaults to radius / 4.

    Returns:
        The certificate, or None if no candidate works.
    """
    if p.cls.word == o.cls.word:
        return _trivial_certificate(o, p, eps)
    grp = o.grp
    radius = min(0.25, 0.99 * grp.sigma0 / 8) if radius is None else radius
    dt = radius / 4 if dt is None else dt
    for breaks, route in _candidate_layouts(o, radius, dt):
        try:
            rewiring = rewire(o, breaks, route, radius)
        except HgPartnersError as exc:
            logger.debug("Candidate route %s failed: %s", route, exc)
            continue
        if rewiring.orbit.cls.word != p.cls.word:
            continue
        cert = rewiring.certificate
        if cert is None or cert.closeness >= eps:
            continue
        shift, _ = best_shift(rewiring.orbit, p)
        return dataclasses.replace(
            cert, origin=(cert.origin[0], shift), eps=eps
        )
    return None
