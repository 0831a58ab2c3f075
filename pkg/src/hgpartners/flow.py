"""The quotient flow on Gamma\\PSL(2,R) and its periodic orbits.

A point Gamma g moves as Gamma g a_t. Representatives are kept inside
the Dirichlet octagon by ``SurfaceGroup.reduce_point`` so matrices stay
small however long an orbit is followed; the word that was peeled off
is kept alongside, which lets the partner constructions compose exact
group elements instead of guessing them.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from typing import Any

import numpy as np
from scipy.spatial import cKDTree

from hgpartners import moebius
from hgpartners import words
from hgpartners.exceptions import DegenerateDecomposition
from hgpartners.exceptions import InvalidParameter
from hgpartners.exceptions import NotInSection
from hgpartners.exceptions import NotPrimitive
from hgpartners.fuchsian import ConjClass
from hgpartners.fuchsian import DistanceEstimate
from hgpartners.fuchsian import SurfaceGroup
from hgpartners.moebius import MoebiusElement
from hgpartners.reports import BoundReport

logger = logging.getLogger(__name__)

FLOW_STEP = 1.0
REDUCE_NORM = 10.0
SAME_POINT_TOL = 1e-9
SECTION_TIME_TOL = 1e-9
MAX_CROSSING_DT = 0.05
MIN_LOOP = 1.0
CROSSING_DEDUPE = 1e-7


@dataclasses.dataclass(frozen=True, eq=False)
class QuotientPoint:
    """A point Gamma g of the quotient, held by a representative g."""

    rep: MoebiusElement
    grp: SurfaceGroup

    def flow(self, t: float) -> QuotientPoint:
        return flow(self, t)

    def time_reverse(self) -> QuotientPoint:
        return time_reverse(self)

    def distance(self, other: QuotientPoint) -> DistanceEstimate:
        return self.grp.quotient_distance(self.rep, other.rep)

    def same_as(
        self, other: QuotientPoint, tol: float = SAME_POINT_TOL
    ) -> bool:
        return self.distance(other).value < tol

    def to_dict(self) -> dict[str, Any]:
        return {"rep": self.rep.to_list()}


def flow_with_word(x: QuotientPoint, t: float) -> tuple[str, QuotientPoint]:
    """Flow for time t, returning the deck word peeled off on the way.

    Returns:
        (word, y) with x.rep a_t = evaluate(word) y.rep.

    Raises:
        InvalidParameter: If t is not finite.
    """
    if not math.isfinite(t):
        msg = f"Flow time must be finite, got {t!r}"
        raise InvalidParameter(msg)
    precision = x.rep.precision
    steps = max(1, math.ceil(abs(t) / FLOW_STEP))
    step = moebius.a(t / steps, precision)
    m = x.rep
    trail = []
    for _ in range(steps):
        m = m @ step
        if m.norm() > REDUCE_NORM:
            peeled, m = x.grp.reduce_point(m)
            trail.append(peeled)
    return words.free_reduce("".join(trail)), QuotientPoint(m, x.grp)


def flow(x: QuotientPoint, t: float) -> QuotientPoint:
    return flow_with_word(x, t)[1]


def time_reverse(x: QuotientPoint) -> QuotientPoint:
    """T(Gamma g) = Gamma g d_pi."""
    return QuotientPoint(x.rep @ moebius.D_PI, x.grp)


class SectionVariant(enum.StrEnum):
    """P uses base c_u b_s, PPRIME uses base b_s c_u."""

    P = "P"
    PPRIME = "Pprime"


@dataclasses.dataclass(frozen=True)
class SectionCoords:
    """Coordinates of a point in the section through a base point.

    ``witness`` is the deck word nu with nu z = base c_u b_s a_t (or
    base b_s c_u a_t for PPRIME), t being ``residual_time``.
    """

    variant: SectionVariant
    u: float
    s: float
    base: QuotientPoint
    residual_time: float
    witness: str
    target: QuotientPoint

    @property
    def us(self) -> float:
        return self.u * self.s

    def swapped(self) -> SectionCoords:
        """Coordinates of T(base) in the section through T(target).

        T(z) = base c_u b_s is equivalent to T(base) = z c_s b_u.
        """
        return dataclasses.replace(
            self,
            u=self.s,
            s=self.u,
            base=time_reverse(self.target),
            target=time_reverse(self.base),
            witness=words.formal_inverse(self.witness),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "variant": str(self.variant),
            "u": self.u,
            "s": self.s,
            "residual_time": self.residual_time,
            "witness": words.to_signed(self.witness),
        }


def section_tolerance(grp: SurfaceGroup, radius: float) -> float:
    """identify tolerance for section searches of the given radius."""
    return min(0.49 * grp.sigma0, 2.5 * radius + 0.1)


def section_coords(
    base: QuotientPoint,
    z: QuotientPoint,
    variant: SectionVariant | str = SectionVariant.P,
    radius: float = 0.25,
    time_tol: float = SECTION_TIME_TOL,
) -> SectionCoords | None:
    """Locate z in the Poincare section of the given radius through base.

    Args:
        base: Section base point x.
        z: Point to locate.
        variant: P for x c_u b_s, PPRIME for x b_s c_u.
        radius: Section radius; keep below sigma0 / 4 for uniqueness.
        time_tol: Largest accepted residual flow time.

    Returns:
        The coordinates, or None when no deck transformation brings z
        near base or the residual time exceeds time_tol.

    Raises:
        NotInSection: If the matched coordinates exceed the radius.
        DegenerateDecomposition: If the relative element has no
            decomposition of the requested form.
    """
    variant = SectionVariant(variant)
    grp = base.grp
    nu = grp.identify(base.rep, z.rep, section_tolerance(grp, radius))
    if nu is None:
        return None
    rel = base.rep.inverse() @ grp.evaluate(nu) @ z.rep
    if variant is SectionVariant.P:
        u, s, t = moebius.decompose_cub(rel)
    else:
        s, u, t = moebius.decompose_bcu(rel)
    u, s, t = float(u), float(s), float(t)
    if abs(t) > time_tol:
        logger.debug("Section residual time %.3g exceeds %.3g", t, time_tol)
        return None
    if not (abs(u) < radius and abs(s) < radius):
        msg = f"Coordinates ({u:.6g}, {s:.6g}) outside radius {radius:.6g}"
        raise NotInSection(msg)
    return SectionCoords(variant, u, s, base, t, nu, z)


class PeriodicOrbit:
    """The closed orbit of a hyperbolic class, with exact lifts.

    The orbit is parametrized by Gamma p a_{phase + t} where p is the axis
    conjugator of ``word``. Anchors are the axis conjugators p_k of the
    rotations of ``word``; p_k sits at orbit time ``anchor_times[k]``
    and is reached from p by the prefix ``word[:k]``.
    """

    def __init__(
        self,
        grp: SurfaceGroup,
        word: str,
        cls: ConjClass,
        phase: float = 0.0,
    ) -> None:
        self.grp = grp
        self.word = word
        self.cls = cls
        self.phase = float(phase)
        precision = grp.precision
        rots = [word[k:] + word[:k] for k in range(len(word))]
        forms = [
            moebius.axis_normal_form(grp.evaluate(rot)) for rot in rots
        ]
        self.anchors = [form.p for form in forms]
        self.period = forms[0].period
        times = [0.0]
        for k, letter in enumerate(word[:-1]):
            link = (
                self.anchors[k].inverse()
                @ grp.generators[letter]
                @ self.anchors[k + 1]
            )
            times.append(times[-1] + 2 * math.log(abs(float(link.a))))
        self.anchor_times = np.array(times)
        self._precision = precision

    def __repr__(self) -> str:
        return (
            f"PeriodicOrbit(word={self.word!r}, period={self.period:.12g}, "
            f"phase={self.phase:.6g})"
        )

    @property
    def conjugator(self) -> MoebiusElement:
        """An axis conjugator of evaluate(word) sitting at orbit time 0."""
        return self.anchors[0] @ moebius.a(self.phase, self._precision)

    @property
    def base(self) -> QuotientPoint:
        return self.point(0.0)

    def lift(self, t: float) -> tuple[str, MoebiusElement]:
        """Exact lift of the orbit point at time t.

        Returns:
            (word, r) with conjugator a_t = evaluate(word) r and r reduced.
        """
        tt = float(t) + self.phase
        laps = math.floor(tt / self.period)
        rem = tt - laps * self.period
        k = int(np.argmin(np.abs(self.anchor_times - rem)))
        g = self.anchors[k] @ moebius.a(
            rem - self.anchor_times[k], self._precision
        )
        peeled, r = self.grp.reduce_point(g)
        word = words.power(self.word, laps) + self.word[:k] + peeled
        return words.free_reduce(word), r

    def point(self, t: float) -> QuotientPoint:
        return QuotientPoint(self.lift(t)[1], self.grp)

    def shifted(self, phase: float) -> PeriodicOrbit:
        """Same orbit with time origin moved forward by phase."""
        return PeriodicOrbit(
            self.grp, self.word, self.cls, self.phase + float(phase)
        )

    def time_reversed(self) -> PeriodicOrbit:
        """The orbit of T(point(-t)), carried by the inverse word."""
        start = self.conjugator @ moebius.D_PI
        return orbit_from_word(
            self.grp,
            words.formal_inverse(self.word),
            conjugator=start,
            allow_powers=True,
        )

    def sample(self, dt: float) -> tuple[np.ndarray, np.ndarray]:
        """Times on a dt grid over one period and their reduced lifts."""
        times = np.arange(0.0, self.period, dt)
        mats = moebius.stack(self.lift(t)[1] for t in times)
        return times, mats

    def to_dict(self) -> dict[str, Any]:
        return {
            "class_word": words.to_signed(self.cls.word),
            "word": words.to_signed(self.word),
            "period": self.period,
            "phase": self.phase,
            "trace": self.cls.trace,
            "base_matrix": self.base.rep.to_list(),
        }


def orbit_from_word(
    grp: SurfaceGroup,
    word: str,
    conjugator: MoebiusElement | None = None,
    allow_powers: bool = False,
) -> PeriodicOrbit:
    """Build the orbit of the class of word.

    Args:
        grp: The surface group.
        word: Any word of a hyperbolic element.
        conjugator: Optional axis conjugator of evaluate(word); the orbit
            time origin is placed at Gamma conjugator.
        allow_powers: Accept classes that are proper powers.

    Raises:
        TrivialWord: If the word is conjugate to the identity.
        NotHyperbolic: If the element is not hyperbolic.
        NotPrimitive: If the class is a proper power and allow_powers
            is False.
        InvalidParameter: If the conjugator is off the axis.
    """
    cls = grp.canonical_class(word)
    if not allow_powers and not words.is_primitive_word(cls.word):
        msg = f"Class {cls.word} is a proper power"
        raise NotPrimitive(msg)
    prefix, core = words.cyclic_split(words.free_reduce(word))
    orbit = PeriodicOrbit(grp, core, cls)
    if conjugator is None:
        return orbit
    moved = grp.evaluate(prefix).inverse() @ conjugator
    link = orbit.anchors[0].inverse() @ moved
    if abs(float(link.c)) > 1e-6 * abs(float(link.a)):
        msg = "Conjugator does not lie on the axis of the word"
        raise InvalidParameter(msg)
    return orbit.shifted(2 * math.log(abs(float(link.a))))


def orbit_from_class(grp: SurfaceGroup, cls: ConjClass) -> PeriodicOrbit:
    return orbit_from_word(grp, cls.word)


class EncounterKind(enum.StrEnum):
    PARALLEL = "parallel"
    ANTIPARALLEL = "antiparallel"


@dataclasses.dataclass(frozen=True)
class Encounter:
    """A 2-encounter: point(t2), or T(point(t2)), in the section at t1."""

    kind: EncounterKind
    t1: float
    t2: float
    coords: SectionCoords
    radius: float

    @property
    def u(self) -> float:
        return self.coords.u

    @property
    def s(self) -> float:
        return self.coords.s

    @property
    def entries(self) -> list[tuple[float, SectionCoords | None]]:
        return [(self.t1, None), (self.t2, self.coords)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": str(self.kind),
            "t1": self.t1,
            "t2": self.t2,
            "u": self.u,
            "s": self.s,
            "radius": self.radius,
            "witness": words.to_signed(self.coords.witness),
        }


def _near_elements(grp: SurfaceGroup, slack: float) -> np.ndarray:
    n = grp.ball.count_within(2 * grp.circumradius + slack + 1e-6)
    return grp.ball.matrices[:n].astype(np.float64)


def _circular_gap(a: float, b: float, period: float) -> float:
    d = (a - b) % period
    return min(d, period - d)


def refine_encounter(
    o1: PeriodicOrbit,
    o2: PeriodicOrbit,
    t1: float,
    t2: float,
    kind: EncounterKind,
    eps: float,
) -> Encounter | None:
    """Snap a near-hit (t1, t2) onto the section through o1.point(t1).

    t2 is corrected by the residual flow time twice, first against a
    loose and then against the exact time tolerance.

    Returns:
        The encounter, or None if the points do not match within eps.
    """
    anti = kind is EncounterKind.ANTIPARALLEL
    coords = None
    for tol in (1e-4, SECTION_TIME_TOL):
        target = o2.point(t2)
        if anti:
            target = time_reverse(target)
        try:
            coords = section_coords(
                o1.point(t1), target, SectionVariant.P, eps, time_tol=tol
            )
        except (NotInSection, DegenerateDecomposition):
            return None
        if coords is None:
            return None
        t2 = t2 + coords.residual_time if anti else t2 - coords.residual_time
    if coords is None:
        return None
    return Encounter(kind, t1 % o1.period, t2 % o2.period, coords, eps)


def _candidate_pairs(
    base: np.ndarray, queries: np.ndarray, reach: float
) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs (query, base) of points closer than reach."""
    if len(base) == 0 or len(queries) == 0:
        empty = np.empty(0, dtype=np.intp)
        return empty, empty
    pairs = cKDTree(queries).sparse_distance_matrix(
        cKDTree(base), reach, output_type="ndarray"
    )
    order = np.lexsort((pairs["j"], pairs["i"]))
    return pairs["i"][order], pairs["j"][order]


def _section_hits(
    o1: PeriodicOrbit,
    o2: PeriodicOrbit,
    eps: float,
    dt: float,
    kind: EncounterKind,
) -> list[Encounter]:
    grp = o1.grp
    anti = kind is EncounterKind.ANTIPARALLEL
    same = o2 is o1
    times1, r1 = o1.sample(dt)
    times2, r2 = (times1, r1) if same else o2.sample(dt)
    r1 = r1.astype(np.float64)
    r2 = r2.astype(np.float64)
    if anti:
        r2 = r2 @ moebius.D_PI.m
    thr = 2 * math.sqrt(2.0) * eps + dt
    near = _near_elements(grp, thr)
    cand = np.einsum("kij,njl->nkil", near, r2).reshape(-1, 2, 2)
    flat = cand.reshape(-1, 4)
    scale = float(np.max(np.sqrt(np.sum(r1 * r1, axis=(1, 2)))))
    reach = scale * math.expm1(thr / math.sqrt(2.0)) * 1.05
    q, i = _candidate_pairs(
        r1.reshape(-1, 4), np.concatenate([flat, -flat]), reach
    )
    q = q % len(flat)
    rel = np.linalg.inv(r1[i]) @ cand[q]
    a_, b_, c_ = rel[:, 0, 0], rel[:, 0, 1], rel[:, 1, 0]
    pivot = np.abs(a_) > moebius.PIVOT_TOL
    if not np.all(pivot):
        logger.warning(
            "Dropped %d scan candidates with degenerate pivots",
            int(np.sum(~pivot)),
        )
    safe = np.where(pivot, a_, 1.0)
    u = c_ / safe
    s = safe * b_
    tau = 2 * np.log(np.abs(safe))
    keep = (
        pivot
        & (np.abs(u) <= 2 * eps)
        & (np.abs(s) <= 2 * eps)
        & (np.abs(tau) <= dt + eps)
    )
    logger.debug(
        "Section scan (%s): %d pairs, %d candidates",
        kind,
        len(q),
        int(np.sum(keep)),
    )
    tried: list[tuple[float, float]] = []
    results: list[Encounter] = []
    for n in np.flatnonzero(keep):
        j = int(q[n]) // len(near)
        t1 = float(times1[i[n]])
        t2 = float(times2[j])
        t2 = t2 + tau[n] if anti else t2 - tau[n]
        if u[n] != 0 and s[n] != 0:
            delta = 0.5 * math.log(abs(s[n] / u[n]))
            t1 += delta
            t2 = t2 - delta if anti else t2 + delta
        t1, t2 = t1 % o1.period, t2 % o2.period
        if same and not anti and _circular_gap(t1, t2, o1.period) <= 4 * eps:
            continue
        if any(
            _circular_gap(t1, p1, o1.period) < 1e-6
            and _circular_gap(t2, p2, o2.period) < 1e-6
            for p1, p2 in tried
        ):
            continue
        tried.append((t1, t2))
        enc = refine_encounter(o1, o2, t1, t2, kind, eps)
        if enc is None:
            continue
        if same and _circular_gap(enc.t1, enc.t2, o1.period) <= 4 * eps:
            continue
        results.append(enc)
    return results


def _ordered(enc: Encounter, same: bool) -> Encounter | None:
    if not same or enc.t1 < enc.t2:
        return enc
    if enc.kind is EncounterKind.PARALLEL:
        return None
    return dataclasses.replace(
        enc, t1=enc.t2, t2=enc.t1, coords=enc.coords.swapped()
    )


def _dedupe(hits: list[Encounter], period: float, window: float) -> list:
    hits = sorted(hits, key=lambda e: (e.kind, e.t1, e.t2))
    kept: list[Encounter] = []
    for enc in hits:
        dup = any(
            other.kind == enc.kind
            and _circular_gap(other.t1, enc.t1, period) < window
            and _circular_gap(other.t2, enc.t2, period) < window
            for other in kept
        )
        if not dup:
            kept.append(enc)
    return kept


def detect_encounters(
    o: PeriodicOrbit,
    eps: float,
    dt: float,
    kinds: tuple[EncounterKind, ...] = tuple(EncounterKind),
) -> list[Encounter]:
    """All 2-encounters of radius eps along one period of o.

    Coordinates are balanced (|u| = |s|) by sliding both piercing points
    along the orbit. Parallel encounters use the earlier point as base;
    hits closer than 2 eps in both times are merged and the two points
    must be separated by loops longer than 4 eps.

    Raises:
        InvalidParameter: If eps >= sigma0 / 8 or dt > eps / 4.
    """
    grp = o.grp
    if not 0 < eps < grp.sigma0 / 8:
        msg = f"eps={eps} must lie in (0, sigma0/8={grp.sigma0 / 8:.6g})"
        raise InvalidParameter(msg)
    if not 0 < dt <= eps / 4:
        msg = f"dt={dt} must lie in (0, eps/4]"
        raise InvalidParameter(msg)
    hits = []
    for kind in kinds:
        for enc in _section_hits(o, o, eps, dt, EncounterKind(kind)):
            enc = _ordered(enc, same=True)
            if enc is not None:
                hits.append(enc)
    found = _dedupe(hits, o.period, 2 * eps)
    found.sort(key=lambda e: (e.t1, e.t2, e.kind))
    logger.info(
        "Orbit %s: %d encounters at eps=%.4g", o.cls.word, len(found), eps
    )
    return found


def find_section_hits(
    o1: PeriodicOrbit, o2: PeriodicOrbit, eps: float, dt: float
) -> list[Encounter]:
    """Points of o2 in eps-sections through points of o1 (parallel).

    Each hit has t1 on o1 and t2 on o2.
    """
    if not 0 < dt <= eps / 4:
        msg = f"dt={dt} must lie in (0, eps/4]"
        raise InvalidParameter(msg)
    hits = _section_hits(o1, o2, eps, dt, EncounterKind.PARALLEL)
    window = 2 * eps
    hits = sorted(hits, key=lambda e: (e.t1, e.t2))
    kept: list[Encounter] = []
    for enc in hits:
        if not any(
            _circular_gap(k.t1, enc.t1, o1.period) < window
            and _circular_gap(k.t2, enc.t2, o2.period) < window
            for k in kept
        ):
            kept.append(enc)
    return kept


@dataclasses.dataclass(frozen=True)
class Crossing:
    """A self-crossing in configuration space.

    Gamma g a_{tau+L} = Gamma g a_tau d_{sign theta}, theta in (0, pi).
    """

    tau: float
    L: float
    theta: float
    sign: int

    @property
    def psi(self) -> float:
        """Signed deviation from a head-on crossing; |psi| = pi - theta."""
        return self.sign * (self.theta - math.pi)

    def to_dict(self) -> dict[str, Any]:
        return {
            "tau": self.tau,
            "L": self.L,
            "theta": self.theta,
            "sign": self.sign,
        }


def _hyperboloid(ms: np.ndarray) -> np.ndarray:
    a_, b_, c_, d_ = (ms[:, 0, 0], ms[:, 0, 1], ms[:, 1, 0], ms[:, 1, 1])
    return np.column_stack(
        [
            (a_ * a_ + b_ * b_ + c_ * c_ + d_ * d_) / 2,
            (a_ * a_ + b_ * b_ - c_ * c_ - d_ * d_) / 2,
            a_ * c_ + b_ * d_,
        ]
    )


def _normalize_angle(x: float) -> float:
    x = math.remainder(x, 2 * math.pi)
    return math.pi if x == -math.pi else x


def _crossing_from(
    rel: np.ndarray, ti: float, tj: float, period: float, dt: float
) -> Crossing | None:
    a_, b_, c_, d_ = rel.flat
    if c_ == 0 or d_ == 0:
        return None
    xi_minus, xi_plus = b_ / d_, a_ / c_
    if not xi_minus * xi_plus < 0:
        return None
    x = 0.5 * math.log(-xi_minus * xi_plus)
    ex = math.exp(-x / 2)
    n11, n21 = a_ * ex, c_ / ex
    y = -math.log(n11 * n11 + n21 * n21)
    if abs(x) > dt or abs(y) > dt:
        return None
    ey = math.exp(y / 2)
    theta_raw = _normalize_angle(2 * math.atan2(n21 * ey, n11 * ey))
    loop = (tj - ti) % period + y - x
    if theta_raw == 0:
        return None
    return Crossing(
        tau=(ti + x) % period,
        L=loop,
        theta=abs(theta_raw),
        sign=1 if theta_raw > 0 else -1,
    )


def detect_self_crossings(
    o: PeriodicOrbit, dt: float = 0.02
) -> list[Crossing]:
    """Self-crossings of the projected orbit with loops in [1, T/2].

    Each crossing appears once: of the two loops it closes, the shorter
    one is reported.

    Raises:
        InvalidParameter: If dt is not in (0, 0.05].
        BoundViolated: If a crossing breaks e^{-L} < cos^2(theta/2).
    """
    if not 0 < dt <= MAX_CROSSING_DT:
        msg = f"dt={dt} must lie in (0, {MAX_CROSSING_DT}]"
        raise InvalidParameter(msg)
    grp = o.grp
    times, mats = o.sample(dt)
    mats = mats.astype(np.float64)
    near = _near_elements(grp, dt)
    cand = np.einsum("kij,njl->nkil", near, mats).reshape(-1, 2, 2)
    pts = _hyperboloid(cand)
    # Projections of reduced points lie within the octagon circumradius.
    height = math.cosh(grp.circumradius + dt)
    reach = 2 * dt * height
    inside = np.flatnonzero(pts[:, 0] <= height + reach)
    q, i = _candidate_pairs(_hyperboloid(mats), pts[inside], reach)
    q = inside[q]
    j = q // len(near)
    gap = (times[j] - times[i]) % o.period
    keep = (gap >= MIN_LOOP - dt) & (gap <= o.period / 2 + dt)
    logger.debug(
        "Crossing scan: %d pairs, %d candidates", len(q), int(np.sum(keep))
    )
    rel = np.linalg.inv(mats[i[keep]]) @ cand[q[keep]]
    found: list[Crossing] = []
    for n, (ti, tj) in enumerate(
        zip(times[i[keep]], times[j[keep]], strict=True)
    ):
        crossing = _crossing_from(
            rel[n], float(ti), float(tj), o.period, dt
        )
        if crossing is None:
            continue
        if not MIN_LOOP <= crossing.L <= o.period / 2:
            continue
        if any(
            _circular_gap(c.tau, crossing.tau, o.period) < CROSSING_DEDUPE
            and abs(c.L - crossing.L) < CROSSING_DEDUPE
            for c in found
        ):
            continue
        found.append(crossing)
    report = BoundReport()
    for c in found:
        report.add(
            f"loop_angle@{c.tau:.6f}",
            math.exp(-c.L),
            math.cos(c.theta / 2) ** 2,
        )
    report.check("self-crossing loop bound")
    found.sort(key=lambda c: (c.tau, c.L))
    logger.info("Orbit %s: %d self-crossings", o.cls.word, len(found))
    return found
