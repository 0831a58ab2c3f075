"""Orbit enumeration, length spectrum and pair catalogs.

Closed orbits correspond to conjugacy classes, so the spectrum is built
by enumerating canonical cyclic words. Everything here is desk scale:
the form factor is a truncated diagonal sum over the enumerated
orbits, not an asymptotic average.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import enum
import functools
import logging
import math
import pathlib
from collections.abc import Callable
from collections.abc import Iterator
from collections.abc import Sequence
from typing import Any

import numpy as np

from hgpartners import words
from hgpartners.exceptions import HgPartnersError
from hgpartners.exceptions import InvalidParameter
from hgpartners.exceptions import TrivialWord
from hgpartners.flow import Encounter
from hgpartners.flow import EncounterKind
from hgpartners.flow import PeriodicOrbit
from hgpartners.flow import detect_encounters
from hgpartners.flow import orbit_from_class
from hgpartners.fuchsian import ConjClass
from hgpartners.fuchsian import SurfaceGroup
from hgpartners.partners import DEFAULT_METRIC_FACTOR
from hgpartners.partners import PartnerResult
from hgpartners.partners import Topology
from hgpartners.partners import partner_aas
from hgpartners.partners import partner_api
from hgpartners.partners import partner_ppi
from hgpartners.partners import partner_single_antiparallel
from hgpartners.reports import BoundReport
from hgpartners.reports import write_csv
from hgpartners.reports import write_json

logger = logging.getLogger(__name__)

PERIOD_TOL = 1e-8
MAX_ENUM_LEN = 12
FORM_FACTOR_NOTE = (
    "desk-scale, truncated spectrum - not a reproduction of K(tau)=2tau"
)


class Weight(enum.StrEnum):
    UNIT = "unit"
    SINH = "sinh"


@dataclasses.dataclass(frozen=True)
class SpectrumEntry:
    cls: ConjClass
    period: float
    multiplicity: int
    primitive: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "class_word": words.to_signed(self.cls.word),
            "word": self.cls.word,
            "trace": self.cls.trace,
            "period": self.period,
            "multiplicity": self.multiplicity,
            "primitive": self.primitive,
        }


@dataclasses.dataclass(frozen=True)
class PairCatalogEntry:
    """One orbit pair found by a partner construction."""

    topology: str
    class_a: str
    class_b: str
    action_diff: float
    target: float
    T_mean: float
    bound_report: BoundReport

    @classmethod
    def from_result(cls, result: PartnerResult) -> PairCatalogEntry:
        return cls(
            topology=str(result.topology),
            class_a=result.original.cls.word,
            class_b=result.partner.cls.word,
            action_diff=result.action_diff,
            target=result.target,
            T_mean=(result.original.period + result.partner.period) / 2,
            bound_report=result.bound_report,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "topology": self.topology,
            "class_a": words.to_signed(self.class_a),
            "class_b": words.to_signed(self.class_b),
            "letters": [self.class_a, self.class_b],
            "action_diff": self.action_diff,
            "target": self.target,
            "T_mean": self.T_mean,
            "bounds": self.bound_report.to_dict(),
        }


def _extend(prefix: str, max_len: int) -> Iterator[str]:
    """Freely reduced words starting with prefix, depth first."""
    yield prefix
    if len(prefix) == max_len:
        return
    forbidden = words.invert_letter(prefix[-1])
    for letter in words.LETTERS:
        if letter != forbidden:
            yield from _extend(prefix + letter, max_len)


def _canonical_words(first: str, max_len: int, relator: str) -> set[str]:
    found = set()
    for word in _extend(first, max_len):
        if words.invert_letter(word[-1]) == word[0]:
            continue
        if words.least_rotation(word) != word:
            continue
        try:
            canon = words.canonical_word(word, relator)
        except TrivialWord:
            continue
        if len(canon) <= max_len:
            found.add(canon)
    return found


def _with_multiplicity(classes: list[ConjClass]) -> list[SpectrumEntry]:
    classes.sort(key=lambda c: (c.period, words.order_key(c.word)))
    entries = []
    start = 0
    while start < len(classes):
        stop = start + 1
        while (
            stop < len(classes)
            and classes[stop].period - classes[start].period <= PERIOD_TOL
        ):
            stop += 1
        for cls in classes[start:stop]:
            entries.append(
                SpectrumEntry(
                    cls,
                    cls.period,
                    stop - start,
                    words.is_primitive_word(cls.word),
                )
            )
        start = stop
    return entries


def enumerate_classes(
    grp: SurfaceGroup,
    max_len: int,
    include_powers: bool = False,
    jobs: int = 1,
) -> list[SpectrumEntry]:
    """All hyperbolic classes with canonical words up to max_len letters.

    The word tree is split by first letter across ``jobs`` workers and
    merged in sorted order.

    Args:
        grp: The surface group.
        max_len: Word length cap, at most 12.
        include_powers: Also list proper powers.
        jobs: Number of worker threads.

    Returns:
        Entries sorted by period, then by word.

    Raises:
        InvalidParameter: If max_len is outside [1, 12].
    """
    if not 1 <= max_len <= MAX_ENUM_LEN:
        msg = f"max_len={max_len} must lie in [1, {MAX_ENUM_LEN}]"
        raise InvalidParameter(msg)
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
        parts = list(
            pool.map(
                lambda first: _canonical_words(first, max_len, grp.relator),
                words.LETTERS,
            )
        )
    canon = sorted(set().union(*parts), key=words.order_key)
    classes = [
        grp.canonical_class(word)
        for word in canon
        if include_powers or words.is_primitive_word(word)
    ]
    entries = _with_multiplicity(classes)
    logger.info(
        "Enumerated %d classes up to length %d", len(entries), max_len
    )
    collisions = trace_collisions(entries, grp.relator)
    if collisions:
        logger.debug(
            "%d trace collisions beyond inverse pairs", len(collisions)
        )
    return entries


def trace_collisions(
    entries: Sequence[SpectrumEntry], relator: str = words.RELATOR
) -> list[tuple[str, str]]:
    """Pairs of distinct, non-inverse classes sharing a period."""
    found = []
    for i, first in enumerate(entries):
        inverse = words.canonical_word(
            words.formal_inverse(first.cls.word), relator
        )
        for second in entries[i + 1 :]:
            if second.period - first.period > PERIOD_TOL:
                break
            if second.cls.word != inverse:
                found.append((first.cls.word, second.cls.word))
    return found


def missing_inverses(
    entries: Sequence[SpectrumEntry], relator: str = words.RELATOR
) -> list[str]:
    """Classes whose inverse class is absent from the list."""
    present = {entry.cls.word for entry in entries}
    return [
        entry.cls.word
        for entry in entries
        if words.canonical_word(words.formal_inverse(entry.cls.word), relator)
        not in present
    ]


def length_spectrum(
    entries: Sequence[SpectrumEntry], tol: float = PERIOD_TOL
) -> list[tuple[float, int]]:
    """Distinct periods with the number of classes sharing each."""
    spectrum: list[tuple[float, int]] = []
    for period in sorted(entry.period for entry in entries):
        if spectrum and period - spectrum[-1][0] <= tol:
            spectrum[-1] = (spectrum[-1][0], spectrum[-1][1] + 1)
        else:
            spectrum.append((period, 1))
    return spectrum


def _constructions(
    orbit: PeriodicOrbit,
    encs: Sequence[Encounter],
    metric_factor: float,
    eps_star: float | None,
) -> list[functools.partial[PartnerResult]]:
    """Every partner construction applicable to the encounters."""
    anti = EncounterKind.ANTIPARALLEL
    par = EncounterKind.PARALLEL
    options = {"metric_factor": metric_factor, "eps_star": eps_star}
    builds: list[functools.partial[PartnerResult]] = [
        functools.partial(partner_single_antiparallel, orbit, enc, **options)
        for enc in encs
        if enc.kind is anti
    ]
    builders = {
        (anti, anti): partner_aas,
        (par, par): partner_ppi,
        (par, anti): partner_api,
    }
    for i, first in enumerate(encs):
        for second in encs[i + 1 :]:
            pair = (first, second)
            if (first.kind, second.kind) == (anti, par):
                pair = (second, first)
            build = builders[(pair[0].kind, pair[1].kind)]
            builds.append(functools.partial(build, orbit, *pair, **options))
    return builds


def _orbit_pairs(
    orbit: PeriodicOrbit,
    eps: float,
    dt: float,
    metric_factor: float,
    eps_star: float | None,
) -> list[PairCatalogEntry]:
    encs = detect_encounters(orbit, eps, dt)
    found = []
    for build in _constructions(orbit, encs, metric_factor, eps_star):
        try:
            result = build()
        except HgPartnersError as exc:
            logger.debug("No partner for %s: %s", orbit.cls.word, exc)
            continue
        found.append(PairCatalogEntry.from_result(result))
    return found


def pair_catalog(
    grp: SurfaceGroup,
    max_len: int,
    eps: float,
    dt: float | None = None,
    jobs: int = 1,
    metric_factor: float = DEFAULT_METRIC_FACTOR,
    eps_star: float | None = None,
) -> list[PairCatalogEntry]:
    """Orbit pairs built from the encounters of all enumerated orbits.

    Constructions that fail (refused conditions, violated bounds,
    degenerate rewirings) are skipped. Duplicates are merged by
    (topology, class_a, class_b).
    """
    dt = eps / 4 if dt is None else dt
    orbits = [
        orbit_from_class(grp, entry.cls)
        for entry in enumerate_classes(grp, max_len, jobs=jobs)
    ]
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
        parts = list(
            pool.map(
                lambda o: _orbit_pairs(o, eps, dt, metric_factor, eps_star),
                orbits,
            )
        )
    merged: dict[tuple[str, str, str], PairCatalogEntry] = {}
    for part in parts:
        for entry in part:
            key = (entry.topology, entry.class_a, entry.class_b)
            merged.setdefault(key, entry)
    catalog = [
        merged[key]
        for key in sorted(
            merged,
            key=lambda k: (
                k[0],
                words.order_key(k[1]),
                words.order_key(k[2]),
            ),
        )
    ]
    logger.info(
        "Pair catalog up to length %d at eps=%.4g: %d pairs",
        max_len,
        eps,
        len(catalog),
    )
    return catalog


_BUILDERS: dict[Topology, Callable[..., PartnerResult]] = {
    Topology.SINGLE_ANTIPARALLEL: partner_single_antiparallel,
    Topology.AAS: partner_aas,
    Topology.PPI: partner_ppi,
    Topology.API: partner_api,
}


def mirror_entry(
    grp: SurfaceGroup,
    entry: PairCatalogEntry,
    eps: float,
    dt: float | None = None,
    metric_factor: float = DEFAULT_METRIC_FACTOR,
    eps_star: float | None = None,
) -> PairCatalogEntry | None:
    """The same pair found by a construction on its second orbit.

    Only constructions of the entry's topology are tried. The first one
    leading back to the first class, or to its time reversal, is
    returned; None when there is none.

    Raises:
        InvalidParameter: If the topology has no encounter construction.
    """
    topology = Topology(entry.topology)
    if topology not in _BUILDERS:
        msg = f"No encounter construction for {topology} pairs"
        raise InvalidParameter(msg)
    build_kind = _BUILDERS[topology]
    dt = eps / 4 if dt is None else dt
    orbit = orbit_from_class(grp, grp.canonical_class(entry.class_b))
    back = {
        entry.class_a,
        grp.canonical_class(words.formal_inverse(entry.class_a)).word,
    }
    encs = detect_encounters(orbit, eps, dt)
    for build in _constructions(orbit, encs, metric_factor, eps_star):
        if build.func is not build_kind:
            continue
        try:
            result = build()
        except HgPartnersError as exc:
            logger.debug("No mirror from %s: %s", orbit.cls.word, exc)
            continue
        if result.partner.cls.word in back:
            return PairCatalogEntry.from_result(result)
    logger.info(
        "No %s construction on %s leads back to %s",
        entry.topology,
        entry.class_b,
        entry.class_a,
    )
    return None


def _weights(periods: np.ndarray, weight: Weight) -> np.ndarray:
    if weight is Weight.UNIT:
        return np.ones_like(periods)
    return 1.0 / (2.0 * np.sinh(periods / 2.0))


def form_factor_diagonal(
    entries: Sequence[SpectrumEntry],
    tau_grid: Sequence[float],
    weight: Weight | str = Weight.UNIT,
) -> list[tuple[float, float]]:
    """Binned diagonal sum over the enumerated periods.

    ``tau_grid`` holds bin edges on the period axis. The unit weight
    counts orbits per bin; the sinh weight applies 1 / (2 sinh(T/2))
    per orbit.

    Returns:
        (bin center, K) for every bin.
    """
    edges = np.asarray(tau_grid, dtype=float)
    periods = np.array([entry.period for entry in entries], dtype=float)
    k, _ = np.histogram(
        periods, bins=edges, weights=_weights(periods, Weight(weight))
    )
    centers = (edges[:-1] + edges[1:]) / 2
    return [(float(c), float(v)) for c, v in zip(centers, k, strict=True)]


def action_histogram(
    catalog: Sequence[PairCatalogEntry], bins: int = 20
) -> list[tuple[float, int]]:
    """Histogram of the action differences of a pair catalog."""
    diffs = np.array([entry.action_diff for entry in catalog], dtype=float)
    if len(diffs) == 0:
        return []
    counts, edges = np.histogram(diffs, bins=bins)
    centers = (edges[:-1] + edges[1:]) / 2
    return [
        (float(c), int(n)) for c, n in zip(centers, counts, strict=True)
    ]


def tau_edges(tau_max: float, bins: int) -> np.ndarray:
    return np.linspace(0.0, tau_max, bins + 1)


def write_spectrum_csv(
    path: pathlib.Path, entries: Sequence[SpectrumEntry]
) -> pathlib.Path:
    return write_csv(
        path,
        ["period", "multiplicity", "word", "trace", "primitive"],
        (
            [e.period, e.multiplicity, e.cls.word, e.cls.trace, e.primitive]
            for e in entries
        ),
    )


def write_catalog_json(
    path: pathlib.Path,
    catalog: Sequence[PairCatalogEntry],
    config: dict[str, Any] | None = None,
) -> pathlib.Path:
    return write_json(
        path, {"config": config or {}, "pairs": list(catalog)}
    )


def write_xy_csv(
    path: pathlib.Path,
    rows: Sequence[tuple[float, float]],
    header: Sequence[str] = ("x", "y"),
) -> pathlib.Path:
    return write_csv(path, list(header), ([x, y] for x, y in rows))


def inverse_pair_audit(entries: Sequence[SpectrumEntry]) -> dict[str, Any]:
    """Summary of the class/inverse pairing of an enumeration."""
    missing = missing_inverses(entries)
    odd = [
        period
        for period, count in length_spectrum(entries)
        if count % 2 != 0
    ]
    return {
        "classes": len(entries),
        "missing_inverses": missing,
        "odd_multiplicities": odd,
        "ok": not missing and not odd,
    }


def shortest_period(entries: Sequence[SpectrumEntry]) -> float:
    return min((entry.period for entry in entries), default=math.inf)
