"""The genus-two regular octagon group and the geometry of its quotient.

``SurfaceGroup`` holds the eight side-pairing generators, a ball of group
elements of bounded word length sorted by how far they move the base
point i, and the constants derived from that ball. Points of
PSL(2,R) are reduced into the Dirichlet octagon around i before any
search, which bounds the set of deck transformations worth trying.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import logging
import math
import pathlib
import threading
from typing import Any
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from hgpartners import moebius
from hgpartners import words
from hgpartners.exceptions import BallTooSmall
from hgpartners.exceptions import ConfigurationError
from hgpartners.exceptions import ConstructionFailed
from hgpartners.exceptions import InvalidParameter
from hgpartners.exceptions import NotHyperbolic
from hgpartners.exceptions import ReductionFailed
from hgpartners.moebius import MoebiusElement

logger = logging.getLogger(__name__)

RELATOR_TOL = 1e-9
DEDUPE_TOL = 1e-6
REACH_MARGIN = 1e-6
REDUCTION_CAP = 10_000
SIGMA0_SAMPLES = 100
SIGMA0_SAFETY = 0.9

SQRT2 = math.sqrt(2.0)
# Circumradius of the regular octagon with interior angles pi/4.
CIRCUMRADIUS = math.acosh((1 + SQRT2) ** 2)


def octagon_generators(precision: str = "double") -> dict[str, MoebiusElement]:
    """The side pairings r_k beta r_k^-1 of the regular octagon, k = 0..3."""
    dtype = moebius.dtype_for(precision)
    root2 = np.sqrt(dtype(2))
    diag = 1 + root2
    off = np.sqrt(2 + 2 * root2)
    beta = MoebiusElement(np.array([[diag, off], [off, diag]], dtype=dtype))
    gens = {}
    for k, letter in enumerate(words.GENERATORS):
        r = moebius.d(k * np.pi / 4, precision)
        gens[letter] = r @ beta @ r.inverse()
    return gens


@dataclasses.dataclass(frozen=True, eq=False)
class Ball:
    """Group elements of word length <= radius, sorted by displacement."""

    radius: int
    matrices: np.ndarray
    words: list[str]
    lengths: np.ndarray
    displacement: np.ndarray
    rho_cert: float

    def __len__(self) -> int:
        return len(self.words)

    def count_within(self, reach: float) -> int:
        """Number of leading elements with displacement <= reach."""
        return int(np.searchsorted(self.displacement, reach, side="right"))


def _expand(
    frontier: np.ndarray, frontier_words: list[str], gens: np.ndarray
) -> tuple[np.ndarray, list[str]]:
    cand = np.einsum("nij,kjl->nkil", frontier, gens).reshape(-1, 2, 2)
    cand_words = [w + x for w in frontier_words for x in words.LETTERS]
    keep = np.array(
        [
            len(w) < 2 or w[-1] != words.invert_letter(w[-2])
            for w in cand_words
        ],
        dtype=bool,
    )
    kept_words = [w for w, k in zip(cand_words, keep, strict=True) if k]
    return moebius.canonicalize_batch(cand[keep]), kept_words


def _fresh(cand: np.ndarray, known: np.ndarray) -> np.ndarray:
    """Mask of candidates not within DEDUPE_TOL of known or earlier ones."""
    flat = cand.reshape(len(cand), 4).astype(np.float64)
    dist, _ = cKDTree(known.reshape(len(known), 4).astype(np.float64)).query(
        flat, distance_upper_bound=DEDUPE_TOL
    )
    fresh = ~np.isfinite(dist)
    pairs = cKDTree(flat).query_pairs(DEDUPE_TOL, output_type="ndarray")
    if len(pairs):
        fresh[pairs[:, 1]] = False
    return fresh


def build_ball(gens: dict[str, MoebiusElement], radius: int) -> Ball:
    """Breadth-first ball of the group, deduplicated by matrix proximity.

    Args:
        gens: Generator matrices keyed by letter, inverses included.
        radius: Maximal word length.

    Returns:
        The ball plus its certification radius: the smallest displacement
        of an element first reached at word length radius + 1.
    """
    if radius < 1:
        msg = f"Ball radius must be >= 1, got {radius}"
        raise InvalidParameter(msg)
    gen_stack = moebius.stack(gens[x] for x in words.LETTERS)
    identity = np.eye(2, dtype=gen_stack.dtype)[None]
    all_m = [identity]
    all_w = [""]
    frontier, frontier_words = identity, [""]
    for r in range(1, radius + 2):
        cand, cand_words = _expand(frontier, frontier_words, gen_stack)
        fresh = _fresh(cand, np.concatenate(all_m))
        frontier = cand[fresh]
        frontier_words = [
            w for w, f in zip(cand_words, fresh, strict=True) if f
        ]
        if r > radius:
            rho_cert = float(np.min(moebius.displacement_batch(frontier)))
            break
        logger.debug("Sphere of radius %d: %d elements", r, len(frontier))
        all_m.append(frontier)
        all_w.extend(frontier_words)
    mats = np.concatenate(all_m)
    disp = moebius.displacement_batch(mats)
    order = np.argsort(disp, kind="stable")
    sorted_words = [all_w[i] for i in order]
    return Ball(
        radius=radius,
        matrices=mats[order],
        words=sorted_words,
        lengths=np.array([len(w) for w in sorted_words]),
        displacement=disp[order],
        rho_cert=rho_cert,
    )


@dataclasses.dataclass(frozen=True)
class ConjClass:
    """A conjugacy class held by its canonical cyclic word."""

    word: str
    trace: float
    period: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "word": self.word,
            "signed": words.to_signed(self.word),
            "trace": self.trace,
            "period": self.period,
        }


class DistanceEstimate(NamedTuple):
    """A quotient distance; exact when the ball certifies the minimum."""

    value: float
    exact: bool


class SurfaceGroup:
    """A cocompact surface group with its cached element ball.

    Args:
        generators: Matrices of ``a``..``d``; inverses are derived.
        relator: Defining relator word.
        ball_radius: Word length of the cached ball.
        precision: "double" or "extended".
        seed: Seed of the sigma0 sample points.

    Raises:
        ConstructionFailed: If the relator does not evaluate to identity.
    """

    def __init__(
        self,
        generators: dict[str, MoebiusElement],
        relator: str = words.RELATOR,
        ball_radius: int = 5,
        precision: str = "double",
        seed: int = 0,
    ) -> None:
        dtype = moebius.dtype_for(precision)
        self.precision = precision
        self.relator = words.check_word(relator)
        self.seed = seed
        self.generators: dict[str, MoebiusElement] = {}
        for letter in words.GENERATORS:
            g = MoebiusElement(np.asarray(generators[letter].m, dtype=dtype))
            self.generators[letter] = g
            self.generators[letter.upper()] = g.inverse()
        for letter in words.GENERATORS:
            kind = moebius.classify(self.generators[letter])
            if kind is not moebius.Kind.HYPERBOLIC:
                msg = f"Generator {letter} is {kind}, not hyperbolic"
                raise ConstructionFailed(msg)
        residual = self.relator_residual()
        if residual > RELATOR_TOL:
            msg = f"Relator {relator} evaluates {residual:.3g} from identity"
            raise ConstructionFailed(msg)
        self._gen_stack = moebius.stack(
            self.generators[x] for x in words.LETTERS
        )
        self.ball = build_ball(self.generators, ball_radius)
        self.circumradius = CIRCUMRADIUS
        logger.info(
            "Built surface group: ball radius %d, %d elements, "
            "rho_cert %.4f",
            ball_radius,
            len(self.ball),
            self.ball.rho_cert,
        )

    @property
    def ball_radius(self) -> int:
        return self.ball.radius

    @property
    def rho_cert(self) -> float:
        return self.ball.rho_cert

    @functools.cached_property
    def sigma0(self) -> float:
        return sigma0_estimate(self, self.ball.radius)

    def reduce(self, word: str) -> str:
        """Free and Dehn reduction against this group's relator."""
        return words.reduce_word(word, self.relator)

    def relator_residual(self) -> float:
        return moebius.group_distance(
            MoebiusElement.identity(self.precision),
            self.evaluate(self.relator),
        )

    def evaluate(self, word: str) -> MoebiusElement:
        """Left-to-right product of generator matrices."""
        m = np.eye(2, dtype=moebius.dtype_for(self.precision))
        for letter in words.check_word(word):
            m = m @ self.generators[letter].m
        return MoebiusElement(m)

    def reduce_point(self, g: MoebiusElement) -> tuple[str, MoebiusElement]:
        """Pull g into the Dirichlet octagon around i.

        Greedily left-multiplies by the generator that most decreases
        the Frobenius norm.

        Returns:
            (word, r) with g = evaluate(word) r and r.i in the octagon.

        Raises:
            ReductionFailed: If the greedy descent does not terminate.
        """
        m = np.asarray(g.m)
        norm = float(np.sum(m * m))
        trail = []
        for _ in range(REDUCTION_CAP):
            cand = self._gen_stack @ m
            norms = np.sum(cand * cand, axis=(1, 2))
            k = int(np.argmin(norms))
            if not norms[k] < norm * (1 - 1e-13):
                return self.reduce("".join(trail)), MoebiusElement(m)
            m = cand[k]
            norm = float(norms[k])
            trail.append(words.invert_letter(words.LETTERS[k]))
        msg = f"Point reduction did not terminate after {REDUCTION_CAP} steps"
        raise ReductionFailed(msg)

    def identify(
        self, g: MoebiusElement, h: MoebiusElement, tol: float
    ) -> str | None:
        """Find the deck transformation w with d_G(w h, g) < tol.

        Args:
            g: Target point.
            h: Point to move.
            tol: Matching tolerance, below sigma0 / 2 so that the match
                is unique.

        Returns:
            The reduced word of w, or None if no element matches.

        Raises:
            InvalidParameter: If tol is not in (0, sigma0 / 2).
            BallTooSmall: If a near miss lies beyond the certified ball.
        """
        if not 0 < tol < self.sigma0 / 2:
            msg = f"tol={tol} must lie in (0, sigma0/2={self.sigma0 / 2:.6g})"
            raise InvalidParameter(msg)
        pg, rg = self.reduce_point(g)
        ph, rh = self.reduce_point(h)
        reach = 2 * self.circumradius + 2 * tol + REACH_MARGIN
        n = self.ball.count_within(reach)
        dist = moebius.group_distance_batch(
            rg.m, self.ball.matrices[:n] @ rh.m
        )
        k = int(np.argmin(dist))
        if dist[k] < tol:
            return self.reduce(
                pg + self.ball.words[k] + words.formal_inverse(ph)
            )
        if dist[k] < 2 * tol and reach > self.ball.rho_cert:
            msg = (
                f"Nearest element at {dist[k]:.6g} (tol {tol:.6g}) "
                f"beyond certified radius {self.ball.rho_cert:.4f}"
            )
            raise BallTooSmall(msg)
        logger.debug("identify miss: nearest at %.6g", dist[k])
        return None

    def quotient_distance(
        self, g: MoebiusElement, h: MoebiusElement
    ) -> DistanceEstimate:
        """d_X(Gamma g, Gamma h) as a minimum over the ball."""
        _, rg = self.reduce_point(g)
        _, rh = self.reduce_point(h)
        return self.reduced_distance(rg.m, rh.m)

    def reduced_distance(
        self, rg: np.ndarray, rh: np.ndarray
    ) -> DistanceEstimate:
        """Quotient distance between two already reduced matrices."""
        window = 1.0
        n = self.ball.count_within(
            2 * self.circumradius + window + REACH_MARGIN
        )
        value = float(
            np.min(
                moebius.group_distance_batch(rg, self.ball.matrices[:n] @ rh)
            )
        )
        if value > window:
            value = float(
                np.min(
                    moebius.group_distance_batch(rg, self.ball.matrices @ rh)
                )
            )
        exact = value + 2 * self.circumradius + REACH_MARGIN <= self.rho_cert
        if not exact:
            logger.warning(
                "Quotient distance %.6g not certified by the ball", value
            )
        return DistanceEstimate(value, exact)

    def canonical_class(self, word: str) -> ConjClass:
        """Canonical class of a word with its trace and period.

        Raises:
            TrivialWord: If the word is conjugate to the identity.
            NotHyperbolic: If the evaluated element is not hyperbolic.
        """
        canon = words.canonical_word(word, self.relator)
        tr = float(self.evaluate(canon).trace)
        if not tr > 2:
            msg = f"Class {canon} has trace {tr:.12g}, not hyperbolic"
            raise NotHyperbolic(msg)
        return ConjClass(canon, tr, 2 * math.acosh(tr / 2))

    def to_dict(self) -> dict[str, Any]:
        return {
            "generators": {
                x: self.generators[x].to_list() for x in words.GENERATORS
            },
            "relator": self.relator,
            "relator_signed": words.to_signed(self.relator),
            "ball_radius": self.ball.radius,
            "ball_size": len(self.ball),
            "rho_cert": self.rho_cert,
            "sigma0": self.sigma0,
            "precision": self.precision,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(
        cls,
        data: dict[str, Any],
        ball_radius: int | None = None,
        precision: str | None = None,
        seed: int | None = None,
    ) -> SurfaceGroup:
        """Rebuild a group from ``to_dict`` output.

        Raises:
            ConfigurationError: If a field is missing or malformed.
        """
        prec = precision or data.get("precision", "double")
        try:
            gens = {
                x: MoebiusElement.from_list(data["generators"][x], prec)
                for x in words.GENERATORS
            }
            relator = data["relator"]
            radius = ball_radius or int(data["ball_radius"])
            seed = int(data.get("seed", 0)) if seed is None else seed
        except (KeyError, TypeError, ValueError) as exc:
            msg = f"Malformed group presentation: {exc}"
            raise ConfigurationError(msg) from exc
        return cls(
            gens, relator, ball_radius=radius, precision=prec, seed=seed
        )


def sigma0_estimate(
    grp: SurfaceGroup,
    max_len: int,
    samples: int = SIGMA0_SAMPLES,
    seed: int | None = None,
) -> float:
    """Lower estimate of min d_G(gamma g, g) over nontrivial gamma.

    The minimum runs over ball elements of word length <= max_len (clamped
    to the ball radius) and seeded sample points g = d_phi a_r d_theta
    with r up to the octagon circumradius; it is scaled by 0.9.

    Raises:
        InvalidParameter: If max_len < 1.
    """
    if max_len < 1:
        msg = f"max_len must be >= 1, got {max_len}"
        raise InvalidParameter(msg)
    max_len = min(max_len, grp.ball.radius)
    mask = (grp.ball.lengths <= max_len) & (grp.ball.lengths > 0)
    elems = grp.ball.matrices[mask]
    rng = np.random.default_rng(grp.seed if seed is None else seed)
    best = math.inf
    for _ in range(samples):
        phi, theta = rng.uniform(0, 2 * np.pi, size=2)
        r = rng.uniform(0, grp.circumradius)
        g = (moebius.d(phi) @ moebius.a(r) @ moebius.d(theta)).m
        ginv = moebius.MoebiusElement(g).inverse().m
        dist = moebius.log_distance_batch(ginv @ elems @ g)
        best = min(best, float(np.min(dist)))
    return SIGMA0_SAFETY * best


def octagon_group_uncached(
    ball_radius: int = 5, precision: str = "double", seed: int = 0
) -> SurfaceGroup:
    return SurfaceGroup(
        octagon_generators(precision),
        words.RELATOR,
        ball_radius=ball_radius,
        precision=precision,
        seed=seed,
    )


# Module-level cache: (ball_radius, precision, seed) -> group
_group_cache: dict[tuple[int, str, int], SurfaceGroup] = {}
_group_lock = threading.Lock()


def octagon_group(
    ball_radius: int = 5, precision: str = "double", seed: int = 0
) -> SurfaceGroup:
    """Get or build the octagon group.

    Groups are immutable after construction and shared between callers.
    """
    cache_key = (ball_radius, precision, seed)

    # Fast path: check cache without lock
    if cache_key in _group_cache:
        return _group_cache[cache_key]

    with _group_lock:
        if cache_key in _group_cache:
            return _group_cache[cache_key]
        grp = octagon_group_uncached(ball_radius, precision, seed)
        _group_cache[cache_key] = grp
        return grp


def clear_group_cache() -> None:
    with _group_lock:
        _group_cache.clear()


def load_group(
    source: str,
    ball_radius: int = 5,
    precision: str = "double",
    seed: int | None = None,
) -> SurfaceGroup:
    """Resolve a group from "octagon" or a presentation JSON file.

    A file keeps its own seed unless one is given.

    Raises:
        ConfigurationError: If the file cannot be read or parsed.
    """
    if source == "octagon":
        return octagon_group(ball_radius, precision, seed or 0)
    path = pathlib.Path(source)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        msg = f"Cannot load group presentation {path}: {exc}"
        raise ConfigurationError(msg) from exc
    return SurfaceGroup.from_dict(data, ball_radius, precision, seed)


def evaluate_word(grp: SurfaceGroup, word: str) -> MoebiusElement:
    return grp.evaluate(word)


def reduce_word(grp: SurfaceGroup, word: str) -> str:
    """Free and Dehn reduction against the group's relator."""
    return grp.reduce(word)


def canonical_class(grp: SurfaceGroup, word: str) -> ConjClass:
    return grp.canonical_class(word)


def is_primitive(grp: SurfaceGroup, cls: ConjClass) -> bool:
    del grp
    return words.is_primitive_word(cls.word)


def are_inverse_classes(
    grp: SurfaceGroup, first: ConjClass, second: ConjClass
) -> bool:
    """True iff the second class is the time reversal of the first."""
    inverse = grp.canonical_class(words.formal_inverse(first.word))
    return inverse.word == second.word


def identify(
    grp: SurfaceGroup, g: MoebiusElement, h: MoebiusElement, tol: float
) -> str | None:
    return grp.identify(g, h, tol)


def quotient_distance(
    grp: SurfaceGroup, g: MoebiusElement, h: MoebiusElement
) -> DistanceEstimate:
    return grp.quotient_distance(g, h)
