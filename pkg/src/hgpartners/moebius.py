"""Floating point arithmetic on PSL(2,R).

Elements are held as unit-determinant 2x2 arrays in a sign-canonical
representative, so equality in PSL(2,R) reduces to matrix closeness.
Besides the group law this module provides the one-parameter subgroups
a_t, b_s, c_u, d_theta, the two product decompositions, the axis normal
form of hyperbolic elements and the left-invariant distance d_G.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from collections.abc import Iterable
from typing import Any
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from hgpartners.exceptions import DegenerateDecomposition
from hgpartners.exceptions import InvalidParameter
from hgpartners.exceptions import LogUndefined
from hgpartners.exceptions import NotHyperbolic

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)

DET_DRIFT = 1e-14
SIGN_TOL = 1e-14
PIVOT_TOL = 1e-12
CLASSIFY_TOL = 1e-10
AXIS_TRACE_MARGIN = 1e-8
LOG_PARABOLIC_TOL = 1e-12

PRECISIONS: dict[str, type[np.floating[Any]]] = {
    "double": np.float64,
    "extended": np.longdouble,
}

Array = npt.NDArray[np.floating[Any]]


class Subgroup(enum.StrEnum):
    """One-parameter subgroups of PSL(2,R)."""

    A = "A"
    B = "B"
    C = "C"
    D = "D"


class Kind(enum.StrEnum):
    """Trace classification of an element."""

    IDENTITY = "identity"
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    HYPERBOLIC = "hyperbolic"


def dtype_for(precision: str) -> type[np.floating[Any]]:
    """Return the numpy dtype of a precision name.

    Raises:
        InvalidParameter: If the name is unknown.
    """
    try:
        return PRECISIONS[precision]
    except KeyError:
        msg = f"Unknown precision: {precision!r}. "
        msg += f"Supported: {', '.join(sorted(PRECISIONS))}"
        raise InvalidParameter(msg) from None


def _canonicalize(m: Array) -> Array:
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if not det > 0:
        msg = f"Matrix determinant must be positive, got {det!r}"
        raise InvalidParameter(msg)
    if abs(det - 1) > DET_DRIFT:
        m = m / np.sqrt(det)
    tr = m[0, 0] + m[1, 1]
    if tr < -SIGN_TOL:
        return -m
    if abs(tr) <= SIGN_TOL:
        for x in m.flat:
            if abs(x) > SIGN_TOL:
                return -m if x < 0 else m
    return m


def canonicalize_batch(ms: Array) -> Array:
    """Sign-canonicalize a stack of unit-determinant matrices.

    Args:
        ms: Array of shape (n, 2, 2) with positive determinants.

    Returns:
        A new array with the representatives of ``MoebiusElement``.
    """
    ms = np.array(ms, copy=True)
    det = ms[:, 0, 0] * ms[:, 1, 1] - ms[:, 0, 1] * ms[:, 1, 0]
    drift = np.abs(det - 1) > DET_DRIFT
    if np.any(drift):
        ms[drift] /= np.sqrt(det[drift])[:, None, None]
    tr = ms[:, 0, 0] + ms[:, 1, 1]
    flat = ms.reshape(len(ms), 4)
    first = flat[np.arange(len(ms)), np.argmax(np.abs(flat) > SIGN_TOL, 1)]
    sign = np.where(np.abs(tr) > SIGN_TOL, np.sign(tr), np.sign(first))
    sign[sign == 0] = 1
    return ms * sign[:, None, None]


@dataclasses.dataclass(frozen=True, eq=False)
class MoebiusElement:
    """A point of PSL(2,R).

    The stored matrix has determinant one and trace >= 0; for trace zero
    the first nonzero entry in row-major order is positive.
    """

    m: Array

    def __post_init__(self) -> None:
        raw = np.asarray(self.m)
        dtype = np.longdouble if raw.dtype == np.longdouble else np.float64
        arr = np.array(raw, dtype=dtype, copy=True)
        if arr.shape != (2, 2):
            msg = f"Expected a 2x2 matrix, got shape {arr.shape}"
            raise InvalidParameter(msg)
        if not np.all(np.isfinite(arr)):
            msg = "Matrix entries must be finite"
            raise InvalidParameter(msg)
        arr = _canonicalize(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "m", arr)

    @classmethod
    def from_matrix(cls, m: npt.ArrayLike) -> MoebiusElement:
        return cls(np.asarray(m))

    @classmethod
    def from_list(
        cls, values: Iterable[float], precision: str = "double"
    ) -> MoebiusElement:
        """Build from a row-major 4-array [a, b, c, d]."""
        arr = np.asarray(list(values), dtype=dtype_for(precision))
        if arr.shape != (4,):
            msg = f"Expected 4 entries, got {arr.shape}"
            raise InvalidParameter(msg)
        return cls(arr.reshape(2, 2))

    @classmethod
    def identity(cls, precision: str = "double") -> MoebiusElement:
        return cls(np.eye(2, dtype=dtype_for(precision)))

    @property
    def a(self) -> np.floating[Any]:
        return self.m[0, 0]

    @property
    def b(self) -> np.floating[Any]:
        return self.m[0, 1]

    @property
    def c(self) -> np.floating[Any]:
        return self.m[1, 0]

    @property
    def d(self) -> np.floating[Any]:
        return self.m[1, 1]

    @property
    def trace(self) -> np.floating[Any]:
        return self.m[0, 0] + self.m[1, 1]

    @property
    def det(self) -> np.floating[Any]:
        return self.m[0, 0] * self.m[1, 1] - self.m[0, 1] * self.m[1, 0]

    @property
    def precision(self) -> str:
        return "extended" if self.m.dtype == np.longdouble else "double"

    def __matmul__(self, other: MoebiusElement) -> MoebiusElement:
        if not isinstance(other, MoebiusElement):
            return NotImplemented
        return MoebiusElement(self.m @ other.m)

    def inverse(self) -> MoebiusElement:
        m = self.m
        return MoebiusElement(
            np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
        )

    def isclose(self, other: MoebiusElement, tol: float = 1e-10) -> bool:
        """Entrywise closeness modulo the sign ambiguity of PSL(2,R)."""
        plus = np.max(np.abs(self.m - other.m))
        minus = np.max(np.abs(self.m + other.m))
        return bool(min(plus, minus) <= tol)

    def norm(self) -> float:
        """Frobenius norm of the representative."""
        return float(np.sqrt(np.sum(self.m * self.m)))

    def to_list(self) -> list[float]:
        """Row-major [a, b, c, d] as plain floats."""
        return [float(x) for x in self.m.flat]

    def __repr__(self) -> str:
        a, b, c, d = self.to_list()
        return f"MoebiusElement([[{a:.6g}, {b:.6g}], [{c:.6g}, {d:.6g}]])"


class CubDecomposition(NamedTuple):
    """Coordinates with g = c_u b_s a_t."""

    u: float
    s: float
    t: float

    def element(self, precision: str = "double") -> MoebiusElement:
        return (
            c(self.u, precision) @ b(self.s, precision) @ a(self.t, precision)
        )


class BcuDecomposition(NamedTuple):
    """Coordinates with g = b_s c_u a_t."""

    s: float
    u: float
    t: float

    def element(self, precision: str = "double") -> MoebiusElement:
        return (
            b(self.s, precision) @ c(self.u, precision) @ a(self.t, precision)
        )


class AxisNormalForm(NamedTuple):
    """Conjugator p and period T with g = p a_T p^-1."""

    p: MoebiusElement
    period: float


def compose(g: MoebiusElement, h: MoebiusElement) -> MoebiusElement:
    """Group law: the renormalized, sign-canonical product g h."""
    return g @ h


def one_param(
    kind: Subgroup | str, p: float, precision: str = "double"
) -> MoebiusElement:
    """Return a_p, b_p, c_p or d_p.

    Args:
        kind: Which subgroup.
        p: The parameter; for D the rotation angle.
        precision: "double" or "extended".

    Returns:
        The element of the requested one-parameter subgroup.

    Raises:
        InvalidParameter: If p is not finite or the kind is unknown.
    """
    try:
        kind = Subgroup(kind)
    except ValueError:
        msg = f"Unknown subgroup: {kind!r}"
        raise InvalidParameter(msg) from None
    dtype = dtype_for(precision)
    x = dtype(p)
    if not np.isfinite(x):
        msg = f"Parameter must be finite, got {p!r}"
        raise InvalidParameter(msg)
    one = dtype(1)
    zero = dtype(0)
    match kind:
        case Subgroup.A:
            e = np.exp(x / 2)
            rows = [[e, zero], [zero, one / e]]
        case Subgroup.B:
            rows = [[one, x], [zero, one]]
        case Subgroup.C:
            rows = [[one, zero], [x, one]]
        case Subgroup.D:
            cs, sn = np.cos(x / 2), np.sin(x / 2)
            rows = [[cs, -sn], [sn, cs]]
    return MoebiusElement(np.array(rows, dtype=dtype))


def a(t: float, precision: str = "double") -> MoebiusElement:
    return one_param(Subgroup.A, t, precision)


def b(s: float, precision: str = "double") -> MoebiusElement:
    return one_param(Subgroup.B, s, precision)


def c(u: float, precision: str = "double") -> MoebiusElement:
    return one_param(Subgroup.C, u, precision)


def d(theta: float, precision: str = "double") -> MoebiusElement:
    return one_param(Subgroup.D, theta, precision)


E = MoebiusElement(np.eye(2))
D_PI = MoebiusElement(np.array([[0.0, 1.0], [-1.0, 0.0]]))


def classify(g: MoebiusElement) -> Kind:
    """Classify by trace, after an identity test in d_G."""
    if group_distance(MoebiusElement.identity(g.precision), g) <= CLASSIFY_TOL:
        return Kind.IDENTITY
    tr = g.trace
    if abs(tr - 2) <= CLASSIFY_TOL:
        return Kind.PARABOLIC
    return Kind.ELLIPTIC if tr < 2 else Kind.HYPERBOLIC


def decompose_cub(g: MoebiusElement) -> CubDecomposition:
    """Write g = c_u b_s a_t with t = 2 ln|a|, s = ab, u = c/a.

    Raises:
        DegenerateDecomposition: If |a| <= 1e-12.
    """
    a_, b_, c_, _ = g.m.flat
    if abs(a_) <= PIVOT_TOL:
        msg = f"Entry a = {a_!r} too small for the c-b-a decomposition"
        raise DegenerateDecomposition(msg)
    if a_ < 0:
        a_, b_, c_ = -a_, -b_, -c_
    return CubDecomposition(u=c_ / a_, s=a_ * b_, t=2 * np.log(a_))


def decompose_bcu(g: MoebiusElement) -> BcuDecomposition:
    """Write g = b_s c_u a_t with t = -2 ln|d|, s = b/d, u = cd.

    Raises:
        DegenerateDecomposition: If |d| <= 1e-12.
    """
    _, b_, c_, d_ = g.m.flat
    if abs(d_) <= PIVOT_TOL:
        msg = f"Entry d = {d_!r} too small for the b-c-a decomposition"
        raise DegenerateDecomposition(msg)
    if d_ < 0:
        b_, c_, d_ = -b_, -c_, -d_
    return BcuDecomposition(s=b_ / d_, u=c_ * d_, t=-2 * np.log(d_))


def _eigenvector(m: Array, ev: np.floating[Any]) -> Array:
    first = np.array([m[0, 1], ev - m[0, 0]])
    second = np.array([ev - m[1, 1], m[1, 0]])
    n1 = np.sqrt(np.sum(first * first))
    n2 = np.sqrt(np.sum(second * second))
    return first / n1 if n1 >= n2 else second / n2


def axis_normal_form(g: MoebiusElement) -> AxisNormalForm:
    """Return (p, T) with g = p a_T p^-1.

    The first column of p spans the expanding eigenvector (eigenvalue
    e^{T/2}); both columns are unit vectors before the determinant is
    normalized.

    Raises:
        NotHyperbolic: If tr(g) < 2 + 1e-8.
    """
    tr = g.trace
    if not tr >= 2 + AXIS_TRACE_MARGIN:
        msg = f"Element with trace {float(tr):.12g} is not hyperbolic"
        raise NotHyperbolic(msg)
    half = tr / 2
    lam = half + np.sqrt(half * half - 1)
    v1 = _eigenvector(g.m, lam)
    v2 = _eigenvector(g.m, 1 / lam)
    p = np.column_stack([v1, v2])
    det = p[0, 0] * p[1, 1] - p[0, 1] * p[1, 0]
    if det < 0:
        p[:, 1] = -p[:, 1]
        det = -det
    p = p / np.sqrt(det)
    if p[0, 0] < 0:
        p = -p
    return AxisNormalForm(MoebiusElement(p), float(2 * np.log(lam)))


def _log_frobenius(ms: Array) -> Array:
    """Frobenius norms of principal logarithms of trace-positive matrices."""
    if not np.all(np.isfinite(ms)):
        msg = "Logarithm undefined for non-finite matrices"
        raise LogUndefined(msg)
    tau = ms[:, 0, 0] + ms[:, 1, 1]
    if np.any(tau <= -2 + LOG_PARABOLIC_TOL):
        msg = "Logarithm undefined: trace <= -2 for both signs"
        raise LogUndefined(msg)
    half = tau / 2
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        r_h = np.arccosh(np.maximum(half, 1))
        r_e = np.arccos(np.clip(half, -1, 1))
        f_h = np.where(r_h > 0, r_h / np.sinh(r_h), 1)
        f_e = np.where(r_e > 0, r_e / np.sin(r_e), 1)
    factor = np.where(
        np.abs(tau - 2) < LOG_PARABOLIC_TOL,
        1,
        np.where(tau > 2, f_h, f_e),
    )
    x = np.array(ms, copy=True)
    x[:, 0, 0] -= half
    x[:, 1, 1] -= half
    return factor * np.sqrt(np.sum(x * x, axis=(1, 2)))


def log_distance_batch(ms: Array) -> Array:
    """d_G(e, m) for a stack of (not necessarily canonical) matrices."""
    ms = np.asarray(ms)
    tau = ms[:, 0, 0] + ms[:, 1, 1]
    sign = np.where(tau < 0, -1, 1)
    return SQRT2 * _log_frobenius(ms * sign[:, None, None])


def group_distance(g: MoebiusElement, h: MoebiusElement) -> float:
    """Left-invariant distance d_G(g, h) = sqrt(2) ||log(g^-1 h)||_F.

    Raises:
        LogUndefined: If g^-1 h has no principal logarithm.
    """
    m = (g.inverse() @ h).m
    return float(log_distance_batch(m[None])[0])


def group_distance_batch(g: Array, hs: Array) -> Array:
    """d_G(g, h_i) for one matrix g and a stack hs of shape (n, 2, 2)."""
    g = np.asarray(g)
    ginv = np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]])
    return log_distance_batch(ginv @ np.asarray(hs))


def displacement(g: MoebiusElement) -> float:
    """Hyperbolic distance from i to g(i)."""
    return float(np.arccosh(max(float(np.sum(g.m * g.m)) / 2, 1.0)))


def displacement_batch(ms: Array) -> Array:
    ms = np.asarray(ms)
    return np.arccosh(np.maximum(np.sum(ms * ms, axis=(1, 2)) / 2, 1.0))


def conjugate_by_flow(x: MoebiusElement, t: float) -> MoebiusElement:
    """Return a_{-t} x a_t."""
    m = x.m
    e = np.exp(m.dtype.type(t))
    return MoebiusElement(
        np.array([[m[0, 0], m[0, 1] / e], [m[1, 0] * e, m[1, 1]]])
    )


def cb_profile(
    u: npt.ArrayLike, s: npt.ArrayLike, shift: npt.ArrayLike = 0.0
) -> Array:
    """d_G(e, c_u b_s a_shift), vectorized over broadcast arguments."""
    u, s, shift = np.broadcast_arrays(
        np.asarray(u, float), np.asarray(s, float), np.asarray(shift, float)
    )
    u, s, shift = u.ravel(), s.ravel(), shift.ravel()
    ep, em = np.exp(shift / 2), np.exp(-shift / 2)
    ms = np.empty((len(u), 2, 2))
    ms[:, 0, 0] = ep
    ms[:, 0, 1] = s * em
    ms[:, 1, 0] = u * ep
    ms[:, 1, 1] = (1 + u * s) * em
    return log_distance_batch(ms)


def bc_profile(
    s: npt.ArrayLike, u: npt.ArrayLike, shift: npt.ArrayLike = 0.0
) -> Array:
    """d_G(e, b_s c_u a_shift), vectorized over broadcast arguments."""
    s, u, shift = np.broadcast_arrays(
        np.asarray(s, float), np.asarray(u, float), np.asarray(shift, float)
    )
    s, u, shift = s.ravel(), u.ravel(), shift.ravel()
    ep, em = np.exp(shift / 2), np.exp(-shift / 2)
    ms = np.empty((len(s), 2, 2))
    ms[:, 0, 0] = (1 + s * u) * ep
    ms[:, 0, 1] = s * em
    ms[:, 1, 0] = u * ep
    ms[:, 1, 1] = em
    return log_distance_batch(ms)


def stack(elements: Iterable[MoebiusElement]) -> Array:
    """Stack representatives into an array of shape (n, 2, 2)."""
    mats = [g.m for g in elements]
    if not mats:
        return np.empty((0, 2, 2))
    return np.stack(mats)
