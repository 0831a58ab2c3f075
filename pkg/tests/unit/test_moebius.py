"""Tests for PSL(2,R) elements, decompositions and distances."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st

from hgpartners import moebius
from hgpartners.exceptions import DegenerateDecomposition
from hgpartners.exceptions import InvalidParameter
from hgpartners.exceptions import NotHyperbolic
from hgpartners.moebius import MoebiusElement

coord = st.floats(min_value=-2.5, max_value=2.5, allow_nan=False)
angle = st.floats(min_value=0.0, max_value=2 * math.pi, allow_nan=False)


class TestMoebiusElement:
    """Tests for the element type."""

    def test_rejects_bad_shape(self) -> None:
        """Should reject anything but a 2x2 matrix."""
        with pytest.raises(InvalidParameter, match="2x2"):
            MoebiusElement(np.eye(3))

    def test_rejects_non_finite(self) -> None:
        """Should reject NaN entries."""
        with pytest.raises(InvalidParameter, match="finite"):
            MoebiusElement(np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_rejects_negative_determinant(self) -> None:
        """Should reject matrices outside GL+(2,R)."""
        with pytest.raises(InvalidParameter, match="determinant"):
            MoebiusElement(np.array([[1.0, 0.0], [0.0, -1.0]]))

    def test_normalizes_determinant(self) -> None:
        """Should rescale to determinant one."""
        g = MoebiusElement(np.array([[2.0, 0.0], [0.0, 2.0]]))
        assert g.det == pytest.approx(1.0)
        assert g.isclose(moebius.E)

    def test_sign_canonical(self) -> None:
        """Should pick the representative with non-negative trace."""
        g = MoebiusElement(-moebius.a(1.0).m)
        assert g.trace > 0
        assert g.isclose(moebius.a(1.0))

    def test_from_list_round_trip(self) -> None:
        """Should rebuild the same element from to_list."""
        g = moebius.c(0.3) @ moebius.b(-1.2) @ moebius.a(0.7)
        assert MoebiusElement.from_list(g.to_list()).isclose(g, 1e-15)

    def test_from_list_wrong_length(self) -> None:
        """Should reject a list that is not four entries."""
        with pytest.raises(InvalidParameter, match="4 entries"):
            MoebiusElement.from_list([1.0, 0.0, 1.0])

    def test_extended_precision(self) -> None:
        """Should keep long double storage."""
        g = moebius.a(1.0, "extended")
        assert g.m.dtype == np.longdouble
        assert g.precision == "extended"
        assert moebius.a(1.0).precision == "double"

    def test_unknown_precision(self) -> None:
        """Should name the supported precisions."""
        with pytest.raises(InvalidParameter, match="double"):
            moebius.dtype_for("quad")


class TestOneParam:
    """Tests for the one-parameter subgroups."""

    def test_a_entries(self) -> None:
        """a_t should be diag(e^{t/2}, e^{-t/2})."""
        g = moebius.a(2.0)
        assert g.a == pytest.approx(math.e)
        assert g.d == pytest.approx(1 / math.e)
        assert g.b == 0
        assert g.c == 0

    def test_d_pi(self) -> None:
        """d_pi should be the half turn D_PI."""
        assert moebius.d(math.pi).isclose(moebius.D_PI)

    def test_compose(self) -> None:
        """compose is the product of matrices."""
        g = moebius.compose(moebius.a(0.3), moebius.b(0.2))
        assert g.isclose(moebius.a(0.3) @ moebius.b(0.2))

    def test_d_pi_involution(self) -> None:
        """D_PI squared is the identity in PSL(2,R)."""
        assert (moebius.D_PI @ moebius.D_PI).isclose(moebius.E)

    def test_d_pi_reverses_flow(self) -> None:
        """Conjugating a_t by D_PI should give a_{-t}."""
        g = moebius.D_PI @ moebius.a(1.5) @ moebius.D_PI.inverse()
        assert g.isclose(moebius.a(-1.5))

    @given(s=coord, t=coord)
    def test_homomorphism(self, s: float, t: float) -> None:
        """Each subgroup should add parameters."""
        for kind in moebius.Subgroup:
            lhs = moebius.one_param(kind, s) @ moebius.one_param(kind, t)
            assert lhs.isclose(moebius.one_param(kind, s + t), 1e-9)

    def test_unknown_kind(self) -> None:
        """Should reject an unknown subgroup name."""
        with pytest.raises(InvalidParameter, match="Unknown subgroup"):
            moebius.one_param("Z", 1.0)

    def test_non_finite_parameter(self) -> None:
        """Should reject infinite parameters."""
        with pytest.raises(InvalidParameter, match="finite"):
            moebius.a(math.inf)


class TestClassify:
    """Tests for trace classification."""

    def test_kinds(self) -> None:
        """Should classify one element of each kind."""
        assert moebius.classify(moebius.E) is moebius.Kind.IDENTITY
        assert moebius.classify(moebius.b(1.0)) is moebius.Kind.PARABOLIC
        assert moebius.classify(moebius.d(1.0)) is moebius.Kind.ELLIPTIC
        assert moebius.classify(moebius.a(1.0)) is moebius.Kind.HYPERBOLIC


class TestDecompositions:
    """Tests for the c-b-a and b-c-a coordinates."""

    @given(u=coord, s=coord, t=coord)
    def test_cub_recovers_coordinates(
        self, u: float, s: float, t: float
    ) -> None:
        """decompose_cub should invert c_u b_s a_t."""
        g = moebius.c(u) @ moebius.b(s) @ moebius.a(t)
        dec = moebius.decompose_cub(g)
        assert dec.u == pytest.approx(u, abs=1e-9)
        assert dec.s == pytest.approx(s, abs=1e-9)
        assert dec.t == pytest.approx(t, abs=1e-9)
        assert dec.element().isclose(g, 1e-9)

    @given(s=coord, u=coord, t=coord)
    def test_bcu_recovers_coordinates(
        self, s: float, u: float, t: float
    ) -> None:
        """decompose_bcu should invert b_s c_u a_t."""
        g = moebius.b(s) @ moebius.c(u) @ moebius.a(t)
        dec = moebius.decompose_bcu(g)
        assert dec.s == pytest.approx(s, abs=1e-9)
        assert dec.u == pytest.approx(u, abs=1e-9)
        assert dec.t == pytest.approx(t, abs=1e-9)

    def test_cub_degenerate(self) -> None:
        """Should refuse a vanishing pivot."""
        with pytest.raises(DegenerateDecomposition):
            moebius.decompose_cub(moebius.D_PI)

    def test_bcu_degenerate(self) -> None:
        """Should refuse a vanishing pivot."""
        with pytest.raises(DegenerateDecomposition):
            moebius.decompose_bcu(moebius.D_PI)


class TestAxisNormalForm:
    """Tests for conjugation to the diagonal flow."""

    @given(phi=angle, r=st.floats(0.0, 1.5), period=st.floats(0.5, 6.0))
    @settings(max_examples=50)
    def test_recovers_period(
        self, phi: float, r: float, period: float
    ) -> None:
        """Should return p with g = p a_T p^-1."""
        p = moebius.d(phi) @ moebius.a(r)
        g = p @ moebius.a(period) @ p.inverse()
        q, found = moebius.axis_normal_form(g)
        assert found == pytest.approx(period, rel=1e-8)
        rebuilt = q @ moebius.a(found) @ q.inverse()
        assert rebuilt.isclose(g, 1e-7 * max(1.0, g.norm()))

    def test_elliptic_raises(self) -> None:
        """Rotations have no axis."""
        with pytest.raises(NotHyperbolic):
            moebius.axis_normal_form(moebius.d(1.0))


class TestDistances:
    """Tests for the left-invariant distance and its profiles."""

    @given(t=coord)
    def test_flow_distance(self, t: float) -> None:
        """d_G(e, a_t) should be |t|."""
        assert moebius.group_distance(moebius.E, moebius.a(t)) == (
            pytest.approx(abs(t), abs=1e-12)
        )

    @given(t=coord)
    def test_displacement_of_flow(self, t: float) -> None:
        """a_t moves i by |t|."""
        assert moebius.displacement(moebius.a(t)) == pytest.approx(
            abs(t), abs=1e-7
        )

    @given(u=coord, s=coord, phi=angle)
    def test_left_invariance(self, u: float, s: float, phi: float) -> None:
        """d_G(h g, h k) should equal d_G(g, k)."""
        g = moebius.c(u)
        k = moebius.b(s)
        h = moebius.d(phi) @ moebius.a(0.5)
        assert moebius.group_distance(h @ g, h @ k) == pytest.approx(
            moebius.group_distance(g, k), abs=1e-9
        )

    def test_batch_matches_scalar(self) -> None:
        """The batched distance should agree with the scalar one."""
        g = moebius.a(0.3) @ moebius.b(0.1)
        hs = [moebius.c(0.2), moebius.d(0.4), moebius.a(-1.0)]
        batch = moebius.group_distance_batch(g.m, moebius.stack(hs))
        expected = [moebius.group_distance(g, h) for h in hs]
        np.testing.assert_allclose(batch, expected, atol=1e-12)

    @given(u=coord, s=coord, shift=coord)
    def test_cb_profile(self, u: float, s: float, shift: float) -> None:
        """cb_profile should be d_G(e, c_u b_s a_shift)."""
        g = moebius.c(u) @ moebius.b(s) @ moebius.a(shift)
        assert moebius.cb_profile(u, s, shift)[0] == pytest.approx(
            moebius.group_distance(moebius.E, g), abs=1e-9
        )

    @given(s=coord, u=coord, shift=coord)
    def test_bc_profile(self, s: float, u: float, shift: float) -> None:
        """bc_profile should be d_G(e, b_s c_u a_shift)."""
        g = moebius.b(s) @ moebius.c(u) @ moebius.a(shift)
        assert moebius.bc_profile(s, u, shift)[0] == pytest.approx(
            moebius.group_distance(moebius.E, g), abs=1e-9
        )

    def test_profile_broadcasts(self) -> None:
        """Profiles should broadcast over array arguments."""
        out = moebius.cb_profile(np.linspace(-0.1, 0.1, 5), 0.0)
        assert out.shape == (5,)
        assert out[2] == pytest.approx(0.0, abs=1e-15)

    def test_conjugate_by_flow(self) -> None:
        """Should equal a_{-t} x a_t."""
        x = moebius.c(0.4) @ moebius.b(-0.2)
        expected = moebius.a(-0.8) @ x @ moebius.a(0.8)
        assert moebius.conjugate_by_flow(x, 0.8).isclose(expected, 1e-12)

    def test_stack_empty(self) -> None:
        """An empty stack keeps its matrix shape."""
        assert moebius.stack([]).shape == (0, 2, 2)
