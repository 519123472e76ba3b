import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypwalk.errors import InvalidElementError
from hypwalk.group import (
    CONSTANTS,
    BoundaryPoint,
    GroupElement,
    boundary_action,
    cartan,
    cocycle_action_grid,
    horocycle_cocycle,
    iwasawa,
    norm,
    norms_of,
    random_elements,
    rn_derivative,
    sym_space_distance,
)

# frozen expected values
GOLDEN_RATIO_NORM = 0.9624236501192069  # 2 log((1 + sqrt 5)/2), radial part of n_1
LOG_TWO = 0.6931471805599453

angles = st.floats(0.0, 2.0 * math.pi, allow_nan=False)
radials = st.floats(0.0, 6.0, allow_nan=False)
shears = st.floats(-4.0, 4.0, allow_nan=False)


def cartan_element(theta1, t, theta2):
    return (
        GroupElement.rotation(theta1) @ GroupElement.dilation(t) @ GroupElement.rotation(theta2)
    )


elements = st.builds(cartan_element, angles, radials, angles)


def approx_entries(g, h, tol=1e-10):
    return max(abs(g.a - h.a), abs(g.b - h.b), abs(g.c - h.c), abs(g.d - h.d)) <= tol


class TestConstants:
    def test_llt_exponent(self):
        assert CONSTANTS.llt_exponent == 2 * CONSTANTS.positive_indivisible_roots + CONSTANTS.rank
        assert CONSTANTS.llt_exponent == 3
        assert CONSTANTS.delta_coeff == 0.5
        assert CONSTANTS.root_multiplicity == 1


class TestElement:
    def test_identity_and_constructors(self):
        e = GroupElement.identity()
        assert e.det() == 1.0
        a = GroupElement.dilation(1.0)
        assert a.a == pytest.approx(math.exp(0.5))
        k = GroupElement.rotation(0.3)
        assert k.a == pytest.approx(math.cos(0.3))
        n = GroupElement.shear(0.5)
        assert n.b == 0.5

    def test_renormalization(self):
        g = GroupElement(2.0, 0.0, 0.0, 2.0)  # det 4, scaled back to the identity
        assert approx_entries(g, GroupElement.identity(), 1e-14)

    def test_degenerate_rejected(self):
        with pytest.raises(InvalidElementError):
            GroupElement(1.0, 0.0, 0.0, 0.0)
        with pytest.raises(InvalidElementError):
            GroupElement(1.0, 0.0, 0.0, -1.0)
        with pytest.raises(InvalidElementError):
            GroupElement.from_matrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

    @given(elements)
    def test_inverse(self, g):
        assert approx_entries(g @ g.inverse(), GroupElement.identity(), 1e-8)


class TestIwasawa:
    def test_identity(self):
        f = iwasawa(GroupElement.identity())
        assert (f.theta, f.t, f.x) == (0.0, 0.0, 0.0)

    def test_factored_input(self):
        g = GroupElement.dilation(1.0) @ GroupElement.shear(0.5)
        f = iwasawa(g)
        assert f.theta == pytest.approx(0.0, abs=1e-12)
        assert f.t == pytest.approx(1.0, abs=1e-12)
        assert f.x == pytest.approx(0.5, abs=1e-12)

    def test_lower_unipotent(self):
        # first column (1, 1): H = log 2, checked against the closed form and
        # by entrywise reconstruction
        g = GroupElement(1.0, 0.0, 1.0, 1.0)
        f = iwasawa(g)
        assert f.t == pytest.approx(LOG_TWO, abs=1e-14)
        assert approx_entries(f.reconstruct(), g, 1e-12)

    def test_same_evaluation_path(self):
        # regression lock: H comes from log(g11^2 + g21^2) on the same float path
        g = cartan_element(0.7, 2.3, 1.1)
        assert iwasawa(g).t == math.log(g.a * g.a + g.c * g.c)

    @given(elements)
    def test_round_trip(self, g):
        assert approx_entries(iwasawa(g).reconstruct(), g, 1e-10)


class TestCartan:
    def test_dilation_fixed(self):
        f = cartan(GroupElement.dilation(1.7))
        assert f.t == pytest.approx(1.7, abs=1e-12)
        assert math.cos(f.theta1 + f.theta2) == pytest.approx(1.0, abs=1e-12)

    def test_shear_radial_part(self):
        g = GroupElement.shear(1.0)
        f = cartan(g)
        assert f.t == pytest.approx(GOLDEN_RATIO_NORM, abs=1e-12)
        # independent oracle: singular values of the matrix
        s = np.linalg.svd(g.mat, compute_uv=False)
        assert f.t == pytest.approx(2.0 * math.log(s[0]), abs=1e-12)
        assert approx_entries(f.reconstruct(), g, 1e-12)

    @given(elements)
    def test_round_trip(self, g):
        f = cartan(g)
        assert f.t >= 0.0
        assert approx_entries(f.reconstruct(), g, 1e-10)

    @given(elements)
    def test_norm_matches_svd(self, g):
        s = np.linalg.svd(g.mat, compute_uv=False)
        assert norm(g) == pytest.approx(2.0 * math.log(s[0]), abs=1e-9)

    def test_norms_of_batch(self, rng):
        gs = random_elements(rng, 64, 5.0)
        mats = np.stack([g.mat for g in gs])
        batch = norms_of(mats)
        for g, t in zip(gs, batch):
            assert t == pytest.approx(norm(g), abs=1e-10)


class TestCocycle:
    def test_identity_element(self):
        for w in (0.0, 0.4, 2.0):
            assert horocycle_cocycle(GroupElement.identity(), w) == pytest.approx(0.0, abs=1e-14)

    def test_dilation_at_zero(self):
        # a_t^{-1} k_0 = a_{-t}, so H = -t
        assert horocycle_cocycle(GroupElement.dilation(1.3), 0.0) == pytest.approx(-1.3, abs=1e-12)

    @given(angles, angles)
    def test_rotations_flat(self, phi, w):
        assert horocycle_cocycle(GroupElement.rotation(phi), w) == pytest.approx(0.0, abs=1e-12)

    @given(elements, angles)
    def test_representative_independence(self, g, w):
        a = horocycle_cocycle(g, w)
        b = horocycle_cocycle(g, w + math.pi)
        assert a == pytest.approx(b, abs=1e-12)

    @given(elements, elements, angles)
    def test_composition_identity(self, g, h, w):
        # H((gh)^{-1} k_w) = H(g^{-1} k_w) + H(h^{-1} k_{alpha_{g^{-1}}(w)}),
        # the additivity that makes the principal series multiplicative
        lhs = horocycle_cocycle(g @ h, w)
        rhs = horocycle_cocycle(g, w) + horocycle_cocycle(
            h, boundary_action(g.inverse(), w)
        )
        assert lhs == pytest.approx(rhs, abs=1e-10)

    @given(elements)
    def test_bounded_by_norm(self, g):
        f = iwasawa(g)
        assert abs(f.t) <= norm(g) + 1e-10

    def test_grid_helper_matches_scalar(self):
        g = cartan_element(0.5, 1.2, 2.0)
        ws = np.linspace(0.0, math.pi, 17)
        h, ang = cocycle_action_grid(g.inverse(), ws)
        for i, w in enumerate(ws):
            assert h[i] == pytest.approx(horocycle_cocycle(g, w), abs=1e-14)
            assert ang[i] % math.pi == pytest.approx(
                boundary_action(g.inverse(), w).omega, abs=1e-12
            ) or abs((ang[i] % math.pi) - boundary_action(g.inverse(), w).omega) == pytest.approx(
                math.pi, abs=1e-12
            )


class TestBoundaryAction:
    def test_rotation_translates(self):
        w = boundary_action(GroupElement.rotation(0.4), BoundaryPoint(0.3))
        assert w.omega == pytest.approx(0.7, abs=1e-12)

    def test_identity(self):
        assert boundary_action(GroupElement.identity(), 0.9).omega == pytest.approx(0.9)

    @given(elements, elements, angles)
    def test_composition(self, g, h, w):
        lhs = boundary_action(g @ h, w).omega
        rhs = boundary_action(g, boundary_action(h, w)).omega
        delta = abs(lhs - rhs)
        assert min(delta, math.pi - delta) <= 1e-9


class TestRadonNikodym:
    @given(angles, angles)
    def test_rotations_unit(self, phi, w):
        assert rn_derivative(GroupElement.rotation(phi), w) == pytest.approx(1.0, abs=1e-12)

    @given(elements, elements, angles)
    def test_pushforward_composition(self, g, h, w):
        # rn_derivative is the density of the pushforward of the uniform
        # measure, so it composes through the inverse action
        lhs = rn_derivative(g @ h, w)
        rhs = rn_derivative(g, w) * rn_derivative(h, boundary_action(g.inverse(), w))
        assert lhs == pytest.approx(rhs, rel=1e-9)

    @given(elements, elements, angles)
    def test_jacobian_chain_rule(self, g, h, w):
        # the pointwise derivative of alpha_g is rn_derivative(g^{-1}, .) and
        # obeys the usual chain rule order
        def jac(u, ang):
            return rn_derivative(u.inverse(), ang)

        lhs = jac(g @ h, w)
        rhs = jac(g, boundary_action(h, w).omega) * jac(h, w)
        assert lhs == pytest.approx(rhs, rel=1e-9)

    @given(elements, angles)
    def test_jacobian_is_derivative(self, g, w):
        # finite-difference oracle for d alpha_g / dw
        eps = 1e-6
        up = boundary_action(g, w + eps).omega
        dn = boundary_action(g, w - eps).omega
        diff = (up - dn) % math.pi
        if diff > math.pi / 2:
            diff -= math.pi
        fd = diff / (2 * eps)
        assert fd == pytest.approx(rn_derivative(g.inverse(), w), rel=5e-5, abs=5e-5)

    @given(st.floats(0.0, 3.0), angles)
    def test_integrates_to_one(self, t, phi):
        # pushforward of the uniform probability measure on the boundary
        g = GroupElement.rotation(phi) @ GroupElement.dilation(t)
        q = 256
        ws = np.arange(q) * math.pi / q
        vals = [rn_derivative(g, w) for w in ws]
        assert sum(vals) / q == pytest.approx(1.0, abs=1e-9)


class TestDistance:
    def test_self_distance(self):
        g = cartan_element(0.2, 1.0, 0.5)
        assert sym_space_distance(g, g) == pytest.approx(0.0, abs=1e-8)

    @given(radials)
    def test_dilation_distance(self, t):
        assert sym_space_distance(
            GroupElement.dilation(t), GroupElement.identity()
        ) == pytest.approx(abs(t), abs=1e-10)

    @given(elements, elements)
    def test_symmetry(self, g, h):
        assert sym_space_distance(g, h) == pytest.approx(sym_space_distance(h, g), abs=1e-9)

    @given(elements, elements, elements)
    def test_triangle(self, g, h, k):
        d_gk = sym_space_distance(g, k)
        assert d_gk <= sym_space_distance(g, h) + sym_space_distance(h, k) + 1e-10

    @given(elements, elements)
    def test_subadditive_norm(self, g, h):
        assert norm(g @ h) <= norm(g) + norm(h) + 1e-10


def test_bulk_round_trips(rng):
    # scaled-down version of the acceptance sweep to keep module tests quick
    for g in random_elements(rng, 2000, 10.0):
        assert approx_entries(iwasawa(g).reconstruct(), g, 1e-10)
        f = cartan(g)
        assert f.t >= 0.0
        assert approx_entries(f.reconstruct(), g, 1e-10)
        assert abs(iwasawa(g).t) <= f.t + 1e-10
