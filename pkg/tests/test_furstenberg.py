"""Stationary density, decay reports, and the circle inequality probes."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypwalk.config import default_measure
from hypwalk.errors import ConfigError, FixedPointError, NumericalError
from hypwalk.furstenberg import (
    AGMON_CONSTANT,
    StationaryDensity,
    agmon_check,
    almost_orthogonality_probe,
    high_mode_decay_curve,
    partial_integration_check,
    smoothness_report,
    stationarity_residual,
    stationary_density,
)
from hypwalk.group import GroupElement, cocycle_action_grid
from hypwalk.measures import AtomicMeasure
from hypwalk.operators import (
    KIND_MARKOV,
    FourierTruncation,
    assemble_transfer,
    mode_block,
    synthesize,
)

TRUNC = FourierTruncation(32, 256)
WIDE = FourierTruncation(64, 512)


def rotation_measure(angle=0.3):
    return AtomicMeasure(
        ((GroupElement.rotation(angle), 0.5), (GroupElement.rotation(-angle), 0.5))
    )


def power_law_density(exponent, trunc):
    modes = np.arange(-trunc.N, trunc.N + 1)
    coeffs = np.zeros(2 * trunc.N + 1, dtype=complex)
    off = modes != 0
    coeffs[off] = np.abs(modes[off], dtype=float) ** -exponent
    coeffs[trunc.N] = 1.0
    return StationaryDensity(coeffs, 0.0, 1.0, 0.0, trunc)


@pytest.fixture(scope="module")
def psi():
    return stationary_density(default_measure(), TRUNC)


class TestStationaryDensity:
    def test_rotation_measure_gives_flat_density(self):
        flat = stationary_density(rotation_measure(), TRUNC)
        off_center = np.delete(flat.coefficients, TRUNC.N)
        assert np.abs(off_center).max() < 1e-10
        assert flat.mass == pytest.approx(1.0, abs=1e-12)
        assert flat.positivity_min == pytest.approx(1.0, abs=1e-10)
        assert flat.eigenvalue_distance < 1e-12

    def test_default_measure_fixed_point(self, psi):
        assert psi.eigenvalue_distance < 1e-12
        assert psi.mass == 1.0
        assert psi.positivity_min > 0.0
        # regression band; the density dips to about 0.84 of flat
        assert 0.7 < psi.positivity_min < 0.95

    def test_coefficients_conjugate_symmetric(self, psi):
        flipped = np.conj(psi.coefficients[::-1])
        assert np.abs(psi.coefficients - flipped).max() < 1e-12

    def test_reinsertion_reproduces_fixed_point(self, psi):
        markov = assemble_transfer(default_measure(), 0.0, TRUNC, kind=KIND_MARKOV)
        back = markov.entries.conj().T @ psi.coefficients
        assert np.abs(back - psi.coefficients).max() < 1e-8

    def test_conjugation_equivariance(self, psi):
        k = GroupElement.rotation(0.45)
        conjugated = AtomicMeasure(
            tuple((k @ g @ k.inverse(), w) for g, w in default_measure().atoms)
        )
        rotated = stationary_density(conjugated, TRUNC)
        theta = TRUNC.nodes
        moved = cocycle_action_grid(k, theta)[1]
        assert np.abs(rotated.values(moved) - psi.values(theta)).max() < 1e-8

    def test_values_are_real_synthesis(self, psi):
        angles = np.linspace(0.0, 3.0, 17)
        direct = synthesize(TRUNC, psi.coefficients, angles)
        assert np.abs(direct.imag).max() < 1e-12
        assert psi.values(angles) == pytest.approx(direct.real)

    def test_quarter_turn_rotation_is_not_simple(self):
        # theta -> theta + pi/2 multiplies mode m by (-1)^m, so the
        # eigenvalue 1 has the whole even-mode subspace
        quarter = AtomicMeasure(((GroupElement.rotation(math.pi / 2), 1.0),))
        with pytest.raises(FixedPointError, match="not simple"):
            stationary_density(quarter, TRUNC)

    def test_mass_validation(self):
        coeffs = np.zeros(2 * TRUNC.N + 1, dtype=complex)
        coeffs[TRUNC.N] = 1.1
        with pytest.raises(NumericalError, match="mass"):
            StationaryDensity(coeffs, 1.0, 1.1, 0.0, TRUNC)

    def test_symmetry_validation(self):
        coeffs = np.zeros(2 * TRUNC.N + 1, dtype=complex)
        coeffs[TRUNC.N] = 1.0
        coeffs[TRUNC.N + 3] = 0.2
        with pytest.raises(NumericalError, match="symmetric"):
            StationaryDensity(coeffs, 1.0, 1.0, 0.0, TRUNC)


class TestStationarityResidual:
    def test_computed_fixed_point_is_stationary(self, psi):
        residual = stationarity_residual(psi, default_measure(), test_count=100, seed=3)
        assert residual < 1e-8

    def test_rotation_measure_exact(self):
        flat = stationary_density(rotation_measure(), TRUNC)
        assert stationarity_residual(flat, rotation_measure(), 20, seed=1) < 1e-12

    def test_noise_grows_residual(self, psi):
        rng = np.random.default_rng(5)
        bump = 1e-4 * (rng.normal(size=len(psi.coefficients))
                       + 1j * rng.normal(size=len(psi.coefficients)))
        bump = 0.5 * (bump + np.conj(bump[::-1]))
        bump[TRUNC.N] = 0.0
        noisy = StationaryDensity(
            psi.coefficients + bump, psi.positivity_min, 1.0, 0.0, TRUNC
        )
        clean = stationarity_residual(psi, default_measure(), 30, seed=2)
        perturbed = stationarity_residual(noisy, default_measure(), 30, seed=2)
        assert perturbed > 1e-5
        assert perturbed > 100 * clean

    def test_deterministic_per_seed(self, psi):
        mu = default_measure()
        a = stationarity_residual(psi, mu, 10, seed=42)
        b = stationarity_residual(psi, mu, 10, seed=42)
        assert a == b


class TestSmoothnessReport:
    def test_flat_density_flags_infinite_smoothness(self):
        flat = stationary_density(rotation_measure(), TRUNC)
        report = smoothness_report(flat)
        assert report.fitted_s == math.inf
        assert report.m_class is None
        assert max(report.norms[1:]) < 1e-10

    def test_cubic_power_law_matches_block_sum_oracle(self):
        report = smoothness_report(power_law_density(3.0, WIDE))
        # same least-squares fit, but block sums taken in closed form over
        # integer ranges rather than through the mask machinery
        levels, logs = [], []
        for level in range(2, 7):
            lo, hi = 2 ** (level - 1), 2**level
            total = 2.0 * sum(float(m) ** -6.0 for m in range(lo, hi))
            levels.append(level)
            logs.append(math.log2(math.sqrt(total)))
        slope = float(np.polyfit(levels, logs, 1)[0])
        assert report.fitted_s == pytest.approx(-slope - 1.0, abs=1e-10)
        assert 1.4 < report.fitted_s < 1.9
        assert report.m_class == 1
        assert report.truncated_fit

    def test_power_law_recovery_within_tolerance(self):
        # the discrete block sums only approach the continuum slope as the
        # band widens, hence the wide truncation here
        tall = FourierTruncation(1024, 8192)
        cubic = smoothness_report(power_law_density(3.0, tall))
        assert cubic.fitted_s == pytest.approx(1.5, abs=0.1)
        quadratic = smoothness_report(power_law_density(2.0, tall))
        assert quadratic.fitted_s == pytest.approx(0.5, abs=0.1)

    def test_smaller_generator_scale_is_smoother(self):
        broad = smoothness_report(stationary_density(default_measure(0.3), WIDE))
        narrow = smoothness_report(stationary_density(default_measure(0.15), WIDE))
        assert narrow.fitted_s > broad.fitted_s + 0.5

    def test_blocks_partition_nonzero_modes(self, psi):
        report = smoothness_report(psi)
        covered = np.zeros(2 * TRUNC.N + 1, dtype=bool)
        for level in report.levels:
            block = mode_block(TRUNC, level)
            assert not (covered & block).any()
            covered |= block
        covered[TRUNC.N] = True
        assert covered.all()
        assert all(norm >= 0.0 for norm in report.norms)

    def test_needs_enough_blocks(self):
        tiny = FourierTruncation(8, 64)
        with pytest.raises(ConfigError, match="blocks"):
            smoothness_report(power_law_density(3.0, tiny))


class TestAgmonCheck:
    def test_single_mode_closed_form(self):
        for m in [0, 2, 5]:
            coeffs = np.zeros(2 * 8 + 1, dtype=complex)
            coeffs[8 + m] = 1.0
            probe = agmon_check(coeffs)
            assert probe.sup_norm == pytest.approx(1.0, abs=1e-10)
            expected = (1.0 + m * m) ** -0.25
            assert probe.ratio == pytest.approx(expected, abs=1e-10)
            assert probe.ratio <= 1.0 + 1e-12

    def test_thousand_draws_stay_under_frozen_bound(self):
        rng = np.random.default_rng(20260822)
        worst = 0.0
        for _ in range(1000):
            half = int(rng.integers(2, 65))
            coeffs = rng.normal(size=2 * half + 1) + 1j * rng.normal(size=2 * half + 1)
            worst = max(worst, agmon_check(coeffs).ratio)
        assert worst < AGMON_CONSTANT
        # seeded family; the max is a frozen regression value
        assert worst == pytest.approx(1.5975, abs=2e-3)

    def test_dirichlet_kernel_bounded_while_concentrating(self):
        for half in [4, 16, 64]:
            coeffs = np.ones(2 * half + 1)
            probe = agmon_check(coeffs)
            concentration = probe.sup_norm / np.linalg.norm(coeffs)
            assert concentration == pytest.approx(math.sqrt(2 * half + 1), rel=1e-10)
            assert probe.ratio < 1.87

    def test_near_extremal_profile_fits_margin(self):
        modes = np.arange(-64, 65)
        probe = agmon_check((1.0 + modes * modes) ** -0.25)
        assert 2.0 < probe.ratio < AGMON_CONSTANT

    def test_zero_vector(self):
        probe = agmon_check(np.zeros(9))
        assert probe == (0.0, 0.0, 0.0)

    def test_even_length_rejected(self):
        with pytest.raises(ConfigError, match="odd"):
            agmon_check(np.ones(8))


class TestPartialIntegration:
    def test_single_modes_exact(self):
        for m in [1, 3, 7]:
            coeffs = np.zeros(2 * 8 + 1, dtype=complex)
            coeffs[8 + m] = 1.0
            left, right = partial_integration_check(coeffs, coeffs)
            assert left == pytest.approx(m * m, abs=1e-10)
            assert right == pytest.approx(m * m, abs=1e-10)

    def test_random_pair_agrees(self):
        rng = np.random.default_rng(9)
        one = rng.normal(size=33) + 1j * rng.normal(size=33)
        two = rng.normal(size=33) + 1j * rng.normal(size=33)
        one /= np.linalg.norm(one)
        two /= np.linalg.norm(two)
        left, right = partial_integration_check(one, two)
        assert left == pytest.approx(right, abs=1e-10)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 12))
    def test_identity_property(self, seed, half):
        rng = np.random.default_rng(seed)
        one = rng.normal(size=2 * half + 1) + 1j * rng.normal(size=2 * half + 1)
        two = rng.normal(size=2 * half + 1) + 1j * rng.normal(size=2 * half + 1)
        left, right = partial_integration_check(one, two)
        scale = max(1.0, abs(left), abs(right))
        assert abs(left - right) / scale < 1e-8

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ConfigError):
            partial_integration_check(np.ones(9), np.ones(11))


class TestAlmostOrthogonality:
    def test_identity_blocks_orthogonal(self):
        assert almost_orthogonality_probe(GroupElement.identity(), 2, 4, TRUNC) < 1e-12

    def test_rotations_preserve_levels(self):
        k = GroupElement.rotation(0.7)
        for pair in [(1, 3), (2, 5), (1, 5)]:
            assert almost_orthogonality_probe(k, *pair, TRUNC) < 1e-12

    def test_small_dilation_coupling_bounded(self):
        g = GroupElement.dilation(0.6)
        pairs = [(1, 2), (1, 4), (1, 6), (2, 5), (3, 6), (4, 4), (5, 6), (6, 6)]
        values = [almost_orthogonality_probe(g, a, b, WIDE) for a, b in pairs]
        assert max(values) < 2.5

    def test_symmetric_in_levels_up_to_adjoint_scale(self):
        g = GroupElement.shear(0.3)
        forward = almost_orthogonality_probe(g, 2, 4, TRUNC)
        backward = almost_orthogonality_probe(g, 4, 2, TRUNC)
        assert forward < 2.5 and backward < 2.5

    def test_level_beyond_truncation_rejected(self):
        with pytest.raises(ConfigError, match="level"):
            almost_orthogonality_probe(GroupElement.identity(), 2, 7, TRUNC)


class TestHighModeDecayCurve:
    def test_default_measure_curves_monotone(self):
        curve = high_mode_decay_curve(default_measure(), TRUNC, range(1, 5))
        for norms in (curve.transfer_norms, curve.markov_norms):
            assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))
            assert all(0.0 < x < 1.1 for x in norms)

    def test_rotation_measure_never_contracts(self):
        # a single rotation atom acts diagonally by unit phases, so every
        # restricted norm is exactly 1; averaging two rotations would
        # already dip slightly through phase cancellation
        single = AtomicMeasure(((GroupElement.rotation(0.3), 1.0),))
        curve = high_mode_decay_curve(single, TRUNC, range(1, 5))
        assert curve.first_half is None
        assert all(abs(x - 1.0) < 1e-10 for x in curve.markov_norms)
        paired = high_mode_decay_curve(rotation_measure(), TRUNC, range(1, 5))
        assert paired.first_half is None
        assert all(x > 0.97 for x in paired.markov_norms)

    def test_scale_comparison_on_restricted_norms(self):
        # neither scale reaches the half threshold at this truncation, so
        # the first-crossing comparison degenerates to equality; the
        # per-level ordering is the observable part
        broad = high_mode_decay_curve(default_measure(0.3), TRUNC, range(1, 5))
        narrow = high_mode_decay_curve(default_measure(0.15), TRUNC, range(1, 5))
        assert broad.first_half == narrow.first_half is None
        assert broad.first_quarter is None
        for small, large in zip(broad.markov_norms, narrow.markov_norms):
            assert large >= small - 1e-12

    def test_levels_validated(self):
        with pytest.raises(ConfigError, match="increasing"):
            high_mode_decay_curve(default_measure(), TRUNC, [3, 2])
        with pytest.raises(ConfigError):
            high_mode_decay_curve(default_measure(), TRUNC, [1, 6])
