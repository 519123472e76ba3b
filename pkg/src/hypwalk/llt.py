"""Local limit experiments for the walk on the hyperbolic plane.

The object under study is the rescaled n-step average

    n^{3/2} sigma^{-n} E[ f(q_n h0 . o) ],

where q_n is the product of n independent increments of the driving measure,
sigma the spectral radius of the frequency-zero transfer matrix, and h0 a
fixed basepoint shift.  The lab evaluates it three independent ways (exact
convolution, Monte Carlo, frequency-side transfer powers) and compares the
result with its limit, the integral of f against the density built from the
top spectral branch at frequency zero.  All routes share one configuration
so the comparisons are apples to apples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.special import roots_legendre

from .config import LLTSettings, OperatorSettings, default_measure
from .errors import (
    AtomCapError,
    CalibrationError,
    ConfigError,
    DegenerateSpectrumError,
)
from .group import GroupElement
from .measures import AtomicMeasure, convolution_power, sample_products
from .operators import (
    BOUNDARY,
    FourierTruncation,
    SpectralSummary,
    TopEigenvalueCurve,
    assemble_rho,
    assemble_transfer,
    hessian_at_zero,
    lambda_curve,
    select_delta0,
    spectral_summary,
)
from .spherical import (
    PLANCHEREL_CONSTANT,
    HelgasonCoefficients,
    PlancherelGrid,
    TestFunctionX,
    f_coefficients,
    gaussian_bump,
    plancherel_grid,
    radial_kernel_modes,
    radial_quadrature,
    small_frequency_coefficient,
    transform_at_frequencies,
)

MC_CHUNK = 20_000

# Branch validation: the eigenvalue curve backing delta0 is continued at this
# spacing; a coarser frequency grid below delta0 cannot claim the branch data
# transfers to its nodes, hence the configuration check against the limit.
CURVE_STEP = 0.1
CURVE_EXTENT = 2.0
GRID_SPACING_LIMIT = 0.2

# select_delta0 of the default measure at truncation 64, step CURVE_STEP;
# LLTLab re-derives the selection and rejects the config if it no longer
# covers this value, so a stale constant fails loudly rather than silently.
DELTA0_DEFAULT = 1.7

DENSITY_NODES = 32  # Gauss nodes for the finite-step density integral
RHS_REL_TOL = 1e-3  # agreement demanded of the two limit-value routes
SIMPLE_TOLERANCE = 1e-10  # eigenvalue separation below which we refuse


def gamma_density(r, curvature, inverse_top, coefficient):
    """Limit density in scaled frequency: coefficient * exp(-a r^2) r^2.

    a = inverse_top * curvature, the decay rate the branch curvature induces
    once the eigenvalue is normalized by its frequency-zero value.
    """
    r = np.asarray(r, dtype=float)
    a = inverse_top * curvature
    return coefficient * np.exp(-a * r * r) * r * r


def gamma_tail(bound, curvature, inverse_top, coefficient) -> float:
    """Two-sided mass of gamma_density beyond |r| > bound, in closed form."""
    a = inverse_top * curvature
    if bound < 0:
        raise ConfigError("tail bound must be nonnegative")
    ex = math.exp(-a * bound * bound)
    return coefficient * (
        bound * ex / a + math.sqrt(math.pi) * math.erfc(math.sqrt(a) * bound) / (2.0 * a**1.5)
    )


class FourierSplit(NamedTuple):
    """Frequency-route value and its split at the validated radius."""

    value: float
    high: float  # frequency nodes beyond delta0
    low: float  # nodes within delta0; value = high + low


@dataclass(frozen=True)
class FrequencyPoint:
    """Top-branch eigendata of the transfer matrix at one frequency."""

    r: float
    value: complex  # branch eigenvalue
    eta: np.ndarray  # unit right eigenvector
    eta_prime: np.ndarray  # left eigenvector, scaled to <eta', eta> = 1

    def __post_init__(self):
        self.eta.setflags(write=False)
        self.eta_prime.setflags(write=False)


@dataclass(frozen=True)
class RhsLimit:
    """Limit value by two routes that share no code path.

    direct integrates f against the limit density by plane quadrature;
    boundary pairs the transform row at frequency zero with the spectral
    data.  Their agreement calibrates the inversion constant end to end.
    """

    direct: float
    boundary: float
    relative_gap: float

    @property
    def value(self) -> float:
        return self.boundary


@dataclass(frozen=True)
class ConvergenceRecord:
    n: int
    exact: float | None  # absent when the convolution support is refused
    mc: float | None  # absent when sampling is switched off
    mc_stderr: float | None
    fourier: float
    high: float
    low: float
    err_exact: float | None
    err_mc: float | None
    err_fourier: float


@dataclass(frozen=True)
class ConvergenceReport:
    """Error law of the walk average against its limit.

    slope fits log|fourier - limit| against log n over the configured range;
    slope_low_frequency repeats the fit with the high-frequency part removed
    (the actual computed part, not a model of it).  high_rate and
    high_amplitude fit |high part| ~ amplitude * exp(-rate n).  err_times_n
    and local_slopes expose where in the range the n^{-1} regime begins;
    bound_ratio is max |lhs| / ||f||_1 over the range.
    """

    records: tuple
    rhs: RhsLimit
    slope: float
    slope_low_frequency: float
    high_rate: float
    high_amplitude: float
    bound_ratio: float
    err_times_n: tuple
    local_slopes: tuple


@dataclass(frozen=True)
class LLTConfig:
    measure: AtomicMeasure
    f: TestFunctionX
    h0: GroupElement
    n_range: tuple
    delta0: float
    trunc: FourierTruncation
    grid: PlancherelGrid
    mc_samples: int = 100_000
    seed: int = 20260822

    def __post_init__(self):
        if self.trunc.space != BOUNDARY:
            raise ConfigError("transfer spectra live on boundary modes")
        if len(self.n_range) == 0:
            raise ConfigError("n_range must be nonempty")
        steps = tuple(int(n) for n in self.n_range)
        if any(n < 1 for n in steps) or any(
            b <= a for a, b in zip(steps, steps[1:])
        ):
            raise ConfigError("n_range must be strictly increasing positive steps")
        if self.mc_samples < 10**4:
            raise ConfigError("mc_samples must be at least 1e4")
        if not 0.0 < self.delta0 <= self.grid.r_max:
            raise ConfigError("delta0 must lie in (0, r_max]")
        nodes = self.grid.r_nodes
        inside = np.concatenate(
            ([0.0], nodes[nodes <= self.delta0 + 1e-12], [self.delta0])
        )
        worst = float(np.diff(inside).max())
        if worst > GRID_SPACING_LIMIT:
            raise ConfigError(
                f"frequency grid spacing {worst:.3f} below delta0 exceeds the "
                f"validated branch resolution {GRID_SPACING_LIMIT}; refine the grid"
            )


def default_llt_config(
    measure: AtomicMeasure | None = None,
    f: TestFunctionX | None = None,
    h0: GroupElement | None = None,
    settings: LLTSettings | None = None,
    operator: OperatorSettings | None = None,
) -> LLTConfig:
    settings = settings or LLTSettings()
    operator = operator or OperatorSettings()
    return LLTConfig(
        measure=measure if measure is not None else default_measure(),
        f=f if f is not None else gaussian_bump(0.7),
        h0=h0 if h0 is not None else GroupElement.identity(),
        n_range=tuple(settings.convergence_steps),
        delta0=DELTA0_DEFAULT,
        trunc=FourierTruncation(operator.truncation, operator.quadrature),
        grid=plancherel_grid(settings.r_max, settings.r_nodes),
        mc_samples=settings.mc_samples,
        seed=settings.seed,
    )


def walk_eigenfunction(
    point: FrequencyPoint, g: GroupElement, trunc: FourierTruncation
) -> complex:
    """Eigenfunction of convolution by the measure at the branch eigenvalue.

    Built from the matched left/right eigenvectors of the transfer matrix;
    equals 1 at the identity by the pairing normalization.
    """
    rho = assemble_rho(g, point.r, trunc)
    return complex(np.vdot(rho.entries @ point.eta_prime, point.eta))


class LLTLab:
    """All evaluation routes of one local limit experiment.

    Spectral data, the validated eigenvalue branch, the test function
    transform, and per-node transfer matrices are computed once on first
    use and shared between routes.
    """

    def __init__(self, cfg: LLTConfig):
        self.cfg = cfg
        self._summary: SpectralSummary | None = None
        self._curve: TopEigenvalueCurve | None = None
        self._quadratic = None
        self._coefficient: float | None = None
        self._c_mu: float | None = None
        self._fhat: HelgasonCoefficients | None = None
        self._fhat_zero: np.ndarray | None = None
        self._nodes = None
        self._low_points = None
        self._density_cache: dict = {}
        self._zero_vector: np.ndarray | None = None

    # spectral data ----------------------------------------------------

    @property
    def summary(self) -> SpectralSummary:
        if self._summary is None:
            self._summary = spectral_summary(
                assemble_transfer(self.cfg.measure, 0.0, self.cfg.trunc)
            )
        return self._summary

    @property
    def sigma(self) -> float:
        return self.summary.sigma

    @property
    def curve(self) -> TopEigenvalueCurve:
        """Branch continuation out to at least the configured delta0.

        The stencil points for the curvature ride along, and the selection
        rule must reproduce at least cfg.delta0 or the config is rejected:
        delta0 is a promise about the branch, not a free parameter.
        """
        if self._curve is None:
            extent = max(CURVE_EXTENT, self.cfg.delta0)
            steps = int(round(extent / CURVE_STEP))
            grid = {round(k * CURVE_STEP, 10) for k in range(-steps, steps + 1)}
            grid |= {round(k * 0.01, 10) for k in (-2, -1, 1, 2)}
            grid |= {self.cfg.delta0, -self.cfg.delta0}
            curve = lambda_curve(self.cfg.measure, sorted(grid), self.cfg.trunc)
            validated = select_delta0(curve)
            if validated + 1e-9 < self.cfg.delta0:
                raise ConfigError(
                    f"delta0 = {self.cfg.delta0} exceeds the validated branch "
                    f"radius {validated:.3f} at this truncation"
                )
            self._curve = curve
        return self._curve

    @property
    def quadratic(self):
        if self._quadratic is None:
            self._quadratic = hessian_at_zero(self.curve)
        return self._quadratic

    @property
    def coefficient(self) -> float:
        """Small-frequency constant of the inverse c-function square."""
        if self._coefficient is None:
            self._coefficient = small_frequency_coefficient()
        return self._coefficient

    @property
    def c_mu(self) -> float:
        """Total mass of the limit density, by quadrature.

        The closed Gaussian form exists and is used as an oracle in the
        tests; the lab integrates so a wrong density shape cannot hide
        behind a matching constant.
        """
        if self._c_mu is None:
            q = self.quadratic
            a = q.inverse_top * q.curvature
            upper = 8.0 / math.sqrt(a)
            x, w = roots_legendre(200)
            r = 0.5 * upper * (x + 1.0)
            vals = gamma_density(r, q.curvature, q.inverse_top, self.coefficient)
            self._c_mu = float(2.0 * (0.5 * upper * w) @ vals)
        return self._c_mu

    # transform data ---------------------------------------------------

    @property
    def fhat(self) -> HelgasonCoefficients:
        if self._fhat is None:
            self._fhat = f_coefficients(self.cfg.f, self.cfg.grid, self.cfg.trunc)
        return self._fhat

    @property
    def fhat_zero(self) -> np.ndarray:
        if self._fhat_zero is None:
            self._fhat_zero = transform_at_frequencies(
                self.cfg.f, [0.0], self.cfg.trunc
            )[0]
        return self._fhat_zero

    @property
    def f_l1(self) -> float:
        return self.fhat.l1

    # shared node machinery --------------------------------------------

    @property
    def _h0_is_identity(self) -> bool:
        return bool(np.abs(self.cfg.h0.mat - np.eye(2)).max() < 1e-15)

    def _basepoint_vector(self, r: float) -> np.ndarray:
        """rho_r(h0) applied to the constant boundary mode."""
        center = self.cfg.trunc.N
        if self._h0_is_identity:
            v = np.zeros(self.cfg.trunc.dim, dtype=complex)
            v[center] = 1.0
            return v
        return assemble_rho(self.cfg.h0, r, self.cfg.trunc).entries[:, center]

    def _ensure_nodes(self):
        if self._nodes is not None:
            return
        cfg = self.cfg
        nodes = []
        for r, w in zip(cfg.grid.r_nodes, cfg.grid.r_weights):
            S = assemble_transfer(cfg.measure, float(r), cfg.trunc)
            nodes.append(
                {
                    "r": float(r),
                    "weight": float(w),
                    "scaled": S.entries / self.sigma,
                    "v0": self._basepoint_vector(float(r)),
                    "rev_f": None,  # filled once the transform rows exist
                }
            )
        rows = self.fhat.values
        for i, node in enumerate(nodes):
            node["rev_f"] = rows[i][::-1].copy()
        self._nodes = nodes

    def _prefactor(self, n: int) -> float:
        # the n = 0 average is reported bare, without the vanishing scale
        if n == 0:
            return 1.0
        return math.exp(1.5 * math.log(n))

    # evaluation routes ------------------------------------------------

    def _point_value(self) -> float:
        return float(self.cfg.f.evaluate_elements(self.cfg.h0.mat[None, :, :])[0])

    def lhs_exact(self, n: int) -> float:
        """Walk average by full convolution power; refuses oversized supports.

        The raised AtomCapError directs to the sampling route, which has no
        support growth.
        """
        if n < 0:
            raise ConfigError("n must be nonnegative")
        if n == 0:
            return self._point_value()
        power = convolution_power(self.cfg.measure, n)
        mats = power.mats @ self.cfg.h0.mat
        vals = self.cfg.f.evaluate_elements(mats)
        mean = float(power.weights @ vals)
        return self._prefactor(n) * self.sigma ** (-n) * mean

    def lhs_monte_carlo(self, n: int) -> tuple[float, float]:
        """Walk average by sampling; returns (value, standard error).

        The reported error scales like sigma^{-n} with the rescaling, which
        is the route's intrinsic cost at large n.
        """
        if n < 0:
            raise ConfigError("n must be nonnegative")
        if n == 0:
            return self._point_value(), 0.0
        cfg = self.cfg
        total = 0.0
        total_sq = 0.0
        count = 0
        chunk_index = 0
        while count < cfg.mc_samples:
            size = min(MC_CHUNK, cfg.mc_samples - count)
            seed = np.random.SeedSequence((cfg.seed, n, chunk_index))
            prods = sample_products(cfg.measure, n, size, seed)
            vals = cfg.f.evaluate_elements(prods @ cfg.h0.mat)
            total += float(vals.sum())
            total_sq += float((vals * vals).sum())
            count += size
            chunk_index += 1
        mean = total / count
        var = max(total_sq / count - mean * mean, 0.0) * count / (count - 1)
        scale = self._prefactor(n) * self.sigma ** (-n)
        return scale * mean, scale * math.sqrt(var / count)

    def fourier_batch(self, steps) -> dict[int, FourierSplit]:
        """Frequency-route values for several n in one pass over the nodes.

        Per node the scaled transfer matrix is powered through its binary
        ladder, so the cost grows with log(max n), not max n.  The split
        at delta0 separates the part the branch data controls from the
        high-frequency remainder.
        """
        steps = sorted({int(n) for n in steps})
        if steps and steps[0] < 0:
            raise ConfigError("n must be nonnegative")
        self._ensure_nodes()
        delta0 = self.cfg.delta0
        low = {n: 0.0 for n in steps}
        high = {n: 0.0 for n in steps}
        max_bits = max(int(n).bit_length() for n in steps) if steps else 0
        for node in self._nodes:
            ladder = [node["scaled"]]
            for _ in range(max_bits - 1):
                ladder.append(ladder[-1] @ ladder[-1])
            bucket = low if node["r"] <= delta0 + 1e-12 else high
            for n in steps:
                v = node["v0"]
                k, m = 0, n
                while m:
                    if m & 1:
                        v = ladder[k] @ v
                    m >>= 1
                    k += 1
                bucket[n] += node["weight"] * float((node["rev_f"] @ v).real)
        out = {}
        for n in steps:
            pref = self._prefactor(n)
            out[n] = FourierSplit(
                pref * (low[n] + high[n]), pref * high[n], pref * low[n]
            )
        return out

    def lhs_fourier(self, n: int) -> FourierSplit:
        return self.fourier_batch((n,))[n]

    # branch eigendata at arbitrary frequency --------------------------

    def _point_from_entries(self, entries: np.ndarray, r: float) -> FrequencyPoint:
        values, left, right = scipy.linalg.eig(entries, left=True, right=True)
        overlaps = np.abs(self.summary.eta.conj() @ right)
        overlaps /= np.linalg.norm(right, axis=0)
        pick = int(np.argmax(overlaps))
        others = np.abs(values - values[pick])
        others[pick] = np.inf
        if float(others.min()) < SIMPLE_TOLERANCE:
            raise DegenerateSpectrumError(
                f"branch eigenvalue at r = {r} within {SIMPLE_TOLERANCE} of a neighbor"
            )
        eta = right[:, pick] / np.linalg.norm(right[:, pick])
        pairing = np.vdot(left[:, pick], eta)
        if abs(pairing) < 1e-8:
            raise DegenerateSpectrumError(
                f"left/right eigenvector pairing degenerate at r = {r}"
            )
        eta_prime = left[:, pick] / np.conj(pairing)
        return FrequencyPoint(float(r), complex(values[pick]), eta, eta_prime)

    def frequency_point(self, r: float) -> FrequencyPoint:
        """Matched eigendata of the transfer matrix at one frequency."""
        if r == 0.0:
            s = self.summary
            return FrequencyPoint(0.0, s.top, s.eta, s.eta_prime)
        S = assemble_transfer(self.cfg.measure, float(r), self.cfg.trunc)
        return self._point_from_entries(S.entries, float(r))

    # densities --------------------------------------------------------

    def limit_density(self, g: GroupElement) -> float:
        """Limit density at g: total gamma mass times the real part of the
        frequency-zero eigenfunction."""
        point = self.frequency_point(0.0)
        return self.c_mu * complex(walk_eigenfunction(point, g, self.cfg.trunc)).real

    def _density_nodes(self, n: int):
        if n not in self._density_cache:
            q = self.quadratic
            upper = min(self.cfg.delta0 * math.sqrt(n), self.cfg.grid.r_max)
            x, w = roots_legendre(DENSITY_NODES)
            r = 0.5 * upper * (x + 1.0)
            gw = 0.5 * upper * w * gamma_density(
                r, q.curvature, q.inverse_top, self.coefficient
            )
            points = [self.frequency_point(float(ri) / math.sqrt(n)) for ri in r]
            self._density_cache[n] = (gw, points)
        return self._density_cache[n]

    def finite_step_density(self, g: GroupElement, n: int) -> float:
        """Density after n steps: gamma-weighted eigenfunctions over the
        validated scaled-frequency window.

        Conjugate symmetry of the branch folds the negative frequencies
        into twice the real part; the mass missing beyond the window is
        gamma_tail of the integration bound.
        """
        if n < 1:
            raise ConfigError("n must be positive")
        gw, points = self._density_nodes(n)
        acc = 0.0
        for weight, point in zip(gw, points):
            acc += 2.0 * weight * complex(
                walk_eigenfunction(point, g, self.cfg.trunc)
            ).real
        return acc

    def rank_one_deviation(self, steps) -> np.ndarray:
        """Low-frequency part minus its branch rank-one prediction, per n.

        What remains is the contribution of the contracted complement, so
        it must die exponentially at the rate of the branch gap.
        """
        steps = [int(n) for n in steps]
        self._ensure_nodes()
        if self._low_points is None:
            pts = []
            for node in self._nodes:
                if node["r"] <= self.cfg.delta0 + 1e-12:
                    pts.append(
                        (
                            node,
                            self._point_from_entries(
                                node["scaled"] * self.sigma, node["r"]
                            ),
                        )
                    )
            self._low_points = pts
        splits = self.fourier_batch(steps)
        out = []
        for n in steps:
            pred = 0.0
            for node, point in self._low_points:
                scale = (point.value / self.sigma) ** n
                amp = np.vdot(point.eta_prime, node["v0"]) * (
                    node["rev_f"] @ point.eta
                )
                pred += node["weight"] * float((scale * amp).real)
            pred *= self._prefactor(n)
            out.append(splits[n].low - pred)
        return np.asarray(out)

    # the limit value --------------------------------------------------

    def _rhs_boundary(self) -> float:
        s = self.summary
        v0 = self._basepoint_vector(0.0)
        pairing = np.vdot(s.eta_prime, v0) * (self.fhat_zero @ s.eta[::-1])
        return self.c_mu / (4.0 * math.pi**2) * float(pairing.real)

    def _rhs_direct(self, theta_nodes: int = 256, t_nodes: int = 128) -> float:
        cfg = self.cfg
        s = self.summary
        center = cfg.trunc.N
        theta = np.arange(theta_nodes) * (math.pi / theta_nodes)
        t, w = radial_quadrature(cfg.f.t_extent, t_nodes)
        kernel = radial_kernel_modes(np.zeros(1), t, cfg.trunc.N)[:, 0, :]  # (T, modes)
        samples = cfg.f.evaluate_polar(theta[:, None], t[None, :])  # (P, T)
        if self._h0_is_identity:
            shifted = s.eta_prime[center]
        else:
            rho = assemble_rho(cfg.h0.inverse(), 0.0, cfg.trunc)
            shifted = (rho.entries @ s.eta_prime)[center]
        doubled = np.exp(
            2j * np.outer(theta, cfg.trunc.mode_indices.astype(float))
        )  # (P, modes)
        profile = doubled @ (s.eta[:, None] * kernel.T)  # (P, T)
        integrand = samples * (np.conj(shifted) * profile).real
        radial = w * np.sinh(t)
        return float(
            self.c_mu
            * PLANCHEREL_CONSTANT
            * (math.pi / theta_nodes)
            * (integrand @ radial).sum()
        )

    def rhs_limit(self) -> RhsLimit:
        """Limit value by both routes; they must agree or the run stops.

        Disagreement beyond RHS_REL_TOL means the inversion constant, the
        branch normalization, or the transform row at frequency zero is
        miscalibrated, and no convergence statement downstream would mean
        anything.
        """
        direct = self._rhs_direct()
        boundary = self._rhs_boundary()
        scale = max(abs(direct), abs(boundary), 1e-300)
        gap = abs(direct - boundary) / scale
        if gap > RHS_REL_TOL:
            raise CalibrationError(
                f"limit routes disagree: direct {direct:.9e} vs boundary "
                f"{boundary:.9e} (relative {gap:.2e}); Plancherel constant or "
                "branch normalization suspect"
            )
        return RhsLimit(direct, boundary, gap)

    def rhs_limit_unsubstituted(
        self, theta_nodes: int = 96, t_nodes: int = 64
    ) -> float:
        """Limit value with the basepoint left inside the test function.

        Integrates f(g h0 . o) against the limit density over the group in
        polar coordinates, with no change of variables: the identity that
        moving the basepoint equals shifting the density argument is then
        checkable against rhs_limit rather than assumed.
        """
        cfg = self.cfg
        s = self.summary
        P = theta_nodes
        modes = cfg.trunc.mode_indices.astype(float)
        theta = np.arange(P) * (math.pi / P)
        t, w = radial_quadrature(cfg.f.t_extent, t_nodes)
        phases = np.exp(2j * np.outer(theta, modes))  # (P, modes)
        right_diag = np.exp(-2j * np.outer(modes, theta))  # (modes, P)
        shifted_prime = right_diag * s.eta_prime[:, None]  # rho(k_phi) eta'
        rotations = np.stack([GroupElement.rotation(a).mat for a in theta])
        tail = np.einsum("pij,jk->pik", rotations, cfg.h0.mat)  # k_phi h0
        acc = 0.0
        for j, (tj, wj) in enumerate(zip(t, w)):
            block = assemble_rho(GroupElement.dilation(float(tj)), 0.0, cfg.trunc)
            spun = block.entries @ shifted_prime  # (modes, P) over phi
            weights = phases @ (np.conj(spun) * s.eta[:, None])  # (P_theta, P_phi)
            mats = np.einsum(
                "aij,jk,bkl->abil",
                rotations,
                GroupElement.dilation(float(tj)).mat,
                tail,
            )
            vals = cfg.f.evaluate_elements(mats.reshape(-1, 2, 2)).reshape(P, P)
            acc += wj * math.sinh(float(tj)) * float((vals * weights.real).sum())
        return float(
            self.c_mu * PLANCHEREL_CONSTANT * (math.pi / P) * (1.0 / P) * acc
        )

    # the full experiment ----------------------------------------------

    def run_convergence(self, include_mc: bool = True) -> ConvergenceReport:
        cfg = self.cfg
        rhs = self.rhs_limit()
        splits = self.fourier_batch(cfg.n_range)
        records = []
        for n in cfg.n_range:
            try:
                exact = self.lhs_exact(n)
            except AtomCapError:
                exact = None
            mc, stderr = self.lhs_monte_carlo(n) if include_mc else (None, None)
            split = splits[n]
            records.append(
                ConvergenceRecord(
                    n=n,
                    exact=exact,
                    mc=mc,
                    mc_stderr=stderr,
                    fourier=split.value,
                    high=split.high,
                    low=split.low,
                    err_exact=None if exact is None else abs(exact - rhs.value),
                    err_mc=None if mc is None else abs(mc - rhs.value),
                    err_fourier=abs(split.value - rhs.value),
                )
            )
        ns = np.asarray([rec.n for rec in records], dtype=float)
        err = np.maximum([rec.err_fourier for rec in records], 1e-300)
        err_low = np.maximum([abs(rec.low - rhs.value) for rec in records], 1e-300)
        slope = float(np.polyfit(np.log(ns), np.log(err), 1)[0])
        slope_low = float(np.polyfit(np.log(ns), np.log(err_low), 1)[0])
        high_abs = np.asarray([max(abs(rec.high), 1e-300) for rec in records])
        rate_fit = np.polyfit(ns, np.log(high_abs), 1)
        local = tuple(
            float(x)
            for x in np.diff(np.log(err)) / np.diff(np.log(ns))
        )
        bound = max(abs(rec.fourier) for rec in records) / self.f_l1
        return ConvergenceReport(
            records=tuple(records),
            rhs=rhs,
            slope=slope,
            slope_low_frequency=slope_low,
            high_rate=float(-rate_fit[0]),
            high_amplitude=float(math.exp(rate_fit[1])),
            bound_ratio=float(bound),
            err_times_n=tuple(float(e * n) for e, n in zip(err, ns)),
            local_slopes=local,
        )
