"""Radial harmonic analysis on the hyperbolic plane.

Spherical functions, the inverse-square modulus of the Harish-Chandra
c-function, the Plancherel frequency grid, and the scalar and full
(frequency, boundary-mode) transforms with their inversions.

Normalization conventions, fixed once here and used everywhere:

  * Haar measure on the group in polar coordinates g = k_{theta1} a_t
    k_{theta2}:
        integral = (1/pi) * int d(theta1) int sinh(t) dt int d(theta2)
    over [0, pi) x [0, inf) x [0, 2 pi).
  * boundary modes e_m(omega) = exp(2 i m omega), orthonormal for
    d(omega)/pi on [0, pi).
  * full transform  coeffs[r, m] = 2 pi * int_0^inf F_m(t) k_m(r, t)
    sinh(t) dt where F_m is the angular mode profile of the function and
    k_m the angular mode of the plane-wave kernel.
  * inversion integrates the frequency half-line against the weight
    (1/(2 pi^2)) |c(r)|^{-2} dr and takes the real part, which equals the
    full-line integral for the conjugate-symmetric integrand of a real
    function.  The constant is forced by the other choices; the
    calibration test pins it against round-trips on independent bumps.

The plane-wave kernel at radius t concentrates an e^{t/2}-high spike in
an angular window of width e^{-t}, so a uniform angular rule needs about
e^t nodes.  Small radii use that rule directly; larger radii switch to a
composite rule (spike window, logarithmic shoulder, smooth center,
mirrored shoulder) whose node count grows only linearly in t, the mode
cutoff, and the top frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import loggamma, roots_legendre

from .errors import ConfigError, NumericalError
from .group import GroupElement, norm, norms_of
from .operators import BOUNDARY, FourierTruncation

PLANCHEREL_CONSTANT = 1.0 / (2.0 * math.pi**2)

GAUSSIAN = "gaussian"
BANDLIMITED = "bandlimited"

# width multiple after which a Gaussian radial profile is treated as zero
SUPPORT_WIDTHS = 8.0

# radius below which the uniform angular rule stays affordable
_UNIFORM_RADIUS = 4.0
# spike window covers angles within this multiple of e^{-t}
_SPIKE_WINDOW = 30.0


# Root data for the frequency-ratio Beta product: (multiplicity, frequency
# coefficient) per indivisible root, and (multiplicity, half-root
# multiplicity, frequency coefficient) per root with a divisible half.  The
# divisible tuple is empty for this group; the evaluator keeps that branch
# so the product shape stays general.
INDIVISIBLE_ROOTS = ((1, 1.0),)
DIVISIBLE_ROOTS: tuple = ()
HALF_SUM = 0.5


def _log_beta(a, b):
    return loggamma(a) + loggamma(b) - loggamma(a + b)


def _log_root_product(z, indivisible=INDIVISIBLE_ROOTS, divisible=DIVISIBLE_ROOTS):
    """Log of the Beta product over positive roots at the linear form z."""
    total = np.zeros_like(np.asarray(z, dtype=complex))
    for mult, coeff in indivisible:
        total = total + _log_beta(0.5 * mult, coeff * z)
    for mult, half_mult, coeff in divisible:
        total = total + _log_beta(0.5 * mult, 0.25 * half_mult + coeff * z)
    return total


def c_inverse_sq(r):
    """Inverse square modulus of the c-function via the Beta/Gamma product.

    Ratio of the root product at the half-sum to its value at the
    imaginary form ir.  Evaluated in log space so large r cannot
    overflow; the removable singularity at r = 0 is filled with the
    limit value 0.
    """
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    out = np.zeros_like(r)
    nz = r != 0.0
    reference = _log_root_product(complex(HALF_SUM)).real
    log_prod = _log_root_product(1j * r[nz])
    out[nz] = np.exp(2.0 * (reference - log_prod.real))
    return float(out[0]) if scalar else out


def small_frequency_coefficient(r_cap: float = 0.05, count: int = 24) -> float:
    """Leading quadratic coefficient of the Plancherel product near r = 0."""
    r = np.linspace(r_cap / count, r_cap, count)
    design = np.vander(r**2, 4, increasing=True)[:, 1:]  # r^2, r^4, r^6
    coef, *_ = np.linalg.lstsq(design, c_inverse_sq(r), rcond=None)
    return float(coef[0])


def _kernel_nodes(t: float, r_max: float, max_mode: int):
    """Angular nodes and weights resolving the plane-wave kernel at radius t."""
    if t <= _UNIFORM_RADIUS:
        q = max(256, int(math.ceil(math.exp(t) * (16.0 + t + 2.0 * r_max))))
        return np.arange(q) * (math.pi / q), np.full(q, math.pi / q)
    lam = _SPIKE_WINDOW
    a = lam * math.exp(-t)
    # spike window [0, a]: phase runs like r * log(1 + (angle e^t)^2)
    cycles_a = (r_max * math.log1p(lam * lam) + 2.0 * max_mode * a) / (2.0 * math.pi)
    na = 96 + int(math.ceil(3.5 * cycles_a))
    xa, wa = roots_legendre(na)
    pa = 0.5 * a * (xa + 1.0)
    qa = 0.5 * a * wa
    # shoulder [a, pi/4], logarithmic variable
    ua, ub = math.log(a), math.log(0.25 * math.pi)
    cycles_b = (0.5 * math.pi * max_mode + 2.0 * r_max * (ub - ua)) / (2.0 * math.pi)
    nb = 96 + int(math.ceil(3.5 * cycles_b))
    xb, wb = roots_legendre(nb)
    u = 0.5 * (ub - ua) * (xb + 1.0) + ua
    pb = np.exp(u)
    qb = 0.5 * (ub - ua) * wb * pb
    # smooth center [pi/4, 3 pi/4]
    cycles_c = 0.25 * (2.0 * max_mode + 2.0 * r_max)
    nc = 96 + int(math.ceil(3.5 * cycles_c))
    xc, wc = roots_legendre(nc)
    pc = 0.25 * math.pi * (xc + 2.0)
    qc = 0.25 * math.pi * wc
    edge = np.concatenate([pa, pb])
    edge_w = np.concatenate([qa, qb])
    phi = np.concatenate([edge, pc, math.pi - edge])
    weight = np.concatenate([edge_w, qc, edge_w])
    return phi, weight


def radial_kernel_modes(r_nodes, t_values, max_mode: int) -> np.ndarray:
    """Angular modes of the plane-wave kernel, shape (len(t), len(r), 2*max_mode+1).

    Entry [i, j, max_mode + m] is the m-th boundary mode of
    exp(-(1/2 - i r_j) H(a_{-t_i} k_phi)) as a function of phi; mode 0 is
    the conjugate of the spherical function.
    """
    r_nodes = np.asarray(r_nodes, dtype=float)
    t_values = np.asarray(t_values, dtype=float)
    r_max = float(np.abs(r_nodes).max()) if r_nodes.size else 0.0
    modes = np.arange(-max_mode, max_mode + 1)
    out = np.empty((len(t_values), len(r_nodes), len(modes)), dtype=complex)
    for i, t in enumerate(t_values):
        phi, weight = _kernel_nodes(float(t), r_max, max_mode)
        # squared first-column norm of a_{-t} k_phi, spike-stable form
        log_base = np.log(math.exp(-t) + 2.0 * math.sinh(t) * np.sin(phi) ** 2)
        sampled = np.exp(np.outer(-(0.5 - 1j * r_nodes), log_base)) * weight
        out[i] = (sampled @ np.exp(-2j * np.outer(phi, modes))) / math.pi
    return out


def spherical_function(r, t: float):
    """Radial spherical function at frequency r and distance t >= 0.

    Real-valued and even in r; vectorized over r.
    """
    if t < 0:
        raise ConfigError("radial distance must be nonnegative")
    if t == 0.0:
        # the kernel height vanishes on rotations, so the value is the
        # quadrature weight total; return the exact normalization instead
        return np.ones_like(np.asarray(r, dtype=float)) if np.ndim(r) else 1.0
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    values = radial_kernel_modes(r_arr, np.array([t]), 0)[0, :, 0].conj()
    if np.abs(values.imag).max() > 1e-10:
        raise NumericalError("spherical function came out complex")
    out = values.real
    return out if np.ndim(r) else float(out[0])


@dataclass(frozen=True)
class PlancherelGrid:
    """Frequency quadrature carrying the full inversion weight."""

    r_nodes: np.ndarray
    r_weights: np.ndarray  # Gauss weight * |c|^{-2} * global constant
    r_max: float

    def __post_init__(self):
        self.r_nodes.setflags(write=False)
        self.r_weights.setflags(write=False)
        if (self.r_weights < 0).any():
            raise NumericalError("negative Plancherel weight")

    @staticmethod
    def density(r):
        """Plancherel density; vanishes at r = 0."""
        return PLANCHEREL_CONSTANT * c_inverse_sq(r)

    def __len__(self):
        return len(self.r_nodes)


def plancherel_grid(r_max: float, nodes: int) -> PlancherelGrid:
    if r_max <= 0:
        raise ConfigError("r_max must be positive")
    if nodes < 64:
        raise ConfigError("need at least 64 frequency nodes")
    x, w = roots_legendre(nodes)
    r = 0.5 * r_max * (x + 1.0)
    weights = 0.5 * r_max * w * PlancherelGrid.density(r)
    return PlancherelGrid(r, weights, float(r_max))


def radial_quadrature(t_max: float, count: int = 64):
    x, w = roots_legendre(count)
    return 0.5 * t_max * (x + 1.0), 0.5 * t_max * w


def _transform_t_nodes(r_max: float, t_extent: float) -> int:
    # the transform integrand oscillates like e^{i r t}; resolve the
    # r_max * t_extent phase range with margin
    return max(64, 48 + int(math.ceil(0.35 * r_max * t_extent)))


def polar_matrices(theta, t) -> np.ndarray:
    """Stack of k_theta a_t matrices; theta and t broadcast together."""
    theta, t = np.broadcast_arrays(np.asarray(theta, float), np.asarray(t, float))
    ep = np.exp(0.5 * t)
    em = np.exp(-0.5 * t)
    co, si = np.cos(theta), np.sin(theta)
    out = np.empty(theta.shape + (2, 2))
    out[..., 0, 0] = co * ep
    out[..., 0, 1] = -si * em
    out[..., 1, 0] = si * ep
    out[..., 1, 1] = co * em
    return out


def polar_coordinates(mats) -> tuple[np.ndarray, np.ndarray]:
    """Left angle and radial part for a stack of matrices.

    Inverts polar_matrices up to the right rotation factor: the angle is
    the major-axis direction of g g^T, defined mod pi; the radial part is
    the usual norm.  At t = 0 the angle degenerates to 0.
    """
    mats = np.asarray(mats, dtype=float)
    flat = mats.reshape(-1, 2, 2)
    t = norms_of(flat)
    gram = flat @ np.swapaxes(flat, -1, -2)
    theta = 0.5 * np.arctan2(2.0 * gram[:, 0, 1], gram[:, 0, 0] - gram[:, 1, 1])
    shape = mats.shape[:-2]
    return theta.reshape(shape) % math.pi, t.reshape(shape)


@dataclass(frozen=True)
class TestFunctionX:
    """Test function on the hyperbolic plane.

    Either a Gaussian bump in the point-pair distance (radial when the
    center is the origin) or a band-limited synthesis from stored
    transform coefficients, which vanish beyond the band limit by
    construction.
    """

    __test__ = False  # dataclass, not a test case, despite the name

    kind: str
    center: GroupElement | None = None
    width: float = 0.5
    coeffs: np.ndarray | None = None
    band_limit: float | None = None
    grid: PlancherelGrid | None = None
    trunc: FourierTruncation | None = None
    radial_budget: float | None = None  # override for the t_extent default

    def __post_init__(self):
        if self.kind == GAUSSIAN:
            if self.width <= 0:
                raise ConfigError("bump width must be positive")
        elif self.kind == BANDLIMITED:
            if self.coeffs is None or self.grid is None or self.trunc is None:
                raise ConfigError("band-limited function needs coeffs, grid, trunc")
            self.coeffs.setflags(write=False)
        else:
            raise ConfigError(f"unknown test function kind {self.kind!r}")

    @property
    def is_radial(self) -> bool:
        return self.kind == GAUSSIAN and self.center is None

    @property
    def center_distance(self) -> float:
        if self.kind != GAUSSIAN or self.center is None:
            return 0.0
        return norm(self.center)

    @property
    def t_extent(self) -> float:
        """Radial truncation radius: beyond it the function is negligible."""
        if self.radial_budget is not None:
            return self.radial_budget
        if self.kind == GAUSSIAN:
            return self.center_distance + SUPPORT_WIDTHS * self.width
        return 14.0  # band-limited synthesis decays slowly; fixed budget

    def evaluate_polar(self, theta, t) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        t = np.asarray(t, dtype=float)
        if self.kind == GAUSSIAN:
            mats = polar_matrices(theta, t)
            if self.center is not None:
                inv = self.center.inverse().mat
                mats = inv @ mats
            shape = mats.shape[:-2]
            dist = norms_of(mats.reshape(-1, 2, 2)).reshape(shape)
            return np.exp(-(dist**2) / (2.0 * self.width**2))
        packed = HelgasonCoefficients(self.coeffs, self.trunc, self.grid, l1=None)
        return inverse_transform(packed, self.grid, theta, t)

    def radial_profile(self, t) -> np.ndarray:
        if not self.is_radial:
            raise ConfigError("radial profile of a non-radial function")
        t = np.asarray(t, dtype=float)
        return np.exp(-(t**2) / (2.0 * self.width**2))

    def evaluate_elements(self, mats, chunk: int = 512) -> np.ndarray:
        """Values f(g.o) for a stack of group matrices.

        Gaussian bumps use the point-pair distance directly; band-limited
        functions go through polar coordinates and the synthesis kernel,
        chunked so the per-radius kernel block stays small.
        """
        mats = np.asarray(mats, dtype=float)
        shape = mats.shape[:-2]
        flat = mats.reshape(-1, 2, 2)
        if self.kind == GAUSSIAN:
            if self.center is not None:
                flat = self.center.inverse().mat @ flat
            dist = norms_of(flat)
            return np.exp(-(dist**2) / (2.0 * self.width**2)).reshape(shape)
        theta, t = polar_coordinates(flat)
        out = np.empty(len(flat))
        for lo in range(0, len(flat), chunk):
            sl = slice(lo, lo + chunk)
            out[sl] = self.evaluate_polar(theta[sl], t[sl])
        return out.reshape(shape)

    def to_table(self) -> dict:
        if self.kind == GAUSSIAN:
            table = {"kind": GAUSSIAN, "width": self.width}
            if self.center is not None:
                table["center"] = self.center.mat.tolist()
            return table
        return {
            "kind": BANDLIMITED,
            "band_limit": self.band_limit,
            "coeffs_real": self.coeffs.real.tolist(),
            "coeffs_imag": self.coeffs.imag.tolist(),
        }


def gaussian_bump(width: float = 0.5, center: GroupElement | None = None) -> TestFunctionX:
    return TestFunctionX(GAUSSIAN, center=center, width=width)


def spherical_transform(
    f: TestFunctionX, grid: PlancherelGrid, t_nodes: int | None = None
) -> np.ndarray:
    """Scalar transform of a radial function: real, even in r."""
    if not f.is_radial:
        raise ConfigError("scalar transform needs a radial function")
    if t_nodes is None:
        t_nodes = _transform_t_nodes(grid.r_max, f.t_extent)
    t, w = radial_quadrature(f.t_extent, t_nodes)
    profile = f.radial_profile(t)
    kernel = radial_kernel_modes(grid.r_nodes, t, 0)[:, :, 0]
    values = 2.0 * math.pi * (w * profile * np.sinh(t)) @ kernel.conj()
    if np.abs(values.imag).max() > 1e-10:
        raise NumericalError("radial transform came out complex")
    tail = abs(float(f.radial_profile(np.array([f.t_extent]))[0])) * math.sinh(f.t_extent)
    if tail > 1e-4 * max(np.abs(values.real).max(), 1e-300):
        raise NumericalError(
            f"radial profile not negligible at the quadrature edge (tail {tail:.3e})"
        )
    return values.real


@dataclass(frozen=True)
class HelgasonCoefficients:
    """Transform values indexed by (frequency node, boundary mode)."""

    values: np.ndarray  # shape (len(grid), trunc.dim)
    trunc: FourierTruncation
    grid: PlancherelGrid
    l1: float | None  # L1 norm of the source function, when it was computed

    def __post_init__(self):
        self.values.setflags(write=False)
        if self.values.shape != (len(self.grid), self.trunc.dim):
            raise ConfigError("coefficient block does not match grid and truncation")

    def node_norms(self) -> np.ndarray:
        """L2(boundary) norm of the coefficient row at each frequency node."""
        return np.sqrt((np.abs(self.values) ** 2).sum(axis=1))


def transform_at_frequencies(
    f: TestFunctionX,
    r_values,
    trunc: FourierTruncation,
    t_nodes: int | None = None,
    theta_nodes: int | None = None,
) -> np.ndarray:
    """Transform rows at arbitrary frequency values, shape (len(r), dim).

    Grid-free core of the full transform; the radial rule is sized by the
    largest requested frequency when not given explicitly.
    """
    if trunc.space != BOUNDARY:
        raise ConfigError("transform coefficients live on boundary modes")
    r_values = np.atleast_1d(np.asarray(r_values, dtype=float))
    P = theta_nodes or 8 * trunc.N
    theta = np.arange(P) * (math.pi / P)
    if t_nodes is None:
        t_nodes = _transform_t_nodes(float(np.abs(r_values).max()), f.t_extent)
    t, w = radial_quadrature(f.t_extent, t_nodes)
    samples = f.evaluate_polar(theta[:, None], t[None, :])  # (P, T)
    mode_profiles = np.fft.fft(samples, axis=0) / P  # bin m holds mode m
    kernel = radial_kernel_modes(r_values, t, trunc.N)  # (T, R, modes)
    radial_weight = w * np.sinh(t)
    values = np.empty((len(r_values), trunc.dim), dtype=complex)
    for k, m in enumerate(trunc.mode_indices):
        profile_m = mode_profiles[m % P, :]
        values[:, k] = 2.0 * math.pi * (radial_weight * profile_m) @ kernel[:, :, k]
    return values


def helgason_transform(
    f: TestFunctionX,
    grid: PlancherelGrid,
    trunc: FourierTruncation,
    t_nodes: int | None = None,
    theta_nodes: int | None = None,
) -> HelgasonCoefficients:
    """Full transform by polar quadrature and one angular FFT.

    The right rotation factor integrates out, so the quadrature runs over
    the half-turn of left angles and the radial part.  Enforces the
    L1-domination invariant at every frequency node.
    """
    P = theta_nodes or 8 * trunc.N
    if t_nodes is None:
        t_nodes = _transform_t_nodes(grid.r_max, f.t_extent)
    values = transform_at_frequencies(f, grid.r_nodes, trunc, t_nodes, P)
    l1 = l1_norm(f, t_nodes=t_nodes, theta_nodes=P)
    node_norms = np.sqrt((np.abs(values) ** 2).sum(axis=1))
    worst = float((node_norms - l1).max())
    if worst > 1e-6 * max(l1, 1e-300):
        raise NumericalError(
            f"transform row norm exceeds the L1 norm by {worst:.3e}; "
            "quadrature resolution is insufficient for this function"
        )
    return HelgasonCoefficients(values, trunc, grid, l1)


def inverse_transform(coeffs: HelgasonCoefficients, grid: PlancherelGrid, theta, t) -> np.ndarray:
    """Synthesize point values from transform coefficients.

    theta and t broadcast to the evaluation points; the half-line
    frequency sum is completed by conjugate symmetry, so the output is
    real.
    """
    theta, t = np.broadcast_arrays(np.asarray(theta, float), np.asarray(t, float))
    shape = theta.shape
    flat_theta = theta.ravel()
    flat_t = t.ravel()
    unique_t, inverse_idx = np.unique(flat_t, return_inverse=True)
    trunc = coeffs.trunc
    kernel = radial_kernel_modes(grid.r_nodes, unique_t, trunc.N)
    # frequency sum with full weights at each radius: (T, M)
    per_t = np.einsum("r,rm,trm->tm", grid.r_weights, coeffs.values, kernel.conj())
    phases = np.exp(2j * np.outer(flat_theta, trunc.mode_indices))
    values = (phases * per_t[inverse_idx]).sum(axis=1)
    return values.real.reshape(shape)


def l1_norm(f: TestFunctionX, t_nodes: int = 64, theta_nodes: int = 128) -> float:
    t, w = radial_quadrature(f.t_extent, t_nodes)
    theta = np.arange(theta_nodes) * (math.pi / theta_nodes)
    samples = np.abs(f.evaluate_polar(theta[:, None], t[None, :]))
    return float(2.0 * math.pi / theta_nodes * (samples * np.sinh(t)).sum(axis=0) @ w)


def star_norm(f: TestFunctionX, t_nodes: int = 64, theta_nodes: int = 128) -> float:
    """L1 norm weighted by one plus the squared distance to the origin."""
    t, w = radial_quadrature(f.t_extent, t_nodes)
    theta = np.arange(theta_nodes) * (math.pi / theta_nodes)
    samples = np.abs(f.evaluate_polar(theta[:, None], t[None, :]))
    radial = (samples * ((1.0 + t**2) * np.sinh(t))).sum(axis=0)
    return float(2.0 * math.pi / theta_nodes * radial @ w)


@dataclass(frozen=True)
class NormReport:
    l1: float
    star: float
    sobolev: float
    sobolev_order: float


def f_coefficients(
    f: TestFunctionX, grid: PlancherelGrid, trunc: FourierTruncation
) -> HelgasonCoefficients:
    """Transform coefficients, reusing stored ones for band-limited functions."""
    if f.kind == BANDLIMITED and f.grid is grid and f.trunc == trunc:
        return HelgasonCoefficients(f.coeffs, trunc, grid, l1=l1_norm(f))
    return helgason_transform(f, grid, trunc)


def norms(f: TestFunctionX, s: float, grid: PlancherelGrid, trunc: FourierTruncation) -> NormReport:
    coeffs = f_coefficients(f, grid, trunc)
    weighted = (1.0 + grid.r_nodes**2) ** s * coeffs.node_norms() ** 2
    sobolev = math.sqrt(float(grid.r_weights @ weighted))
    return NormReport(
        l1=coeffs.l1 if coeffs.l1 is not None else l1_norm(f),
        star=star_norm(f),
        sobolev=sobolev,
        sobolev_order=s,
    )


def bandlimited_bump(
    R: float,
    mode_profile: dict,
    grid: PlancherelGrid,
    trunc: FourierTruncation,
    radial_budget: float = 18.0,
) -> TestFunctionX:
    """Synthesize a real function whose transform vanishes beyond frequency R.

    mode_profile maps boundary mode index to a complex amplitude; each
    mode carries the same smooth compactly supported frequency profile,
    an exponential bump cut exactly at R.  The real part of the wave
    packet has a different transform than the seed (conjugation mixes in
    the intertwined image at each frequency, populating the mirror
    modes), so the stored coefficients are the measured transform of the
    synthesized function; the band support survives the mixing because it
    acts frequency by frequency.
    """
    if R <= 0:
        raise ConfigError("band limit must be positive")
    if R > grid.r_max:
        raise ConfigError("band limit exceeds the frequency grid")
    if not mode_profile:
        raise ConfigError("need at least one mode amplitude")
    x = grid.r_nodes / R
    profile = np.where(x < 1.0, np.exp(1.0 - 1.0 / np.maximum(1.0 - x**2, 1e-300)), 0.0)
    seed = np.zeros((len(grid), trunc.dim), dtype=complex)
    for m, amp in mode_profile.items():
        if abs(m) > trunc.N:
            raise ConfigError(f"mode {m} outside the truncation")
        seed[:, trunc.N + m] = amp * profile
    packet = TestFunctionX(
        BANDLIMITED,
        coeffs=seed,
        band_limit=float(R),
        grid=grid,
        trunc=trunc,
        radial_budget=radial_budget,
    )
    measured = helgason_transform(packet, grid, trunc)
    return TestFunctionX(
        BANDLIMITED,
        coeffs=measured.values,
        band_limit=float(R),
        grid=grid,
        trunc=trunc,
        radial_budget=radial_budget,
    )
