"""Galerkin discretization of the boundary transfer operators.

Two function spaces, both spanned by complex exponentials:

  * boundary space: e_m(theta) = exp(2 i m theta) for |m| <= N, orthonormal
    with respect to d(theta)/pi on [0, pi).  Functions on the boundary
    circle are exactly the even-mode functions on the rotation group, so
    parity alone separates the two spaces.
  * circle space: exp(i m theta) for |m| <= 2N, orthonormal with respect
    to d(theta)/(2 pi) on [0, 2 pi).

Matrix entries come from the uniform periodic quadrature rule, which
converges geometrically for these analytic integrands.  Three operator
kinds are assembled from one core routine:

  * representation: a single group element acting with the density kernel
    exp(-(1/2 + i r) H); unitary for real r in the infinite-dimensional
    limit.
  * transfer: the measure average of representation matrices.
  * markov: the measure average of plain compositions with the boundary
    action (no density kernel); fixes constants exactly.

Finite truncation cannot be unitary on the whole matrix: composition with
the boundary action spreads mode m across roughly [m exp(-kappa),
m exp(kappa)], so the top columns always lose mass to modes beyond N.
resolved_band gives the block on which orthonormality does hold to
quadrature accuracy; tests and callers should window with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import (
    ConfigError,
    ContinuationError,
    DegenerateSpectrumError,
    NumericalError,
)
from .group import GroupElement, cocycle_action_grid, norm
from .measures import AtomicMeasure

BOUNDARY = "boundary"
CIRCLE = "circle"

KIND_REPRESENTATION = "representation"
KIND_TRANSFER = "transfer"
KIND_MARKOV = "markov"

RESIDUAL_TOLERANCE = 1e-8
SIMPLICITY_TOLERANCE = 1e-8


@dataclass(frozen=True)
class FourierTruncation:
    """Mode cutoff N and quadrature node count Q (on [0, pi))."""

    N: int
    Q: int
    space: str = BOUNDARY

    def __post_init__(self):
        if self.space not in (BOUNDARY, CIRCLE):
            raise ConfigError(f"unknown space {self.space!r}")
        if self.N < 2:
            raise ConfigError("need at least modes |m| <= 2")
        if self.Q < 8 * self.N:
            raise ConfigError(
                f"aliasing guard: Q = {self.Q} must be at least 8 N = {8 * self.N}"
            )

    @cached_property
    def mode_indices(self) -> np.ndarray:
        half = self.N if self.space == BOUNDARY else 2 * self.N
        return np.arange(-half, half + 1)

    @cached_property
    def frequencies(self) -> np.ndarray:
        # angular frequency of each basis exponential
        step = 2 if self.space == BOUNDARY else 1
        return step * self.mode_indices

    @property
    def dim(self) -> int:
        return len(self.mode_indices)

    @cached_property
    def nodes(self) -> np.ndarray:
        count = self.Q if self.space == BOUNDARY else 2 * self.Q
        return np.arange(count) * (math.pi / self.Q)

    @property
    def node_weight(self) -> float:
        # quadrature weight for the normalized measure on the space
        return 1.0 / self.Q if self.space == BOUNDARY else 0.5 / self.Q

    def doubled(self) -> "FourierTruncation":
        return FourierTruncation(2 * self.N, 2 * self.Q, self.space)


@dataclass(frozen=True)
class BoundaryOperatorMatrix:
    entries: np.ndarray
    r: float
    trunc: FourierTruncation
    kind: str

    def __post_init__(self):
        if self.entries.shape != (self.trunc.dim, self.trunc.dim):
            raise ConfigError("entry block does not match truncation")
        self.entries.setflags(write=False)

    def apply(self, phi: np.ndarray) -> np.ndarray:
        return self.entries @ phi

    def operator_norm(self) -> float:
        return float(scipy.linalg.svdvals(self.entries)[0])

    def spectral_radius(self) -> float:
        return float(np.abs(scipy.linalg.eigvals(self.entries)).max())


def _composition_matrix(
    u: GroupElement, r: float, trunc: FourierTruncation, density: bool
) -> np.ndarray:
    """Matrix of phi -> kernel(theta) * phi(angle of u k_theta).

    With density=True the kernel is exp(-(1/2 + i r) H(u k_theta)); without
    it the kernel is 1 and the matrix is a plain composition operator.
    """
    theta = trunc.nodes
    height, angle = cocycle_action_grid(u, theta)
    freq = trunc.frequencies
    if density:
        kernel = np.exp(-(0.5 + 1j * r) * height)
    else:
        kernel = np.ones_like(height)
    rows = np.exp(-1j * np.outer(freq, theta)) * (kernel * trunc.node_weight)
    cols = np.exp(1j * np.outer(angle, freq))
    return rows @ cols


def assemble_rho(g: GroupElement, r: float, trunc: FourierTruncation) -> BoundaryOperatorMatrix:
    """Principal-series matrix of a single group element."""
    entries = _composition_matrix(g.inverse(), r, trunc, density=True)
    return BoundaryOperatorMatrix(entries, float(r), trunc, KIND_REPRESENTATION)


def assemble_transfer(
    mu: AtomicMeasure,
    r: float,
    trunc: FourierTruncation,
    kind: str = KIND_TRANSFER,
) -> BoundaryOperatorMatrix:
    """Measure average of per-atom matrices, in atom-index order.

    kind "transfer" averages density-weighted representation matrices;
    kind "markov" averages plain compositions with the boundary action of
    each atom (forward, not inverted) and requires r = 0.
    """
    if kind not in (KIND_TRANSFER, KIND_MARKOV):
        raise ConfigError(f"unknown transfer kind {kind!r}")
    if kind == KIND_MARKOV and r != 0.0:
        raise ConfigError("markov operator carries no frequency; r must be 0")
    total = np.zeros((trunc.dim, trunc.dim), dtype=complex)
    for g, w in mu.atoms:
        if kind == KIND_TRANSFER:
            total += w * _composition_matrix(g.inverse(), r, trunc, density=True)
        else:
            total += w * _composition_matrix(g, r, trunc, density=False)
    return BoundaryOperatorMatrix(total, float(r), trunc, kind)


def resolved_band(trunc: FourierTruncation, kappa: float) -> int:
    """Largest mode index the truncation represents faithfully after an
    element of radial size kappa acts.

    The boundary action stretches frequencies by up to exp(kappa), so
    orthonormality of representation columns only holds on a band that
    shrinks accordingly; the factor 4 keeps the geometric quadrature tail
    below 1e-8 for kappa <= 2 at N = 64.
    """
    return max(0, int(math.floor(trunc.N * math.exp(-kappa) / 4.0)))


def unitarity_defect(matrix: BoundaryOperatorMatrix, band: int) -> float:
    """Spectral norm of (U*U - I) restricted to modes |m| <= band."""
    gram = matrix.entries.conj().T @ matrix.entries - np.eye(matrix.trunc.dim)
    sel = np.abs(matrix.trunc.mode_indices) <= band
    return float(np.linalg.norm(gram[np.ix_(sel, sel)], 2))


def synthesize(trunc: FourierTruncation, coeffs: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Evaluate a coefficient vector as a function of the angle."""
    return np.exp(1j * np.outer(angles, trunc.frequencies)) @ coeffs


def mode_block(trunc: FourierTruncation, level: int) -> np.ndarray:
    """Boolean mask of the dyadic block 2^(level-1) <= |m| < 2^level."""
    if level < 1:
        raise ConfigError("level must be at least 1")
    m = np.abs(trunc.mode_indices)
    return (m >= 2 ** (level - 1)) & (m < 2**level)


@dataclass(frozen=True)
class SpectralSummary:
    """Top eigenpair data of a transfer matrix at frequency zero."""

    sigma: float  # top eigenvalue modulus
    top: complex  # the eigenvalue itself (real positive at r = 0)
    gap: float  # sigma minus the second modulus
    ess_proxy: float  # second eigenvalue modulus; finite-truncation surrogate
    ess_proxy_stable: bool | None  # None when no doubled matrix was supplied
    eta: np.ndarray  # unit right eigenvector, grid-positive phase
    eta_prime: np.ndarray  # adjoint eigenvector, paired to <eta', eta> = 1
    residual: float
    residual_adjoint: float
    trunc: FourierTruncation

    def __post_init__(self):
        self.eta.setflags(write=False)
        self.eta_prime.setflags(write=False)


def _top_two(values: np.ndarray):
    order = np.argsort(-np.abs(values))
    return order[0], order[1]


def _positive_phase(trunc: FourierTruncation, vec: np.ndarray) -> np.ndarray:
    """Rotate a global phase so grid values are real positive; error if the
    synthesized function is not one-signed."""
    values = synthesize(trunc, vec, trunc.nodes)
    mean = values.mean()
    if abs(mean) < 1e-12:
        raise NumericalError("eigenvector has no dominant phase")
    rotated = vec * (abs(mean) / mean)
    values = synthesize(trunc, rotated, trunc.nodes)
    if np.abs(values.imag).max() > 1e-6 or values.real.min() <= 0.0:
        raise NumericalError(
            "top eigenvector is not positive on the grid "
            f"(min real {values.real.min():.3e}, max imag {np.abs(values.imag).max():.3e})"
        )
    return rotated


def spectral_summary(
    S: BoundaryOperatorMatrix, doubled: BoundaryOperatorMatrix | None = None
) -> SpectralSummary:
    """Full dense eigendecomposition with the positivity and residual
    checks of the frequency-zero theory enforced.

    doubled, when given, must be the same operator assembled at twice the
    truncation; it only feeds the stability flag on the second-eigenvalue
    proxy.
    """
    if S.kind not in (KIND_TRANSFER, KIND_MARKOV):
        raise ConfigError("spectral summary expects a transfer or markov matrix")
    if S.r != 0.0:
        raise ConfigError("spectral summary is the frequency-zero entry point")
    values, left, right = scipy.linalg.eig(S.entries, left=True, right=True)
    i0, i1 = _top_two(values)
    sigma = float(abs(values[i0]))
    second = float(abs(values[i1]))
    if sigma - second <= SIMPLICITY_TOLERANCE:
        raise DegenerateSpectrumError(
            f"top eigenvalue modulus {sigma:.12f} not simple: next is {second:.12f}"
        )
    top = complex(values[i0])
    if abs(top.imag) > 1e-10 * sigma or top.real <= 0.0:
        raise NumericalError(f"top eigenvalue {top} is not real positive")
    top = complex(top.real, 0.0)
    eta = right[:, i0] / np.linalg.norm(right[:, i0])
    eta = _positive_phase(S.trunc, eta)
    raw_left = left[:, i0]
    pairing = np.vdot(eta, raw_left)
    if abs(pairing) < 1e-12:
        raise NumericalError("left and right top eigenvectors fail to pair")
    eta_prime = raw_left / pairing
    eta_prime = eta_prime / np.vdot(eta, eta_prime).real
    residual = float(np.linalg.norm(S.entries @ eta - top * eta))
    residual_adj = float(
        np.linalg.norm(S.entries.conj().T @ eta_prime - np.conj(top) * eta_prime)
    )
    if max(residual, residual_adj) > RESIDUAL_TOLERANCE:
        raise NumericalError(
            f"eigenpair residuals {residual:.3e}/{residual_adj:.3e} exceed tolerance"
        )
    # adjoint eigenvector positivity, same phase treatment
    eta_prime = _positive_phase(S.trunc, eta_prime)
    eta_prime = eta_prime / np.vdot(eta, eta_prime)
    stable = None
    if doubled is not None:
        dvals = scipy.linalg.eigvals(doubled.entries)
        j0, j1 = _top_two(dvals)
        stable = bool(abs(abs(dvals[j1]) - second) < 1e-4)
    return SpectralSummary(
        sigma=sigma,
        top=top,
        gap=sigma - second,
        ess_proxy=second,
        ess_proxy_stable=stable,
        eta=eta,
        eta_prime=eta_prime,
        residual=residual,
        residual_adjoint=residual_adj,
        trunc=S.trunc,
    )


def rank_one_project(summary: SpectralSummary, phi: np.ndarray) -> np.ndarray:
    """Spectral projector onto the top eigenvector: <phi, eta'> eta."""
    return np.vdot(summary.eta_prime, phi) * summary.eta


@dataclass(frozen=True)
class CurvePoint:
    r: float
    value: complex  # tracked top branch
    gap: float  # branch modulus minus best other modulus
    spectral_radius: float
    op_norm: float


@dataclass(frozen=True)
class TopEigenvalueCurve:
    points: tuple
    base: SpectralSummary
    sup_high_frequency_radius: float | None  # over grid points with |r| >= 1
    sup_high_frequency_norm: float | None

    def point_at(self, r: float) -> CurvePoint:
        for p in self.points:
            if abs(p.r - r) < 1e-12:
                return p
        raise ConfigError(f"curve has no point at r = {r}")


def _continue_branch(entries: np.ndarray, prev_vec: np.ndarray, r: float):
    values, right = scipy.linalg.eig(entries, right=True)
    overlaps = np.abs(prev_vec.conj() @ right) / np.linalg.norm(right, axis=0)
    pick = int(np.argmax(overlaps))
    close = np.abs(values - values[pick]) <= SIMPLICITY_TOLERANCE
    if close.sum() > 1:
        raise ContinuationError(
            r, f"two eigenvalues within {SIMPLICITY_TOLERANCE} at r = {r}"
        )
    others = np.abs(values[np.arange(len(values)) != pick])
    gap = float(abs(values[pick]) - others.max())
    radius = float(np.abs(values).max())
    vec = right[:, pick] / np.linalg.norm(right[:, pick])
    return complex(values[pick]), gap, radius, vec


def lambda_curve(
    mu: AtomicMeasure, r_grid, trunc: FourierTruncation
) -> TopEigenvalueCurve:
    """Continue the top eigenvalue branch from frequency zero across a grid.

    The grid must contain 0; continuation runs outward in both directions,
    picking at each step the eigenpair of maximal eigenvector overlap with
    the previous one.  Raises on branch ambiguity, on a step so large the
    branch moved more than half the previous gap, and on any point where
    the branch modulus reaches the frequency-zero value.
    """
    grid = np.asarray(sorted(float(r) for r in r_grid))
    zero_hits = np.flatnonzero(np.abs(grid) < 1e-15)
    if len(zero_hits) != 1:
        raise ConfigError("frequency grid must contain 0 exactly once")
    S0 = assemble_transfer(mu, 0.0, trunc)
    base = spectral_summary(S0)
    results = {}
    results[0.0] = CurvePoint(
        0.0, base.top, base.gap, S0.spectral_radius(), S0.operator_norm()
    )
    zero_index = int(zero_hits[0])
    for direction in (1, -1):
        prev_vec = base.eta
        prev_value = base.top
        prev_gap = base.gap
        idx = zero_index + direction
        while 0 <= idx < len(grid):
            r = float(grid[idx])
            S = assemble_transfer(mu, r, trunc)
            value, gap, radius, vec = _continue_branch(S.entries, prev_vec, r)
            if abs(value - prev_value) > 0.5 * prev_gap:
                raise ContinuationError(
                    r,
                    f"branch moved {abs(value - prev_value):.3e} at r = {r}, more "
                    f"than half the previous gap {prev_gap:.3e}; refine the grid",
                )
            if abs(value) >= base.sigma:
                raise NumericalError(
                    f"top branch modulus {abs(value):.12f} at r = {r} is not below "
                    f"the frequency-zero value {base.sigma:.12f}"
                )
            results[r] = CurvePoint(r, value, gap, radius, S.operator_norm())
            prev_vec, prev_value, prev_gap = vec, value, gap
            idx += direction
    points = tuple(results[r] for r in sorted(results))
    high = [p for p in points if abs(p.r) >= 1.0]
    sup_radius = max((p.spectral_radius for p in high), default=None)
    sup_norm = max((p.op_norm for p in high), default=None)
    return TopEigenvalueCurve(points, base, sup_radius, sup_norm)


@dataclass(frozen=True)
class QuadraticBehavior:
    curvature: float  # minus half the second derivative of Re(branch) at 0
    inverse_top: float  # reciprocal of the frequency-zero eigenvalue


def hessian_at_zero(curve: TopEigenvalueCurve, h: float = 0.01) -> QuadraticBehavior:
    """Five-point stencil for the branch curvature at frequency zero."""
    if h > 0.01:
        raise ConfigError("stencil spacing must be at most 0.01")
    f = {}
    for k in (-2, -1, 0, 1, 2):
        f[k] = curve.point_at(k * h).value.real
    second = (-f[2] + 16 * f[1] - 30 * f[0] + 16 * f[-1] - f[-2]) / (12.0 * h * h)
    curvature = -0.5 * second
    if curvature <= 0.0:
        raise NumericalError(
            f"branch curvature {curvature:.3e} is not positive; the quadratic "
            "behaviour at frequency zero failed at this truncation"
        )
    return QuadraticBehavior(curvature, 1.0 / curve.base.top.real)


def select_delta0(curve: TopEigenvalueCurve) -> float:
    """Largest radius where the whole branch out from 0 keeps at least half
    the frequency-zero gap."""
    half = 0.5 * curve.base.gap
    radii = sorted({abs(p.r) for p in curve.points})
    best = 0.0
    for rho in radii:
        inside = [p for p in curve.points if abs(p.r) <= rho + 1e-15]
        if all(p.gap >= half for p in inside):
            best = rho
        else:
            break
    if best == 0.0:
        raise NumericalError("no positive radius keeps half the spectral gap")
    return best


def high_mode_norm(S: BoundaryOperatorMatrix, L: int) -> float:
    """Norm of S restricted in its domain to modes |m| >= 2^(L-1)."""
    if 2**L >= S.trunc.N:
        raise ConfigError("dyadic level exceeds the truncation")
    sel = np.abs(S.trunc.mode_indices) >= 2 ** (L - 1)
    return float(scipy.linalg.svdvals(S.entries[:, sel])[0])
