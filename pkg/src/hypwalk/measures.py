"""Finitely supported probability measures on SL(2,R).

Convolution powers, sampling, radial moments, and the two concentration
diagnostics used to probe how fast the walk spreads out: an L2 flattening
estimator at scale delta and a non-concentration report against a family
of candidate subgroups.

Distances between group elements in the diagnostics use the Frobenius
norm of the matrix difference.  This is not a left invariant metric; it
is bi-Lipschitz to one on compact sets, which is all the desk scale
diagnostics need, and it keeps the estimators cheap.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import AtomCapError, ConfigError
from .group import RENORM_CHAIN, GroupElement, norm, norms_of, renormalize_dets

WEIGHT_TOLERANCE = 1e-12

# merging of coincident atoms quantizes entries at this many decimals
MERGE_DECIMALS = 12

# exact convolution refuses beyond this many pairwise products
ATOM_CAP = 10**6


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class AtomicMeasure:
    """Probability measure with finitely many atoms (element, weight).

    pruned_mass records mass dropped by the most recent pruning convolution
    that produced this measure (0.0 for directly constructed measures).
    """

    atoms: tuple
    pruned_mass: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple((g, float(w)) for g, w in self.atoms))
        if not self.atoms:
            raise ConfigError("measure needs at least one atom")
        total = math.fsum(w for _, w in self.atoms)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise ConfigError(f"weights sum to {total!r}, expected 1")
        if any(w <= 0.0 for _, w in self.atoms):
            raise ConfigError("atom weights must be positive")

    def __len__(self):
        return len(self.atoms)

    @cached_property
    def mats(self) -> np.ndarray:
        return np.stack([g.mat for g, _ in self.atoms])

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    @cached_property
    def elements(self) -> tuple:
        return tuple(g for g, _ in self.atoms)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.mats.tobytes())
        h.update(self.weights.tobytes())
        return h.hexdigest()


def _merged(mats: np.ndarray, weights: np.ndarray, pruned_mass: float = 0.0) -> AtomicMeasure:
    """Merge exactly coincident atoms (entries quantized at MERGE_DECIMALS)."""
    keys = np.round(mats.reshape(len(mats), 4), MERGE_DECIMALS)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    w = np.bincount(inverse, weights=weights)
    reps = mats[first]
    atoms = [(GroupElement.from_matrix(reps[i]), w[i]) for i in range(len(w))]
    return AtomicMeasure(tuple(atoms), pruned_mass=pruned_mass)


def convolve(
    mu: AtomicMeasure,
    nu: AtomicMeasure,
    prune_threshold: float = 0.0,
    cap: int = ATOM_CAP,
) -> AtomicMeasure:
    """Convolution of two atomic measures: all pairwise products.

    Exactly coincident product atoms are merged; distinct but close atoms
    are never merged.  With prune_threshold > 0, merged atoms lighter than
    the threshold are dropped, the rest renormalized, and the dropped mass
    recorded on the result.  Exceeding cap pairwise products raises
    AtomCapError before any work is done.
    """
    total = len(mu) * len(nu)
    if total > cap:
        raise AtomCapError(
            f"convolution would enumerate {total} products, cap is {cap}; "
            "prune harder or switch to sampling"
        )
    mats = np.einsum("iab,jbc->ijac", mu.mats, nu.mats).reshape(total, 2, 2)
    weights = np.outer(mu.weights, nu.weights).reshape(total)
    keys = np.round(mats.reshape(total, 4), MERGE_DECIMALS)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    w = np.bincount(inverse, weights=weights)
    reps = mats[first]
    dropped = 0.0
    if prune_threshold > 0.0:
        keep = w >= prune_threshold
        dropped = float(w[~keep].sum())
        reps, w = reps[keep], w[keep]
        if len(w) == 0:
            raise ConfigError("pruning removed every atom")
        w = w / w.sum()
    atoms = [(GroupElement.from_matrix(reps[i]), w[i]) for i in range(len(w))]
    return AtomicMeasure(tuple(atoms), pruned_mass=dropped)


def convolution_power(
    mu: AtomicMeasure, n: int, prune_threshold: float = 0.0, cap: int = ATOM_CAP
) -> AtomicMeasure:
    """n-fold convolution power by binary exponentiation, cap-guarded."""
    if n < 0:
        raise ConfigError("power must be nonnegative")
    if n == 0:
        return AtomicMeasure(((GroupElement.identity(), 1.0),))
    result = None
    square = mu
    k = n
    while k:
        if k & 1:
            result = square if result is None else convolve(result, square, prune_threshold, cap)
        k >>= 1
        if k:
            square = convolve(square, square, prune_threshold, cap)
    return result


def symmetrize(mu: AtomicMeasure) -> AtomicMeasure:
    """Half the measure plus half its pushforward under g -> g^{-1}."""
    inv = np.stack([g.inverse().mat for g in mu.elements])
    mats = np.concatenate([mu.mats, inv])
    weights = np.concatenate([mu.weights, mu.weights]) * 0.5
    return _merged(mats, weights)


def sample_product(mu: AtomicMeasure, n: int, seed) -> GroupElement:
    """Product of n independent atoms drawn by weight; deterministic per seed."""
    if n < 0:
        raise ConfigError("n must be nonnegative")
    rng = _as_rng(seed)
    out = GroupElement.identity()
    if n == 0:
        return out
    idx = rng.choice(len(mu), size=n, p=mu.weights)
    for i in idx:
        # GroupElement construction renormalizes determinant drift, so long
        # chains self-heal every step beyond the 1e-12 tolerance
        out = out @ mu.elements[i]
    return out


def sample_products(mu: AtomicMeasure, n: int, count: int, seed) -> np.ndarray:
    """(count, 2, 2) array of independent n-step products.

    Vectorized version of sample_product for Monte Carlo; determinant
    renormalization is applied every RENORM_CHAIN steps.
    """
    rng = _as_rng(seed)
    out = np.broadcast_to(np.eye(2), (count, 2, 2)).copy()
    if n == 0:
        return out
    idx = rng.choice(len(mu), size=(count, n), p=mu.weights)
    for k in range(n):
        out = out @ mu.mats[idx[:, k]]
        if (k + 1) % RENORM_CHAIN == 0:
            renormalize_dets(out)
    return renormalize_dets(out)


def moment(mu: AtomicMeasure, k: int) -> float:
    """k-th radial moment: sum of w * norm(g)^k over atoms."""
    if k not in (1, 2, 3, 4):
        raise ConfigError("moment order must be 1..4")
    return float(np.dot(mu.weights, norms_of(mu.mats) ** k))


def support_radius(mu: AtomicMeasure) -> float:
    """Largest radial part over the support; the epsilon of a near-identity measure."""
    return float(norms_of(mu.mats).max())


def frobenius_ball_volume(delta: float) -> float:
    """Haar volume (polar normalization) of the set ||g - 1||_F < delta.

    In polar coordinates g = k1 a_t k2 the squared Frobenius distance to
    the identity is 4 c (c - cos(theta1 + theta2)) with c = cosh(t/2), so
    the angular measure at fixed t is explicit and one radial quadrature
    remains.
    """
    if delta <= 0.0:
        raise ConfigError("delta must be positive")
    if delta < 1e-4:
        # below this scale the quadrature integrand underflows (cosh rounds
        # to 1); the leading term is exact to relative O(delta^2) < 1e-8
        return (2.0 * math.sqrt(2.0) / 3.0) * delta**3
    # t range where the ball condition can hold, computed via log1p to
    # survive small delta
    u = delta * delta / (2.0 * (1.0 + math.sqrt(1.0 + delta * delta)))
    t_up = 2.0 * math.log1p(u + math.sqrt(2.0 * u + u * u))
    from scipy.special import roots_legendre

    x, w = roots_legendre(128)
    t = 0.5 * t_up * (x + 1.0)
    c = np.cosh(0.5 * t)
    q = np.clip(c - delta * delta / (4.0 * c), -1.0, 1.0)
    angular = 2.0 * np.arccos(q)
    return float(0.5 * t_up * np.dot(w, np.sinh(t) * angular))


@dataclass(frozen=True)
class FlatteningEstimate:
    """Collision estimate of the L2 norm of the delta-smoothed n-step law."""

    value: float
    stderr: float
    collisions: int
    samples: int
    n: int
    delta: float
    ball_volume: float
    is_upper_bound: bool = False  # set when zero collisions force a confidence bound


def flattening_l2(mu: AtomicMeasure, n: int, delta: float, samples: int, seed) -> FlatteningEstimate:
    """Estimate the L2 norm of the n-step law smoothed at scale delta.

    Independent pairs (g, h) of n-step products estimate the collision
    probability P[d(g, h) < delta]; the smoothed L2 norm is the square
    root of that probability divided by the ball volume.  With zero
    collisions the rule-of-three upper confidence bound is reported and
    flagged instead of a point estimate.
    """
    if samples < 10**4:
        raise ConfigError("need at least 1e4 sample pairs")
    rng = _as_rng(seed)
    left = sample_products(mu, n, samples, rng)
    right = sample_products(mu, n, samples, rng)
    dist = np.sqrt(((left - right) ** 2).sum(axis=(1, 2)))
    hits = int((dist < delta).sum())
    vol = frobenius_ball_volume(delta)
    if hits == 0:
        p_bound = 3.0 / samples
        return FlatteningEstimate(
            math.sqrt(p_bound / vol), float("nan"), 0, samples, n, delta, vol, True
        )
    p = hits / samples
    se_p = math.sqrt(p * (1.0 - p) / samples)
    value = math.sqrt(p / vol)
    stderr = se_p / (2.0 * math.sqrt(p * vol))
    return FlatteningEstimate(value, stderr, hits, samples, n, delta, vol)


@dataclass(frozen=True)
class DiophantineReport:
    """Concentration of the n-step law near candidate subgroup families.

    Masses are Monte Carlo estimates of mu^{*n}(B_delta(H)), maximized over
    a conjugation grid within each family; the verdict compares the overall
    maximum against the threshold delta^{c2/c1}.  The family list is a
    heuristic lower bound for the supremum over all closed subgroups.
    """

    n: int
    delta: float
    family_masses: dict
    max_mass: float
    threshold: float
    passes: bool
    samples: int


_CONJUGATION_GRID = 64


def _family_members(mu: AtomicMeasure, n: int):
    """Per-family member grids (base subgroups, before conjugation)."""
    reach = n * support_radius(mu) + 1.0
    ts = np.linspace(-reach, reach, 513)
    diag = np.zeros((len(ts), 2, 2))
    diag[:, 0, 0] = np.exp(0.5 * ts)
    diag[:, 1, 1] = np.exp(-0.5 * ts)

    s = np.linspace(0.0, reach, 257)
    xs = np.concatenate([-2.0 * np.sinh(0.5 * s[:0:-1]), 2.0 * np.sinh(0.5 * s)])
    shear = np.broadcast_to(np.eye(2), (len(xs), 2, 2)).copy()
    shear[:, 0, 1] = xs

    thetas = np.linspace(0.0, 2.0 * math.pi, 256, endpoint=False)
    rot = np.zeros((len(thetas), 2, 2))
    rot[:, 0, 0] = np.cos(thetas)
    rot[:, 0, 1] = -np.sin(thetas)
    rot[:, 1, 0] = np.sin(thetas)
    rot[:, 1, 1] = np.cos(thetas)

    ts2 = np.linspace(-reach, reach, 129)
    s2 = np.linspace(0.0, reach, 33)
    xs2 = np.concatenate([-2.0 * np.sinh(0.5 * s2[:0:-1]), 2.0 * np.sinh(0.5 * s2)])
    tt, xx = np.meshgrid(ts2, xs2, indexing="ij")
    tt, xx = tt.ravel(), xx.ravel()
    an = np.zeros((len(tt), 2, 2))
    an[:, 0, 0] = np.exp(0.5 * tt)
    an[:, 0, 1] = np.exp(0.5 * tt) * xx
    an[:, 1, 1] = np.exp(-0.5 * tt)

    return {
        "rotated_diagonal": (diag, True),
        "rotated_shear": (shear, True),
        "rotations": (rot, False),
        "rotated_diagonal_shear": (an, True),
    }


def subgroup_concentration(
    mu: AtomicMeasure,
    n: int,
    delta: float,
    samples: int,
    seed,
    c1: float = 1.0,
    c2: float = 1.0,
) -> DiophantineReport:
    """Mass of the n-step law within delta of each candidate subgroup family.

    For conjugated families the mass is computed per conjugation angle (each
    angle is one subgroup) and the per-family figure is the maximum over the
    64 point conjugation grid.
    """
    rng = _as_rng(seed)
    walk = sample_products(mu, n, samples, rng).reshape(samples, 4)
    walk_sq = (walk**2).sum(axis=1)
    phis = np.arange(_CONJUGATION_GRID) * math.pi / _CONJUGATION_GRID
    masses = {}
    for name, (base, conjugated) in _family_members(mu, n).items():
        angles = phis if conjugated else phis[:1]
        best = 0.0
        for phi in angles:
            co, si = math.cos(phi), math.sin(phi)
            k = np.array([[co, -si], [si, co]])
            members = (k @ base @ k.T).reshape(len(base), 4)
            mem_sq = (members**2).sum(axis=1)
            # ||g - m||^2 = |g|^2 + |m|^2 - 2 <g, m>, BLAS-friendly
            d2 = walk_sq[:, None] + mem_sq[None, :] - 2.0 * (walk @ members.T)
            near = (d2.min(axis=1) < delta * delta).mean()
            best = max(best, float(near))
        masses[name] = best
    max_mass = max(masses.values())
    threshold = delta ** (c2 / c1)
    return DiophantineReport(
        n, delta, masses, max_mass, threshold, max_mass <= threshold, samples
    )
