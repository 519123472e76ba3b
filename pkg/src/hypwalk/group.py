"""Structure theory of SL(2,R): decompositions, boundary action, distances.

Conventions fixed here and used by every downstream module:

* k_theta = [[cos, -sin], [sin, cos]] rotates by theta; K = SO(2).
* a_t = diag(e^{t/2}, e^{-t/2}); in the curvature -1 metric on the
  hyperbolic plane, d(a_t.o, o) = |t|.
* n_x = [[1, x], [0, 1]].
* Iwasawa: g = k_theta a_t n_x uniquely, and H(g) = t.  The first column
  of g equals e^{t/2} (cos theta, sin theta), which pins both theta and t:
  H(g) = log(g11^2 + g21^2).
* Cartan: g = k_theta1 a_t k_theta2 with t >= 0; norm(g) = t is twice the
  log of the largest singular value and equals d(g.o, o).
* The boundary is the circle of angles modulo pi (K modulo the center).

The frequency pairing used by the principal series evaluates (delta + i r)
on the a-coordinate as (1/2 + i r) * t, so delta enters as the coefficient
1/2 stored in CONSTANTS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidElementError

TWO_PI = 2.0 * math.pi

# determinant drift beyond this is renormalized away on construction
DET_TOLERANCE = 1e-12

# renormalize long Monte Carlo product chains every this many factors
RENORM_CHAIN = 32


@dataclass(frozen=True)
class GroupConstants:
    """The handful of structure constants the limit theorems consume.

    For SL(2,R) there is one positive indivisible root alpha (acting on the
    a-coordinate as alpha(t) = t, multiplicity 1), the rank is 1, and the
    half sum of positive roots is alpha/2.  The polynomial exponent in the
    limit theorem is 2 * (number of indivisible positive roots) + rank = 3.
    """

    positive_indivisible_roots: int = 1
    rank: int = 1
    llt_exponent: int = 3
    delta_coeff: float = 0.5
    root_multiplicity: int = 1

    def __post_init__(self):
        assert self.llt_exponent == 2 * self.positive_indivisible_roots + self.rank


CONSTANTS = GroupConstants()


@dataclass(frozen=True)
class GroupElement:
    """Unit-determinant 2x2 real matrix [[a, b], [c, d]].

    Construction renormalizes small determinant drift (dividing by sqrt(det)
    when |det - 1| exceeds DET_TOLERANCE) and rejects det <= 0.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if not math.isfinite(det) or det <= 0.0:
            raise InvalidElementError(f"matrix has determinant {det}, expected 1")
        if abs(det - 1.0) > DET_TOLERANCE:
            s = 1.0 / math.sqrt(det)
            object.__setattr__(self, "a", self.a * s)
            object.__setattr__(self, "b", self.b * s)
            object.__setattr__(self, "c", self.c * s)
            object.__setattr__(self, "d", self.d * s)

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def rotation(cls, theta: float) -> "GroupElement":
        """k_theta, counterclockwise rotation by theta."""
        co, si = math.cos(theta), math.sin(theta)
        return cls(co, -si, si, co)

    @classmethod
    def dilation(cls, t: float) -> "GroupElement":
        """a_t = diag(e^{t/2}, e^{-t/2}), the geodesic flow element."""
        e = math.exp(0.5 * t)
        return cls(e, 0.0, 0.0, 1.0 / e)

    @classmethod
    def shear(cls, x: float) -> "GroupElement":
        """n_x, upper unipotent."""
        return cls(1.0, float(x), 0.0, 1.0)

    @classmethod
    def from_matrix(cls, m) -> "GroupElement":
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2):
            raise InvalidElementError(f"expected a 2x2 matrix, got shape {m.shape}")
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    @property
    def mat(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "GroupElement":
        return GroupElement(self.d, -self.b, -self.c, self.a)

    def transpose(self) -> "GroupElement":
        return GroupElement(self.a, self.c, self.b, self.d)

    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def __repr__(self):
        return f"GroupElement([[{self.a:.12g}, {self.b:.12g}], [{self.c:.12g}, {self.d:.12g}]])"


@dataclass(frozen=True)
class BoundaryPoint:
    """Point of the boundary circle; the angle is reduced modulo pi eagerly."""

    omega: float

    def __post_init__(self):
        object.__setattr__(self, "omega", float(self.omega) % math.pi)


def _angle(w) -> float:
    return w.omega if isinstance(w, BoundaryPoint) else float(w)


@dataclass(frozen=True)
class IwasawaFactors:
    """g = k_theta a_t n_x; t is the horocycle coordinate H(g)."""

    theta: float
    t: float
    x: float

    def reconstruct(self) -> GroupElement:
        return (
            GroupElement.rotation(self.theta)
            @ GroupElement.dilation(self.t)
            @ GroupElement.shear(self.x)
        )


@dataclass(frozen=True)
class CartanFactors:
    """g = k_theta1 a_t k_theta2 with t >= 0."""

    theta1: float
    t: float
    theta2: float

    def reconstruct(self) -> GroupElement:
        return (
            GroupElement.rotation(self.theta1)
            @ GroupElement.dilation(self.t)
            @ GroupElement.rotation(self.theta2)
        )


def iwasawa(g: GroupElement) -> IwasawaFactors:
    """Unique factorization g = k_theta a_t n_x.

    The first column of g is e^{t/2}(cos theta, sin theta); the shear
    coordinate falls out of the first row of k^{-1} g.
    """
    nrm2 = g.a * g.a + g.c * g.c
    t = math.log(nrm2)  # e^{t/2} is the first-column norm, kept on this exact path
    theta = math.atan2(g.c, g.a) % TWO_PI
    x = (g.a * g.b + g.c * g.d) / nrm2
    return IwasawaFactors(theta, t, x)


def _cartan_split(a: float, b: float, c: float, d: float):
    # rotation-invariant combinations: (q, r) = ((s1+s2)/2, (s1-s2)/2)
    e, f = 0.5 * (a + d), 0.5 * (a - d)
    g_, h = 0.5 * (c + b), 0.5 * (c - b)
    q = math.hypot(e, h)
    r = math.hypot(f, g_)
    return e, f, g_, h, q, r


def cartan(g: GroupElement) -> CartanFactors:
    """Factorization g = k_theta1 a_t k_theta2 with t = 2 log s1 >= 0.

    Closed-form 2x2 singular value decomposition: the sum and difference
    angles come from the two rotation-equivariant component pairs.
    """
    e, f, g_, h, q, r = _cartan_split(g.a, g.b, g.c, g.d)
    ang_sum = math.atan2(h, e)  # theta1 + theta2
    ang_diff = math.atan2(g_, f)  # theta1 - theta2
    t = 2.0 * math.log(max(q + r, 1.0))  # clamp roundoff for rotations
    theta1 = 0.5 * (ang_sum + ang_diff) % TWO_PI
    theta2 = 0.5 * (ang_sum - ang_diff) % TWO_PI
    return CartanFactors(theta1, t, theta2)


def norm(g: GroupElement) -> float:
    """2 log(largest singular value); equals d(g.o, o) and bounds |H(g)|."""
    _, _, _, _, q, r = _cartan_split(g.a, g.b, g.c, g.d)
    return 2.0 * math.log(max(q + r, 1.0))


def horocycle_cocycle(g: GroupElement, w) -> float:
    """H(g^{-1} k_w); independent of the representative w versus w + pi."""
    ang = _angle(w)
    co, si = math.cos(ang), math.sin(ang)
    # first column of g^{-1} k_w with g^{-1} = [[d, -b], [-c, a]]
    u = g.d * co - g.b * si
    v = -g.c * co + g.a * si
    return math.log(u * u + v * v)


def boundary_action(g: GroupElement, w) -> BoundaryPoint:
    """alpha_g(w): the Iwasawa angle of g k_w, modulo pi."""
    ang = _angle(w)
    co, si = math.cos(ang), math.sin(ang)
    u = g.a * co + g.b * si
    v = g.c * co + g.d * si
    return BoundaryPoint(math.atan2(v, u))


def rn_derivative(g: GroupElement, w) -> float:
    """Jacobian of alpha_g at w: exp(-2 delta H(g^{-1} k_w)), strictly positive."""
    return math.exp(-2.0 * CONSTANTS.delta_coeff * horocycle_cocycle(g, w))


def sym_space_distance(g: GroupElement, h: GroupElement) -> float:
    """Distance of the orbit points g.o and h.o in the hyperbolic plane."""
    return norm(h.inverse() @ g)


# ---------------------------------------------------------------------------
# vectorized helpers for quadrature grids and sample batches


def cocycle_action_grid(g: GroupElement, angles: np.ndarray):
    """H(g k_angle) and the Iwasawa angle of g k_angle over an angle grid.

    Returns (h, ang) arrays; ang is atan2 output in (-pi, pi].  Callers
    evaluating the principal series kernel pass g.inverse() here.
    """
    co = np.cos(angles)
    si = np.sin(angles)
    u = g.a * co + g.b * si
    v = g.c * co + g.d * si
    return np.log(u * u + v * v), np.arctan2(v, u)


def norms_of(mats: np.ndarray) -> np.ndarray:
    """Vectorized norm() for an (..., 2, 2) stack of unit-determinant matrices."""
    a = mats[..., 0, 0]
    b = mats[..., 0, 1]
    c = mats[..., 1, 0]
    d = mats[..., 1, 1]
    q = np.hypot(0.5 * (a + d), 0.5 * (c - b))
    r = np.hypot(0.5 * (a - d), 0.5 * (c + b))
    # q + r >= 1 up to roundoff for det = 1; clip guards the log
    return 2.0 * np.log(np.maximum(q + r, 1.0))


def renormalize_dets(mats: np.ndarray) -> np.ndarray:
    """Scale an (..., 2, 2) stack back to unit determinant, in place."""
    det = mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]
    np.multiply(mats, (det ** -0.5)[..., None, None], out=mats)
    return mats


def random_elements(rng: np.random.Generator, count: int, max_norm: float) -> list[GroupElement]:
    """Random elements with norm <= max_norm, sampled in Cartan coordinates.

    Diagnostic helper for tests and scripts; the radial coordinate is drawn
    uniformly on [0, max_norm], which is NOT the Haar radial density.
    """
    th1 = rng.uniform(0.0, TWO_PI, size=count)
    th2 = rng.uniform(0.0, TWO_PI, size=count)
    ts = rng.uniform(0.0, max_norm, size=count)
    out = []
    for i in range(count):
        out.append(
            GroupElement.rotation(th1[i])
            @ GroupElement.dilation(ts[i])
            @ GroupElement.rotation(th2[i])
        )
    return out
