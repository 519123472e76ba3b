"""hypwalk: a numerical laboratory for random walks on the hyperbolic plane.

Builds the principal series transfer operators of a finitely supported
measure on SL(2,R), extracts their spectral data, runs the spherical and
boundary Fourier transforms, and verifies the local limit theorem and the
stationary boundary density through independent computation routes.
"""

__version__ = "0.1.0"

from .group import (
    CONSTANTS,
    BoundaryPoint,
    CartanFactors,
    GroupConstants,
    GroupElement,
    IwasawaFactors,
    boundary_action,
    cartan,
    horocycle_cocycle,
    iwasawa,
    norm,
    rn_derivative,
    sym_space_distance,
)

__all__ = [
    "CONSTANTS",
    "BoundaryPoint",
    "CartanFactors",
    "GroupConstants",
    "GroupElement",
    "IwasawaFactors",
    "boundary_action",
    "cartan",
    "horocycle_cocycle",
    "iwasawa",
    "norm",
    "rn_derivative",
    "sym_space_distance",
    "__version__",
]
