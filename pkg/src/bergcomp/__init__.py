"""Numerical diagnostics for compactness of composition operators on Bergman spaces.

The package covers the disc and the bidisc, plus one smoothly bounded
Reinhardt domain in the bidisc. Each diagnostic answers the compactness
question independently:

* ``criteria`` -- geometric conditions on the image of the closed bidisc,
  and the verdict that reconciles all diagnostics;
* ``kernels`` -- kernel ratios ``K_{phi(z)}(phi(z)) / K_z(z)`` near the boundary;
* ``carleson`` -- Monte Carlo estimates of the pullback measure on
  Carleson boxes;
* ``operator`` -- singular values of finite sections of ``C_phi``;
* ``reinhardt`` -- Levi classification and kernel asymptotics on the
  Reinhardt domain.
"""

__version__ = "0.1.0"

from .fixtures import FIXTURE_NAMES, fixture, load_symbol, parse_symbol  # noqa: E402
from .symbols import (  # noqa: E402
    Stratum,
    Symbol,
    evaluate,
    jacobian,
    lipschitz_estimate,
    polynomial_symbol,
    sqrt_shift_symbol,
)

__all__ = [
    "FIXTURE_NAMES",
    "Stratum",
    "Symbol",
    "__version__",
    "evaluate",
    "fixture",
    "jacobian",
    "lipschitz_estimate",
    "load_symbol",
    "parse_symbol",
    "polynomial_symbol",
    "sqrt_shift_symbol",
]
