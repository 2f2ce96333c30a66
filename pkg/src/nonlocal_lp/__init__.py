"""Nonlocal parabolic equations with stable-type Levy kernels on the periodic torus."""

from .coefficients import (ConstantDrift, ConstantKernel, CosineDrift, SeparableKernel, ZeroDrift,
                           mollify_coefficients)
from .errors import (ArgumentError, ConfigurationError, DegenerateInputError, HypothesisViolation,
                     InconsistencyError, NonContractionError, NonlocalError, NumericalError, StabilityError,
                     UnsupportedConfiguration, WrongRouteError)
from .grid import GridFunction, TorusGrid, translate, trig_polynomial
from .measure import (BoundedLevyMeasure, ConstantDensity, RadialPowerDensity, SphericalMeasure,
                      check_nondegenerate)
from .nonlinear import quadratic_potential, solve_nonlinear, wobble_potential
from .norms import bessel_norm, fractional_laplacian, lp_norm, slobodeckij_norm, spacetime_norms
from .operator import QuadratureScheme, apply_operator, apply_split, levy_symbol
from .semigroup import SamplerConfig, char_exponent, propagate_mc, propagate_spectral, sample_path
from .solver import Problem, Solution, apriori_report, solve_continuity, solve_duhamel, solve_imex

__version__ = "0.1.0"
