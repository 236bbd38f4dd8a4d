"""Variational inversion of nonlinear maps through the least-squares functional.

Includes the degenerate case where F' and F'' vanish and the third derivative
drives the solve, a mountain-pass saddle finder with an injectivity audit, a
discrete deformation flow, coercivity probes and a Nystrom-discretized
Hammerstein operator.
"""

from .errors import (
    ConfigError,
    DegenerateInputError,
    DegenerateSolveError,
    DimensionError,
    GeometryError,
    InversionError,
    NumericalError,
    PreconditionError,
    SingularJacobianError,
    SingularMatrixError,
    StallError,
    UnsupportedError,
)
from .functional import LeastSquaresFunctional, SmoothFunctional, least_squares, taylor_check, two_well
from .inverter import (
    SolverOptions,
    Tolerances,
    certify,
    classify_critical,
    cubic_step,
    gauss_newton_step,
    invert,
)
from .mountain_pass import (
    barrier_bound,
    deform,
    injectivity_audit,
    make_injectivity_functional,
    mountain_pass,
)
from .operators import Operator, builtin

__version__ = "0.1.0"
