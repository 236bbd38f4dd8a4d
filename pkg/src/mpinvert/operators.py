"""Differentiable maps between coordinate spaces and the built-in test problems.

An :class:`Operator` evaluates ``F(x)`` together with its Jacobian and the
diagonal second and third directional derivatives ``F''(x)h^2`` and
``F'''(x)h^3``. Derivatives not supplied analytically are replaced by central
finite differences.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DimensionError, NumericalError


@dataclass(frozen=True)
class FDSteps:
    """Base step sizes for the finite-difference fallbacks, one per order.

    The actual displacement along a direction is ``base * max(1, |x|)``.
    """

    first: float = 1e-6
    second: float = 1e-4
    third: float = 1e-3


def as_vector(x, dim=None, what="vector"):
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise DimensionError(f"{what} must be one-dimensional, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionError(f"{what} has dimension {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise NumericalError(f"{what} has non-finite entries")
    return v


def _scale(x):
    return max(1.0, float(np.linalg.norm(x)))


def fd_jacobian(func, x, step=1e-6):
    """Column-wise central-difference Jacobian."""
    x = np.asarray(x, dtype=float)
    d = step * _scale(x)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = d
        cols.append((func(x + e) - func(x - e)) / (2.0 * d))
    return np.column_stack(cols)


def fd_second_directional(func, x, h, step=1e-4):
    """Second derivative of ``t -> func(x + t h)`` at 0 by the three-point stencil."""
    hn = np.linalg.norm(h)
    if hn == 0.0:
        return np.zeros_like(func(x))
    t = step * _scale(x) / hn
    if t * hn == 0.0:
        raise NumericalError("second-order finite-difference step underflowed")
    return (func(x + t * h) - 2.0 * func(x) + func(x - t * h)) / t**2


def fd_third_directional(func, x, h, step=1e-3):
    """Third derivative of ``t -> func(x + t h)`` at 0 by the antisymmetric five-point stencil."""
    hn = np.linalg.norm(h)
    if hn == 0.0:
        return np.zeros_like(func(x))
    t = step * _scale(x) / hn
    if t * hn == 0.0:
        raise NumericalError("third-order finite-difference step underflowed")
    return (
        func(x + 2 * t * h) - 2.0 * func(x + t * h) + 2.0 * func(x - t * h) - func(x - 2 * t * h)
    ) / (2.0 * t**3)


@dataclass(frozen=True)
class Operator:
    """A map F from R^dim_in to R^dim_out with derivatives up to order three.

    ``weights`` optionally replaces the Euclidean inner product on the output
    space by ``sum_i w_i u_i v_i`` (used for quadrature discretizations).
    ``surjective_third`` records a user assertion that ``F'''(x)`` is onto
    wherever it is evaluated; the inverter consults it when the diagonal probe
    cannot certify surjectivity.
    """

    dim_in: int
    dim_out: int
    func: Callable[[np.ndarray], np.ndarray]
    jac: Optional[Callable] = None
    d2: Optional[Callable] = None
    d3: Optional[Callable] = None
    name: str = "custom"
    weights: Optional[np.ndarray] = None
    surjective_third: bool = False
    fd_steps: FDSteps = field(default_factory=FDSteps)

    def __post_init__(self):
        if self.dim_in < 1 or self.dim_out < 1:
            raise ConfigError("operator dimensions must be positive")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (self.dim_out,) or np.any(w <= 0):
                raise ConfigError("weights must be positive with one entry per output")

    @property
    def derivative_mode(self):
        if self.jac is not None and self.d2 is not None and self.d3 is not None:
            return "analytic"
        return "finite-difference"

    @property
    def is_square(self):
        return self.dim_in == self.dim_out

    def _out(self, value, what):
        v = np.atleast_1d(np.asarray(value, dtype=float))
        if v.shape != (self.dim_out,):
            raise DimensionError(f"{self.name}: {what} returned shape {v.shape}, expected ({self.dim_out},)")
        if not np.all(np.isfinite(v)):
            raise NumericalError(f"{self.name}: {what} produced non-finite values")
        return v

    def eval(self, x):
        x = as_vector(x, self.dim_in, "x")
        return self._out(self.func(x), "eval")

    def __call__(self, x):
        return self.eval(x)

    def jacobian(self, x):
        x = as_vector(x, self.dim_in, "x")
        if self.jac is not None:
            j = np.atleast_2d(np.asarray(self.jac(x), dtype=float))
        else:
            j = fd_jacobian(self.eval, x, self.fd_steps.first)
        if j.shape != (self.dim_out, self.dim_in):
            raise DimensionError(f"{self.name}: jacobian has shape {j.shape}")
        if not np.all(np.isfinite(j)):
            raise NumericalError(f"{self.name}: jacobian has non-finite entries")
        return j

    def d2_dir(self, x, h):
        """F''(x)h^2."""
        x = as_vector(x, self.dim_in, "x")
        h = as_vector(h, self.dim_in, "h")
        if self.d2 is not None:
            return self._out(self.d2(x, h), "d2_dir")
        return self._out(fd_second_directional(self.eval, x, h, self.fd_steps.second), "d2_dir")

    def d3_dir(self, x, h):
        """F'''(x)h^3."""
        x = as_vector(x, self.dim_in, "x")
        h = as_vector(h, self.dim_in, "h")
        if self.d3 is not None:
            return self._out(self.d3(x, h), "d3_dir")
        return self._out(fd_third_directional(self.eval, x, h, self.fd_steps.third), "d3_dir")

    def finite_difference(self):
        """The same map with every derivative computed by finite differences."""
        return replace(self, jac=None, d2=None, d3=None, name=f"{self.name}[fd]")

    def shifted(self, x1):
        """The operator ``x -> F(x + x1)``."""
        x1 = as_vector(x1, self.dim_in, "x1")

        def wrap(g):
            return None if g is None else (lambda x, *a: g(x + x1, *a))

        return replace(
            self,
            func=lambda x: self.func(x + x1),
            jac=wrap(self.jac),
            d2=wrap(self.d2),
            d3=wrap(self.d3),
            name=f"{self.name}(.+x1)",
        )


# -- built-in problems -------------------------------------------------------


def scalar_polynomial(coeffs, name):
    """1-D operator ``F(x) = sum_k coeffs[k] x^k`` with exact derivatives."""
    p = np.polynomial.Polynomial(coeffs)
    p1, p2, p3 = p.deriv(1), p.deriv(2), p.deriv(3)
    return Operator(
        1,
        1,
        func=lambda x: p(x),
        jac=lambda x: np.array([[p1(x[0])]]),
        d2=lambda x, h: p2(x) * (h * h),
        d3=lambda x, h: p3(x) * (h * h * h),
        name=name,
    )


def diagonal_cubic(coeffs, name="diagonal-cubic"):
    """``F(x)_i = c_i x_i^3``; the third derivative is coordinatewise diagonal."""
    c = np.asarray(coeffs, dtype=float)
    n = c.size
    return Operator(
        n,
        n,
        func=lambda x: c * (x * x * x),
        jac=lambda x: np.diag(3 * c * x**2),
        d2=lambda x, h: 6 * c * x * (h * h),
        d3=lambda x, h: 6 * c * (h * h * h),
        name=name,
    )


def _planar():
    def func(x):
        x1, x2 = x
        return np.array([x1**3 + x1**5 - x2**5, x2**3 + x2**5 + x1**5])

    def jac(x):
        x1, x2 = x
        return np.array(
            [
                [3 * x1**2 + 5 * x1**4, -5 * x2**4],
                [5 * x1**4, 3 * x2**2 + 5 * x2**4],
            ]
        )

    def d2(x, h):
        x1, x2 = x
        s1, s2 = h * h
        return np.array(
            [
                (6 * x1 + 20 * x1**3) * s1 - 20 * x2**3 * s2,
                20 * x1**3 * s1 + (6 * x2 + 20 * x2**3) * s2,
            ]
        )

    def d3(x, h):
        x1, x2 = x
        # h * h * h keeps F'''(x)(-h)^3 = -F'''(x)h^3 bit-exact; numpy's ** does not
        c1, c2 = h * h * h
        return np.array(
            [
                (6 + 60 * x1**2) * c1 - 60 * x2**2 * c2,
                60 * x1**2 * c1 + (6 + 60 * x2**2) * c2,
            ]
        )

    return Operator(2, 2, func, jac, d2, d3, name="planar")


def _arctan():
    # bounded map: |F| < pi/2, so phi_y is not coercive for |y| > pi/2
    return Operator(
        1,
        1,
        func=lambda x: np.arctan(x),
        jac=lambda x: np.array([[1.0 / (1.0 + x[0] ** 2)]]),
        d2=lambda x, h: -2 * x / (1 + x**2) ** 2 * (h * h),
        d3=lambda x, h: (6 * x**2 - 2) / (1 + x**2) ** 3 * (h * h * h),
        name="arctan",
    )


_BUILTINS = {
    "quintic1d": lambda: scalar_polynomial([0, 0, 0, 1, 0, 1], "quintic1d"),
    "planar": _planar,
    "pure-cubic": lambda: scalar_polynomial([0, 0, 0, 1], "pure-cubic"),
    "cube-minus-x": lambda: scalar_polynomial([0, -1, 0, 1], "cube-minus-x"),
    "square": lambda: scalar_polynomial([0, 0, 1], "square"),
    "linear": lambda: scalar_polynomial([0, 1], "linear"),
    "arctan": _arctan,
}

BUILTIN_NAMES = tuple(_BUILTINS)


def builtin(name):
    """Return a named built-in operator.

    ``quintic1d`` is x^3 + x^5, ``planar`` the two-dimensional quintic system,
    ``pure-cubic`` x^3, ``cube-minus-x`` x^3 - x (not injective), ``square``
    x^2 (violates the degeneracy hypothesis at 0), ``linear`` the identity on
    R and ``arctan`` a bounded, non-coercive counter-example.
    """
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise ConfigError(f"unknown problem {name!r}; choose from {', '.join(BUILTIN_NAMES)}") from None
