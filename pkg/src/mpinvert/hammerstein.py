"""Nystrom discretization of F(x) = A(x^2) x + r(x) on L^2(0, 1).

``A z(t) = int_0^1 K(t, s) z(s) ds`` is replaced by the weighted sum over a
quadrature grid, and the L^2 pairing by ``<u, v> = sum_i w_i u_i v_i``.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, DegenerateInputError, DimensionError
from .operators import Operator, as_vector

TRAPEZOID = "trapezoid"
GAUSS_LEGENDRE = "gauss-legendre"


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    rule: str

    @property
    def n(self):
        return self.nodes.size

    def integrate(self, values):
        return float(self.weights @ np.asarray(values, dtype=float))

    def norm(self, values):
        """Discrete L^2 norm, the grid norm used for recovery errors."""
        v = np.asarray(values, dtype=float)
        return float(np.sqrt(self.weights @ (v * v)))


def make_grid(n, rule=TRAPEZOID):
    """n-point trapezoid or Gauss-Legendre rule on [0, 1]; weights sum to 1."""
    if n < 2:
        raise ConfigError(f"grid needs at least 2 nodes, got {n}")
    if rule == TRAPEZOID:
        nodes = np.linspace(0.0, 1.0, n)
        weights = np.full(n, 1.0 / (n - 1))
        weights[[0, -1]] *= 0.5
    elif rule == GAUSS_LEGENDRE:
        x, w = np.polynomial.legendre.leggauss(n)
        nodes = 0.5 * (x + 1.0)
        weights = 0.5 * w
    else:
        raise ConfigError(f"unknown quadrature rule {rule!r}")
    return QuadratureGrid(nodes, weights, rule)


@dataclass(frozen=True)
class KernelSpec:
    """K(t, s) with declared bounds 0 < alpha <= K <= beta."""

    k: Callable[[np.ndarray, np.ndarray], np.ndarray]
    alpha: float
    beta: float
    name: str = "custom"

    def matrix(self, grid):
        t = grid.nodes[:, None]
        s = grid.nodes[None, :]
        return np.broadcast_to(np.asarray(self.k(t, s), dtype=float), (grid.n, grid.n)).copy()

    def check(self, grid):
        if not 0 < self.alpha <= self.beta:
            raise ConfigError(f"kernel bounds must satisfy 0 < alpha <= beta, got {self.alpha}, {self.beta}")
        km = self.matrix(grid)
        # bounds are checked on the grid with a relative slack for rounding
        slack = 1e-12 * self.beta
        if km.min() < self.alpha - slack or km.max() > self.beta + slack:
            raise ConfigError(
                f"kernel {self.name!r} leaves [{self.alpha}, {self.beta}] on the grid "
                f"(range [{km.min():.6g}, {km.max():.6g}])"
            )
        return km


def constant_kernel(value=1.0):
    return KernelSpec(lambda t, s: np.full(np.broadcast(t, s).shape, float(value)), value, value, "constant")


def affine_kernel(a=1.0, b=1.0):
    """K(t, s) = a + b t s on [0, 1]^2."""
    lo, hi = min(a, a + b), max(a, a + b)
    return KernelSpec(lambda t, s: a + b * t * s, lo, hi, "affine")


def tabulated_kernel(table, grid):
    """Kernel given by its values on the grid (row t_i, column s_j)."""
    km = np.asarray(table, dtype=float)
    if km.shape != (grid.n, grid.n):
        raise DimensionError(f"tabulated kernel has shape {km.shape}, grid has {grid.n} nodes")
    index = {float(t): i for i, t in enumerate(grid.nodes)}

    def k(t, s):
        ti = np.vectorize(lambda v: index[float(v)])(t)
        si = np.vectorize(lambda v: index[float(v)])(s)
        return km[ti, si]

    return KernelSpec(k, float(km.min()), float(km.max()), "tabulated")


@dataclass(frozen=True)
class PerturbationSpec:
    """Pointwise r(v) with derivatives; ``zero_to_cubic`` asserts r(v) = o(|v|^3) at 0."""

    r: Callable[[np.ndarray], np.ndarray]
    r1: Callable[[np.ndarray], np.ndarray]
    r2: Callable[[np.ndarray], np.ndarray]
    r3: Callable[[np.ndarray], np.ndarray]
    zero_to_cubic: bool = True
    name: str = "zero"


def zero_perturbation():
    z = np.zeros_like
    return PerturbationSpec(z, z, z, z, True, "zero")


def quartic_perturbation(c=0.01):
    """r(v) = c v^4."""
    return PerturbationSpec(
        lambda v: c * v**4,
        lambda v: 4 * c * v**3,
        lambda v: 12 * c * v**2,
        lambda v: 24 * c * v,
        True,
        "quartic",
    )


def apply_A(kernel, grid, z, kmat=None):
    """(Az)(t_i) = sum_j w_j K(t_i, s_j) z(s_j)."""
    z = as_vector(z, grid.n, "z")
    if kmat is None:
        kmat = kernel.matrix(grid)
    return kmat @ (grid.weights * z)


def assemble_operator(kernel, perturbation, grid):
    """Discretized F(x) = A(x^2) x + r(x) with analytic derivatives.

    F'(x)h      = A(x^2) h + 2 A(x h) x + r'(x) h
    F''(x)h^2   = 2 A(h^2) x + 4 A(x h) h + r''(x) h^2
    F'''(x)h^3  = 6 A(h^2) h + r'''(x) h^3
    """
    km = kernel.check(grid)
    kw = km * grid.weights[None, :]
    p = perturbation

    def func(x):
        return (kw @ (x * x)) * x + p.r(x)

    def jac(x):
        return np.diag(kw @ (x * x) + p.r1(x)) + 2.0 * x[:, None] * kw * x[None, :]

    def d2(x, h):
        return 2.0 * (kw @ (h * h)) * x + 4.0 * (kw @ (x * h)) * h + p.r2(x) * h * h

    def d3(x, h):
        return 6.0 * (kw @ (h * h)) * h + p.r3(x) * (h * h * h)

    return Operator(
        grid.n,
        grid.n,
        func,
        jac,
        d2,
        d3,
        name=f"hammerstein[{kernel.name},{p.name},{grid.rule},n={grid.n}]",
        weights=grid.weights.copy(),
        # for K >= alpha > 0, h -> A(h^2)h is onto (it is the r = 0 map itself)
        surjective_third=True,
    )


def fixed_point_residual(kernel, perturbation, grid, x, fx):
    """|x - (fx - r(x)) / A(x^2)|, Euclidean over the nodes."""
    x = as_vector(x, grid.n, "x")
    fx = as_vector(fx, grid.n, "fx")
    denom = apply_A(kernel, grid, x * x)
    if np.any(denom <= 0.0):
        raise DegenerateInputError("A(x^2) vanishes at some node; x must be nonzero")
    return float(np.linalg.norm(x - (fx - perturbation.r(x)) / denom))


@dataclass
class LowerBoundReport:
    min_Ax2: float
    bound: float  # alpha * sum_j w_j x_j^2
    holds: bool


def lower_bound_check(kernel, grid, x):
    """min_i A(x^2)(t_i) >= alpha * |x|^2 with |x| the discrete L^2 norm."""
    x = as_vector(x, grid.n, "x")
    lhs = float(np.min(apply_A(kernel, grid, x * x)))
    rhs = float(kernel.alpha * (grid.weights @ (x * x)))
    return LowerBoundReport(lhs, rhs, lhs >= rhs - 1e-14 * max(1.0, abs(rhs)))


def manufacture_target(kernel, perturbation, grid, x_star):
    """y = F(x_star)."""
    return assemble_operator(kernel, perturbation, grid).eval(x_star)
