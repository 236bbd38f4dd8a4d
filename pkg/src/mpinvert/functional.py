"""Least-squares functional phi_y(x) = 1/2 |F(x) - y|^2 and its derivatives.

Every object passed to the mountain-pass and deformation routines only needs
``value(x)`` and ``gradient(x)``; :class:`LeastSquaresFunctional` and
:class:`SmoothFunctional` both provide them.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, DimensionError, PreconditionError
from .linalg import inner, norm
from .operators import Operator, as_vector


@dataclass(frozen=True)
class LeastSquaresFunctional:
    op: Operator
    target: np.ndarray

    def __post_init__(self):
        t = as_vector(self.target, what="target")
        if t.shape[0] != self.op.dim_out:
            raise DimensionError(f"target has dimension {t.shape[0]}, operator maps into R^{self.op.dim_out}")
        object.__setattr__(self, "target", t)

    @property
    def dim(self):
        return self.op.dim_in

    def _ip(self, u, v):
        return inner(u, v, self.op.weights)

    def residual(self, x):
        return self.op.eval(x) - self.target

    def residual_norm(self, x):
        return norm(self.residual(x), self.op.weights)

    def phi(self, x):
        r = self.residual(x)
        return 0.5 * self._ip(r, r)

    def grad(self, x):
        """Coordinate gradient: the vector g with g.h = <F(x) - y, F'(x)h> for all h."""
        r = self.residual(x)
        if self.op.weights is not None:
            r = self.op.weights * r
        return self.op.jacobian(x).T @ r

    def phi_d2_dir(self, x, h):
        """|F'(x)h|^2 + <F(x) - y, F''(x)h^2>."""
        jh = self.op.jacobian(x) @ as_vector(h, self.dim, "h")
        return self._ip(jh, jh) + self._ip(self.residual(x), self.op.d2_dir(x, h))

    def phi_d3_dir(self, x, h):
        """3 <F'(x)h, F''(x)h^2> + <F(x) - y, F'''(x)h^3>."""
        jh = self.op.jacobian(x) @ as_vector(h, self.dim, "h")
        return 3.0 * self._ip(jh, self.op.d2_dir(x, h)) + self._ip(self.residual(x), self.op.d3_dir(x, h))

    # generic functional interface
    value = phi
    gradient = grad


@dataclass(frozen=True)
class SmoothFunctional:
    """A scalar C^1 functional given by value and gradient callables."""

    dim: int
    value_fn: Callable[[np.ndarray], float]
    grad_fn: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"

    def value(self, x):
        return float(self.value_fn(as_vector(x, self.dim, "x")))

    def gradient(self, x):
        return np.asarray(self.grad_fn(as_vector(x, self.dim, "x")), dtype=float)


def two_well(dim=1):
    """(x_1^2 - 1)^2 + x_2^2 + ... + x_n^2: minima at +-e_1, saddle at 0 with value 1."""
    if dim < 1:
        raise ConfigError("two_well needs dim >= 1")

    def value(x):
        return (x[0] ** 2 - 1.0) ** 2 + float(np.sum(x[1:] ** 2))

    def grad(x):
        g = 2.0 * x.copy()
        g[0] = 4.0 * x[0] * (x[0] ** 2 - 1.0)
        return g

    return SmoothFunctional(dim, value, grad, name="two-well" if dim == 1 else f"two-well-{dim}d")


def least_squares(op, target):
    return LeastSquaresFunctional(op, np.atleast_1d(np.asarray(target, dtype=float)))


@dataclass
class TaylorReport:
    """Polynomial fit of phi(x* + s d) - phi(x*) in s along a fixed unit direction d."""

    direction: np.ndarray
    coefficients: np.ndarray  # index k holds the fitted s^k coefficient, k = 0..degree
    cubic_coefficient: float
    predicted_cubic: float  # phi'''(x*)d^3 / 6 from the analytic chain
    gradient_norm: float
    is_local_min: bool
    fit_rms: float
    radius: float = 1.0

    @property
    def leading_order(self):
        """Lowest order k >= 1 whose term is significant at the sampling radius.

        Terms are compared by ``|c_k| radius^k``; orders beyond the fit degree
        leak into the fitted ones at about 1e-3 of the dominant term, hence
        the threshold.
        """
        k = np.arange(self.coefficients.size)
        contrib = np.abs(self.coefficients) * self.radius**k
        c = contrib[1:]
        if not c.size or c.max() == 0:
            return None
        for order, ck in enumerate(c, start=1):
            if ck > 1e-3 * c.max():
                return order
        return None


def taylor_check(f, x_star, radius=1e-2, samples=64, degree=6, tol_grad=1e-8, seed=0):
    """Fit the local expansion of phi around a critical point.

    Samples ``samples`` radii geometrically in [radius/100, radius] on both
    sides of ``x_star`` along a seeded unit direction, then least-squares fits
    a polynomial of degree ``degree``. At a degenerate local minimum the fitted
    cubic coefficient must vanish; at a degenerate critical point that is not
    a minimum it does not and the sampled differences change sign.
    """
    x_star = as_vector(x_star, f.dim, "x_star")
    g = np.linalg.norm(f.grad(x_star))
    if g > tol_grad:
        raise PreconditionError(f"x_star is not critical: |grad phi| = {g:.3e} > {tol_grad:.1e}")
    rng = np.random.default_rng(seed)
    d = rng.standard_normal(f.dim)
    d /= np.linalg.norm(d)
    radii = np.geomspace(radius / 100.0, radius, samples)
    s = np.concatenate([-radii[::-1], radii])
    p0 = f.phi(x_star)
    diffs = np.array([f.phi(x_star + si * d) - p0 for si in s])
    # fit in the scaled variable s/radius for conditioning
    u = s / radius
    vander = np.vander(u, degree + 1, increasing=True)
    coef_u, *_ = np.linalg.lstsq(vander, diffs, rcond=None)
    coef = coef_u / radius ** np.arange(degree + 1)
    fit_rms = float(np.sqrt(np.mean((vander @ coef_u - diffs) ** 2)))
    floor = 64 * np.finfo(float).eps * max(abs(p0), 1e-300)
    return TaylorReport(
        direction=d,
        coefficients=coef,
        cubic_coefficient=float(coef[3]) if degree >= 3 else 0.0,
        predicted_cubic=f.phi_d3_dir(x_star, d) / 6.0,
        gradient_norm=float(g),
        is_local_min=bool(np.all(diffs >= -floor)),
        fit_rms=fit_rms,
        radius=float(radius),
    )
