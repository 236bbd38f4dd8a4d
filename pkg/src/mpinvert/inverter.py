"""Global inversion of square maps by descent on phi_y(x) = 1/2 |F(x) - y|^2.

Each iteration picks a step according to the local structure of F:

* a Gauss-Newton step where F'(x) is comfortably invertible,
* a third-order corrector where F' and F'' (nearly) vanish, since gradient
  descent crawls in the sextic-flat basin around such points,
* a regularized Gauss-Newton or plain gradient step otherwise,

and accepts it only if phi strictly decreases (backtracking by halving).
Critical points with positive residual are classified; a violation of the
bijective-or-cubic alternative is reported as ``HypothesisViolated``.
"""

from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.optimize

from .errors import (
    ConfigError,
    DegenerateSolveError,
    DimensionError,
    NumericalError,
    SingularMatrixError,
    SingularJacobianError,
    UnsupportedError,
)
from .functional import LeastSquaresFunctional
from .linalg import sigma_min, solve_square
from .operators import as_vector

REGULAR = "Regular"
DEGENERATE = "Degenerate"
HYPOTHESIS_VIOLATED = "HypothesisViolated"

CONVERGED = "Converged"
STALLED = "Stalled"

_STATUS_RANK = {CONVERGED: 0, HYPOTHESIS_VIOLATED: 1, STALLED: 2}


@dataclass(frozen=True)
class Tolerances:
    tol_bij: float = 1e-8
    tol_zero: float = 1e-8
    tol_grad: float = 1e-10
    tol_res: float = 1e-9
    tol_switch: float = 1e-4

    def validate(self):
        for k, v in asdict(self).items():
            if not (isinstance(v, (int, float)) and np.isfinite(v) and v > 0):
                raise ConfigError(f"tolerance {k} must be a positive number, got {v!r}")
        return self


@dataclass(frozen=True)
class SolverOptions:
    tols: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    starts: int = 8
    max_iters: int = 200
    n_random_directions: int = 32
    start_scale: float = 1.0

    def validate(self):
        self.tols.validate()
        if int(self.starts) < 1:
            raise ConfigError("starts must be >= 1")
        if int(self.max_iters) < 1:
            raise ConfigError("max_iters must be >= 1")
        if int(self.n_random_directions) < 0:
            raise ConfigError("n_random_directions must be >= 0")
        if not self.start_scale > 0:
            raise ConfigError("start_scale must be positive")
        return self

    def to_dict(self):
        return asdict(self)


@dataclass
class CriticalPointClass:
    tag: str
    sigma_min: float
    jac_norm: float
    d2_norm: float
    d3_sup: float
    d3_inf: float
    surjectivity: Optional[str] = None  # "diagonal", "asserted" or None

    def to_dict(self):
        return asdict(self)


@dataclass
class SolveReport:
    solution: np.ndarray
    residual_norm: float
    class_at_solution: CriticalPointClass
    iterations: int
    trace: List[Tuple[int, float, float]]
    status: str
    steps: List[str] = field(default_factory=list)
    start_index: int = 0
    starts_tried: int = 1
    seed: int = 0
    options: Optional[SolverOptions] = None

    @property
    def converged(self):
        return self.status == CONVERGED

    def to_dict(self):
        return {
            "status": self.status,
            "solution": [float(v) for v in self.solution],
            "residual_norm": self.residual_norm,
            "class_at_solution": self.class_at_solution.to_dict(),
            "iterations": self.iterations,
            "start_index": self.start_index,
            "starts_tried": self.starts_tried,
            "seed": self.seed,
            "steps": list(self.steps),
            "options": None if self.options is None else self.options.to_dict(),
        }


def sample_directions(dim, n_random=32, seed=0):
    """The 2*dim signed basis vectors followed by ``n_random`` seeded unit vectors."""
    eye = np.eye(dim)
    rng = np.random.default_rng(seed)
    rand = rng.standard_normal((n_random, dim))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    return np.vstack([eye, -eye, rand])


def diagonal_third_derivative(op, x, seed=0, n_checks=4):
    """Coefficients c with F'''(x)h^3 = c * h^3 (componentwise), or None.

    Basis probes read off the candidate coefficients; seeded random directions
    then confirm the coordinatewise form, since couplings such as
    A(h^2)h look diagonal on basis vectors alone.
    """
    n = op.dim_in
    if op.dim_out != n:
        return None
    rtol = 1e-9 if op.derivative_mode == "analytic" else 1e-4
    c = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        v = op.d3_dir(x, e)
        c[i] = v[i]
        off = np.delete(v, i)
        if off.size and np.max(np.abs(off)) > rtol * max(1.0, abs(c[i])):
            return None
    rng = np.random.default_rng(seed + 1)
    for _ in range(n_checks):
        h = rng.standard_normal(n)
        v = op.d3_dir(x, h)
        expected = c * h**3
        if np.max(np.abs(v - expected)) > rtol * max(1.0, np.max(np.abs(expected))):
            return None
    return c


def _derivative_norms(op, x, dirs):
    d2 = max(np.linalg.norm(op.d2_dir(x, h)) for h in dirs)
    d3 = [np.linalg.norm(op.d3_dir(x, h)) for h in dirs]
    return float(d2), float(max(d3)), float(min(d3))


def classify_critical(op, x, tols=None, seed=0, n_random=32):
    """Classify x as Regular, Degenerate or HypothesisViolated.

    Regular: sigma_min(F'(x)) > tol_bij. Degenerate: |F'(x)| <= tol_zero, the
    sampled sup of |F''(x)h^2| <= tol_zero, the sampled sup of |F'''(x)h^3| >
    tol_zero and F'''(x) is certified onto, either by a diagonal form with all
    coefficients nonzero or by the operator's ``surjective_third`` assertion.
    """
    tols = tols or Tolerances()
    if not op.is_square:
        raise UnsupportedError(f"classification needs a square operator, got {op.dim_out}x{op.dim_in}")
    x = as_vector(x, op.dim_in, "x")
    sv = np.linalg.svd(op.jacobian(x), compute_uv=False)
    smin, jnorm = float(sv[-1]), float(sv[0])
    d2, d3_sup, d3_inf = _derivative_norms(op, x, sample_directions(op.dim_in, n_random, seed))

    if smin > tols.tol_bij:
        return CriticalPointClass(REGULAR, smin, jnorm, d2, d3_sup, d3_inf)
    surj = None
    if jnorm <= tols.tol_zero and d2 <= tols.tol_zero and d3_sup > tols.tol_zero:
        c = diagonal_third_derivative(op, x, seed)
        if c is not None and np.all(np.abs(c) > tols.tol_zero):
            surj = "diagonal"
        elif op.surjective_third:
            surj = "asserted"
        if surj is not None:
            return CriticalPointClass(DEGENERATE, smin, jnorm, d2, d3_sup, d3_inf, surj)
    return CriticalPointClass(HYPOTHESIS_VIOLATED, smin, jnorm, d2, d3_sup, d3_inf, surj)


def gauss_newton_step(op, y, x, damping=1.0, reg=1e-10):
    """x - damping * F'(x)^{-1} (F(x) - y).

    A numerically singular Jacobian falls back to the Levenberg-regularized
    normal equations with ``mu = reg * |F'(x)|_F^2``.
    """
    if not 0.0 < damping <= 1.0:
        raise ConfigError(f"damping must lie in (0, 1], got {damping}")
    x = as_vector(x, op.dim_in, "x")
    y = as_vector(y, op.dim_out, "y")
    j = op.jacobian(x)
    r = op.eval(x) - y
    try:
        dx = solve_square(j, r)
    except SingularMatrixError:
        scale = float(np.sum(j**2))
        if scale == 0.0:
            raise SingularJacobianError("jacobian vanishes; no Gauss-Newton direction") from None
        normal = j.T @ j + reg * scale * np.eye(op.dim_in)
        try:
            dx = np.linalg.solve(normal, j.T @ r)
        except np.linalg.LinAlgError:
            raise SingularJacobianError("regularized normal equations are singular") from None
        if not np.all(np.isfinite(dx)):
            raise SingularJacobianError("regularized Gauss-Newton step is not finite")
    return x - damping * dx


def _cube_model_solve(op, x, b, seed, n_starts, tol):
    """Minimize |F'''(x)h^3 - b|^2 over h from several starts."""
    n = op.dim_in

    def model(h):
        return op.d3_dir(x, h) - b

    def model_jac(h):
        step = 1e-6 * max(1.0, np.linalg.norm(h))
        cols = []
        for i in range(n):
            e = np.zeros(n)
            e[i] = step
            cols.append((op.d3_dir(x, h + e) - op.d3_dir(x, h - e)) / (2 * step))
        return np.column_stack(cols)

    starts = []
    bn = np.linalg.norm(b)
    d = b / bn
    td = op.d3_dir(x, d)
    proj = float(td @ b)
    if td @ td > 0 and proj != 0.0:
        starts.append(np.cbrt(proj / float(td @ td)) * d)
    c = np.array([op.d3_dir(x, e)[i] for i, e in enumerate(np.eye(n))])
    if np.all(c != 0):
        starts.append(np.cbrt(b / c))
    rng = np.random.default_rng(seed)
    radius = np.cbrt(bn / max(np.linalg.norm(td), 1e-300))
    while len(starts) < n_starts:
        starts.append(radius * rng.standard_normal(n) / np.sqrt(n))

    best = None
    for h0 in starts:
        try:
            sol = scipy.optimize.least_squares(model, h0, jac=model_jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
        except (NumericalError, ValueError):
            continue
        err = np.linalg.norm(model(sol.x))
        if best is None or err < best[1]:
            best = (sol.x, err)
        if err <= tol:
            break
    if best is None or best[1] > tol:
        got = float("nan") if best is None else best[1]
        raise DegenerateSolveError(f"cubic model not solved: best residual {got:.3e} > {tol:.1e}")
    return best[0]


def cubic_step(op, y, x, model="third_derivative", seed=0, n_starts=8):
    """Third-order corrector at a point where F' and F'' vanish.

    With ``model="third_derivative"`` the increment h solves
    ``F'''(x)h^3 = y - F(x)``: for F'''(0)h^3 = 6h^3 this is the closed form
    h = ((y - F(x))/6)^(1/3). ``model="taylor"`` keeps the 1/6 of the Taylor
    expansion, ``F'''(x)h^3 / 6 = y - F(x)``, which is exact for homogeneous
    cubic maps and is what :func:`invert` uses.

    When F'''(x) acts coordinatewise (c_i h_i^3) the solve is the
    sign-preserving real cube root; otherwise the cubic model is minimized
    from several starts. Returns x + h.
    """
    x = as_vector(x, op.dim_in, "x")
    y = as_vector(y, op.dim_out, "y")
    if model == "third_derivative":
        b = y - op.eval(x)
    elif model == "taylor":
        b = 6.0 * (y - op.eval(x))
    else:
        raise ConfigError(f"unknown cubic model {model!r}")
    if not op.is_square:
        raise UnsupportedError("cubic_step needs a square operator")
    if not np.any(b):
        return x.copy()
    c = diagonal_third_derivative(op, x, seed)
    if c is not None and np.all(c != 0):
        return x + np.cbrt(b / c)
    tol = 1e-10 * (1.0 + np.linalg.norm(b))
    return x + _cube_model_solve(op, x, b, seed, n_starts, tol)


def _backtrack(f, x, d, phi, max_halvings=60):
    t = 1.0
    for _ in range(max_halvings):
        xn = x + t * d
        try:
            pn = f.phi(xn)
        except NumericalError:
            pn = np.inf
        if pn < phi:
            return xn, pn
        t *= 0.5
    return None, phi


def _hessian(f, x):
    step = 1e-6 * max(1.0, np.linalg.norm(x))
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        cols.append((f.grad(x + e) - f.grad(x - e)) / (2 * step))
    h = np.column_stack(cols)
    return 0.5 * (h + h.T)


def _polish_critical(f, x, phi, tol_grad, trace, steps, max_iters=50):
    """Newton iteration on grad phi, accepted while |grad| drops and phi does not rise."""
    g = f.grad(x)
    gn = np.linalg.norm(g)
    for _ in range(max_iters):
        if gn <= tol_grad:
            break
        dx, *_ = np.linalg.lstsq(_hessian(f, x), g, rcond=None)
        xn = x - dx
        try:
            pn, gnew = f.phi(xn), f.grad(xn)
        except NumericalError:
            break
        gnn = np.linalg.norm(gnew)
        if not (gnn < gn and pn <= phi):
            break
        x, phi, g, gn = xn, pn, gnew, gnn
        trace.append((len(trace), phi, gn))
        steps.append("polish")
    return x, phi


def _descend(f, y, x, opts, seed):
    op = f.op
    tols = opts.tols
    dirs = sample_directions(op.dim_in, opts.n_random_directions, seed)
    phi = f.phi(x)
    trace, steps = [], []
    for it in range(opts.max_iters):
        g = f.grad(x)
        trace.append((it, phi, float(np.linalg.norm(g))))
        if phi == 0.0:
            break
        j = op.jacobian(x)
        smin = sigma_min(j)
        candidates = []
        if smin > tols.tol_switch:
            candidates.append("gauss-newton")
        else:
            d2 = max(np.linalg.norm(op.d2_dir(x, h)) for h in dirs)
            if d2 <= tols.tol_switch:
                candidates.append("cubic")
            candidates.append("gauss-newton")
        candidates.append("gradient")

        accepted = False
        for kind in candidates:
            try:
                if kind == "cubic":
                    d = cubic_step(op, y, x, model="taylor", seed=seed) - x
                elif kind == "gauss-newton":
                    d = gauss_newton_step(op, y, x) - x
                else:
                    gg = float(g @ g)
                    if gg == 0.0:
                        continue
                    d = -g * (phi / gg)
            except (SingularJacobianError, DegenerateSolveError):
                continue
            if not np.all(np.isfinite(d)) or not np.any(d):
                continue
            xn, pn = _backtrack(f, x, d, phi)
            if xn is not None:
                x, phi = xn, pn
                steps.append(kind)
                accepted = True
                break
        if not accepted:
            break
    else:
        trace.append((opts.max_iters, phi, float(np.linalg.norm(f.grad(x)))))
    return x, phi, trace, steps


def _single_run(f, y, x0, opts, seed, start_index):
    x, phi, trace, steps = _descend(f, y, x0, opts, seed)
    tols = opts.tols
    if f.residual_norm(x) > tols.tol_res:
        x, phi = _polish_critical(f, x, phi, tols.tol_grad, trace, steps)
    res = f.residual_norm(x)
    cls = classify_critical(f.op, x, tols, seed, opts.n_random_directions)
    gn = float(np.linalg.norm(f.grad(x)))
    if res <= tols.tol_res:
        status = CONVERGED
    elif gn <= tols.tol_grad and cls.tag == HYPOTHESIS_VIOLATED:
        status = HYPOTHESIS_VIOLATED
    else:
        status = STALLED
    return SolveReport(
        solution=x,
        residual_norm=res,
        class_at_solution=cls,
        iterations=len(steps),
        trace=trace,
        status=status,
        steps=steps,
        start_index=start_index,
        seed=seed,
        options=opts,
    )


def invert(op, y, x0=None, opts=None):
    """Solve F(x) = y by minimizing phi_y, with seeded multistart.

    Start 0 is ``x0`` (the origin by default); further starts perturb it by
    seeded Gaussian noise and are only tried while no run has converged. The
    returned report is the best one by status (Converged, then
    HypothesisViolated, then Stalled) and residual.
    """
    opts = (opts or SolverOptions()).validate()
    if not op.is_square:
        raise UnsupportedError(f"invert needs a square operator, got {op.dim_out}x{op.dim_in}")
    y = as_vector(y, op.dim_out, "y")
    x0 = np.zeros(op.dim_in) if x0 is None else as_vector(x0, op.dim_in, "x0")
    f = LeastSquaresFunctional(op, y)
    rng = np.random.default_rng(opts.seed)
    scale = opts.start_scale * max(1.0, float(np.linalg.norm(x0)))
    starts = [x0] + [x0 + scale * rng.standard_normal(op.dim_in) for _ in range(opts.starts - 1)]

    best = None
    for k, start in enumerate(starts):
        report = _single_run(f, y, start, opts, opts.seed, k)
        key = (_STATUS_RANK[report.status], report.residual_norm)
        if best is None or key < (_STATUS_RANK[best.status], best.residual_norm):
            best = report
        if report.status == CONVERGED:
            break
    best.starts_tried = k + 1
    return best


def certify(op, y, report, tols=None, seed=0):
    """Independently re-check a report: small residual and a Regular or Degenerate point."""
    tols = tols or (report.options.tols if report.options else Tolerances())
    y = as_vector(y, op.dim_out, "y")
    try:
        x = as_vector(report.solution, op.dim_in, "solution")
        res = LeastSquaresFunctional(op, y).residual_norm(x)
        cls = classify_critical(op, x, tols, seed)
    except (DimensionError, NumericalError):
        return False
    return bool(res <= tols.tol_res and cls.tag in (REGULAR, DEGENERATE))
