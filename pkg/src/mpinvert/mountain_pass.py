"""Mountain-pass saddle search, the injectivity auditor and a discrete deformation flow.

The saddle search relaxes a discretized path between two fixed anchors: the
highest interior node is pushed down along the component of the negative
gradient orthogonal to the path, nodes are re-equidistributed by arc length,
and once the path stops improving the highest point is refined to a critical
point (bounded maximization along the path, then Newton on the gradient).
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.optimize

from .errors import (
    DegenerateInputError,
    GeometryError,
    NumericalError,
    PreconditionError,
    StallError,
)
from .functional import LeastSquaresFunctional
from .inverter import DEGENERATE, REGULAR, Tolerances, classify_critical, sample_directions
from .linalg import sigma_min
from .operators import as_vector


@dataclass(frozen=True)
class MountainPassOptions:
    nodes: int = 33
    max_iters: int = 2000
    tol_grad: float = 1e-9
    relax_tol: float = 1e-6
    step_fraction: float = 0.1
    geometry_tol: float = 1e-12
    refine_iters: int = 50
    seed: int = 0

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class PathState:
    nodes: np.ndarray  # (n_nodes, dim), anchors first and last
    values: np.ndarray

    @property
    def max_index(self):
        return int(np.argmax(self.values))

    @property
    def max_value(self):
        return float(np.max(self.values))

    def segment_lengths(self):
        return np.linalg.norm(np.diff(self.nodes, axis=0), axis=1)


@dataclass
class MountainPassReport:
    critical_point: np.ndarray
    critical_value: float
    gradient_norm: float
    path_history_length: int
    barrier_estimate: float
    anchor_values: tuple
    path_history: List[float] = field(default_factory=list)
    path: Optional[PathState] = None

    def to_dict(self):
        return {
            "critical_point": [float(v) for v in self.critical_point],
            "critical_value": self.critical_value,
            "gradient_norm": self.gradient_norm,
            "path_history_length": self.path_history_length,
            "barrier_estimate": self.barrier_estimate,
            "anchor_values": list(self.anchor_values),
        }


def _equidistribute(nodes):
    seg = np.linalg.norm(np.diff(nodes, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0.0:
        return nodes.copy()
    targets = np.linspace(0.0, s[-1], len(nodes))
    out = np.column_stack([np.interp(targets, s, nodes[:, j]) for j in range(nodes.shape[1])])
    out[0], out[-1] = nodes[0], nodes[-1]
    return out


def _fd_hessian(functional, x):
    step = 1e-5 * max(1.0, np.linalg.norm(x))
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        cols.append((functional.gradient(x + e) - functional.gradient(x - e)) / (2 * step))
    h = np.column_stack(cols)
    return 0.5 * (h + h.T)


def _refine(functional, path, k, opts):
    """Maximize along the polyline around node k, then Newton-iterate on the gradient."""
    a, b, c = path.nodes[k - 1], path.nodes[k], path.nodes[k + 1]

    def point(s):
        return b + s * (b - a) if s < 0 else b + s * (c - b)

    res = scipy.optimize.minimize_scalar(
        lambda s: -functional.value(point(s)), bounds=(-1.0, 1.0), method="bounded", options={"xatol": 1e-12}
    )
    x = point(res.x) if -res.fun >= path.values[k] else b.copy()
    g = functional.gradient(x)
    gn = np.linalg.norm(g)
    for _ in range(opts.refine_iters):
        if gn <= opts.tol_grad:
            break
        dx, *_ = np.linalg.lstsq(_fd_hessian(functional, x), g, rcond=None)
        xn = x - dx
        gnew = functional.gradient(xn)
        gnn = np.linalg.norm(gnew)
        if not gnn < gn:
            break
        x, g, gn = xn, gnew, gnn
    return x, float(gn)


def mountain_pass(functional, anchor_e, opts=None, start=None):
    """Locate a mountain-pass critical point between ``start`` (default 0) and ``anchor_e``."""
    opts = opts or MountainPassOptions()
    if opts.nodes < 8:
        raise PreconditionError(f"mountain_pass needs at least 8 nodes, got {opts.nodes}")
    dim = functional.dim
    e = as_vector(anchor_e, dim, "anchor_e")
    a = np.zeros(dim) if start is None else as_vector(start, dim, "start")
    if np.array_equal(a, e):
        raise GeometryError("anchors coincide; there is no path to relax")

    s = np.linspace(0.0, 1.0, opts.nodes)[:, None]
    nodes = a[None, :] + s * (e - a)[None, :]
    nodes[0], nodes[-1] = a, e
    path = PathState(nodes, np.array([functional.value(p) for p in nodes]))
    anchor_max = max(path.values[0], path.values[-1])
    if path.values[1:-1].max() <= anchor_max + opts.geometry_tol:
        raise GeometryError(
            f"no barrier: path maximum {path.values[1:-1].max():.6g} does not exceed anchor value {anchor_max:.6g}"
        )

    history = [path.max_value]
    for _ in range(opts.max_iters):
        k = 1 + int(np.argmax(path.values[1:-1]))
        x = path.nodes[k]
        g = functional.gradient(x)
        tau = path.nodes[k + 1] - path.nodes[k - 1]
        tau /= np.linalg.norm(tau)
        gp = g - (g @ tau) * tau
        gpn = np.linalg.norm(gp)
        if gpn <= opts.relax_tol:
            break
        mesh = float(np.mean(path.segment_lengths()))
        d = -gp / gpn
        t = opts.step_fraction * mesh
        moved = False
        for _ in range(40):
            xn = x + t * d
            vn = functional.value(xn)
            if vn < path.values[k]:
                moved = True
                break
            t *= 0.5
        if not moved:
            break
        nodes = path.nodes.copy()
        vals = path.values.copy()
        nodes[k], vals[k] = xn, vn
        eq = _equidistribute(nodes)
        eq_vals = np.array([functional.value(p) for p in eq])
        eq_vals[0], eq_vals[-1] = vals[0], vals[-1]
        # keep the relaxation monotone: re-meshing may not raise the path maximum
        if eq_vals.max() <= vals.max():
            nodes, vals = eq, eq_vals
        path = PathState(nodes, vals)
        history.append(path.max_value)

    k = 1 + int(np.argmax(path.values[1:-1]))
    x_c, gn = _refine(functional, path, k, opts)
    value = functional.value(x_c)
    if gn > opts.tol_grad:
        raise StallError(f"saddle refinement stalled at |grad| = {gn:.3e}")
    if value < anchor_max - opts.geometry_tol:
        raise StallError(f"refinement left the barrier: critical value {value:.6g} below anchors {anchor_max:.6g}")
    return MountainPassReport(
        critical_point=x_c,
        critical_value=float(value),
        gradient_norm=gn,
        path_history_length=len(history),
        barrier_estimate=path.max_value,
        anchor_values=(float(path.values[0]), float(path.values[-1])),
        path_history=history,
        path=path,
    )


# -- deformation ---------------------------------------------------------------


@dataclass
class DeformationTrace:
    times: np.ndarray
    points: np.ndarray
    values: np.ndarray
    frozen: bool


def deform(functional, frozen, x, steps=20, speed=0.5, tol_grad=1e-12, max_halvings=60):
    """Discrete deformation eta(t, x) on t in [0, 1] by normalized gradient descent.

    The trace is constant when ``frozen(x)`` holds or x is critical. Otherwise
    each of the ``steps`` time increments moves at most ``speed * dt`` along
    the normalized negative gradient, halving until the value strictly drops;
    a point where no decrease is representable is held in place.
    """
    if steps < 1:
        raise PreconditionError("deform needs steps >= 1")
    x = as_vector(x, functional.dim, "x")
    times = np.linspace(0.0, 1.0, steps + 1)
    v0 = functional.value(x)
    if frozen(x) or np.linalg.norm(functional.gradient(x)) <= tol_grad:
        pts = np.repeat(x[None, :], steps + 1, axis=0)
        return DeformationTrace(times, pts, np.full(steps + 1, v0), True)

    dt = 1.0 / steps
    pts, vals = [x.copy()], [v0]
    p, v = x.copy(), v0
    for i in range(steps):
        g = functional.gradient(p)
        gn = np.linalg.norm(g)
        if gn > tol_grad:
            ds = speed * dt
            for _ in range(max_halvings):
                pn = p - ds * g / gn
                vn = functional.value(pn)
                if vn < v:
                    p, v = pn, vn
                    break
                ds *= 0.5
            else:
                if i == 0:
                    raise NumericalError("deformation step control failed to decrease the functional")
        pts.append(p.copy())
        vals.append(v)
    return DeformationTrace(times, np.array(pts), np.array(vals), False)


# -- injectivity audit ----------------------------------------------------------


def make_injectivity_functional(op, x1, x2):
    """psi(x) = 1/2 |F(x + x1) - F(x2)|^2."""
    x1 = as_vector(x1, op.dim_in, "x1")
    x2 = as_vector(x2, op.dim_in, "x2")
    return LeastSquaresFunctional(op.shifted(x1), op.eval(x2))


def estimate_alpha(op, x1, tols=None, n_random=32, seed=0):
    """Lower constant alpha with |F'(x1)h| >= alpha|h| (regular) or |F'''(x1)h^3| >= alpha|h|^3.

    Returns ``(alpha, branch)``; the cubic constant is a minimum over sampled
    unit directions.
    """
    tols = tols or Tolerances()
    x1 = as_vector(x1, op.dim_in, "x1")
    smin = sigma_min(op.jacobian(x1))
    if smin > tols.tol_bij:
        return smin, "regular"
    dirs = sample_directions(op.dim_in, n_random, seed)
    return float(min(np.linalg.norm(op.d3_dir(x1, h)) for h in dirs)), "degenerate"


def barrier_bound(op, x1, rho, alpha_x1=None, branch=None):
    """Lower bound for psi on the sphere |x| = rho around x1.

    Regular branch: alpha^2 rho^2 / 8. Degenerate branch: alpha^2 rho^6 / 8,
    from psi(x) >= 1/2 (1 - 1/2)^2 alpha^2 |x|^6.
    """
    if not rho > 0:
        raise PreconditionError(f"rho must be positive, got {rho}")
    if alpha_x1 is None or branch is None:
        est, est_branch = estimate_alpha(op, x1)
        alpha_x1 = est if alpha_x1 is None else alpha_x1
        branch = est_branch if branch is None else branch
    if not alpha_x1 > 0:
        raise PreconditionError(f"alpha must be positive, got {alpha_x1}")
    power = {"regular": 2, "degenerate": 6}.get(branch)
    if power is None:
        raise PreconditionError(f"unknown branch {branch!r}")
    return 0.125 * alpha_x1**2 * rho**power


NOT_A_COLLISION = "NotACollision"
COLLISION_CONSISTENT = "CollisionConsistent"
HYPOTHESIS_CONTRADICTION = "HypothesisContradiction"


@dataclass
class AuditReport:
    verdict: str
    gap: float
    critical_point: Optional[np.ndarray] = None  # in the original coordinates, x* + x1
    psi_value: Optional[float] = None
    gradient_norm: Optional[float] = None
    classification: Optional[object] = None
    alpha: Optional[float] = None
    branch: Optional[str] = None
    rho: Optional[float] = None
    bound: Optional[float] = None
    bound_other_power: Optional[float] = None
    mountain_pass: Optional[MountainPassReport] = None

    def to_dict(self):
        d = {"verdict": self.verdict, "gap": self.gap}
        if self.critical_point is not None:
            d.update(
                critical_point=[float(v) for v in self.critical_point],
                psi_value=self.psi_value,
                gradient_norm=self.gradient_norm,
                classification=self.classification.to_dict(),
                alpha=self.alpha,
                branch=self.branch,
                rho=self.rho,
                barrier_bound=self.bound,
                barrier_bound_other_power=self.bound_other_power,
                mountain_pass=self.mountain_pass.to_dict(),
            )
        return d


def injectivity_audit(op, x1, x2, opts=None, tols=None):
    """Check a candidate collision F(x1) = F(x2) by the mountain-pass construction.

    Without a collision the report is ``NotACollision`` with the gap
    |F(x1) - F(x2)|. Otherwise psi is searched for a mountain-pass critical
    point; one with psi > 0 where F is Regular or Degenerate would contradict
    the invertibility hypotheses (``HypothesisContradiction``), while a
    HypothesisViolated point explains the collision (``CollisionConsistent``).
    """
    tols = tols or Tolerances()
    x1 = as_vector(x1, op.dim_in, "x1")
    x2 = as_vector(x2, op.dim_in, "x2")
    if np.array_equal(x1, x2):
        raise DegenerateInputError("x1 and x2 coincide")
    gap = float(np.linalg.norm(op.eval(x1) - op.eval(x2)))
    if gap > tols.tol_res:
        return AuditReport(NOT_A_COLLISION, gap)

    psi = make_injectivity_functional(op, x1, x2)
    e = x2 - x1
    mp = mountain_pass(psi, e, opts)
    z = mp.critical_point + x1
    cls = classify_critical(op, z, tols)
    if mp.critical_value > tols.tol_res and cls.tag in (REGULAR, DEGENERATE):
        verdict = HYPOTHESIS_CONTRADICTION
    else:
        verdict = COLLISION_CONSISTENT
    en = float(np.linalg.norm(e))
    rho = 0.5 * min(en, en**2)
    alpha, branch = estimate_alpha(op, x1, tols)
    bound = other = None
    if alpha > 0:
        bound = barrier_bound(op, x1, rho, alpha, branch)
        other = barrier_bound(op, x1, rho, alpha, "degenerate" if branch == "regular" else "regular")
    return AuditReport(
        verdict,
        gap,
        critical_point=z,
        psi_value=mp.critical_value,
        gradient_norm=mp.gradient_norm,
        classification=cls,
        alpha=alpha,
        branch=branch,
        rho=rho,
        bound=bound,
        bound_other_power=other,
        mountain_pass=mp,
    )
