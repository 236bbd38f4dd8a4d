"""Numerical evidence for the Palais-Smale hypothesis.

Neither probe proves anything: ray growth only shows coercivity along sampled
directions, and the Palais-Smale search only reports the escape sequences it
happened to find within its budget.
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import ConfigError, NumericalError
from .functional import LeastSquaresFunctional
from .operators import as_vector


def default_radii():
    return np.geomspace(1.0, 1e3, 16)


def fit_growth_exponent(radii, values, decades=1.0):
    """Slope of log(values) against log(radii) over the top ``decades`` of radii."""
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    ok = np.isfinite(values) & (values > 0)
    r, v = radii[ok], values[ok]
    if r.size < 2:
        return float("nan")
    top = r >= r.max() / 10**decades
    if top.sum() < 2:
        top = np.argsort(r)[-2:]
    slope, _ = np.polyfit(np.log(r[top]), np.log(v[top]), 1)
    return float(slope)


@dataclass
class GrowthReport:
    directions: np.ndarray
    radii: np.ndarray
    fitted_exponent: np.ndarray
    min_exponent: float
    coercive_flag: bool
    warnings: List[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "kind": "evidence",
            "radii": self.radii.tolist(),
            "fitted_exponent": self.fitted_exponent.tolist(),
            "min_exponent": self.min_exponent,
            "coercive_flag": self.coercive_flag,
            "n_directions": int(self.directions.shape[0]),
            "warnings": list(self.warnings),
        }


def ray_growth(op, y, n_directions=64, radii=None, seed=0):
    """Fit the growth exponent of phi_y(r d) in r along seeded unit directions d."""
    radii = default_radii() if radii is None else np.sort(np.asarray(radii, dtype=float))
    if radii.size < 2 or radii[0] <= 0 or radii[-1] / radii[0] < 1e3 * (1 - 1e-12):
        raise ConfigError("radii must be positive and span at least three decades")
    if n_directions < 1:
        raise ConfigError("n_directions must be >= 1")
    f = LeastSquaresFunctional(op, as_vector(y, op.dim_out, "y"))
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_directions, op.dim_in))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

    warnings = []
    table = np.empty((n_directions, radii.size))
    with np.errstate(over="ignore", invalid="ignore"):
        for i, d in enumerate(dirs):
            for j, r in enumerate(radii):
                try:
                    table[i, j] = f.phi(r * d)
                except NumericalError:
                    table[i, j] = np.nan
                if not np.isfinite(table[i, j]):
                    table[i, j] = np.nan
    n_bad = int(np.isnan(table).sum())
    if n_bad:
        warnings.append(f"{n_bad} evaluations overflowed and were clipped from the fit")
    exps = np.array([fit_growth_exponent(radii, row) for row in table])
    min_exp = float(np.nanmin(exps)) if np.any(np.isfinite(exps)) else float("nan")
    last = table[:, -1]
    first = table[:, 0]
    # overflowed values at the largest radius count as growth
    last_min = float(np.nanmin(np.where(np.isnan(last), np.inf, last)))
    coercive = bool(np.isfinite(min_exp) and min_exp > 0 and last_min > np.nanmax(first))
    return GrowthReport(dirs, radii, exps, min_exp, coercive, warnings)


@dataclass(frozen=True)
class PSProbeOptions:
    radius: float = 1e3  # starts are placed on this sphere
    box: float = 1e4  # iterates are clipped to |x_i| <= box
    n_starts: int = 16
    max_iters: int = 200
    grad_tol: float = 1e-6
    norm_blowup: float = 1e2
    phi_bound: float = 1e6
    seed: int = 0

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class PSProbeReport:
    candidate_sequences: list
    violation_found: bool
    max_norm_at_small_gradient: float
    best_candidate: tuple = None
    options: PSProbeOptions = None

    def to_dict(self):
        best = None
        if self.best_candidate is not None:
            p, v, g = self.best_candidate
            best = {"point": [float(c) for c in p], "phi": v, "grad_norm": g}
        return {
            "kind": "evidence",
            "violation_found": self.violation_found,
            "max_norm_at_small_gradient": self.max_norm_at_small_gradient,
            "best_candidate": best,
            "n_sequences": len(self.candidate_sequences),
            "options": None if self.options is None else self.options.to_dict(),
        }


def _grad_norm_sq_gradient(f, x, g):
    # d/dx 1/2 |grad phi|^2 = Hess(phi) grad phi, by a directional difference
    gn = np.linalg.norm(g)
    if gn == 0.0:
        return np.zeros_like(x)
    eps = 1e-6 * max(1.0, np.linalg.norm(x)) / gn
    return (f.grad(x + eps * g) - f.grad(x - eps * g)) / (2 * eps)


def ps_probe(functional, sampler_opts=None):
    """Search for a Palais-Smale sequence that escapes to infinity.

    From seeded starts on the sphere of radius ``radius``, minimize
    |grad phi|^2 / 2 with normalized backtracking steps inside the box and
    record every iterate. A violation is a recorded point with
    |grad phi| <= grad_tol, phi <= phi_bound and |x| >= norm_blowup.
    """
    o = sampler_opts or PSProbeOptions()
    f = functional
    rng = np.random.default_rng(o.seed)
    starts = rng.standard_normal((o.n_starts, f.dim))
    starts *= o.radius / np.linalg.norm(starts, axis=1, keepdims=True)

    sequences = []
    best, best_norm = None, 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for x in starts:
            seq = []
            try:
                g = f.grad(x)
                G = 0.5 * float(g @ g)
            except NumericalError:
                sequences.append(seq)
                continue
            for _ in range(o.max_iters):
                phi = f.phi(x)
                gn = float(np.sqrt(2 * G))
                seq.append((x.copy(), float(phi), gn))
                if gn <= o.grad_tol and phi <= o.phi_bound:
                    xn_ = float(np.linalg.norm(x))
                    if xn_ >= best_norm:
                        best, best_norm = (x.copy(), float(phi), gn), xn_
                if gn == 0.0:
                    break
                try:
                    dG = _grad_norm_sq_gradient(f, x, g)
                except NumericalError:
                    break
                dn = np.linalg.norm(dG)
                if not np.isfinite(dn) or dn == 0.0:
                    break
                step = 0.5 * max(1.0, np.linalg.norm(x))
                moved = False
                for _ in range(60):
                    xn = np.clip(x - step * dG / dn, -o.box, o.box)
                    try:
                        gnew = f.grad(xn)
                    except NumericalError:
                        step *= 0.5
                        continue
                    Gn = 0.5 * float(gnew @ gnew)
                    if np.isfinite(Gn) and Gn < G:
                        x, g, G, moved = xn, gnew, Gn, True
                        break
                    step *= 0.5
                if not moved:
                    break
            sequences.append(seq)
    violation = best is not None and best_norm >= o.norm_blowup
    return PSProbeReport(sequences, bool(violation), best_norm, best, o)
