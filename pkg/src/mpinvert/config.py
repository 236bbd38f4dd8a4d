"""JSON problem configuration shared by the CLI commands."""

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import numpy as np

from . import hammerstein as hm
from .errors import ConfigError
from .functional import two_well
from .inverter import SolverOptions, Tolerances
from .operators import BUILTIN_NAMES, builtin

FUNCTIONAL_PROBLEMS = {"two-well": 1, "two-well-2d": 2}

_SOLVER_KEYS = {"tol_res", "tol_grad", "tol_bij", "tol_zero", "tol_switch", "seed", "starts", "max_iters"}
_HAMMERSTEIN_KEYS = {"kernel", "alpha", "beta", "table", "grid_n", "rule", "perturbation"}


@dataclass
class HammersteinConfig:
    kernel: str = "constant"
    alpha: Optional[float] = None
    beta: Optional[float] = None
    table: Optional[list] = None
    grid_n: int = 32
    rule: str = hm.TRAPEZOID
    perturbation: Any = "zero"

    def grid(self):
        if int(self.grid_n) < 4:
            raise ConfigError(f"hammerstein grid_n must be >= 4, got {self.grid_n}")
        return hm.make_grid(int(self.grid_n), self.rule)

    def kernel_spec(self, grid):
        if self.kernel == "constant":
            return hm.constant_kernel(1.0 if self.alpha is None else float(self.alpha))
        if self.kernel == "affine":
            a = 1.0 if self.alpha is None else float(self.alpha)
            b = 2.0 if self.beta is None else float(self.beta)
            if not 0 < a <= b:
                raise ConfigError("affine kernel needs 0 < alpha <= beta")
            return hm.affine_kernel(a, b - a)
        if self.kernel == "tabulated":
            if self.table is None:
                raise ConfigError("tabulated kernel needs a 'table' matrix")
            k = hm.tabulated_kernel(self.table, grid)
            if self.alpha is not None or self.beta is not None:
                k = hm.KernelSpec(
                    k.k,
                    k.alpha if self.alpha is None else float(self.alpha),
                    k.beta if self.beta is None else float(self.beta),
                    k.name,
                )
            return k
        raise ConfigError(f"unknown kernel {self.kernel!r}; choose constant, affine or tabulated")

    def perturbation_spec(self):
        p = self.perturbation
        if p in (None, "zero"):
            return hm.zero_perturbation()
        if p == "quartic":
            return hm.quartic_perturbation()
        if isinstance(p, dict) and p.get("kind") == "quartic":
            return hm.quartic_perturbation(float(p.get("c", 0.01)))
        raise ConfigError(f"unknown perturbation {p!r}")


@dataclass
class ProblemConfig:
    problem: str
    target: Any = None
    x0: Optional[list] = None
    solver: dict = field(default_factory=dict)
    hammerstein: Optional[HammersteinConfig] = None
    x1: Optional[list] = None
    x2: Optional[list] = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        if "problem" not in data:
            raise ConfigError("config needs a 'problem' key")
        solver = dict(data.get("solver") or {})
        unknown = set(solver) - _SOLVER_KEYS
        if unknown:
            raise ConfigError(f"unknown solver keys: {sorted(unknown)}")
        hcfg = None
        if data["problem"] == "hammerstein":
            hdata = dict(data.get("hammerstein") or {})
            unknown = set(hdata) - _HAMMERSTEIN_KEYS
            if unknown:
                raise ConfigError(f"unknown hammerstein keys: {sorted(unknown)}")
            hcfg = HammersteinConfig(**hdata)
        known = {"problem", "target", "x0", "solver", "hammerstein", "x1", "x2"}
        return cls(
            problem=data["problem"],
            target=data.get("target"),
            x0=data.get("x0"),
            solver=solver,
            hammerstein=hcfg,
            x1=data.get("x1"),
            x2=data.get("x2"),
            extra={k: v for k, v in data.items() if k not in known},
        )

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    @property
    def is_functional(self):
        return self.problem in FUNCTIONAL_PROBLEMS

    def solver_options(self, seed=None):
        s = dict(self.solver)
        tol_keys = {k: float(s.pop(k)) for k in list(s) if k.startswith("tol_")}
        try:
            opts = SolverOptions(
                tols=Tolerances(**tol_keys),
                seed=int(seed if seed is not None else s.get("seed", 0)),
                starts=int(s.get("starts", 8)),
                max_iters=int(s.get("max_iters", 200)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad solver options: {exc}") from None
        return opts.validate()

    def operator(self):
        if self.problem == "hammerstein":
            h = self.hammerstein or HammersteinConfig()
            grid = h.grid()
            return hm.assemble_operator(h.kernel_spec(grid), h.perturbation_spec(), grid)
        if self.is_functional:
            raise ConfigError(f"problem {self.problem!r} is a functional, not an operator")
        if self.problem not in BUILTIN_NAMES:
            raise ConfigError(f"unknown problem {self.problem!r}")
        return builtin(self.problem)

    def functional(self):
        if not self.is_functional:
            raise ConfigError(f"problem {self.problem!r} is not a benchmark functional")
        return two_well(FUNCTIONAL_PROBLEMS[self.problem])

    def target_vector(self, op):
        t = self.target
        if t is None:
            raise ConfigError("config needs a 'target'")
        if isinstance(t, dict):
            if "x_star" not in t:
                raise ConfigError("target object must carry 'x_star'")
            return op.eval(self._function_values(t["x_star"], op, t.get("value", 1.0)))
        return self._function_values(t, op, None)

    def start_vector(self, op):
        if self.x0 is None:
            return None
        return self._function_values(self.x0, op, None)

    def _function_values(self, spec, op, value):
        n = op.dim_in
        if isinstance(spec, str):
            if self.problem != "hammerstein":
                raise ConfigError(f"function shorthand {spec!r} needs a hammerstein problem")
            nodes = (self.hammerstein or HammersteinConfig()).grid().nodes
            if spec == "constant":
                return np.full(n, float(value))
            if spec == "affine":
                return 1.0 + nodes
            raise ConfigError(f"unknown function shorthand {spec!r}")
        if isinstance(spec, (int, float)):
            return np.full(n, float(spec))
        v = np.asarray(spec, dtype=float)
        if v.shape != (n,):
            raise ConfigError(f"vector has {v.size} entries, problem dimension is {n}")
        return v

    def to_dict(self, seed=None):
        d = {
            "problem": self.problem,
            "target": self.target,
            "x0": self.x0,
            "x1": self.x1,
            "x2": self.x2,
        }
        if not self.is_functional:
            opts = self.solver_options(seed)
            d["solver"] = {**asdict(opts.tols), "seed": opts.seed, "starts": opts.starts, "max_iters": opts.max_iters}
        if self.hammerstein is not None:
            d["hammerstein"] = asdict(self.hammerstein)
        d.update(self.extra)
        return d
