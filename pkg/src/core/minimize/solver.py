"""
Constrained Minimizer

Minimizes a grid objective over the unfrozen cells with scipy's bounded
L-BFGS-B. Frozen cells are eliminated from the unknowns, an optional clamp
|value| <= bound acts as box constraints, and exponents p < 2 are handled
by continuation in the regularization mu.

Features:
- Exact elimination of Dirichlet (frozen) cells
- Scale-free stopping test on the projected gradient
- Restart rounds until the stopping test holds
- mu-continuation with per-stage objectives reported at mu = 0
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from ..errors import SolverError
from ..fields import GridDomain, GridFunction
from .objectives import Density, LocalDirichletObjective, Objective


logger = logging.getLogger(__name__)


@dataclass
class SolverOptions:
    """Solver configuration"""
    tol: float = 1e-6                 # relative projected-gradient tolerance
    max_iterations: int = 5000        # per restart round
    max_rounds: int = 5
    mu_stages: int = 4                # continuation stages for p < 2
    mu_start: float = 0.1             # first mu relative to the difference scale
    mu_final: float = 1e-8            # last mu relative to the difference scale
    memory: int = 20                  # L-BFGS history
    clamp: Optional[float] = None     # |value| bound per component

    def validate(self) -> None:
        """Validate configuration parameters"""
        if not (0.0 < self.tol < 1.0):
            raise ValueError(f"tol must lie in (0, 1): {self.tol}")
        if self.max_iterations < 1 or self.max_rounds < 1:
            raise ValueError("max_iterations and max_rounds must be >= 1")
        if self.mu_stages < 0:
            raise ValueError(f"mu_stages must be >= 0: {self.mu_stages}")
        if self.clamp is not None and self.clamp < 0.0:
            raise ValueError(f"clamp must be nonnegative: {self.clamp}")


@dataclass
class ConstraintMask:
    """Frozen cells and the values they are held at"""
    frozen: np.ndarray                    # bool, box shape
    frozen_values: np.ndarray             # (*shape, m); only frozen entries matter

    @classmethod
    def empty(cls, domain: GridDomain, m: int) -> "ConstraintMask":
        return cls(np.zeros(domain.shape, dtype=bool), np.zeros(tuple(domain.shape) + (m,)))

    def freeze(self, cells: np.ndarray, value) -> "ConstraintMask":
        """Freeze cells at a constant m-vector or at per-cell values."""
        frozen = self.frozen | cells
        values = self.frozen_values.copy()
        value = np.asarray(value, dtype=float)
        if value.shape == values.shape:
            values[cells] = value[cells]
        else:
            values[cells] = value
        return ConstraintMask(frozen, values)

    def validate(self, domain: GridDomain) -> None:
        if self.frozen.shape != tuple(domain.shape):
            raise SolverError(f"frozen mask shape {self.frozen.shape} does not match {domain.shape}")
        if np.any(self.frozen & ~domain.active):
            raise SolverError("Frozen cells must be active")
        if not np.all(np.isfinite(self.frozen_values[self.frozen])):
            raise SolverError("Frozen values must be finite")

    def apply(self, values: np.ndarray) -> np.ndarray:
        out = values.copy()
        out[self.frozen] = self.frozen_values[self.frozen]
        return out

    def scaled(self, t: float) -> "ConstraintMask":
        return ConstraintMask(self.frozen.copy(), t * self.frozen_values)


@dataclass
class SolveReport:
    """Outcome of a constrained minimization"""
    objective: float
    grad_norm: float                  # relative projected-gradient norm
    iterations: int
    mu_path: List[float] = field(default_factory=list)
    converged: bool = False
    stage_objectives: List[float] = field(default_factory=list)
    convex: bool = True
    free_cells: int = 0
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "grad_norm": self.grad_norm,
            "iterations": self.iterations,
            "mu_path": list(self.mu_path),
            "converged": self.converged,
            "convex": self.convex,
        }


def default_mu_schedule(objective: Objective, values: np.ndarray,
                        options: Optional[SolverOptions] = None) -> List[float]:
    """
    mu_k = mu_start 2^{-k} scale for the configured stages, then mu_final scale,
    with scale the mean difference magnitude of the initial field. Exponents
    p >= 2 need no regularization.
    """
    options = options or SolverOptions()
    if objective.p >= 2.0:
        return [0.0]
    scale = objective.difference_scale(values)
    if scale <= 0.0:
        scale = 1.0
    stages = [options.mu_start * 2.0 ** (-k) * scale for k in range(options.mu_stages)]
    return stages + [options.mu_final * scale]


def _projected_gradient(x: np.ndarray, g: np.ndarray, bound: Optional[np.ndarray]) -> np.ndarray:
    if bound is None:
        return g
    pg = g.copy()
    at_lower = (x <= -bound) & (g > 0.0)
    at_upper = (x >= bound) & (g < 0.0)
    pg[at_lower | at_upper] = 0.0
    return pg


def _relative_norm(objective: Objective, values: np.ndarray, energy: float,
                   pg: np.ndarray) -> float:
    """
    |P grad| relative to p E / |u|, the gradient size of a p-homogeneous
    energy along the ray through u.
    """
    norm = float(np.linalg.norm(pg))
    if norm == 0.0:
        return 0.0
    u_norm = float(np.linalg.norm(values[objective.domain.active]))
    reference = objective.p * abs(energy) / u_norm if u_norm > 0.0 else 0.0
    if reference <= 1e-14:
        return norm / 1e-14
    return norm / reference


def _solve_stage(objective: Objective, values: np.ndarray, free: np.ndarray,
                 mu: float, options: SolverOptions, bound: Optional[np.ndarray]
                 ) -> Tuple[np.ndarray, float, int, bool, str]:
    work = values.copy()
    shape = work[free].shape
    x = work[free].ravel().copy()
    bounds = None
    if bound is not None:
        bounds = optimize.Bounds(-bound, bound)
        x = np.clip(x, -bound, bound)
        work[free] = x.reshape(shape)

    energy0, grad0 = objective.value_and_gradient(work, mu)
    if not math.isfinite(energy0):
        raise SolverError(f"Non-finite initial objective at mu={mu:g}")
    fscale = energy0 if energy0 > 0.0 else 1.0

    def fun(x: np.ndarray):
        work[free] = x.reshape(shape)
        energy, grad = objective.value_and_gradient(work, mu)
        if not math.isfinite(energy):
            raise SolverError(f"Non-finite objective during minimization at mu={mu:g}")
        return energy / fscale, grad[free].ravel() / fscale

    relative = _relative_norm(objective, work, energy0,
                              _projected_gradient(x, grad0[free].ravel(), bound))
    if relative <= options.tol:
        return work, relative, 0, True, "initial point stationary"

    iterations = 0
    message = ""
    converged = False
    for round_index in range(options.max_rounds):
        result = optimize.minimize(
            fun, x, jac=True, method="L-BFGS-B", bounds=bounds,
            options={
                "maxiter": options.max_iterations,
                "maxcor": options.memory,
                "ftol": 1e-15,
                "gtol": 1e-14,
                "maxls": 40,
            },
        )
        iterations += int(result.nit)
        x = result.x
        work[free] = x.reshape(shape)
        energy, grad = objective.value_and_gradient(work, mu)
        pg = _projected_gradient(x, grad[free].ravel(), bound)
        relative = _relative_norm(objective, work, energy, pg)
        message = str(result.message)
        logger.debug(f"  round {round_index + 1}: {result.nit} iterations, "
                     f"E={energy:.10g}, |Pg|rel={relative:.2e} ({message})")
        if relative <= options.tol:
            converged = True
            break
        if result.nit == 0:
            break

    if energy > energy0 * (1.0 + 1e-8) + 1e-300:
        raise SolverError(f"Objective increased from {energy0:.10g} to {energy:.10g}")
    return work, relative, iterations, converged, message


def minimize_energy(
    objective: Objective,
    constraints: ConstraintMask,
    init: GridFunction,
    tol: Optional[float] = None,
    mu_schedule: Optional[Sequence[float]] = None,
    options: Optional[SolverOptions] = None,
) -> Tuple[GridFunction, SolveReport]:
    """
    Minimize an objective over the unfrozen active cells.

    Args:
        objective: Energy evaluator with gradient
        constraints: Frozen cells and values
        init: Starting field; must agree with the constraints on frozen cells
        tol: Relative projected-gradient tolerance (overrides options.tol)
        mu_schedule: Decreasing regularization sequence (default_mu_schedule when None)
        options: Solver configuration

    Returns:
        (minimizer candidate, SolveReport)

    Raises:
        SolverError: Inconsistent start, divergence or non-finite values
    """
    options = options or SolverOptions()
    if tol is not None:
        options = replace(options, tol=tol)
    options.validate()

    domain = objective.domain
    constraints.validate(domain)
    values = init.values.copy()
    frozen = constraints.frozen
    if np.any(values[frozen] != constraints.frozen_values[frozen]):
        raise SolverError("Initial field does not respect the frozen values")

    if not objective.convex:
        logger.warning("Non-convex objective: the result is a local minimizer candidate only")

    free = domain.active & ~frozen
    n_free = int(free.sum())
    if n_free == 0:
        energy = objective.value(values)
        report = SolveReport(energy, 0.0, 0, [0.0], True, [energy], objective.convex, 0,
                             "all cells frozen")
        return objective.field(values), report

    if mu_schedule is None:
        mu_schedule = default_mu_schedule(objective, values, options)
    mu_schedule = [float(mu) for mu in mu_schedule]
    if any(mu < 0.0 for mu in mu_schedule):
        raise SolverError(f"mu schedule must be nonnegative: {mu_schedule}")

    bound = None
    if options.clamp is not None:
        bound = np.full(n_free * objective.m, options.clamp)

    total_iterations = 0
    stage_objectives: List[float] = []
    relative = math.inf
    converged = False
    message = ""
    for stage, mu in enumerate(mu_schedule):
        values, relative, iterations, converged, message = _solve_stage(
            objective, values, free, mu, options, bound)
        total_iterations += iterations
        exact = objective.value(values)
        stage_objectives.append(exact)
        logger.info(f"Stage {stage + 1}/{len(mu_schedule)}: mu={mu:.3g}, {iterations} iterations, "
                    f"E={exact:.10g}, |Pg|rel={relative:.2e}")

    report = SolveReport(
        objective=stage_objectives[-1],
        grad_norm=relative,
        iterations=total_iterations,
        mu_path=mu_schedule,
        converged=converged,
        stage_objectives=stage_objectives,
        convex=objective.convex,
        free_cells=n_free,
        message=message,
    )
    if not converged:
        logger.warning(f"Solver stopped at |Pg|rel={relative:.2e} > tol={options.tol:g} ({message})")
    return objective.field(values), report


def minimize_local_dirichlet(
    density: Density,
    domain: GridDomain,
    constraints: ConstraintMask,
    tol: Optional[float] = None,
    init: Optional[GridFunction] = None,
    options: Optional[SolverOptions] = None,
) -> Tuple[GridFunction, SolveReport]:
    """
    Minimize sum_x h^d density(grad_h u(x)) with forward differences under frozen cells.

    The default start is zero on free cells and the frozen values elsewhere;
    the component count follows the constraint values.
    """
    if init is None:
        m = constraints.frozen_values.shape[-1]
        init = GridFunction(domain, constraints.apply(np.zeros(tuple(domain.shape) + (m,))))
    objective = LocalDirichletObjective(domain, density, init.m)
    return minimize_energy(objective, constraints, init, tol=tol, options=options)
