"""
Capacitary Densities

Numerical cost of forcing a field from the value z down to 0 on B_1:

- pcap_numeric: relative p-capacity of B_1 in B_R (local, |S|^p density)
- phi_local: phi(z) for a local homogenized density, R -> infinity limit
- phi_approx: phi_{eps,T,R}(z) with the nonlocal energy at scale eps
- phi_nonlocal: phi^T_{NL,alpha}(z) as the decreasing R-limit at eps = alpha,
  optionally swept upward in T

All solves go through the frozen-cell minimizer; only optimal values are
asserted, never minimizers.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..energy import SERIAL, EnergyParams, ExecutionContext
from ..errors import GridError
from ..fields import GridDomain, GridFunction
from ..homogenize import extrapolate_inverse, fhom_density
from ..kernels import KernelSpec, truncate_kernel
from ..minimize import (
    ConstraintMask,
    Density,
    LocalDirichletObjective,
    NonlocalObjective,
    PowerNormDensity,
    SolveReport,
    SolverOptions,
    minimize_energy,
)
from .closed_form import capacity_exponent, radial_profile


logger = logging.getLogger(__name__)


@dataclass
class CapacityValue:
    value: float
    grad_norm: float
    h: float
    report: Optional[SolveReport] = None


@dataclass
class CapacitaryResult:
    """A capacitary density value with the schedule it was extracted from"""
    z: np.ndarray
    value: float
    grad_norm: float
    epsilon: Optional[float] = None
    T: Optional[float] = None
    R: Optional[float] = None
    schedule_values: List[Tuple[float, float]] = field(default_factory=list)
    inverse_fit: Optional[float] = None           # plain a + b/R robustness fit
    monotone: bool = True
    under_resolved: bool = False
    family: List["CapacitaryResult"] = field(default_factory=list)
    reports: List[SolveReport] = field(default_factory=list)

    def row(self) -> dict:
        row = {f"z{i + 1}": float(c) for i, c in enumerate(self.z)}
        row.update(epsilon=self.epsilon, T=self.T, R=self.R, value=self.value,
                   grad_norm=self.grad_norm, under_resolved=self.under_resolved)
        return row


@dataclass
class LipschitzProbe:
    constant: float
    ratios: List[float]


@dataclass
class ConvergenceTable:
    rows: List[dict]
    reference: float
    gaps_decreasing: bool


def _radius(domain: GridDomain) -> np.ndarray:
    return np.linalg.norm(domain.centers(), axis=-1)


def _capacity_domain(d: int, R: float, h: float) -> GridDomain:
    """Box around B_R with two spare cell layers beyond the outer sphere."""
    half = (math.ceil(R / h - 1e-9) + 2) * h
    return GridDomain.cube(d, half, h)


def _ramp(radius: np.ndarray, inner: float, outer: float) -> np.ndarray:
    return np.clip((radius - inner) / (outer - inner), 0.0, 1.0)


def _nonincreasing(values: Sequence[float], tol: float) -> bool:
    return all(b <= a + tol * max(abs(a), 1e-300) for a, b in zip(values, values[1:]))


def pcap_numeric(d: int, p: float, R: float, h: float,
                 options: Optional[SolverOptions] = None) -> CapacityValue:
    """
    Relative p-capacity of B_1 in B_R by forward-difference minimization.

    Cells with |x| <= 1 are frozen to 1, cells with |x| >= R to 0; the start
    is the linear radial ramp.
    """
    domain = _capacity_domain(d, R, h)
    radius = _radius(domain)
    constraints = ConstraintMask.empty(domain, 1)
    constraints = constraints.freeze(radius <= 1.0, 1.0).freeze(radius >= R, 0.0)
    init = GridFunction(domain, (1.0 - _ramp(radius, 1.0, R))[..., None])
    init = init.with_values(constraints.apply(init.values))

    objective = LocalDirichletObjective(domain, PowerNormDensity(p))
    _, report = minimize_energy(objective, constraints, init, options=options)
    logger.info(f"cap_{p:g}(B_1, B_{R:g}) in d={d}, h={h:g}: {report.objective:.10g}")
    return CapacityValue(report.objective, report.grad_norm, h, report)


def profile_energy(d: int, p: float, R: float, h: float) -> float:
    """Discrete Dirichlet energy of the exact radial potential, no optimization."""
    domain = _capacity_domain(d, R, h)
    values = radial_profile(d, p, R)(_radius(domain))[..., None]
    return LocalDirichletObjective(domain, PowerNormDensity(p)).value(values)


def vectorial_capacity_check(d: int, p: float, R: float, z: Sequence[float],
                             h: float) -> Tuple[float, float]:
    """
    Energy of z (x) potential against |z|^p times the scalar energy.

    Returns:
        (vector-valued energy, |z|^p x scalar energy)
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    domain = _capacity_domain(d, R, h)
    scalar = radial_profile(d, p, R)(_radius(domain))
    density = PowerNormDensity(p)
    vector_energy = LocalDirichletObjective(domain, density, len(z)).value(scalar[..., None] * z)
    scalar_energy = LocalDirichletObjective(domain, density).value(scalar[..., None])
    return vector_energy, float(np.linalg.norm(z)) ** p * scalar_energy


def _zero_result(z: np.ndarray, **kwargs) -> CapacitaryResult:
    return CapacitaryResult(z=z, value=0.0, grad_norm=0.0, **kwargs)


def _fit_limit(d: int, p: float, R_schedule: Sequence[float], values: Sequence[float]
               ) -> Tuple[float, float]:
    """Capacity-tail extrapolation, clipped to [0, min(values)], and the plain 1/R fit."""
    tail = extrapolate_inverse(R_schedule, values, capacity_exponent(d, p))
    plain = extrapolate_inverse(R_schedule, values, 1.0)
    return max(0.0, min(tail, min(values))), plain


def phi_local(
    density: Density,
    z: Sequence[float],
    R_schedule: Sequence[float],
    h: float,
    d: int,
    options: Optional[SolverOptions] = None,
    execution: Optional[ExecutionContext] = None,
) -> CapacitaryResult:
    """
    phi(z) = inf of the density energy over fields vanishing on B_1 and equal
    to z outside B_R, extrapolated in R with the capacity tail R^{-(d-p)/(p-1)}.
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    execution = execution or SERIAL
    options = options or SolverOptions()
    if not np.any(z):
        return _zero_result(z, R=float(R_schedule[-1]))

    def solve(item):
        index, R = item
        logger.info(f"Processing {index + 1}/{len(R_schedule)}: local density R={R:g}")
        domain = _capacity_domain(d, R, h)
        radius = _radius(domain)
        constraints = ConstraintMask.empty(domain, len(z))
        constraints = constraints.freeze(radius <= 1.0, 0.0).freeze(radius >= R, z)
        init = GridFunction(domain, _ramp(radius, 1.0, R)[..., None] * z)
        objective = LocalDirichletObjective(domain, density, len(z))
        _, report = minimize_energy(objective, constraints, init, options=options)
        return report

    reports = execution.sweep(solve, list(enumerate(R_schedule)))
    values = [r.objective for r in reports]
    monotone = _nonincreasing(values, 10.0 * options.tol)
    if not monotone:
        logger.warning(f"phi_local not monotone in R (under-resolved?): {values}")
    value, plain = _fit_limit(d, density.p, R_schedule, values)
    return CapacitaryResult(
        z=z, value=value, grad_norm=max(r.grad_norm for r in reports),
        R=float(R_schedule[-1]),
        schedule_values=list(zip(map(float, R_schedule), values)),
        inverse_fit=plain, monotone=monotone, reports=reports,
    )


def _truncated(k: KernelSpec, T: float) -> KernelSpec:
    if k.support_radius is not None and T >= k.support_radius:
        return k
    return truncate_kernel(k, T)


def phi_approx(
    k: KernelSpec,
    eps: float,
    T: float,
    R: float,
    z: Sequence[float],
    h: float,
    options: Optional[SolverOptions] = None,
    execution: Optional[ExecutionContext] = None,
    keep_minimizer: bool = False,
) -> Union[CapacitaryResult, Tuple[CapacitaryResult, GridFunction]]:
    """
    phi_{eps,T,R}(z) = min F_eps^T(v, B_R) over v = 0 on B_1 and v = z within
    eps T of the sphere of radius R (and outside B_R).

    Iterates are clamped to |v_j| <= 10 |z| / sqrt(m) per component, a box
    inside the ball |v| <= 10 |z| of every cell.

    Raises:
        GridError: R < 2 + T eps
        KernelError: T <= r0
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    if R < 2.0 + T * eps:
        raise GridError(f"phi_approx needs R >= 2 + T eps = {2.0 + T * eps:g}: R={R}")
    kernel = _truncated(k, T)
    under_resolved = eps / h < 4.0
    if under_resolved:
        logger.warning(f"phi_approx under-resolved: eps/h = {eps / h:.3g} < 4")

    domain = GridDomain.cube(k.d, R, h).ball(np.zeros(k.d), R)
    if not np.any(z):
        result = _zero_result(z, epsilon=eps, T=T, R=R, under_resolved=under_resolved)
        if keep_minimizer:
            return result, GridFunction.zeros(domain, len(z), exterior=z)
        return result

    radius = _radius(domain)
    active = domain.active
    inner = active & (radius <= 1.0)
    outer = active & (radius >= R - eps * T)
    constraints = ConstraintMask.empty(domain, len(z)).freeze(inner, 0.0).freeze(outer, z)

    values = _ramp(radius, 1.0, R - eps * T)[..., None] * z
    values[~active] = 0.0
    init = GridFunction(domain, constraints.apply(values), exterior=z)

    params = EnergyParams.build(eps, T, h, k.d, half=kernel.even, execution=execution)
    objective = NonlocalObjective(domain, kernel, params, exterior=z)
    options = options or SolverOptions()
    if options.clamp is None:
        options = replace(options, clamp=10.0 * float(np.linalg.norm(z)) / math.sqrt(len(z)))
    minimizer, report = minimize_energy(objective, constraints, init, options=options)
    logger.info(f"phi(eps={eps:g}, T={T:g}, R={R:g}) at |z|={np.linalg.norm(z):.4g}: "
                f"{report.objective:.10g}")
    result = CapacitaryResult(z=z, value=report.objective, grad_norm=report.grad_norm,
                              epsilon=eps, T=T, R=R, under_resolved=under_resolved,
                              reports=[report])
    if keep_minimizer:
        return result, minimizer
    return result


def phi_nonlocal(
    k: KernelSpec,
    alpha: float,
    T: float,
    z: Sequence[float],
    R_schedule: Sequence[float],
    h: float,
    T_schedule: Optional[Sequence[float]] = None,
    options: Optional[SolverOptions] = None,
    execution: Optional[ExecutionContext] = None,
) -> CapacitaryResult:
    """
    phi^T_{NL,alpha}(z) as the decreasing limit in R of phi_{alpha,T,R}(z).

    With a T-schedule the increasing family in T is computed as well and its
    largest member is reported as the estimate of phi_{NL,alpha}(z).
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    execution = execution or SERIAL
    options = options or SolverOptions()

    if T_schedule:
        family = [phi_nonlocal(k, alpha, t, z, R_schedule, h, None, options, execution)
                  for t in T_schedule]
        values = [r.value for r in family]
        increasing = all(b >= a - 10.0 * options.tol * max(abs(b), 1e-300)
                         for a, b in zip(values, values[1:]))
        if not increasing:
            logger.warning(f"phi_NL not monotone in T: {values}")
        return CapacitaryResult(
            z=z, value=max(values), grad_norm=max(r.grad_norm for r in family),
            epsilon=alpha, T=float(T_schedule[-1]), R=float(R_schedule[-1]),
            schedule_values=list(zip(map(float, T_schedule), values)),
            monotone=increasing, family=family,
        )

    def solve(item):
        index, R = item
        logger.info(f"Processing {index + 1}/{len(R_schedule)}: nonlocal density T={T:g} R={R:g}")
        return phi_approx(k, alpha, T, R, z, h, options, execution)

    results = execution.sweep(solve, list(enumerate(R_schedule)))
    values = [r.value for r in results]
    if not np.any(z):
        return _zero_result(z, epsilon=alpha, T=T, R=float(R_schedule[-1]),
                            schedule_values=list(zip(map(float, R_schedule), values)))
    monotone = _nonincreasing(values, 10.0 * options.tol)
    if not monotone:
        logger.warning(f"phi_(alpha,T,R) not monotone in R: {values}")
    value, plain = _fit_limit(k.d, k.p, R_schedule, values)
    return CapacitaryResult(
        z=z, value=value, grad_norm=max(r.grad_norm for r in results),
        epsilon=alpha, T=T, R=float(R_schedule[-1]),
        schedule_values=list(zip(map(float, R_schedule), values)),
        inverse_fit=plain, monotone=monotone,
        under_resolved=any(r.under_resolved for r in results),
        reports=[rep for r in results for rep in r.reports],
    )


def lipschitz_probe(density: Callable[[np.ndarray], float],
                    pairs: Sequence[Tuple[Sequence[float], Sequence[float]]],
                    p: float) -> LipschitzProbe:
    """
    max |value(w) - value(z)| / ((|z|^{p-1} + |w|^{p-1}) |w - z|) over the pairs.

    Coincident pairs are skipped; values are cached per distinct argument.
    """
    cache = {}

    def value(v: np.ndarray) -> float:
        key = tuple(np.round(v, 15))
        if key not in cache:
            cache[key] = float(density(v))
        return cache[key]

    ratios = []
    for z, w in pairs:
        z = np.asarray(z, dtype=float).reshape(-1)
        w = np.asarray(w, dtype=float).reshape(-1)
        distance = float(np.linalg.norm(w - z))
        if distance == 0.0:
            logger.debug("Skipping coincident Lipschitz pair")
            continue
        weight = np.linalg.norm(z) ** (p - 1) + np.linalg.norm(w) ** (p - 1)
        ratios.append(abs(value(w) - value(z)) / (weight * distance))
    return LipschitzProbe(max(ratios) if ratios else 0.0, ratios)


def rotation_probe(density: Callable[[np.ndarray], float], z: Sequence[float],
                   Q: np.ndarray) -> Tuple[float, float]:
    """(value(z), value(Qz)); equal for kernels invariant under rotations of the target."""
    z = np.asarray(z, dtype=float).reshape(-1)
    return float(density(z)), float(density(np.asarray(Q, dtype=float) @ z))


def capterm_convergence(
    k: KernelSpec,
    T: float,
    z: Sequence[float],
    eps_schedule: Sequence[float],
    R_of_eps: Union[Sequence[float], Callable[[float], float]],
    h_ratio: float = 4.0,
    reference: Optional[float] = None,
    reference_R_schedule: Sequence[float] = (2.0, 3.0, 4.0),
    reference_h: float = 0.125,
    options: Optional[SolverOptions] = None,
    execution: Optional[ExecutionContext] = None,
) -> ConvergenceTable:
    """
    phi_{eps,T,R_eps}(z) along a decreasing eps-schedule against phi^T(z).

    The grid follows h = eps / h_ratio. The reference phi^T(z) is computed with
    the homogenized density of the truncated kernel unless given.
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    options = options or SolverOptions()
    if callable(R_of_eps):
        radii = [float(R_of_eps(e)) for e in eps_schedule]
    else:
        radii = [float(R) for R in R_of_eps]
    if len(radii) != len(eps_schedule):
        raise GridError("R_of_eps must give one radius per eps")

    if reference is None:
        if np.any(z):
            density = fhom_density(_truncated(k, T))
            reference = phi_local(density, z, reference_R_schedule, reference_h, k.d,
                                  options, execution).value
        else:
            reference = 0.0

    rows = []
    for index, (eps, R) in enumerate(zip(eps_schedule, radii)):
        logger.info(f"Processing {index + 1}/{len(eps_schedule)}: eps={eps:g}, R={R:g}")
        h = eps / h_ratio
        result = phi_approx(k, eps, T, R, z, h, options, execution)
        rows.append({
            "epsilon": float(eps), "R": R, "h": h, "value": result.value,
            "grad_norm": result.grad_norm, "reference": reference,
            "gap": abs(result.value - reference), "under_resolved": result.under_resolved,
        })

    gaps = [row["gap"] for row in rows[-3:]]
    decreasing = all(b <= a for a, b in zip(gaps, gaps[1:]))
    return ConvergenceTable(rows, reference, decreasing)
