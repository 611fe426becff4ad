"""
Homogenized Density

f_hom(S) through the asymptotic cell problem on Q_R (unit scale, affine
boundary layer of width 1) and, for convex kernels, through the closed
formula f_hom(S) = integral of f(xi, S xi) over R^d.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from ..energy import SERIAL, EnergyParams, ExecutionContext
from ..errors import GridError, KernelError
from ..fields import GridDomain, GridFunction
from ..kernels import KernelSpec, effective_radius, sphere_abs_moment, sphere_area
from ..minimize import (
    ConstraintMask,
    Density,
    NonlocalObjective,
    PowerNormDensity,
    QuadratureDensity,
    SolveReport,
    SolverOptions,
    minimize_energy,
)


logger = logging.getLogger(__name__)


@dataclass
class QuadratureOptions:
    """Midpoint quadrature over the kernel support"""
    resolution: int = 48              # cells per axis on [-reach, reach]^d
    bound_samples: int = 8            # random unit S for the lower growth bound
    seed: int = 0

    def validate(self) -> None:
        if self.resolution < 4 or self.resolution % 2:
            raise ValueError(f"resolution must be an even integer >= 4: {self.resolution}")


@dataclass
class QuadratureValue:
    value: float
    error: float                      # |I(n) - I(n/2)|


@dataclass
class CellProblemValue:
    value: float
    grad_norm: float
    report: SolveReport
    minimizer: Optional[GridFunction] = None


@dataclass
class CellProblemResult:
    """f_hom(S) along an R-schedule"""
    S: np.ndarray
    R_schedule: List[float]
    h: float
    per_R_values: List[float]
    grad_norms: List[float]
    extrapolated: float
    convex_formula_value: Optional[float] = None
    reports: List[SolveReport] = field(default_factory=list)


@dataclass
class FhomBounds:
    m0: float
    M0: float


def _as_matrix(k: KernelSpec, S) -> np.ndarray:
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.shape != (k.m, k.d):
        raise KernelError(f"S must be an m x d = {k.m} x {k.d} matrix: {S.shape}")
    return S


def midpoint_nodes(k: KernelSpec, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
    """Cell centers of [-reach, reach]^d inside the reach ball, with equal weights."""
    reach = effective_radius(k)
    step = 2.0 * reach / resolution
    axis = -reach + (np.arange(resolution) + 0.5) * step
    grid = np.stack(np.meshgrid(*([axis] * k.d), indexing="ij"), axis=-1).reshape(-1, k.d)
    grid = grid[np.linalg.norm(grid, axis=1) <= reach]
    return grid, np.full(len(grid), step ** k.d)


def _midpoint_value(k: KernelSpec, S: np.ndarray, resolution: int, lower: bool = False) -> float:
    nodes, weights = midpoint_nodes(k, resolution)
    z = nodes @ S.T
    if lower:
        values = k.envelope_m(nodes) * np.linalg.norm(z, axis=1) ** k.p
    else:
        values = k.eval(nodes, z)
    return float(np.dot(weights, values))


def fhom_convex_formula(k: KernelSpec, S, options: Optional[QuadratureOptions] = None) -> QuadratureValue:
    """
    Integral of f(xi, S xi) by the tensor midpoint rule, with a halving error estimate.

    Raises:
        KernelError: Non-convex kernel
    """
    if not k.convex_in_z:
        raise KernelError("The convex homogenization formula needs a kernel convex in z")
    options = options or QuadratureOptions()
    options.validate()
    S = _as_matrix(k, S)
    if not np.any(S):
        return QuadratureValue(0.0, 0.0)
    fine = _midpoint_value(k, S, options.resolution)
    coarse = _midpoint_value(k, S, options.resolution // 2)
    return QuadratureValue(fine, abs(fine - coarse))


def radial_moment(k: KernelSpec, power: float) -> float:
    """Integral of M(|xi|) |xi|^power r^{d-1} dr over (0, reach)."""
    upper = k.support_radius if k.support_radius is not None else math.inf
    value, _ = integrate.quad(lambda r: k.radial_profile_M(r) * r ** (k.d - 1 + power),
                              0.0, upper, limit=200)
    return value


def fhom_density(k: KernelSpec, options: Optional[QuadratureOptions] = None) -> Density:
    """
    The convex homogenized density as a local integrand.

    Isotropic radial kernels with m = 1 (or p = 2) reduce to c |S|^p with
    c = (integral of |theta_1|^p over the sphere) x radial moment; other kernels
    use quadrature nodes.
    """
    if not k.convex_in_z:
        raise KernelError("Homogenized density by formula needs a kernel convex in z")
    if k.radial and k.isotropic_in_z and (k.m == 1 or k.p == 2.0):
        coefficient = sphere_abs_moment(k.d, k.p) * radial_moment(k, k.p)
        return PowerNormDensity(k.p, coefficient)
    options = options or QuadratureOptions()
    nodes, weights = midpoint_nodes(k, options.resolution)
    return QuadratureDensity(k, nodes, weights)


def boundary_layer(domain: GridDomain, width: float = 1.0) -> np.ndarray:
    """Cells whose center is closer than `width` to the complement of the box."""
    centers = domain.centers()
    lower = np.asarray(domain.origin)
    upper = np.asarray(domain.upper)
    distance = np.minimum(centers - lower, upper - centers).min(axis=-1)
    return distance < width


def fhom_cell(
    k: KernelSpec,
    S,
    R: float,
    h: float,
    options: Optional[SolverOptions] = None,
    execution: Optional[ExecutionContext] = None,
    keep_minimizer: bool = False,
) -> CellProblemValue:
    """
    (1/R^d) min F_1(u, Q_R) over fields equal to S x on the width-1 boundary layer.

    Only pairs inside Q_R interact.

    Raises:
        GridError: R < 4 or h not dividing R
    """
    if R < 4.0:
        raise GridError(f"Cell problems need R >= 4: {R}")
    S = _as_matrix(k, S)
    domain = GridDomain.cube(k.d, R / 2.0, h)
    affine = GridFunction.affine(domain, S)
    layer = boundary_layer(domain)
    constraints = ConstraintMask.empty(domain, k.m).freeze(layer, affine.values)

    params = EnergyParams.for_kernel(k, 1.0, h, execution=execution)
    objective = NonlocalObjective(domain, k, params)
    minimizer, report = minimize_energy(objective, constraints, affine, options=options)
    value = report.objective / R ** k.d
    logger.info(f"f_hom cell R={R:g} h={h:g}: {value:.10g} (|Pg|rel={report.grad_norm:.2e})")
    return CellProblemValue(value, report.grad_norm, report, minimizer if keep_minimizer else None)


def extrapolate_inverse(R_schedule: Sequence[float], values: Sequence[float],
                        exponent: float = 1.0) -> float:
    """Least-squares fit a + b R^{-exponent}; returns a (the last value for one point)."""
    if len(values) == 1:
        return float(values[0])
    x = np.asarray(R_schedule, dtype=float) ** (-exponent)
    slope, intercept = np.polyfit(x, np.asarray(values, dtype=float), 1)
    return float(intercept)


def fhom_cell_schedule(
    k: KernelSpec,
    S,
    R_schedule: Sequence[float],
    h: float,
    options: Optional[SolverOptions] = None,
    execution: Optional[ExecutionContext] = None,
    quadrature: Optional[QuadratureOptions] = None,
) -> CellProblemResult:
    """Cell problems along an increasing R-schedule, with the 1/R extrapolation."""
    S = _as_matrix(k, S)
    execution = execution or SERIAL
    R_schedule = [float(R) for R in R_schedule]
    if any(b <= a for a, b in zip(R_schedule, R_schedule[1:])):
        raise GridError(f"R schedule must be increasing: {R_schedule}")

    def solve(item: Tuple[int, float]) -> CellProblemValue:
        index, R = item
        logger.info(f"Processing {index + 1}/{len(R_schedule)}: cell problem R={R:g}")
        return fhom_cell(k, S, R, h, options, execution)

    results = execution.sweep(solve, list(enumerate(R_schedule)))
    values = [r.value for r in results]
    convex_value = fhom_convex_formula(k, S, quadrature).value if k.convex_in_z else None
    return CellProblemResult(
        S=S,
        R_schedule=R_schedule,
        h=h,
        per_R_values=values,
        grad_norms=[r.grad_norm for r in results],
        extrapolated=max(0.0, extrapolate_inverse(R_schedule, values)),
        convex_formula_value=convex_value,
        reports=[r.report for r in results],
    )


def _unit_samples(k: KernelSpec, count: int, seed: int) -> List[np.ndarray]:
    samples = []
    for i in range(k.m):
        for j in range(k.d):
            E = np.zeros((k.m, k.d))
            E[i, j] = 1.0
            samples.append(E)
    rng = np.random.default_rng(seed)
    for _ in range(count):
        S = rng.standard_normal((k.m, k.d))
        samples.append(S / np.linalg.norm(S))
    return samples


def fhom_bounds(k: KernelSpec, options: Optional[QuadratureOptions] = None) -> FhomBounds:
    """
    Growth constants m0 |S|^p <= f_hom(S) <= M0 |S|^p.

    M0 is the integral of M(xi)|xi|^p. m0 is the smallest sampled value over
    unit S of the convex formula, or of the lower-envelope integral for
    non-convex kernels.
    """
    options = options or QuadratureOptions()
    options.validate()
    if k.radial:
        M0 = sphere_area(k.d) * radial_moment(k, k.p)
    else:
        nodes, weights = midpoint_nodes(k, options.resolution)
        M0 = float(np.dot(weights, k.envelope_M(nodes) * np.linalg.norm(nodes, axis=1) ** k.p))

    lowest = math.inf
    for S in _unit_samples(k, options.bound_samples, options.seed):
        if k.convex_in_z:
            value = _midpoint_value(k, S, options.resolution)
        else:
            value = _midpoint_value(k, S, options.resolution, lower=True)
        lowest = min(lowest, value)
    logger.info(f"f_hom bounds for {k!r}: m0={lowest:.6g}, M0={M0:.6g}")
    return FhomBounds(lowest, M0)
