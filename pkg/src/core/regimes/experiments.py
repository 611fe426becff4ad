"""
Regime Experiments

Quantitative pieces of the perforated-domain limit:

- DensityTable: capacitary densities sampled on a z-grid, extended by
  p-homogeneity (and rotations for isotropic kernels)
- limit_functional: the limit energy of a classified regime
- negligibility_check: energy cost of supercritical pinning against its bound
- recovery_construction: pasting rescaled capacitary minimizers into holes
- riemann_sum_density: period-cell sums of a density against its integral
- sandwich_check: pinned minimum between the free and fully pinned minima
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..capacity import phi_approx, phi_local, phi_nonlocal
from ..energy import ExecutionContext, EnergyParams, Infeasible, nonlocal_energy, pinned_energy
from ..errors import GridError, InvariantViolation, RegimeError
from ..fields import (
    GridDomain,
    GridFunction,
    Perforation,
    apply_pinning,
    cell_average,
    pinned_mask,
)
from ..homogenize import boundary_layer, fhom_density
from ..kernels import KernelSpec, effective_radius, sphere_area, truncate_kernel
from ..minimize import (
    ConstraintMask,
    Density,
    NonlocalObjective,
    SolveReport,
    SolverOptions,
    minimize_energy,
    one_sided_gradient,
)
from .scaling import RegimeClass, RegimeTag, ScalingLaw, classify_regime


logger = logging.getLogger(__name__)

DEFAULT_MAGNITUDES = (0.25, 0.5, 1.0, 2.0)
_SNAP = 1e-9


def _restricted(k: KernelSpec, T: Optional[float]) -> Tuple[KernelSpec, float]:
    """Kernel cut at T, with T defaulting to the support or the effective radius."""
    if T is None:
        T = k.support_radius if k.support_radius is not None else effective_radius(k)
    if k.support_radius is not None and T >= k.support_radius:
        return k, T
    return truncate_kernel(k, T), T


def _unit(m: int) -> np.ndarray:
    e = np.zeros(m)
    e[0] = 1.0
    return e


# Density tables


@dataclass
class DensityTable:
    """
    Density values at |z| in `magnitudes` along unit `directions`.

    Evaluation uses value(z) = c(z/|z|) |z|^p with c the mean normalized
    value along the nearest sampled direction (a single mean for isotropic
    tables).
    """
    p: float
    directions: np.ndarray            # (n_dir, m) unit vectors
    magnitudes: np.ndarray            # (n_mag,)
    values: np.ndarray                # (n_dir, n_mag)
    isotropic: bool = False
    name: str = "phi"

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], float], p: float, m: int,
                      magnitudes: Sequence[float] = DEFAULT_MAGNITUDES,
                      directions: Optional[np.ndarray] = None, isotropic: bool = False,
                      name: str = "phi") -> "DensityTable":
        if directions is None:
            directions = _unit(m)[None, :] if isotropic else np.vstack([np.eye(m), -np.eye(m)])
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        directions = directions / np.linalg.norm(directions, axis=1, keepdims=True)
        magnitudes = np.asarray(magnitudes, dtype=float)
        values = np.array([[fn(t * e) for t in magnitudes] for e in directions])
        return cls(p, directions, magnitudes, values, isotropic, name)

    @classmethod
    def power_law(cls, coefficient: float, p: float, m: int = 1, name: str = "phi") -> "DensityTable":
        """Exact c |z|^p, e.g. from a closed-form capacity."""
        return cls(p, _unit(m)[None, :], np.ones(1), np.array([[coefficient]]), True, name)

    @property
    def m(self) -> int:
        return self.directions.shape[1]

    @property
    def coefficients(self) -> np.ndarray:
        """Per-direction mean of value / |z|^p."""
        return np.mean(self.values / self.magnitudes[None, :] ** self.p, axis=1)

    @property
    def homogeneity_spread(self) -> float:
        """Largest max/min ratio of value / |z|^p along a direction."""
        normalized = self.values / self.magnitudes[None, :] ** self.p
        low = normalized.min(axis=1)
        if np.any(low <= 0.0):
            return math.inf if np.any(normalized > 0.0) else 1.0
        return float(np.max(normalized.max(axis=1) / low))

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.ndim == 0 or z.shape[-1] != self.m:
            z = z[..., None]
        norm = np.linalg.norm(z, axis=-1)
        coefficients = self.coefficients
        if self.isotropic or len(coefficients) == 1:
            c = np.full(norm.shape, float(np.mean(coefficients)))
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                unit = np.where(norm[..., None] > 0.0, z / norm[..., None], 0.0)
            c = coefficients[np.argmax(unit @ self.directions.T, axis=-1)]
        return c * norm ** self.p

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for e, row in zip(self.directions, self.values):
            for t, value in zip(self.magnitudes, row):
                entry = {f"z{i + 1}": float(t * c) for i, c in enumerate(e)}
                entry.update(magnitude=float(t), value=float(value), density=self.name)
                rows.append(entry)
        return pd.DataFrame(rows)


def build_density_table(
    k: KernelSpec,
    regime: RegimeClass,
    R_schedule: Sequence[float],
    h: float,
    magnitudes: Sequence[float] = DEFAULT_MAGNITUDES,
    directions: Optional[np.ndarray] = None,
    T: Optional[float] = None,
    options: Optional[SolverOptions] = None,
    execution: Optional[ExecutionContext] = None,
) -> DensityTable:
    """
    phi (local regime, through the homogenized density) or phi_NL,alpha
    (nonlocal regime) on the z-grid.

    Raises:
        RegimeError: Regime without a capacitary term
    """
    isotropic = k.m == 1 or k.isotropic_in_z
    if regime.tag == RegimeTag.LOCAL_CAPACITARY:
        density = fhom_density(k)

        def fn(z):
            return phi_local(density, z, R_schedule, h, k.d, options, execution).value

        name = "phi"
    elif regime.tag == RegimeTag.NONLOCAL_CAPACITARY:
        _, T = _restricted(k, T)

        def fn(z):
            return phi_nonlocal(k, regime.alpha, T, z, R_schedule, h,
                                options=options, execution=execution).value

        name = "phi_nl"
    else:
        raise RegimeError(f"Regime {regime.tag.value} has no capacitary density")
    table = DensityTable.from_function(fn, k.p, k.m, magnitudes, directions, isotropic, name)
    logger.info(f"Density table {name}: coefficients {table.coefficients}, "
                f"homogeneity spread {table.homogeneity_spread:.4f}")
    return table


# Limit energy


def limit_functional(
    k: KernelSpec,
    regime: RegimeClass,
    u: GridFunction,
    table: Optional[DensityTable] = None,
    fhom: Optional[Density] = None,
) -> float:
    """
    Limit energy of u on its domain.

    Bulk term: sum over active cells of h^d f_hom(grad u), with backward
    differences on the last layer along each axis, so an affine field on a
    box returns f_hom(S) |Omega|. Capacitary regimes add
    beta^{d-p} sum h^d density(u). Trivial collapse is 0 for u = 0 and +inf
    otherwise.

    Raises:
        RegimeError: Uncharacterized regime, or a missing density table
    """
    if regime.tag == RegimeTag.UNCHARACTERIZED:
        raise RegimeError("No limit energy is known for the uncharacterized regime")
    if regime.tag == RegimeTag.TRIVIAL_COLLAPSE:
        return 0.0 if not np.any(u.active_values()) else math.inf
    if regime.has_reaction and table is None:
        raise RegimeError(f"Regime {regime.tag.value} needs a density table")

    fhom = fhom or fhom_density(k)
    S, covered = one_sided_gradient(u.values, u.domain.active, u.domain.h)
    bulk = u.domain.cell_volume * float(np.sum(fhom.value(S[covered])))
    if not regime.has_reaction:
        return bulk
    reaction = u.domain.cell_volume * float(np.sum(table(u.active_values())))
    return bulk + regime.reaction_coefficient(k.d, k.p) * reaction


# Supercritical pinning


@dataclass
class NegligibilityTable:
    rows: List[dict]
    constant: float
    bounded: bool                     # every ratio within twice the constant
    strict: bool = False              # every ratio within the constant itself

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)


def _hole_count(domain: GridDomain, mask: np.ndarray, delta: float) -> int:
    if not mask.any():
        return 0
    ids = np.rint(domain.centers()[mask] / delta).astype(np.int64)
    return len(np.unique(ids, axis=0))


def negligibility_check(
    k: KernelSpec,
    law: ScalingLaw,
    u: Callable[[np.ndarray], np.ndarray],
    eps_schedule: Sequence[float],
    lower: Sequence[float] = (0.0, 0.0),
    upper: Sequence[float] = (1.0, 1.0),
    h_ratio: float = 4.0,
    T: Optional[float] = None,
    execution: Optional[ExecutionContext] = None,
) -> NegligibilityTable:
    """
    Energy gained by zeroing u on the holes, against r^d / (eps^p delta^d).

    Holes below grid resolution still pin the cell holding their center, so
    the bound uses the effective radius of the pinned cells when it exceeds r.
    The constant is the first ratio gap/bound; the check passes when every
    later ratio stays within twice that constant. Whether the gaps also stay
    under constant x bound is reported separately as `strict`.

    Raises:
        RegimeError: Law not in the unconstrained regime with alpha = +inf
    """
    regime = classify_regime(law)
    if not (math.isinf(law.alpha) and regime.tag == RegimeTag.UNCONSTRAINED):
        raise RegimeError(f"Law '{law.name}' is not supercritical ({regime.tag.value})")
    kernel, T = _restricted(k, T)
    d = k.d
    ball_volume = sphere_area(d) / d

    rows = []
    for index, eps in enumerate(eps_schedule):
        scales = law.scales(eps)
        h = eps / h_ratio
        logger.info(f"Processing {index + 1}/{len(eps_schedule)}: eps={eps:g}, "
                    f"delta={scales.delta:.4g}, r={scales.r:.4g}, h={h:.4g}")
        domain = GridDomain.box(lower, upper, h)
        field_ = GridFunction.from_callable(domain, u)
        P = Perforation(scales.delta, scales.r)
        params = EnergyParams.build(eps, T, h, d, half=kernel.even, execution=execution)

        free = nonlocal_energy(field_, None, kernel, params)
        pinned_field, count = apply_pinning(field_, P)
        pinned = float(pinned_energy(pinned_field, None, kernel, params, P))
        holes = _hole_count(domain, pinned_mask(domain, P), P.delta)
        per_hole = count * domain.cell_volume / holes if holes else 0.0
        r_eff = max(scales.r, (per_hole / ball_volume) ** (1.0 / d))
        bound = r_eff ** d / (eps ** k.p * scales.delta ** d)
        gap = pinned - free
        rows.append({
            "epsilon": eps, "delta": scales.delta, "r": scales.r, "r_eff": r_eff, "h": h,
            "holes": holes, "pinned_cells": count, "energy_free": free,
            "energy_pinned": pinned, "gap": gap, "bound": bound,
            "ratio": gap / bound if bound > 0.0 else 0.0,
        })

    constant = rows[0]["ratio"] if rows else 0.0
    for row in rows:
        row["within_constant"] = bool(row["ratio"] <= constant * (1.0 + 1e-12))
        row["within_factor_2"] = bool(row["ratio"] <= 2.0 * constant + 1e-300)
    bounded = all(row["within_factor_2"] for row in rows)
    strict = all(row["within_constant"] for row in rows)
    if not bounded:
        logger.warning(f"Negligibility ratio exceeds twice the first-point constant {constant:.4g}")
    return NegligibilityTable(rows, constant, bounded, strict)


# Recovery by pasting capacitary minimizers


@dataclass
class RecoveryBreakdown:
    bulk: float = 0.0
    perforation: float = 0.0
    cross: float = 0.0
    total: float = 0.0
    holes: int = 0
    template_value: float = 0.0
    identity_gap: float = 0.0
    annulus_data: List[np.ndarray] = field(default_factory=list)
    # energy against the limit functional on the interior period cells
    region_cells: int = 0
    region_energy: float = 0.0
    limit: float = 0.0
    slack: float = 0.0

    @property
    def relative_slack(self) -> float:
        if math.isnan(self.slack):
            return math.nan
        scale = max(abs(self.limit), abs(self.region_energy))
        return abs(self.slack) / scale if scale > 0.0 else 0.0

    def to_dict(self) -> dict:
        return {"bulk": self.bulk, "perforation": self.perforation, "cross": self.cross,
                "total": self.total, "holes": self.holes,
                "template_value": self.template_value, "identity_gap": self.identity_gap,
                "region_cells": self.region_cells, "region_energy": self.region_energy,
                "limit": self.limit, "slack": self.slack,
                "relative_slack": self.relative_slack}


def _integral_index(value: float, what: str) -> int:
    nearest = round(value)
    if abs(value - nearest) > _SNAP * max(1.0, abs(value)):
        raise GridError(f"{what} is not commensurate with the grid: {value!r}")
    return int(nearest)


def _lattice_centers(domain: GridDomain, delta: float, margin: float) -> np.ndarray:
    """Lattice points delta i whose cube of half-side `margin` fits in the box."""
    lower = np.asarray(domain.origin) + margin
    upper = np.asarray(domain.upper) - margin
    first = np.ceil(lower / delta - _SNAP).astype(int)
    last = np.floor(upper / delta + _SNAP).astype(int)
    if np.any(last < first):
        return np.zeros((0, domain.d))
    axes = [np.arange(f, l + 1) for f, l in zip(first, last)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, domain.d) * delta


def _period_cells(domain: GridDomain, delta: float, centers: Sequence[np.ndarray]) -> np.ndarray:
    """Cells of the period cubes delta i + [-delta/2, delta/2)^d lying wholly inside the box."""
    lower = np.asarray(domain.origin)
    upper = np.asarray(domain.upper)
    x = domain.centers()
    cells = np.zeros(domain.shape, dtype=bool)
    half = 0.5 * delta
    for center in centers:
        if np.any(center - half < lower - _SNAP) or np.any(center + half > upper + _SNAP):
            continue
        cells |= np.all(np.abs(x - center) < half, axis=-1)
    return cells & domain.active


def _limit_comparison(kernel: KernelSpec, u: GridFunction, w: GridFunction, cells: np.ndarray,
                      eps: float, P: Perforation, template_value: float,
                      params: EnergyParams) -> Tuple[float, float, float]:
    """
    (energy of w, limit energy of u, slack) on the interior period cells.

    The capacitary term uses the template density with weight r^{d-p} / delta^d.
    """
    d, p = kernel.d, kernel.p
    if not cells.any() or d <= p or not kernel.convex_in_z:
        return math.nan, math.nan, math.nan
    region = u.domain.with_mask(cells)
    energy = nonlocal_energy(w, region, kernel, params)
    values = u.values.copy()
    values[~cells] = 0.0
    beta = (P.r ** (d - p) / P.delta ** d) ** (1.0 / (d - p))
    regime = RegimeClass(RegimeTag.NONLOCAL_CAPACITARY, eps / P.r, beta, "recovery geometry")
    table = DensityTable.power_law(template_value, p, kernel.m)
    limit = limit_functional(kernel, regime, GridFunction(region, values), table)
    return energy, limit, energy - limit


def recovery_construction(
    k: KernelSpec,
    law: Optional[ScalingLaw],
    u: GridFunction,
    eps: float,
    T: Optional[float] = None,
    perforation: Optional[Perforation] = None,
    options: Optional[SolverOptions] = None,
    execution: Optional[ExecutionContext] = None,
) -> Tuple[GridFunction, RecoveryBreakdown]:
    """
    Pin u on the holes by pasting z_i v(. / r) into each ball B_rho(delta i).

    v is the minimizer of the approximating capacitary problem at scale eps/r
    on B_{rho/r} for the datum e_1, z_i the mean of u on the annulus
    rho/2 < |x - delta i| < rho and rho = delta/8. Holes whose ball leaves the
    box are zeroed on their pinned cells only.

    On the period cubes lying wholly inside the box, the energy of the pinned
    field is also compared with the limit functional of u, the capacitary term
    taken from the template with weight r^{d-p} / delta^d; the difference is
    reported as the slack (NaN when no cube fits or the kernel is not convex).

    Args:
        k: Kernel (scalar, or isotropic in z)
        law: Scaling law giving (delta, r) at eps; ignored when perforation is set
        u: Field on a box aligned with the grid
        eps: Interaction scale
        T: Truncation (default: kernel support or effective radius)
        perforation: Explicit (delta, r)

    Returns:
        (pinned field, energy breakdown)

    Raises:
        GridError: Scales not resolvable on the grid of u
        RegimeError: Vector kernel that is not isotropic in z
        InvariantViolation: Constructed field violates the pinning
    """
    if perforation is None:
        if law is None:
            raise RegimeError("recovery_construction needs a scaling law or a perforation")
        scales = law.scales(eps)
        perforation = Perforation(scales.delta, scales.r)
    P = perforation
    dom = u.domain
    h = dom.h
    kernel, T = _restricted(k, T)
    rho = P.delta / 8.0

    if eps / h < 4.0 or P.r / h < 4.0:
        raise GridError(f"Unresolvable scales: eps/h = {eps / h:.3g}, r/h = {P.r / h:.3g} (need >= 4)")
    _integral_index(P.delta / (8.0 * h), "delta / (8 h)")
    for a in dom.origin:
        _integral_index(a / h, "grid origin / h")
    if rho < 2.0 * P.r + T * eps:
        raise GridError(f"Annulus radius delta/8 = {rho:.4g} below 2 r + T eps = {2.0 * P.r + T * eps:.4g}")
    if k.m > 1 and not k.isotropic_in_z:
        raise RegimeError("Pasting a scalar profile needs a kernel isotropic in z")

    if u.is_zero():
        return u.copy(), RecoveryBreakdown()

    template, v = phi_approx(k, eps / P.r, T, rho / P.r, _unit(k.m), h / P.r,
                             options, execution, keep_minimizer=True)
    profile = v.values[..., 0]
    ball = v.domain.active
    n = ball.shape[0]

    values = u.values.copy()
    lower = np.asarray(dom.origin)
    holes = []
    data = []
    centers = _lattice_centers(dom, P.delta, rho)
    for center in centers:
        start = [_integral_index(x, "hole block offset") for x in (center - rho - lower) / h]
        block = tuple(slice(s, s + n) for s in start)
        z = cell_average(u, dom.annulus(center, 0.5 * rho, rho).active)
        patch = values[block]
        patch[ball] = profile[ball][:, None] * z
        values[block] = patch
        mask = np.zeros(dom.shape, dtype=bool)
        mask[block] = ball
        holes.append(mask)
        data.append(z)

    pins = pinned_mask(dom, P)
    values[pins] = 0.0
    w = u.with_values(values)

    params = EnergyParams.build(eps, T, h, dom.d, half=kernel.even, execution=execution)
    total = pinned_energy(w, None, kernel, params, P)
    if isinstance(total, Infeasible):
        raise InvariantViolation("recovery_feasible", f"{total.violations} pinned cells nonzero")

    perforation_energy = 0.0
    gap = 0.0
    union = np.zeros(dom.shape, dtype=bool)
    for mask, z in zip(holes, data):
        union |= mask
        actual = nonlocal_energy(w, dom.with_mask(mask), kernel, params)
        predicted = P.r ** (dom.d - k.p) * float(np.linalg.norm(z)) ** k.p * template.value
        perforation_energy += actual
        scale = max(abs(actual), abs(predicted))
        if scale > 0.0:
            gap = max(gap, abs(actual - predicted) / scale)
    bulk = nonlocal_energy(w, dom.with_mask(~union), kernel, params)
    cells = _period_cells(dom, P.delta, centers)
    region_energy, limit, slack = _limit_comparison(kernel, u, w, cells, eps, P, template.value, params)

    breakdown = RecoveryBreakdown(
        bulk=bulk,
        perforation=perforation_energy,
        cross=total - bulk - perforation_energy,
        total=total,
        holes=len(holes),
        template_value=template.value,
        identity_gap=gap,
        annulus_data=data,
        region_cells=int(cells.sum()),
        region_energy=region_energy,
        limit=limit,
        slack=slack,
    )
    logger.info(f"Recovery: {len(holes)} holes, total={total:.10g}, bulk={bulk:.10g}, "
                f"perforation={perforation_energy:.10g}, identity gap={gap:.2e}, "
                f"slack against the limit={slack:.4g}")
    return w, breakdown


# Riemann sums of densities


@dataclass
class RiemannSum:
    psi: GridFunction                 # density of the period-cell sample, cellwise
    riemann_sum: float
    integral: float

    @property
    def gap(self) -> float:
        return abs(self.riemann_sum - self.integral)


def riemann_sum_density(
    u: GridFunction,
    law: ScalingLaw,
    table: Callable[[np.ndarray], np.ndarray],
    eps: float,
    rho: Optional[float] = None,
) -> RiemannSum:
    """
    Psi = sum_i density(u_i) on the period cube around delta i, with u_i the
    mean of u on rho/2 < |x - delta i| < rho (the whole cube when that
    annulus holds no cell); compared with the integral of density(u).
    """
    delta = law.scales(eps).delta
    rho = rho if rho is not None else delta / 8.0
    dom = u.domain
    active = dom.active
    centers = dom.centers()
    ids = np.floor(centers / delta + 0.5).astype(np.int64)
    keys, inverse = np.unique(ids[active], axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)

    psi = np.zeros(dom.shape)
    active_psi = np.zeros(len(inverse))
    radius = np.linalg.norm(centers[active] - ids[active] * delta, axis=-1)
    values = u.active_values()
    for j, key in enumerate(keys):
        in_cube = inverse == j
        ring = in_cube & (radius > 0.5 * rho) & (radius < rho)
        sample = values[ring] if ring.any() else values[in_cube]
        active_psi[in_cube] = float(np.asarray(table(sample.mean(axis=0))).reshape(-1)[0])
    psi[active] = active_psi

    volume = dom.cell_volume
    return RiemannSum(
        psi=GridFunction(dom, psi),
        riemann_sum=volume * float(active_psi.sum()),
        integral=volume * float(np.sum(table(values))),
    )


# Monotone sandwich


@dataclass
class SandwichResult:
    unconstrained: float
    pinned: float
    fully_pinned: float
    ordered: bool
    position: float                   # (pinned - free) / (fully pinned - free)
    reports: List[SolveReport] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"unconstrained": self.unconstrained, "pinned": self.pinned,
                "fully_pinned": self.fully_pinned, "ordered": self.ordered,
                "position": self.position}


def sandwich_check(
    k: KernelSpec,
    law: Optional[ScalingLaw],
    u: GridFunction,
    eps: float,
    T: Optional[float] = None,
    perforation: Optional[Perforation] = None,
    options: Optional[SolverOptions] = None,
    execution: Optional[ExecutionContext] = None,
) -> SandwichResult:
    """
    Minima of F_eps with boundary data u on the layer of width eps T: free,
    with the holes pinned, and with every interior cell pinned.

    Small holes (beta = 0) leave the pinned minimum near the free one; large
    holes (beta = +inf) push it towards the fully pinned value.
    """
    if perforation is None:
        if law is None:
            raise RegimeError("sandwich_check needs a scaling law or a perforation")
        scales = law.scales(eps)
        perforation = Perforation(scales.delta, scales.r)
    kernel, T = _restricted(k, T)
    dom = u.domain
    params = EnergyParams.build(eps, T, dom.h, dom.d, half=kernel.even, execution=execution)
    objective = NonlocalObjective(dom, kernel, params)

    layer = boundary_layer(dom, eps * T) & dom.active
    base = ConstraintMask.empty(dom, u.m).freeze(layer, u.values)
    pins = pinned_mask(dom, perforation) & ~layer
    cases = [
        base,
        base.freeze(pins, 0.0),
        base.freeze(dom.active & ~layer, 0.0),
    ]
    values, reports = [], []
    for name, constraints in zip(("free", "pinned", "fully pinned"), cases):
        init = GridFunction(dom, constraints.apply(u.values))
        _, report = minimize_energy(objective, constraints, init, options=options)
        logger.info(f"Sandwich {name}: {report.objective:.10g}")
        values.append(report.objective)
        reports.append(report)

    free, pinned, full = values
    slack = 1e-8 * max(abs(full), 1.0)
    ordered = free <= pinned + slack and pinned <= full + slack
    position = (pinned - free) / (full - free) if full - free > slack else 0.0
    if not ordered:
        logger.warning(f"Sandwich order violated: {free:.6g}, {pinned:.6g}, {full:.6g}")
    return SandwichResult(free, pinned, full, ordered, position, reports)
