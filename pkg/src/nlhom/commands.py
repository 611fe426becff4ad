"""
Batch commands.

Each command maps a validated RunConfig and the run's ExecutionContext to a
CommandResult: named tables, optional field dumps and the verdict of every
property the command checks. Commands never write to disk.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core.capacity import capterm_convergence, phi_approx, phi_nonlocal
from ..core.energy import ExecutionContext
from ..core.fields import GridDomain, GridFunction, Perforation
from ..core.homogenize import fhom_bounds, fhom_cell_schedule
from ..core.inequalities import build_corpus, gns_check, pw_check
from ..core.kernels import KernelSpec, builtin_kernel, effective_radius, verify_assumptions
from ..core.regimes import (
    CANONICAL_TAGS,
    canonical_laws,
    classify_regime,
    create_law,
    negligibility_check,
    recovery_construction,
)
from .config import RunConfig

logger = logging.getLogger(__name__)

SPREAD_LIMIT = 2.0          # allowed max/min of scale-independent constants
GROWTH_SPREAD_LIMIT = 1.5
IDENTITY_TOLERANCE = 1e-12
SLACK_TOLERANCE = 1e-9


@dataclass
class CommandResult:
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    fields: Dict[str, GridFunction] = field(default_factory=dict)
    invariants: Dict[str, bool] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)
    diagnostics: Dict[str, bool] = field(default_factory=dict)     # reported, never fail the run

    @property
    def failed(self) -> List[str]:
        return [name for name, ok in self.invariants.items() if not ok]


def build_kernel(config: RunConfig) -> KernelSpec:
    return builtin_kernel(config.family, config.d, config.m, config.p, config.kernel_parameters)


def _range(k: KernelSpec, config: RunConfig) -> float:
    """Truncation T: configured, else the support radius, else the effective radius."""
    if config.T is not None:
        return config.T
    return k.support_radius if k.support_radius is not None else effective_radius(k)


def _domain(config: RunConfig) -> GridDomain:
    lower, upper = config.box()
    return GridDomain.box(lower, upper, config.h)


def _z_columns(z) -> dict:
    return {f"z{i + 1}": float(c) for i, c in enumerate(np.asarray(z).reshape(-1))}


def _nonincreasing(values: List[float], tol: float) -> bool:
    return all(b <= a + tol * max(abs(a), 1e-300) for a, b in zip(values, values[1:]))


def verify_kernel(config: RunConfig, execution: ExecutionContext) -> CommandResult:
    """Sampled structural checks plus the homogenized growth constants."""
    k = build_kernel(config)
    report = verify_assumptions(k, seed=config.seed)
    row = {"d": k.d, "m": k.m, "p": k.p, **report.to_dict()}
    if k.convex_in_z:
        bounds = fhom_bounds(k)
        row.update(fhom_m0=bounds.m0, fhom_M0=bounds.M0)
    return CommandResult(
        tables={"assumptions": pd.DataFrame([row])},
        invariants={"kernel_assumptions": report.passed(tol=1e-9)},
    )


def fhom(config: RunConfig, execution: ExecutionContext) -> CommandResult:
    """Cell problems along the R-schedule against the convex formula."""
    k = build_kernel(config)
    if config.S is not None:
        S = np.asarray(config.S, dtype=float)
    else:
        S = np.zeros((k.m, k.d))
        S[0, 0] = 1.0
    result = fhom_cell_schedule(k, S, config.R, config.h, config.solver, execution)
    rows = []
    for R, value, grad_norm in zip(result.R_schedule, result.per_R_values, result.grad_norms):
        rows.append({"R": R, "h": config.h, "value": value, "grad_norm": grad_norm,
                     "extrapolated": result.extrapolated,
                     "convex_formula": result.convex_formula_value})
    invariants = {}
    if result.convex_formula_value is not None and len(result.per_R_values) > 1:
        target = result.convex_formula_value
        invariants["fhom_improves"] = (abs(result.per_R_values[-1] - target)
                                       <= abs(result.per_R_values[0] - target))
    return CommandResult(
        tables={"fhom": pd.DataFrame(rows)},
        invariants=invariants,
        tolerances={"max_grad_norm": max(result.grad_norms)},
    )


def phi(config: RunConfig, execution: ExecutionContext) -> CommandResult:
    """phi_{eps,T,R}(z) over the epsilon, z and R schedules."""
    k = build_kernel(config)
    T = _range(k, config)
    jobs = [(i, eps, j, np.asarray(z, dtype=float), R)
            for i, eps in enumerate(config.epsilon)
            for j, z in enumerate(config.z)
            for R in config.R]

    def solve(job):
        i, eps, j, z, R = job
        logger.info(f"Processing eps={eps:g}, z={z.tolist()}, R={R:g}")
        return phi_approx(k, eps, T, R, z, config.h, config.solver, execution, keep_minimizer=True)

    outputs = execution.sweep(solve, jobs)
    rows, fields = [], {}
    for (i, eps, j, z, R), (result, minimizer) in zip(jobs, outputs):
        norm = float(np.linalg.norm(z))
        rows.append({**result.row(), "h": config.h, "abs_z": norm,
                     "normalized": result.value / norm ** k.p if norm > 0.0 else 0.0})
        if R == config.R[-1]:
            fields[f"phi_eps{i}_z{j}"] = minimizer
    frame = pd.DataFrame(rows)

    tol = 10.0 * config.solver.tol
    nonnegative = bool((frame["value"] >= 0.0).all()
                       and (frame.loc[frame["abs_z"] == 0.0, "value"] == 0.0).all())
    monotone = all(_nonincreasing(group.sort_values("R")["value"].tolist(), tol)
                   for _, group in frame.groupby(["epsilon"] + [c for c in frame if c.startswith("z")]))
    nonzero = frame[frame["abs_z"] > 0.0]
    spread = 1.0
    for _, group in nonzero.groupby(["epsilon", "R"]):
        low = group["normalized"].min()
        spread = max(spread, group["normalized"].max() / low if low > 0.0 else math.inf)
    return CommandResult(
        tables={"phi": frame},
        fields=fields,
        invariants={"phi_nonnegative": nonnegative, "phi_R_monotone": monotone,
                    "phi_growth_ratio": spread <= GROWTH_SPREAD_LIMIT},
        tolerances={"max_grad_norm": float(frame["grad_norm"].max()), "growth_spread": spread},
    )


def phi_nl(config: RunConfig, execution: ExecutionContext) -> CommandResult:
    """phi^T_NL,alpha(z) by R-extrapolation, swept in T when a T-schedule is given."""
    k = build_kernel(config)
    T = _range(k, config)
    rows = []
    R_monotone, T_monotone = True, True
    for z in config.z:
        z = np.asarray(z, dtype=float)
        result = phi_nonlocal(k, config.alpha, T, z, config.R, config.h,
                              config.T_schedule or None, config.solver, execution)
        members = result.family or [result]
        for member in members:
            R_monotone &= member.monotone
            for R, value in member.schedule_values:
                rows.append({**_z_columns(z), "alpha": config.alpha, "T": member.T, "R": R,
                             "value": value, "kind": "finite-R"})
            rows.append({**_z_columns(z), "alpha": config.alpha, "T": member.T, "R": math.inf,
                         "value": member.value, "kind": "R-limit",
                         "inverse_fit": member.inverse_fit})
        if result.family:
            T_monotone &= result.monotone
            rows.append({**_z_columns(z), "alpha": config.alpha, "T": math.inf, "R": math.inf,
                         "value": result.value, "kind": "T-supremum"})
    invariants = {"phi_nl_R_monotone": R_monotone}
    if config.T_schedule:
        invariants["phi_nl_T_monotone"] = T_monotone
    return CommandResult(tables={"phi_nl": pd.DataFrame(rows)}, invariants=invariants)


def capterm(config: RunConfig, execution: ExecutionContext) -> CommandResult:
    """phi_{eps,T,R_eps}(z) along the epsilon schedule against phi^T(z)."""
    k = build_kernel(config)
    T = _range(k, config)
    rows = []
    decreasing = True
    for z in config.z:
        z = np.asarray(z, dtype=float)
        table = capterm_convergence(k, T, z, config.epsilon, config.R, h_ratio=config.h_ratio,
                                    options=config.solver, execution=execution)
        for row in table.rows:
            rows.append({**_z_columns(z), "T": T, **row})
        if np.any(z) and len(table.rows) >= 3:
            decreasing &= table.gaps_decreasing
    return CommandResult(tables={"capterm": pd.DataFrame(rows)},
                         invariants={"capterm_gaps_decreasing": decreasing})


def gns_suite(config: RunConfig, execution: ExecutionContext) -> CommandResult:
    """GNS-type and Poincare-Wirtinger-type ratios over the seeded corpus."""
    domain = _domain(config)
    lower, upper = config.box()
    half_width = min(0.5 * (b - a) for a, b in zip(lower, upper))
    corpus = build_corpus(domain, seed=config.seed, size=config.corpus_size,
                          support=0.75 * half_width)
    E = domain.ball(np.zeros(domain.d), 0.5 * half_width).active
    r, p = config.short_range, config.p
    jobs = [(eps, entry) for eps in config.epsilon for entry in corpus]

    def evaluate(job):
        eps, entry = job
        logger.info(f"Processing corpus field {entry.corpus_id + 1}/{len(corpus)} at eps={eps:g}")
        gns = gns_check(entry.field, eps, r, p, entry.corpus_id, execution)
        pw = pw_check(entry.field, domain, E, eps, r, p, corpus_id=entry.corpus_id,
                      execution=execution)
        return entry.kind, gns, pw

    outputs = execution.sweep(evaluate, jobs)
    gns_rows = [{"kind": kind, **gns.to_dict()} for kind, gns, _ in outputs]
    pw_rows = [{"kind": kind, **pw.to_dict()} for kind, _, pw in outputs]

    def corpus_max_spread(frame: pd.DataFrame) -> float:
        """max / min over eps of the corpus-max ratio."""
        maxima = frame[~frame["trivial"]].groupby("epsilon")["ratio"].max()
        if len(maxima) < 2:
            return 1.0
        return math.inf if maxima.min() == 0.0 else float(maxima.max() / maxima.min())

    gns_frame, pw_frame = pd.DataFrame(gns_rows), pd.DataFrame(pw_rows)
    gns_spread = corpus_max_spread(gns_frame)
    pw_spread = corpus_max_spread(pw_frame)

    first = corpus[0].field
    base = gns_check(first, config.epsilon[0], r, p, execution=execution)
    scaled = gns_check(first.scaled(2.0), config.epsilon[0], r, p, execution=execution)
    scale_gap = abs(scaled.ratio - base.ratio) / base.ratio if base.ratio > 0.0 else 0.0

    return CommandResult(
        tables={"gns": gns_frame, "poincare": pw_frame},
        invariants={"gns_stability": gns_spread < SPREAD_LIMIT,
                    "poincare_stability": pw_spread < SPREAD_LIMIT,
                    "gns_scaling": scale_gap <= 1e-10},
        tolerances={"gns_spread": gns_spread, "poincare_spread": pw_spread,
                    "gns_scaling_gap": scale_gap},
    )


def _band(value: float) -> str:
    if value == 0.0:
        return "0"
    return "inf" if math.isinf(value) else "finite"


def regime_sweep(config: RunConfig, execution: ExecutionContext) -> CommandResult:
    """Classify the canonical laws; the summary lays tags out by (beta, alpha) band."""
    rows = []
    for law in canonical_laws(config.d, config.p):
        regime = classify_regime(law)
        expected = CANONICAL_TAGS[law.name]
        rows.append({"law": law.name, "description": law.description, "d": law.d, "p": law.p,
                     "alpha": law.alpha, "beta": law.beta, "alpha_band": _band(law.alpha),
                     "beta_band": _band(law.beta), "regime": regime.tag.value,
                     "expected": expected.value, "match": regime.tag == expected})
    frame = pd.DataFrame(rows)
    summary = frame.pivot_table(index="beta_band", columns="alpha_band", values="regime",
                                aggfunc=lambda tags: " / ".join(sorted(set(tags))))
    summary = summary.reindex(index=["0", "finite", "inf"], columns=["0", "finite", "inf"])
    summary = summary.fillna("").reset_index()
    return CommandResult(tables={"regimes": frame, "regime_summary": summary},
                         invariants={"regime_table": bool(frame["match"].all())})


def recovery(config: RunConfig, execution: ExecutionContext) -> CommandResult:
    """Paste capacitary minimizers into the holes of constant fields."""
    k = build_kernel(config)
    T = _range(k, config)
    domain = _domain(config)
    law = create_law(config.law, config.d, config.p)
    perforation = Perforation(config.delta, config.r) if config.delta is not None else None
    rows, fields = [], {}
    gap = 0.0
    slacks: Dict[int, List[Tuple[float, float]]] = {}
    for i, eps in enumerate(config.epsilon):
        for j, z in enumerate(config.z):
            u = GridFunction.constant(domain, z)
            w, breakdown = recovery_construction(k, law, u, eps, T, perforation,
                                                 config.solver, execution)
            P = perforation or Perforation(*law.scales(eps)[1:])
            rows.append({"epsilon": eps, **_z_columns(z), "delta": P.delta, "r": P.r,
                         "h": config.h, **breakdown.to_dict()})
            fields[f"recovery_eps{i}_z{j}"] = w
            gap = max(gap, breakdown.identity_gap)
            slacks.setdefault(j, []).append((eps, breakdown.relative_slack))

    invariants = {"recovery_identity": gap <= IDENTITY_TOLERANCE}
    tolerances = {"identity_gap": gap}
    if len(config.epsilon) >= 2:
        invariants["recovery_slack_decreasing"] = all(
            slack_decreasing(series) for series in slacks.values())
        tolerances["relative_slack"] = max(
            (s for series in slacks.values() for _, s in series if not math.isnan(s)), default=0.0)
    return CommandResult(tables={"recovery": pd.DataFrame(rows)}, fields=fields,
                         invariants=invariants, tolerances=tolerances)


def slack_decreasing(series: Sequence[Tuple[float, float]],
                     tolerance: float = SLACK_TOLERANCE) -> bool:
    """
    Relative slack non-increasing as eps decreases; points without a
    comparison region (NaN) are skipped.
    """
    ordered = [s for _, s in sorted(series, key=lambda item: -item[0]) if not math.isnan(s)]
    return all(fine <= coarse + tolerance for coarse, fine in zip(ordered, ordered[1:]))


NEGLIGIBILITY_FIELDS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "constant": lambda x: np.ones(x.shape[:-1]),
    "wave": lambda x: np.prod(np.cos(np.pi * x), axis=-1),
}


def negligibility(config: RunConfig, execution: ExecutionContext) -> CommandResult:
    """Supercritical pinning cost against r^d / (eps^p delta^d) for two test fields."""
    k = build_kernel(config)
    law = create_law(config.law, config.d, config.p)
    lower, upper = config.box()
    rows, invariants, tolerances, diagnostics = [], {}, {}, {}
    for name, u in NEGLIGIBILITY_FIELDS.items():
        table = negligibility_check(k, law, u, config.epsilon, lower, upper,
                                    h_ratio=config.h_ratio, T=config.T, execution=execution)
        rows.extend({"field": name, **row} for row in table.rows)
        invariants[f"negligibility_bounded_{name}"] = table.bounded
        diagnostics[f"negligibility_strict_{name}"] = table.strict
        tolerances[f"negligibility_constant_{name}"] = table.constant
    return CommandResult(tables={"negligibility": pd.DataFrame(rows)},
                         invariants=invariants, tolerances=tolerances, diagnostics=diagnostics)


COMMAND_TABLE: Dict[str, Callable[[RunConfig, ExecutionContext], CommandResult]] = {
    "verify-kernel": verify_kernel,
    "fhom": fhom,
    "phi": phi,
    "phi-nl": phi_nl,
    "capterm": capterm,
    "gns-suite": gns_suite,
    "regime-sweep": regime_sweep,
    "recovery": recovery,
    "negligibility": negligibility,
}


def run_command(config: RunConfig, execution: Optional[ExecutionContext] = None) -> CommandResult:
    execution = execution or ExecutionContext()
    return COMMAND_TABLE[config.command](config, execution)
