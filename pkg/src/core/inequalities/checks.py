"""
Functional Inequality Checks

Evaluates both sides of the GNS-type inequality

    (sum |T_eps u|^{p*} h^d)^{p/p*} <= C G_eps^{r,p}(u, R^d)

and of the Poincare-Wirtinger-type inequality

    sum_A |u - u_E|^p h^d <= C lambda^p G_eps^{r,p}(u, A)

without the unknown constant C. Reports carry the ratio lhs / rhs so that
the constants can be compared across scales and fields.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from ..energy import ExecutionContext, short_range_energy
from ..errors import GridError, InvariantViolation
from ..fields import GridDomain, GridFunction, cell_average, coarsen, lp_norm, p_star


logger = logging.getLogger(__name__)


@dataclass
class InequalityReport:
    """Both sides of an inequality for one field and scale"""
    lhs: float
    rhs_raw: float
    ratio: float
    context: Dict[str, Any] = field(default_factory=dict)
    trivial: bool = False

    def to_dict(self) -> dict:
        row = dict(self.context)
        row.update(lhs=self.lhs, rhs_raw=self.rhs_raw, ratio=self.ratio, trivial=self.trivial)
        return row


def _report(lhs: float, rhs: float, name: str, context: Dict[str, Any]) -> InequalityReport:
    if rhs == 0.0:
        if lhs > 0.0:
            raise InvariantViolation(name, f"zero right-hand side with lhs = {lhs:.6g}")
        return InequalityReport(lhs, rhs, 0.0, context, trivial=True)
    return InequalityReport(lhs, rhs, lhs / rhs, context)


def gns_check(
    u: GridFunction,
    eps: float,
    r: float,
    p: float,
    corpus_id: Optional[int] = None,
    execution: Optional[ExecutionContext] = None,
) -> InequalityReport:
    """
    GNS-type inequality for a compactly supported field.

    Args:
        u: Field with exterior value 0
        eps: Interaction scale
        r: Short-range radius
        p: Exponent in [1, d)
        corpus_id: Identifier echoed into the report context

    Raises:
        GridError: Missing or nonzero exterior, or p outside [1, d)
        InvariantViolation: Nonzero lhs against a zero energy
    """
    if u.exterior is None or np.any(u.exterior):
        raise GridError("GNS check needs a field with exterior value 0")
    d = u.domain.d
    q = p_star(p, d)
    coarse, info = coarsen(u, eps, r)
    lhs = lp_norm(coarse, q) ** p
    rhs = short_range_energy(u, None, r, p, eps, whole_space=True, execution=execution)
    context = {"corpus_id": corpus_id, "epsilon": eps, "r": r, "p": p,
               "cube_side": info.side}
    report = _report(lhs, rhs, "gns_nonzero_energy", context)
    logger.debug(f"GNS eps={eps:g} r={r:g} p={p:g}: lhs={lhs:.6g} rhs={rhs:.6g} "
                 f"ratio={report.ratio:.6g}")
    return report


def pw_check(
    u: GridFunction,
    A: GridDomain,
    E: np.ndarray,
    eps: float,
    r: float,
    p: float,
    lam: float = 1.0,
    corpus_id: Optional[int] = None,
    execution: Optional[ExecutionContext] = None,
) -> InequalityReport:
    """
    Poincare-Wirtinger-type inequality on A with the mean taken over E.

    For a field living on the lambda-dilated geometry pass lam; the right
    side is then lam^p G_eps^{r,p}(u, A).

    Raises:
        GridError: Empty E
        InvariantViolation: Nonzero lhs against a zero energy
    """
    if lam <= 0.0:
        raise GridError(f"Dilation factor must be positive: {lam}")
    E = np.asarray(E, dtype=bool) & A.active & u.domain.active
    if not E.any():
        raise GridError("pw_check needs a nonempty set E")
    mean = cell_average(u, E)
    cells = A.active & u.domain.active
    deviation = np.linalg.norm(u.values[cells] - mean, axis=-1)
    lhs = float(u.domain.cell_volume * np.sum(deviation ** p))
    rhs = lam ** p * short_range_energy(u, A, r, p, eps, execution=execution)
    context = {"corpus_id": corpus_id, "epsilon": eps, "r": r, "p": p, "lambda": lam}
    return _report(lhs, rhs, "poincare_nonzero_energy", context)


def dilate(u: GridFunction, lam: float, x0: Optional[Sequence[float]] = None
           ) -> Tuple[GridFunction, float]:
    """
    The field y -> u(x0 + (y - x0) / lam) on the grid lam h.

    Cell values are reused unchanged, so every grid sum over the dilated
    field is an exact rescaling of the original one.

    Returns:
        (dilated field, lam)
    """
    if lam <= 0.0:
        raise GridError(f"Dilation factor must be positive: {lam}")
    dom = u.domain
    x0 = np.zeros(dom.d) if x0 is None else np.asarray(x0, dtype=float)
    origin = tuple(x0 + lam * (np.asarray(dom.origin) - x0))
    dilated = GridDomain(origin, lam * dom.h, dom.shape, dom.mask)
    return GridFunction(dilated, u.values, u.exterior), lam


def ratio_spread(reports: Sequence[InequalityReport]) -> float:
    """max / min over the nontrivial ratios (1 when fewer than two)."""
    ratios = [r.ratio for r in reports if not r.trivial]
    if len(ratios) < 2:
        return 1.0
    low = min(ratios)
    return math.inf if low == 0.0 else max(ratios) / low
