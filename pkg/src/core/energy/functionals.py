"""
Discrete Nonlocal Functionals

F_eps^T(u, A) = sum_{xi in Xi} w_xi sum_{x in A_eps(xi)} h^d f(xi, D_eps^xi u(x))

together with its gradient in the cell values, the pinned functional, the
short-range functional G_eps^{r,p}, the exact rescaling identity and the
long-range control ratio.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from scipy import ndimage

from ..errors import EnergyError, GridError
from ..fields import (
    GridDomain,
    GridFunction,
    Perforation,
    pad,
    pair_slices,
    pinned_mask,
    shift_offset,
)
from ..kernels import KernelSpec
from ..kernels.kernel_base import power_norm
from .parallel import ExecutionContext
from .shift_lattice import EnergyParams


logger = logging.getLogger(__name__)

Term = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, Optional[np.ndarray]]]


@dataclass(frozen=True)
class Infeasible:
    """The +infinity value of a constrained functional"""
    violations: int
    reason: str = "pinning constraint violated"

    def __float__(self) -> float:
        return math.inf


EnergyValue = Union[float, Infeasible]


@dataclass(frozen=True)
class RescalingCheck:
    lhs: float
    rhs: float
    gap: float


def _active_cells(u: GridFunction, A: Optional[GridDomain], params: EnergyParams) -> np.ndarray:
    if not math.isclose(params.h, u.domain.h, rel_tol=1e-12):
        raise EnergyError(f"Energy parameters use h={params.h}, field grid has h={u.domain.h}")
    if A is None:
        return u.domain.active
    if not A.same_grid(u.domain):
        raise EnergyError("Domain A is not on the grid of the field")
    return A.active & u.domain.active


def _whole_space(u: GridFunction, params: EnergyParams) -> GridFunction:
    """Materialize the exterior on a margin wide enough for every shift."""
    if u.exterior is None:
        raise EnergyError("Whole-space energy needs a defined exterior value")
    return pad(u, params.reach)


def _pair_sum(values: np.ndarray, active: np.ndarray, params: EnergyParams,
              term: Term, gradient: bool) -> Tuple[float, Optional[np.ndarray]]:
    """
    Sum term(xi, D) over all pairs (x, x + eps xi) of active cells.

    Returns the energy and, when requested, the gradient with respect to the
    cell values, both with the lattice weight and h^d applied.
    """
    shape = active.shape
    eps = params.epsilon
    offsets = params.offsets
    scale = params.factor * params.weight * params.h ** params.d

    def work(chunk: np.ndarray):
        partials: List[float] = []
        buffer = np.zeros_like(values) if gradient else None
        for s in chunk:
            slices = pair_slices(shape, offsets[s])
            if slices is None:
                continue
            src, dst = slices
            both = active[src] & active[dst]
            if not both.any():
                continue
            diff = (values[dst][both] - values[src][both]) / eps
            xi = offsets[s] * (params.h / eps)
            value, grad = term(xi, diff)
            partials.append(float(np.sum(value)))
            if gradient:
                contribution = np.zeros(both.shape + (values.shape[-1],))
                contribution[both] = grad
                buffer[dst] += contribution
                buffer[src] -= contribution
        return math.fsum(partials), buffer

    results = params.execution.map(work, params.execution.split(len(offsets)))
    energy = scale * params.execution.merge(r[0] for r in results)
    if not gradient:
        return energy, None
    total = np.zeros_like(values)
    for _, buffer in results:
        total += buffer
    return energy, total * (scale / eps)


def _kernel_term(k: KernelSpec, mu: float, gradient: bool) -> Term:
    def term(xi, diff):
        value = k.eval(xi, diff, mu)
        grad = None
        if gradient:
            grad = k.grad_z(xi, diff, mu)
            if not np.all(np.isfinite(grad)):
                raise EnergyError(
                    f"Singular gradient: mu = {mu} with p = {k.p} < 2 and a zero difference")
        return value, grad
    return term


def nonlocal_energy(u: GridFunction, A: Optional[GridDomain], k: KernelSpec,
                    params: EnergyParams, mu: float = 0.0, whole_space: bool = False) -> float:
    """
    Evaluate F_eps^T(u, A).

    Args:
        u: Field
        A: Integration domain on the grid of u (None = domain of u)
        k: Kernel
        params: Scale and shift lattice
        mu: Regularization of the integrand (0 = exact)
        whole_space: Integrate over R^d using the exterior value of u

    Returns:
        Nonnegative energy

    Raises:
        EnergyError: Incompatible grid spacing
    """
    if params.half and not k.even:
        raise EnergyError("Half-lattice summation requires an even kernel")
    if whole_space:
        u = _whole_space(u, params)
        A = None
    active = _active_cells(u, A, params)
    energy, _ = _pair_sum(u.values, active, params, _kernel_term(k, mu, False), False)
    return energy


def energy_and_gradient(u: GridFunction, A: Optional[GridDomain], k: KernelSpec,
                        params: EnergyParams, frozen: Optional[np.ndarray] = None,
                        mu: float = 0.0) -> Tuple[float, np.ndarray]:
    """Energy and its gradient array (frozen and inactive cells zeroed)."""
    if params.half and not k.even:
        raise EnergyError("Half-lattice summation requires an even kernel")
    active = _active_cells(u, A, params)
    energy, grad = _pair_sum(u.values, active, params, _kernel_term(k, mu, True), True)
    grad[~active] = 0.0
    if frozen is not None:
        grad[frozen] = 0.0
    return energy, grad


def energy_gradient(u: GridFunction, A: Optional[GridDomain], k: KernelSpec,
                    params: EnergyParams, frozen: Optional[np.ndarray] = None,
                    mu: float = 0.0) -> GridFunction:
    """
    Gradient of the discrete energy with respect to the unfrozen cell values.

    Each pair (x, x + eps xi) adds w h^d grad_z(xi, D, mu) / eps at x + eps xi
    and subtracts it at x.

    Raises:
        EnergyError: mu = 0 with p < 2 at a zero difference
    """
    if frozen is not None and np.all(frozen | ~u.domain.active):
        return GridFunction.zeros(u.domain, u.m)
    _, grad = energy_and_gradient(u, A, k, params, frozen, mu)
    return GridFunction(u.domain, grad)


def pinned_energy(u: GridFunction, omega: Optional[GridDomain], k: KernelSpec,
                  params: EnergyParams, P: Perforation) -> EnergyValue:
    """
    F_{eps,delta}(u): the energy when u vanishes on every pinned cell, Infeasible otherwise.

    Zeros are required exactly.
    """
    domain = omega if omega is not None else u.domain
    mask = pinned_mask(domain, P) & u.domain.active
    violations = int(np.count_nonzero(np.any(u.values[mask] != 0.0, axis=-1)))
    if violations:
        return Infeasible(violations)
    return nonlocal_energy(u, omega, k, params)


def short_range_energy(u: GridFunction, A: Optional[GridDomain], r: float, p: float,
                       eps: float, whole_space: bool = False,
                       execution: Optional[ExecutionContext] = None) -> float:
    """
    G_eps^{r,p}(u, A): the nonlocal energy of |z|^p over |xi| <= r.

    Raises:
        EnergyError: r <= 0 or p < 1
    """
    if r <= 0.0 or p < 1.0:
        raise EnergyError(f"Short-range energy needs r > 0 and p >= 1: r={r}, p={p}")
    params = EnergyParams.build(eps, r, u.domain.h, u.domain.d, half=True, execution=execution)
    if whole_space:
        u = _whole_space(u, params)
        A = None
    active = _active_cells(u, A, params)

    def term(xi, diff):
        return power_norm(diff, p), None

    energy, _ = _pair_sum(u.values, active, params, term, False)
    return energy


def _commensurate_scale(r: float) -> None:
    if r <= 0.0:
        raise GridError(f"Scale factor must be positive: {r}")
    for candidate in (r, 1.0 / r):
        if abs(candidate - round(candidate)) <= 1e-12 * max(1.0, candidate):
            return
    raise GridError(f"Scale factor {r} is neither an integer nor the inverse of one")


def rescaling_identity_check(u: GridFunction, x0, r: float, k: KernelSpec,
                             params: EnergyParams, rho: float) -> RescalingCheck:
    """
    Compare F_eps^T(u, B_rho(x0)) with r^{d-p} F_{eps/r}^T(u(x0 + r .), B_{rho/r}).

    The pulled-back field reuses the cell values on the grid h/r centred at
    x0, so the two sums agree up to rounding.
    """
    _commensurate_scale(r)
    ball = u.domain.ball(x0, rho)
    lhs = nonlocal_energy(u, ball, k, params)

    x0 = np.asarray(x0, dtype=float)
    origin = tuple((np.asarray(u.domain.origin) - x0) / r)
    pulled = GridDomain(origin, u.domain.h / r, u.domain.shape, ball.mask)
    w = GridFunction(pulled, u.values)
    rhs = r ** (k.d - k.p) * nonlocal_energy(w, pulled, k, params.rescaled(r))

    scale = max(abs(lhs), abs(rhs))
    gap = abs(lhs - rhs) / scale if scale > 0.0 else 0.0
    logger.debug(f"Rescaling identity: lhs={lhs:.17g} rhs={rhs:.17g} gap={gap:.2e}")
    return RescalingCheck(lhs, rhs, gap)


def _ball_structure(d: int, radius: float) -> np.ndarray:
    n = int(math.floor(radius))
    axis = np.arange(-n, n + 1)
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1)
    return np.linalg.norm(grid, axis=-1) <= radius + 1e-12


def long_range_ratio(u: GridFunction, E: np.ndarray, xi, r: float, p: float, eps: float) -> float:
    """
    [sum_E |D_eps^xi u|^p h^d] / [(|xi|^p + 1) G_eps^{r,p}(u, E + B_{eps(r+|xi|)})]

    Long single-shift differences are controlled by the short-range energy
    on the enlarged set.
    """
    dom = u.domain
    E = np.asarray(E, dtype=bool) & dom.active
    offset = shift_offset(xi, eps, dom.h)
    slices = pair_slices(dom.shape, offset)
    numerator = 0.0
    if slices is not None:
        src, dst = slices
        both = E[src] & dom.active[dst]
        diff = (u.values[dst][both] - u.values[src][both]) / eps
        numerator = float(np.sum(power_norm(diff, p))) * dom.cell_volume

    length = float(np.linalg.norm(xi))
    structure = _ball_structure(dom.d, eps * (r + length) / dom.h)
    enlarged = ndimage.binary_dilation(E, structure=structure) & dom.active
    G = short_range_energy(u, dom.with_mask(enlarged), r, p, eps)
    if G == 0.0:
        return 0.0 if numerator == 0.0 else math.inf
    return numerator / ((length ** p + 1.0) * G)
