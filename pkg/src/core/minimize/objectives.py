"""
Objectives for the constrained minimizers.

An objective maps the full array of cell values (shape (*shape, m)) to an
energy and its gradient; the solver eliminates frozen cells around it.
"""

import logging
from abc import ABC, abstractmethod
from typing import Optional, Tuple

import numpy as np

from ..energy import EnergyParams, energy_and_gradient, nonlocal_energy
from ..fields import GridDomain, GridFunction, pair_slices
from ..kernels import KernelSpec
from ..kernels.kernel_base import power_norm, power_norm_grad


logger = logging.getLogger(__name__)


class Objective(ABC):
    """Energy evaluator + gradient on a fixed grid"""

    def __init__(self, domain: GridDomain, m: int, p: float, convex: bool,
                 exterior: Optional[np.ndarray] = None):
        self.domain = domain
        self.m = m
        self.p = float(p)
        self.convex = convex
        self.exterior = exterior

    @abstractmethod
    def value_and_gradient(self, values: np.ndarray, mu: float = 0.0) -> Tuple[float, np.ndarray]:
        pass

    def value(self, values: np.ndarray, mu: float = 0.0) -> float:
        return self.value_and_gradient(values, mu)[0]

    @abstractmethod
    def difference_scale(self, values: np.ndarray) -> float:
        """Mean magnitude of the difference quotients fed to the integrand."""
        pass

    def field(self, values: np.ndarray) -> GridFunction:
        return GridFunction(self.domain, values, self.exterior)


class NonlocalObjective(Objective):
    """F_eps^T(., A) for a kernel"""

    def __init__(self, domain: GridDomain, kernel: KernelSpec, params: EnergyParams,
                 A: Optional[GridDomain] = None, exterior: Optional[np.ndarray] = None):
        super().__init__(domain, kernel.m, kernel.p, kernel.convex_in_z, exterior)
        self.kernel = kernel
        self.params = params
        self.A = A

    def value(self, values, mu=0.0):
        return nonlocal_energy(GridFunction(self.domain, values), self.A, self.kernel, self.params, mu)

    def value_and_gradient(self, values, mu=0.0):
        return energy_and_gradient(GridFunction(self.domain, values), self.A,
                                   self.kernel, self.params, mu=mu)

    def difference_scale(self, values):
        active = self.domain.active if self.A is None else self.A.active & self.domain.active
        total, count = 0.0, 0
        for i in range(self.domain.d):
            offset = [0] * self.domain.d
            offset[i] = 1
            slices = pair_slices(self.domain.shape, offset)
            if slices is None:
                continue
            src, dst = slices
            both = active[src] & active[dst]
            diff = values[dst][both] - values[src][both]
            total += float(np.linalg.norm(diff, axis=-1).sum())
            count += int(both.sum())
        return total / (count * self.params.epsilon) if count else 0.0


class Density(ABC):
    """Local integrand on m x d matrices, p-homogeneous"""

    def __init__(self, p: float, convex: bool = True):
        self.p = float(p)
        self.convex = convex

    @abstractmethod
    def value(self, S: np.ndarray, mu: float = 0.0) -> np.ndarray:
        """S has shape (..., m, d)."""
        pass

    @abstractmethod
    def grad(self, S: np.ndarray, mu: float = 0.0) -> np.ndarray:
        pass

    def __call__(self, S: np.ndarray) -> float:
        return float(self.value(np.asarray(S, dtype=float)))


class PowerNormDensity(Density):
    """coefficient * |S|^p with the Frobenius norm"""

    def __init__(self, p: float, coefficient: float = 1.0):
        super().__init__(p, convex=True)
        self.coefficient = float(coefficient)

    def value(self, S, mu=0.0):
        flat = S.reshape(S.shape[:-2] + (-1,))
        return self.coefficient * power_norm(flat, self.p, mu)

    def grad(self, S, mu=0.0):
        flat = S.reshape(S.shape[:-2] + (-1,))
        return self.coefficient * power_norm_grad(flat, self.p, mu).reshape(S.shape)

    def __repr__(self) -> str:
        return f"PowerNormDensity(p={self.p:g}, coefficient={self.coefficient:.6g})"


class QuadratureDensity(Density):
    """
    sum_q w_q f(xi_q, S xi_q): the convex homogenized density of a kernel on
    a fixed set of quadrature nodes.
    """

    def __init__(self, kernel: KernelSpec, nodes: np.ndarray, weights: np.ndarray):
        super().__init__(kernel.p, convex=kernel.convex_in_z)
        self.kernel = kernel
        self.nodes = nodes
        self.weights = weights

    def value(self, S, mu=0.0):
        total = np.zeros(S.shape[:-2])
        for xi, w in zip(self.nodes, self.weights):
            total += w * self.kernel.eval(xi, S @ xi, mu)
        return total

    def grad(self, S, mu=0.0):
        total = np.zeros(S.shape)
        for xi, w in zip(self.nodes, self.weights):
            g = self.kernel.grad_z(xi, S @ xi, mu)
            total += w * g[..., :, None] * xi
        return total


def forward_valid(active: np.ndarray) -> np.ndarray:
    """Active cells whose forward neighbours along every axis are active."""
    valid = active.copy()
    for i in range(active.ndim):
        last = [slice(None)] * active.ndim
        last[i] = -1
        valid[tuple(last)] = False
        src = [slice(None)] * active.ndim
        dst = [slice(None)] * active.ndim
        src[i] = slice(0, -1)
        dst[i] = slice(1, None)
        valid[tuple(src)] &= active[tuple(dst)]
    return valid


def forward_gradient(values: np.ndarray, valid: np.ndarray, h: float) -> np.ndarray:
    """grad_h u, shape (*shape, m, d); zero off `valid`."""
    d = valid.ndim
    S = np.zeros(values.shape + (d,))
    for i in range(d):
        head = [slice(None)] * d
        head[i] = slice(0, -1)
        S[tuple(head) + (slice(None), i)] = np.diff(values, axis=i) / h
    S[~valid] = 0.0
    return S


def one_sided_gradient(values: np.ndarray, active: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    grad_h u on every active cell: forward differences, falling back to the
    backward difference along an axis whose forward neighbour is inactive.

    Returns:
        (S, covered): S of shape (*shape, m, d), and the cells having an
        active neighbour along every axis
    """
    d = active.ndim
    S = np.zeros(values.shape + (d,))
    covered = active.copy()
    for i in range(d):
        head = [slice(None)] * d
        tail = [slice(None)] * d
        head[i] = slice(0, -1)
        tail[i] = slice(1, None)
        head, tail = tuple(head), tuple(tail)
        pair = np.zeros_like(active)
        pair[head] = active[head] & active[tail]
        forward = np.zeros(values.shape)
        forward[head] = np.diff(values, axis=i) / h
        backward = np.zeros(values.shape)
        backward[tail] = forward[head]
        has_back = np.zeros_like(active)
        has_back[tail] = pair[head]
        S[..., i] = np.where(pair[..., None], forward, backward)
        covered &= pair | has_back
    S[~covered] = 0.0
    return S, covered


class LocalDirichletObjective(Objective):
    """sum_x h^d density(grad_h u(x)) with forward differences"""

    def __init__(self, domain: GridDomain, density: Density, m: int = 1,
                 exterior: Optional[np.ndarray] = None):
        super().__init__(domain, m, density.p, density.convex, exterior)
        self.density = density
        self.valid = forward_valid(domain.active)

    def value(self, values, mu=0.0):
        S = forward_gradient(values, self.valid, self.domain.h)
        return float(self.domain.cell_volume * np.sum(self.density.value(S[self.valid], mu)))

    def value_and_gradient(self, values, mu=0.0):
        h = self.domain.h
        d = self.domain.d
        S = forward_gradient(values, self.valid, h)
        energy = float(self.domain.cell_volume * np.sum(self.density.value(S[self.valid], mu)))

        G = np.zeros_like(S)
        G[self.valid] = self.density.grad(S[self.valid], mu)
        out = np.zeros_like(values)
        for i in range(d):
            gi = G[..., i] / h
            out -= gi
            src = [slice(None)] * d
            dst = [slice(None)] * d
            src[i] = slice(0, -1)
            dst[i] = slice(1, None)
            out[tuple(dst)] += gi[tuple(src)]
        out *= self.domain.cell_volume
        out[~self.domain.active] = 0.0
        return energy, out

    def difference_scale(self, values):
        if not self.valid.any():
            return 0.0
        S = forward_gradient(values, self.valid, self.domain.h)[self.valid]
        return float(np.mean(np.linalg.norm(S.reshape(len(S), -1), axis=-1)))
