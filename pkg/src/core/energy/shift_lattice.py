"""
Grid-commensurate shift lattice used as the xi-quadrature of nonlocal energies.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import EnergyError
from ..kernels import KernelSpec, effective_radius
from .parallel import SERIAL, ExecutionContext


logger = logging.getLogger(__name__)


def lattice_offsets(epsilon: float, T: float, h: float, d: int, half: bool = False) -> np.ndarray:
    """
    Integer offsets k != 0 with |k| h / epsilon <= T, in lexicographic order.

    With half=True only offsets whose first nonzero component is positive
    are kept (one representative of each +-k pair).
    """
    ratio = h / epsilon
    n = int(math.floor(T / ratio * (1.0 + 1e-12)))
    if n < 1:
        return np.zeros((0, d), dtype=int)
    axis = np.arange(-n, n + 1)
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    length = np.linalg.norm(grid, axis=1) * ratio
    keep = (length > 0.0) & (length <= T * (1.0 + 1e-12))
    if half:
        nonzero = grid != 0
        first = np.argmax(nonzero, axis=1)
        keep &= grid[np.arange(len(grid)), first] > 0
    return grid[keep]


@dataclass(frozen=True, eq=False)
class EnergyParams:
    """
    Scale epsilon, truncation T and the shift lattice
    Xi = {xi : epsilon xi in h Z^d, 0 < |xi| <= T}, each node weighted (h/epsilon)^d.

    When `half` is set the lattice stores one of each +-xi pair and sums are
    doubled; valid for even kernels only.
    """
    epsilon: float
    T: float
    h: float
    d: int
    offsets: np.ndarray
    half: bool = False
    execution: ExecutionContext = field(default_factory=lambda: SERIAL)

    @classmethod
    def build(cls, epsilon: float, T: float, h: float, d: int, half: bool = False,
              execution: Optional[ExecutionContext] = None) -> "EnergyParams":
        if epsilon <= 0.0 or T <= 0.0 or h <= 0.0:
            raise EnergyError(f"epsilon, T and h must be positive: {epsilon}, {T}, {h}")
        if epsilon / h < 4.0:
            logger.warning(f"Under-resolved shift lattice: epsilon/h = {epsilon / h:.3g} < 4")
        offsets = lattice_offsets(epsilon, T, h, d, half)
        return cls(epsilon, T, h, d, offsets, half, execution or SERIAL)

    @classmethod
    def for_kernel(cls, k: KernelSpec, epsilon: float, h: float, T: Optional[float] = None,
                   execution: Optional[ExecutionContext] = None) -> "EnergyParams":
        """
        Lattice for kernel k; T defaults to the support radius, or to the
        effective radius for unbounded kernels (reported in the log).
        """
        if T is None or math.isinf(T):
            T = effective_radius(k)
            if k.support_radius is None:
                logger.info(f"Untruncated energy approximated with T = {T:.6g}")
        return cls.build(epsilon, T, h, k.d, half=k.even, execution=execution)

    @property
    def weight(self) -> float:
        return (self.h / self.epsilon) ** self.d

    @property
    def factor(self) -> float:
        """Multiplicity of each stored offset."""
        return 2.0 if self.half else 1.0

    @property
    def n_shifts(self) -> int:
        return len(self.offsets)

    @property
    def shift_lattice(self) -> np.ndarray:
        """Xi as real vectors, shape (n, d)."""
        return self.offsets * (self.h / self.epsilon)

    @property
    def total_weight(self) -> float:
        return self.factor * self.weight * self.n_shifts

    @property
    def reach(self) -> int:
        """Largest |offset component| in cells."""
        return int(np.abs(self.offsets).max()) if self.n_shifts else 0

    def xi(self, index: int) -> np.ndarray:
        return self.offsets[index] * (self.h / self.epsilon)

    def rescaled(self, r: float) -> "EnergyParams":
        """Same offsets and weights at scale epsilon/r on the grid h/r."""
        return EnergyParams(self.epsilon / r, self.T, self.h / r, self.d,
                            self.offsets, self.half, self.execution)

    def with_execution(self, execution: ExecutionContext) -> "EnergyParams":
        return EnergyParams(self.epsilon, self.T, self.h, self.d,
                            self.offsets, self.half, execution)

    def describe(self) -> dict:
        return {"epsilon": self.epsilon, "T": self.T, "h": self.h,
                "shifts": int(self.factor * self.n_shifts), "weight": self.weight}
