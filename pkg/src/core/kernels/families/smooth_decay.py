"""
Smooth-Decay Kernel

f(xi, z) = c * exp(-|xi|^2) * |z|^p, with unbounded support.
"""

import math

import numpy as np

from ...errors import KernelError
from ..kernel_base import KernelFamily, KernelSpec, power_norm, power_norm_grad


class SmoothDecayKernel(KernelSpec):
    """
    Gaussian-weighted isotropic kernel.

    Energies with this kernel truncate the shift lattice at the effective
    radius where the (G1) tail becomes negligible.
    """

    family = KernelFamily.SMOOTH_DECAY

    def __init__(self, d: int, m: int, p: float, c: float = 1.0, r0: float = 1.0):
        if c <= 0.0:
            raise KernelError(f"smooth-decay needs c > 0: {c}")
        super().__init__(d, m, p, r0=r0, lambda0=c * math.exp(-r0 * r0), support_radius=None,
                         convex_in_z=True, even=True, radial=True, isotropic_in_z=True)
        self.c = float(c)

    def _profile(self, xi: np.ndarray) -> np.ndarray:
        return self.c * np.exp(-np.sum(xi * xi, axis=-1))

    def eval(self, xi, z, mu=0.0):
        return self._profile(xi) * power_norm(z, self.p, mu)

    def grad_z(self, xi, z, mu=0.0):
        return self._profile(xi)[..., None] * power_norm_grad(z, self.p, mu)

    def envelope_M(self, xi):
        return self._profile(xi)

    def envelope_m(self, xi):
        return self._profile(xi)

    def describe(self):
        info = super().describe()
        info["c"] = self.c
        return info
