"""
Indicator-Ball Kernel

f(xi, z) = c * chi_{B_rho}(xi) * |z|^p, the model integrand of the family.
"""

from typing import Optional

import numpy as np

from ...errors import KernelError
from ..kernel_base import KernelFamily, KernelSpec, power_norm, power_norm_grad


class IndicatorBallKernel(KernelSpec):
    """
    Isotropic kernel supported on the closed ball of radius rho.

    Envelopes coincide: M = m = c * chi_{B_rho}. The short-range radius
    defaults to rho / 2 so that every truncation T >= rho is admissible.
    """

    family = KernelFamily.INDICATOR_BALL

    def __init__(self, d: int, m: int, p: float, rho: float = 1.0, c: float = 1.0,
                 r0: Optional[float] = None):
        if rho <= 0.0 or c <= 0.0:
            raise KernelError(f"indicator-ball needs rho > 0 and c > 0: rho={rho}, c={c}")
        r0 = 0.5 * rho if r0 is None else r0
        if r0 > rho:
            raise KernelError(f"r0={r0} exceeds the support radius rho={rho}")
        super().__init__(d, m, p, r0=r0, lambda0=c, support_radius=rho,
                         convex_in_z=True, even=True, radial=True, isotropic_in_z=True)
        self.rho = float(rho)
        self.c = float(c)

    def _profile(self, xi: np.ndarray) -> np.ndarray:
        return self.c * (np.linalg.norm(xi, axis=-1) <= self.rho)

    def eval(self, xi, z, mu=0.0):
        return self._profile(xi) * power_norm(z, self.p, mu)

    def grad_z(self, xi, z, mu=0.0):
        profile = self._profile(xi)[..., None]
        return np.where(profile > 0.0, profile * power_norm_grad(z, self.p, mu), 0.0)

    def envelope_M(self, xi):
        return self._profile(xi)

    def envelope_m(self, xi):
        return self._profile(xi)

    def describe(self):
        info = super().describe()
        info.update(rho=self.rho, c=self.c)
        return info
