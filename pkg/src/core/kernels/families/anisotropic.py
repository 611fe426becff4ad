"""
Anisotropic Kernel

f(xi, z) = c * chi_{B_rho}(xi) * |<a, z>|^p + c_iso * chi_{B_rho}(xi) * |z|^p
"""

from typing import Optional, Sequence

import numpy as np

from ...errors import KernelError
from ..kernel_base import KernelFamily, KernelSpec, power_norm, power_norm_grad


class AnisotropicKernel(KernelSpec):
    """
    Ball-supported kernel with a preferred target direction a.

    For m >= 2 the lower envelope comes from the isotropic part only, so
    c_iso must be positive there.
    """

    family = KernelFamily.ANISOTROPIC

    def __init__(self, d: int, m: int, p: float, a: Sequence[float], rho: float = 1.0,
                 c: float = 1.0, c_iso: float = 1.0, r0: Optional[float] = None):
        a = np.asarray(a, dtype=float).reshape(-1)
        if a.shape != (m,):
            raise KernelError(f"anisotropy vector must have length m={m}: {a.shape}")
        if rho <= 0.0 or c < 0.0 or c_iso < 0.0:
            raise KernelError(f"invalid anisotropic parameters: rho={rho}, c={c}, c_iso={c_iso}")

        a_norm_p = float(np.linalg.norm(a)) ** p
        upper = c * a_norm_p + c_iso
        lower = upper if m == 1 else c_iso
        if lower <= 0.0:
            raise KernelError("anisotropic kernel needs c_iso > 0 when m >= 2")

        r0 = 0.5 * rho if r0 is None else r0
        super().__init__(d, m, p, r0=r0, lambda0=lower, support_radius=rho,
                         convex_in_z=True, even=True, radial=True, isotropic_in_z=(m == 1))
        self.a = a
        self.rho = float(rho)
        self.c = float(c)
        self.c_iso = float(c_iso)
        self._upper = upper
        self._lower = lower

    def _chi(self, xi: np.ndarray) -> np.ndarray:
        return (np.linalg.norm(xi, axis=-1) <= self.rho).astype(float)

    def eval(self, xi, z, mu=0.0):
        projection = (z @ self.a)[..., None]
        value = self.c * power_norm(projection, self.p, mu) + self.c_iso * power_norm(z, self.p, mu)
        return self._chi(xi) * value

    def grad_z(self, xi, z, mu=0.0):
        projection = (z @ self.a)[..., None]
        directional = power_norm_grad(projection, self.p, mu) * self.a
        grad = self.c * directional + self.c_iso * power_norm_grad(z, self.p, mu)
        chi = self._chi(xi)[..., None]
        return np.where(chi > 0.0, grad, 0.0)

    def envelope_M(self, xi):
        return self._upper * self._chi(xi)

    def envelope_m(self, xi):
        return self._lower * self._chi(xi)

    def describe(self):
        info = super().describe()
        info.update(a=self.a.tolist(), rho=self.rho, c=self.c, c_iso=self.c_iso)
        return info
