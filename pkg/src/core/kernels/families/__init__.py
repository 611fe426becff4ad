"""
Built-in kernel families and the factory that instantiates them by name.
"""

import logging
from typing import Any, Dict, Optional

from scipy import special

from ...errors import KernelError
from ..kernel_base import KernelSpec, sphere_abs_moment
from .anisotropic import AnisotropicKernel
from .indicator_ball import IndicatorBallKernel
from .smooth_decay import SmoothDecayKernel


logger = logging.getLogger(__name__)

FAMILY_PARAMETERS = {
    "indicator-ball": {"rho", "c", "r0", "normalize"},
    "smooth-decay": {"c", "r0", "normalize"},
    "anisotropic": {"a", "rho", "c", "c_iso", "r0"},
}


def normalized_constant(family: str, d: int, p: float, rho: float = 1.0) -> float:
    """
    Constant c making the convex homogenized density equal |S|^p (m = 1).

    Args:
        family: "indicator-ball" or "smooth-decay"
        d: Spatial dimension
        p: Growth exponent
        rho: Support radius (indicator-ball only)

    Returns:
        c = 1 / integral of profile(xi) |xi_1|^p

    Raises:
        KernelError: For families without rotational symmetry
    """
    moment = sphere_abs_moment(d, p)
    if family == "indicator-ball":
        return (d + p) / (moment * rho ** (d + p))
    if family == "smooth-decay":
        return 2.0 / (moment * special.gamma((d + p) / 2.0))
    raise KernelError(f"No isotropic normalization for family '{family}'")


def builtin_kernel(family: str, d: int, m: int, p: float,
                   parameters: Optional[Dict[str, Any]] = None) -> KernelSpec:
    """
    Factory function to create a built-in kernel.

    Args:
        family: "indicator-ball", "smooth-decay" or "anisotropic"
        d: Spatial dimension
        m: Target dimension
        p: Growth exponent in (1, d)
        parameters: Family parameters; normalize=True picks c by normalized_constant

    Returns:
        Configured KernelSpec

    Raises:
        KernelError: Unknown family, unknown parameter or p outside (1, d)
    """
    if family not in FAMILY_PARAMETERS:
        raise KernelError(f"Unknown kernel family '{family}' (known: {sorted(FAMILY_PARAMETERS)})")
    params = dict(parameters or {})
    unknown = set(params) - FAMILY_PARAMETERS[family]
    if unknown:
        raise KernelError(f"Unknown parameters for {family}: {sorted(unknown)}")
    if not (1.0 < p < d):
        raise KernelError(f"Exponent p must lie in (1, d) = (1, {d}): {p}")

    if params.pop("normalize", False):
        if "c" in params:
            raise KernelError("Give either c or normalize, not both")
        params["c"] = normalized_constant(family, d, p, params.get("rho", 1.0))
        logger.debug(f"Normalized {family} constant c={params['c']:.12g}")

    if family == "indicator-ball":
        return IndicatorBallKernel(d, m, p, **params)
    if family == "smooth-decay":
        return SmoothDecayKernel(d, m, p, **params)
    if "a" not in params:
        raise KernelError("anisotropic kernel needs the direction 'a'")
    return AnisotropicKernel(d, m, p, **params)


__all__ = [
    'AnisotropicKernel',
    'IndicatorBallKernel',
    'SmoothDecayKernel',
    'builtin_kernel',
    'normalized_constant',
    'FAMILY_PARAMETERS',
]
