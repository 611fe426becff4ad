"""
Kernels Module - nonlocal integrands f(xi, z), truncation and sampled assumption checks.
"""

from .kernel_base import (
    AssumptionReport,
    CallableKernel,
    KernelFamily,
    KernelSpec,
    TruncatedKernel,
    effective_radius,
    growth_integral,
    sphere_abs_moment,
    sphere_area,
    truncate_kernel,
    verify_assumptions,
)
from .families import builtin_kernel, normalized_constant

__all__ = [
    'AssumptionReport',
    'CallableKernel',
    'KernelFamily',
    'KernelSpec',
    'TruncatedKernel',
    'builtin_kernel',
    'effective_radius',
    'growth_integral',
    'normalized_constant',
    'sphere_abs_moment',
    'sphere_area',
    'truncate_kernel',
    'verify_assumptions',
]
