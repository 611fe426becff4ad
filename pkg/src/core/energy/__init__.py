"""
Energy Module - discrete nonlocal functionals, gradients and exact identities.
"""

from .functionals import (
    EnergyValue,
    Infeasible,
    RescalingCheck,
    energy_and_gradient,
    energy_gradient,
    long_range_ratio,
    nonlocal_energy,
    pinned_energy,
    rescaling_identity_check,
    short_range_energy,
)
from .parallel import SERIAL, ExecutionContext, resolve_threads
from .shift_lattice import EnergyParams, lattice_offsets

__all__ = [
    'EnergyParams',
    'EnergyValue',
    'ExecutionContext',
    'Infeasible',
    'RescalingCheck',
    'SERIAL',
    'energy_and_gradient',
    'energy_gradient',
    'lattice_offsets',
    'long_range_ratio',
    'nonlocal_energy',
    'pinned_energy',
    'rescaling_identity_check',
    'resolve_threads',
    'short_range_energy',
]
