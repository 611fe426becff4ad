"""
Capacity Module - closed-form p-capacities and capacitary densities.
"""

from .closed_form import (
    capacity_by_quadrature,
    capacity_exponent,
    pcap_annulus_closed_form,
    radial_profile,
)
from .densities import (
    CapacitaryResult,
    CapacityValue,
    ConvergenceTable,
    LipschitzProbe,
    capterm_convergence,
    lipschitz_probe,
    pcap_numeric,
    phi_approx,
    phi_local,
    phi_nonlocal,
    profile_energy,
    rotation_probe,
    vectorial_capacity_check,
)

__all__ = [
    'CapacitaryResult',
    'CapacityValue',
    'ConvergenceTable',
    'LipschitzProbe',
    'capacity_by_quadrature',
    'capacity_exponent',
    'capterm_convergence',
    'lipschitz_probe',
    'pcap_annulus_closed_form',
    'pcap_numeric',
    'phi_approx',
    'phi_local',
    'phi_nonlocal',
    'profile_energy',
    'radial_profile',
    'rotation_probe',
    'vectorial_capacity_check',
]
