"""
Minimize Module - frozen-cell constrained minimization of grid energies.
"""

from .objectives import (
    Density,
    LocalDirichletObjective,
    NonlocalObjective,
    Objective,
    PowerNormDensity,
    QuadratureDensity,
    forward_gradient,
    forward_valid,
    one_sided_gradient,
)
from .solver import (
    ConstraintMask,
    SolveReport,
    SolverOptions,
    default_mu_schedule,
    minimize_energy,
    minimize_local_dirichlet,
)

__all__ = [
    'ConstraintMask',
    'Density',
    'LocalDirichletObjective',
    'NonlocalObjective',
    'Objective',
    'PowerNormDensity',
    'QuadratureDensity',
    'SolveReport',
    'SolverOptions',
    'default_mu_schedule',
    'forward_gradient',
    'forward_valid',
    'minimize_energy',
    'minimize_local_dirichlet',
    'one_sided_gradient',
]
