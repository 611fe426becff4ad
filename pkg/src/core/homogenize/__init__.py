"""
Homogenize Module - cell problems and the convex formula for f_hom.
"""

from .cell_problem import (
    CellProblemResult,
    CellProblemValue,
    FhomBounds,
    QuadratureOptions,
    QuadratureValue,
    boundary_layer,
    extrapolate_inverse,
    fhom_bounds,
    fhom_cell,
    fhom_cell_schedule,
    fhom_convex_formula,
    fhom_density,
    midpoint_nodes,
)

__all__ = [
    'CellProblemResult',
    'CellProblemValue',
    'FhomBounds',
    'QuadratureOptions',
    'QuadratureValue',
    'boundary_layer',
    'extrapolate_inverse',
    'fhom_bounds',
    'fhom_cell',
    'fhom_cell_schedule',
    'fhom_convex_formula',
    'fhom_density',
    'midpoint_nodes',
]
