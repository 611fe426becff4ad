"""
Fields Module - grid domains, piecewise-constant fields and grid operators.
"""

from .field_io import export_csv, field_frame, load_field, save_field
from .grid import (
    CoarsenInfo,
    GridDomain,
    GridFunction,
    Perforation,
    apply_pinning,
    cell_average,
    coarsen,
    coarsen_side,
    finite_difference,
    lp_norm,
    p_star,
    pad,
    pair_slices,
    pinned_mask,
    radial_truncation,
    shift_offset,
    shifted_cells,
)

__all__ = [
    'CoarsenInfo',
    'GridDomain',
    'GridFunction',
    'Perforation',
    'apply_pinning',
    'cell_average',
    'coarsen',
    'coarsen_side',
    'export_csv',
    'field_frame',
    'finite_difference',
    'load_field',
    'lp_norm',
    'p_star',
    'pad',
    'pair_slices',
    'pinned_mask',
    'radial_truncation',
    'save_field',
    'shift_offset',
    'shifted_cells',
]
