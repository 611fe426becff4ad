"""
Regimes Module - scaling-law classification and perforated-domain experiments.
"""

from .experiments import (
    DensityTable,
    NegligibilityTable,
    RecoveryBreakdown,
    RiemannSum,
    SandwichResult,
    build_density_table,
    limit_functional,
    negligibility_check,
    recovery_construction,
    riemann_sum_density,
    sandwich_check,
)
from .scaling import (
    CANONICAL_TAGS,
    LAW_REGISTRY,
    RegimeClass,
    RegimeTag,
    Scales,
    ScalingLaw,
    canonical_laws,
    classify,
    classify_regime,
    condition_b,
    create_law,
)

__all__ = [
    'CANONICAL_TAGS',
    'DensityTable',
    'LAW_REGISTRY',
    'NegligibilityTable',
    'RecoveryBreakdown',
    'RegimeClass',
    'RegimeTag',
    'RiemannSum',
    'SandwichResult',
    'Scales',
    'ScalingLaw',
    'build_density_table',
    'canonical_laws',
    'classify',
    'classify_regime',
    'condition_b',
    'create_law',
    'limit_functional',
    'negligibility_check',
    'recovery_construction',
    'riemann_sum_density',
    'sandwich_check',
]
