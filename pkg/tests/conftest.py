"""Shared fixtures: small kernels, grids and seeded generators."""

import numpy as np
import pytest

from src.core.energy import EnergyParams
from src.core.fields import GridDomain, GridFunction
from src.core.kernels import builtin_kernel


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def ball_kernel_2d():
    """Indicator of the unit ball, d=2, p=1.5."""
    return builtin_kernel("indicator-ball", 2, 1, 1.5)


@pytest.fixture
def ball_kernel_3d():
    """Indicator of the unit ball, d=3, p=2 (quadratic energies)."""
    return builtin_kernel("indicator-ball", 3, 1, 2.0)


@pytest.fixture
def square_grid():
    """[-1, 1]^2 with h = 1/8."""
    return GridDomain.cube(2, 1.0, 0.125)


@pytest.fixture
def random_field(square_grid, rng):
    return GridFunction(square_grid, rng.standard_normal(square_grid.shape))


@pytest.fixture
def params_2d(ball_kernel_2d):
    """eps = 1/2 on h = 1/8: four cells per unit shift."""
    return EnergyParams.for_kernel(ball_kernel_2d, 0.5, 0.125)
