"""
Convex formula, homogenized densities and cell problems.
"""

import math

import numpy as np
import pytest

from src.core.errors import GridError, KernelError
from src.core.homogenize import (
    QuadratureOptions,
    extrapolate_inverse,
    fhom_bounds,
    fhom_cell,
    fhom_cell_schedule,
    fhom_convex_formula,
    fhom_density,
)
from src.core.kernels import builtin_kernel


class TestConvexFormula:

    def test_homogeneity(self, ball_kernel_2d):
        S = np.array([[0.6, -0.8]])
        one = fhom_convex_formula(ball_kernel_2d, S).value
        two = fhom_convex_formula(ball_kernel_2d, 2.0 * S).value
        assert two == pytest.approx(2.0 ** 1.5 * one, rel=1e-12)

    def test_zero_matrix(self, ball_kernel_2d):
        result = fhom_convex_formula(ball_kernel_2d, [[0.0, 0.0]])
        assert result.value == 0.0 and result.error == 0.0

    def test_shape_checked(self, ball_kernel_2d):
        with pytest.raises(KernelError, match="m x d"):
            fhom_convex_formula(ball_kernel_2d, [[1.0, 0.0, 0.0]])

    def test_odd_resolution(self, ball_kernel_2d):
        with pytest.raises(ValueError, match="even integer"):
            fhom_convex_formula(ball_kernel_2d, [[1.0, 0.0]], QuadratureOptions(resolution=7))

    def test_quadrature_error_estimate(self, ball_kernel_2d):
        result = fhom_convex_formula(ball_kernel_2d, [[1.0, 0.0]])
        assert 0.0 < result.error < 0.1 * result.value

    def test_convex_along_segments(self, ball_kernel_2d, rng):
        for _ in range(5):
            A, B = rng.standard_normal((2, 1, 2))
            fA = fhom_convex_formula(ball_kernel_2d, A).value
            fB = fhom_convex_formula(ball_kernel_2d, B).value
            for t in (0.25, 0.5, 0.75):
                mid = fhom_convex_formula(ball_kernel_2d, (1.0 - t) * A + t * B).value
                assert mid <= (1.0 - t) * fA + t * fB + 1e-12 * (fA + fB)


class TestDensity:

    def test_quadratic_ball_coefficient(self, ball_kernel_3d):
        """Integral of xi_1^2 over the unit ball of R^3 is 4 pi / 15."""
        density = fhom_density(ball_kernel_3d)
        assert density(np.array([[1.0, 0.0, 0.0]])) == pytest.approx(4.0 * math.pi / 15.0, rel=1e-8)

    def test_density_agrees_with_quadrature(self, ball_kernel_2d):
        S = np.array([[0.0, 1.0]])
        closed = fhom_density(ball_kernel_2d)(S)
        quadrature = fhom_convex_formula(ball_kernel_2d, S).value
        assert closed == pytest.approx(quadrature, rel=5e-2)

    def test_anisotropic_uses_nodes(self):
        k = builtin_kernel("anisotropic", 2, 2, 1.5, {"a": [1.0, 0.0]})
        density = fhom_density(k, QuadratureOptions(resolution=16))
        assert type(density).__name__ == "QuadratureDensity"
        assert density(np.eye(2)) > 0.0


class TestBounds:

    def test_isotropic_quadratic(self, ball_kernel_3d):
        bounds = fhom_bounds(ball_kernel_3d, QuadratureOptions(resolution=24))
        assert bounds.M0 == pytest.approx(4.0 * math.pi / 5.0, rel=1e-8)
        assert bounds.m0 == pytest.approx(4.0 * math.pi / 15.0, rel=5e-2)
        assert bounds.m0 <= bounds.M0


class TestCellProblem:

    def test_small_cube_rejected(self, ball_kernel_2d):
        with pytest.raises(GridError, match="R >= 4"):
            fhom_cell(ball_kernel_2d, [[1.0, 0.0]], 2.0, 0.25)

    def test_affine_data_is_stationary(self):
        k = builtin_kernel("indicator-ball", 2, 1, 2.0)
        result = fhom_cell(k, [[1.0, 0.0]], 4.0, 0.25, keep_minimizer=True)
        assert result.report.iterations == 0
        assert result.minimizer is not None
        assert 0.0 < result.value < fhom_convex_formula(k, [[1.0, 0.0]]).value

    def test_schedule_must_increase(self, ball_kernel_2d):
        with pytest.raises(GridError, match="increasing"):
            fhom_cell_schedule(ball_kernel_2d, [[1.0, 0.0]], [8.0, 4.0], 0.25)

    @pytest.mark.parametrize("p", [2.0, 1.5])
    def test_cell_value_homogeneity(self, p, rng):
        k = builtin_kernel("indicator-ball", 2, 1, p)
        S = rng.standard_normal((1, 2))
        t = 2.5
        one = fhom_cell(k, S, 4.0, 0.25).value
        scaled = fhom_cell(k, t * S, 4.0, 0.25).value
        assert scaled == pytest.approx(t ** p * one, rel=1e-6)

    def test_gap_to_convex_formula_shrinks(self):
        k = builtin_kernel("indicator-ball", 2, 1, 2.0)
        S = [[1.0, 0.0]]
        result = fhom_cell_schedule(k, S, [4.0, 6.0, 8.0], 0.25)
        gaps = [abs(v - result.convex_formula_value) for v in result.per_R_values]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))


class TestExtrapolation:

    def test_exact_on_inverse_law(self):
        R = [4.0, 8.0, 16.0]
        values = [2.5 - 3.0 / r for r in R]
        assert extrapolate_inverse(R, values) == pytest.approx(2.5, rel=1e-12)

    def test_single_value(self):
        assert extrapolate_inverse([4.0], [1.25]) == 1.25
