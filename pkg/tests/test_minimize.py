"""
Frozen-cell constrained minimization.
"""

import numpy as np
import pytest

from src.core.errors import SolverError
from src.core.energy import EnergyParams, nonlocal_energy
from src.core.fields import GridDomain, GridFunction
from src.core.kernels import builtin_kernel
from src.core.minimize import (
    ConstraintMask,
    LocalDirichletObjective,
    NonlocalObjective,
    PowerNormDensity,
    SolverOptions,
    default_mu_schedule,
    minimize_energy,
    minimize_local_dirichlet,
    one_sided_gradient,
)


def _strip(n=9, ny=5, h=0.125):
    """Box of n x ny cells, first column frozen at 0 and last at 1."""
    dom = GridDomain.box([0.0, 0.0], [n * h, ny * h], h)
    cells = np.zeros(dom.shape, dtype=bool)
    cells[0, :] = True
    constraints = ConstraintMask.empty(dom, 1).freeze(cells, [0.0])
    cells = np.zeros(dom.shape, dtype=bool)
    cells[-1, :] = True
    return dom, constraints.freeze(cells, [1.0])


class TestSolverOptions:

    def test_defaults_validate(self):
        SolverOptions().validate()

    @pytest.mark.parametrize("kwargs", [{"tol": 2.0}, {"max_rounds": 0}, {"mu_stages": -1},
                                        {"clamp": -1.0}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SolverOptions(**kwargs).validate()


class TestMuSchedule:

    def test_quadratic_needs_no_regularization(self):
        dom, _ = _strip()
        objective = LocalDirichletObjective(dom, PowerNormDensity(2.0))
        assert default_mu_schedule(objective, np.zeros(dom.shape + (1,))) == [0.0]

    def test_decreasing_for_p_below_two(self, random_field):
        objective = LocalDirichletObjective(random_field.domain, PowerNormDensity(1.5))
        schedule = default_mu_schedule(objective, random_field.values, SolverOptions(mu_stages=3))
        assert len(schedule) == 4
        assert all(a > b for a, b in zip(schedule, schedule[1:]))


class TestLocalDirichlet:

    @pytest.mark.parametrize("p", [2.0, 1.5])
    def test_strip_has_linear_minimizer(self, p):
        n, ny, h = 9, 5, 0.125
        dom, constraints = _strip(n, ny, h)
        u, report = minimize_local_dirichlet(PowerNormDensity(p), dom, constraints, tol=1e-8)
        expected = h ** 2 * (n - 1) * (ny - 1) * (1.0 / ((n - 1) * h)) ** p
        assert report.objective == pytest.approx(expected, rel=1e-5)
        np.testing.assert_allclose(u.values[:, 0, 0], np.arange(n) / (n - 1), atol=1e-3)

    def test_quadratic_strip_energy(self):
        dom, constraints = _strip(9, 5, 0.125)
        _, report = minimize_local_dirichlet(PowerNormDensity(2.0), dom, constraints, tol=1e-8)
        assert report.objective == pytest.approx(4.0 / 8.0, rel=1e-6)
        assert report.converged
        assert report.mu_path == [0.0]

    def test_energy_scales_with_boundary_data(self):
        dom, constraints = _strip()
        density = PowerNormDensity(1.5)
        _, base = minimize_local_dirichlet(density, dom, constraints, tol=1e-8)
        _, scaled = minimize_local_dirichlet(density, dom, constraints.scaled(2.0), tol=1e-8)
        assert scaled.objective == pytest.approx(2.0 ** 1.5 * base.objective, rel=1e-4)

    def test_clamp_is_respected(self):
        dom, constraints = _strip()
        u, _ = minimize_local_dirichlet(PowerNormDensity(2.0), dom, constraints,
                                        options=SolverOptions(clamp=1.0))
        assert np.all(np.abs(u.values) <= 1.0 + 1e-12)

    def test_relaxing_constraints_lowers_minimum(self):
        dom, constraints = _strip()
        middle = np.zeros(dom.shape, dtype=bool)
        middle[4, :] = True
        density = PowerNormDensity(1.5)
        _, relaxed = minimize_local_dirichlet(density, dom, constraints, tol=1e-8)
        _, held = minimize_local_dirichlet(density, dom, constraints.freeze(middle, [0.2]), tol=1e-8)
        assert relaxed.objective < held.objective

    def test_components_follow_constraints(self):
        dom = GridDomain.box([0.0, 0.0], [1.0, 0.5], 0.125)
        cells = np.zeros(dom.shape, dtype=bool)
        cells[0, :] = True
        cells[-1, :] = True
        constraints = ConstraintMask.empty(dom, 2).freeze(cells, [1.0, -1.0])
        u, report = minimize_local_dirichlet(PowerNormDensity(2.0), dom, constraints, tol=1e-8)
        assert u.m == 2
        assert report.objective == pytest.approx(0.0, abs=1e-9)
        np.testing.assert_allclose(u.active_values(), [[1.0, -1.0]] * dom.n_active, atol=1e-4)


class TestOneSidedGradient:

    def test_affine_field_on_ball(self, square_grid):
        ball = square_grid.ball([0.0, 0.0], 0.75)
        S = np.array([[0.5, -2.0]])
        u = GridFunction.affine(ball, S)
        G, covered = one_sided_gradient(u.values, ball.active, ball.h)
        assert covered.sum() == ball.n_active
        np.testing.assert_allclose(G[covered], np.broadcast_to(S, (ball.n_active, 1, 2)), rtol=1e-9)

    def test_isolated_cell_is_not_covered(self):
        dom = GridDomain.box([0.0, 0.0], [0.375, 0.375], 0.125)
        active = np.zeros(dom.shape, dtype=bool)
        active[1, 1] = True
        _, covered = one_sided_gradient(np.zeros(dom.shape + (1,)), active, dom.h)
        assert not covered.any()


class TestConstraints:

    def test_all_frozen(self, square_grid):
        constraints = ConstraintMask.empty(square_grid, 1).freeze(square_grid.active, [2.0])
        init = GridFunction.constant(square_grid, [2.0])
        objective = LocalDirichletObjective(square_grid, PowerNormDensity(2.0))
        u, report = minimize_energy(objective, constraints, init)
        assert report.iterations == 0
        assert report.objective == 0.0
        assert report.message == "all cells frozen"

    def test_init_must_respect_frozen_values(self):
        dom, constraints = _strip()
        objective = LocalDirichletObjective(dom, PowerNormDensity(2.0))
        with pytest.raises(SolverError, match="frozen values"):
            minimize_energy(objective, constraints, GridFunction.zeros(dom))

    def test_frozen_cells_must_be_active(self, square_grid):
        ball = square_grid.ball([0.0, 0.0], 0.5)
        outside = ~ball.active
        constraints = ConstraintMask.empty(ball, 1).freeze(outside, [1.0])
        objective = LocalDirichletObjective(ball, PowerNormDensity(2.0))
        with pytest.raises(SolverError, match="active"):
            minimize_energy(objective, constraints, GridFunction.zeros(ball))

    def test_negative_mu(self):
        dom, constraints = _strip()
        objective = LocalDirichletObjective(dom, PowerNormDensity(1.5))
        init = GridFunction(dom, constraints.apply(np.zeros(dom.shape + (1,))))
        with pytest.raises(SolverError, match="nonnegative"):
            minimize_energy(objective, constraints, init, mu_schedule=[0.1, -1.0])


class TestNonlocalObjective:

    def test_minimizer_lowers_energy(self, square_grid):
        k = builtin_kernel("indicator-ball", 2, 1, 2.0)
        params = EnergyParams.for_kernel(k, 0.5, 0.125)
        centers = square_grid.centers()[..., 0]
        constraints = (ConstraintMask.empty(square_grid, 1)
                       .freeze(centers < -0.75, [0.0])
                       .freeze(centers > 0.75, [1.0]))
        init = GridFunction(square_grid, constraints.apply(np.zeros(square_grid.shape + (1,))))
        objective = NonlocalObjective(square_grid, k, params)

        u, report = minimize_energy(objective, constraints, init, tol=1e-8)
        assert report.converged
        assert report.objective < objective.value(init.values)
        assert report.objective == pytest.approx(nonlocal_energy(u, None, k, params), rel=1e-12)
        # the minimizer interpolates between the frozen slabs
        middle = u.values[8, 8, 0]
        assert 0.0 < middle < 1.0
