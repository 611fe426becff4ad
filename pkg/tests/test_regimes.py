"""
Scaling laws, regime classification and the perforated-domain experiments.
"""

import math

import numpy as np
import pytest

from src.core.errors import GridError, RegimeError
from src.core.fields import GridDomain, GridFunction, Perforation
from src.core.homogenize import fhom_density
from src.core.regimes import (
    CANONICAL_TAGS,
    DensityTable,
    RegimeClass,
    RegimeTag,
    ScalingLaw,
    canonical_laws,
    classify,
    classify_regime,
    condition_b,
    create_law,
    limit_functional,
    negligibility_check,
    recovery_construction,
    riemann_sum_density,
    sandwich_check,
)
from src.core.kernels import builtin_kernel
from src.nlhom.commands import slack_decreasing

INF = math.inf


class TestClassification:

    @pytest.mark.parametrize("d,p", [(3, 2.0), (2, 1.5), (4, 2.5)])
    def test_canonical_table(self, d, p):
        laws = canonical_laws(d, p)
        assert [law.name for law in laws] == list(CANONICAL_TAGS)
        for law in laws:
            assert classify_regime(law).tag == CANONICAL_TAGS[law.name], law.name

    @pytest.mark.parametrize("alpha,beta,a,b,tag", [
        (0.0, 1.0, True, False, RegimeTag.LOCAL_CAPACITARY),
        (2.0, 0.5, True, False, RegimeTag.NONLOCAL_CAPACITARY),
        (1.0, 0.0, True, False, RegimeTag.UNCONSTRAINED),
        (0.0, INF, False, False, RegimeTag.TRIVIAL_COLLAPSE),
        (INF, 1.0, True, False, RegimeTag.UNCONSTRAINED),
        (INF, INF, False, True, RegimeTag.UNCONSTRAINED),
        (INF, INF, False, False, RegimeTag.UNCHARACTERIZED),
    ])
    def test_pure_classification(self, alpha, beta, a, b, tag):
        assert classify(alpha, beta, a, b).tag == tag

    def test_reaction_coefficient(self):
        regime = RegimeClass(RegimeTag.NONLOCAL_CAPACITARY, 1.0, 2.0)
        assert regime.reaction_coefficient(3, 2.0) == pytest.approx(2.0)
        assert RegimeClass(RegimeTag.UNCONSTRAINED, 1.0, 0.0).reaction_coefficient(3, 2.0) == 0.0

    def test_slow_eps_satisfies_side_condition(self):
        assert condition_b(create_law("slow-eps", 3, 2.0))
        assert not condition_b(create_law("uncharacterized", 3, 2.0))

    def test_supercritical_law_is_unconstrained(self):
        regime = classify_regime(create_law("supercritical", 2, 1.5))
        assert regime.tag == RegimeTag.UNCONSTRAINED
        assert "(b)" in regime.reason

    def test_unknown_law(self):
        with pytest.raises(RegimeError, match="Unknown scaling law"):
            create_law("huge-holes", 3, 2.0)


class TestLawValidation:

    def test_holes_must_fit_the_period(self):
        law = ScalingLaw("fat", 3, 2.0, lambda e: e, lambda t: 0.6 * t, beta=INF, alpha=INF)
        with pytest.raises(RegimeError, match="violates"):
            law.validate()

    def test_declared_limit_checked(self):
        law = create_law("nonlocal", 3, 2.0)
        law.beta = 2.0
        with pytest.raises(RegimeError, match="declared beta"):
            law.validate()

    def test_exponent_range(self):
        law = ScalingLaw("flat", 2, 2.0, lambda e: e, lambda t: t / 4.0, beta=INF, alpha=1.0)
        with pytest.raises(RegimeError, match="1 < p < d"):
            law.validate()


class TestDensityTable:

    def test_power_law(self):
        table = DensityTable.power_law(3.0, 1.5)
        assert table(np.array([2.0])) == pytest.approx(3.0 * 2.0 ** 1.5)
        assert table.homogeneity_spread == 1.0

    def test_sampled_directions(self):
        table = DensityTable.from_function(
            lambda z: (2.0 if z[0] != 0.0 else 5.0) * np.linalg.norm(z) ** 1.5, 1.5, 2)
        np.testing.assert_allclose(table.coefficients, [2.0, 5.0, 2.0, 5.0])
        assert table(np.array([0.0, -2.0])) == pytest.approx(5.0 * 2.0 ** 1.5)
        assert len(table.to_frame()) == 4 * 4


class TestLimitFunctional:

    def test_trivial_collapse(self, ball_kernel_2d, square_grid):
        regime = RegimeClass(RegimeTag.TRIVIAL_COLLAPSE, 1.0, INF)
        assert limit_functional(ball_kernel_2d, regime, GridFunction.zeros(square_grid)) == 0.0
        one = GridFunction.constant(square_grid, [1.0])
        assert limit_functional(ball_kernel_2d, regime, one) == INF

    def test_uncharacterized_has_no_limit(self, ball_kernel_2d, square_grid):
        regime = RegimeClass(RegimeTag.UNCHARACTERIZED, INF, INF)
        with pytest.raises(RegimeError, match="uncharacterized"):
            limit_functional(ball_kernel_2d, regime, GridFunction.zeros(square_grid))

    def test_capacitary_regime_needs_table(self, ball_kernel_2d, square_grid):
        regime = RegimeClass(RegimeTag.LOCAL_CAPACITARY, 0.0, 1.0)
        with pytest.raises(RegimeError, match="density table"):
            limit_functional(ball_kernel_2d, regime, GridFunction.zeros(square_grid))

    @pytest.mark.parametrize("h", [0.125, 1.0 / 32])
    def test_affine_field_gives_fhom(self, ball_kernel_2d, h):
        domain = GridDomain.box([0.0, 0.0], [1.0, 1.0], h)
        S = np.array([[1.0, 0.0]])
        u = GridFunction.affine(domain, S)
        regime = RegimeClass(RegimeTag.UNCONSTRAINED, 1.0, 0.0)
        expected = fhom_density(ball_kernel_2d)(S)
        assert limit_functional(ball_kernel_2d, regime, u) == pytest.approx(expected, rel=1e-9)

    def test_reaction_term_of_constant_field(self, ball_kernel_2d):
        domain = GridDomain.box([0.0, 0.0], [1.0, 1.0], 0.125)
        u = GridFunction.constant(domain, [1.0])
        regime = RegimeClass(RegimeTag.LOCAL_CAPACITARY, 0.0, 2.0)
        table = DensityTable.power_law(3.0, 1.5)
        assert limit_functional(ball_kernel_2d, regime, u, table) == pytest.approx(3.0 * 2.0 ** 0.5)


class TestRecovery:

    @pytest.fixture
    def geometry(self):
        """One hole of radius eps = 1/64 at the origin of [-1/4, 1/4]^2."""
        domain = GridDomain.cube(2, 0.25, 1.0 / 256)
        return domain, Perforation(1.0, 1.0 / 64)

    def test_per_hole_identity(self, ball_kernel_2d, geometry):
        domain, P = geometry
        u = GridFunction.constant(domain, [1.0])
        w, breakdown = recovery_construction(ball_kernel_2d, None, u, 1.0 / 64, 1.0, P)
        assert breakdown.holes == 1
        assert breakdown.identity_gap <= 1e-12
        assert breakdown.template_value > 0.0
        assert breakdown.total == pytest.approx(
            breakdown.bulk + breakdown.perforation + breakdown.cross, rel=1e-12)
        assert w.values[64, 64, 0] == 0.0

    def test_zero_field(self, ball_kernel_2d, geometry):
        domain, P = geometry
        w, breakdown = recovery_construction(ball_kernel_2d, None, GridFunction.zeros(domain),
                                             1.0 / 64, 1.0, P)
        assert breakdown.holes == 0 and breakdown.total == 0.0
        assert not np.any(w.values)

    def test_unresolved_scales(self, ball_kernel_2d, geometry):
        domain, P = geometry
        with pytest.raises(GridError, match="Unresolvable"):
            recovery_construction(ball_kernel_2d, None, GridFunction.zeros(domain), 1.0 / 128, 1.0, P)

    def test_needs_law_or_perforation(self, ball_kernel_2d, geometry):
        domain, _ = geometry
        with pytest.raises(RegimeError):
            recovery_construction(ball_kernel_2d, None, GridFunction.zeros(domain), 1.0 / 64)

    def test_no_period_cube_leaves_slack_undefined(self, ball_kernel_2d, geometry):
        domain, P = geometry
        u = GridFunction.constant(domain, [1.0])
        _, breakdown = recovery_construction(ball_kernel_2d, None, u, 1.0 / 64, 1.0, P)
        assert breakdown.region_cells == 0
        assert math.isnan(breakdown.slack) and math.isnan(breakdown.relative_slack)

    def test_constant_field_matches_limit(self, ball_kernel_2d, geometry):
        # delta = 1/2: the period cube around the origin is the whole box
        domain, _ = geometry
        u = GridFunction.constant(domain, [1.5])
        _, breakdown = recovery_construction(ball_kernel_2d, None, u, 1.0 / 64, 1.0,
                                             Perforation(0.5, 1.0 / 64))
        assert breakdown.holes == 1
        assert breakdown.region_cells == 128 * 128
        assert breakdown.region_energy == pytest.approx(breakdown.total, rel=1e-12)
        # r^{d-p} |z|^p phi(e_1), the density weight times |cube| = delta^d
        assert breakdown.limit == pytest.approx(
            (1.0 / 64) ** 0.5 * 1.5 ** 1.5 * breakdown.template_value, rel=1e-12)
        assert breakdown.relative_slack <= 1e-9
        assert breakdown.to_dict()["relative_slack"] == breakdown.relative_slack

    def test_slack_trend(self):
        assert slack_decreasing([(1 / 32, 0.2), (1 / 64, 0.1), (1 / 128, math.nan)])
        assert slack_decreasing([(1 / 64, 0.1), (1 / 32, 0.2)])
        assert not slack_decreasing([(1 / 32, 0.1), (1 / 64, 0.2)])


class TestRiemannSum:

    def test_constant_field(self):
        law = create_law("nonlocal", 2, 1.5)
        domain = GridDomain.box([0.0, 0.0], [1.0, 1.0], 1.0 / 32)
        u = GridFunction.constant(domain, [2.0])
        result = riemann_sum_density(u, law, DensityTable.power_law(1.0, 1.5), 1.0 / 16)
        assert result.integral == pytest.approx(2.0 ** 1.5)
        assert result.gap <= 1e-12


class TestNegligibility:

    def test_requires_supercritical_law(self, ball_kernel_2d):
        with pytest.raises(RegimeError, match="not supercritical"):
            negligibility_check(ball_kernel_2d, create_law("nonlocal", 2, 1.5),
                                lambda x: np.ones(x.shape[:-1]), [0.125])

    def test_pinning_costs_energy(self, ball_kernel_2d):
        table = negligibility_check(ball_kernel_2d, create_law("supercritical", 2, 1.5),
                                    lambda x: np.ones(x.shape[:-1]), [0.125, 0.0625])
        assert len(table.rows) == 2
        assert all(row["energy_free"] == 0.0 for row in table.rows)
        assert all(row["gap"] > 0.0 and row["holes"] > 0 for row in table.rows)
        assert table.constant > 0.0
        assert list(table.to_frame().columns)[:3] == ["epsilon", "delta", "r"]

    def test_strict_and_factor_two_verdicts(self, ball_kernel_2d):
        table = negligibility_check(ball_kernel_2d, create_law("supercritical", 2, 1.5),
                                    lambda x: np.ones(x.shape[:-1]), [0.125, 0.0625])
        first, second = table.rows
        assert first["within_constant"] and first["within_factor_2"]
        assert second["within_constant"] == (second["ratio"] <= table.constant * (1.0 + 1e-12))
        assert second["within_factor_2"] == (second["ratio"] <= 2.0 * table.constant)
        assert table.bounded == second["within_factor_2"]
        assert table.strict == second["within_constant"]
        assert not table.strict or table.bounded


class TestSandwich:

    def test_pinned_minimum_is_between(self):
        k = builtin_kernel("indicator-ball", 2, 1, 2.0)
        domain = GridDomain.cube(2, 0.5, 1.0 / 16)
        u = GridFunction.constant(domain, [1.0])
        result = sandwich_check(k, None, u, 0.125, 1.0, Perforation(0.25, 0.05))
        assert result.ordered
        assert result.unconstrained == pytest.approx(0.0, abs=1e-12)
        assert 0.0 < result.pinned <= result.fully_pinned * (1.0 + 1e-8)
        assert 0.0 <= result.position <= 1.0 + 1e-8
