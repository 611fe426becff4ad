"""
Closed-form capacities and the capacitary densities.
"""

import math

import numpy as np
import pytest

from src.core.capacity import (
    capacity_by_quadrature,
    capterm_convergence,
    lipschitz_probe,
    pcap_annulus_closed_form,
    pcap_numeric,
    phi_approx,
    phi_local,
    profile_energy,
    radial_profile,
    rotation_probe,
    vectorial_capacity_check,
)
from src.core.capacity import densities
from src.core.errors import GridError
from src.core.kernels import builtin_kernel
from src.core.minimize import PowerNormDensity


def _square(z):
    return float(np.sum(np.asarray(z) ** 2))


class TestClosedForm:

    def test_quadratic_capacity_in_three_dimensions(self):
        assert pcap_annulus_closed_form(3, 2.0, 2.0) == pytest.approx(8.0 * math.pi, rel=1e-14)
        assert pcap_annulus_closed_form(3, 2.0) == pytest.approx(4.0 * math.pi, rel=1e-14)

    @pytest.mark.parametrize("d,p,R", [(3, 2.0, 2.0), (2, 1.5, 3.0), (3, 2.5, math.inf), (4, 3.0, 5.0)])
    def test_quadrature_agrees(self, d, p, R):
        assert capacity_by_quadrature(d, p, R) == pytest.approx(
            pcap_annulus_closed_form(d, p, R), rel=1e-9)

    def test_capacity_decreases_in_R(self):
        values = [pcap_annulus_closed_form(3, 2.0, R) for R in (1.5, 2.0, 4.0, math.inf)]
        assert all(b < a for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("d,p,R", [(2, 2.0, 2.0), (3, 1.0, 2.0), (3, 2.0, 1.0)])
    def test_out_of_range(self, d, p, R):
        with pytest.raises(GridError):
            pcap_annulus_closed_form(d, p, R)

    def test_radial_profile_boundary_values(self):
        profile = radial_profile(3, 2.0, 2.0)
        np.testing.assert_allclose(profile([0.5, 1.0, 2.0, 3.0]), [1.0, 1.0, 0.0, 0.0], atol=1e-15)
        assert profile(1.5) == pytest.approx((1.0 / 1.5 - 0.5) / 0.5)


class TestDiscreteCapacity:

    def test_vectorial_energy_is_homogeneous(self):
        vector, scalar = vectorial_capacity_check(3, 2.0, 2.0, [1.0, -2.0], 0.25)
        assert vector == pytest.approx(scalar, rel=1e-12)

    def test_minimum_below_profile_energy(self):
        numeric = pcap_numeric(3, 2.0, 2.0, 0.25)
        assert numeric.value > 0.0
        assert numeric.value <= profile_energy(3, 2.0, 2.0, 0.25) * (1.0 + 1e-8)

    @pytest.mark.slow
    def test_numeric_capacity_approaches_closed_form(self):
        numeric = pcap_numeric(3, 2.0, 2.0, 0.125)
        assert numeric.value == pytest.approx(8.0 * math.pi, rel=0.3)


class TestPhiApprox:

    def test_zero_target(self, ball_kernel_3d):
        result, minimizer = phi_approx(ball_kernel_3d, 0.5, 1.0, 3.0, [0.0], 0.125,
                                       keep_minimizer=True)
        assert result.value == 0.0
        assert not np.any(minimizer.values)

    def test_outer_radius_too_small(self, ball_kernel_3d):
        with pytest.raises(GridError, match="R >= 2 \\+ T eps"):
            phi_approx(ball_kernel_3d, 0.5, 1.0, 2.25, [1.0], 0.125)

    def test_under_resolution_flagged(self, ball_kernel_3d):
        result = phi_approx(ball_kernel_3d, 0.5, 1.0, 3.0, [0.0], 0.25)
        assert result.under_resolved

    def test_homogeneity(self, ball_kernel_3d):
        one = phi_approx(ball_kernel_3d, 0.5, 1.0, 3.0, [1.0], 0.25, keep_minimizer=False)
        two = phi_approx(ball_kernel_3d, 0.5, 1.0, 3.0, [2.0], 0.25, keep_minimizer=False)
        assert one.value > 0.0
        assert two.value == pytest.approx(2.0 ** 2 * one.value, rel=1e-4)

    def test_row_layout(self, ball_kernel_3d):
        row = phi_approx(ball_kernel_3d, 0.5, 1.0, 3.0, [0.0], 0.125).row()
        assert row["z1"] == 0.0
        assert row["R"] == 3.0 and row["epsilon"] == 0.5

    def test_clamp_bounds_cell_norm(self, monkeypatch):
        seen = {}

        class Captured(Exception):
            pass

        def capture(objective, constraints, init, tol=None, mu_schedule=None, options=None):
            seen["clamp"] = options.clamp
            raise Captured

        monkeypatch.setattr(densities, "minimize_energy", capture)
        k = builtin_kernel("indicator-ball", 2, 2, 1.5)
        with pytest.raises(Captured):
            phi_approx(k, 0.5, 1.0, 3.0, [3.0, 4.0], 0.125)
        assert seen["clamp"] == pytest.approx(50.0 / math.sqrt(2.0), rel=1e-12)
        assert math.sqrt(2.0) * seen["clamp"] <= 10.0 * 5.0 * (1.0 + 1e-12)


class TestLocalDensity:

    def test_zero_target(self):
        result = phi_local(PowerNormDensity(2.0), [0.0], [2.0, 3.0], 0.25, 3)
        assert result.value == 0.0

    @pytest.mark.slow
    def test_quadratic_density_recovers_capacity(self):
        result = phi_local(PowerNormDensity(2.0), [1.0], [2.0, 3.0, 4.0], 0.125, 3)
        assert result.monotone
        assert result.value == pytest.approx(4.0 * math.pi, rel=0.3)


class TestSampledConstants:

    def test_lipschitz_skips_coincident_pairs(self):
        probe = lipschitz_probe(_square, [([1.0], [1.0]), ([1.0], [2.0])], 2.0)
        assert len(probe.ratios) == 1
        assert probe.constant == pytest.approx(1.0)

    def test_lipschitz_without_pairs(self):
        assert lipschitz_probe(_square, [], 2.0).constant == 0.0

    def test_rotation(self):
        Q = np.array([[0.0, -1.0], [1.0, 0.0]])
        value, rotated = rotation_probe(_square, [1.0, 2.0], Q)
        assert value == pytest.approx(rotated)


class TestCapacitaryTerm:

    def test_zero_target_converges_trivially(self, ball_kernel_3d):
        table = capterm_convergence(ball_kernel_3d, 1.0, [0.0], [1.0, 0.5],
                                    lambda eps: 2.0 + eps)
        assert table.reference == 0.0
        assert table.gaps_decreasing
        assert [row["value"] for row in table.rows] == [0.0, 0.0]

    def test_radius_count_mismatch(self, ball_kernel_3d):
        with pytest.raises(GridError, match="one radius per eps"):
            capterm_convergence(ball_kernel_3d, 1.0, [1.0], [1.0, 0.5], [3.0])
