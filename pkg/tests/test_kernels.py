"""
Kernel families, truncation and the sampled assumption checks.
"""

import math

import numpy as np
import pytest

from src.core.errors import KernelError
from src.core.homogenize import fhom_convex_formula
from src.core.kernels import (
    CallableKernel,
    builtin_kernel,
    effective_radius,
    growth_integral,
    normalized_constant,
    sphere_abs_moment,
    sphere_area,
    truncate_kernel,
    verify_assumptions,
)


class TestSphereMeasures:

    def test_sphere_area_low_dimensions(self):
        assert sphere_area(2) == pytest.approx(2.0 * math.pi, rel=1e-14)
        assert sphere_area(3) == pytest.approx(4.0 * math.pi, rel=1e-14)

    def test_abs_moment_p2_is_area_over_d(self):
        """Integral of theta_1^2 over the sphere equals |S^{d-1}| / d."""
        for d in (2, 3, 4):
            assert sphere_abs_moment(d, 2.0) == pytest.approx(sphere_area(d) / d, rel=1e-12)


class TestBuiltinFactory:

    def test_unknown_family(self):
        with pytest.raises(KernelError, match="Unknown kernel family"):
            builtin_kernel("gaussian", 2, 1, 1.5)

    def test_unknown_parameter(self):
        with pytest.raises(KernelError, match="Unknown parameters"):
            builtin_kernel("indicator-ball", 2, 1, 1.5, {"sigma": 1.0})

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.5])
    def test_exponent_outside_range(self, p):
        with pytest.raises(KernelError, match=r"\(1, 2\)"):
            builtin_kernel("indicator-ball", 2, 1, p)

    def test_anisotropic_needs_direction(self):
        with pytest.raises(KernelError, match="direction"):
            builtin_kernel("anisotropic", 2, 2, 1.5)

    def test_anisotropic_direction_length(self):
        with pytest.raises(KernelError, match="length m"):
            builtin_kernel("anisotropic", 2, 2, 1.5, {"a": [1.0, 0.0, 0.0]})

    def test_normalize_and_c_are_exclusive(self):
        with pytest.raises(KernelError, match="either c or normalize"):
            builtin_kernel("indicator-ball", 3, 1, 2.0, {"c": 2.0, "normalize": True})

    def test_indicator_metadata(self):
        k = builtin_kernel("indicator-ball", 3, 2, 2.0, {"rho": 2.0})
        assert k.support_radius == 2.0
        assert k.r0 == 1.0
        assert k.even and k.radial and k.isotropic_in_z and k.convex_in_z


class TestEvaluation:

    def test_indicator_values(self, ball_kernel_2d):
        xi = np.array([[0.5, 0.0], [0.0, 1.0], [1.0, 1.0]])
        z = np.array([[2.0], [2.0], [2.0]])
        expected = np.array([2.0 ** 1.5, 2.0 ** 1.5, 0.0])
        np.testing.assert_allclose(ball_kernel_2d.eval(xi, z), expected, rtol=1e-14)

    def test_regularized_value_vanishes_at_zero(self, ball_kernel_2d):
        xi = np.zeros((1, 2))
        z = np.zeros((1, 1))
        assert ball_kernel_2d.eval(xi, z, mu=0.3)[0] == 0.0

    def test_gradient_matches_difference_quotient(self, rng):
        k = builtin_kernel("anisotropic", 3, 2, 2.5, {"a": [1.0, 2.0], "c_iso": 0.5})
        xi = rng.uniform(-0.5, 0.5, (5, 3))
        z = rng.standard_normal((5, 2))
        step = 1e-6
        grad = k.grad_z(xi, z)
        for j in range(2):
            e = np.zeros(2)
            e[j] = step
            numeric = (k.eval(xi, z + e) - k.eval(xi, z - e)) / (2.0 * step)
            np.testing.assert_allclose(grad[:, j], numeric, rtol=1e-6, atol=1e-8)

    def test_smooth_decay_is_unbounded(self):
        k = builtin_kernel("smooth-decay", 2, 1, 1.5)
        assert k.support_radius is None
        assert k.eval(np.array([3.0, 0.0]), np.array([1.0])) == pytest.approx(math.exp(-9.0))


class TestTruncation:

    def test_truncated_kernel_cuts_support(self):
        k = builtin_kernel("smooth-decay", 2, 1, 1.5)
        kt = truncate_kernel(k, 2.0)
        assert kt.support_radius == 2.0
        assert kt.eval(np.array([2.5, 0.0]), np.array([1.0])) == 0.0
        assert kt.eval(np.array([1.5, 0.0]), np.array([1.0])) == pytest.approx(math.exp(-2.25))

    def test_truncation_below_r0(self, ball_kernel_2d):
        with pytest.raises(KernelError, match="must exceed r0"):
            truncate_kernel(ball_kernel_2d, 0.25)

    def test_effective_radius_of_bounded_kernel(self, ball_kernel_2d):
        assert effective_radius(ball_kernel_2d) == 1.0

    def test_effective_radius_tail(self):
        k = builtin_kernel("smooth-decay", 3, 1, 2.0)
        T = effective_radius(k, rel_tol=1e-8)
        total = growth_integral(k)
        inside = growth_integral(k, upper=T)
        assert (total - inside) / total <= 1e-6
        assert T > 3.0


class TestAssumptions:

    @pytest.mark.parametrize("family,params", [
        ("indicator-ball", {}),
        ("smooth-decay", {}),
        ("anisotropic", {"a": [1.0]}),
    ])
    def test_builtins_pass(self, family, params):
        k = builtin_kernel(family, 3, 1, 2.0, params)
        report = verify_assumptions(k, samples=2000, seed=3)
        assert report.passed(tol=1e-9)
        assert report.growth_integral_finite
        assert report.lipschitz_constant <= k.p

    def test_report_is_reproducible(self, ball_kernel_2d):
        first = verify_assumptions(ball_kernel_2d, samples=500, seed=11).to_dict()
        second = verify_assumptions(ball_kernel_2d, samples=500, seed=11).to_dict()
        assert first == second

    def test_broken_homogeneity_is_reported(self):
        k = CallableKernel(
            2, 1, 1.5,
            eval_fn=lambda xi, z, mu: np.sum(z * z, axis=-1) * (np.linalg.norm(xi, axis=-1) <= 1.0),
            grad_fn=lambda xi, z, mu: 2.0 * z,
            envelope_M=lambda xi: 10.0 * (np.linalg.norm(xi, axis=-1) <= 1.0),
            envelope_m=lambda xi: 0.0 * xi[..., 0],
            r0=0.5, lambda0=1.0, support_radius=1.0,
        )
        report = verify_assumptions(k, samples=500)
        assert report.homogeneity_violation > 1e-3
        assert not report.short_range_ok
        assert not report.passed()


class TestNormalization:

    @pytest.mark.parametrize("family", ["indicator-ball", "smooth-decay"])
    def test_normalized_kernel_has_unit_fhom(self, family):
        """The convex formula of the normalized kernel equals |S|^p."""
        k = builtin_kernel(family, 2, 1, 1.5, {"normalize": True})
        value = fhom_convex_formula(k, [[1.0, 0.0]]).value
        assert value == pytest.approx(1.0, rel=5e-2)

    def test_normalized_constant_indicator_p2(self):
        c = normalized_constant("indicator-ball", 3, 2.0)
        # integral of xi_1^2 over B_1 in R^3 is 4 pi / 15
        assert c == pytest.approx(15.0 / (4.0 * math.pi), rel=1e-12)

    def test_normalized_constant_needs_symmetry(self):
        with pytest.raises(KernelError):
            normalized_constant("anisotropic", 2, 1.5)
