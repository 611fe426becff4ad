"""
Nonlocal Kernel Base Interface

Abstract base class for the integrands f(xi, z) of convolution-type energies.
Built-in families (indicator-ball, smooth-decay, anisotropic) and user kernels
inherit from this class and supply the evaluation, the z-gradient and the
analytic envelopes M(xi), m(xi).

All evaluation methods broadcast: xi has shape (..., d), z has shape (..., m),
and the result has the broadcast leading shape.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, asdict
from enum import Enum
from typing import Any, Callable, Dict, Optional

import numpy as np
from scipy import integrate, special

from ..errors import KernelError


logger = logging.getLogger(__name__)


class KernelFamily(Enum):
    """Kernel families"""
    INDICATOR_BALL = "indicator-ball"
    SMOOTH_DECAY = "smooth-decay"
    ANISOTROPIC = "anisotropic"
    TRUNCATED = "truncated"
    CUSTOM = "custom"


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^{d-1}."""
    return 2.0 * math.pi ** (d / 2.0) / special.gamma(d / 2.0)


def sphere_abs_moment(d: int, p: float) -> float:
    """Integral of |theta_1|^p over the unit sphere S^{d-1}."""
    return (2.0 * math.pi ** ((d - 1) / 2.0) * special.gamma((p + 1) / 2.0)
            / special.gamma((d + p) / 2.0))


def regularized_norm(z: np.ndarray, mu: float = 0.0) -> np.ndarray:
    """|z|_mu = sqrt(|z|^2 + mu^2) over the last axis."""
    sq = np.sum(z * z, axis=-1)
    if mu > 0.0:
        sq = sq + mu * mu
    return np.sqrt(sq)


def power_norm(z: np.ndarray, p: float, mu: float = 0.0) -> np.ndarray:
    """|z|_mu^p - mu^p, so that the value at z = 0 stays 0 for every mu."""
    value = regularized_norm(z, mu) ** p
    if mu > 0.0:
        value = value - mu ** p
    return value


def power_norm_grad(z: np.ndarray, p: float, mu: float = 0.0) -> np.ndarray:
    """z-gradient of power_norm: p |z|_mu^{p-2} z."""
    norm = regularized_norm(z, mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = p * norm ** (p - 2.0)
    if p >= 2.0:
        factor = np.where(norm > 0.0, factor, 0.0)
    return factor[..., None] * z


@dataclass
class AssumptionReport:
    """Outcome of the sampled structural checks on a kernel"""
    family: str
    samples: int
    seed: int
    homogeneity_violation: float      # max relative |f(tz) - t^p f(z)|
    envelope_violation: float         # max relative breach of m|z|^p <= f <= M|z|^p
    short_range_min: float            # min envelope_m over sampled |xi| <= r0
    lambda0: float
    short_range_ok: bool
    growth_integral: float            # integral of M(xi)(|xi|^p + 1)
    growth_integral_finite: bool
    lipschitz_constant: float         # smallest empirical C in the (L) bound

    def to_dict(self) -> Dict[str, Any]:
        """Convert report to dictionary"""
        return asdict(self)

    def passed(self, tol: float = 1e-12) -> bool:
        return (self.homogeneity_violation <= tol
                and self.envelope_violation <= tol
                and self.short_range_ok
                and self.growth_integral_finite
                and math.isfinite(self.lipschitz_constant))


class KernelSpec(ABC):
    """
    Abstract integrand f(xi, z) of a nonlocal energy.

    Concrete kernels must be p-homogeneous in z, vanish at z = 0 and provide
    envelopes m(xi)|z|^p <= f(xi, z) <= M(xi)|z|^p. Instances are immutable
    and shared freely between evaluation workers.
    """

    family = KernelFamily.CUSTOM

    def __init__(
        self,
        d: int,
        m: int,
        p: float,
        r0: float,
        lambda0: float,
        support_radius: Optional[float] = None,
        convex_in_z: bool = True,
        even: bool = True,
        radial: bool = True,
        isotropic_in_z: bool = False,
        check_exponent: bool = True,
    ):
        """
        Initialize kernel metadata.

        Args:
            d: Spatial dimension (>= 2)
            m: Target dimension (>= 1)
            p: Growth exponent, 1 < p < d for the built-ins
            r0: Short-range radius of the (G0) lower bound
            lambda0: Short-range lower constant
            support_radius: Smallest T with f(xi, .) = 0 for |xi| > T (None = unbounded)
            convex_in_z: Convexity flag (declared, never verified symbolically)
            even: f(-xi, -z) == f(xi, z); enables half-lattice summation
            radial: Envelopes depend on |xi| only
            isotropic_in_z: f(xi, Qz) == f(xi, z) for rotations Q

        Raises:
            KernelError: If parameters are out of range
        """
        if d < 2:
            raise KernelError(f"Dimension must be >= 2: {d}")
        if m < 1:
            raise KernelError(f"Target dimension must be >= 1: {m}")
        if check_exponent and not (1.0 < p < d):
            raise KernelError(f"Exponent p must lie in (1, d) = (1, {d}): {p}")
        if r0 <= 0.0 or lambda0 <= 0.0:
            raise KernelError(f"r0 and lambda0 must be positive: r0={r0}, lambda0={lambda0}")
        if support_radius is not None and support_radius < r0:
            raise KernelError(f"Support radius {support_radius} is below r0 = {r0}")

        self.d = d
        self.m = m
        self.p = float(p)
        self.r0 = float(r0)
        self.lambda0 = float(lambda0)
        self.support_radius = support_radius
        self.convex_in_z = convex_in_z
        self.even = even
        self.radial = radial
        self.isotropic_in_z = isotropic_in_z

    @abstractmethod
    def eval(self, xi: np.ndarray, z: np.ndarray, mu: float = 0.0) -> np.ndarray:
        """
        Evaluate f(xi, z).

        Args:
            xi: Shift vectors, shape (..., d)
            z: Difference quotients, shape (..., m)
            mu: Regularization; mu > 0 evaluates the smoothed integrand
                whose z-gradient is grad_z(xi, z, mu)

        Returns:
            Energy density, broadcast leading shape
        """
        pass

    @abstractmethod
    def grad_z(self, xi: np.ndarray, z: np.ndarray, mu: float = 0.0) -> np.ndarray:
        """
        Partial gradient of f in z, regularized by |z|_mu for p < 2.

        Returns:
            Array of shape (..., m); non-finite where the mu = 0 gradient is singular
        """
        pass

    @abstractmethod
    def envelope_M(self, xi: np.ndarray) -> np.ndarray:
        """sup over |z| = 1 of f(xi, z)"""
        pass

    @abstractmethod
    def envelope_m(self, xi: np.ndarray) -> np.ndarray:
        """inf over |z| = 1 of f(xi, z)"""
        pass

    @property
    def bounded(self) -> bool:
        return self.support_radius is not None

    def radial_profile_M(self, r: float) -> float:
        """Envelope M along the first axis at distance r."""
        xi = np.zeros(self.d)
        xi[0] = r
        return float(self.envelope_M(xi))

    def describe(self) -> Dict[str, Any]:
        """Parameters echoed into run manifests"""
        return {
            "family": self.family.value,
            "d": self.d,
            "m": self.m,
            "p": self.p,
            "r0": self.r0,
            "lambda0": self.lambda0,
            "support_radius": self.support_radius,
            "convex_in_z": self.convex_in_z,
        }

    def __repr__(self) -> str:
        support = "unbounded" if self.support_radius is None else f"{self.support_radius:g}"
        return f"{type(self).__name__}(d={self.d}, m={self.m}, p={self.p:g}, support={support})"


class TruncatedKernel(KernelSpec):
    """f^T(xi, z) = [|xi| <= T] f(xi, z)"""

    family = KernelFamily.TRUNCATED

    def __init__(self, base: KernelSpec, T: float):
        support = T if base.support_radius is None else min(T, base.support_radius)
        super().__init__(
            base.d, base.m, base.p, base.r0, base.lambda0,
            support_radius=support,
            convex_in_z=base.convex_in_z,
            even=base.even,
            radial=base.radial,
            isotropic_in_z=base.isotropic_in_z,
            check_exponent=False,
        )
        self.base = base
        self.T = float(T)

    def _inside(self, xi: np.ndarray) -> np.ndarray:
        return np.linalg.norm(xi, axis=-1) <= self.T

    def eval(self, xi, z, mu=0.0):
        return np.where(self._inside(xi), self.base.eval(xi, z, mu), 0.0)

    def grad_z(self, xi, z, mu=0.0):
        inside = self._inside(xi)[..., None]
        return np.where(inside, self.base.grad_z(xi, z, mu), 0.0)

    def envelope_M(self, xi):
        return np.where(self._inside(xi), self.base.envelope_M(xi), 0.0)

    def envelope_m(self, xi):
        return np.where(self._inside(xi), self.base.envelope_m(xi), 0.0)

    def describe(self):
        info = self.base.describe()
        info["truncation"] = self.T
        info["support_radius"] = self.support_radius
        return info


class CallableKernel(KernelSpec):
    """
    User-supplied kernel from plain callables.

    Envelopes are mandatory; no automatic sup/inf search is attempted.
    Kernels flagged non-convex are accepted, but minimizers computed with
    them carry no optimality guarantee.
    """

    def __init__(
        self,
        d: int,
        m: int,
        p: float,
        eval_fn: Callable[[np.ndarray, np.ndarray, float], np.ndarray],
        grad_fn: Callable[[np.ndarray, np.ndarray, float], np.ndarray],
        envelope_M: Callable[[np.ndarray], np.ndarray],
        envelope_m: Callable[[np.ndarray], np.ndarray],
        r0: float,
        lambda0: float,
        support_radius: Optional[float] = None,
        convex_in_z: bool = False,
        even: bool = False,
        radial: bool = False,
    ):
        super().__init__(d, m, p, r0, lambda0, support_radius=support_radius,
                         convex_in_z=convex_in_z, even=even, radial=radial)
        self._eval = eval_fn
        self._grad = grad_fn
        self._M = envelope_M
        self._m = envelope_m
        if not convex_in_z:
            logger.warning("Kernel flagged non-convex: minimization is best-effort only")

    def eval(self, xi, z, mu=0.0):
        return np.asarray(self._eval(xi, z, mu), dtype=float)

    def grad_z(self, xi, z, mu=0.0):
        return np.asarray(self._grad(xi, z, mu), dtype=float)

    def envelope_M(self, xi):
        return np.asarray(self._M(xi), dtype=float)

    def envelope_m(self, xi):
        return np.asarray(self._m(xi), dtype=float)


def truncate_kernel(k: KernelSpec, T: float) -> KernelSpec:
    """
    Restrict a kernel to |xi| <= T.

    Args:
        k: Kernel to truncate
        T: Truncation radius, must exceed k.r0

    Returns:
        Truncated kernel with support_radius = min(T, k.support_radius)

    Raises:
        KernelError: If T <= k.r0
    """
    if T <= k.r0:
        raise KernelError(f"Truncation radius T={T} must exceed r0={k.r0}")
    return TruncatedKernel(k, T)


def growth_integral(k: KernelSpec, upper: Optional[float] = None) -> float:
    """
    Integral of M(xi)(|xi|^p + 1) over |xi| <= upper (whole space when None).

    Radial kernels use a 1-D radial quadrature; other kernels fall back on a
    tensor midpoint rule over the support box.
    """
    p = k.p
    limit = upper if upper is not None else (k.support_radius or math.inf)

    if k.radial:
        area = sphere_area(k.d)

        def integrand(r: float) -> float:
            return k.radial_profile_M(r) * r ** (k.d - 1) * (r ** p + 1.0)

        if math.isinf(limit):
            value, _ = integrate.quad(integrand, 0.0, math.inf, limit=200)
        else:
            value, _ = integrate.quad(integrand, 0.0, limit, limit=200)
        return area * value

    if math.isinf(limit):
        limit = effective_radius(k)
    n = 64 if k.d <= 2 else 32
    step = 2.0 * limit / n
    axis = -limit + (np.arange(n) + 0.5) * step
    grid = np.stack(np.meshgrid(*([axis] * k.d), indexing="ij"), axis=-1)
    radius = np.linalg.norm(grid, axis=-1)
    weights = k.envelope_M(grid) * (radius ** p + 1.0) * (radius <= limit)
    return float(weights.sum() * step ** k.d)


def effective_radius(k: KernelSpec, rel_tol: float = 1e-10) -> float:
    """
    Radius beyond which the (G1) tail is below rel_tol of the full integral.

    Bounded kernels return their support radius.
    """
    if k.support_radius is not None:
        return float(k.support_radius)
    if not k.radial:
        raise KernelError("effective_radius needs a radial envelope for unbounded kernels")

    total = growth_integral(k)
    target = rel_tol * total
    area = sphere_area(k.d)

    def tail(T: float) -> float:
        value, _ = integrate.quad(
            lambda r: k.radial_profile_M(r) * r ** (k.d - 1) * (r ** k.p + 1.0),
            T, math.inf, limit=200)
        return area * value

    lo, hi = 0.0, max(1.0, k.r0)
    while tail(hi) > target:
        lo, hi = hi, 2.0 * hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if tail(mid) > target:
            lo = mid
        else:
            hi = mid
    logger.debug(f"Effective radius {hi:.6g} for {k!r} (tail tolerance {rel_tol:g})")
    return hi


def _sample_ball(rng: np.random.Generator, n: int, d: int, radius: float) -> np.ndarray:
    direction = rng.standard_normal((n, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / d)
    return direction * r[:, None]


def verify_assumptions(k: KernelSpec, samples: int = 10_000, seed: int = 0) -> AssumptionReport:
    """
    Check the structural assumptions of a kernel by random sampling.

    Args:
        k: Kernel under test
        samples: Number of sampled (xi, z, t) triples
        seed: Generator seed

    Returns:
        AssumptionReport; violations are reported, never raised
    """
    if samples < 1:
        raise KernelError(f"samples must be >= 1: {samples}")

    rng = np.random.default_rng(seed)
    reach = effective_radius(k)

    xi = _sample_ball(rng, samples, k.d, 1.5 * reach)
    z = rng.standard_normal((samples, k.m)) * rng.uniform(0.1, 3.0, (samples, 1))
    t = rng.uniform(1e-3, 10.0, samples)

    # homogeneity
    base = k.eval(xi, z)
    scaled = k.eval(xi, t[:, None] * z)
    expected = t ** k.p * base
    homogeneity = float(np.max(np.abs(scaled - expected) / (expected + 1e-30)))

    # envelopes
    norm_p = np.linalg.norm(z, axis=1) ** k.p
    upper = k.envelope_M(xi) * norm_p
    lower = k.envelope_m(xi) * norm_p
    breach = np.maximum(base - upper, lower - base)
    envelope = float(np.max(np.maximum(breach, 0.0) / (upper + 1e-30)))

    # short range
    xi_short = _sample_ball(rng, samples, k.d, k.r0)
    short_min = float(np.min(k.envelope_m(xi_short)))
    short_ok = short_min >= k.lambda0 * (1.0 - 1e-12)

    integral = growth_integral(k)

    # (L) bound over pairs (z, w)
    w = z + rng.standard_normal((samples, k.m)) * rng.uniform(1e-3, 2.0, (samples, 1))
    numerator = np.abs(k.eval(xi, w) - base)
    nz = np.linalg.norm(z, axis=1)
    nw = np.linalg.norm(w, axis=1)
    denominator = k.envelope_M(xi) * (nz ** (k.p - 1) + nw ** (k.p - 1)) * np.linalg.norm(w - z, axis=1)
    valid = denominator > 0.0
    lipschitz = float(np.max(numerator[valid] / denominator[valid])) if valid.any() else 0.0

    report = AssumptionReport(
        family=k.family.value,
        samples=samples,
        seed=seed,
        homogeneity_violation=homogeneity,
        envelope_violation=envelope,
        short_range_min=short_min,
        lambda0=k.lambda0,
        short_range_ok=bool(short_ok),
        growth_integral=integral,
        growth_integral_finite=bool(math.isfinite(integral)),
        lipschitz_constant=lipschitz,
    )
    logger.info(
        f"Assumptions for {k!r}: homogeneity {homogeneity:.2e}, "
        f"(G0) min {short_min:.4g} vs {k.lambda0:.4g}, (G1) {integral:.6g}, (L) C={lipschitz:.4g}"
    )
    return report
