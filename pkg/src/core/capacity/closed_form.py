"""
Closed-form p-capacity of balls, used as oracles.
"""

import math
from typing import Callable

import numpy as np
from scipy import integrate

from ..errors import GridError
from ..kernels import sphere_area


def _check(d: int, p: float, R: float) -> None:
    if not (1.0 < p < d):
        raise GridError(f"Capacity formulas need 1 < p < d: p={p}, d={d}")
    if not R > 1.0:
        raise GridError(f"Outer radius must exceed 1: {R}")


def capacity_exponent(d: int, p: float) -> float:
    """(d - p) / (p - 1), the decay exponent of the radial capacitary potential."""
    return (d - p) / (p - 1.0)


def pcap_annulus_closed_form(d: int, p: float, R: float = math.inf) -> float:
    """
    cap_p(B_1, B_R) = omega_{d-1} ((d-p)/(p-1))^{p-1} (1 - R^{-(d-p)/(p-1)})^{1-p}.

    R = inf gives cap_p(B_1).
    """
    _check(d, p, R)
    gamma = capacity_exponent(d, p)
    tail = 0.0 if math.isinf(R) else R ** (-gamma)
    return sphere_area(d) * gamma ** (p - 1.0) * (1.0 - tail) ** (1.0 - p)


def radial_profile(d: int, p: float, R: float = math.inf) -> Callable[[np.ndarray], np.ndarray]:
    """Capacitary potential of B_1 in B_R as a function of |x|."""
    _check(d, p, R)
    gamma = capacity_exponent(d, p)
    tail = 0.0 if math.isinf(R) else R ** (-gamma)

    def profile(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            value = (np.maximum(s, 1.0) ** (-gamma) - tail) / (1.0 - tail)
        return np.clip(value, 0.0, 1.0)

    return profile


def capacity_by_quadrature(d: int, p: float, R: float = math.inf) -> float:
    """Dirichlet p-energy of the radial potential by 1-D quadrature."""
    _check(d, p, R)
    gamma = capacity_exponent(d, p)
    tail = 0.0 if math.isinf(R) else R ** (-gamma)

    def integrand(r: float) -> float:
        slope = gamma * r ** (-gamma - 1.0) / (1.0 - tail)
        return r ** (d - 1) * slope ** p

    value, _ = integrate.quad(integrand, 1.0, R, limit=200)
    return sphere_area(d) * value
