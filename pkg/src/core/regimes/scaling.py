"""
Scaling Laws and Regime Classification

A scaling law ties the three scales of a perforated nonlocal problem:
the interaction scale eps, the period delta = delta(eps) and the hole radius
r = r(delta). Its two limits

    beta  = lim r_delta / delta^{d/(d-p)}
    alpha = lim eps / r_{delta_eps}

(each a nonnegative real or +inf) decide which limit energy appears.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence

from ..errors import RegimeError


logger = logging.getLogger(__name__)

INF = math.inf
DEFAULT_PROBES = (1e-2, 1e-4, 1e-6)
PROBE_TOLERANCE = 0.2


class RegimeTag(Enum):
    """Limit energies of the perforated problem"""
    UNCONSTRAINED = "unconstrained"
    LOCAL_CAPACITARY = "local-capacitary"
    NONLOCAL_CAPACITARY = "nonlocal-capacitary"
    TRIVIAL_COLLAPSE = "trivial-collapse"
    UNCHARACTERIZED = "uncharacterized"


class Scales(NamedTuple):
    epsilon: float
    delta: float
    r: float


@dataclass
class ScalingLaw:
    """
    delta(eps), r(delta) and their declared limits.

    `condition_b` is the side condition eps / (r/delta)^{d/p} -> +inf used when
    alpha = +inf; None means it is probed numerically.
    """
    name: str
    d: int
    p: float
    delta_of_eps: Callable[[float], float]
    r_of_delta: Callable[[float], float]
    beta: float
    alpha: float
    condition_b: Optional[bool] = None
    description: str = ""

    def scales(self, eps: float) -> Scales:
        delta = float(self.delta_of_eps(eps))
        return Scales(float(eps), delta, float(self.r_of_delta(delta)))

    @property
    def critical_exponent(self) -> float:
        """d / (d - p)"""
        return self.d / (self.d - self.p)

    def beta_probe(self, eps: float) -> float:
        s = self.scales(eps)
        return s.r / s.delta ** self.critical_exponent

    def alpha_probe(self, eps: float) -> float:
        s = self.scales(eps)
        return s.epsilon / s.r

    def condition_b_probe(self, eps: float) -> float:
        s = self.scales(eps)
        return s.epsilon / (s.r / s.delta) ** (self.d / self.p)

    def validate(self, probes: Sequence[float] = DEFAULT_PROBES) -> None:
        """
        Check r < delta/2 and the declared limits on the probe sequence.

        Finite positive limits must be matched within 20% at the last probe;
        0 and +inf need the probed quantity to decay or grow along the probes.

        Raises:
            RegimeError: On any inconsistency
        """
        if not (1.0 < self.p < self.d):
            raise RegimeError(f"{self.name}: scaling laws need 1 < p < d: p={self.p}, d={self.d}")
        for eps in probes:
            s = self.scales(eps)
            if not (0.0 < s.r < 0.5 * s.delta):
                raise RegimeError(f"{self.name}: r = {s.r:.3g} violates 0 < r < delta/2 "
                                  f"(delta = {s.delta:.3g}) at eps = {eps:g}")
        _check_limit(self.name, "beta", self.beta, [self.beta_probe(e) for e in probes])
        _check_limit(self.name, "alpha", self.alpha, [self.alpha_probe(e) for e in probes])

    def describe(self) -> dict:
        return {"name": self.name, "d": self.d, "p": self.p,
                "beta": self.beta, "alpha": self.alpha, "description": self.description}


def _check_limit(name: str, what: str, declared: float, values: List[float]) -> None:
    first, last = values[0], values[-1]
    if math.isinf(declared):
        ok = last > first and all(b >= a for a, b in zip(values, values[1:]))
    elif declared == 0.0:
        ok = last < first and all(b <= a for a, b in zip(values, values[1:]))
    else:
        ok = abs(last - declared) <= PROBE_TOLERANCE * declared
    if not ok:
        raise RegimeError(f"{name}: declared {what} = {declared} inconsistent with probes {values}")


def condition_b(law: ScalingLaw, probes: Sequence[float] = DEFAULT_PROBES) -> bool:
    """
    Numeric probe of eps / (r_delta / delta)^{d/p} -> +inf.

    Holds when the quantity increases along the probes and gains at least a
    factor 10 between the first and the last.
    """
    if law.condition_b is not None:
        return law.condition_b
    values = [law.condition_b_probe(e) for e in probes]
    increasing = all(b > a for a, b in zip(values, values[1:]))
    return increasing and values[-1] >= 10.0 * values[0]


@dataclass(frozen=True)
class RegimeClass:
    """Limit regime with the parameters entering the limit energy"""
    tag: RegimeTag
    alpha: float
    beta: float
    reason: str = ""

    @property
    def has_reaction(self) -> bool:
        return self.tag in (RegimeTag.LOCAL_CAPACITARY, RegimeTag.NONLOCAL_CAPACITARY)

    def reaction_coefficient(self, d: int, p: float) -> float:
        """beta^{d-p}, the weight of the capacitary term."""
        return self.beta ** (d - p) if self.has_reaction else 0.0

    def to_dict(self) -> dict:
        return {"regime": self.tag.value, "alpha": self.alpha, "beta": self.beta,
                "reason": self.reason}


def classify(alpha: float, beta: float, condition_a: bool, condition_b_holds: bool) -> RegimeClass:
    """Pure classification on the limits and the two side conditions."""
    if math.isinf(alpha):
        if condition_a:
            return RegimeClass(RegimeTag.UNCONSTRAINED, alpha, beta, "alpha = inf with (a)")
        if condition_b_holds:
            return RegimeClass(RegimeTag.UNCONSTRAINED, alpha, beta, "alpha = inf with (b)")
        return RegimeClass(RegimeTag.UNCHARACTERIZED, alpha, beta, "alpha = inf, (a) and (b) fail")
    if beta == 0.0:
        return RegimeClass(RegimeTag.UNCONSTRAINED, alpha, beta, "beta = 0")
    if math.isinf(beta):
        return RegimeClass(RegimeTag.TRIVIAL_COLLAPSE, alpha, beta, "beta = inf")
    if alpha == 0.0:
        return RegimeClass(RegimeTag.LOCAL_CAPACITARY, alpha, beta, "alpha = 0")
    return RegimeClass(RegimeTag.NONLOCAL_CAPACITARY, alpha, beta, "alpha finite and positive")


def classify_regime(law: ScalingLaw, probes: Sequence[float] = DEFAULT_PROBES) -> RegimeClass:
    """
    Regime of a scaling law.

    (a) is finiteness of beta; (b) is probed only when alpha = +inf.

    Raises:
        RegimeError: If the law fails validation
    """
    law.validate(probes)
    condition_a = not math.isinf(law.beta)
    b_holds = condition_b(law, probes) if math.isinf(law.alpha) else False
    regime = classify(law.alpha, law.beta, condition_a, b_holds)
    logger.info(f"Law '{law.name}': alpha={law.alpha}, beta={law.beta} -> {regime.tag.value}")
    return regime


# Canonical laws, one per cell of the regime table


def _local(d: int, p: float) -> ScalingLaw:
    g = d / (d - p)
    return ScalingLaw("local", d, p, lambda e: e ** (1.0 / (2.0 * g)), lambda t: t ** g,
                      beta=1.0, alpha=0.0, description="r = delta^{d/(d-p)}, eps = r^2")


def _nonlocal(d: int, p: float) -> ScalingLaw:
    g = d / (d - p)
    return ScalingLaw("nonlocal", d, p, lambda e: e ** (1.0 / g), lambda t: t ** g,
                      beta=1.0, alpha=1.0, description="r = delta^{d/(d-p)}, eps = r")


def _small_holes(d: int, p: float) -> ScalingLaw:
    q = d / (d - p) + 1.0
    return ScalingLaw("small-holes", d, p, lambda e: e ** (1.0 / q), lambda t: t ** q,
                      beta=0.0, alpha=1.0, description="r = delta^{d/(d-p)+1}, eps = r")


def _trivial(d: int, p: float) -> ScalingLaw:
    return ScalingLaw("trivial", d, p, lambda e: 4.0 * e, lambda t: t / 4.0,
                      beta=INF, alpha=1.0, description="r = delta/4, eps = r")


def _slow_eps(d: int, p: float) -> ScalingLaw:
    g = d / (d - p)
    return ScalingLaw("slow-eps", d, p, lambda e: e ** (2.0 / g), lambda t: t ** g,
                      beta=1.0, alpha=INF, description="r = delta^{d/(d-p)}, eps = sqrt(r)")


def _uncharacterized(d: int, p: float) -> ScalingLaw:
    return ScalingLaw("uncharacterized", d, p, lambda e: 4.0 * e * e, lambda t: t / 4.0,
                      beta=INF, alpha=INF, description="r = delta/4, eps = sqrt(r)")


def _supercritical(d: int, p: float) -> ScalingLaw:
    return ScalingLaw("supercritical", d, p, lambda e: e, lambda t: 0.5 * t * t,
                      beta=INF, alpha=INF, description="r = delta^2/2, eps = delta")


LAW_REGISTRY: Dict[str, Callable[[int, float], ScalingLaw]] = {
    "local": _local,
    "nonlocal": _nonlocal,
    "small-holes": _small_holes,
    "trivial": _trivial,
    "slow-eps": _slow_eps,
    "uncharacterized": _uncharacterized,
    "supercritical": _supercritical,
}

CANONICAL_TAGS: Dict[str, RegimeTag] = {
    "local": RegimeTag.LOCAL_CAPACITARY,
    "nonlocal": RegimeTag.NONLOCAL_CAPACITARY,
    "small-holes": RegimeTag.UNCONSTRAINED,
    "trivial": RegimeTag.TRIVIAL_COLLAPSE,
    "slow-eps": RegimeTag.UNCONSTRAINED,
    "uncharacterized": RegimeTag.UNCHARACTERIZED,
}


def create_law(name: str, d: int, p: float) -> ScalingLaw:
    """
    Factory function for registered scaling laws.

    Raises:
        RegimeError: Unknown law name
    """
    try:
        factory = LAW_REGISTRY[name]
    except KeyError:
        raise RegimeError(f"Unknown scaling law '{name}' (known: {', '.join(LAW_REGISTRY)})")
    return factory(d, p)


def canonical_laws(d: int, p: float) -> List[ScalingLaw]:
    """The six laws covering every regime, in table order."""
    return [create_law(name, d, p) for name in CANONICAL_TAGS]
