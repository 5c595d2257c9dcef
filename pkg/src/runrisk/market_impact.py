"""Inverse demand functions for fire-sale pricing of marketable securities.

An inverse demand function f gives the unit price after a cumulative quantity
has been sold; it is non-increasing, strictly positive on its domain, and
starts at the initial price f(0) = p with p in (0, 1]. Sellers realize the
volume-weighted average price fbar(q) = (1/q) * integral of f from 0 to q,
so sale proceeds are q * fbar(q), a strictly increasing function of q.

Three variants are provided:

* ``LinearImpact``:      f(q) = p * (1 - b*q),    fbar(q) = p * (1 - b*q/2)
* ``ExponentialImpact``: f(q) = p * exp(-b*q),    fbar(q) = p * (1 - exp(-b*q)) / (b*q)
* ``TabulatedImpact``:   piecewise-linear interpolation of a sampled
  non-increasing curve, with exact trapezoidal averages.

``admissibility_warning`` checks the depositor-threshold regularity condition
that makes the clearing step equations strictly monotone: for a maximum
acceptable leverage lam > 1 the map
q -> q*fbar(q) + (1 - 1/lam) * (domain - q) * f(q) must be strictly
increasing. For linear impact this holds iff b < 1/domain when lam < 2 and
b < 1/((lam - 1) * domain) when lam >= 2; for exponential impact iff
b < 1/((lam - 1) * domain). Violations are advisory (returned as a warning
string), not errors: the monotone fixed-point solver still produces the
minimal equilibrium for inadmissible parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from ._roots import bisect_increasing

__all__ = [
    "LinearImpact",
    "ExponentialImpact",
    "TabulatedImpact",
    "InverseDemand",
    "check_admissible",
    "BISECTION_TOL",
]

# Absolute tolerance, in quantity units, for all bisection-based inversions.
BISECTION_TOL = 1e-10


class _ImpactBase:
    """Shared behavior: proceeds, inversion, domain checks, admissibility."""

    initial_price: float
    domain_max: float

    def price(self, sold: float) -> float:
        raise NotImplementedError

    def avg_price(self, sold: float) -> float:
        raise NotImplementedError

    def proceeds(self, sold: float) -> float:
        """Cash raised by selling ``sold`` units: sold * avg_price(sold)."""
        sold = self._clamp(sold)
        return sold * self.avg_price(sold)

    def invert_proceeds(self, target: float, cap: float | None = None) -> float | None:
        """The unique quantity q in [0, cap] with proceeds(q) = target.

        Returns ``None`` when the target exceeds the maximum attainable
        proceeds on [0, cap] (infeasible). Negative targets raise.
        """
        if target < 0:
            raise ValueError(f"proceeds target must be >= 0, got {target!r}")
        cap = self.domain_max if cap is None else self._clamp(cap)
        if target == 0.0:
            return 0.0
        top = self.proceeds(cap)
        if target > top:
            return None
        if target == top:
            return cap
        return bisect_increasing(self.proceeds, 0.0, cap, target, tol=BISECTION_TOL)

    def admissibility_warning(self, total_marketable: float, max_leverage: float) -> str | None:
        """``None`` when the monotonicity condition holds, else a description."""
        if max_leverage <= 1.0:
            raise ValueError(f"max_leverage must exceed 1, got {max_leverage!r}")
        return self._admissibility_detail(total_marketable, max_leverage)

    def _admissibility_detail(self, total_marketable: float, max_leverage: float) -> str | None:
        raise NotImplementedError

    def _clamp(self, sold: float) -> float:
        slack = 1e-9 * max(1.0, self.domain_max)
        if not -slack <= sold <= self.domain_max + slack:
            raise ValueError(f"quantity {sold!r} outside impact domain [0, {self.domain_max!r}]")
        return min(max(sold, 0.0), self.domain_max)


@dataclass(frozen=True)
class LinearImpact(_ImpactBase):
    """f(q) = p * (1 - b*q); b = 0 gives the frictionless constant price."""

    initial_price: float
    elasticity: float  # price impact per unit sold, >= 0
    domain_max: float  # largest sellable quantity (afs + htm)

    def __post_init__(self):
        _check_common(self.initial_price, self.elasticity, self.domain_max)
        if self.elasticity * self.domain_max >= 1.0:
            raise ValueError(
                "linear impact needs elasticity * domain_max < 1 to keep prices positive"
            )

    def price(self, sold: float) -> float:
        sold = self._clamp(sold)
        return self.initial_price * (1.0 - self.elasticity * sold)

    def avg_price(self, sold: float) -> float:
        sold = self._clamp(sold)
        return self.initial_price * (1.0 - 0.5 * self.elasticity * sold)

    def invert_proceeds(self, target: float, cap: float | None = None) -> float | None:
        # proceeds(q) = p*q*(1 - b*q/2); solved in the cancellation-free form
        # q = 2*t / (p * (1 + sqrt(1 - 2*b*t/p))).
        if target < 0:
            raise ValueError(f"proceeds target must be >= 0, got {target!r}")
        cap = self.domain_max if cap is None else self._clamp(cap)
        if target == 0.0:
            return 0.0
        top = self.proceeds(cap)
        if target > top:
            return None
        p, b = self.initial_price, self.elasticity
        radicand = 1.0 - 2.0 * b * target / p
        if radicand < 0.0:  # float noise at the very top of the range
            return cap
        root = 2.0 * target / (p * (1.0 + math.sqrt(radicand)))
        return min(root, cap)

    def _admissibility_detail(self, total_marketable: float, max_leverage: float) -> str | None:
        if self.elasticity == 0.0 or total_marketable == 0.0:
            return None
        if max_leverage < 2.0:
            bound = 1.0 / total_marketable
        else:
            bound = 1.0 / ((max_leverage - 1.0) * total_marketable)
        if self.elasticity < bound:
            return None
        return (
            f"linear impact elasticity {self.elasticity:.6g} is not below the "
            f"admissible bound {bound:.6g} for max leverage {max_leverage:.6g} "
            f"and portfolio {total_marketable:.6g}"
        )


@dataclass(frozen=True)
class ExponentialImpact(_ImpactBase):
    """f(q) = p * exp(-b*q)."""

    initial_price: float
    elasticity: float
    domain_max: float

    def __post_init__(self):
        _check_common(self.initial_price, self.elasticity, self.domain_max)

    def price(self, sold: float) -> float:
        sold = self._clamp(sold)
        return self.initial_price * math.exp(-self.elasticity * sold)

    def avg_price(self, sold: float) -> float:
        sold = self._clamp(sold)
        exponent = self.elasticity * sold
        if exponent == 0.0:
            return self.initial_price
        return self.initial_price * (-math.expm1(-exponent)) / exponent

    def _admissibility_detail(self, total_marketable: float, max_leverage: float) -> str | None:
        if self.elasticity == 0.0 or total_marketable == 0.0:
            return None
        bound = 1.0 / ((max_leverage - 1.0) * total_marketable)
        if self.elasticity < bound:
            return None
        return (
            f"exponential impact elasticity {self.elasticity:.6g} is not below the "
            f"admissible bound {bound:.6g} for max leverage {max_leverage:.6g} "
            f"and portfolio {total_marketable:.6g}"
        )


@dataclass(frozen=True)
class TabulatedImpact(_ImpactBase):
    """Piecewise-linear price curve sampled on increasing knots starting at 0."""

    knots: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.knots) != len(self.values) or len(self.knots) < 2:
            raise ValueError("need matching knots/values with at least two samples")
        if self.knots[0] != 0.0:
            raise ValueError("first knot must be 0")
        if any(b <= a for a, b in zip(self.knots, self.knots[1:])):
            raise ValueError("knots must be strictly increasing")
        if any(v <= 0.0 for v in self.values):
            raise ValueError("prices must stay positive")
        if any(b > a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("prices must be non-increasing")
        if not 0.0 < self.values[0] <= 1.0:
            raise ValueError("initial price must lie in (0, 1]")

    @property
    def initial_price(self) -> float:
        return self.values[0]

    @property
    def domain_max(self) -> float:
        return self.knots[-1]

    @cached_property
    def _cumulative(self) -> tuple[float, ...]:
        # Exact integral of the piecewise-linear curve up to each knot.
        acc = [0.0]
        for i in range(1, len(self.knots)):
            seg = (self.knots[i] - self.knots[i - 1]) * 0.5 * (self.values[i] + self.values[i - 1])
            acc.append(acc[-1] + seg)
        return tuple(acc)

    def _segment(self, sold: float) -> int:
        lo, hi = 0, len(self.knots) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.knots[mid] <= sold:
                lo = mid
            else:
                hi = mid
        return lo

    def price(self, sold: float) -> float:
        sold = self._clamp(sold)
        i = self._segment(sold)
        if sold >= self.knots[-1]:
            return self.values[-1]
        span = self.knots[i + 1] - self.knots[i]
        weight = (sold - self.knots[i]) / span
        return self.values[i] * (1.0 - weight) + self.values[i + 1] * weight

    def avg_price(self, sold: float) -> float:
        sold = self._clamp(sold)
        if sold == 0.0:
            return self.initial_price
        i = self._segment(sold)
        partial = self._cumulative[i]
        if sold > self.knots[i]:
            partial += (sold - self.knots[i]) * 0.5 * (self.values[i] + self.price(sold))
        return partial / sold

    def _admissibility_detail(self, total_marketable: float, max_leverage: float) -> str | None:
        # Per-segment check of f(q) > (1 - lam) * (portfolio - q) * f'(q),
        # using the segment slope and the segment's worst (left) endpoint.
        for i in range(len(self.knots) - 1):
            slope = (self.values[i + 1] - self.values[i]) / (self.knots[i + 1] - self.knots[i])
            for q, f in ((self.knots[i], self.values[i]), (self.knots[i + 1], self.values[i + 1])):
                if q > total_marketable:
                    continue
                if f <= (1.0 - max_leverage) * (total_marketable - q) * slope:
                    return (
                        f"tabulated curve violates the admissibility inequality near "
                        f"quantity {q:.6g} for max leverage {max_leverage:.6g}"
                    )
        return None


InverseDemand = LinearImpact | ExponentialImpact | TabulatedImpact


def check_admissible(
    impact: InverseDemand, total_marketable: float, max_leverage: float
) -> str | None:
    """Advisory admissibility check; ``None`` means admissible."""
    return impact.admissibility_warning(total_marketable, max_leverage)


def _check_common(initial_price: float, elasticity: float, domain_max: float) -> None:
    if not 0.0 < initial_price <= 1.0:
        raise ValueError(f"initial price must lie in (0, 1], got {initial_price!r}")
    if elasticity < 0.0 or not math.isfinite(elasticity):
        raise ValueError(f"elasticity must be finite and >= 0, got {elasticity!r}")
    if domain_max < 0.0 or not math.isfinite(domain_max):
        raise ValueError(f"domain_max must be finite and >= 0, got {domain_max!r}")
