"""Small deterministic root-finding helpers shared across modules."""

from __future__ import annotations

import math

__all__ = ["bisect_increasing", "quadratic_roots"]


def bisect_increasing(fn, lo: float, hi: float, target: float, tol: float = 1e-10) -> float:
    """Solve fn(x) = target on [lo, hi] for a non-decreasing fn by bisection.

    Callers guarantee fn(lo) <= target <= fn(hi). Terminates on interval
    shrink (hi - lo <= tol), which keeps the result deterministic across
    platforms. ``tol`` is absolute, in the units of x.
    """
    if hi < lo:
        raise ValueError(f"empty bracket [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # interval at float resolution
            break
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def quadratic_roots(a: float, b: float, c: float) -> tuple[float, ...]:
    """Real roots of a*x^2 + b*x + c = 0, ascending, using the stable q-form."""
    if a == 0.0:
        if b == 0.0:
            return ()
        return (-c / b,)
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return ()
    if disc == 0.0:
        return (-b / (2.0 * a),)
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b)) if b != 0.0 else 0.5 * sq
    r1 = q / a
    r2 = c / q if q != 0.0 else -b / a - r1
    return (r1, r2) if r1 <= r2 else (r2, r1)
