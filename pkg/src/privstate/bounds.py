"""Closed-form bound calculators: the key-undistillability distance threshold
z(d), its LOCC-norm corollary, the separable-distance floor for private states,
the two-sided estimate for approximate irreducible states, and the imperfection
functions of the approximate-embedding construction.
"""
from __future__ import annotations

import dataclasses
import math
from collections.abc import Sequence
from typing import NamedTuple

from .measures import ETA_MONOTONE_LIMIT, binary_entropy, eta
from .operators import ValidationError

BISECTION_TOL = 1e-10


def z_of_d(d: float, tol: float = BISECTION_TOL) -> float:
    """Smallest fixed point of eps = 1/6 - 2 eta(eps) / (3 log2 d), in [0, 1/6].

    The right-hand side minus eps is strictly decreasing on [0, 1/6] (eta is
    increasing below 1/e), so bisection converges to the unique root.
    """
    if d < 2:
        raise ValidationError("need d >= 2")
    log_d = math.log2(d)

    def gap(e: float) -> float:
        return 1.0 / 6.0 - 2.0 * eta(e) / (3.0 * log_d) - e

    lo, hi = 0.0, 1.0 / 6.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class LoccBound(NamedTuple):
    value: float
    vacuous: bool


def locc_z_bound(d: float) -> LoccBound:
    """1/6 - 2/(3 log2 d); nonpositive values carry no information and are flagged."""
    if d < 2:
        raise ValidationError("need d >= 2")
    value = 1.0 / 6.0 - 2.0 / (3.0 * math.log2(d))
    return LoccBound(value, value <= 0.0)


def sep_distance_bound(d_k: float) -> float:
    """1 - 1/sqrt(d_k): trace-distance floor between a perfect key state and
    separable states across the key cut (unhalved-norm reading is twice this)."""
    if d_k < 2:
        raise ValidationError("need key dimension >= 2")
    return 1.0 - 1.0 / math.sqrt(d_k)


class SepDistanceReport(NamedTuple):
    bound: float
    halved_distance: float
    unhalved_distance: float
    halved_meets: bool
    unhalved_meets: bool


def sep_distance_report(trace_dist_unhalved: float, d_k: float, tol: float = 1e-9) -> SepDistanceReport:
    """Compare a measured trace distance against the separable-distance floor.

    Both normalizations are surfaced: the halved distance is the reading under
    which the floor is stated; the unhalved one is flagged alongside it.
    """
    bound = sep_distance_bound(d_k)
    halved = 0.5 * trace_dist_unhalved
    return SepDistanceReport(
        bound=bound,
        halved_distance=halved,
        unhalved_distance=trace_dist_unhalved,
        halved_meets=halved >= bound - tol,
        unhalved_meets=trace_dist_unhalved >= bound - tol,
    )


class Sandwich(NamedTuple):
    lower: float
    upper: float


def approx_irreducible_sandwich(eps: float, d: int, big_o_constant: float = 6.0) -> Sandwich:
    """Two-sided estimate of the distillable key of an eps-approximate
    irreducible private state: (log d - 6 eps log d - 4 eta(eps),
    log d + C (eps log d + h(eps)))."""
    if not 0.0 <= eps <= ETA_MONOTONE_LIMIT:
        raise ValidationError(f"eps {eps} outside the validity window [0, {ETA_MONOTONE_LIMIT}]")
    if d < 2:
        raise ValidationError("need d >= 2")
    log_d = math.log2(d)
    lower = log_d - 6.0 * eps * log_d - 4.0 * eta(eps)
    upper = log_d + big_o_constant * (eps * log_d + binary_entropy(eps))
    return Sandwich(lower, upper)


def sec6_epsilon(m: int) -> float:
    """(2/3) (1 - (1 - 2^-m)^m / (1 + 2^-m)): approximation error of the
    m-qubit embedded construction; decreasing toward 0."""
    if m < 2:
        raise ValidationError("need m >= 2")
    q = 2.0**-m
    # 1 - (1-q)^m/(1+q) via expm1/log1p: the direct form cancels to 0 in
    # doubles once q drops below machine epsilon (m >= 54), losing the
    # strict decrease
    return (2.0 / 3.0) * -math.expm1(m * math.log1p(-q) - math.log1p(q))


def sec6_f(eps: float) -> float:
    """2 sqrt(4 sqrt(2 eps) + eta(2 sqrt(2 eps))) + 2 sqrt(2 eps); the eta
    argument must stay within [0, 1], i.e. eps <= 1/8."""
    if eps < 0.0:
        raise ValidationError("eps must be nonnegative")
    x = 2.0 * math.sqrt(2.0 * eps)
    if x > 1.0 + 1e-12:
        raise ValidationError(f"eta argument {x} above 1; need eps <= 1/8")
    return 2.0 * math.sqrt(4.0 * x + eta(min(x, 1.0))) + x


@dataclasses.dataclass(frozen=True)
class BoundCurve:
    """A named bound tabulated over a strictly increasing parameter grid."""

    name: str
    grid: tuple[float, ...]
    values: tuple[float, ...]
    notes: str = ""

    def __post_init__(self) -> None:
        grid = tuple(float(x) for x in self.grid)
        values = tuple(float(v) for v in self.values)
        if len(grid) != len(values) or not grid:
            raise ValidationError("grid and values must be nonempty and aligned")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("grid must be strictly increasing")
        if any(not math.isfinite(v) for v in values):
            raise ValidationError("curve values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)


_CURVES = {
    "zd": (z_of_d, "fixed point of the undistillability distance threshold"),
    "locc-z": (lambda d: locc_z_bound(d).value, "LOCC-norm corollary; vacuous where <= 0"),
    "sep-distance": (sep_distance_bound, "halved trace-distance floor across the key cut"),
    "sec6-eps": (lambda m: sec6_epsilon(int(m)), "embedding approximation error vs block size"),
    "sec6-f": (sec6_f, "continuity correction of the embedding bound"),
}


def curve_names() -> tuple[str, ...]:
    return tuple(sorted(_CURVES))


def curve(bound_name: str, grid: Sequence[float]) -> BoundCurve:
    """Tabulate a named bound over a grid (for CSV export)."""
    if bound_name not in _CURVES:
        raise ValidationError(f"unknown bound {bound_name!r}; known: {', '.join(curve_names())}")
    fn, notes = _CURVES[bound_name]
    values = tuple(fn(x) for x in grid)
    return BoundCurve(bound_name, tuple(float(x) for x in grid), values, notes)
