"""Precision sweeps and break-even solving over the cost model.

Both operations hold the filter yield fixed at its base value and vary only
the filter's clean precision, answering "how good would the filter's pass
set have to be for the economics to change sign, and what happens beyond".
"""

from __future__ import annotations

from dataclasses import dataclass

from .cost_model import EXPECTATION, StageRates, UnitCosts, baseline_cost, savings
from .errors import Infeasible, NoBreakEven

# Relative |delta_abs| tolerance (w.r.t. the baseline total) at which the
# bisection stops, and the straddle width the returned root must satisfy.
_BISECT_REL_TOL = 1e-9
_STRADDLE = 1e-6


@dataclass(frozen=True)
class SweepRow:
    """Savings at one precision grid point; values absent when infeasible."""

    p_aqa_clean: float
    delta_abs: float | None
    delta_rel: float | None
    feasible: bool


def _grid(lo: float, hi: float, steps: int) -> list[float]:
    if not 0.0 < lo <= hi <= 1.0:
        raise Infeasible(f"sweep range must satisfy 0 < lo <= hi <= 1, got [{lo}, {hi}]")
    if lo == hi:
        return [lo]
    if steps < 2:
        raise Infeasible(f"sweep needs at least 2 steps, got {steps}")
    width = hi - lo
    return [lo + width * i / (steps - 1) for i in range(steps)]


def sweep_precision(
    base: StageRates,
    costs: UnitCosts,
    n_mqa: float,
    prange: tuple[float, float],
    steps: int,
) -> list[SweepRow]:
    """Savings over a uniform grid of filter precisions, yield held fixed.

    Grid points where the implied rates are infeasible (the filter would have
    to pass more clean or defective images than exist) are marked rather than
    fatal, so sweeps may straddle the feasible region.
    """
    rows = []
    for p in _grid(prange[0], prange[1], steps):
        problems = StageRates.diagnose(base.p_gen_clean, base.y_aqa, p)
        if problems:
            rows.append(SweepRow(p, None, None, False))
            continue
        report = savings(n_mqa, StageRates(base.p_gen_clean, base.y_aqa, p), costs, EXPECTATION)
        rows.append(SweepRow(p, report.delta_abs, report.delta_rel, True))
    return rows


def _feasible_precision_bounds(base: StageRates) -> tuple[float, float]:
    """Feasible precision interval for the base yield, intersected with (0, 1]."""
    lo = 0.0
    hi = 1.0
    if base.y_aqa > 0.0:
        lo = max(lo, 1.0 - (1.0 - base.p_gen_clean) / base.y_aqa)
        hi = min(hi, base.p_gen_clean / base.y_aqa)
    if lo >= hi:
        raise Infeasible("no feasible precision interval for the base yield")
    return max(lo, 1e-12), hi


def break_even_precision(base: StageRates, costs: UnitCosts, n_mqa: float) -> float:
    """Precision at which filtering stops losing money, for the base yield.

    Savings are strictly increasing in precision for positive costs, so there
    is at most one zero crossing. Raises NoBreakEven when the sign is the
    same across the whole feasible interval. The root is bisected until its
    absolute savings are below 1e-9 of the baseline total and values 1e-6 to
    either side straddle zero.
    """
    base_total = baseline_cost(n_mqa, base.p_gen_clean, costs, EXPECTATION).total
    if base_total <= 0.0:
        raise NoBreakEven("baseline total is zero; savings never change sign")

    def delta(p: float) -> float:
        return savings(n_mqa, StageRates(base.p_gen_clean, base.y_aqa, p), costs, EXPECTATION).delta_abs

    lo, hi = _feasible_precision_bounds(base)
    d_lo, d_hi = delta(lo), delta(hi)
    if d_lo > 0.0 or d_hi < 0.0 or d_lo == d_hi:
        raise NoBreakEven(
            f"savings do not change sign on [{lo:.6g}, {hi:.6g}]: "
            f"{d_lo:.6g} at the low end, {d_hi:.6g} at the high end"
        )
    tol = _BISECT_REL_TOL * base_total
    p = (lo + hi) / 2.0
    for _ in range(200):
        p = (lo + hi) / 2.0
        d = delta(p)
        if abs(d) < tol:
            break
        if d < 0.0:
            lo = p
        else:
            hi = p
    below = delta(max(p - _STRADDLE, 1e-12))
    above = delta(min(p + _STRADDLE, 1.0))
    if not below <= 0.0 <= above:
        raise NoBreakEven(f"root verification failed around {p:.8g}")
    return p
