"""Closed-form volume, cost, and savings model for a generate/filter/review pipeline.

The pipeline under study has three stages. A generator produces images, of
which a fraction ``p_gen_clean`` is actually defect-free. An automatic filter
then passes a fraction ``y_aqa`` of everything generated, and among the passed
images a fraction ``p_aqa_clean`` is truly clean. Manual review at the end
accepts exactly the clean survivors, so the overall yield of accepted images
per generated image is ``y_aqa * p_aqa_clean``.

From those three rates plus per-image unit costs the module answers, in
closed form, how many images each stage must handle to hit an acceptance
target, what that costs, and how the total compares with a no-filter baseline
in which every generated image goes straight to manual review.

All values are plain floats carried at full precision; rounding to display
precision (two decimals for currency, four for probabilities) happens only in
the reporting layer. All types are immutable and all operations are pure
functions, so concurrent use needs no coordination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import Infeasible, ZeroYield

EXPECTATION = "expectation"
CEILING = "ceiling"
_MODES = (EXPECTATION, CEILING)

# Absolute slack for feasibility comparisons, absorbing float rounding in
# derived products such as y_aqa * p_aqa_clean.
FEASIBILITY_TOL = 1e-9


def _require_mode(mode: str) -> None:
    if mode not in _MODES:
        raise Infeasible(f"mode must be one of {_MODES}, got {mode!r}")


def _unit_problem(name: str, value: float) -> str | None:
    if not isinstance(value, (int, float)) or math.isnan(value):
        return f"{name} must be a number in [0, 1], got {value!r}"
    if not 0.0 <= value <= 1.0:
        return f"{name} must lie in [0, 1], got {value!r}"
    return None


@dataclass(frozen=True)
class StageRates:
    """Quality rates characterizing the generator and the automatic filter.

    p_gen_clean: fraction of generated images that are truly clean. This is
        also the acceptance yield of manual review when no filter is present.
    y_aqa: fraction of generated images the automatic filter passes.
    p_aqa_clean: fraction of filter-passed images that are truly clean, i.e.
        the filter's precision for the clean class and the acceptance yield
        of manual review downstream of the filter.

    Construction validates feasibility: a filter cannot pass more clean
    images than the generator produces, nor more defective ones. Use
    :meth:`diagnose` to probe values without raising, e.g. in sweeps.
    """

    p_gen_clean: float
    y_aqa: float
    p_aqa_clean: float

    def __post_init__(self) -> None:
        problems = self.diagnose(self.p_gen_clean, self.y_aqa, self.p_aqa_clean)
        if problems:
            raise Infeasible("; ".join(problems))

    @staticmethod
    def diagnose(p_gen_clean: float, y_aqa: float, p_aqa_clean: float) -> list[str]:
        """Return feasibility violations for the candidate rates, if any.

        An empty list means the rates describe a realizable filter. Each
        violation is a human-readable sentence naming the failed constraint.
        """
        problems = []
        for name, value in (
            ("p_gen_clean", p_gen_clean),
            ("y_aqa", y_aqa),
            ("p_aqa_clean", p_aqa_clean),
        ):
            problem = _unit_problem(name, value)
            if problem:
                problems.append(problem)
        if problems:
            return problems
        clean_pass = y_aqa * p_aqa_clean
        defect_pass = y_aqa * (1.0 - p_aqa_clean)
        if clean_pass > p_gen_clean + FEASIBILITY_TOL:
            problems.append(
                "filter passes more clean images than exist: "
                f"y_aqa*p_aqa_clean = {clean_pass:.6g} > p_gen_clean = {p_gen_clean:.6g}"
            )
        if defect_pass > (1.0 - p_gen_clean) + FEASIBILITY_TOL:
            problems.append(
                "filter passes more defective images than exist: "
                f"y_aqa*(1-p_aqa_clean) = {defect_pass:.6g} > 1-p_gen_clean = {1.0 - p_gen_clean:.6g}"
            )
        return problems

    @property
    def overall_yield(self) -> float:
        """Accepted images per generated image: y_aqa * p_aqa_clean."""
        return self.y_aqa * self.p_aqa_clean


@dataclass(frozen=True)
class UnitCosts:
    """Per-image currency cost of each pipeline stage."""

    c_gen: float
    c_aqa: float
    c_mqa: float

    def __post_init__(self) -> None:
        for name, value in (("c_gen", self.c_gen), ("c_aqa", self.c_aqa), ("c_mqa", self.c_mqa)):
            if not math.isfinite(value) or value < 0.0:
                raise Infeasible(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class VolumePlan:
    """Image counts flowing out of each stage.

    In expectation mode the counts are real-valued expectations; in ceiling
    mode each count has been rounded up independently to a whole image.
    """

    n_gen: float
    n_aqa: float
    n_mqa: float
    mode: str

    def __post_init__(self) -> None:
        _require_mode(self.mode)
        if not self.n_gen >= self.n_aqa >= self.n_mqa >= 0.0:
            raise Infeasible(
                f"volumes must satisfy n_gen >= n_aqa >= n_mqa >= 0, got "
                f"({self.n_gen!r}, {self.n_aqa!r}, {self.n_mqa!r})"
            )
        if self.mode == CEILING:
            for name, value in (("n_gen", self.n_gen), ("n_aqa", self.n_aqa), ("n_mqa", self.n_mqa)):
                if value != int(value):
                    raise Infeasible(f"ceiling-mode {name} must be an integer, got {value!r}")


@dataclass(frozen=True)
class CostBreakdown:
    """Stage-wise currency cost with its exact total."""

    gen_cost: float
    aqa_cost: float
    mqa_cost: float
    total: float

    def __post_init__(self) -> None:
        for name, value in (
            ("gen_cost", self.gen_cost),
            ("aqa_cost", self.aqa_cost),
            ("mqa_cost", self.mqa_cost),
        ):
            if value < 0.0:
                raise Infeasible(f"{name} must be >= 0, got {value!r}")
        expected = self.gen_cost + self.aqa_cost + self.mqa_cost
        if abs(self.total - expected) > math.ulp(max(abs(expected), 1.0)):
            raise Infeasible(f"total {self.total!r} is not the sum of its components {expected!r}")

    @classmethod
    def from_parts(cls, gen_cost: float, aqa_cost: float, mqa_cost: float) -> CostBreakdown:
        return cls(gen_cost, aqa_cost, mqa_cost, gen_cost + aqa_cost + mqa_cost)


@dataclass(frozen=True)
class SavingsReport:
    """Baseline-versus-filtered cost comparison.

    delta_abs is baseline minus filtered total (negative when the filter
    hurts); delta_rel is delta_abs relative to the baseline total.
    """

    baseline_total: float
    autoqa_total: float
    delta_abs: float
    delta_rel: float

    @classmethod
    def from_totals(cls, baseline_total: float, autoqa_total: float) -> SavingsReport:
        delta_abs = baseline_total - autoqa_total
        if baseline_total > 0.0:
            delta_rel = delta_abs / baseline_total
        elif delta_abs == 0.0:
            delta_rel = 0.0
        else:
            raise Infeasible("relative savings undefined: baseline total is zero")
        return cls(baseline_total, autoqa_total, delta_abs, delta_rel)


def overall_yield(rates: StageRates) -> float:
    """Fraction of generated images that end up accepted by manual review."""
    return rates.y_aqa * rates.p_aqa_clean


def volumes_from_target(n_mqa_target: float, rates: StageRates, mode: str = EXPECTATION) -> VolumePlan:
    """Stage volumes needed so that manual review accepts ``n_mqa_target`` images.

    The filter stage must see n_mqa_target / p_aqa_clean images and the
    generator must produce n_mqa_target / (y_aqa * p_aqa_clean). Ceiling mode
    rounds each count up independently after the real-valued solve.
    """
    _require_mode(mode)
    if not n_mqa_target > 0:
        raise Infeasible(f"n_mqa_target must be > 0, got {n_mqa_target!r}")
    y = rates.overall_yield
    if y == 0.0:
        raise ZeroYield("overall yield is zero: the filter never passes a clean image")
    n_aqa = n_mqa_target / rates.p_aqa_clean
    n_gen = n_mqa_target / y
    if mode == CEILING:
        return VolumePlan(
            float(math.ceil(n_gen)), float(math.ceil(n_aqa)), float(math.ceil(n_mqa_target)), CEILING
        )
    return VolumePlan(n_gen, n_aqa, float(n_mqa_target), EXPECTATION)


def volumes_from_generated(n_gen: float, rates: StageRates) -> VolumePlan:
    """Expected stage volumes when the generator produces ``n_gen`` images.

    Forward direction of the volume relations; expectation mode only.
    """
    if n_gen < 0:
        raise Infeasible(f"n_gen must be >= 0, got {n_gen!r}")
    n_aqa = n_gen * rates.y_aqa
    n_mqa = n_aqa * rates.p_aqa_clean
    return VolumePlan(float(n_gen), n_aqa, n_mqa, EXPECTATION)


def pipeline_cost(
    n_mqa_target: float, rates: StageRates, costs: UnitCosts, mode: str = EXPECTATION
) -> CostBreakdown:
    """Total cost of the filtered pipeline for an acceptance target.

    The filter evaluates every generated image, so its cost scales with
    n_gen; manual review only sees filter survivors, so its cost scales
    with n_aqa.
    """
    plan = volumes_from_target(n_mqa_target, rates, mode)
    return CostBreakdown.from_parts(
        plan.n_gen * costs.c_gen,
        plan.n_gen * costs.c_aqa,
        plan.n_aqa * costs.c_mqa,
    )


def baseline_cost(
    n_mqa_target: float, p_gen_clean: float, costs: UnitCosts, mode: str = EXPECTATION
) -> CostBreakdown:
    """Cost of reaching the target with manual review alone (no filter)."""
    _require_mode(mode)
    problem = _unit_problem("p_gen_clean", p_gen_clean)
    if problem:
        raise Infeasible(problem)
    if not n_mqa_target > 0:
        raise Infeasible(f"n_mqa_target must be > 0, got {n_mqa_target!r}")
    if p_gen_clean == 0.0:
        raise ZeroYield("generator clean rate is zero: manual review would accept nothing")
    n_gen = n_mqa_target / p_gen_clean
    if mode == CEILING:
        n_gen = float(math.ceil(n_gen))
    return CostBreakdown.from_parts(n_gen * costs.c_gen, 0.0, n_gen * costs.c_mqa)


def savings(
    n_mqa_target: float, rates: StageRates, costs: UnitCosts, mode: str = EXPECTATION
) -> SavingsReport:
    """Compare the filtered pipeline against the no-filter baseline.

    Positive delta means the filter saves money. The relative figure is
    reported against the baseline total, i.e. the reduction obtained by
    introducing the filter.
    """
    base = baseline_cost(n_mqa_target, rates.p_gen_clean, costs, mode)
    filtered = pipeline_cost(n_mqa_target, rates, costs, mode)
    return SavingsReport.from_totals(base.total, filtered.total)
