"""Monte Carlo simulator of the generate/filter/review pipeline.

Each simulated image gets a Bernoulli ground truth (clean with probability
p_gen_clean), the filter passes it with a probability conditioned on that
truth, and manual review accepts exactly the clean survivors; review itself
is treated as an infallible oracle. Running many images per trial validates
the closed forms in :mod:`qapipe.cost_model` empirically.

Determinism contract: trial ``t`` of a run draws from an independent stream
keyed by (seed, t) through a counter-based generator (SplitMix64 finalizer
over a Weyl sequence, pinned in qapipe._kernel). Identical configs therefore
produce bit-identical reports regardless of how many workers execute the
trials or how the draws are batched internally.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import _kernel
from .cost_model import CostBreakdown, StageRates, UnitCosts
from .errors import BudgetExceeded, DegenerateYield, Infeasible

FIXED_GENERATED = "fixed_generated"
TARGET_ACCEPTED = "target_accepted"

# Slack when inverting rates into conditional probabilities; absorbs float
# rounding for boundary cases like a perfect filter.
_COND_TOL = 1e-9

DEFAULT_GEN_CAP = 100_000_000
DEFAULT_BATCH = 4096


@dataclass(frozen=True)
class ClassifierConditional:
    """Filter pass probabilities conditioned on ground truth."""

    pass_given_clean: float
    pass_given_defect: float

    def __post_init__(self) -> None:
        for name, value in (
            ("pass_given_clean", self.pass_given_clean),
            ("pass_given_defect", self.pass_given_defect),
        ):
            if math.isnan(value) or not 0.0 <= value <= 1.0:
                raise Infeasible(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class StopRule:
    """When a trial stops: after n generated images, or after n acceptances."""

    kind: str
    n: int

    def __post_init__(self) -> None:
        if self.kind not in (FIXED_GENERATED, TARGET_ACCEPTED):
            raise Infeasible(f"stop rule must be {FIXED_GENERATED!r} or {TARGET_ACCEPTED!r}")
        if not self.n > 0:
            raise Infeasible(f"stop rule parameter must be > 0, got {self.n!r}")


def fixed_generated(n_gen: int) -> StopRule:
    return StopRule(FIXED_GENERATED, n_gen)


def target_accepted(n_mqa: int) -> StopRule:
    return StopRule(TARGET_ACCEPTED, n_mqa)


@dataclass(frozen=True)
class SimConfig:
    """Complete, reproducible description of one simulation run."""

    p_gen_clean: float
    classifier: ClassifierConditional
    costs: UnitCosts
    stop_rule: StopRule
    seed: int
    trials: int = 1
    gen_cap: int = DEFAULT_GEN_CAP
    batch: int = DEFAULT_BATCH

    def __post_init__(self) -> None:
        if math.isnan(self.p_gen_clean) or not 0.0 <= self.p_gen_clean <= 1.0:
            raise Infeasible(f"p_gen_clean must lie in [0, 1], got {self.p_gen_clean!r}")
        if self.trials < 1:
            raise Infeasible(f"trials must be >= 1, got {self.trials!r}")
        if self.gen_cap < 1 or self.batch < 1:
            raise Infeasible("gen_cap and batch must be >= 1")


@dataclass(frozen=True)
class TrialResult:
    """Counts, empirical rates, and costs of one trial."""

    trial: int
    n_gen: int
    n_aqa: int
    n_mqa: int
    tp: int
    fp: int
    tn: int
    fn: int
    y_aqa_emp: float
    p_aqa_clean_emp: float | None
    costs: CostBreakdown


_AGG_FIELDS = (
    "n_gen",
    "n_aqa",
    "n_mqa",
    "y_aqa_emp",
    "p_aqa_clean_emp",
    "gen_cost",
    "aqa_cost",
    "mqa_cost",
    "total_cost",
)


@dataclass(frozen=True)
class SimAggregate:
    """Mean or sample standard deviation over trials, field by field.

    p_aqa_clean_emp aggregates only trials where it is defined (some image
    passed the filter); it is None when no trial defines it. With a single
    trial the sample standard deviation is reported as 0.0.
    """

    n_gen: float
    n_aqa: float
    n_mqa: float
    y_aqa_emp: float
    p_aqa_clean_emp: float | None
    gen_cost: float
    aqa_cost: float
    mqa_cost: float
    total_cost: float


@dataclass(frozen=True)
class SimReport:
    """Per-trial results plus their mean and sample std, echoing the config."""

    config: SimConfig
    trials: tuple[TrialResult, ...]
    mean: SimAggregate
    std: SimAggregate
    backend: str


def to_conditional(rates: StageRates) -> ClassifierConditional:
    """Invert stage rates into truth-conditioned pass probabilities.

    Requires 0 < p_gen_clean < 1 so both conditioning events have mass. The
    inversion can exceed 1 when the rates ask the filter to pass more clean
    (or defective) images than the generator supplies; that raises Infeasible
    naming the violated side.
    """
    p = rates.p_gen_clean
    if not 0.0 < p < 1.0:
        raise Infeasible(f"conditional form needs 0 < p_gen_clean < 1, got {p!r}")
    pass_clean = rates.y_aqa * rates.p_aqa_clean / p
    pass_defect = rates.y_aqa * (1.0 - rates.p_aqa_clean) / (1.0 - p)
    problems = []
    if pass_clean > 1.0 + _COND_TOL:
        problems.append(f"pass_given_clean = {pass_clean:.6g} exceeds 1")
    if pass_defect > 1.0 + _COND_TOL:
        problems.append(f"pass_given_defect = {pass_defect:.6g} exceeds 1")
    if problems:
        raise Infeasible("infeasible rates: " + "; ".join(problems))
    return ClassifierConditional(min(pass_clean, 1.0), min(pass_defect, 1.0))


def from_conditional(cond: ClassifierConditional, p_gen_clean: float) -> StageRates:
    """Exact inverse of :func:`to_conditional`.

    Raises DegenerateYield when the implied filter passes nothing, since the
    clean precision of an empty pass set is undefined.
    """
    if math.isnan(p_gen_clean) or not 0.0 <= p_gen_clean <= 1.0:
        raise Infeasible(f"p_gen_clean must lie in [0, 1], got {p_gen_clean!r}")
    y_aqa = p_gen_clean * cond.pass_given_clean + (1.0 - p_gen_clean) * cond.pass_given_defect
    if y_aqa == 0.0:
        raise DegenerateYield(
            "implied filter yield is zero, so clean precision is undefined "
            f"(pass_given_clean={cond.pass_given_clean!r}, "
            f"pass_given_defect={cond.pass_given_defect!r}, p_gen_clean={p_gen_clean!r})"
        )
    p_aqa_clean = p_gen_clean * cond.pass_given_clean / y_aqa
    return StageRates(p_gen_clean, y_aqa, min(p_aqa_clean, 1.0))


def trial_key(seed: int, trial: int) -> int:
    """Stream key for one trial; exposed so outcomes can be replayed."""
    return _kernel.stream_key(seed, trial)


def trial_image_outcomes(config: SimConfig, trial: int, n_images: int):
    """Replay per-image (is_clean, passed_filter) booleans for a trial.

    Validation helper: feeding these outcomes through any counting path must
    reproduce the trial's reported counts exactly.
    """
    key = trial_key(config.seed, trial)
    return _kernel.draw_images(
        key,
        0,
        n_images,
        config.p_gen_clean,
        config.classifier.pass_given_clean,
        config.classifier.pass_given_defect,
    )


def _run_trial(config: SimConfig, trial: int) -> TrialResult:
    key = trial_key(config.seed, trial)
    c = config.classifier
    if config.stop_rule.kind == FIXED_GENERATED:
        n_gen, tp, fp, tn, fn = _kernel.run_fixed(
            key, config.stop_rule.n, config.p_gen_clean, c.pass_given_clean, c.pass_given_defect
        )
    else:
        n_gen, tp, fp, tn, fn, reached = _kernel.run_target(
            key,
            config.stop_rule.n,
            config.gen_cap,
            config.batch,
            config.p_gen_clean,
            c.pass_given_clean,
            c.pass_given_defect,
        )
        if not reached:
            raise BudgetExceeded(
                f"trial {trial}: generation cap {config.gen_cap} reached with only "
                f"{tp} of {config.stop_rule.n} target acceptances"
            )
    n_aqa = tp + fp
    n_mqa = tp
    y_emp = n_aqa / n_gen if n_gen else 0.0
    p_emp = tp / n_aqa if n_aqa else None
    costs = CostBreakdown.from_parts(
        n_gen * config.costs.c_gen,
        n_gen * config.costs.c_aqa,
        n_aqa * config.costs.c_mqa,
    )
    return TrialResult(trial, n_gen, n_aqa, n_mqa, tp, fp, tn, fn, y_emp, p_emp, costs)


def _trial_values(result: TrialResult) -> dict[str, float | None]:
    return {
        "n_gen": float(result.n_gen),
        "n_aqa": float(result.n_aqa),
        "n_mqa": float(result.n_mqa),
        "y_aqa_emp": result.y_aqa_emp,
        "p_aqa_clean_emp": result.p_aqa_clean_emp,
        "gen_cost": result.costs.gen_cost,
        "aqa_cost": result.costs.aqa_cost,
        "mqa_cost": result.costs.mqa_cost,
        "total_cost": result.costs.total,
    }


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def _sample_std(values: list[float]) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    mu = _mean(values)
    return math.sqrt(sum((v - mu) ** 2 for v in values) / (n - 1))


def _aggregate(results: tuple[TrialResult, ...]) -> tuple[SimAggregate, SimAggregate]:
    columns: dict[str, list[float]] = {name: [] for name in _AGG_FIELDS}
    for result in results:
        for name, value in _trial_values(result).items():
            if value is not None:
                columns[name].append(value)
    means = {}
    stds = {}
    for name, values in columns.items():
        if values:
            means[name] = _mean(values)
            stds[name] = _sample_std(values)
        else:
            means[name] = None
            stds[name] = None
    return SimAggregate(**means), SimAggregate(**stds)


def simulate(config: SimConfig, workers: int = 1) -> SimReport:
    """Run all trials and aggregate them.

    ``workers`` only controls how trials are scheduled; per-trial streams are
    keyed independently, so the report is identical for any worker count.
    """
    if workers < 1:
        raise Infeasible(f"workers must be >= 1, got {workers!r}")
    indices = range(config.trials)
    if workers == 1 or config.trials == 1:
        results = tuple(_run_trial(config, t) for t in indices)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = tuple(pool.map(lambda t: _run_trial(config, t), indices))
    mean, std = _aggregate(results)
    return SimReport(config, results, mean, std, _kernel.BACKEND_NAME)
