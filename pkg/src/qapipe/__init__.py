"""qapipe: economics of a generate/filter/review image pipeline.

Closed-form volume, cost, and savings math; a Monte Carlo simulator that
validates it; per-defect detector composition; annotation-derived rate
estimation; and a CLI with CSV/SVG reporting.
"""

__version__ = "0.1.0"

from .analysis import SweepRow, break_even_precision, sweep_precision
from .cost_model import (
    CEILING,
    EXPECTATION,
    CostBreakdown,
    SavingsReport,
    StageRates,
    UnitCosts,
    VolumePlan,
    baseline_cost,
    overall_yield,
    pipeline_cost,
    savings,
    volumes_from_generated,
    volumes_from_target,
)
from .errors import QapipeError
from .pipeline_sim import (
    ClassifierConditional,
    SimConfig,
    SimReport,
    StopRule,
    fixed_generated,
    from_conditional,
    simulate,
    target_accepted,
    to_conditional,
)

__all__ = [
    "CEILING",
    "EXPECTATION",
    "ClassifierConditional",
    "CostBreakdown",
    "QapipeError",
    "SavingsReport",
    "SimConfig",
    "SimReport",
    "StageRates",
    "StopRule",
    "SweepRow",
    "UnitCosts",
    "VolumePlan",
    "__version__",
    "baseline_cost",
    "break_even_precision",
    "fixed_generated",
    "from_conditional",
    "overall_yield",
    "pipeline_cost",
    "savings",
    "simulate",
    "sweep_precision",
    "target_accepted",
    "to_conditional",
    "volumes_from_generated",
    "volumes_from_target",
]
