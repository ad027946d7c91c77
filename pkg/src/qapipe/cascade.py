"""Compose per-defect binary detectors into one whole-pipeline filter stage.

Each detector is characterized by what was measured on its own evaluation
set: the fraction of images it passes, its precision among flagged images,
and the defect's base rate there. Inverting those gives truth-conditioned
flag probabilities per detector. A cascade passes an image only if every
detector passes it.

Two composition routes are provided. The closed form assumes defect
occurrences and detector errors are mutually independent, which lets the
pass probability factorize per detector. The exhaustive route enumerates
every defect-presence vector of an explicit joint distribution and exists
precisely to quantify the closed form's independence error; on a joint built
from independent marginals the two agree to near machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cost_model import StageRates
from .errors import CleanRateMismatch, Infeasible, TooManyDefects

ENUMERATION_LIMIT = 8

# Tolerance for the supplied-vs-implied clean rate consistency check.
_CLEAN_TOL = 1e-9
_JOINT_TOL = 1e-9


def _check_unit(name: str, value: float) -> None:
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise Infeasible(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class DetectorProfile:
    """One per-defect binary detector as measured on its evaluation set.

    pass_yield: fraction of evaluation images the detector passes.
    flag_precision: fraction of flagged images that truly show the defect.
    prevalence: base rate of the defect in the evaluation set.

    Field ranges are validated here; the derived conditional probabilities
    are validated where they are computed, see :func:`detector_conditionals`.
    """

    defect_id: str
    pass_yield: float
    flag_precision: float
    prevalence: float

    def __post_init__(self) -> None:
        if not self.defect_id:
            raise Infeasible("defect_id must be non-empty")
        _check_unit(f"{self.defect_id}: pass_yield", self.pass_yield)
        _check_unit(f"{self.defect_id}: flag_precision", self.flag_precision)
        _check_unit(f"{self.defect_id}: prevalence", self.prevalence)


@dataclass(frozen=True)
class DefectMix:
    """Defect presence distribution, as independent marginals or a joint table.

    The joint form stores one probability per presence vector over the listed
    defects, indexed so that bit i of the vector index is defect i's presence;
    it is limited to ENUMERATION_LIMIT defect types and must sum to 1.
    """

    defect_ids: tuple[str, ...]
    marginals: tuple[float, ...] | None = None
    joint: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if len(set(self.defect_ids)) != len(self.defect_ids):
            raise Infeasible("defect_ids must be unique")
        if (self.marginals is None) == (self.joint is None):
            raise Infeasible("exactly one of marginals or joint must be given")
        if self.marginals is not None:
            if len(self.marginals) != len(self.defect_ids):
                raise Infeasible("one marginal per defect required")
            for defect_id, q in zip(self.defect_ids, self.marginals):
                _check_unit(f"marginal for {defect_id}", q)
        else:
            k = len(self.defect_ids)
            if k > ENUMERATION_LIMIT:
                raise TooManyDefects(
                    f"joint tables support at most {ENUMERATION_LIMIT} defects, got {k}"
                )
            if len(self.joint) != 1 << k:
                raise Infeasible(f"joint table must have {1 << k} entries, got {len(self.joint)}")
            for p in self.joint:
                if math.isnan(p) or p < 0.0:
                    raise Infeasible(f"joint probabilities must be >= 0, got {p!r}")
            total = sum(self.joint)
            if abs(total - 1.0) > _JOINT_TOL:
                raise Infeasible(f"joint table must sum to 1, got {total!r}")

    @classmethod
    def independent(cls, marginals: dict[str, float]) -> DefectMix:
        ids = tuple(marginals)
        return cls(ids, marginals=tuple(marginals[d] for d in ids))

    def to_joint(self) -> DefectMix:
        """Expand independent marginals into the equivalent joint table."""
        if self.joint is not None:
            return self
        k = len(self.defect_ids)
        if k > ENUMERATION_LIMIT:
            raise TooManyDefects(
                f"joint tables support at most {ENUMERATION_LIMIT} defects, got {k}"
            )
        table = []
        for vector in range(1 << k):
            p = 1.0
            for i, q in enumerate(self.marginals):
                p *= q if vector >> i & 1 else 1.0 - q
            table.append(p)
        return DefectMix(self.defect_ids, joint=tuple(table))

    def clean_probability(self) -> float:
        """Probability that no defect is present."""
        if self.marginals is not None:
            p = 1.0
            for q in self.marginals:
                p *= 1.0 - q
            return p
        return self.joint[0]


@dataclass(frozen=True)
class CascadeSpec:
    """Ordered detectors combined under a pass rule.

    The only rule currently defined is "all_pass": an image passes the stage
    only if every detector passes it. The field exists so alternative rules
    can be added without changing the type's shape.
    """

    detectors: tuple[DetectorProfile, ...]
    rule: str = "all_pass"

    def __post_init__(self) -> None:
        if not self.detectors:
            raise Infeasible("a cascade needs at least one detector")
        ids = [d.defect_id for d in self.detectors]
        if len(set(ids)) != len(ids):
            raise Infeasible(f"detector defect_ids must be unique, got {ids}")
        if self.rule != "all_pass":
            raise Infeasible(f"unknown cascade rule {self.rule!r}")

    @property
    def defect_ids(self) -> tuple[str, ...]:
        return tuple(d.defect_id for d in self.detectors)


def detector_conditionals(detector: DetectorProfile) -> tuple[float, float]:
    """(flag_given_present, flag_given_absent) for one detector.

    Inverts the measured pass yield and flag precision against the defect's
    base rate. Raises Infeasible, naming the constraint, when the measured
    numbers would require flagging more images than carry (or lack) the
    defect; rounding within 1e-9 above 1 is clamped.
    """
    if not 0.0 < detector.prevalence < 1.0:
        raise Infeasible(
            f"{detector.defect_id}: conditionals need 0 < prevalence < 1, "
            f"got {detector.prevalence!r}"
        )
    flag_rate = 1.0 - detector.pass_yield
    flag_present = flag_rate * detector.flag_precision / detector.prevalence
    flag_absent = flag_rate * (1.0 - detector.flag_precision) / (1.0 - detector.prevalence)
    problems = []
    if flag_present > 1.0 + _CLEAN_TOL:
        problems.append(
            f"flag_given_present = {flag_present:.6g} exceeds 1 "
            "(detector flags more defect-bearing images than exist)"
        )
    if flag_absent > 1.0 + _CLEAN_TOL:
        problems.append(
            f"flag_given_absent = {flag_absent:.6g} exceeds 1 "
            "(detector flags more defect-free images than exist)"
        )
    if problems:
        raise Infeasible(f"{detector.defect_id}: " + "; ".join(problems))
    return min(flag_present, 1.0), min(flag_absent, 1.0)


def cascade_decide(passes: list[bool] | tuple[bool, ...]) -> bool:
    """Stage decision from per-detector pass booleans: pass iff all pass."""
    if not passes:
        raise Infeasible("cascade_decide needs at least one detector decision")
    return all(passes)


def _mix_for(spec: CascadeSpec, mix: DefectMix) -> DefectMix:
    if mix.defect_ids != spec.defect_ids:
        if set(mix.defect_ids) != set(spec.defect_ids):
            raise Infeasible(
                f"mix defects {sorted(mix.defect_ids)} do not match "
                f"cascade defects {sorted(spec.defect_ids)}"
            )
        if mix.marginals is None:
            raise Infeasible("joint mix must list defects in cascade order")
        by_id = dict(zip(mix.defect_ids, mix.marginals))
        return DefectMix(spec.defect_ids, marginals=tuple(by_id[d] for d in spec.defect_ids))
    return mix


def _check_clean_rate(mix: DefectMix, p_gen_clean: float) -> None:
    implied = mix.clean_probability()
    if abs(implied - p_gen_clean) > _CLEAN_TOL:
        raise CleanRateMismatch(
            f"supplied p_gen_clean = {p_gen_clean!r} but the mix implies "
            f"{implied!r} (all defects absent)"
        )


def effective_rates_independent(
    spec: CascadeSpec, mix: DefectMix, p_gen_clean: float
) -> StageRates:
    """Whole-stage rates under independent defects and detector errors.

    Independence makes the stage pass probability a product of per-detector
    pass probabilities, and the clean-and-passed probability a product over
    absent-and-not-flagged terms. No sampling or enumeration is involved.
    """
    if mix.marginals is None:
        raise Infeasible("effective_rates_independent needs a marginal mix")
    mix = _mix_for(spec, mix)
    _check_clean_rate(mix, p_gen_clean)
    y_aqa = 1.0
    clean_pass = 1.0
    for detector, q in zip(spec.detectors, mix.marginals):
        flag_present, flag_absent = detector_conditionals(detector)
        y_aqa *= q * (1.0 - flag_present) + (1.0 - q) * (1.0 - flag_absent)
        clean_pass *= (1.0 - q) * (1.0 - flag_absent)
    p_aqa_clean = clean_pass / y_aqa if y_aqa > 0.0 else 0.0
    return StageRates(p_gen_clean, y_aqa, min(p_aqa_clean, 1.0))


def effective_rates_enumerate(spec: CascadeSpec, mix: DefectMix, p_gen_clean: float) -> StageRates:
    """Exact whole-stage rates by enumerating every defect-presence vector.

    Brute-force oracle for :func:`effective_rates_independent`; also the only
    route for correlated defect occurrences given as a joint table. Limited
    to ENUMERATION_LIMIT defect types. When the stage passes nothing, the
    clean precision is undefined and reported as 0.0.
    """
    k = len(spec.detectors)
    if k > ENUMERATION_LIMIT:
        raise TooManyDefects(f"enumeration supports at most {ENUMERATION_LIMIT} defects, got {k}")
    mix = _mix_for(spec, mix).to_joint()
    _check_clean_rate(mix, p_gen_clean)
    conditionals = [detector_conditionals(d) for d in spec.detectors]
    y_aqa = 0.0
    clean_pass = 0.0
    for vector in range(1 << k):
        p_vector = mix.joint[vector]
        if p_vector == 0.0:
            continue
        pass_prob = 1.0
        for i, (flag_present, flag_absent) in enumerate(conditionals):
            present = vector >> i & 1
            pass_prob *= 1.0 - (flag_present if present else flag_absent)
        y_aqa += p_vector * pass_prob
        if vector == 0:
            clean_pass = p_vector * pass_prob
    p_aqa_clean = clean_pass / y_aqa if y_aqa > 0.0 else 0.0
    return StageRates(p_gen_clean, min(y_aqa, 1.0), min(p_aqa_clean, 1.0))


def detector_stage_rates(detector: DetectorProfile) -> StageRates:
    """The stage rates a single detector realizes on its own evaluation set."""
    mix = DefectMix((detector.defect_id,), marginals=(detector.prevalence,))
    return effective_rates_independent(
        CascadeSpec((detector,)), mix, 1.0 - detector.prevalence
    )
