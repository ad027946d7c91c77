"""Annotation ingestion, consensus labeling, and confusion statistics.

Raters score each (image, defect) pair on a three-level severity scale:
1 = no defect, 2 = some defect, 3 = significant defect. Only pairs where
every rater gave the same severity are kept; agreed severity 1 binarizes to
clean, agreed 3 to defect, and agreed 2 is discarded along with everything
lacking consensus. Rater counts may vary per pair; complete agreement is
defined over whoever rated the pair.

Confusion statistics treat clean as the positive class. Derived ratios with
an empty denominator are reported as None and rendered as 0.000 only at the
report boundary.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass

from .cost_model import StageRates
from .errors import EmptyInput, FormatError, ZeroPass

CLEAN = "clean"
DEFECT = "defect"
DISCARDED = "discarded"

NO_CONSENSUS = "no_consensus"

SEVERITY_NO_DEFECT = 1
SEVERITY_SOME_DEFECT = 2
SEVERITY_SIGNIFICANT = 3

ANNOTATION_HEADER = ["image_id", "annotator_id", "defect_id", "severity"]
EVAL_HEADER = ["image_id", "truth", "predicted"]


@dataclass(frozen=True)
class AnnotationRecord:
    """One rater's severity for one (image, defect) pair."""

    image_id: str
    annotator_id: str
    defect_id: str
    severity: int

    def __post_init__(self) -> None:
        if self.severity not in (1, 2, 3):
            raise FormatError(
                f"severity must be 1, 2, or 3, got {self.severity!r} "
                f"({self.image_id}/{self.defect_id}/{self.annotator_id})"
            )


@dataclass(frozen=True)
class ConsensusLabel:
    """Agreement outcome for one (image, defect) pair.

    status is "agreed" with the common severity, or "no_consensus" with
    severity None.
    """

    image_id: str
    defect_id: str
    status: str
    severity: int | None

    @property
    def agreed(self) -> bool:
        return self.status == "agreed"


@dataclass(frozen=True)
class EvalRecord:
    """Ground truth and filter prediction for one image, both binary."""

    image_id: str
    truth: str
    predicted: str

    def __post_init__(self) -> None:
        for name, value in (("truth", self.truth), ("predicted", self.predicted)):
            if value not in (CLEAN, DEFECT):
                raise FormatError(f"{name} must be '{CLEAN}' or '{DEFECT}', got {value!r}")


@dataclass(frozen=True)
class ConfusionStats:
    """Binary confusion counts with clean as the positive class."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def predicted_clean(self) -> int:
        return self.tp + self.fp

    @property
    def predicted_defect(self) -> int:
        return self.tn + self.fn

    @property
    def actual_clean(self) -> int:
        return self.tp + self.fn

    @property
    def actual_defect(self) -> int:
        return self.tn + self.fp

    @property
    def yield_clean(self) -> float:
        return self.predicted_clean / self.n

    @property
    def yield_defect(self) -> float:
        return self.predicted_defect / self.n

    @property
    def precision_clean(self) -> float | None:
        return self.tp / self.predicted_clean if self.predicted_clean else None

    @property
    def precision_defect(self) -> float | None:
        return self.tn / self.predicted_defect if self.predicted_defect else None

    @property
    def recall_clean(self) -> float | None:
        return self.tp / self.actual_clean if self.actual_clean else None

    @property
    def recall_defect(self) -> float | None:
        return self.tn / self.actual_defect if self.actual_defect else None


def consensus(records: list[AnnotationRecord]) -> list[ConsensusLabel]:
    """Collapse rater records into one label per (image, defect) pair.

    A pair is agreed only when every rater who scored it gave the same
    severity. Output is sorted by (image_id, defect_id) for stable reports.
    """
    severities: dict[tuple[str, str], list[int]] = defaultdict(list)
    for record in records:
        severities[(record.image_id, record.defect_id)].append(record.severity)
    labels = []
    for (image_id, defect_id), values in sorted(severities.items()):
        if len(set(values)) == 1:
            labels.append(ConsensusLabel(image_id, defect_id, "agreed", values[0]))
        else:
            labels.append(ConsensusLabel(image_id, defect_id, NO_CONSENSUS, None))
    return labels


def binarize(label: ConsensusLabel) -> str:
    """Map a consensus label to clean, defect, or discarded.

    Agreed severity 1 is clean and agreed 3 is defect. Agreed 2 is discarded
    (middling cases carry no reliable signal), as is any disagreement.
    """
    if not label.agreed:
        return DISCARDED
    if label.severity == SEVERITY_NO_DEFECT:
        return CLEAN
    if label.severity == SEVERITY_SIGNIFICANT:
        return DEFECT
    return DISCARDED


def image_labels(
    labels: list[ConsensusLabel], in_scope_defects: set[str] | None = None
) -> dict[str, str]:
    """Image-level binary label from per-defect consensus labels.

    Any in-scope defect label makes the image defect; the image is clean only
    if every in-scope defect binarizes to clean; otherwise (some pair
    discarded, none defect) the image is discarded. The in-scope defect set
    defaults to every defect present in the labels.
    """
    per_image: dict[str, list[str]] = defaultdict(list)
    for label in labels:
        if in_scope_defects is None or label.defect_id in in_scope_defects:
            per_image[label.image_id].append(binarize(label))
    result = {}
    for image_id, outcomes in sorted(per_image.items()):
        if DEFECT in outcomes:
            result[image_id] = DEFECT
        elif all(outcome == CLEAN for outcome in outcomes):
            result[image_id] = CLEAN
        else:
            result[image_id] = DISCARDED
    return result


def agreement_rate(records: list[AnnotationRecord], defect_id: str) -> float:
    """Fraction of the defect's images whose raters completely agree.

    An image rated by a single annotator counts as agreement by definition.
    """
    by_image: dict[str, list[int]] = defaultdict(list)
    for record in records:
        if record.defect_id == defect_id:
            by_image[record.image_id].append(record.severity)
    if not by_image:
        raise EmptyInput(f"no records for defect {defect_id!r}")
    agreed = sum(1 for values in by_image.values() if len(set(values)) == 1)
    return agreed / len(by_image)


def confusion(evals: list[EvalRecord]) -> ConfusionStats:
    """Exact confusion counts over evaluation records (clean = positive)."""
    if not evals:
        raise EmptyInput("confusion needs at least one evaluation record")
    tp = fp = tn = fn = 0
    for record in evals:
        if record.predicted == CLEAN:
            if record.truth == CLEAN:
                tp += 1
            else:
                fp += 1
        else:
            if record.truth == CLEAN:
                fn += 1
            else:
                tn += 1
    return ConfusionStats(tp, fp, tn, fn)


def stage_rates_from_confusion(
    stats: ConfusionStats, p_gen_clean: float | None = None
) -> StageRates:
    """Derive pipeline stage rates from confusion counts.

    The filter yield is the predicted-clean fraction and its clean precision
    is tp over predicted clean. The generator clean rate is taken from the
    data (actual clean fraction) unless a value is supplied.
    """
    if stats.predicted_clean == 0:
        raise ZeroPass("no predicted-clean records: filter rates undefined")
    y_aqa = stats.predicted_clean / stats.n
    p_aqa_clean = stats.tp / stats.predicted_clean
    if p_gen_clean is None:
        p_gen_clean = stats.actual_clean / stats.n
    return StageRates(p_gen_clean, y_aqa, p_aqa_clean)


def _read_rows(path: str, expected_header: list[str]) -> list[dict[str, str]]:
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise FormatError(f"{path}: empty file, expected header {','.join(expected_header)}")
            if header != expected_header:
                raise FormatError(
                    f"{path}: header must be exactly {','.join(expected_header)}, "
                    f"got {','.join(header)}"
                )
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(expected_header):
                    raise FormatError(f"{path}:{lineno}: expected {len(expected_header)} fields")
                rows.append(dict(zip(expected_header, row)))
            return rows
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def load_annotations(path: str) -> list[AnnotationRecord]:
    """Read an annotation CSV (header: image_id,annotator_id,defect_id,severity)."""
    records = []
    seen: set[tuple[str, str, str]] = set()
    for row in _read_rows(path, ANNOTATION_HEADER):
        try:
            severity = int(row["severity"])
        except ValueError:
            raise FormatError(f"{path}: severity must be an integer, got {row['severity']!r}")
        key = (row["image_id"], row["annotator_id"], row["defect_id"])
        if key in seen:
            raise FormatError(f"{path}: duplicate record for {key}")
        seen.add(key)
        records.append(AnnotationRecord(row["image_id"], row["annotator_id"], row["defect_id"], severity))
    return records


def load_evals(path: str) -> list[EvalRecord]:
    """Read an evaluation CSV (header: image_id,truth,predicted)."""
    return [
        EvalRecord(row["image_id"], row["truth"], row["predicted"])
        for row in _read_rows(path, EVAL_HEADER)
    ]
