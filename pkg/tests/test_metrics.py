"""Annotation protocol and confusion statistics, against the committed
hand-computed fixture and against replayed simulator outcomes."""

import csv
from pathlib import Path

import numpy as np
import pytest

from qapipe.cost_model import UnitCosts
from qapipe.errors import EmptyInput, FormatError, ZeroPass
from qapipe.metrics import (
    CLEAN,
    DEFECT,
    DISCARDED,
    AnnotationRecord,
    ConsensusLabel,
    ConfusionStats,
    EvalRecord,
    agreement_rate,
    binarize,
    confusion,
    consensus,
    image_labels,
    load_annotations,
    load_evals,
    stage_rates_from_confusion,
)
from qapipe.pipeline_sim import (
    ClassifierConditional,
    SimConfig,
    fixed_generated,
    simulate,
    trial_image_outcomes,
)

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="module")
def fixture_records():
    return load_annotations(str(DATA / "annotations_fixture.csv"))


class TestConsensus:
    def test_unanimous(self):
        records = [AnnotationRecord("i", f"r{k}", "d", 1) for k in range(3)]
        labels = consensus(records)
        assert labels == [ConsensusLabel("i", "d", "agreed", 1)]

    def test_split(self):
        severities = [1, 3, 3]
        records = [AnnotationRecord("i", f"r{k}", "d", s) for k, s in enumerate(severities)]
        assert consensus(records) == [ConsensusLabel("i", "d", "no_consensus", None)]

    def test_fixture_matches_golden(self, fixture_records):
        labels = consensus(fixture_records)
        with open(DATA / "consensus_golden.csv", newline="", encoding="utf-8") as handle:
            golden = list(csv.DictReader(handle))
        assert len(labels) == len(golden)
        for label, expected in zip(labels, golden):
            assert label.image_id == expected["image_id"]
            assert label.defect_id == expected["defect_id"]
            assert label.status == expected["status"]
            severity = None if expected["severity"] == "" else int(expected["severity"])
            assert label.severity == severity
            assert binarize(label) == expected["binarized"]


class TestBinarize:
    def test_agreed_clean(self):
        assert binarize(ConsensusLabel("i", "d", "agreed", 1)) == CLEAN

    def test_agreed_significant(self):
        assert binarize(ConsensusLabel("i", "d", "agreed", 3)) == DEFECT

    def test_agreed_middling_discarded(self):
        assert binarize(ConsensusLabel("i", "d", "agreed", 2)) == DISCARDED

    def test_no_consensus_discarded(self):
        assert binarize(ConsensusLabel("i", "d", "no_consensus", None)) == DISCARDED

    def test_count_conservation(self, fixture_records):
        labels = consensus(fixture_records)
        outcomes = [binarize(label) for label in labels]
        assert outcomes.count(CLEAN) + outcomes.count(DEFECT) + outcomes.count(DISCARDED) == len(labels)


class TestImageLabels:
    def test_fixture_matches_golden(self, fixture_records):
        labels = image_labels(consensus(fixture_records))
        with open(DATA / "image_labels_golden.csv", newline="", encoding="utf-8") as handle:
            golden = {row["image_id"]: row["label"] for row in csv.DictReader(handle)}
        assert labels == golden

    def test_scoping_drops_defects(self, fixture_records):
        labels = image_labels(consensus(fixture_records), in_scope_defects={"bg_objects_distortion"})
        # with only one defect in scope, img02's scale defect no longer counts
        assert labels["img02"] == CLEAN
        assert labels["img03"] == DEFECT


class TestAgreementRate:
    def test_fixture_rates(self, fixture_records):
        assert agreement_rate(fixture_records, "scale_mismatch") == pytest.approx(4 / 6)
        assert agreement_rate(fixture_records, "bg_objects_distortion") == pytest.approx(5 / 6)

    def test_always_agreeing(self):
        records = [
            AnnotationRecord(f"i{n}", f"r{k}", "d", 2) for n in range(4) for k in range(3)
        ]
        assert agreement_rate(records, "d") == 1.0

    def test_single_rater_is_vacuous_agreement(self):
        records = [AnnotationRecord(f"i{n}", "solo", "d", n % 3 + 1) for n in range(5)]
        assert agreement_rate(records, "d") == 1.0

    def test_monotone_under_new_images(self, fixture_records):
        base = agreement_rate(fixture_records, "scale_mismatch")
        agreeing = fixture_records + [
            AnnotationRecord("img99", f"r{k}", "scale_mismatch", 3) for k in range(3)
        ]
        disagreeing = fixture_records + [
            AnnotationRecord("img98", f"r{k}", "scale_mismatch", k + 1) for k in range(3)
        ]
        assert agreement_rate(agreeing, "scale_mismatch") >= base
        assert agreement_rate(disagreeing, "scale_mismatch") <= base

    def test_empty(self, fixture_records):
        with pytest.raises(EmptyInput):
            agreement_rate(fixture_records, "no_such_defect")


def _synthetic_evals(n, n_clean, n_pass, n_clean_pass):
    evals = []
    clean_passed = defect_passed = 0
    for i in range(n):
        truth = CLEAN if i < n_clean else DEFECT
        if truth == CLEAN and clean_passed < n_clean_pass:
            predicted, clean_passed = CLEAN, clean_passed + 1
        elif truth == DEFECT and defect_passed < n_pass - n_clean_pass:
            predicted, defect_passed = CLEAN, defect_passed + 1
        else:
            predicted = DEFECT
        evals.append(EvalRecord(f"img{i:05d}", truth, predicted))
    return evals


class TestConfusion:
    def test_reconstructed_test_set(self):
        # 380 images, 71 truly clean; 45 pass the filter, 18 of them clean
        evals = _synthetic_evals(380, 71, 45, 18)
        stats = confusion(evals)
        assert stats.n == 380 and stats.actual_clean == 71
        assert stats.predicted_clean == 45 and stats.tp == 18
        assert f"{stats.yield_clean:.3f}" == "0.118"
        assert stats.precision_clean == pytest.approx(0.400, abs=1e-12)

    def test_all_correct(self):
        evals = [EvalRecord("a", CLEAN, CLEAN), EvalRecord("b", DEFECT, DEFECT)]
        stats = confusion(evals)
        assert stats.precision_clean == stats.recall_clean == 1.0
        assert stats.precision_defect == stats.recall_defect == 1.0

    def test_nothing_predicted_clean(self):
        evals = [EvalRecord("a", CLEAN, DEFECT), EvalRecord("b", DEFECT, DEFECT)]
        stats = confusion(evals)
        assert stats.yield_clean == 0.0
        assert stats.precision_clean is None

    def test_empty(self):
        with pytest.raises(EmptyInput):
            confusion([])


class TestStageRatesFromConfusion:
    def test_reconstructed_test_set(self):
        stats = confusion(_synthetic_evals(380, 71, 45, 18))
        rates = stage_rates_from_confusion(stats)
        assert rates.p_gen_clean == pytest.approx(0.1868, abs=5e-5)
        assert rates.y_aqa == pytest.approx(0.1184, abs=5e-5)
        assert rates.p_aqa_clean == pytest.approx(0.400, abs=1e-12)

    def test_perfect_predictor(self):
        stats = ConfusionStats(tp=30, fp=0, tn=70, fn=0)
        rates = stage_rates_from_confusion(stats)
        assert rates == pytest.approx((0.3, 0.3, 1.0)) or (
            rates.p_gen_clean,
            rates.y_aqa,
            rates.p_aqa_clean,
        ) == (0.3, 0.3, 1.0)

    def test_supplied_clean_rate(self):
        stats = ConfusionStats(tp=18, fp=27, tn=282, fn=53)
        rates = stage_rates_from_confusion(stats, p_gen_clean=0.2)
        assert rates.p_gen_clean == 0.2

    def test_zero_pass(self):
        with pytest.raises(ZeroPass):
            stage_rates_from_confusion(ConfusionStats(0, 0, 5, 5))

    def test_coin_flip_precision_tracks_base_rate(self):
        # 1e5 synthetic records, clean base rate 0.187, coin-flip predictions
        rng = np.random.default_rng(2024)
        truth = rng.random(100_000) < 0.187
        predicted = rng.random(100_000) < 0.5
        evals = [
            EvalRecord(f"img{i}", CLEAN if t else DEFECT, CLEAN if p else DEFECT)
            for i, (t, p) in enumerate(zip(truth, predicted))
        ]
        rates = stage_rates_from_confusion(confusion(evals))
        assert rates.p_aqa_clean == pytest.approx(0.187, abs=0.01)


class TestSimulatorConsistency:
    def test_confusion_reproduces_simulator_rates(self):
        config = SimConfig(
            p_gen_clean=0.187,
            classifier=ClassifierConditional(0.25240641711229944, 0.08708487084870847),
            costs=UnitCosts(0.004, 0.0, 0.5),
            stop_rule=fixed_generated(20000),
            seed=7,
            trials=2,
        )
        report = simulate(config)
        for result in report.trials:
            clean, passed = trial_image_outcomes(config, result.trial, result.n_gen)
            evals = [
                EvalRecord(f"img{i}", CLEAN if c else DEFECT, CLEAN if p else DEFECT)
                for i, (c, p) in enumerate(zip(clean, passed))
            ]
            stats = confusion(evals)
            assert (stats.tp, stats.fp, stats.tn, stats.fn) == (
                result.tp,
                result.fp,
                result.tn,
                result.fn,
            )
            assert stats.yield_clean == result.y_aqa_emp
            assert stats.precision_clean == result.p_aqa_clean_emp


class TestCsvIngestion:
    def test_round_trip_fixture(self, fixture_records):
        assert len(fixture_records) == 36
        assert fixture_records[0] == AnnotationRecord("img01", "r1", "scale_mismatch", 1)

    def test_header_enforced(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("image,rater,defect,severity\nx,y,z,1\n")
        with pytest.raises(FormatError, match="header"):
            load_annotations(str(bad))

    def test_severity_range_enforced(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("image_id,annotator_id,defect_id,severity\na,b,c,4\n")
        with pytest.raises(FormatError, match="severity"):
            load_annotations(str(bad))

    def test_duplicates_rejected(self, tmp_path):
        bad = tmp_path / "dup.csv"
        bad.write_text(
            "image_id,annotator_id,defect_id,severity\na,b,c,1\na,b,c,2\n"
        )
        with pytest.raises(FormatError, match="duplicate"):
            load_annotations(str(bad))

    def test_eval_values_enforced(self, tmp_path):
        bad = tmp_path / "bad_eval.csv"
        bad.write_text("image_id,truth,predicted\na,clean,maybe\n")
        with pytest.raises(FormatError):
            load_evals(str(bad))
