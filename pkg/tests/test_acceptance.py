"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s`` to see
them). Tolerances are pinned here and nowhere else.

Reference operating points used throughout: a generator with clean rate
0.187; whole-pipeline filters measured at (yield, clean precision) =
(0.118, 0.400) for the single classifier, (0.239, 0.297) and (0.153, 0.241)
for the two cascades; unit costs 0.004 / 0 (or 0.00041) / 0.5 per image.
"""

import filecmp
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from qapipe.analysis import break_even_precision
from qapipe.cli import main as cli_main
from qapipe.cost_model import (
    EXPECTATION,
    StageRates,
    UnitCosts,
    baseline_cost,
    pipeline_cost,
    savings,
    volumes_from_generated,
)
from qapipe.cascade import (
    CascadeSpec,
    DefectMix,
    detector_stage_rates,
    effective_rates_enumerate,
    effective_rates_independent,
)
from qapipe.detectors import DEFAULT_TAXONOMY, parse_severity, render_prompt
from qapipe.metrics import (
    CLEAN,
    DEFECT,
    EvalRecord,
    agreement_rate,
    binarize,
    confusion,
    consensus,
    load_annotations,
    stage_rates_from_confusion,
)
from qapipe.pipeline_sim import SimConfig, fixed_generated, simulate, to_conditional

DATA = Path(__file__).parent / "data"

SINGLE_AG = StageRates(0.187, 0.118, 0.400)
CASCADE_AG = StageRates(0.187, 0.239, 0.297)
CASCADE_AG_NP = StageRates(0.187, 0.153, 0.241)
COSTS = UnitCosts(0.004, 0.0, 0.5)
COSTS_API = UnitCosts(0.004, 0.00041, 0.5)


@contextmanager
def criterion(number, description):
    try:
        yield
    except BaseException:
        print(f"[acceptance {number}] FAIL: {description}")
        raise
    print(f"[acceptance {number}] PASS: {description}")


def test_criterion_1_savings_replication(capsys):
    with criterion(1, "savings 0.5048 +/- 0.0005, reported 51.61% within 2 pp, note emitted, < 1 s"):
        start = time.perf_counter()
        report = savings(100, SINGLE_AG, COSTS, EXPECTATION)
        elapsed = time.perf_counter() - start
        assert report.delta_rel == pytest.approx(0.5048, abs=0.0005)
        assert abs(51.61 - 100 * report.delta_rel) <= 2.0
        code = cli_main(["savings", "--config", "single_ag"])
        out = capsys.readouterr().out
        assert code == 0
        assert "note:" in out and "51.61%" in out and "reconciliation band" in out
        assert elapsed < 1.0


def test_criterion_2_zero_and_harm_identities():
    with criterion(2, "pass-everything filter exactly neutral; harmful regime strictly negative (1000 samples)"):
        rng = np.random.default_rng(20240817)
        neutral_checked = 0
        while neutral_checked < 1000:
            p = rng.uniform(0.01, 1.0)
            costs = UnitCosts(rng.uniform(0, 2), 0.0, rng.uniform(0, 2))
            report = savings(rng.uniform(1, 1e5), StageRates(p, 1.0, p), costs)
            assert report.delta_abs == 0.0
            neutral_checked += 1
        harm_checked = 0
        while harm_checked < 1000:
            p_gen = rng.uniform(0.05, 0.95)
            p_aqa = rng.uniform(0.0, p_gen * 0.999)
            y_aqa = rng.uniform(0.01, 0.999)
            if StageRates.diagnose(p_gen, y_aqa, p_aqa):
                continue
            costs = UnitCosts(rng.uniform(1e-6, 2.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 2.0))
            report = savings(rng.uniform(1, 1e5), StageRates(p_gen, y_aqa, p_aqa), costs)
            assert report.delta_abs < 0.0
            harm_checked += 1


def _simulation_case(rates, costs, seed):
    config = SimConfig(
        p_gen_clean=rates.p_gen_clean,
        classifier=to_conditional(rates),
        costs=costs,
        stop_rule=fixed_generated(10**6),
        seed=seed,
        trials=3,
    )
    report = simulate(config)
    plan = volumes_from_generated(10**6, rates)
    assert report.mean.n_gen == plan.n_gen
    assert report.mean.n_aqa == pytest.approx(plan.n_aqa, rel=0.01)
    assert report.mean.n_mqa == pytest.approx(plan.n_mqa, rel=0.01)
    assert report.mean.gen_cost == pytest.approx(plan.n_gen * costs.c_gen, rel=0.01)
    assert report.mean.mqa_cost == pytest.approx(plan.n_aqa * costs.c_mqa, rel=0.01)
    if costs.c_aqa:
        assert report.mean.aqa_cost == pytest.approx(plan.n_gen * costs.c_aqa, rel=0.01)


def test_criterion_3_formula_simulation_equivalence():
    with criterion(3, "simulation matches closed form within 1% on 20 random + 3 measured configs, < 30 s"):
        start = time.perf_counter()
        _simulation_case(SINGLE_AG, COSTS, seed=101)
        _simulation_case(CASCADE_AG, COSTS, seed=102)
        _simulation_case(CASCADE_AG_NP, COSTS_API, seed=103)
        rng = np.random.default_rng(8311)
        for i in range(20):
            p_gen = rng.uniform(0.2, 0.9)
            pass_clean = rng.uniform(0.2, 1.0)
            pass_defect = rng.uniform(0.05, 1.0)
            y_aqa = p_gen * pass_clean + (1 - p_gen) * pass_defect
            rates = StageRates(p_gen, y_aqa, p_gen * pass_clean / y_aqa)
            costs = UnitCosts(rng.uniform(0.001, 0.1), rng.uniform(0.0, 0.01), rng.uniform(0.1, 1.0))
            _simulation_case(rates, costs, seed=1000 + i)
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"simulation suite took {elapsed:.1f} s"


def test_criterion_4_cascade_oracle():
    with criterion(4, "closed form equals enumeration within 1e-12 on 500 specs; single detector exact, < 10 s"):
        start = time.perf_counter()
        from test_cascade import random_spec_and_mix

        rng = np.random.default_rng(424242)
        for _ in range(500):
            spec, mix = random_spec_and_mix(rng, int(rng.integers(2, 7)))
            p_clean = mix.clean_probability()
            closed = effective_rates_independent(spec, mix, p_clean)
            exact = effective_rates_enumerate(spec, mix, p_clean)
            assert abs(closed.y_aqa - exact.y_aqa) <= 1e-12
            assert abs(closed.p_aqa_clean - exact.p_aqa_clean) <= 1e-12
        from qapipe.config import DETECTOR_TABLE, load_detector_table

        for detector in load_detector_table(DETECTOR_TABLE, "ag"):
            rates = detector_stage_rates(detector)
            assert rates.y_aqa == pytest.approx(detector.pass_yield, abs=1e-12)
            assert rates.p_gen_clean == pytest.approx(1.0 - detector.prevalence, abs=1e-12)
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"cascade oracle took {elapsed:.1f} s"


def test_criterion_5_break_even():
    with criterion(5, "break-even precision 0.198 +/- 0.001, sign-checked at 0.195 and 0.200"):
        p_star = break_even_precision(SINGLE_AG, COSTS, 100)
        assert p_star == pytest.approx(0.198, abs=0.001)
        assert savings(100, StageRates(0.187, 0.118, 0.195), COSTS).delta_abs < 0
        assert savings(100, StageRates(0.187, 0.118, 0.200), COSTS).delta_abs > 0


def test_criterion_6_configuration_ordering():
    with criterion(6, "totals 133.5 < 174.0 < 219.4 < 269.5 (each +/- 0.5) for an acceptance target of 100"):
        single = pipeline_cost(100, SINGLE_AG, COSTS).total
        cascade = pipeline_cost(100, CASCADE_AG, COSTS).total
        cascade_api = pipeline_cost(100, CASCADE_AG_NP, COSTS_API).total
        baseline = baseline_cost(100, 0.187, COSTS).total
        assert single == pytest.approx(133.5, abs=0.5)
        assert cascade == pytest.approx(174.0, abs=0.5)
        assert cascade_api == pytest.approx(219.4, abs=0.5)
        assert baseline == pytest.approx(269.5, abs=0.5)
        assert single < cascade < cascade_api < baseline


def test_criterion_7_metrics_protocol():
    with criterion(7, "fixture consensus/binarize/agreement match goldens; coin-flip precision within 0.01 of 0.187"):
        records = load_annotations(str(DATA / "annotations_fixture.csv"))
        labels = consensus(records)
        import csv as csv_mod

        with open(DATA / "consensus_golden.csv", newline="", encoding="utf-8") as handle:
            golden = list(csv_mod.DictReader(handle))
        assert len(labels) == len(golden)
        for label, expected in zip(labels, golden):
            assert (label.image_id, label.defect_id, label.status) == (
                expected["image_id"],
                expected["defect_id"],
                expected["status"],
            )
            assert binarize(label) == expected["binarized"]
        assert agreement_rate(records, "scale_mismatch") == pytest.approx(4 / 6)
        assert agreement_rate(records, "bg_objects_distortion") == pytest.approx(5 / 6)

        rng = np.random.default_rng(7171)
        truth = rng.random(100_000) < 0.187
        predicted = rng.random(100_000) < 0.5
        evals = [
            EvalRecord(str(i), CLEAN if t else DEFECT, CLEAN if p else DEFECT)
            for i, (t, p) in enumerate(zip(truth, predicted))
        ]
        rates = stage_rates_from_confusion(confusion(evals))
        assert rates.p_aqa_clean == pytest.approx(0.187, abs=0.01)


def test_criterion_8_prompt_catalog():
    with criterion(8, "13 rendered prompts byte-identical to goldens; severity parser passes its fixtures"):
        golden_files = sorted((DATA / "prompt_golden").glob("*.txt"))
        assert len(golden_files) == 13
        assert {f.stem for f in golden_files} == set(DEFAULT_TAXONOMY.detailed_ids())
        for golden in golden_files:
            bundle = render_prompt(golden.stem, "chair", "chair")
            assert bundle.as_text().encode("utf-8") == golden.read_bytes(), golden.stem
        parseable = {
            "3": 3,
            "1": 1,
            "I would rate this a 2 because of the shadow.": 2,
            "no defect": 1,
            "Some defect near the rim": 2,
            "significant defect": 3,
        }
        for text, expected in parseable.items():
            assert parse_severity(text).parsed_severity == expected, text
        for text in ("looks fine", "", "4", "3.5", "13", "score unknown"):
            assert parse_severity(text).parsed_severity is None, text


def test_criterion_9_deterministic_run_reports(tmp_path, capsys):
    with criterion(9, "same-seed simulate runs emit byte-identical run reports at any parallelism"):
        dirs = []
        for idx, workers in enumerate(("1", "4", "1")):
            out = tmp_path / f"run{idx}"
            code = cli_main(
                [
                    "simulate",
                    "--config",
                    "single_ag",
                    "--workers",
                    workers,
                    "--out-dir",
                    str(out),
                ]
            )
            assert code == 0
            dirs.append(out / "run_report.txt")
        capsys.readouterr()
        assert filecmp.cmp(dirs[0], dirs[1], shallow=False)
        assert filecmp.cmp(dirs[0], dirs[2], shallow=False)
        assert dirs[0].read_bytes() == dirs[1].read_bytes() == dirs[2].read_bytes()
