"""Config parsing: schema enforcement, rates sources, and shipped configs."""

import pytest

from qapipe.config import (
    DETECTOR_TABLE,
    find_config,
    load_detector_table,
    parse_config,
    shipped_configs,
)
from qapipe.cost_model import savings, volumes_from_target
from qapipe.errors import ConfigError, IoError


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


MINIMAL = """
rates.p_gen_clean = 0.187
rates.y_aqa = 0.118
rates.p_aqa_clean = 0.4
costs.c_gen = 0.004
costs.c_aqa = 0
costs.c_mqa = 0.5
n_mqa = 100
"""


class TestParsing:
    def test_minimal(self, tmp_path):
        config = parse_config(write(tmp_path, MINIMAL))
        rates = config.rates()
        assert rates.y_aqa == 0.118
        assert config.costs().c_mqa == 0.5
        assert config.n_mqa() == 100
        assert config.mode() == "expectation"
        assert config.label == "run"

    def test_comments_and_blanks(self, tmp_path):
        config = parse_config(write(tmp_path, "# top\n\n" + MINIMAL + "\nseed = 9 # trailing\n"))
        assert config.seed() == 9

    def test_unknown_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config(write(tmp_path, MINIMAL + "typo_key = 5\n"))

    def test_duplicate_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config(write(tmp_path, MINIMAL + "n_mqa = 7\n"))

    def test_bad_number_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="number"):
            parse_config(write(tmp_path, MINIMAL.replace("0.187", "lots")))

    def test_bad_line_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config(write(tmp_path, MINIMAL + "just a line\n"))

    def test_missing_file_is_io_error(self):
        with pytest.raises(IoError):
            find_config("no_such_config_anywhere")

    def test_missing_required_key(self, tmp_path):
        config = parse_config(write(tmp_path, MINIMAL.replace("n_mqa = 100", "")))
        with pytest.raises(ConfigError, match="n_mqa"):
            config.n_mqa()


class TestRatesSources:
    def test_two_sources_rejected(self, tmp_path):
        text = MINIMAL + "rates.eval_csv = evals.csv\n"
        with pytest.raises(ConfigError, match="exactly one rates source"):
            parse_config(write(tmp_path, text))

    def test_no_source_rejected(self, tmp_path):
        text = "costs.c_gen = 0\ncosts.c_aqa = 0\ncosts.c_mqa = 1\nn_mqa = 10\n"
        with pytest.raises(ConfigError, match="exactly one rates source"):
            parse_config(write(tmp_path, text))

    def test_partial_direct_rates_rejected(self, tmp_path):
        text = MINIMAL.replace("rates.p_aqa_clean = 0.4\n", "")
        with pytest.raises(ConfigError, match="rates.p_aqa_clean"):
            parse_config(write(tmp_path, text)).rates()

    def test_eval_csv_source(self, tmp_path):
        evals = tmp_path / "evals.csv"
        lines = ["image_id,truth,predicted"]
        lines += [f"c{i},clean,clean" for i in range(18)]
        lines += [f"f{i},defect,clean" for i in range(27)]
        lines += [f"m{i},clean,defect" for i in range(53)]
        lines += [f"t{i},defect,defect" for i in range(282)]
        evals.write_text("\n".join(lines) + "\n")
        text = (
            "rates.eval_csv = evals.csv\n"
            "costs.c_gen = 0.004\ncosts.c_aqa = 0\ncosts.c_mqa = 0.5\nn_mqa = 100\n"
        )
        config = parse_config(write(tmp_path, text))
        rates = config.rates()
        assert rates.y_aqa == pytest.approx(45 / 380)
        assert rates.p_aqa_clean == pytest.approx(0.4)

    def test_detector_source(self, tmp_path):
        text = (
            f"rates.detectors = {DETECTOR_TABLE}\n"
            "rates.model = ag\n"
            "rates.defects = scale_mismatch,bg_objects_distortion\n"
            "costs.c_gen = 0.004\ncosts.c_aqa = 0\ncosts.c_mqa = 0.5\nn_mqa = 100\n"
        )
        config = parse_config(write(tmp_path, text))
        rates = config.rates()
        assert rates.p_gen_clean == pytest.approx(0.97 * 0.68)
        assert 0 < rates.overall_yield <= rates.p_gen_clean

    def test_detector_methods_agree(self, tmp_path):
        base = (
            f"rates.detectors = {DETECTOR_TABLE}\n"
            "rates.model = ag\n"
            "costs.c_gen = 0.004\ncosts.c_aqa = 0\ncosts.c_mqa = 0.5\nn_mqa = 100\n"
        )
        closed = parse_config(write(tmp_path, base, "a.cfg")).rates()
        exact = parse_config(
            write(tmp_path, base + "rates.method = enumerate\n", "b.cfg")
        ).rates()
        assert closed.y_aqa == pytest.approx(exact.y_aqa, abs=1e-12)
        assert closed.p_aqa_clean == pytest.approx(exact.p_aqa_clean, abs=1e-12)


class TestDetectorTable:
    def test_model_column_selection(self):
        ag = load_detector_table(DETECTOR_TABLE, "ag")
        random = load_detector_table(DETECTOR_TABLE, "random")
        assert len(ag) == len(random) == 6
        assert {d.defect_id for d in ag} == {d.defect_id for d in random}

    def test_defect_ordering_respected(self):
        detectors = load_detector_table(
            DETECTOR_TABLE, "np", ("bg_objects_distortion", "scale_mismatch")
        )
        assert [d.defect_id for d in detectors] == ["bg_objects_distortion", "scale_mismatch"]

    def test_unknown_defect_rejected(self):
        with pytest.raises(ConfigError, match="unknown defects"):
            load_detector_table(DETECTOR_TABLE, "ag", ("not_a_defect",))

    def test_unknown_model_rejected(self):
        with pytest.raises(ConfigError, match="model"):
            load_detector_table(DETECTOR_TABLE, "other")


class TestShippedConfigs:
    def test_six_configs_ship(self):
        names = {path.stem for path in shipped_configs()}
        assert names == {
            "single_ag",
            "cascade_ag",
            "cascade_ag_np",
            "oracle",
            "random_half",
            "detector_cascade_ag",
        }

    def test_every_shipped_config_runs_end_to_end(self):
        for path in shipped_configs():
            config = parse_config(str(path))
            rates = config.rates()
            report = savings(config.n_mqa(), rates, config.costs(), config.mode())
            plan = volumes_from_target(config.n_mqa(), rates, config.mode())
            assert plan.n_gen >= plan.n_aqa >= plan.n_mqa > 0
            assert report.baseline_total > 0

    def test_find_config_by_name(self):
        assert find_config("single_ag").name == "single_ag.cfg"
