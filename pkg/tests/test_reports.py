"""Report emission: CSV round trips, SVG well-formedness, run-report bytes."""

import xml.etree.ElementTree as ET

import pytest

from qapipe.analysis import SweepRow, sweep_precision
from qapipe.cost_model import StageRates, UnitCosts
from qapipe.errors import IoError
from qapipe.reports import (
    COSTS_HEADER,
    SWEEP_HEADER,
    VOLUMES_HEADER,
    read_sweep_csv,
    svg_bar_chart,
    svg_line_chart,
    svg_stacked_bars,
    write_costs_csv,
    write_run_report,
    write_sweep_csv,
    write_svg,
    write_volumes_csv,
)

SINGLE_AG = StageRates(0.187, 0.118, 0.400)
COSTS = UnitCosts(0.004, 0.0, 0.5)


class TestSweepCsv:
    def test_round_trip_bit_identical(self, tmp_path):
        rows = sweep_precision(SINGLE_AG, COSTS, 100, (0.05, 1.0), 96)
        path = tmp_path / "sweep.csv"
        write_sweep_csv(path, rows)
        assert read_sweep_csv(path) == rows

    def test_round_trip_with_infeasible_rows(self, tmp_path):
        rows = sweep_precision(StageRates(0.187, 0.5, 0.184), COSTS, 100, (0.05, 1.0), 25)
        path = tmp_path / "sweep.csv"
        write_sweep_csv(path, rows)
        back = read_sweep_csv(path)
        assert back == rows
        assert any(not row.feasible for row in back)

    def test_empty_sweep_is_header_only(self, tmp_path):
        path = tmp_path / "sweep.csv"
        write_sweep_csv(path, [])
        assert path.read_text().splitlines() == [",".join(SWEEP_HEADER)]
        assert read_sweep_csv(path) == []

    def test_header_documented(self):
        assert SWEEP_HEADER == ["p_aqa_clean", "delta_abs", "delta_rel", "feasible"]


class TestOtherCsv:
    def test_volumes_header(self, tmp_path):
        path = tmp_path / "volumes.csv"
        write_volumes_csv(path, {"generated": 2118.64, "filter_passed": 250.0, "accepted": 100.0})
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(VOLUMES_HEADER)
        assert len(lines) == 4

    def test_costs_header(self, tmp_path):
        path = tmp_path / "costs.csv"
        write_costs_csv(path, [("single_ag", 8.47, 0.0, 125.0, 133.47)])
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(COSTS_HEADER)
        assert lines[1].startswith("single_ag,")

    def test_unwritable_path_raises_io_error(self, tmp_path):
        with pytest.raises(IoError) as excinfo:
            write_volumes_csv(tmp_path / "missing_dir" / "x.csv", {"generated": 1.0})
        assert "missing_dir" in excinfo.value.path


class TestSvg:
    def _assert_well_formed(self, markup):
        root = ET.fromstring(markup)
        assert root.tag.endswith("svg")
        return markup

    def test_bar_chart(self):
        markup = self._assert_well_formed(
            svg_bar_chart(["generated", "passed", "accepted"], [2118.6, 250.0, 100.0], "t", "images")
        )
        assert markup.count("<rect") >= 4  # background + three bars
        assert "2118.6" in markup

    def test_stacked_bars(self):
        series = [
            ("generation", [8.47, 2.14]),
            ("filter", [0.0, 0.0]),
            ("review", [125.0, 267.38]),
        ]
        markup = self._assert_well_formed(
            svg_stacked_bars(["single_ag", "baseline"], series, "t", "currency")
        )
        assert "generation" in markup and "review" in markup

    def test_line_chart_with_zero_crossing(self):
        points = [(0.05, -2.0), (0.2, 0.01), (1.0, 0.8)]
        markup = self._assert_well_formed(svg_line_chart(points, "t", "precision", "savings"))
        assert "<polyline" in markup

    def test_empty_line_chart(self):
        self._assert_well_formed(svg_line_chart([], "t", "x", "y"))

    def test_write_svg(self, tmp_path):
        path = tmp_path / "chart.svg"
        write_svg(path, svg_bar_chart(["a"], [1.0], "t", "y"))
        assert path.read_text().startswith("<svg")


class TestRunReport:
    def test_byte_identical_for_same_inputs(self, tmp_path):
        config = {"seed": 42, "label": "x", "sim.n": 1000}
        sections = [("trial 0", {"n_gen": 1000, "tp": 47, "y": 0.047})]
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        write_run_report(a, "simulate", config, sections)
        write_run_report(b, "simulate", config, sections)
        assert a.read_bytes() == b.read_bytes()

    def test_contains_version_and_sorted_config(self, tmp_path):
        from qapipe import __version__

        path = tmp_path / "report.txt"
        write_run_report(path, "simulate", {"b_key": 2, "a_key": 1}, [])
        text = path.read_text()
        assert f"tool_version = {__version__}" in text
        assert text.index("a_key = 1") < text.index("b_key = 2")
        assert "command = simulate" in text

    def test_floats_keep_full_precision(self, tmp_path):
        path = tmp_path / "report.txt"
        write_run_report(path, "simulate", {}, [("s", {"value": 0.1 + 0.2})])
        assert repr(0.1 + 0.2) in path.read_text()
