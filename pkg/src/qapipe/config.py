"""Flat key=value run configuration with a strict schema.

Config files are plain text: one ``key = value`` per line, ``#`` comments,
blank lines ignored. Unknown keys are errors so that a typo cannot silently
change a run. Exactly one rates source must be configured: direct rates,
an evaluation CSV to derive them from, or a detector table to compose them
from. The full schema is documented in the README and in KEY_SPECS below.

Named configs shipped with the package (see qapipe/data/configs) can be
referenced by bare name wherever a config path is accepted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .cascade import CascadeSpec, DefectMix, DetectorProfile, effective_rates_enumerate, effective_rates_independent
from .cost_model import EXPECTATION, StageRates, UnitCosts
from .errors import ConfigError, FormatError, IoError
from .metrics import confusion, load_evals, stage_rates_from_confusion
from .pipeline_sim import DEFAULT_BATCH, DEFAULT_GEN_CAP, FIXED_GENERATED, TARGET_ACCEPTED

DATA_DIR = Path(__file__).resolve().parent / "data"
CONFIG_DIR = DATA_DIR / "configs"
DETECTOR_TABLE = DATA_DIR / "detector_table.csv"

DETECTOR_MODELS = ("ag", "np", "random")

_RATE_METHODS = ("closed_form", "enumerate")


def _parse_float(value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"expected a number, got {value!r}") from None


def _parse_int(value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"expected an integer, got {value!r}") from None


def _parse_choice(options: tuple[str, ...]):
    def parse(value: str) -> str:
        if value not in options:
            raise ConfigError(f"expected one of {options}, got {value!r}")
        return value

    return parse


def _parse_str(value: str) -> str:
    return value


def _parse_list(value: str) -> tuple[str, ...]:
    items = tuple(item.strip() for item in value.split(",") if item.strip())
    if not items:
        raise ConfigError("expected a comma-separated list")
    return items


KEY_SPECS = {
    "label": _parse_str,
    "rates.p_gen_clean": _parse_float,
    "rates.y_aqa": _parse_float,
    "rates.p_aqa_clean": _parse_float,
    "rates.eval_csv": _parse_str,
    "rates.detectors": _parse_str,
    "rates.model": _parse_choice(DETECTOR_MODELS),
    "rates.defects": _parse_list,
    "rates.method": _parse_choice(_RATE_METHODS),
    "costs.c_gen": _parse_float,
    "costs.c_aqa": _parse_float,
    "costs.c_mqa": _parse_float,
    "n_mqa": _parse_float,
    "mode": _parse_choice(("expectation", "ceiling")),
    "sweep.lo": _parse_float,
    "sweep.hi": _parse_float,
    "sweep.steps": _parse_int,
    "sim.stop": _parse_choice((FIXED_GENERATED, TARGET_ACCEPTED)),
    "sim.n": _parse_int,
    "sim.trials": _parse_int,
    "sim.batch": _parse_int,
    "sim.gen_cap": _parse_int,
    "seed": _parse_int,
    "reference.delta_rel_pct": _parse_float,
    "reference.band_pp": _parse_float,
}

_DIRECT_KEYS = ("rates.p_gen_clean", "rates.y_aqa", "rates.p_aqa_clean")


@dataclass
class RunConfig:
    """Parsed configuration plus the path it came from."""

    path: Path
    values: dict[str, object] = field(default_factory=dict)

    @property
    def label(self) -> str:
        return self.values.get("label", self.path.stem)

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def require(self, key: str):
        if key not in self.values:
            raise ConfigError(f"{self.path}: missing required key {key!r}")
        return self.values[key]

    def costs(self) -> UnitCosts:
        return UnitCosts(
            self.require("costs.c_gen"), self.require("costs.c_aqa"), self.require("costs.c_mqa")
        )

    def n_mqa(self) -> float:
        return self.require("n_mqa")

    def mode(self) -> str:
        return self.values.get("mode", EXPECTATION)

    def seed(self) -> int:
        return self.values.get("seed", 0)

    def rates_source(self) -> str:
        sources = []
        if any(key in self.values for key in _DIRECT_KEYS):
            sources.append("direct")
        if "rates.eval_csv" in self.values:
            sources.append("eval_csv")
        if "rates.detectors" in self.values:
            sources.append("detectors")
        if len(sources) != 1:
            raise ConfigError(
                f"{self.path}: exactly one rates source required "
                f"(direct rates, rates.eval_csv, or rates.detectors), found {sources or 'none'}"
            )
        return sources[0]

    def _resolve_path(self, value: str) -> Path:
        candidate = Path(value)
        if not candidate.is_absolute():
            candidate = self.path.parent / candidate
        return candidate

    def rates(self) -> StageRates:
        source = self.rates_source()
        if source == "direct":
            for key in _DIRECT_KEYS:
                if key not in self.values:
                    raise ConfigError(f"{self.path}: direct rates need {key}")
            return StageRates(*(self.values[key] for key in _DIRECT_KEYS))
        if source == "eval_csv":
            evals = load_evals(str(self._resolve_path(self.values["rates.eval_csv"])))
            return stage_rates_from_confusion(confusion(evals))
        table_path = self._resolve_path(self.values["rates.detectors"])
        model = self.values.get("rates.model")
        if model is None:
            raise ConfigError(f"{self.path}: rates.detectors needs rates.model")
        detectors = load_detector_table(table_path, model, self.values.get("rates.defects"))
        spec = CascadeSpec(tuple(detectors))
        mix = DefectMix(spec.defect_ids, marginals=tuple(d.prevalence for d in detectors))
        p_gen_clean = mix.clean_probability()
        method = self.values.get("rates.method", "closed_form")
        if method == "enumerate":
            return effective_rates_enumerate(spec, mix, p_gen_clean)
        return effective_rates_independent(spec, mix, p_gen_clean)


def find_config(name_or_path: str) -> Path:
    """Resolve a config argument: an existing path, or a shipped config name."""
    path = Path(name_or_path)
    if path.is_file():
        return path
    shipped = CONFIG_DIR / f"{name_or_path}.cfg"
    if shipped.is_file():
        return shipped
    raise IoError("config not found (no such file or shipped config name)", str(name_or_path))


def parse_config(name_or_path: str) -> RunConfig:
    """Parse and schema-check one config file."""
    path = find_config(name_or_path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read config ({exc})", str(path)) from exc
    values: dict[str, object] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw_line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KEY_SPECS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = KEY_SPECS[key](value)
        except ConfigError as exc:
            raise ConfigError(f"{path}:{lineno}: {key}: {exc}") from None
    config = RunConfig(path, values)
    config.rates_source()
    return config


def shipped_configs() -> list[Path]:
    return sorted(CONFIG_DIR.glob("*.cfg"))


def load_detector_table(
    path: str | Path, model: str, defects: tuple[str, ...] | None = None
) -> list[DetectorProfile]:
    """Load per-defect detector profiles for one model column of the table.

    The table is a CSV with header ``defect_id,n_img,clean_rate,model,
    pass_yield,flag_precision``; clean_rate is the fraction of that defect's
    evaluation set without the defect, so prevalence is its complement.
    ``defects`` restricts and orders the result; default is file order.
    """
    import csv

    if model not in DETECTOR_MODELS:
        raise ConfigError(f"detector model must be one of {DETECTOR_MODELS}, got {model!r}")
    expected = ["defect_id", "n_img", "clean_rate", "model", "pass_yield", "flag_precision"]
    profiles: dict[str, DetectorProfile] = {}
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header != expected:
                raise FormatError(f"{path}: header must be {','.join(expected)}")
            for row in reader:
                if not row:
                    continue
                defect_id, _n_img, clean_rate, row_model, pass_yield, flag_precision = row
                if row_model != model:
                    continue
                profiles[defect_id] = DetectorProfile(
                    defect_id,
                    float(pass_yield),
                    float(flag_precision),
                    1.0 - float(clean_rate),
                )
    except OSError as exc:
        raise IoError(f"cannot read detector table ({exc})", str(path)) from exc
    if defects is None:
        result = list(profiles.values())
    else:
        missing = [d for d in defects if d not in profiles]
        if missing:
            raise ConfigError(f"{path}: unknown defects for model {model!r}: {missing}")
        result = [profiles[d] for d in defects]
    if not result:
        raise ConfigError(f"{path}: no detector rows for model {model!r}")
    return result
