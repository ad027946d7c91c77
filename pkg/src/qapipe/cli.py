"""Command-line interface.

Subcommands: volumes, cost, savings, sweep, breakeven, simulate, cascade,
metrics, prompts. Results print to stdout (currency to 2 decimals,
probabilities to 4); files (CSV, SVG, run report) are written at full
precision when --out-dir is given. Exit codes: 0 success, 1 usage or
configuration error, 2 infeasible or degenerate input, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, analysis, cascade as cascade_mod, cost_model, metrics as metrics_mod, pipeline_sim, reports
from .config import DETECTOR_TABLE, RunConfig, load_detector_table, parse_config, shipped_configs
from .detectors import DEFAULT_TAXONOMY, render_prompt
from .errors import ConfigError, FormatError, IoError, QapipeError

_USAGE_ERRORS = (ConfigError, FormatError)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt_money(value: float) -> str:
    return f"{value:.2f}"


def _fmt_prob(value: float | None) -> str:
    return "0.000" if value is None else f"{value:.4f}"


def _fmt_count(value: float, mode: str) -> str:
    return str(int(value)) if mode == cost_model.CEILING else f"{value:.2f}"


def _add_common(parser: argparse.ArgumentParser, config_nargs=None) -> None:
    if config_nargs:
        parser.add_argument("--config", required=True, nargs="+", help="config path(s) or shipped config name(s)")
    else:
        parser.add_argument("--config", required=True, help="config path or shipped config name")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out-dir", default=None, help="directory for emitted files")
    parser.add_argument(
        "--format",
        default="csv,svg",
        help="comma list of file formats to emit: csv,svg,report (default csv,svg)",
    )


def _formats(args) -> set[str]:
    wanted = {item.strip() for item in args.format.split(",") if item.strip()}
    unknown = wanted - {"csv", "svg", "report"}
    if unknown:
        raise _UsageError(f"unknown --format values: {sorted(unknown)}")
    return wanted


def _out_dir(args) -> Path | None:
    if args.out_dir is None:
        return None
    path = Path(args.out_dir)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory ({exc.strerror or exc})", str(path)) from exc
    return path


def _config_echo(config: RunConfig, overrides: dict[str, object] | None = None) -> dict[str, object]:
    echo: dict[str, object] = {"label": config.label}
    echo.update(config.values)
    if overrides:
        echo.update(overrides)
    return echo


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_volumes(args) -> int:
    config = parse_config(args.config)
    rates = config.rates()
    mode = args.mode or config.mode()
    n_mqa = args.n_mqa if args.n_mqa is not None else config.n_mqa()
    plan = cost_model.volumes_from_target(n_mqa, rates, mode)
    print(f"volumes for {config.label} (mode={mode}, n_mqa target={n_mqa:g}):")
    for stage, count in (("generated", plan.n_gen), ("filter_passed", plan.n_aqa), ("accepted", plan.n_mqa)):
        print(f"  {stage:<14} {_fmt_count(count, mode)}")
    out = _out_dir(args)
    if out:
        formats = _formats(args)
        counts = {"generated": plan.n_gen, "filter_passed": plan.n_aqa, "accepted": plan.n_mqa}
        if "csv" in formats:
            reports.write_volumes_csv(out / "volumes.csv", counts)
        if "svg" in formats:
            markup = reports.svg_bar_chart(
                list(counts), list(counts.values()), f"Stage volumes ({config.label})", "images"
            )
            reports.write_svg(out / "volumes.svg", markup)
    return 0


def _breakdown_row(label: str, breakdown: cost_model.CostBreakdown) -> tuple[str, float, float, float, float]:
    return (label, breakdown.gen_cost, breakdown.aqa_cost, breakdown.mqa_cost, breakdown.total)


def _print_breakdown(label: str, breakdown: cost_model.CostBreakdown) -> None:
    share = (breakdown.mqa_cost / breakdown.total) if breakdown.total else 0.0
    print(
        f"  {label:<16} gen {_fmt_money(breakdown.gen_cost):>10}  "
        f"aqa {_fmt_money(breakdown.aqa_cost):>10}  mqa {_fmt_money(breakdown.mqa_cost):>10}  "
        f"total {_fmt_money(breakdown.total):>10}  (review share {100 * share:.1f}%)"
    )


def _cmd_cost(args) -> int:
    configs = [parse_config(name) for name in args.config]
    mode = args.mode or configs[0].mode()
    rows = []
    print(f"cost composition (mode={mode}):")
    if args.baseline:
        first = configs[0]
        n_mqa = args.n_mqa if args.n_mqa is not None else first.n_mqa()
        base = cost_model.baseline_cost(n_mqa, first.rates().p_gen_clean, first.costs(), mode)
        rows.append(_breakdown_row("baseline", base))
        _print_breakdown("baseline", base)
    for config in configs:
        n_mqa = args.n_mqa if args.n_mqa is not None else config.n_mqa()
        breakdown = cost_model.pipeline_cost(n_mqa, config.rates(), config.costs(), mode)
        rows.append(_breakdown_row(config.label, breakdown))
        _print_breakdown(config.label, breakdown)
    out = _out_dir(args)
    if out:
        formats = _formats(args)
        if "csv" in formats:
            reports.write_costs_csv(out / "costs.csv", rows)
        if "svg" in formats:
            labels = [row[0] for row in rows]
            series = [
                ("generation", [row[1] for row in rows]),
                ("filter", [row[2] for row in rows]),
                ("review", [row[3] for row in rows]),
            ]
            markup = reports.svg_stacked_bars(labels, series, "Cost composition", "currency")
            reports.write_svg(out / "costs.svg", markup)
    return 0


def _cmd_savings(args) -> int:
    config = parse_config(args.config)
    mode = args.mode or config.mode()
    n_mqa = args.n_mqa if args.n_mqa is not None else config.n_mqa()
    report = cost_model.savings(n_mqa, config.rates(), config.costs(), mode)
    print(f"savings for {config.label} (mode={mode}, n_mqa target={n_mqa:g}):")
    print(f"  baseline total: {_fmt_money(report.baseline_total)}")
    print(f"  filtered total: {_fmt_money(report.autoqa_total)}")
    print(
        f"  savings: {_fmt_money(report.delta_abs)} "
        f"({100 * report.delta_rel:.2f}% of baseline)"
    )
    reference = config.get("reference.delta_rel_pct")
    if reference is not None:
        band = config.get("reference.band_pp", 2.0)
        gap = abs(100 * report.delta_rel - reference)
        status = "within" if gap <= band else "OUTSIDE"
        print(
            f"  note: declared reference savings {reference:.2f}% differs from computed "
            f"{100 * report.delta_rel:.2f}% by {gap:.2f} pp ({status} the {band:.2f} pp "
            "reconciliation band; see README, Reported-value reconciliation)"
        )
    return 0


def _parse_range(text: str) -> tuple[float, float, int]:
    pieces = text.split(":")
    if len(pieces) != 3:
        raise _UsageError("--range must be lo:hi:steps")
    try:
        return float(pieces[0]), float(pieces[1]), int(pieces[2])
    except ValueError:
        raise _UsageError("--range must be lo:hi:steps with numeric bounds") from None


def _cmd_sweep(args) -> int:
    config = parse_config(args.config)
    n_mqa = args.n_mqa if args.n_mqa is not None else config.n_mqa()
    if args.range:
        lo, hi, steps = _parse_range(args.range)
    else:
        lo = config.require("sweep.lo")
        hi = config.require("sweep.hi")
        steps = config.require("sweep.steps")
    rates = config.rates()
    rows = analysis.sweep_precision(rates, config.costs(), n_mqa, (lo, hi), steps)
    feasible = [row for row in rows if row.feasible]
    negative = sum(1 for row in feasible if row.delta_abs < 0)
    print(
        f"sweep for {config.label}: {len(rows)} points on [{lo:g}, {hi:g}], "
        f"{len(feasible)} feasible, {negative} with negative savings"
    )
    if feasible:
        last = feasible[-1]
        print(
            f"  at precision {_fmt_prob(last.p_aqa_clean)}: savings {_fmt_money(last.delta_abs)} "
            f"({100 * last.delta_rel:.2f}% of baseline)"
        )
    out = _out_dir(args)
    if out:
        formats = _formats(args)
        if "csv" in formats:
            reports.write_sweep_csv(out / "sweep.csv", rows)
        if "svg" in formats:
            points = [(row.p_aqa_clean, row.delta_rel) for row in feasible]
            markup = reports.svg_line_chart(
                points,
                f"Savings vs filter precision ({config.label})",
                "filter clean precision",
                "relative savings",
            )
            reports.write_svg(out / "sweep.svg", markup)
    return 0


def _cmd_breakeven(args) -> int:
    config = parse_config(args.config)
    n_mqa = args.n_mqa if args.n_mqa is not None else config.n_mqa()
    p_star = analysis.break_even_precision(config.rates(), config.costs(), n_mqa)
    print(f"break-even precision for {config.label}: {p_star:.4f}")
    return 0


def _sim_config(config: RunConfig, seed_override: int | None) -> pipeline_sim.SimConfig:
    stop_kind = config.get("sim.stop")
    if stop_kind is None:
        raise ConfigError(f"{config.path}: simulate needs sim.stop and sim.n")
    stop = pipeline_sim.StopRule(stop_kind, config.require("sim.n"))
    seed = seed_override if seed_override is not None else config.seed()
    return pipeline_sim.SimConfig(
        p_gen_clean=config.rates().p_gen_clean,
        classifier=pipeline_sim.to_conditional(config.rates()),
        costs=config.costs(),
        stop_rule=stop,
        seed=seed,
        trials=config.get("sim.trials", 3),
        gen_cap=config.get("sim.gen_cap", pipeline_sim.DEFAULT_GEN_CAP),
        batch=config.get("sim.batch", pipeline_sim.DEFAULT_BATCH),
    )


def _trial_section(result: pipeline_sim.TrialResult) -> dict[str, object]:
    return {
        "n_gen": result.n_gen,
        "n_aqa": result.n_aqa,
        "n_mqa": result.n_mqa,
        "tp": result.tp,
        "fp": result.fp,
        "tn": result.tn,
        "fn": result.fn,
        "y_aqa_emp": result.y_aqa_emp,
        "p_aqa_clean_emp": "" if result.p_aqa_clean_emp is None else result.p_aqa_clean_emp,
        "gen_cost": result.costs.gen_cost,
        "aqa_cost": result.costs.aqa_cost,
        "mqa_cost": result.costs.mqa_cost,
        "total_cost": result.costs.total,
    }


def _aggregate_section(aggregate: pipeline_sim.SimAggregate) -> dict[str, object]:
    entries: dict[str, object] = {}
    for name in (
        "n_gen",
        "n_aqa",
        "n_mqa",
        "y_aqa_emp",
        "p_aqa_clean_emp",
        "gen_cost",
        "aqa_cost",
        "mqa_cost",
        "total_cost",
    ):
        value = getattr(aggregate, name)
        entries[name] = "" if value is None else value
    return entries


def _cmd_simulate(args) -> int:
    config = parse_config(args.config)
    sim_config = _sim_config(config, args.seed)
    report = pipeline_sim.simulate(sim_config, workers=args.workers)
    mean = report.mean
    print(
        f"simulate {config.label}: {sim_config.trials} trials, seed {sim_config.seed}, "
        f"backend {report.backend}"
    )
    print(
        f"  mean volumes: generated {mean.n_gen:.1f}, passed {mean.n_aqa:.1f}, "
        f"accepted {mean.n_mqa:.1f}"
    )
    print(
        f"  mean empirical rates: yield {_fmt_prob(mean.y_aqa_emp)}, "
        f"clean precision {_fmt_prob(mean.p_aqa_clean_emp)}"
    )
    print(f"  mean total cost: {_fmt_money(mean.total_cost)}")
    out = _out_dir(args)
    if out:
        sections: list[tuple[str, dict[str, object]]] = [
            (f"trial {result.trial}", _trial_section(result)) for result in report.trials
        ]
        sections.append(("aggregate mean", _aggregate_section(report.mean)))
        sections.append(("aggregate std", _aggregate_section(report.std)))
        echo = _config_echo(config, {"seed": sim_config.seed, "backend": report.backend})
        reports.write_run_report(out / "run_report.txt", "simulate", echo, sections)
    return 0


def _cmd_cascade(args) -> int:
    defects = tuple(args.defects.split(",")) if args.defects else None
    detectors = load_detector_table(args.table, args.model, defects)
    spec = cascade_mod.CascadeSpec(tuple(detectors))
    mix = cascade_mod.DefectMix(spec.defect_ids, marginals=tuple(d.prevalence for d in detectors))
    p_gen_clean = mix.clean_probability()
    print(f"cascade of {len(detectors)} detectors (model={args.model}):")
    print(f"  {'defect':<26} {'pass_yield':>10} {'flag_prec':>10} {'prevalence':>10} {'flag|present':>13} {'flag|absent':>12}")
    for detector in detectors:
        flag_present, flag_absent = cascade_mod.detector_conditionals(detector)
        print(
            f"  {detector.defect_id:<26} {detector.pass_yield:>10.4f} "
            f"{detector.flag_precision:>10.4f} {detector.prevalence:>10.4f} "
            f"{flag_present:>13.4f} {flag_absent:>12.4f}"
        )
    if args.method == "enumerate":
        rates = cascade_mod.effective_rates_enumerate(spec, mix, p_gen_clean)
    else:
        rates = cascade_mod.effective_rates_independent(spec, mix, p_gen_clean)
    print(
        f"  effective rates ({args.method}): p_gen_clean {_fmt_prob(rates.p_gen_clean)}, "
        f"y_aqa {_fmt_prob(rates.y_aqa)}, p_aqa_clean {_fmt_prob(rates.p_aqa_clean)}"
    )
    return 0


def _cmd_metrics(args) -> int:
    if (args.annotations is None) == (args.eval is None):
        raise _UsageError("metrics needs exactly one of --annotations or --eval")
    if args.annotations:
        records = metrics_mod.load_annotations(args.annotations)
        labels = metrics_mod.consensus(records)
        defect_ids = sorted({label.defect_id for label in labels})
        print(f"annotations: {len(records)} records, {len(labels)} (image, defect) pairs")
        for defect_id in defect_ids:
            rate = metrics_mod.agreement_rate(records, defect_id)
            outcomes = [metrics_mod.binarize(label) for label in labels if label.defect_id == defect_id]
            print(
                f"  {defect_id:<26} agreement {_fmt_prob(rate)}  "
                f"clean {outcomes.count(metrics_mod.CLEAN)}  "
                f"defect {outcomes.count(metrics_mod.DEFECT)}  "
                f"discarded {outcomes.count(metrics_mod.DISCARDED)}"
            )
        image_level = metrics_mod.image_labels(labels)
        counts = {status: 0 for status in (metrics_mod.CLEAN, metrics_mod.DEFECT, metrics_mod.DISCARDED)}
        for status in image_level.values():
            counts[status] += 1
        print(
            f"  image-level: clean {counts['clean']}, defect {counts['defect']}, "
            f"discarded {counts['discarded']}"
        )
    else:
        stats = metrics_mod.confusion(metrics_mod.load_evals(args.eval))
        print(f"confusion over {stats.n} records (clean is the positive class):")
        print(f"  tp {stats.tp}  fp {stats.fp}  tn {stats.tn}  fn {stats.fn}")
        print(
            f"  clean:  yield {_fmt_prob(stats.yield_clean)}  precision {_fmt_prob(stats.precision_clean)}  "
            f"recall {_fmt_prob(stats.recall_clean)}"
        )
        print(
            f"  defect: yield {_fmt_prob(stats.yield_defect)}  precision {_fmt_prob(stats.precision_defect)}  "
            f"recall {_fmt_prob(stats.recall_defect)}"
        )
        if stats.predicted_clean:
            rates = metrics_mod.stage_rates_from_confusion(stats)
            print(
                f"  stage rates: p_gen_clean {_fmt_prob(rates.p_gen_clean)}, "
                f"y_aqa {_fmt_prob(rates.y_aqa)}, p_aqa_clean {_fmt_prob(rates.p_aqa_clean)}"
            )
        else:
            print("  stage rates: not derivable (nothing predicted clean)")
    return 0


def _cmd_prompts(args) -> int:
    taxonomy = DEFAULT_TAXONOMY
    if args.defect:
        detailed_ids = [args.defect]
    else:
        detailed_ids = list(taxonomy.detailed_ids(include_supplementary=args.include_supplementary))
    out = _out_dir(args)
    for detailed_id in detailed_ids:
        bundle = render_prompt(detailed_id, args.object_class, args.product_type, taxonomy)
        if out:
            path = out / f"{detailed_id}.txt"
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(bundle.as_text())
            print(f"wrote {path}")
        else:
            print(f"--- {detailed_id}")
            print(bundle.question_text)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="qapipe", description=__doc__)
    parser.add_argument("--version", action="version", version=f"qapipe {__version__}")
    sub = parser.add_subparsers(dest="command")

    volumes = sub.add_parser("volumes", help="stage volumes for an acceptance target")
    _add_common(volumes)
    volumes.add_argument("--n-mqa", type=float, default=None)
    volumes.add_argument("--mode", choices=(cost_model.EXPECTATION, cost_model.CEILING), default=None)
    volumes.set_defaults(func=_cmd_volumes)

    cost = sub.add_parser("cost", help="cost breakdown for one or more configs")
    _add_common(cost, config_nargs="+")
    cost.add_argument("--n-mqa", type=float, default=None)
    cost.add_argument("--mode", choices=(cost_model.EXPECTATION, cost_model.CEILING), default=None)
    cost.add_argument("--baseline", action="store_true", help="include the no-filter baseline row")
    cost.set_defaults(func=_cmd_cost)

    savings_cmd = sub.add_parser("savings", help="baseline vs filtered savings")
    _add_common(savings_cmd)
    savings_cmd.add_argument("--n-mqa", type=float, default=None)
    savings_cmd.add_argument("--mode", choices=(cost_model.EXPECTATION, cost_model.CEILING), default=None)
    savings_cmd.set_defaults(func=_cmd_savings)

    sweep = sub.add_parser("sweep", help="savings over a precision grid")
    _add_common(sweep)
    sweep.add_argument("--n-mqa", type=float, default=None)
    sweep.add_argument("--range", default=None, help="lo:hi:steps (overrides config sweep.*)")
    sweep.set_defaults(func=_cmd_sweep)

    breakeven = sub.add_parser("breakeven", help="precision where savings cross zero")
    _add_common(breakeven)
    breakeven.add_argument("--n-mqa", type=float, default=None)
    breakeven.set_defaults(func=_cmd_breakeven)

    simulate = sub.add_parser("simulate", help="Monte Carlo validation run")
    _add_common(simulate)
    simulate.add_argument("--workers", type=int, default=1, help="trial scheduling parallelism")
    simulate.set_defaults(func=_cmd_simulate)

    cascade = sub.add_parser("cascade", help="compose per-defect detectors")
    cascade.add_argument("--table", default=str(DETECTOR_TABLE), help="detector table CSV")
    cascade.add_argument("--model", default="ag", help="detector model column (ag, np, random)")
    cascade.add_argument("--defects", default=None, help="comma list restricting/ordering defects")
    cascade.add_argument("--method", choices=("closed_form", "enumerate"), default="closed_form")
    cascade.set_defaults(func=_cmd_cascade)

    metrics = sub.add_parser("metrics", help="annotation consensus or confusion stats")
    metrics.add_argument("--annotations", default=None, help="annotation CSV path")
    metrics.add_argument("--eval", default=None, help="evaluation CSV path")
    metrics.set_defaults(func=_cmd_metrics)

    prompts = sub.add_parser("prompts", help="render the defect prompt catalog")
    prompts.add_argument("--object-class", required=True)
    prompts.add_argument("--product-type", required=True)
    prompts.add_argument("--defect", default=None, help="render one detailed defect only")
    prompts.add_argument("--include-supplementary", action="store_true")
    prompts.add_argument("--out-dir", default=None)
    prompts.set_defaults(func=_cmd_prompts)

    configs = sub.add_parser("configs", help="list shipped example configs")
    configs.set_defaults(func=lambda args: print("\n".join(p.stem for p in shipped_configs())) or 0)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args) or 0
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except IoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except QapipeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
