"""Command-line entry point.

Subcommands: ``simulate`` (Monte-Carlo selection tables and the analytic
example studies via presets or a YAML config), ``select`` (one CSV dataset ->
selected model as JSON), ``forecast`` (rolling-window prediction), and
``examples`` (the three analytic checks directly).

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys

import yaml

from .csvio import CsvDataset, load_csv
from .errors import ConfigError, FhtdError
from .evaluation import as_dataset
from .harness import ExperimentConfig, emit_tables, run_experiment
from .presets import PRESETS, preset_config
from .selection import FhtdConfig, fhtd_select, fhtd_select_with_intercept


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--preset", choices=sorted(PRESETS), help="named preset")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory for tables")


def _experiment_config(args) -> ExperimentConfig:
    overrides = {"seed": args.seed, "reps": args.reps, "threads": args.threads,
                 "out_dir": args.out}
    if args.preset:
        return preset_config(args.preset, **overrides)
    if not args.config:
        raise ConfigError("need --config or --preset")
    with open(args.config, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(raw)


def _run_and_emit(args) -> int:
    config = _experiment_config(args)
    report = run_experiment(config)
    out_dir = config.out_dir or "."
    paths = emit_tables(report, out_dir)
    sys.stdout.write(report.to_markdown())
    for p in paths:
        print(f"wrote {p}")
    bad = report.failed_methods
    if bad:
        for tier, method, count in bad:
            print(f"error: {method} failed {count}/{report.reps} replications "
                  f"at tier {tier}", file=sys.stderr)
        return 2
    return 0


def _cmd_select(args) -> int:
    transforms = {}
    for item in args.transforms or []:
        if "=" not in item:
            raise ConfigError(f"bad --transform {item!r}, expected col=directive")
        col, directive = item.split("=", 1)
        transforms[col.strip()] = directive.strip()
    spec = CsvDataset(y_col=args.y_col, x_cols=args.x_cols.split(",") if args.x_cols else [],
                      date_col=args.date_col, transforms=transforms)
    y, x, _names, _dates = load_csv(args.csv, spec)
    config = FhtdConfig(r=args.r, q=args.q, k_max=args.k_max, c=args.c,
                        d=args.d)
    dataset = as_dataset(y, x)
    model = fhtd_select_with_intercept(dataset, config) if args.intercept \
        else fhtd_select(dataset, config)
    payload = json.dumps(model.as_dict(), indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
        print(f"wrote {args.out}")
    else:
        print(payload)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fhtd",
        description="Model selection and forecasting for unit-root ARX series")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="Monte-Carlo selection tables")
    _add_common(p_sim)

    p_sel = sub.add_parser("select", help="select a model for one CSV dataset")
    p_sel.add_argument("--csv", required=True)
    p_sel.add_argument("--y-col", required=True)
    p_sel.add_argument("--x-cols", default="", help="comma-separated names")
    p_sel.add_argument("--date-col", default=None)
    p_sel.add_argument("--transforms", nargs="*", metavar="COL=DIRECTIVE")
    p_sel.add_argument("--q", type=int, default=None)
    p_sel.add_argument("--r", type=int, default=6)
    p_sel.add_argument("--k-max", type=int, default=40)
    p_sel.add_argument("--c", type=float, default=0.5)
    p_sel.add_argument("--d", type=float, default=0.5)
    p_sel.add_argument("--intercept", action="store_true")
    p_sel.add_argument("--out", default=None)

    p_fc = sub.add_parser("forecast", help="rolling-window one-step prediction")
    _add_common(p_fc)

    p_ex = sub.add_parser("examples", help="analytic-limit checks")
    _add_common(p_ex)
    p_ex.add_argument("--which", choices=["21", "22", "31"], required=True)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse maps usage errors to configuration
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "select":
            return _cmd_select(args)
        if args.command == "examples" and not (args.config or args.preset):
            args.preset = f"example{args.which}"
        return _run_and_emit(args)
    except (ConfigError, OSError, yaml.YAMLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FhtdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
