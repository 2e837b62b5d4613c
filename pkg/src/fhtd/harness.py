"""Config-driven experiment runner: Monte-Carlo selection tables, the
analytic-limit studies, and rolling-window forecasts on CSV data.

Replication r draws its dataset from ``seed ^ r``, and tallies are folded in
replication order, so results are byte-identical for any worker count.
"""
from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field, fields

from . import evaluation
from .baselines import LassoConfig, lasso_select, oga3_select
from .csvio import CsvDataset, load_csv
from .dgp import TIERS, builtin_spec, simulate
from .errors import ConfigError
from .evaluation import (FORECAST_METHODS, ForecastReport, SelectionTally,
                         rolling_forecast, tally)
from .selection import FhtdConfig, fhtd_select

TABLE_KINDS = {"table1": "ex41", "table2": "ex42", "table_s5": "ex_s5"}
METHOD_ORDER = ("lasso", "alasso", "oga3", "ar_alasso", "ar_oga3", "fhtd")
METHOD_LABELS = {"lasso": "LASSO", "alasso": "ALasso", "oga3": "OGA-3",
                 "ar_alasso": "AR-ALasso", "ar_oga3": "AR-OGA-3",
                 "fhtd": "FHTD"}


@dataclass
class ExperimentConfig:
    kind: str
    reps: int = 1000
    seed: int = 20230915
    tiers: list | None = None
    methods: tuple[str, ...] = METHOD_ORDER
    threads: int = 1
    out_dir: str | None = None
    fhtd: dict = field(default_factory=dict)     # FhtdConfig overrides
    lasso: dict = field(default_factory=dict)    # LassoConfig overrides
    params: dict = field(default_factory=dict)   # kind-specific knobs
    csv: dict = field(default_factory=dict)      # forecast input description

    def __post_init__(self):
        known = set(TABLE_KINDS) | {"example21", "example22", "example31",
                                    "forecast"}
        if self.kind not in known:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.reps < 1:
            raise ConfigError("replications must be >= 1")
        for m in self.methods:
            if m not in METHOD_ORDER:
                raise ConfigError(f"unknown method {m!r}")
        if self.kind in TABLE_KINDS:
            example = TABLE_KINDS[self.kind]
            if self.tiers is None:
                self.tiers = [list(t) for t in TIERS[example]]
            self.tiers = [tuple(t) for t in self.tiers]
            for t in self.tiers:
                if t not in TIERS[example]:
                    raise ConfigError(f"{example} has no tier {t}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "methods" in d:
            d = dict(d, methods=tuple(d["methods"]))
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def _fhtd_config(tier, overrides: dict) -> FhtdConfig:
    _n, _p, r = tier
    kwargs = {"r": r}
    kwargs.update(overrides)
    return FhtdConfig(**kwargs)


def _lasso_config(overrides: dict) -> LassoConfig:
    # wide-grid fits beyond the identification boundary are useless for BIC
    # and dominate runtime, so the table runs cap the active-set size
    kwargs = {"df_max": 150}
    kwargs.update(overrides)
    return LassoConfig(**kwargs)


def run_method(method: str, dataset, config: FhtdConfig,
               lasso: LassoConfig):
    if method == "fhtd":
        return fhtd_select(dataset, config)
    if method == "oga3":
        return oga3_select(dataset, config, force_ar=False)
    if method == "ar_oga3":
        return oga3_select(dataset, config, force_ar=True)
    return lasso_select(dataset, config, variant=method, lasso=lasso)


def _table_replication(args):
    example, tier, methods, seed, fhtd_over, lasso_over = args
    spec = builtin_spec(example, tier)
    dataset = simulate(spec, seed)
    config = _fhtd_config(tier, fhtd_over)
    lasso = _lasso_config(lasso_over)
    out = {}
    for method in methods:
        try:
            model = run_method(method, dataset, config, lasso)
            out[method] = (set(model.q_hat), set(model.j_hat))
        except Exception as exc:  # per-replication isolation
            out[method] = ("error", f"{type(exc).__name__}: {exc}")
    return set(dataset.true_q), set(dataset.true_j), out


@dataclass
class ExperimentReport:
    kind: str
    reps: int
    seed: int
    methods: tuple[str, ...] = ()
    tallies: dict = field(default_factory=dict)    # tier -> method -> tally
    failures: dict = field(default_factory=dict)   # tier -> method -> count
    numbers: dict = field(default_factory=dict)    # scalar results by name
    curves: dict = field(default_factory=dict)     # name -> array pairs
    forecast: ForecastReport | None = None

    @property
    def failed_methods(self) -> list[tuple]:
        """Methods whose failure share exceeds 1% in some tier."""
        bad = []
        for tier, per_method in self.failures.items():
            for method, count in per_method.items():
                if count > 0.01 * self.reps:
                    bad.append((tier, method, count))
        return bad

    # -- rendering ----------------------------------------------------------
    def to_markdown(self) -> str:
        lines = [f"# {self.kind} (reps={self.reps}, seed={self.seed})", ""]
        if self.tallies:
            for tier in sorted(self.tallies):
                per = self.tallies[tier]
                methods = [m for m in METHOD_ORDER if m in per]
                lines.append(f"tier (n, p, r) = {tier}")
                lines.append("")
                lines.append("| metric | " +
                             " | ".join(METHOD_LABELS[m] for m in methods) + " |")
                lines.append("|---" * (len(methods) + 1) + "|")
                for metric in ("E", "SS", "TP", "FP"):
                    row = [metric]
                    for m in methods:
                        t = per[m]
                        if metric == "E":
                            row.append(str(t.e_count))
                        elif metric == "SS":
                            row.append(str(t.ss_count))
                        elif metric == "TP":
                            row.append(f"{t.tp_avg:.2f}")
                        else:
                            row.append(f"{t.fp_avg:.2f}")
                    lines.append("| " + " | ".join(row) + " |")
                fail = self.failures.get(tier, {})
                if any(fail.values()):
                    lines.append("")
                    lines.append("failures: " + ", ".join(
                        f"{METHOD_LABELS[m]}={c}" for m, c in fail.items() if c))
                lines.append("")
        for name, value in self.numbers.items():
            lines.append(f"- {name}: {value:.6g}" if isinstance(value, float)
                         else f"- {name}: {value}")
        if self.forecast is not None:
            fr = self.forecast
            lines.append("")
            lines.append("| metric | " + " | ".join(
                METHOD_LABELS.get(m, m) for m in fr.methods) + " |")
            lines.append("|---" * (len(fr.methods) + 1) + "|")
            lines.append("| RMSE | " + " | ".join(
                f"{fr.rmse[m]:.4f}" for m in fr.methods) + " |")
            lines.append("| MAE | " + " | ".join(
                f"{fr.mae[m]:.4f}" for m in fr.methods) + " |")
            lines.append("| DM p vs " + METHOD_LABELS.get(fr.reference, "ref") +
                         " | " + " | ".join(
                f"{fr.dm_vs_reference[m].p_value:.2f}"
                if m in fr.dm_vs_reference else "-"
                for m in fr.methods) + " |")
        return "\n".join(lines) + "\n"

    def to_csv_rows(self) -> list[list[str]]:
        rows = [["kind", "tier", "method", "metric", "value"]]
        for tier in sorted(self.tallies):
            per = self.tallies[tier]
            tier_txt = "x".join(str(v) for v in tier)
            for m in METHOD_ORDER:
                if m not in per:
                    continue
                t = per[m]
                rows.append([self.kind, tier_txt, m, "E", str(t.e_count)])
                rows.append([self.kind, tier_txt, m, "SS", str(t.ss_count)])
                rows.append([self.kind, tier_txt, m, "TP", f"{t.tp_avg:.2f}"])
                rows.append([self.kind, tier_txt, m, "FP", f"{t.fp_avg:.2f}"])
                fail = self.failures[tier].get(m, 0)
                if fail:
                    rows.append([self.kind, tier_txt, m, "failures", str(fail)])
        for name, value in self.numbers.items():
            rows.append([self.kind, "-", "-", name,
                         f"{value:.6g}" if isinstance(value, float) else str(value)])
        if self.forecast is not None:
            fr = self.forecast
            for m in fr.methods:
                rows.append([self.kind, "-", m, "RMSE", f"{fr.rmse[m]:.6f}"])
                rows.append([self.kind, "-", m, "MAE", f"{fr.mae[m]:.6f}"])
                if m in fr.dm_vs_reference:
                    rows.append([self.kind, "-", m, "DM_p",
                                 f"{fr.dm_vs_reference[m].p_value:.4f}"])
        return rows


def _run_table(config: ExperimentConfig) -> ExperimentReport:
    example = TABLE_KINDS[config.kind]
    report = ExperimentReport(kind=config.kind, reps=config.reps,
                              seed=config.seed, methods=config.methods)
    for tier in config.tiers:
        tallies = {m: SelectionTally() for m in config.methods}
        failures = {m: 0 for m in config.methods}
        jobs = [(example, tier, config.methods, config.seed ^ r,
                 config.fhtd, config.lasso) for r in range(config.reps)]
        if config.threads > 1:
            with concurrent.futures.ProcessPoolExecutor(config.threads) as pool:
                results = list(pool.map(_table_replication, jobs,
                                        chunksize=max(1, config.reps // (4 * config.threads))))
        else:
            results = [_table_replication(j) for j in jobs]
        for true_q, true_j, per_method in results:
            for m in config.methods:
                outcome = per_method[m]
                if outcome[0] == "error":
                    failures[m] += 1
                    continue
                tallies[m] = tally(true_q, true_j, outcome[0], outcome[1],
                                   tallies[m])
        report.tallies[tier] = tallies
        report.failures[tier] = failures
    return report


def _run_examples(config: ExperimentConfig) -> ExperimentReport:
    report = ExperimentReport(kind=config.kind, reps=config.reps,
                              seed=config.seed)
    p = config.params
    if config.kind == "example21":
        a = float(p.get("a", 0.3))
        res = evaluation.example21_stats(
            a, int(p.get("n", 500)), int(p.get("p", 1000)), config.reps,
            seed=config.seed, path_steps=p.get("path_steps", 40))
        report.numbers["gap_mean"] = res.gap_mean
        report.numbers["gap_limit"] = (1.0 + 2.0 * a) / (1.0 - a * a)
        report.numbers["first_pick_freq"] = res.first_pick_freq
        report.numbers["y2_missed_freq"] = res.y2_missed_freq
    elif config.kind == "example22":
        lam, freq = evaluation.example22_selection_curve(
            int(p.get("n", 2000)), config.reps, seed=config.seed,
            n_lambda=int(p.get("n_lambda", 25)))
        report.curves["lambda"] = lam
        report.curves["correct_selection_freq"] = freq
        report.numbers["max_correct_selection_freq"] = float(freq.max())
    elif config.kind == "example31":
        k = int(p.get("k", 2))
        full, single = evaluation.example31_mspe(
            k, int(p.get("n", 2000)), config.reps, seed=config.seed)
        report.numbers["scaled_excess_full"] = full
        report.numbers["scaled_excess_single"] = single
        report.numbers["ratio"] = full / single
        report.numbers["ratio_limit"] = float(k)
    return report


def _run_forecast(config: ExperimentConfig) -> ExperimentReport:
    p = config.params
    csv_cfg = dict(config.csv)
    path = csv_cfg.pop("path", None)
    if path is None:
        raise ConfigError("forecast experiments need csv.path")
    spec = CsvDataset(y_col=csv_cfg["y_col"],
                      x_cols=list(csv_cfg.get("x_cols", [])),
                      date_col=csv_cfg.get("date_col"),
                      transforms=dict(csv_cfg.get("transforms", {})))
    y, x, _names, _dates = load_csv(path, spec)
    fhtd_over = dict(config.fhtd)
    r = fhtd_over.pop("r", 6)
    fcfg = FhtdConfig(r=r, **fhtd_over)
    methods = [m for m in config.methods if m in FORECAST_METHODS]
    fr = rolling_forecast(
        y, x, train_window=int(p.get("train_window", 160)), config=fcfg,
        methods=methods, lasso=_lasso_config(config.lasso),
        intercept=bool(p.get("intercept", True)),
        tune=bool(p.get("tune", True)),
        freeze_tuning=bool(p.get("freeze_tuning", False)),
        n_windows=p.get("n_windows"))
    report = ExperimentReport(kind=config.kind, reps=len(fr.records),
                              seed=config.seed, methods=tuple(methods))
    report.forecast = fr
    for m in methods:
        report.numbers[f"rmse_{m}"] = fr.rmse[m]
        report.numbers[f"mae_{m}"] = fr.mae[m]
    return report


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    if config.kind in TABLE_KINDS:
        return _run_table(config)
    if config.kind == "forecast":
        return _run_forecast(config)
    return _run_examples(config)


def emit_tables(report: ExperimentReport, out_dir: str,
                formats=("md", "csv")) -> list[str]:
    """Write the report in the requested formats; returns the file paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "md" in formats:
        path = os.path.join(out_dir, f"{report.kind}.md")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report.to_markdown())
        written.append(path)
    if "csv" in formats:
        import csv as _csv

        path = os.path.join(out_dir, f"{report.kind}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            _csv.writer(fh).writerows(report.to_csv_rows())
        written.append(path)
        if report.curves:
            path = os.path.join(out_dir, f"{report.kind}_curves.csv")
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = _csv.writer(fh)
                names = list(report.curves)
                writer.writerow(names)
                for row in zip(*(report.curves[n] for n in names)):
                    writer.writerow([f"{v:.8g}" for v in row])
            written.append(path)
    return written
