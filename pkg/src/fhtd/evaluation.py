"""Selection metrics, rolling one-step-ahead forecasting, and the analytic
limit studies used to sanity-check the greedy selectors.

The forecast loop follows the hold-out protocol: inside each training window
the first 80% fits the model, the last 20% validates the (c, d) tuning grid,
and the winning pair is refit on the whole window before predicting the next
point.  MAE is the median absolute prediction error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy.signal import lfilter
from scipy.stats import norm

from .baselines import LassoConfig, lasso_path, lasso_select, oga3_select
from .dgp import Dataset, builtin_spec, simulate
from .errors import WindowTooSmall
from .projection import LagDesign, new_fit, ols_solve
from .selection import (FhtdConfig, SelectedModel, SelectionPath, ddt_threshold,
                        fhtd_select, fhtd_select_with_intercept, forecast_next,
                        greedy_path, hdic, loo_rss, refit)

FORECAST_METHODS = ("fhtd", "oga3", "ar_oga3", "lasso", "alasso", "ar_alasso")


# ---------------------------------------------------------------------------
# Selection tallies


@dataclass(frozen=True)
class SelectionTally:
    """Counts of exact selection (E) and sure screening (SS) plus TP/FP sums."""

    reps: int = 0
    e_count: int = 0
    ss_count: int = 0
    tp_sum: float = 0.0
    fp_sum: float = 0.0

    def merge(self, other: "SelectionTally") -> "SelectionTally":
        return SelectionTally(self.reps + other.reps,
                              self.e_count + other.e_count,
                              self.ss_count + other.ss_count,
                              self.tp_sum + other.tp_sum,
                              self.fp_sum + other.fp_sum)

    @property
    def e_rate(self) -> float:
        return self.e_count / self.reps if self.reps else math.nan

    @property
    def ss_rate(self) -> float:
        return self.ss_count / self.reps if self.reps else math.nan

    @property
    def tp_avg(self) -> float:
        return self.tp_sum / self.reps if self.reps else math.nan

    @property
    def fp_avg(self) -> float:
        return self.fp_sum / self.reps if self.reps else math.nan


def tally(true_q, true_j, est_q, est_j, t: SelectionTally) -> SelectionTally:
    """Fold one replication into the tally and return the updated tally."""
    true_q, true_j = set(true_q), set(true_j)
    est_q, est_j = set(est_q), set(est_j)
    exact = est_q == true_q and est_j == true_j
    screened = true_q <= est_q and true_j <= est_j
    tp = len(est_q & true_q) + len(est_j & true_j)
    fp = len(est_q - true_q) + len(est_j - true_j)
    return SelectionTally(t.reps + 1, t.e_count + exact, t.ss_count + screened,
                          t.tp_sum + tp, t.fp_sum + fp)


# ---------------------------------------------------------------------------
# Diebold-Mariano test


class DmResult(NamedTuple):
    statistic: float
    p_value: float
    degenerate: bool = False


def dm_test(errors_a: np.ndarray, errors_b: np.ndarray,
            bartlett_lags: int = 0) -> DmResult:
    """Equal-predictive-accuracy test on absolute-error loss.

    The long-run variance defaults to the lag-0 sample variance, appropriate
    for 1-step-ahead forecasts; pass ``bartlett_lags`` for a HAC estimate.
    A degenerate (constant) loss differential yields p = 1 when its mean is
    zero and p = 0 otherwise.
    """
    a = np.asarray(errors_a, dtype=float)
    b = np.asarray(errors_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 10:
        raise ValueError("need equal-length error series with at least 10 points")
    d = np.abs(a) - np.abs(b)
    w = d.size
    dbar = float(d.mean())
    centered = d - dbar
    gamma0 = float(centered @ centered) / w
    lrv = gamma0
    for k in range(1, bartlett_lags + 1):
        gam = float(centered[k:] @ centered[:-k]) / w
        lrv += 2.0 * (1.0 - k / (bartlett_lags + 1.0)) * gam
    if lrv <= 0.0:
        return DmResult(0.0 if dbar == 0.0 else math.copysign(math.inf, dbar),
                        1.0 if dbar == 0.0 else 0.0, degenerate=True)
    stat = dbar / math.sqrt(lrv / w)
    return DmResult(stat, 2.0 * float(norm.sf(abs(stat))), degenerate=False)


# ---------------------------------------------------------------------------
# Tuned selectors for the forecast loop


def as_dataset(y: np.ndarray, x: np.ndarray) -> Dataset:
    """Wrap observed series in the Dataset carrier (no known truth)."""
    return Dataset(y=np.asarray(y, dtype=float), x=np.asarray(x, dtype=float),
                   true_q=frozenset(), true_j=frozenset(),
                   alpha_true=np.zeros(0))


class _GreedyTuner:
    """Serves models for each penalty constant from one greedy path.

    The path does not depend on c, the stopping rule and the backward
    elimination reduce to threshold comparisons on cached leave-one-out rss
    values, and refits are cached by selected set, so scanning a (c, d) grid
    costs little more than a single fit.
    """

    def __init__(self, y, x, config: FhtdConfig, method: str, intercept: bool):
        self.config = config
        self.method = method
        self.intercept = intercept
        q = config.resolve_q(len(y))
        center = intercept
        self.design = LagDesign(y, x, q=q, r=config.r, center=center)
        self.raw = (LagDesign(y, x, q=q, r=config.r, center=False)
                    if center else self.design)
        score = "fsr" if method == "fhtd" else "oga"
        if self.design.n_exo > 0:
            self.path = greedy_path(self.design, config, score=score,
                                    force_ar=True)
        else:
            self.path = SelectionPath([], [], [], [], [], q=q, w=0.0,
                                      force_ar=True, design=self.design)
        self._loo: dict[int, tuple[float, np.ndarray, list[int]]] = {}
        self._ddt: dict[tuple, np.ndarray] = {}
        self._refit: dict[tuple, SelectedModel] = {}

    def _weight(self, c: float) -> float:
        return c * max(self.design.n_exo, 1) ** (1.0 / self.config.eta)

    def _k_hat(self, c: float) -> int:
        if len(self.path) == 0:
            return 0
        w = self._weight(c)
        n = self.design.n_full
        base = self.design.q
        vals = [hdic(n, rss, base + m + 1, w=w)
                for m, rss in enumerate(self.path.rss)]
        return int(np.argmin(vals)) + 1

    def _trimmed(self, c: float) -> list[int]:
        """Exogenous columns surviving backward elimination at constant c."""
        k_hat = self._k_hat(c)
        pool = list(self.path.col_ids[:k_hat])
        base = list(self.design.ar_ids())
        key = k_hat
        if key not in self._loo:
            rss_full, rss_out = loo_rss(self.design, base, pool)
            self._loo[key] = (rss_full, rss_out, pool)
        rss_full, rss_out, pool = self._loo[key]
        n = self.design.n_full
        w = self._weight(c)
        size = len(base) + len(pool)
        h_full = hdic(n, rss_full, size, w=w)
        return [col for col, r_out in zip(pool, rss_out)
                if hdic(n, float(r_out), size - 1, w=w) > h_full]

    def model(self, c: float, d: float) -> SelectedModel:
        kept = self._trimmed(c)
        if self.method == "fhtd":
            j_hat = tuple(sorted(self.design.label_of(col) for col in kept))
            key = j_hat
            if key not in self._ddt:
                ids = list(self.design.ar_ids()) + \
                    [self.design.col_of(j, l) for (j, l) in j_hat]
                self._ddt[key] = ols_solve(self.design, ids).coef[: self.design.q]
            alpha = self._ddt[key]
            thr = ddt_threshold(self.config, self.design.n_full, self.design.q,
                                len(j_hat), len({j for j, _ in j_hat}))
            q_hat = tuple(i + 1 for i in range(self.design.q)
                          if abs(alpha[i]) >= thr)
        else:  # ar_oga3 keeps the whole coerced lag block
            q_hat = tuple(range(1, self.design.q + 1))
            j_hat = tuple(sorted(self.design.label_of(col) for col in kept))
            thr = None
        rkey = (q_hat, j_hat)
        if rkey not in self._refit:
            coef, icpt, sigma2, deficient = refit(
                self.design, q_hat, j_hat,
                raw_design=self.raw if self.intercept else None,
                intercept=self.intercept)
            self._refit[rkey] = SelectedModel(
                q_hat=q_hat, j_hat=j_hat, coef=coef, sigma2_hat=sigma2,
                alpha_hat=None, intercept=icpt, threshold_used=thr,
                k_hat=len(kept), rank_deficient=deficient)
        return self._refit[rkey]


def _predict_at(model: SelectedModel, y: np.ndarray, x: np.ndarray,
                targets: Sequence[int]) -> np.ndarray:
    idx = np.asarray(list(targets), dtype=int)
    pred = np.full(idx.shape, model.intercept if model.intercept is not None
                   else 0.0)
    k = 0
    for i in sorted(model.q_hat):
        pred = pred + model.coef[k] * y[idx - i]
        k += 1
    for (j, l) in sorted(model.j_hat):
        pred = pred + model.coef[k] * x[idx - l, j - 1]
        k += 1
    return pred


def _fit_window(method: str, y_tr, x_tr, config: FhtdConfig,
                lasso: LassoConfig, intercept: bool,
                tuned: tuple[float, float] | None) -> SelectedModel:
    cfg = config if tuned is None else replace(config, c=tuned[0], d=tuned[1])
    ds = as_dataset(y_tr, x_tr)
    if method == "fhtd":
        return fhtd_select_with_intercept(ds, cfg) if intercept \
            else fhtd_select(ds, cfg)
    if method in ("oga3", "ar_oga3"):
        return oga3_select(ds, cfg, force_ar=(method == "ar_oga3"),
                           intercept=intercept)
    return lasso_select(ds, cfg, variant=method,
                        lasso=replace(lasso, intercept=intercept))


def _tune_window(method: str, y, x, start: int, n_fit: int, n_train: int,
                 config: FhtdConfig, intercept: bool,
                 c_grid, d_grid) -> tuple[float, float]:
    """Grid-search (c, d) on the window's hold-out block by validation RMSE."""
    y_fit = y[start: start + n_fit]
    x_fit = x[start: start + n_fit]
    val_targets = range(start + n_fit, start + n_train)
    tuner = _GreedyTuner(y_fit, x_fit, config, method, intercept)
    best = (math.inf, config.c, config.d)
    d_values = list(d_grid) if method == "fhtd" else [config.d]
    for c in c_grid:
        for d in d_values:
            model = tuner.model(c, d)
            pred = _predict_at(model, y, x, val_targets)
            rmse = float(np.sqrt(np.mean((y[list(val_targets)] - pred) ** 2)))
            if rmse < best[0]:
                best = (rmse, c, d)
    return best[1], best[2]


@dataclass
class ForecastRecord:
    window: int
    target_index: int
    actual: float
    predicted: dict[str, float]
    abs_error: dict[str, float]


@dataclass
class ForecastReport:
    methods: list[str]
    records: list[ForecastRecord]
    rmse: dict[str, float]
    mae: dict[str, float]
    reference: str = ""
    dm_vs_reference: dict[str, DmResult] = field(default_factory=dict)

    def errors(self, method: str) -> np.ndarray:
        return np.array([r.actual - r.predicted[method] for r in self.records])


DEFAULT_CD_GRID = tuple(np.round(np.arange(1, 8) * 0.1, 10))


def rolling_forecast(y: np.ndarray, x: np.ndarray, *, train_window: int,
                     config: FhtdConfig,
                     methods: Sequence[str] = FORECAST_METHODS,
                     lasso: LassoConfig | None = None,
                     intercept: bool = True,
                     c_grid: Sequence[float] = DEFAULT_CD_GRID,
                     d_grid: Sequence[float] = DEFAULT_CD_GRID,
                     tune: bool = True,
                     freeze_tuning: bool = False,
                     n_windows: int | None = None) -> ForecastReport:
    """Rolling-window one-step-ahead prediction over the tail of the sample.

    Each window fits on ``train_window`` consecutive points and predicts the
    next one.  The greedy pipelines tune their penalty constants per window
    on the 80/20 hold-out split (``freeze_tuning`` reuses the first window's
    choice); the LASSO family is tuned by BIC inside the window.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    lasso = lasso if lasso is not None else LassoConfig()
    total = y.shape[0] - train_window
    if total < 1:
        raise WindowTooSmall("series shorter than one training window")
    w_count = min(n_windows, total) if n_windows is not None else total
    first_target = y.shape[0] - w_count

    n_fit = int(math.floor(0.8 * train_window))
    # pin q from the training length so the tuning block and the final fit
    # share the same lag count
    config = replace(config, q=config.resolve_q(train_window))
    q = config.q
    rbar = max(int(np.max(config.r)) if not np.isscalar(config.r) else int(config.r), q)
    if n_fit - rbar <= q + config.k_max:
        raise WindowTooSmall(
            f"fit block of {n_fit} rows cannot host q={q}, k_max={config.k_max}")

    tunable = {"fhtd", "ar_oga3"}
    frozen_params: dict[str, tuple[float, float]] = {}
    records: list[ForecastRecord] = []
    for w, target in enumerate(range(first_target, y.shape[0])):
        start = target - train_window
        y_tr = y[start:target]
        x_tr = x[start:target]
        predicted, abs_err = {}, {}
        for method in methods:
            tuned = None
            if tune and method in tunable:
                if freeze_tuning and method in frozen_params:
                    tuned = frozen_params[method]
                else:
                    tuned = _tune_window(method, y, x, start, n_fit,
                                         train_window, config, intercept,
                                         c_grid, d_grid)
                    frozen_params[method] = tuned
            model = _fit_window(method, y_tr, x_tr, config, lasso, intercept,
                                tuned)
            pred = forecast_next(model, y[:target], x[:target])
            predicted[method] = pred
            abs_err[method] = abs(y[target] - pred)
        records.append(ForecastRecord(window=w, target_index=target,
                                      actual=float(y[target]),
                                      predicted=predicted, abs_error=abs_err))

    rmse, mae = {}, {}
    for method in methods:
        errs = np.array([r.actual - r.predicted[method] for r in records])
        rmse[method] = float(np.sqrt(np.mean(errs ** 2)))
        mae[method] = float(np.median(np.abs(errs)))
    reference = "fhtd" if "fhtd" in methods else methods[0]
    report = ForecastReport(methods=list(methods), records=records,
                            rmse=rmse, mae=mae, reference=reference)
    if len(records) >= 10:
        ref_errors = report.errors(reference)
        for method in methods:
            if method != reference:
                report.dm_vs_reference[method] = dm_test(report.errors(method),
                                                         ref_errors)
    return report


# ---------------------------------------------------------------------------
# Analytic-limit studies


class Example21Result(NamedTuple):
    gap_mean: float           # mean of (F1 - F2) / n
    first_pick_freq: float    # share of reps whose first greedy pick is y_{t-1}
    y2_missed_freq: float     # share of reps with y_{t-2} absent from the path
    gaps: np.ndarray


def example21_stats(a: float, n: int, p: int, reps: int, seed: int = 0,
                    path_steps: int | None = 40) -> Example21Result:
    """Squared-projection gap and greedy-path statistics for the AR(2) model
    with one unit root and p irrelevant regressors.

    The gap (F1 - F2)/n has probability limit (1 + 2a) / (1 - a^2).  With
    ``path_steps`` None the greedy path is skipped and only the first pick is
    recorded.
    """
    if not abs(a) < 1:
        raise ValueError("|a| < 1 required")
    spec = builtin_spec("ex21", (n, p), a=a)
    cfg = FhtdConfig(r=1, q=2, k_max=path_steps or 1)
    gaps = np.empty(reps)
    first = 0
    missed = 0
    for r in range(reps):
        ds = simulate(spec, seed ^ r)
        design = LagDesign(ds.y, ds.x, q=2, r=1)
        y_w = design.y_window
        o1 = design.column(0)
        o2 = design.column(1)
        f1 = (y_w @ o1) ** 2 / (o1 @ o1)
        f2 = (y_w @ o2) ** 2 / (o2 @ o2)
        gaps[r] = (f1 - f2) / n
        fit = new_fit(design)
        fit.track(np.arange(design.n_candidates))
        ids, scores = fit.tracked_scores("oga")
        first += int(ids[int(np.argmax(scores))] == 0)
        if path_steps is not None:
            path = greedy_path(design, cfg, score="oga", force_ar=False)
            missed += int(1 not in path.col_ids)
    return Example21Result(float(gaps.mean()), first / reps,
                           missed / reps if path_steps is not None else math.nan,
                           gaps)


def example22_selection_curve(n: int, reps: int, seed: int = 0,
                              lambda_grid: np.ndarray | None = None,
                              n_lambda: int = 25) -> tuple[np.ndarray, np.ndarray]:
    """Correct-selection frequency of raw LASSO on the unit-root triple.

    The model is y_t = y_{t-1} + x_{t-1} + eps_t with candidates
    (y_{t-1}, y_{t-2}, x_{t-1}); correct selection means the middle
    coefficient is exactly zero and the outer two are not.  No grid value
    achieves consistency; the asymptotic bound on the frequency is 1/2.
    """
    if lambda_grid is None:
        lambda_grid = np.geomspace(n ** 1.5, n ** 0.5, n_lambda)
    cfg = LassoConfig(lambda_grid=np.asarray(lambda_grid, dtype=float),
                      standardize=False, intercept=False)
    spec = builtin_spec("ex22", n)
    hits = np.zeros(lambda_grid.shape[0])
    for r in range(reps):
        ds = simulate(spec, seed ^ r)
        design = LagDesign(ds.y, ds.x, q=2, r=1)
        W = design.matrix(range(3))
        fit = lasso_path(W, design.y_window, cfg)
        coefs = fit.coefs
        correct = (coefs[:, 0] != 0) & (coefs[:, 1] == 0) & (coefs[:, 2] != 0)
        hits[: correct.shape[0]] += correct
    return np.asarray(lambda_grid, dtype=float), hits / reps


def example31_mspe(k: int, n: int, reps: int, seed: int = 0) -> tuple[float, float]:
    """Scaled excess prediction risks of the full-order vs single-lag fits.

    For y_t = y_{t-k} + eps_t the limits of n*(MSPE - sigma^2) are 2k sigma^2
    for the least-squares fit on lags 1..k and 2 sigma^2 for the fit on lag k
    alone.  The estimates average (prediction mean - true conditional mean)^2,
    which equals MSPE - sigma^2 exactly since the future error is independent.
    """
    if k < 1:
        raise ValueError("k >= 1 required")
    ar_poly = np.zeros(k + 1)
    ar_poly[0] = 1.0
    ar_poly[k] = -1.0
    full_sq = np.empty(reps)
    single_sq = np.empty(reps)
    for r in range(reps):
        rng = np.random.default_rng(np.random.SeedSequence((seed, r)))
        eps = rng.standard_normal(n + 1)
        y = lfilter([1.0], ar_poly, eps)
        mu = y[n - k]  # true conditional mean of y_{n+1}
        X = np.column_stack([y[k - 1 - i: n - 1 - i] for i in range(k)])
        yt = y[k:n]
        beta = np.linalg.lstsq(X, yt, rcond=None)[0]
        last = y[n - 1 - np.arange(k)]
        full_sq[r] = (last @ beta - mu) ** 2
        xs = y[0: n - k]
        bt = float((xs @ yt) / (xs @ xs))
        single_sq[r] = (y[n - k] * bt - mu) ** 2
    return float(n * full_sq.mean()), float(n * single_sq.mean())
