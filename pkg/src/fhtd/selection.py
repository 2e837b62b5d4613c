"""Greedy selection pipeline for unit-root ARX models.

The pipeline coerces all q AR lag columns into the model, runs forward
stepwise regression (FSR) over the exogenous candidates, stops at the
information-criterion minimum along the path, backward-eliminates exogenous
variables whose removal lowers the criterion (Trim), and finally thresholds
the AR coefficient estimates at a data-driven level (DDT).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dgp import Dataset
from .errors import EmptyPath, InsufficientData
from .projection import LagDesign, OlsResult, new_fit, ols_solve


def default_q(n: int) -> int:
    """Default AR lag count, floor(2 n^0.25)."""
    return int(math.floor(2.0 * n ** 0.25))


@dataclass
class FhtdConfig:
    """Tuning knobs for the selection pipeline.

    ``r`` is the per-series maximum exogenous lag (scalar or length-p);
    ``q`` defaults to floor(2 n^0.25) when left as None.  ``threshold_mode``
    picks the data-driven threshold: "simulation" uses
    d * min{(q+s0)^(1/2), s0_under^(1/2) q^(1/2)} / n^(1/2), while
    "theoretical" uses the max{q^(3/2)/n^(1/2), min-branch with q^(1/eta)}
    form scaled by a slowly diverging factor ``d_tilde`` (default loglog n).
    """

    r: int | Sequence[int]
    q: int | None = None
    k_max: int = 40
    eta: float = 2.0
    c: float = 0.5
    d: float = 0.5
    threshold_mode: str = "simulation"
    d_tilde: float | None = None

    def __post_init__(self):
        if self.q is not None and self.q < 1:
            raise ValueError("q must be >= 1")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.c <= 0 or self.d <= 0:
            raise ValueError("c and d must be positive")
        if self.eta < 2:
            raise ValueError("eta must be >= 2")
        if self.threshold_mode not in ("simulation", "theoretical"):
            raise ValueError("threshold_mode must be simulation or theoretical")

    def resolve_q(self, n: int) -> int:
        return self.q if self.q is not None else default_q(n)


def hdic(n: int, rss: float, model_size: int, *, p_star: int | None = None,
         c: float = 0.5, eta: float = 2.0, w: float | None = None) -> float:
    """Information criterion n log(rss/n) + w * model_size.

    ``w`` defaults to c * p_star^(1/eta); pass it explicitly to use a custom
    complexity penalty.  A zero rss returns -inf (a perfect fit dominates).
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if w is None:
        if p_star is None:
            raise ValueError("need p_star or an explicit penalty w")
        w = c * p_star ** (1.0 / eta)
    if rss <= 0.0:
        return -np.inf
    return n * math.log(rss / n) + w * model_size


def penalty_weight(design: LagDesign, config: FhtdConfig) -> float:
    return config.c * max(design.n_exo, 1) ** (1.0 / config.eta)


@dataclass
class SelectionPath:
    """Ordered greedy choices with per-step criterion values."""

    col_ids: list[int]
    labels: list
    scores: list[float]
    rss: list[float]
    hdic: list[float]
    q: int
    w: float
    force_ar: bool
    exhausted: bool = False
    design: LagDesign | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.col_ids)


def make_design(dataset: Dataset, config: FhtdConfig,
                center: bool = False) -> LagDesign:
    q = config.resolve_q(dataset.n)
    return LagDesign(dataset.y, dataset.x, q=q, r=config.r, center=center)


def greedy_path(design: LagDesign, config: FhtdConfig, *, score: str = "fsr",
                force_ar: bool = True) -> SelectionPath:
    """Run FSR (or OGA) for up to k_max steps and record criterion values.

    With ``force_ar`` the q AR lags are coerced into the base model and only
    exogenous candidates compete; otherwise AR lags are ordinary candidates.
    The path stops early only when no eligible candidate remains.
    """
    q = design.q
    if design.rows <= q + config.k_max:
        raise InsufficientData(
            f"need more than q + k_max = {q + config.k_max} rows, have {design.rows}")
    w = penalty_weight(design, config)
    n = design.n_full
    base_size = q if force_ar else 0
    if force_ar:
        fit = new_fit(design, design.ar_ids())
        candidates = design.exo_ids()
    else:
        fit = new_fit(design)
        candidates = np.arange(design.n_candidates)
    fit.track(candidates)
    path = SelectionPath([], [], [], [], [], q=q, w=w, force_ar=force_ar,
                         design=design)
    steps = min(config.k_max, candidates.shape[0])
    for m in range(1, steps + 1):
        ids, scores = fit.tracked_scores(score)
        if ids.size == 0 or not np.isfinite(scores.max()):
            path.exhausted = True
            break
        best = int(np.argmax(scores))  # ties resolve to the lowest column id
        col = int(ids[best])
        path.col_ids.append(col)
        path.labels.append(design.label_of(col))
        path.scores.append(float(scores[best]))
        fit.drop_tracked(col)
        fit.append(col)
        path.rss.append(fit.rss)
        path.hdic.append(hdic(n, fit.rss, base_size + m, w=w))
    return path


def fsr_path(dataset: Dataset, config: FhtdConfig) -> SelectionPath:
    """FSR path over the exogenous candidates with the AR block coerced."""
    return greedy_path(make_design(dataset, config), config, score="fsr",
                       force_ar=True)


def hdic_stop(path: SelectionPath) -> int:
    """1-based index of the criterion minimum; ties go to the smallest m."""
    if len(path) == 0:
        raise EmptyPath("selection path has no steps")
    return int(np.argmin(path.hdic)) + 1


def loo_rss(design: LagDesign, base_ids: Sequence[int],
            loo_ids: Sequence[int]) -> tuple[float, np.ndarray]:
    """Full-model rss and leave-one-out rss for each id in ``loo_ids``."""
    all_ids = list(base_ids) + list(loo_ids)
    rss_full = ols_solve(design, all_ids).rss
    outs = np.empty(len(loo_ids))
    for i, col in enumerate(loo_ids):
        reduced = [c for c in all_ids if c != col]
        outs[i] = ols_solve(design, reduced).rss
    return rss_full, outs


def trim_ids(design: LagDesign, n: int, w: float, base_ids: Sequence[int],
             loo_ids: Sequence[int]) -> list[int]:
    """Keep each candidate only if removing it raises the criterion."""
    loo_ids = list(loo_ids)
    if not loo_ids:
        return []
    size_full = len(base_ids) + len(loo_ids)
    rss_full, rss_out = loo_rss(design, base_ids, loo_ids)
    h_full = hdic(n, rss_full, size_full, w=w)
    kept = []
    for col, rss_loo in zip(loo_ids, rss_out):
        if hdic(n, float(rss_loo), size_full - 1, w=w) > h_full:
            kept.append(col)
    return kept


def trim(dataset: Dataset, config: FhtdConfig, j_khat) -> tuple[tuple[int, int], ...]:
    """Backward elimination of the exogenous set chosen by the stopping rule.

    A singleton set is retained only if it beats the AR-only model.
    """
    design = make_design(dataset, config)
    return _trim_exo(design, config, j_khat)


def _trim_exo(design: LagDesign, config: FhtdConfig, j_khat) -> tuple[tuple[int, int], ...]:
    ids = [design.col_of(j, l) for (j, l) in j_khat]
    kept = trim_ids(design, design.n_full, penalty_weight(design, config),
                    list(design.ar_ids()), ids)
    return tuple(sorted(design.label_of(c) for c in kept))


def ddt(dataset: Dataset, config: FhtdConfig, j_hat
        ) -> tuple[tuple[int, ...], np.ndarray, float]:
    """Threshold the AR coefficients of the full-lag regression."""
    design = make_design(dataset, config)
    q_hat, alpha_hat, thr, _ = _ddt(design, config, j_hat)
    return q_hat, alpha_hat, thr


def ddt_threshold(config: FhtdConfig, n: int, q: int, s0: int, s0_under: int) -> float:
    """Data-driven threshold level for the AR coefficient estimates.

    When the selected exogenous set is empty the under-count branch of the
    min would degenerate to zero, so the (q + s0)^(1/2) branch is used alone.
    """
    joint = math.sqrt(q + s0)
    if config.threshold_mode == "simulation":
        core = joint if s0_under == 0 else min(joint, math.sqrt(s0_under) * math.sqrt(q))
        return config.d * core / math.sqrt(n)
    core = joint if s0_under == 0 else min(joint, math.sqrt(s0_under) * q ** (1.0 / config.eta))
    d_tilde = config.d_tilde if config.d_tilde is not None else math.log(math.log(n))
    return max(q ** 1.5 / math.sqrt(n), core) / math.sqrt(n) * d_tilde


def _ddt(design: LagDesign, config: FhtdConfig, j_hat
         ) -> tuple[tuple[int, ...], np.ndarray, float, OlsResult]:
    j_hat = sorted(j_hat)
    ids = list(design.ar_ids()) + [design.col_of(j, l) for (j, l) in j_hat]
    fit = ols_solve(design, ids)
    q = design.q
    alpha_hat = fit.coef[:q].copy()
    s0 = len(j_hat)
    s0_under = len({j for (j, _) in j_hat})
    thr = ddt_threshold(config, design.n_full, q, s0, s0_under)
    q_hat = tuple(i + 1 for i in range(q) if abs(alpha_hat[i]) >= thr)
    return q_hat, alpha_hat, thr, fit


@dataclass(frozen=True)
class SelectedModel:
    """Final selected ARX model with its refitted coefficients.

    ``coef`` is aligned with sorted(q_hat) followed by sorted(j_hat); when an
    intercept was fitted it is stored separately.  ``threshold_used`` is None
    for selectors without a thresholding stage.
    """

    q_hat: tuple[int, ...]
    j_hat: tuple[tuple[int, int], ...]
    coef: np.ndarray
    sigma2_hat: float
    alpha_hat: np.ndarray | None = None
    intercept: float | None = None
    threshold_used: float | None = None
    k_hat: int = 0
    rank_deficient: bool = False

    def as_dict(self) -> dict:
        return {
            "q_hat": list(self.q_hat),
            "j_hat": [list(jl) for jl in self.j_hat],
            "coef": [float(v) for v in self.coef],
            "intercept": self.intercept,
            "sigma2_hat": self.sigma2_hat,
            "alpha_hat": None if self.alpha_hat is None
                         else [float(v) for v in self.alpha_hat],
            "threshold_used": self.threshold_used,
            "k_hat": int(self.k_hat),
            "rank_deficient": bool(self.rank_deficient),
        }


def refit(design: LagDesign, q_hat, j_hat, raw_design: LagDesign | None = None,
          intercept: bool = False) -> tuple[np.ndarray, float | None, float, bool]:
    """OLS refit on exactly the selected columns, optionally with intercept.

    Returns (coef, intercept, sigma2_hat, rank_deficient); sigma2 divides the
    rss by the full sample size n.
    """
    target = raw_design if raw_design is not None else design
    ids = [i - 1 for i in sorted(q_hat)] + \
          [target.col_of(j, l) for (j, l) in sorted(j_hat)]
    if not intercept:
        fit = ols_solve(target, ids)
        return fit.coef, None, fit.rss / target.n_full, fit.rank_deficient
    w = np.column_stack((np.ones(target.rows), target.matrix(ids))) \
        if ids else np.ones((target.rows, 1))
    y = target.y_window
    coef, _, rank, _ = np.linalg.lstsq(w, y, rcond=None)
    resid = y - w @ coef
    rss = float(resid @ resid)
    return coef[1:], float(coef[0]), rss / target.n_full, rank < w.shape[1]


def _select_on_design(design: LagDesign, config: FhtdConfig,
                      raw_design: LagDesign | None = None,
                      intercept: bool = False) -> SelectedModel:
    if design.n_exo > 0:
        path = greedy_path(design, config, score="fsr", force_ar=True)
    else:
        path = SelectionPath([], [], [], [], [], q=design.q,
                             w=penalty_weight(design, config), force_ar=True,
                             design=design)
    if len(path) > 0:
        k_hat = hdic_stop(path)
        j_khat = path.labels[:k_hat]
    else:
        k_hat = 0
        j_khat = []
    j_hat = _trim_exo(design, config, j_khat)
    q_hat, alpha_hat, thr, ddt_fit = _ddt(design, config, j_hat)
    coef, icpt, sigma2, deficient = refit(design, q_hat, j_hat,
                                          raw_design=raw_design,
                                          intercept=intercept)
    return SelectedModel(q_hat=q_hat, j_hat=j_hat, coef=coef,
                         sigma2_hat=sigma2, alpha_hat=alpha_hat,
                         intercept=icpt, threshold_used=thr, k_hat=k_hat,
                         rank_deficient=deficient or ddt_fit.rank_deficient)


def fhtd_select(dataset: Dataset, config: FhtdConfig) -> SelectedModel:
    """Full pipeline: FSR path, criterion stop, Trim, DDT, OLS refit."""
    return _select_on_design(make_design(dataset, config), config)


def fhtd_select_with_intercept(dataset: Dataset, config: FhtdConfig) -> SelectedModel:
    """Demean every column and the response, select, then refit with intercept.

    Selection runs on the demeaned window; the returned coefficients come
    from an OLS refit of the selected variables plus an intercept on the raw
    data, so predictions live on the raw scale.
    """
    centered = make_design(dataset, config, center=True)
    raw = make_design(dataset, config, center=False)
    return _select_on_design(centered, config, raw_design=raw, intercept=True)


def forecast_next(model: SelectedModel, y_hist: np.ndarray,
                  x_hist: np.ndarray) -> float:
    """One-step-ahead prediction from the last available lag vector."""
    val = model.intercept if model.intercept is not None else 0.0
    k = 0
    for i in sorted(model.q_hat):
        val += model.coef[k] * y_hist[-i]
        k += 1
    for (j, l) in sorted(model.j_hat):
        val += model.coef[k] * x_hist[-l, j - 1]
        k += 1
    return float(val)
