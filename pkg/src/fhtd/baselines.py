"""Competing selectors: the LASSO family and the OGA-based pipelines.

The LASSO minimizes ``sum_t (y_t - w_t' beta)^2 + lambda * sum_j w_j |beta_j|``
(no 1/(2n) factor) by cyclic coordinate descent on the gram system with an
active-set strategy and warm starts along a geometric grid.  Internal
standardization rescales every column to unit root-mean-square, which is the
behaviour that makes plain LASSO fragile on unit-root columns.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dgp import Dataset
from .selection import (FhtdConfig, SelectedModel, SelectionPath, greedy_path,
                        hdic_stop, make_design, penalty_weight, refit,
                        trim_ids)

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dependency normally
    njit = None


def _cd_gram_py(G, c, beta, lam, w, max_iter, tol):
    """Cyclic coordinate descent on the gram system; mutates beta in place.

    Inner sweeps cycle a compact copy of the active submatrix until the
    largest coefficient change drops below tol; a full pass then admits new
    actives and declares convergence when nothing moves.  Returns
    (sweeps, converged).
    """
    p = G.shape[0]
    n_pass = 0
    while n_pass < max_iter:
        s = 0
        for j in range(p):
            if beta[j] != 0.0:
                s += 1
        sub = np.empty(s, dtype=np.int64)
        k = 0
        for j in range(p):
            if beta[j] != 0.0:
                sub[k] = j
                k += 1
        Gs = np.empty((s, s))
        cs = np.empty(s)
        bs = np.empty(s)
        ws = np.empty(s)
        for i in range(s):
            cs[i] = c[sub[i]]
            bs[i] = beta[sub[i]]
            ws[i] = w[sub[i]]
            for j2 in range(s):
                Gs[i, j2] = G[sub[i], sub[j2]]
        vs = Gs @ bs
        # -- inner sweeps on the active submatrix --------------------------
        since_solve = 0
        solve_wait = 5
        while n_pass < max_iter and s > 0:
            n_pass += 1
            delta_max = 0.0
            for i in range(s):
                gjj = Gs[i, i]
                if gjj <= 0.0:
                    continue
                rho = cs[i] - vs[i] + gjj * bs[i]
                thr = 0.5 * lam * ws[i]
                if rho > thr:
                    b_new = (rho - thr) / gjj
                elif rho < -thr:
                    b_new = (rho + thr) / gjj
                else:
                    b_new = 0.0
                d = b_new - bs[i]
                if d != 0.0:
                    for k2 in range(s):
                        vs[k2] += Gs[k2, i] * d
                    bs[i] = b_new
                    ad = abs(d)
                    if ad > delta_max:
                        delta_max = ad
            if delta_max < tol:
                break
            since_solve += 1
            if since_solve >= solve_wait:
                # collinear actives make plain sweeps zigzag; with the signs
                # now stable, solve the sign-fixed stationarity system and
                # adopt the solution if it is sign-consistent (the following
                # sweep still has to pass the tolerance check); back off
                # geometrically when the attempt is rejected
                since_solve = 0
                solve_wait *= 2
                n_nz = 0
                for i in range(s):
                    if bs[i] != 0.0:
                        n_nz += 1
                if n_nz == 0:
                    continue
                nz = np.empty(n_nz, dtype=np.int64)
                k3 = 0
                for i in range(s):
                    if bs[i] != 0.0:
                        nz[k3] = i
                        k3 += 1
                A = np.empty((n_nz, n_nz))
                rhs = np.empty(n_nz)
                for i2 in range(n_nz):
                    sgn = 1.0 if bs[nz[i2]] > 0.0 else -1.0
                    rhs[i2] = cs[nz[i2]] - 0.5 * lam * ws[nz[i2]] * sgn
                    for j3 in range(n_nz):
                        A[i2, j3] = Gs[nz[i2], nz[j3]]
                sol = np.linalg.lstsq(A, rhs.reshape(-1, 1))[0].ravel()
                ok = True
                for i2 in range(n_nz):
                    if not np.isfinite(sol[i2]) or sol[i2] * bs[nz[i2]] <= 0.0:
                        ok = False
                        break
                if ok:
                    for i2 in range(n_nz):
                        bs[nz[i2]] = sol[i2]
                    vs = Gs @ bs
        for i in range(s):
            beta[sub[i]] = bs[i]
        # -- full pass: check optimality and admit new actives -------------
        v = G @ beta
        n_pass += 1
        delta_max = 0.0
        for j in range(p):
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            rho = c[j] - v[j] + gjj * beta[j]
            thr = 0.5 * lam * w[j]
            if rho > thr:
                b_new = (rho - thr) / gjj
            elif rho < -thr:
                b_new = (rho + thr) / gjj
            else:
                b_new = 0.0
            d = b_new - beta[j]
            if d != 0.0:
                for k2 in range(p):
                    v[k2] += G[k2, j] * d
                beta[j] = b_new
                ad = abs(d)
                if ad > delta_max:
                    delta_max = ad
        if delta_max < tol:
            return n_pass, True
    return n_pass, False


_cd_gram = njit(cache=True)(_cd_gram_py) if njit is not None else _cd_gram_py


@dataclass
class LassoConfig:
    """Grid, convergence, and penalization options for the LASSO family.

    ``lambda_grid`` overrides the automatic geometric grid spanning
    [lambda_max * lambda_min_ratio, lambda_max]; the ratio defaults to 1e-4,
    or 0.01 when the columns outnumber the rows (the usual path-software
    rule, which keeps the grid out of the non-identified regime).  ``df_max``
    truncates the path once the active set exceeds it (default: the row
    count); fits past the truncation and interpolating fits are excluded
    from the BIC choice.
    """

    lambda_grid: np.ndarray | None = None
    n_lambda: int = 100
    lambda_min_ratio: float | None = None
    max_iter: int = 10_000
    tol: float = 1e-7
    standardize: bool = True
    penalize_ar: bool = True
    intercept: bool = False
    df_max: int | None = None

    def __post_init__(self):
        if self.lambda_grid is not None:
            g = np.asarray(self.lambda_grid, dtype=float)
            if g.ndim != 1 or np.any(g < 0) or np.any(np.diff(g) >= 0):
                raise ValueError("lambda_grid must be nonnegative and strictly decreasing")
            self.lambda_grid = g
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class LassoFit:
    """Per-lambda solutions in original coordinates plus the BIC choice."""

    lambdas: np.ndarray
    coefs: np.ndarray               # (n_fitted, p)
    intercepts: np.ndarray          # (n_fitted,)
    rss: np.ndarray
    bic: np.ndarray                 # +inf where excluded from selection
    converged: np.ndarray
    chosen: int
    scales: np.ndarray
    weights: np.ndarray
    penalized: np.ndarray
    col_means: np.ndarray | None
    y_mean: float
    all_zero_first_stage: bool = False

    @property
    def n_fitted(self) -> int:
        return self.coefs.shape[0]

    def active_set(self, i: int | None = None) -> np.ndarray:
        i = self.chosen if i is None else i
        return np.flatnonzero(self.coefs[i])

    @property
    def coef(self) -> np.ndarray:
        return self.coefs[self.chosen]

    @property
    def intercept(self) -> float:
        return float(self.intercepts[self.chosen])


def _standardize(W: np.ndarray, y: np.ndarray, config: LassoConfig):
    if config.intercept:
        col_means = W.mean(axis=0)
        y_mean = float(y.mean())
        Wc = W - col_means
        yc = y - y_mean
    else:
        col_means, y_mean = None, 0.0
        Wc, yc = W, y
    if config.standardize:
        scales = np.sqrt(np.mean(Wc ** 2, axis=0))
        scales[scales == 0.0] = 1.0  # all-zero columns never activate anyway
    else:
        scales = np.ones(W.shape[1])
    return Wc / scales, yc, scales, col_means, y_mean


def _solve_path(G, c, yty, lambdas, weights, penalized, config, rows):
    """Warm-started path solve with the unpenalized block profiled out.

    Minimizing over the unpenalized coordinates given the penalized ones is a
    linear solve, so the penalized subproblem uses the gram and moments
    residualized on the block (Frisch-Waugh); the block coefficients are
    recovered per lambda.  This sidesteps the coordinate-wise zigzag on the
    nearly collinear unit-root lag columns.
    """
    p = G.shape[0]
    df_max = config.df_max if config.df_max is not None else rows
    block = np.flatnonzero(~penalized)
    pen = np.flatnonzero(penalized)
    if block.size:
        b_inv = np.linalg.pinv(G[np.ix_(block, block)])
        g_bp = G[np.ix_(block, pen)]
        g_res = G[np.ix_(pen, pen)] - g_bp.T @ (b_inv @ g_bp)
        g_res = 0.5 * (g_res + g_res.T)
        np.fill_diagonal(g_res, np.maximum(g_res.diagonal(), 0.0))
        c_res = c[pen] - g_bp.T @ (b_inv @ c[block])
        c_block = b_inv @ c[block]
    else:
        g_res, c_res = G, c
    beta_pen = np.zeros(pen.size)
    w_pen = weights[pen]
    coefs, rss, converged = [], [], []
    for lam in lambdas:
        _, ok = _cd_gram(g_res, c_res, beta_pen, lam, w_pen,
                         config.max_iter, config.tol)
        beta = np.zeros(p)
        beta[pen] = beta_pen
        if block.size:
            beta[block] = c_block - b_inv @ (g_bp @ beta_pen)
        coefs.append(beta)
        rss.append(max(float(yty - 2.0 * (c @ beta) + beta @ (G @ beta)), 0.0))
        converged.append(bool(ok))
        if int(np.count_nonzero(beta)) > df_max:
            break
    return np.array(coefs), np.array(rss), np.array(converged, dtype=bool)


def _bic_values(rss, coefs, rows, df_max):
    n_fit = rss.shape[0]
    bic = np.full(n_fit, np.inf)
    for i in range(n_fit):
        df = int(np.count_nonzero(coefs[i]))
        # interpolating or over-wide fits are non-identified; keep BIC finite
        if rss[i] <= 0.0 or df >= rows or df > df_max:
            continue
        bic[i] = rows * np.log(rss[i] / rows) + np.log(rows) * df
    return bic


def lasso_path(W: np.ndarray, y: np.ndarray, config: LassoConfig,
               n_ar: int = 0) -> LassoFit:
    """Solve the LASSO along a decreasing lambda grid and pick by BIC.

    The first ``n_ar`` columns form the AR block and are left unpenalized
    when ``config.penalize_ar`` is false.  BIC(lambda) is
    rows*log(rss/rows) + log(rows)*df with df the active-set size.
    """
    W = np.asarray(W, dtype=float)
    y = np.asarray(y, dtype=float)
    rows, p = W.shape
    Ws, yc, scales, col_means, y_mean = _standardize(W, y, config)
    G = Ws.T @ Ws
    c = Ws.T @ yc
    yty = float(yc @ yc)
    penalized = np.ones(p, dtype=bool)
    if not config.penalize_ar:
        penalized[:n_ar] = False
    weights = np.ones(p)

    if config.lambda_grid is not None:
        lambdas = config.lambda_grid
    else:
        base = np.zeros(p)
        if (~penalized).any():
            idx = np.flatnonzero(~penalized)
            sub = G[np.ix_(idx, idx)]
            base[idx] = np.linalg.lstsq(sub, c[idx], rcond=None)[0]
        grad = c - G @ base
        lam_max = 2.0 * np.max(np.abs(grad[penalized])) if penalized.any() else 1.0
        lam_max = max(lam_max, np.finfo(float).tiny)
        ratio = config.lambda_min_ratio
        if ratio is None:
            ratio = 0.01 if p > rows else 1e-4
        lambdas = lam_max * np.geomspace(1.0, ratio, config.n_lambda)

    coefs_s, rss, converged = _solve_path(G, c, yty, lambdas, weights,
                                          penalized, config, rows)
    df_max = config.df_max if config.df_max is not None else rows
    bic = _bic_values(rss, coefs_s, rows, df_max)
    chosen = int(np.argmin(bic)) if np.isfinite(bic).any() else 0
    coefs = coefs_s / scales
    intercepts = np.zeros(coefs.shape[0])
    if config.intercept:
        intercepts = y_mean - coefs @ col_means
    return LassoFit(lambdas=lambdas[: coefs.shape[0]], coefs=coefs,
                    intercepts=intercepts, rss=rss, bic=bic,
                    converged=converged, chosen=chosen, scales=scales,
                    weights=weights, penalized=penalized,
                    col_means=col_means, y_mean=y_mean)


def adaptive_lasso(W: np.ndarray, y: np.ndarray, config: LassoConfig,
                   n_ar: int = 0) -> LassoFit:
    """Two-stage LASSO with inverse first-stage magnitudes as weights.

    Stage one runs ``lasso_path`` (the AR block unpenalized when configured);
    stage two penalizes every surviving column with weight 1/|beta_1| in the
    standardized scale and drops first-stage zeros (infinite weight).
    """
    W = np.asarray(W, dtype=float)
    y = np.asarray(y, dtype=float)
    rows, p = W.shape
    stage1 = lasso_path(W, y, config, n_ar=n_ar)
    beta1_std = stage1.coefs[stage1.chosen] * stage1.scales
    survivors = np.flatnonzero(beta1_std != 0.0)
    if survivors.size == 0:
        empty = np.zeros((1, p))
        return LassoFit(lambdas=np.array([np.inf]), coefs=empty,
                        intercepts=np.array([stage1.y_mean]),
                        rss=np.array([float(((y - y.mean()) ** 2).sum()
                                            if config.intercept else (y ** 2).sum())]),
                        bic=np.array([np.inf]), converged=np.array([True]),
                        chosen=0, scales=stage1.scales,
                        weights=np.full(p, np.inf), penalized=np.ones(p, dtype=bool),
                        col_means=stage1.col_means, y_mean=stage1.y_mean,
                        all_zero_first_stage=True)

    Ws, yc, scales, col_means, y_mean = _standardize(W, y, config)
    sub = Ws[:, survivors]
    G = sub.T @ sub
    c = sub.T @ yc
    yty = float(yc @ yc)
    weights = 1.0 / np.abs(beta1_std[survivors])
    penalized = np.ones(survivors.size, dtype=bool)
    lam_max = 2.0 * np.max(np.abs(c) / weights)
    lam_max = max(lam_max, np.finfo(float).tiny)
    sub_cfg = replace(config, penalize_ar=True, lambda_grid=None)
    ratio = config.lambda_min_ratio
    if ratio is None:
        ratio = 0.01 if survivors.size > rows else 1e-4
    lambdas = lam_max * np.geomspace(1.0, ratio, config.n_lambda)
    coefs_s, rss, converged = _solve_path(G, c, yty, lambdas, weights,
                                          penalized, sub_cfg, rows)
    df_max = config.df_max if config.df_max is not None else rows
    bic = _bic_values(rss, coefs_s, rows, df_max)
    chosen = int(np.argmin(bic)) if np.isfinite(bic).any() else 0
    full = np.zeros((coefs_s.shape[0], p))
    full[:, survivors] = coefs_s / scales[survivors]
    intercepts = np.zeros(full.shape[0])
    if config.intercept:
        intercepts = y_mean - full @ col_means
    weights_full = np.full(p, np.inf)
    weights_full[survivors] = weights
    penalized_full = np.ones(p, dtype=bool)
    return LassoFit(lambdas=lambdas[: full.shape[0]], coefs=full,
                    intercepts=intercepts, rss=rss, bic=bic,
                    converged=converged, chosen=chosen, scales=scales,
                    weights=weights_full, penalized=penalized_full,
                    col_means=col_means, y_mean=y_mean)


def kkt_violation(W: np.ndarray, y: np.ndarray, fit: LassoFit,
                  i: int | None = None) -> float:
    """Max subgradient-optimality violation in standardized coefficient units."""
    i = fit.chosen if i is None else i
    W = np.asarray(W, dtype=float)
    y = np.asarray(y, dtype=float)
    Wc = W - fit.col_means if fit.col_means is not None else W
    yc = y - fit.y_mean if fit.col_means is not None else y
    Ws = Wc / fit.scales
    beta_s = fit.coefs[i] * fit.scales
    lam = fit.lambdas[i]
    rho = 2.0 * (Ws.T @ (yc - Ws @ beta_s))
    gjj = 2.0 * np.einsum("ij,ij->j", Ws, Ws)
    worst = 0.0
    for j in range(Ws.shape[1]):
        if gjj[j] <= 0.0:
            continue
        wj = fit.weights[j]
        if not fit.penalized[j]:
            viol = abs(rho[j])
        elif beta_s[j] != 0.0:
            if not np.isfinite(wj):
                continue
            viol = abs(rho[j] - lam * wj * np.sign(beta_s[j]))
        else:
            if not np.isfinite(wj):
                continue
            viol = max(0.0, abs(rho[j]) - lam * wj)
        worst = max(worst, viol / gjj[j])
    return worst


# ---------------------------------------------------------------------------
# OGA pipelines


def oga_path(dataset: Dataset, config: FhtdConfig,
             force_ar: bool = True) -> SelectionPath:
    """Greedy path scored with the raw-norm denominator.

    With ``force_ar`` false the AR lag columns compete as ordinary candidates
    alongside the exogenous ones.
    """
    design = make_design(dataset, config)
    return greedy_path(design, config, score="oga", force_ar=force_ar)


def oga3_select(dataset: Dataset, config: FhtdConfig, force_ar: bool = True,
                intercept: bool = False) -> SelectedModel:
    """OGA screening, criterion stop, then backward elimination; no DDT.

    In the AR-forced variant the AR lags stay coerced throughout: backward
    elimination applies to the chosen exogenous variables only and the final
    model keeps all q lags.  With ``intercept`` the selection runs on
    demeaned columns and the final model is refit on raw data with an
    intercept.
    """
    design = make_design(dataset, config, center=intercept)
    raw = make_design(dataset, config) if intercept else None
    w = penalty_weight(design, config)
    if design.n_exo > 0 or not force_ar:
        path = greedy_path(design, config, score="oga", force_ar=force_ar)
    else:
        path = SelectionPath([], [], [], [], [], q=design.q, w=w,
                             force_ar=force_ar, design=design)
    k_hat = hdic_stop(path) if len(path) > 0 else 0
    chosen = list(path.col_ids[:k_hat])
    base = list(design.ar_ids()) if force_ar else []
    kept = base + trim_ids(design, design.n_full, w, base, chosen)
    q_hat = tuple(sorted(c + 1 for c in kept if c < design.q))
    j_hat = tuple(sorted(design.label_of(c) for c in kept if c >= design.q))
    coef, icpt, sigma2, deficient = refit(design, q_hat, j_hat,
                                          raw_design=raw, intercept=intercept)
    return SelectedModel(q_hat=q_hat, j_hat=j_hat, coef=coef,
                         sigma2_hat=sigma2, alpha_hat=None, intercept=icpt,
                         threshold_used=None, k_hat=k_hat,
                         rank_deficient=deficient)


def lasso_select(dataset: Dataset, config: FhtdConfig, variant: str = "lasso",
                 lasso: LassoConfig | None = None) -> SelectedModel:
    """Map a BIC-chosen LASSO-family coefficient vector to a selected model.

    Variants: ``lasso`` (single stage), ``alasso`` (adaptive, all columns
    penalized in stage one), ``ar_alasso`` (adaptive, AR block unpenalized in
    stage one).
    """
    lasso = lasso if lasso is not None else LassoConfig()
    design = make_design(dataset, config)
    W = design.matrix(range(design.n_candidates))
    y = design.y_window
    q = design.q
    if variant == "lasso":
        fit = lasso_path(W, y, replace(lasso, penalize_ar=True), n_ar=q)
    elif variant == "alasso":
        fit = adaptive_lasso(W, y, replace(lasso, penalize_ar=True), n_ar=q)
    elif variant == "ar_alasso":
        fit = adaptive_lasso(W, y, replace(lasso, penalize_ar=False), n_ar=q)
    else:
        raise ValueError(f"unknown lasso variant {variant!r}")
    beta = fit.coef
    q_hat = tuple(sorted(i + 1 for i in range(q) if beta[i] != 0.0))
    j_hat = tuple(sorted(design.label_of(c)
                         for c in range(q, design.n_candidates)
                         if beta[c] != 0.0))
    order = [i - 1 for i in q_hat] + [design.col_of(j, l) for (j, l) in j_hat]
    coef = beta[order]
    pred = W @ beta + fit.intercept
    rss = float(((y - pred) ** 2).sum())
    return SelectedModel(q_hat=q_hat, j_hat=j_hat, coef=coef,
                         sigma2_hat=rss / design.n_full, alpha_hat=None,
                         intercept=fit.intercept if lasso.intercept else None,
                         threshold_used=None, k_hat=0,
                         rank_deficient=not bool(fit.converged[fit.chosen]))
