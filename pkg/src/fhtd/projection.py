"""Incremental least-squares engine over a lagged design.

``LagDesign`` materializes the candidate columns (AR lags of y plus lagged
exogenous series) over the common sample window ``t = rbar+1..n`` with
``rbar = max(max_j r_j, q)``.  ``ActiveFit`` maintains an orthonormal basis of
the active columns (modified Gram-Schmidt with one reorthogonalization pass,
suited to the nearly parallel unit-root lag columns) and serves the greedy
selection scores.

All ``n^{-1}`` prefactors use the full sample size n even though sums run
over the n - rbar window rows.
"""
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .errors import EmptyDesign, InsufficientData

# Relative squared-norm survival threshold after residualization; candidates
# below it are treated as collinear with the active set.
TOL_COLLINEAR = 1e-10


class LagDesign:
    """Candidate column universe for one dataset.

    Column ids 0..q-1 are the AR lags y_{t-1}..y_{t-q}; exogenous candidates
    (j, l) follow in (j, l)-lexicographic order, so the id order matches the
    tie-break order used by the greedy selectors.  With ``center=True`` every
    column and the response are demeaned over the sample window (the design
    used when an intercept is fitted afterwards on the raw data).
    """

    def __init__(self, y: np.ndarray, x: np.ndarray, q: int,
                 r: int | Sequence[int], center: bool = False):
        y = np.asarray(y, dtype=float)
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise ValueError("y must be (n,) and x must be (n, p)")
        n, p = x.shape
        if q < 0:
            raise ValueError("q must be nonnegative")
        r_arr = np.full(p, r, dtype=int) if np.isscalar(r) else np.asarray(r, dtype=int)
        if r_arr.shape != (p,) or np.any(r_arr < 0):
            raise ValueError("r must be a nonnegative int or length-p sequence")
        self.q = int(q)
        self.r = r_arr
        self.n_full = n
        self.rbar = int(max(r_arr.max() if p else 0, q))
        self.rows = n - self.rbar
        if self.rows < 1:
            raise EmptyDesign("no effective rows: n <= max lag")
        self.n_exo = int(r_arr.sum())
        if self.q + self.n_exo == 0:
            raise EmptyDesign("no candidate columns")
        self._y_full = y
        self._x_full = x
        self.center = center
        # exogenous id layout: block offsets per series
        self._offsets = self.q + np.concatenate(([0], np.cumsum(r_arr)))[:-1] if p else np.array([], dtype=int)
        self._cols = None
        self._col_means = None
        self._y_mean = 0.0
        y_w = y[self.rbar:]
        if center:
            self._y_mean = y_w.mean()
            y_w = y_w - self._y_mean
        self.y_window = y_w

    @property
    def n_candidates(self) -> int:
        return self.q + self.n_exo

    def col_of(self, j: int, l: int) -> int:
        """Column id of exogenous candidate x_{t-l, j}."""
        if not (1 <= j <= self.r.shape[0]) or not (1 <= l <= self.r[j - 1]):
            raise KeyError(f"no candidate ({j}, {l})")
        return int(self._offsets[j - 1] + (l - 1))

    def label_of(self, col: int):
        """('ar', i) for an AR lag id, else the exogenous (j, l) tuple."""
        if col < self.q:
            return ("ar", col + 1)
        k = int(np.searchsorted(self._offsets, col, side="right") - 1)
        return (k + 1, int(col - self._offsets[k]) + 1)

    def ar_ids(self) -> np.ndarray:
        return np.arange(self.q)

    def exo_ids(self) -> np.ndarray:
        return np.arange(self.q, self.n_candidates)

    def _materialize(self) -> np.ndarray:
        if self._cols is None:
            n, rbar = self.n_full, self.rbar
            cols = np.empty((self.rows, self.n_candidates))
            for i in range(1, self.q + 1):
                cols[:, i - 1] = self._y_full[rbar - i: n - i]
            for j in range(1, self.r.shape[0] + 1):
                for l in range(1, self.r[j - 1] + 1):
                    cols[:, self.col_of(j, l)] = self._x_full[rbar - l: n - l, j - 1]
            if self.center:
                self._col_means = cols.mean(axis=0)
                cols = cols - self._col_means
            self._cols = cols
        return self._cols

    def column(self, col: int) -> np.ndarray:
        return self._materialize()[:, col]

    def matrix(self, cols: Sequence[int]) -> np.ndarray:
        return self._materialize()[:, list(cols)]


class OlsResult(NamedTuple):
    coef: np.ndarray
    rss: float
    rank_deficient: bool


def ols_solve(design: LagDesign, cols: Sequence[int]) -> OlsResult:
    """Least-squares fit of the window response on the given columns.

    Rank-deficient sets are solved in the minimum-norm sense and flagged.
    """
    cols = list(cols)
    y = design.y_window
    if not cols:
        return OlsResult(np.zeros(0), float(y @ y), False)
    if design.rows < len(cols):
        raise InsufficientData("fewer rows than requested columns")
    w = design.matrix(cols)
    coef, _, rank, _ = np.linalg.lstsq(w, y, rcond=None)
    resid = y - w @ coef
    return OlsResult(coef, float(resid @ resid), rank < len(cols))


def min_eig_diag(design: LagDesign, j_set) -> float:
    """Smallest eigenvalue of n^{-1} sum_t w_t(J) w_t(J)^T.

    The regressor vector stacks all q AR lags with the exogenous candidates
    in J; the normalization uses the full sample size n.
    """
    ids = list(design.ar_ids()) + [design.col_of(j, l) for (j, l) in sorted(j_set)]
    if len(ids) > design.rows:
        raise InsufficientData("more regressors than window rows")
    w = design.matrix(ids)
    gram = (w.T @ w) / design.n_full
    return float(np.linalg.eigvalsh(gram)[0])


class ActiveFit:
    """Orthogonal-basis state of a growing active column set.

    Appending a collinear column (residual squared norm below
    ``TOL_COLLINEAR`` relative to the original) keeps it in ``active`` but
    contributes no basis vector; it is flagged in ``collinear``.  Scoring
    candidates does not mutate the fit.
    """

    def __init__(self, design: LagDesign):
        self.design = design
        self.active: list[int] = []
        self.collinear: list[bool] = []
        rows = design.rows
        self._basis = np.empty((rows, 0))
        self._yres = design.y_window.copy()
        self.rss = float(self._yres @ self._yres)
        # optional candidate tracking for vectorized path scoring
        self._tracked_ids: np.ndarray | None = None
        self._tracked_cols: np.ndarray | None = None
        self._tracked_res2: np.ndarray | None = None
        self._tracked_raw2: np.ndarray | None = None

    # -- basis maintenance ---------------------------------------------------
    def _project_out(self, v: np.ndarray) -> np.ndarray:
        b = self._basis
        if b.shape[1] == 0:
            return v.copy()
        u = v - b @ (b.T @ v)
        # one reorthogonalization pass keeps the basis usable with nearly
        # parallel unit-root lag columns
        return u - b @ (b.T @ u)

    def append(self, col: int) -> None:
        if col in self.active:
            raise ValueError(f"column {col} already active")
        v = self.design.column(col)
        u = self._project_out(v)
        norm2 = float(u @ u)
        raw2 = float(v @ v)
        self.active.append(col)
        if norm2 <= TOL_COLLINEAR * raw2 or raw2 == 0.0:
            self.collinear.append(True)
            return
        self.collinear.append(False)
        b_new = u / np.sqrt(norm2)
        self._basis = np.column_stack((self._basis, b_new))
        self._yres = self._yres - b_new * (b_new @ self._yres)
        self.rss = float(self._yres @ self._yres)
        if self._tracked_ids is not None:
            proj = self._tracked_cols.T @ b_new
            self._tracked_res2 = np.maximum(self._tracked_res2 - proj ** 2, 0.0)

    # -- candidate scoring ---------------------------------------------------
    def fsr_score(self, col: int) -> float:
        """n^{-1}|y'(I-P)x| / (n^{-1} x'(I-P)x)^{1/2}; -inf when collinear."""
        v = self.design.column(col)
        u = self._project_out(v)
        norm2 = float(u @ u)
        if norm2 <= TOL_COLLINEAR * float(v @ v) or norm2 == 0.0:
            return -np.inf
        n = self.design.n_full
        return abs(float(self._yres @ v)) / (np.sqrt(n) * np.sqrt(norm2))

    def oga_score(self, col: int) -> float:
        """As fsr_score but with the raw norm in the denominator.

        A candidate inside the active span scores ~0 here (the raw norm does
        not degenerate); the greedy path still skips such candidates via the
        tracking mask.
        """
        v = self.design.column(col)
        raw2 = float(v @ v)
        if raw2 == 0.0:
            return -np.inf
        n = self.design.n_full
        return abs(float(self._yres @ v)) / (np.sqrt(n) * np.sqrt(raw2))

    # -- vectorized scoring over a tracked candidate set ---------------------
    def track(self, ids: Sequence[int]) -> None:
        ids = np.asarray(list(ids), dtype=int)
        cols = self.design.matrix(ids)
        raw2 = np.einsum("ij,ij->j", cols, cols)
        res2 = raw2.copy()
        b = self._basis
        if b.shape[1]:
            proj = cols.T @ b
            res2 = np.maximum(raw2 - np.einsum("jk,jk->j", proj, proj), 0.0)
        self._tracked_ids = ids
        self._tracked_cols = cols
        self._tracked_raw2 = raw2
        self._tracked_res2 = res2

    def tracked_scores(self, kind: str) -> tuple[np.ndarray, np.ndarray]:
        """Scores for all tracked candidates; ineligible ones get -inf."""
        if self._tracked_ids is None:
            raise RuntimeError("no tracked candidates")
        numer = np.abs(self._tracked_cols.T @ self._yres)
        eligible = self._tracked_res2 > TOL_COLLINEAR * self._tracked_raw2
        denom2 = self._tracked_res2 if kind == "fsr" else self._tracked_raw2
        n = self.design.n_full
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = numer / (np.sqrt(n) * np.sqrt(denom2))
        scores[~eligible] = -np.inf
        return self._tracked_ids, scores

    def drop_tracked(self, col: int) -> None:
        keep = self._tracked_ids != col
        self._tracked_ids = self._tracked_ids[keep]
        self._tracked_cols = self._tracked_cols[:, keep]
        self._tracked_raw2 = self._tracked_raw2[keep]
        self._tracked_res2 = self._tracked_res2[keep]

    # -- diagnostics ----------------------------------------------------------
    def basis_orthogonality_error(self) -> float:
        b = self._basis
        if b.shape[1] == 0:
            return 0.0
        g = b.T @ b
        return float(np.max(np.abs(g - np.eye(g.shape[0]))))


def new_fit(design: LagDesign, initial: Sequence[int] = ()) -> ActiveFit:
    """Fit with the given initial columns appended one at a time."""
    fit = ActiveFit(design)
    for col in initial:
        fit.append(col)
    return fit
