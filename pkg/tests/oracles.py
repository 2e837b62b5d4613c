"""Dense brute-force references the fast implementations are checked against."""
import numpy as np


def projector(a: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the column span of a (pinv-based)."""
    if a.size == 0:
        return np.zeros((a.shape[0], a.shape[0]))
    return a @ np.linalg.pinv(a)


def residual_maker(a: np.ndarray) -> np.ndarray:
    return np.eye(a.shape[0]) - projector(a)


def ols(w: np.ndarray, y: np.ndarray):
    """Normal-equations (pinv) least squares: (coef, rss)."""
    coef = np.linalg.pinv(w.T @ w) @ (w.T @ y)
    resid = y - w @ coef
    return coef, float(resid @ resid)


def fsr_score(y: np.ndarray, active: np.ndarray, x: np.ndarray, n: int) -> float:
    m = residual_maker(active)
    num = abs(float(y @ m @ x)) / n
    den = np.sqrt(float(x @ m @ x) / n)
    return num / den if den > 0 else -np.inf


def oga_score(y: np.ndarray, active: np.ndarray, x: np.ndarray, n: int) -> float:
    m = residual_maker(active)
    num = abs(float(y @ m @ x)) / n
    den = np.sqrt(float(x @ x) / n)
    return num / den if den > 0 else -np.inf


def rss_of(y: np.ndarray, active: np.ndarray) -> float:
    r = residual_maker(active) @ y
    return float(r @ r)


def convolve_poly(*factors) -> np.ndarray:
    """Ascending-power polynomial product."""
    out = np.array([1.0])
    for f in factors:
        out = np.convolve(out, np.asarray(f, dtype=float))
    return out
