"""Synthetic unit-root ARX data generators.

The dependent series follows

    y_t = sum_i alpha_i y_{t-i} + sum_{(j,l)} beta_l^(j) x_{t-l,j} + eps_t,

where ``1 - sum_i alpha_i z^i`` factors into unit-root terms
``(1-z)^a (1+z)^b prod_k (1 - 2 cos(theta_k) z + z^2)^{d_k}`` times a stable
polynomial ``psi(z)``.  Initial conditions are ``y_t = 0`` for ``t <= 0`` and
exogenous terms with ``t - l <= 0`` contribute zero; only the stationary
covariate and error recursions are warmed up with a discarded burn-in.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import NonFiniteSeries, NonStationaryCovariate, UnknownTier

# Divergence guard for covariate recursions.  Unit-root y grows polynomially
# and never approaches this at the sample sizes supported here.
OVERFLOW_GUARD = 1e12

_ROOT_TOL = 1e-8


def _assert_stable(poly_ascending: np.ndarray, what: str) -> None:
    """Check that all roots of the polynomial lie outside the unit circle."""
    coeffs = np.trim_zeros(np.asarray(poly_ascending, dtype=float), "b")
    if coeffs.size <= 1:
        return
    roots = np.roots(coeffs[::-1])
    if roots.size and np.min(np.abs(roots)) <= 1.0 + _ROOT_TOL:
        raise ValueError(f"{what} has a root on or inside the unit circle")


@dataclass(frozen=True)
class UnitRootSpec:
    """Factorized description of the autoregressive characteristic polynomial.

    ``a`` and ``b`` are the integration orders at +1 and -1, ``complex_pairs``
    holds ``(theta, d)`` for each conjugate unit-root pair at angle theta, and
    ``psi_coeffs`` are the degree-1.. coefficients of the stable factor
    ``psi(z) = 1 + a_1 z + ...`` (empty means ``psi = 1``).
    """

    a: int = 0
    b: int = 0
    complex_pairs: tuple[tuple[float, int], ...] = ()
    psi_coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("integration orders must be nonnegative")
        for theta, d in self.complex_pairs:
            if not 0.0 < theta < math.pi:
                raise ValueError("complex unit-root angle must lie in (0, pi)")
            if d <= 0:
                raise ValueError("complex pair multiplicity must be positive")
        if self.psi_coeffs:
            _assert_stable(np.r_[1.0, self.psi_coeffs], "psi(z)")

    @property
    def order(self) -> int:
        """Total AR order of the expanded polynomial."""
        d = self.a + self.b + 2 * sum(d for _, d in self.complex_pairs)
        return d + len(self.psi_coeffs)


def expand_characteristic(spec: UnitRootSpec) -> np.ndarray:
    """Expand the factorized polynomial into AR coefficients ``alpha_1.._m``.

    Returns alpha such that ``1 - sum_i alpha_i z^i`` equals the product of
    the unit-root factors and psi(z).
    """
    poly = np.array([1.0])
    for _ in range(spec.a):
        poly = np.convolve(poly, [1.0, -1.0])
    for _ in range(spec.b):
        poly = np.convolve(poly, [1.0, 1.0])
    for theta, d in spec.complex_pairs:
        for _ in range(d):
            poly = np.convolve(poly, [1.0, -2.0 * math.cos(theta), 1.0])
    if spec.psi_coeffs:
        poly = np.convolve(poly, np.r_[1.0, spec.psi_coeffs])
    return -poly[1:]


@dataclass(frozen=True)
class ErrorProcessSpec:
    """Innovation process for the dependent series.

    ``kind`` is one of ``gaussian`` (standard normal), ``iid_t`` (raw Student
    t, not variance-normalized) or ``garch11``.  ``stream`` selects an
    independent seed stream so several error processes can coexist.
    """

    kind: str
    df: float = 0.0
    omega: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    stream: int = 0

    def __post_init__(self):
        if self.kind == "iid_t":
            if self.df <= 0:
                raise ValueError("t distribution needs df > 0")
        elif self.kind == "garch11":
            if self.omega <= 0 or self.alpha < 0 or self.beta < 0:
                raise ValueError("garch11 needs omega > 0, alpha, beta >= 0")
            if self.alpha + self.beta >= 1:
                raise ValueError("garch11 needs alpha + beta < 1")
        elif self.kind != "gaussian":
            raise ValueError(f"unknown error process kind {self.kind!r}")

    @classmethod
    def gaussian(cls, stream: int = 0) -> "ErrorProcessSpec":
        return cls(kind="gaussian", stream=stream)

    @classmethod
    def iid_t(cls, df: float, stream: int = 0) -> "ErrorProcessSpec":
        return cls(kind="iid_t", df=df, stream=stream)

    @classmethod
    def garch11(cls, omega: float, alpha: float, beta: float,
                stream: int = 0) -> "ErrorProcessSpec":
        return cls(kind="garch11", omega=omega, alpha=alpha, beta=beta,
                   stream=stream)


@dataclass(frozen=True)
class CovariateProcessSpec:
    """Generator for the panel of exogenous candidate series.

    kinds
    -----
    ar1_common_factor
        ``x_{t,j} = rho x_{t-1,j} + factor_weight * w_t + v_{t,j}`` with
        independent standard normal ``w_t`` and ``v_{t,j}``; the common factor
        induces cross-sectional correlation.
    arma_banded
        ARMA(len(ar), len(ma)) series driven by ``w_t = A pi_t`` where A is a
        banded matrix ``A_ij = band_base^{|i-j|}`` for ``|i-j| <= band_width``
        and pi entries are iid Student t(innov_df).
    ma2_arch_pair
        Two-term MA over ``w_{t,j} = pi_{t,parity(j)} + v_{t,j}`` where the
        two parity-shared factors are independent ARCH(1) processes with
        ``h^2_t = arch_omega + arch_alpha * pi^2_{t-1}``.
    """

    kind: str
    p: int
    rho: float = 0.0
    factor_weight: float = 0.0
    ar_coeffs: tuple[float, ...] = ()
    ma_coeffs: tuple[float, ...] = ()
    band_base: float = 0.0
    band_width: int = 0
    innov_df: float = 0.0
    ma_odd: tuple[float, float] = (0.0, 0.0)
    ma_even: tuple[float, float] = (0.0, 0.0)
    arch_omega: float = 0.0
    arch_alpha: float = 0.0

    def __post_init__(self):
        if self.p < 0:
            raise ValueError("p must be nonnegative")
        if self.kind == "ar1_common_factor":
            _assert_stable(np.array([1.0, -self.rho]), "covariate AR(1)")
        elif self.kind == "arma_banded":
            _assert_stable(np.r_[1.0, -np.asarray(self.ar_coeffs)],
                           "covariate AR polynomial")
            if self.innov_df <= 0:
                raise ValueError("innov_df must be positive")
        elif self.kind == "ma2_arch_pair":
            if self.arch_omega <= 0 or not 0 <= self.arch_alpha < 1:
                raise ValueError("ARCH factor needs omega > 0, 0 <= alpha < 1")
        else:
            raise ValueError(f"unknown covariate process kind {self.kind!r}")

    @classmethod
    def ar1_common_factor(cls, p: int, rho: float,
                          factor_weight: float) -> "CovariateProcessSpec":
        return cls(kind="ar1_common_factor", p=p, rho=rho,
                   factor_weight=factor_weight)

    @classmethod
    def arma_banded(cls, p: int, ar_coeffs, ma_coeffs, band_base: float,
                    band_width: int, innov_df: float) -> "CovariateProcessSpec":
        return cls(kind="arma_banded", p=p, ar_coeffs=tuple(ar_coeffs),
                   ma_coeffs=tuple(ma_coeffs), band_base=band_base,
                   band_width=band_width, innov_df=innov_df)

    @classmethod
    def ma2_arch_pair(cls, p: int, ma_odd, ma_even, arch_omega: float,
                      arch_alpha: float) -> "CovariateProcessSpec":
        return cls(kind="ma2_arch_pair", p=p, ma_odd=tuple(ma_odd),
                   ma_even=tuple(ma_even), arch_omega=arch_omega,
                   arch_alpha=arch_alpha)


@dataclass(frozen=True)
class DgpSpec:
    """Complete generative description of one synthetic dataset."""

    unit_root: UnitRootSpec
    error: ErrorProcessSpec
    covariates: CovariateProcessSpec
    beta: dict[tuple[int, int], float] = field(default_factory=dict)
    n: int = 0
    burn_in: int = 500

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("n must be positive")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        for (j, l) in self.beta:
            if not (1 <= j <= self.covariates.p) or l < 1:
                raise ValueError(f"beta key {(j, l)} outside the covariate grid")

    def to_dict(self) -> dict:
        u = self.unit_root
        e = self.error
        c = self.covariates
        return {
            "unit_root": {"a": u.a, "b": u.b,
                          "complex_pairs": [list(pair) for pair in u.complex_pairs],
                          "psi_coeffs": list(u.psi_coeffs)},
            "error": {k: v for k, v in vars(e).items()},
            "covariates": {k: (list(v) if isinstance(v, tuple) else v)
                           for k, v in vars(c).items()},
            "beta": [[j, l, v] for (j, l), v in sorted(self.beta.items())],
            "n": self.n,
            "burn_in": self.burn_in,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DgpSpec":
        u = d["unit_root"]
        unit_root = UnitRootSpec(
            a=u.get("a", 0), b=u.get("b", 0),
            complex_pairs=tuple((float(t), int(k)) for t, k in u.get("complex_pairs", [])),
            psi_coeffs=tuple(u.get("psi_coeffs", ())))
        e = dict(d["error"])
        error = ErrorProcessSpec(**e)
        c = dict(d["covariates"])
        for key in ("ar_coeffs", "ma_coeffs", "ma_odd", "ma_even"):
            if key in c:
                c[key] = tuple(c[key])
        covariates = CovariateProcessSpec(**c)
        beta = {(int(j), int(l)): float(v) for j, l, v in d.get("beta", [])}
        return cls(unit_root=unit_root, error=error, covariates=covariates,
                   beta=beta, n=int(d["n"]), burn_in=int(d.get("burn_in", 500)))


@dataclass(frozen=True)
class Dataset:
    """One simulated sample together with the ground truth index sets."""

    y: np.ndarray
    x: np.ndarray
    true_q: frozenset[int]
    true_j: frozenset[tuple[int, int]]
    alpha_true: np.ndarray

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


def _draw_errors(spec: ErrorProcessSpec, n: int, burn_in: int,
                 rng: np.random.Generator) -> np.ndarray:
    if spec.kind == "gaussian":
        return rng.standard_normal(n)
    if spec.kind == "iid_t":
        return rng.standard_t(spec.df, size=n)
    # garch11: initialize at the unconditional variance and warm up
    total = n + burn_in
    z = rng.standard_normal(total)
    eps = np.empty(total)
    sigma2 = spec.omega / (1.0 - spec.alpha - spec.beta)
    for t in range(total):
        eps[t] = math.sqrt(sigma2) * z[t]
        sigma2 = spec.omega + spec.alpha * eps[t] ** 2 + spec.beta * sigma2
    return eps[burn_in:]


def _draw_arch1(n: int, omega: float, alpha: float,
                rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal(n)
    out = np.empty(n)
    h2 = omega / (1.0 - alpha)
    for t in range(n):
        out[t] = math.sqrt(h2) * g[t]
        h2 = omega + alpha * out[t] ** 2
    return out


def _draw_covariates(spec: CovariateProcessSpec, n: int, burn_in: int,
                     rng: np.random.Generator) -> np.ndarray:
    p = spec.p
    if p == 0:
        return np.zeros((n, 0))
    total = n + burn_in
    if spec.kind == "ar1_common_factor":
        w = rng.standard_normal(total)
        v = rng.standard_normal((total, p))
        drive = spec.factor_weight * w[:, None] + v
        x = lfilter([1.0], [1.0, -spec.rho], drive, axis=0)
    elif spec.kind == "arma_banded":
        pi = rng.standard_t(spec.innov_df, size=(total, p))
        offs = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
        band = np.where(offs <= spec.band_width,
                        spec.band_base ** offs, 0.0)
        w = pi @ band  # band is symmetric
        ma = np.r_[1.0, spec.ma_coeffs]
        ar = np.r_[1.0, -np.asarray(spec.ar_coeffs)]
        x = lfilter(ma, ar, w, axis=0)
    else:  # ma2_arch_pair
        pi_odd = _draw_arch1(total, spec.arch_omega, spec.arch_alpha, rng)
        pi_even = _draw_arch1(total, spec.arch_omega, spec.arch_alpha, rng)
        v = rng.standard_normal((total, p))
        w = np.empty((total, p))
        for j in range(1, p + 1):
            w[:, j - 1] = (pi_odd if j % 2 == 1 else pi_even) + v[:, j - 1]
        x = np.empty((total, p))
        for j in range(1, p + 1):
            c0, c1 = spec.ma_odd if j % 2 == 1 else spec.ma_even
            x[:, j - 1] = lfilter([c0, c1], [1.0], w[:, j - 1])
    x = x[burn_in:]
    if np.max(np.abs(x)) > OVERFLOW_GUARD:
        raise NonStationaryCovariate("covariate recursion diverged")
    return x


def simulate(spec: DgpSpec, seed: int) -> Dataset:
    """Generate one dataset; identical (spec, seed) give identical bytes.

    Errors and covariates use independent seed streams so the error draws do
    not depend on the covariate configuration.
    """
    err_rng = np.random.default_rng(
        np.random.SeedSequence((seed, 0, spec.error.stream)))
    cov_rng = np.random.default_rng(np.random.SeedSequence((seed, 1)))

    eps = _draw_errors(spec.error, spec.n, spec.burn_in, err_rng)
    x = _draw_covariates(spec.covariates, spec.n, spec.burn_in, cov_rng)

    alpha = expand_characteristic(spec.unit_root)
    m = alpha.shape[0]
    n = spec.n

    # exogenous contribution; x_{t-l,j} is zero for t - l <= 0
    v = np.zeros(n)
    for (j, l), b in spec.beta.items():
        if l < n:
            v[l:] += b * x[: n - l, j - 1]

    # y_t = sum_i alpha_i y_{t-i} + (v_t + eps_t) with y_t = 0 for t <= 0 is
    # an all-pole filter applied to the driving term
    if m:
        y = lfilter([1.0], np.r_[1.0, -alpha], v + eps)
    else:
        y = v + eps
    if not np.all(np.isfinite(y)):
        raise NonFiniteSeries("dependent series overflowed")

    true_q = frozenset(i + 1 for i in range(m) if alpha[i] != 0.0)
    true_j = frozenset(k for k, b in spec.beta.items() if b != 0.0)
    return Dataset(y=y, x=x, true_q=true_q, true_j=true_j, alpha_true=alpha)


# ---------------------------------------------------------------------------
# Built-in generators with the published coefficient vectors.

TIERS = {
    "ex41": ((200, 100, 4), (400, 200, 5), (800, 500, 6)),
    "ex42": ((200, 100, 4), (400, 200, 5), (800, 500, 6)),
    "ex_s5": ((800, 250, 4), (1000, 275, 5), (1500, 300, 6)),
}

_BETA_EX41 = {(1, 1): 3.0, (2, 1): 3.75, (3, 1): 4.5, (4, 1): 5.25,
              (5, 1): 6.0, (6, 2): 6.75, (7, 2): 7.5, (8, 2): 8.25,
              (9, 2): 9.0, (10, 2): 9.25}

_BETA_EX42 = {(1, 1): 0.82, (2, 1): -1.03, (3, 1): 1.92, (4, 1): -2.21,
              (5, 1): 2.42, (6, 2): -2.57, (7, 2): 3.28, (8, 2): -3.54,
              (9, 2): 3.72, (10, 2): -3.90}

_BETA_EXS5 = {(1, 1): -7.62, (1, 2): 6.72, (1, 3): -5.55, (1, 4): 3.77,
              (2, 1): 6.89, (2, 2): -6.18, (2, 3): 4.47, (2, 4): -3.10}


def _seasonal_unit_roots(k: int) -> UnitRootSpec:
    """Unit-root factorization of ``1 - z^k`` (all k-th roots of unity)."""
    pairs = tuple((2.0 * math.pi * j / k, 1) for j in range(1, (k + 1) // 2))
    return UnitRootSpec(a=1, b=1 if k % 2 == 0 else 0, complex_pairs=pairs)


def builtin_spec(name: str, tier, *, a: float = 0.3, k: int = 2,
                 burn_in: int = 500) -> DgpSpec:
    """Return the generative spec of a named example at a size tier.

    ``ex41``, ``ex42`` and ``ex_s5`` accept only their published
    ``(n, p, r)`` tiers.  ``ex21`` takes ``(n, p)`` with the AR(2) parameter
    ``a``; ``ex22`` takes ``n``; ``ex31`` takes ``n`` with the lag ``k``.
    """
    if name in ("ex41", "ex42", "ex_s5"):
        tier = tuple(tier)
        if tier not in TIERS[name]:
            raise UnknownTier(f"{name} is not defined at tier {tier}")
        n, p, _r = tier
        if name == "ex41":
            return DgpSpec(
                unit_root=UnitRootSpec(a=1, psi_coeffs=(0.0, 0.0, 0.0, -0.45, -0.45)),
                error=ErrorProcessSpec.iid_t(6.0),
                covariates=CovariateProcessSpec.ar1_common_factor(p, 0.8, 2.0),
                beta=dict(_BETA_EX41), n=n, burn_in=burn_in)
        if name == "ex42":
            return DgpSpec(
                unit_root=UnitRootSpec(complex_pairs=((0.1, 1),), psi_coeffs=(-0.3,)),
                error=ErrorProcessSpec.garch11(5e-2, 0.05, 0.9),
                covariates=CovariateProcessSpec.arma_banded(
                    p, ar_coeffs=(0.1, -0.7), ma_coeffs=(0.7,),
                    band_base=0.6, band_width=7, innov_df=13.0),
                beta=dict(_BETA_EX42), n=n, burn_in=burn_in)
        return DgpSpec(
            unit_root=UnitRootSpec(a=2, psi_coeffs=(0.4,)),
            error=ErrorProcessSpec.garch11(5e-2, 0.5, 0.1),
            covariates=CovariateProcessSpec.ma2_arch_pair(
                p, ma_odd=(0.8, 0.1), ma_even=(0.2, 0.6),
                arch_omega=1.0, arch_alpha=0.2),
            beta=dict(_BETA_EXS5), n=n, burn_in=burn_in)

    if name == "ex21":
        n, p = tier
        if not abs(a) < 1:
            raise ValueError("ex21 needs |a| < 1")
        # characteristic polynomial (1 - z)(1 - a z): alpha = (1 + a, -a)
        return DgpSpec(
            unit_root=UnitRootSpec(a=1, psi_coeffs=(-a,)),
            error=ErrorProcessSpec.gaussian(),
            covariates=CovariateProcessSpec.ar1_common_factor(p, 0.0, 0.0),
            beta={}, n=n, burn_in=burn_in)

    if name == "ex22":
        n = tier[0] if isinstance(tier, (tuple, list)) else int(tier)
        return DgpSpec(
            unit_root=UnitRootSpec(a=1),
            error=ErrorProcessSpec.gaussian(),
            covariates=CovariateProcessSpec.ar1_common_factor(1, 0.0, 0.0),
            beta={(1, 1): 1.0}, n=n, burn_in=burn_in)

    if name == "ex31":
        n = tier[0] if isinstance(tier, (tuple, list)) else int(tier)
        if k < 1:
            raise ValueError("ex31 needs k >= 1")
        return DgpSpec(
            unit_root=_seasonal_unit_roots(k),
            error=ErrorProcessSpec.gaussian(),
            covariates=CovariateProcessSpec.ar1_common_factor(0, 0.0, 0.0),
            beta={}, n=n, burn_in=burn_in)

    raise UnknownTier(f"unknown built-in generator {name!r}")
