import math

import numpy as np
import pytest
import yaml

from fhtd.dgp import (CovariateProcessSpec, DgpSpec, ErrorProcessSpec,
                      UnitRootSpec, builtin_spec, expand_characteristic,
                      simulate, _seasonal_unit_roots)
from fhtd.errors import UnknownTier

from oracles import convolve_poly


def _alpha_from_factors(*factors):
    return -convolve_poly(*factors)[1:]


class TestExpandCharacteristic:
    def test_single_unit_root(self):
        np.testing.assert_allclose(
            expand_characteristic(UnitRootSpec(a=1)), [1.0])

    def test_double_unit_root(self):
        np.testing.assert_allclose(
            expand_characteristic(UnitRootSpec(a=2)), [2.0, -1.0])

    def test_double_root_with_stable_factor(self):
        spec = UnitRootSpec(a=2, psi_coeffs=(0.4,))
        expected = _alpha_from_factors([1, -2, 1], [1, 0.4])
        np.testing.assert_allclose(expand_characteristic(spec), expected)
        np.testing.assert_allclose(expected, [1.6, -0.2, -0.4])

    def test_complex_pair_with_stable_factor(self):
        theta = 0.1
        spec = UnitRootSpec(a=1, complex_pairs=((theta, 1),),
                            psi_coeffs=(-0.3,))
        expected = _alpha_from_factors(
            [1, -1], [1, -2 * math.cos(theta), 1], [1, -0.3])
        np.testing.assert_allclose(expand_characteristic(spec), expected)

    def test_order_matches_factor_degrees(self):
        spec = UnitRootSpec(a=1, b=2, complex_pairs=((0.7, 2),),
                            psi_coeffs=(0.1, 0.05))
        assert expand_characteristic(spec).shape[0] == 1 + 2 + 4 + 2 == spec.order

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6])
    def test_seasonal_roots_give_pure_lag(self, k):
        # 1 - z^k expands to a single coefficient at lag k
        alpha = expand_characteristic(_seasonal_unit_roots(k))
        expected = np.zeros(k)
        expected[k - 1] = 1.0
        np.testing.assert_allclose(alpha, expected, atol=1e-12)


class TestSpecValidation:
    def test_bad_theta(self):
        with pytest.raises(ValueError):
            UnitRootSpec(complex_pairs=((math.pi, 1),))

    def test_unstable_psi(self):
        with pytest.raises(ValueError):
            UnitRootSpec(psi_coeffs=(-1.5,))

    def test_garch_stationarity(self):
        with pytest.raises(ValueError):
            ErrorProcessSpec.garch11(0.05, 0.5, 0.5)

    def test_unstable_covariate_ar(self):
        with pytest.raises(ValueError):
            CovariateProcessSpec.ar1_common_factor(3, 1.01, 1.0)
        with pytest.raises(ValueError):
            CovariateProcessSpec.arma_banded(3, (1.2,), (), 0.5, 2, 10.0)

    def test_beta_keys_checked(self):
        with pytest.raises(ValueError):
            DgpSpec(unit_root=UnitRootSpec(a=1),
                    error=ErrorProcessSpec.gaussian(),
                    covariates=CovariateProcessSpec.ar1_common_factor(2, 0.0, 0.0),
                    beta={(3, 1): 1.0}, n=50)

    def test_unknown_tier(self):
        with pytest.raises(UnknownTier):
            builtin_spec("ex41", (300, 100, 4))
        with pytest.raises(UnknownTier):
            builtin_spec("nonesuch", (200, 100, 4))


class TestBuiltinSpecs:
    def test_ex41_coefficients(self):
        spec = builtin_spec("ex41", (200, 100, 4))
        assert [spec.beta[(j, 1)] for j in range(1, 6)] == [3.0, 3.75, 4.5, 5.25, 6.0]
        assert [spec.beta[(j, 2)] for j in range(6, 11)] == [6.75, 7.5, 8.25, 9.0, 9.25]
        assert spec.error.kind == "iid_t" and spec.error.df == 6.0
        assert spec.covariates.rho == 0.8 and spec.covariates.factor_weight == 2.0

    def test_ex42_garch_parameters(self):
        for tier in ((200, 100, 4), (400, 200, 5), (800, 500, 6)):
            e = builtin_spec("ex42", tier).error
            assert (e.omega, e.alpha, e.beta) == (5e-2, 0.05, 0.9)

    def test_ex21_alpha(self):
        spec = builtin_spec("ex21", (500, 10), a=0.3)
        np.testing.assert_allclose(expand_characteristic(spec.unit_root),
                                   [1.3, -0.3])
        assert spec.beta == {}

    def test_ex_s5_shape(self):
        spec = builtin_spec("ex_s5", (800, 250, 4))
        ds = simulate(spec, 11)
        assert len(ds.true_j) == 8
        assert ds.alpha_true.shape[0] == 3
        np.testing.assert_allclose(ds.alpha_true, [1.6, -0.2, -0.4])
        assert (e := spec.error).omega == 5e-2 and e.alpha == 0.5 and e.beta == 0.1

    def test_roundtrip_serialization(self):
        spec = builtin_spec("ex42", (400, 200, 5))
        again = DgpSpec.from_dict(yaml.safe_load(yaml.safe_dump(spec.to_dict())))
        assert again == spec


class TestSimulate:
    def test_pure_random_walk_cumsums_errors(self):
        spec = DgpSpec(unit_root=UnitRootSpec(a=1),
                       error=ErrorProcessSpec.gaussian(),
                       covariates=CovariateProcessSpec.ar1_common_factor(1, 0.0, 0.0),
                       beta={}, n=4)
        ds = simulate(spec, 123)
        eps = np.random.default_rng(
            np.random.SeedSequence((123, 0, 0))).standard_normal(4)
        np.testing.assert_allclose(ds.y, np.cumsum(eps), rtol=0, atol=1e-12)

    def test_zero_beta_first_differences_recover_errors(self):
        spec = DgpSpec(unit_root=UnitRootSpec(a=1),
                       error=ErrorProcessSpec.gaussian(),
                       covariates=CovariateProcessSpec.ar1_common_factor(3, 0.5, 1.0),
                       beta={}, n=1000)
        ds = simulate(spec, 9)
        eps = np.random.default_rng(
            np.random.SeedSequence((9, 0, 0))).standard_normal(1000)
        recovered = np.diff(np.r_[0.0, ds.y])
        np.testing.assert_allclose(recovered, eps, rtol=0,
                                   atol=1e-9 * np.abs(ds.y).max())

    def test_ex41_recursion_recovers_errors(self):
        spec = builtin_spec("ex41", (400, 200, 5))
        ds = simulate(spec, 17)
        n = ds.n
        v = np.zeros(n)
        for (j, l), b in spec.beta.items():
            v[l:] += b * ds.x[: n - l, j - 1]
        m = ds.alpha_true.shape[0]
        z = ds.y.copy()
        for i in range(1, m + 1):
            z[i:] -= ds.alpha_true[i - 1] * ds.y[:-i]
        resid = z - v
        eps = np.random.default_rng(
            np.random.SeedSequence((17, 0, 0))).standard_t(6.0, size=n)
        np.testing.assert_allclose(resid, eps,
                                   atol=1e-9 * np.abs(eps).max(), rtol=0)

    def test_ex41_truth_sets(self):
        ds = simulate(builtin_spec("ex41", (200, 100, 4)), 2)
        assert ds.true_q == frozenset({1, 4, 6})
        assert len(ds.true_j) == 10
        assert ds.alpha_true.shape[0] == 6
        assert np.all(np.isfinite(ds.y)) and np.all(np.isfinite(ds.x))

    def test_determinism_bitwise(self):
        spec = builtin_spec("ex42", (200, 100, 4))
        a = simulate(spec, 99)
        b = simulate(spec, 99)
        assert a.y.tobytes() == b.y.tobytes()
        assert a.x.tobytes() == b.x.tobytes()

    def test_error_stream_independent_of_covariates(self):
        base = dict(unit_root=UnitRootSpec(a=1),
                    error=ErrorProcessSpec.iid_t(6.0), beta={}, n=300)
        small = DgpSpec(covariates=CovariateProcessSpec.ar1_common_factor(2, 0.0, 0.0), **base)
        wide = DgpSpec(covariates=CovariateProcessSpec.ar1_common_factor(50, 0.8, 2.0), **base)
        assert simulate(small, 5).y.tobytes() == simulate(wide, 5).y.tobytes()

    def test_garch_moment_guard(self):
        from scipy.stats import kurtosis

        from fhtd.dgp import _draw_errors
        rng = np.random.default_rng(0)
        eps = _draw_errors(ErrorProcessSpec.garch11(5e-2, 0.05, 0.9),
                           100_000, 500, rng)
        se = eps.std() / math.sqrt(eps.size)
        assert abs(eps.mean()) < 5 * se
        assert np.isfinite(kurtosis(eps))

    def test_ex41_covariate_cross_correlation(self):
        from fhtd.dgp import _draw_covariates
        rng = np.random.default_rng(1)
        x = _draw_covariates(CovariateProcessSpec.ar1_common_factor(3, 0.8, 2.0),
                             100_000, 500, rng)
        for i in range(3):
            for j in range(i + 1, 3):
                corr = np.corrcoef(x[:, i], x[:, j])[0, 1]
                assert abs(corr - 0.8) < 0.02
