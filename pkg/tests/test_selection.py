import math

import numpy as np
import pytest

import oracles
from fhtd.dgp import Dataset, builtin_spec, simulate
from fhtd.errors import EmptyPath, InsufficientData
from fhtd.selection import (FhtdConfig, SelectionPath, ddt, ddt_threshold,
                            default_q, fhtd_select, fhtd_select_with_intercept,
                            forecast_next, fsr_path, hdic, hdic_stop,
                            make_design, trim)


def noise_dataset(rng, n=120, p=4, walk=True):
    y = rng.standard_normal(n)
    if walk:
        y = y.cumsum()
    x = rng.standard_normal((n, p))
    return Dataset(y=y, x=x, true_q=frozenset(), true_j=frozenset(),
                   alpha_true=np.zeros(0))


def planted_dataset(rng, n=120, p=4, signal_col=3, beta=5.0, noise=1e-3):
    """y_t = y_{t-1} + beta x_{t-1,signal} + tiny noise."""
    x = rng.standard_normal((n, p))
    y = np.zeros(n)
    for t in range(1, n):
        y[t] = y[t - 1] + beta * x[t - 1, signal_col - 1] \
            + noise * rng.standard_normal()
    return Dataset(y=y, x=x, true_q=frozenset({1}),
                   true_j=frozenset({(signal_col, 1)}),
                   alpha_true=np.array([1.0]))


class TestHdic:
    def test_zero_size_zero_log(self):
        assert hdic(100, 100.0, 0, p_star=400) == 0.0

    def test_arithmetic_example(self):
        val = hdic(100, 100.0 * math.e, 3, p_star=400, c=0.5, eta=2.0)
        np.testing.assert_allclose(val, 130.0, rtol=1e-12)

    def test_monotone_in_rss(self):
        assert hdic(50, 2.0, 3, w=1.0) > hdic(50, 1.0, 3, w=1.0)

    def test_zero_rss_sentinel(self):
        assert hdic(50, 0.0, 3, w=1.0) == -np.inf

    def test_default_q(self):
        assert default_q(200) == 7
        assert default_q(400) == 8
        assert default_q(800) == 10


class TestHdicStop:
    def _path(self, values):
        k = len(values)
        return SelectionPath(list(range(k)), [("x", i) for i in range(k)],
                             [0.0] * k, [1.0] * k, list(values), q=2, w=1.0,
                             force_ar=True)

    def test_decreasing_takes_last(self):
        assert hdic_stop(self._path([5.0, 4.0, 3.0, 2.0])) == 4

    def test_tie_takes_first_minimum(self):
        assert hdic_stop(self._path([5.0, 3.0, 4.0, 3.0])) == 2

    def test_empty_raises(self):
        with pytest.raises(EmptyPath):
            hdic_stop(self._path([]))


class TestFsrPath:
    def test_planted_signal_found_first(self):
        rng = np.random.default_rng(0)
        ds = planted_dataset(rng, n=60, p=4, signal_col=3)
        cfg = FhtdConfig(r=1, q=2, k_max=3)
        path = fsr_path(ds, cfg)
        assert path.labels[0] == (3, 1)
        # brute force: argmax over all candidate scores after the AR block
        design = make_design(ds, cfg)
        active = design.matrix(design.ar_ids())
        scores = [oracles.fsr_score(design.y_window, active,
                                    design.column(c), design.n_full)
                  for c in design.exo_ids()]
        assert design.label_of(int(design.exo_ids()[np.argmax(scores)])) == (3, 1)

    def test_noise_path_exists_and_hdic_recorded(self):
        rng = np.random.default_rng(1)
        ds = noise_dataset(rng, n=140, p=5)
        cfg = FhtdConfig(r=2, q=3, k_max=8)
        path = fsr_path(ds, cfg)
        assert len(path) == 8
        assert all(np.isfinite(path.hdic))
        assert np.all(np.diff(path.rss) <= 1e-9)
        assert hdic_stop(path) <= 8

    def test_insufficient_rows(self):
        rng = np.random.default_rng(2)
        ds = noise_dataset(rng, n=30, p=3)
        with pytest.raises(InsufficientData):
            fsr_path(ds, FhtdConfig(r=1, q=2, k_max=40))

    def test_screening_ex41(self):
        cfg = FhtdConfig(r=5)
        hits = 0
        for seed in range(5):
            ds = simulate(builtin_spec("ex41", (400, 200, 5)), seed)
            path = fsr_path(ds, cfg)
            hits += set(ds.true_j) <= set(path.labels)
        assert hits == 5


class TestTrim:
    def test_keeps_signal_drops_noise(self):
        rng = np.random.default_rng(3)
        ds = planted_dataset(rng, n=100, p=5, signal_col=2, beta=4.0,
                             noise=0.5)
        cfg = FhtdConfig(r=1, q=2, k_max=4)
        j_khat = [(2, 1), (4, 1)]  # signal plus a pure-noise column
        kept = trim(ds, cfg, j_khat)
        assert kept == ((2, 1),)
        # oracle check of both leave-one-out comparisons
        design = make_design(ds, cfg)
        n, w = design.n_full, 0.5 * design.n_exo ** 0.5
        ids = list(design.ar_ids()) + [design.col_of(j, l) for j, l in j_khat]
        rss_full = oracles.rss_of(design.y_window, design.matrix(ids))
        h_full = hdic(n, rss_full, len(ids), w=w)
        for lab in j_khat:
            reduced = [c for c in ids if c != design.col_of(*lab)]
            h_loo = hdic(n, oracles.rss_of(design.y_window,
                                           design.matrix(reduced)),
                         len(reduced), w=w)
            assert (h_loo > h_full) == (lab in kept)

    def test_empty_set(self):
        rng = np.random.default_rng(4)
        ds = noise_dataset(rng)
        assert trim(ds, FhtdConfig(r=1, q=2), []) == ()

    def test_singleton_compared_against_ar_only(self):
        rng = np.random.default_rng(5)
        strong = planted_dataset(rng, n=100, p=3, signal_col=1, beta=6.0,
                                 noise=0.5)
        cfg = FhtdConfig(r=1, q=2, k_max=2)
        assert trim(strong, cfg, [(1, 1)]) == ((1, 1),)
        pure_noise = noise_dataset(rng, n=100, p=3)
        assert trim(pure_noise, cfg, [(2, 1)]) == ()


class TestDdt:
    def test_threshold_arithmetic(self):
        cfg = FhtdConfig(r=1, d=0.5)
        got = ddt_threshold(cfg, n=200, q=7, s0=10, s0_under=10)
        np.testing.assert_allclose(got, 0.5 * math.sqrt(17) / math.sqrt(200),
                                   rtol=1e-12)
        assert abs(got - 0.1458) < 5e-4

    def test_threshold_empty_exo_uses_joint_branch(self):
        cfg = FhtdConfig(r=1, d=0.5)
        got = ddt_threshold(cfg, n=400, q=8, s0=0, s0_under=0)
        np.testing.assert_allclose(got, 0.5 * math.sqrt(8) / math.sqrt(400))
        assert got > 0

    def test_theoretical_mode(self):
        cfg = FhtdConfig(r=1, threshold_mode="theoretical", d_tilde=2.0,
                         eta=2.0)
        got = ddt_threshold(cfg, n=400, q=8, s0=4, s0_under=4)
        core = min(math.sqrt(12), math.sqrt(4) * 8 ** 0.5)
        expected = max(8 ** 1.5 / 20.0, core) / 20.0 * 2.0
        np.testing.assert_allclose(got, expected, rtol=1e-12)

    def test_selection_by_magnitude(self):
        rng = np.random.default_rng(6)
        ds = planted_dataset(rng, n=200, p=3, signal_col=1, beta=5.0,
                             noise=0.3)
        cfg = FhtdConfig(r=1, q=4)
        q_hat, alpha_hat, thr = ddt(ds, cfg, [(1, 1)])
        assert thr > 0
        assert set(q_hat) == {i + 1 for i in range(4) if abs(alpha_hat[i]) >= thr}
        assert 1 in q_hat  # the unit root coefficient survives

    def test_monotone_in_d(self):
        rng = np.random.default_rng(7)
        ds = simulate(builtin_spec("ex41", (200, 100, 4)), 3)
        prev = None
        for d_val in (0.1, 0.3, 0.5, 0.9, 1.5):
            cfg = FhtdConfig(r=4, d=d_val)
            q_hat, _, _ = ddt(ds, cfg, sorted(ds.true_j))
            if prev is not None:
                assert set(q_hat) <= prev
            prev = set(q_hat)


class TestFhtdSelect:
    def test_pure_ar_dataset(self):
        rng = np.random.default_rng(8)
        ds = noise_dataset(rng, n=200, p=2, walk=True)
        model = fhtd_select(ds, FhtdConfig(r=1, k_max=5))
        assert model.j_hat == () or len(model.j_hat) <= 1
        assert 1 in model.q_hat  # random walk keeps its first lag

    def test_ex41_recovery(self):
        ds = simulate(builtin_spec("ex41", (400, 200, 5)), 21)
        model = fhtd_select(ds, FhtdConfig(r=5))
        assert set(model.q_hat) == set(ds.true_q)
        assert set(model.j_hat) == set(ds.true_j)
        assert model.threshold_used > 0
        assert model.sigma2_hat > 0

    def test_path_scale_invariance(self):
        rng = np.random.default_rng(9)
        for trial in range(20):
            ds = noise_dataset(rng, n=90 + int(rng.integers(0, 40)), p=5)
            cfg = FhtdConfig(r=2, q=2, k_max=6)
            base_path = fsr_path(ds, cfg)
            base_model = fhtd_select(ds, cfg)
            x2 = ds.x.copy()
            col = int(rng.integers(0, 5))
            x2[:, col] *= float(rng.uniform(0.01, 100.0))
            ds2 = Dataset(y=ds.y, x=x2, true_q=ds.true_q, true_j=ds.true_j,
                          alpha_true=ds.alpha_true)
            path2 = fsr_path(ds2, cfg)
            model2 = fhtd_select(ds2, cfg)
            assert base_path.labels == path2.labels
            assert base_model.q_hat == model2.q_hat
            assert base_model.j_hat == model2.j_hat

    def test_sure_screening_overwhelming_signal(self):
        rng = np.random.default_rng(10)
        ds = planted_dataset(rng, n=80, p=6, signal_col=4, beta=50.0,
                             noise=1e-4)
        path = fsr_path(ds, FhtdConfig(r=1, q=2, k_max=3))
        assert path.labels[0] == (4, 1)

    def test_trim_subset_of_path_prefix(self):
        for seed in range(4):
            ds = simulate(builtin_spec("ex41", (200, 100, 4)), seed + 40)
            cfg = FhtdConfig(r=4)
            path = fsr_path(ds, cfg)
            k_hat = hdic_stop(path)
            kept = trim(ds, cfg, path.labels[:k_hat])
            assert set(kept) <= set(path.labels[:k_hat])

    def test_determinism(self):
        ds = simulate(builtin_spec("ex42", (200, 100, 4)), 5)
        cfg = FhtdConfig(r=4)
        a = fhtd_select(ds, cfg)
        b = fhtd_select(ds, cfg)
        assert a.q_hat == b.q_hat and a.j_hat == b.j_hat
        np.testing.assert_array_equal(a.coef, b.coef)


class TestIntercept:
    def _offset_dataset(self, rng, offset=250.0):
        n, p = 150, 3
        x = rng.standard_normal((n, p))
        y = np.zeros(n)
        for t in range(1, n):
            y[t] = 0.5 * y[t - 1] + 2.0 * x[t - 1, 0] + rng.standard_normal()
        return Dataset(y=y + offset, x=x, true_q=frozenset({1}),
                       true_j=frozenset({(1, 1)}), alpha_true=np.array([0.5]))

    def test_offset_absorbed(self):
        rng = np.random.default_rng(11)
        ds = self._offset_dataset(rng)
        cfg = FhtdConfig(r=1, q=3, k_max=4)
        model = fhtd_select_with_intercept(ds, cfg)
        assert model.intercept is not None
        assert (1, 1) in model.j_hat
        pred = forecast_next(model, ds.y, ds.x)
        assert abs(pred - ds.y[-1]) < 30.0  # prediction on the raw scale

    def test_shift_leaves_selection_unchanged(self):
        rng = np.random.default_rng(12)
        ds = self._offset_dataset(rng, offset=0.0)
        cfg = FhtdConfig(r=1, q=3, k_max=4)
        base = fhtd_select_with_intercept(ds, cfg)
        shifted = Dataset(y=ds.y + 77.0, x=ds.x + 5.0, true_q=ds.true_q,
                          true_j=ds.true_j, alpha_true=ds.alpha_true)
        moved = fhtd_select_with_intercept(shifted, cfg)
        assert base.q_hat == moved.q_hat and base.j_hat == moved.j_hat

    def test_housing_model_shape_accepted(self):
        rng = np.random.default_rng(13)
        n, p, r, q = 150, 50, 18, 18
        x = rng.standard_normal((n, p))
        y = rng.standard_normal(n).cumsum() + 40.0
        ds = Dataset(y=y, x=x, true_q=frozenset(), true_j=frozenset(),
                     alpha_true=np.zeros(0))
        cfg = FhtdConfig(r=r, q=q, k_max=40)
        design = make_design(ds, cfg)
        assert design.n_candidates == 918
        model = fhtd_select_with_intercept(ds, cfg)
        assert model.intercept is not None
