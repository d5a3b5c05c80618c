import math

import numpy as np
import pytest
from scipy import stats

from lagtabu.dataset import VariableKind
from lagtabu.graph import LaggedGraph
from lagtabu.synth import (GenConfig, GroundTruth, LagMode, MissingMode, SweepSpec,
                           apply_missingness, generate, generate_truth, mean_metric, run_sweep,
                           simulate, summarize, trial_seed)

C, B = VariableKind.CONTINUOUS, VariableKind.BINARY


class TestTruth:
    def test_no_edges(self):
        assert len(generate_truth(GenConfig(p_edge=0.0)).graph) == 0

    def test_all_edges(self):
        g = generate_truth(GenConfig(n_vars=3, p_edge=1.0)).graph
        assert len(g) == 9 and all(g.has_edge(i, j) for i in range(3) for j in range(3))

    def test_edge_count_binomial(self):
        n, p, seeds = 8, 0.15, 200
        total = sum(len(generate_truth(GenConfig(n_vars=n, p_edge=p, seed=s)).graph)
                    for s in range(seeds))
        m = seeds * n * n
        assert abs(total - m * p) <= 3 * math.sqrt(m * p * (1 - p))

    @pytest.mark.parametrize("mode,allowed", [(LagMode.SHORT, {1, 2}), (LagMode.LONG, {4, 5})])
    def test_lag_ranges(self, mode, allowed):
        g = generate_truth(GenConfig(n_vars=6, p_edge=0.5, lag_mode=mode, l_max=5)).graph
        assert {e.lag for e in g.edges()} <= allowed

    def test_coefficients_and_kinds(self):
        t = generate_truth(GenConfig(n_vars=10, p_edge=0.5, frac_binary=0.25, seed=3))
        assert t.kinds[:3] == (B, B, B) and set(t.kinds[3:]) == {C}
        assert all(0.5 <= abs(b) <= 1.5 for b in t.coefficients.values())

    def test_phi_self_edges(self):
        t = generate_truth(GenConfig(n_vars=5, p_edge=0.3, phi=0.6, frac_binary=0.4, seed=1))
        for i in range(5):
            if t.kinds[i] is C:
                assert t.graph.lag(i, i) == 1 and t.coefficients[(i, i)] == 0.6

    def test_confounders_wiring(self):
        t = generate_truth(GenConfig(n_vars=5, n_confounders=3, seed=2))
        assert len(t.confounders) == 3
        for c in t.confounders:
            a, b = c.targets
            assert a != b and 0 <= a < 5 and 0 <= b < 5


class TestSimulate:
    def test_single_edge_correlation(self):
        # binary driver x, continuous y_t = x_{t-2} + N(0, 0.01^2)
        cfg = GenConfig(n_vars=2, t_len=2000, noise_sd=0.01, frac_binary=0.5, seed=4)
        truth = GroundTruth(LaggedGraph(2, [(0, 1, 2)], ["x", "y"]), (B, C),
                            {(0, 1): 1.0}, np.zeros(2))
        ds = simulate(truth, cfg)
        x, y = ds.values
        assert np.corrcoef(x[:-2], y[2:])[0, 1] > 0.95

    def test_binary_means(self):
        cfg = GenConfig(n_vars=4, t_len=5000, p_edge=0.0, frac_binary=1.0, seed=5)
        truth, ds = generate(cfg)
        for j in range(4):
            p = 1 / (1 + math.exp(-truth.intercepts[j]))
            assert set(np.unique(ds.values[j])) <= {0.0, 1.0}
            assert abs(ds.values[j].mean() - p) <= 3 * math.sqrt(p * (1 - p) / cfg.t_len)

    def test_white_noise_autocorrelation(self):
        cfg = GenConfig(n_vars=3, t_len=4000, p_edge=0.0, frac_binary=0.0, seed=6)
        _, ds = generate(cfg)
        for v in ds.values:
            r = np.corrcoef(v[:-1], v[1:])[0, 1]
            assert abs(r) <= 3 / math.sqrt(cfg.t_len)

    def test_reproducible(self):
        cfg = GenConfig(n_vars=5, t_len=300, n_confounders=1, missing_mode=MissingMode.MCAR,
                        missing_rate=0.1, seed=7)
        (t1, d1), (t2, d2) = generate(cfg), generate(cfg)
        assert t1.graph == t2.graph and t1.coefficients == t2.coefficients
        assert np.array_equal(d1.values, d2.values, equal_nan=True)
        assert np.array_equal(d1.missing, d2.missing)

    def test_confounders_stay_hidden(self):
        cfg = GenConfig(n_vars=4, t_len=300, n_confounders=2, seed=8)
        truth, ds = generate(cfg)
        assert ds.N == 4 and truth.graph.n_vars == 4
        assert np.all(np.isfinite(ds.values))

    def test_stability_guard_shrinks(self):
        cfg = GenConfig(n_vars=6, t_len=300, p_edge=1.0, frac_binary=0.0, seed=9)
        truth, ds = generate(cfg)
        assert truth.coef_scale < 1.0
        assert np.all(np.abs(ds.values) <= 1e6)


class TestMissingness:
    def test_zero_rate(self):
        cfg = GenConfig(n_vars=3, t_len=100, missing_mode=MissingMode.MCAR, missing_rate=0.0)
        _, ds = generate(cfg)
        assert not ds.missing.any()

    def test_mcar_rate(self):
        cfg = GenConfig(n_vars=10, t_len=1000, missing_mode=MissingMode.MCAR,
                        missing_rate=0.2, seed=1)
        _, ds = generate(cfg)
        m = ds.missing.size
        assert abs(ds.missing.mean() - 0.2) <= 3 * math.sqrt(0.2 * 0.8 / m)

    def test_mar_depends_on_donor(self):
        cfg = GenConfig(n_vars=2, t_len=20000, p_edge=0.0, frac_binary=0.0,
                        missing_mode=MissingMode.MAR, missing_rate=0.2, seed=2)
        truth = generate_truth(cfg)
        full = simulate(truth, cfg)
        ds = apply_missingness(full, cfg)
        assert abs(ds.missing.mean() - 0.2) <= 0.01
        # with two variables each target's donor is the other one
        r, p = stats.pointbiserialr(ds.missing[1, 1:], full.values[0, :-1])
        assert r > 0 and p < 0.01


class TestSweep:
    def test_trial_seeds_distinct(self):
        seeds = {trial_seed(0, s, k) for s in range(5) for k in range(5)}
        assert len(seeds) == 25

    def test_small_sweep(self):
        base = GenConfig(n_vars=4, t_len=300)
        spec = SweepSpec("t", "t_len", ("200", "400"), base, n_trials=2)
        trials = run_sweep(spec)
        assert [(t.setting, t.trial) for t in trials] == [(0, 0), (0, 1), (1, 0), (1, 1)]
        assert all(t.ok for t in trials)
        rows = summarize(trials)
        assert [r["value"] for r in rows] == [200, 400]
        assert rows[0]["f1_mean"] == pytest.approx(mean_metric(trials, 200, "f1"))

    def test_failed_trials_recorded(self, monkeypatch):
        import lagtabu.synth as synth

        def bad(*a, **k):
            raise RuntimeError("boom")

        monkeypatch.setattr(synth, "run_trial", bad)
        trials = run_sweep(SweepSpec("t", "t_len", (300,), GenConfig(n_vars=3), n_trials=2))
        assert not any(t.ok for t in trials) and "boom" in trials[0].error
        assert summarize(trials)[0]["n_failed"] == 2

    def test_bad_factor(self):
        with pytest.raises(ValueError):
            SweepSpec("x", "colour", (1,))
