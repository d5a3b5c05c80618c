import math

import numpy as np
import pytest

from lagtabu.graph import LaggedGraph, Move, MoveKind, apply_move, enumerate_neighbourhood
from lagtabu.score import (INADMISSIBLE, LocalScorer, ScoreCache, ScoreConfig, graph_summary,
                           heldout_loglik, lag_penalty, score_delta, score_graph, score_node)
from lagtabu.synth import GenConfig, generate

from conftest import B, C, lagged_pair, make_ds


def mixed_ds(n=5, T=300, seed=0):
    _, ds = generate(GenConfig(n_vars=n, t_len=T, p_edge=0.3, frac_binary=0.4, seed=seed))
    return ds


class TestScoreNode:
    def test_lag_one_has_no_penalty(self):
        assert lag_penalty([(0, 1), (1, 1)], 3.0) == 0

    def test_penalty_formula(self):
        assert lag_penalty([(0, 1), (1, 3), (2, 4)], 2.0) == 10

    def test_n_eff(self):
        ds = make_ds(np.random.default_rng(0).normal(size=(2, 100)))
        card = score_node(ds, 1, [(0, 6)], ScoreConfig(l_max=6))
        assert card.n_eff == 94

    def test_card_components_recompose(self):
        ds = mixed_ds()
        cfg = ScoreConfig(lam=1.5)
        for child, parents in [(0, [(1, 2), (3, 1)]), (4, [(0, 3)]), (2, [])]:
            c = score_node(ds, child, parents, cfg)
            assert c.local_score == 2 * c.log_lik - c.p * math.log(c.n_eff) - c.lag_penalty

    def test_param_count_by_kind(self):
        ds = make_ds(np.vstack([np.random.default_rng(0).normal(size=50),
                                np.arange(50) % 2]), kinds=[C, B])
        assert score_node(ds, 0, [(1, 1)], ScoreConfig()).p == 3
        assert score_node(ds, 1, [(0, 1)], ScoreConfig()).p == 2

    def test_inadmissible_is_sentinel(self):
        ds = make_ds(np.zeros((2, 8)))
        card = score_node(ds, 0, [(1, 1)], ScoreConfig())  # constant parent: rank deficient
        assert card.local_score == INADMISSIBLE and not card.admissible
        total, _ = score_graph(ds, LaggedGraph(2, [(1, 0, 1)]), ScoreConfig())
        assert total == INADMISSIBLE

    def test_lag_bounds_checked(self):
        with pytest.raises(ValueError):
            score_node(mixed_ds(), 0, [(1, 9)], ScoreConfig(l_max=5))

    def test_longer_lag_never_helps_the_penalty(self):
        ds = mixed_ds()
        cfg = ScoreConfig(lam=1.0)
        for lag in range(1, 5):
            a = score_node(ds, 0, [(1, lag), (2, 3)], cfg)
            b = score_node(ds, 0, [(1, lag + 1), (2, 3)], cfg)
            assert -b.lag_penalty <= -a.lag_penalty
            assert (a.n_eff != b.n_eff) == (lag + 1 > 3)


class TestScoreGraph:
    def test_empty_graph_sums_intercept_models(self):
        ds = mixed_ds(n=3)
        total, cards = score_graph(ds, LaggedGraph(3), ScoreConfig())
        assert total == sum(score_node(ds, j, [], ScoreConfig()).local_score for j in range(3))

    def test_one_child_differs(self):
        ds = mixed_ds()
        cfg = ScoreConfig()
        g1 = LaggedGraph(5, [(0, 1, 1), (2, 3, 2)])
        g2 = g1.with_parents(3, [(4, 1), (0, 2)])
        t1, c1 = score_graph(ds, g1, cfg)
        t2, c2 = score_graph(ds, g2, cfg)
        assert t2 - t1 == pytest.approx(c2[3].local_score - c1[3].local_score, abs=1e-9)
        assert c1[:3] == c2[:3]

    @pytest.mark.parametrize("seed", range(10))
    def test_total_is_sum_of_fresh_nodes(self, seed):
        rng = np.random.default_rng(seed)
        ds = mixed_ds(seed=seed)
        edges = [(i, j, int(rng.integers(1, 6))) for i in range(5) for j in range(5)
                 if rng.random() < 0.25]
        g = LaggedGraph(5, edges)
        total, _ = score_graph(ds, g, ScoreConfig())
        oracle = 0.0
        for j in range(5):
            oracle += score_node(ds, j, list(g.parents(j)), ScoreConfig()).local_score
        assert total == oracle


class TestScoreDelta:
    def test_add_touches_one_child(self):
        ds = mixed_ds()
        scorer = LocalScorer(ds, ScoreConfig())
        cache = ScoreCache(scorer, LaggedGraph(5))
        _, cards = score_delta(cache, Move(MoveKind.ADD, 0, 1))
        assert [c.child for c in cards] == [1]

    def test_reverse_touches_two_children(self):
        ds = mixed_ds()
        scorer = LocalScorer(ds, ScoreConfig())
        cache = ScoreCache(scorer, LaggedGraph(5, [(0, 1, 2)]))
        _, cards = score_delta(cache, Move(MoveKind.REVERSE, 0, 1))
        assert sorted(c.child for c in cards) == [0, 1]

    def test_random_move_sequences_match_full_rescore(self):
        worst = 0.0
        for seq in range(100):
            rng = np.random.default_rng(seq)
            n = int(rng.integers(2, 9))
            ds = mixed_ds(n=n, T=int(rng.integers(100, 501)), seed=seq)
            cfg = ScoreConfig(lam=float(rng.choice([0, 1, 2])), l_max=4)
            cache = ScoreCache(LocalScorer(ds, cfg), LaggedGraph(n, names=ds.names))
            for _ in range(15):
                moves = enumerate_neighbourhood(cache.graph, cfg.l_max)
                move = moves[int(rng.integers(len(moves)))]
                delta, cards = score_delta(cache, move)
                if delta == INADMISSIBLE:
                    continue
                before = cache.total
                cache.commit(apply_move(cache.graph, move, cfg.l_max), cards)
                cache.check()
                full, _ = score_graph(ds, cache.graph, cfg)
                worst = max(worst, abs(cache.total - full), abs(before + delta - full))
        assert worst < 1e-9


def test_score_is_not_equivalence_invariant():
    ds = lagged_pair(T=1000)
    cfg = ScoreConfig()
    forward, _ = score_graph(ds, LaggedGraph(2, [(0, 1, 1)]), cfg)
    backward, _ = score_graph(ds, LaggedGraph(2, [(1, 0, 1)]), cfg)
    assert forward > backward


def test_row_count_effect_scales_with_log_units():
    # log L is summed over the child's own rows, so rescaling the data by c moves the
    # score gap between a lag-5 edge (T-5 rows) and no edge (T rows) by exactly 2*5*log(c)
    x = np.random.default_rng(4).standard_normal((2, 300))
    cfg = ScoreConfig()

    def gap(scale):
        ds = make_ds(scale * x)
        return score_node(ds, 1, [(0, 5)], cfg).local_score - score_node(ds, 1, [], cfg).local_score

    assert gap(10.0) - gap(1.0) == pytest.approx(10 * math.log(10.0), abs=1e-8)


def test_heldout_prefers_true_edge():
    ds = lagged_pair(T=600)
    cfg = ScoreConfig()
    good = heldout_loglik(ds, LaggedGraph(2, [(0, 1, 1)]), 480, cfg)
    empty = heldout_loglik(ds, LaggedGraph(2), 480, cfg)
    assert good > empty


def test_summary_layout():
    ds = mixed_ds()
    g = LaggedGraph(5, [(0, 1, 1), (2, 3, 3), (4, 4, 3)])
    total, cards = score_graph(ds, g, ScoreConfig())
    s = graph_summary(g, cards)
    assert s["total_score"] == total
    assert s["lag_histogram"] == {"1": 1, "3": 2}
    assert s["fraction_lag_gt_1"] == pytest.approx(2 / 3)
    assert s["total_score"] == pytest.approx(s["bic_2ll_minus_plogn"] - s["lag_penalty"])
