import logging
import os
import time

import numpy as np
import pytest

from lagtabu import parallel
from lagtabu.candidates import TuneSettings, evaluate_serial
from lagtabu.graph import LaggedGraph, enumerate_neighbourhood
from lagtabu.parallel import Evaluator, _chunks, default_workers, evaluate_batch
from lagtabu.score import LocalScorer, ScoreConfig
from lagtabu.search import SearchConfig, learn
from lagtabu.synth import GenConfig, generate


def setup(n=5, T=300, seed=0):
    truth, ds = generate(GenConfig(n_vars=n, t_len=T, seed=seed, p_edge=0.25))
    scorer = LocalScorer(ds, ScoreConfig())
    return scorer, truth.graph.with_names(ds.names)


def test_empty_batch():
    scorer, g = setup()
    batch = evaluate_batch(scorer, g, [], workers=4)
    assert batch.results == () and batch.moves == ()


def test_chunks_cover_every_index_once():
    for n in range(0, 30):
        for parts in range(1, 6):
            idx = [k for a, b in _chunks(n, parts) for k in range(a, b)]
            assert idx == list(range(n))


def test_single_worker_is_serial():
    scorer, g = setup(seed=1)
    moves = enumerate_neighbourhood(g, 5)
    batch = evaluate_batch(scorer, g, moves, workers=1)
    assert list(batch.results) == evaluate_serial(LocalScorer(scorer.ds, scorer.cfg), g, moves,
                                                  TuneSettings())


def test_pool_matches_serial_per_candidate():
    scorer, g = setup(seed=2)
    moves = enumerate_neighbourhood(g, 5)
    serial = evaluate_serial(LocalScorer(scorer.ds, scorer.cfg), g, moves, TuneSettings())
    with Evaluator(scorer, TuneSettings(), workers=4) as ev:
        pooled = ev.evaluate(g, moves)
        again = ev.evaluate(g, moves)  # second batch reuses the warm pool
    assert pooled == serial and again == serial


def test_fallback_to_serial(monkeypatch, caplog):
    scorer, g = setup(seed=3)
    moves = enumerate_neighbourhood(g, 5)

    def boom(*args):
        raise RuntimeError("worker died")

    monkeypatch.setattr(parallel, "_eval_chunk", boom)
    with caplog.at_level(logging.WARNING, logger="lagtabu.parallel"):
        with Evaluator(scorer, TuneSettings(), workers=2) as ev:
            got = ev.evaluate(g, moves)
    assert got == evaluate_serial(LocalScorer(scorer.ds, scorer.cfg), g, moves, TuneSettings())
    assert "re-evaluating serially" in caplog.text


def test_learn_independent_of_worker_count():
    for seed in range(50):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 7))
        _, ds = generate(GenConfig(n_vars=n, t_len=300, seed=seed, p_edge=0.25))
        cfg = SearchConfig(max_tabu_iters=8)
        a = learn(ds, cfg)
        b = learn(ds, SearchConfig(max_tabu_iters=8, workers=4))
        assert [s.move for s in a.trace.steps] == [s.move for s in b.trace.steps]
        assert a.graph == b.graph and a.trace.best_score == b.trace.best_score


def test_worker_env(monkeypatch):
    monkeypatch.setenv(parallel.WORKERS_ENV, "3")
    assert default_workers() == 3
    monkeypatch.delenv(parallel.WORKERS_ENV)
    assert default_workers() == (os.cpu_count() or 1)


@pytest.mark.slow
@pytest.mark.skipif((os.cpu_count() or 1) < 2, reason="needs at least 2 cores")
def test_throughput_direction():
    _, ds = generate(GenConfig(n_vars=20, t_len=2000, seed=0))
    g = LaggedGraph(20, names=ds.names)
    moves = enumerate_neighbourhood(g, 5)

    def wall(workers):
        with Evaluator(LocalScorer(ds, ScoreConfig()), TuneSettings(), workers) as ev:
            ev.evaluate(g, moves[:2])  # start the pool outside the timed region
            t0 = time.perf_counter()
            ev.evaluate(g, moves)
            return time.perf_counter() - t0

    assert wall(4) < wall(1)
