"""Process-pool evaluation of candidate moves against a shared read-only dataset.

The data matrix lives in a ``multiprocessing.shared_memory`` block that each
worker maps read-only. Workers receive the current graph and a contiguous
chunk of the move list, score every move exactly as the serial path does and
return plain candidates; selection happens back on the search thread.
"""

from __future__ import annotations

import logging
import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from multiprocessing import shared_memory

import numpy as np

from .candidates import Candidate, TuneSettings, evaluate_serial
from .dataset import TimeSeriesDataset
from .graph import LaggedGraph, Move
from .score import LocalScorer

log = logging.getLogger(__name__)

WORKERS_ENV = "LAGTABU_WORKERS"


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class CandidateBatch:
    snapshot_id: int
    moves: tuple[Move, ...]
    results: tuple[Candidate, ...]


# --- worker side ---------------------------------------------------------

_worker: dict = {}


def _init_worker(shm_name, shape, names, kinds, score_cfg, settings):
    shm = shared_memory.SharedMemory(name=shm_name)
    values = np.ndarray(shape, dtype=np.float64, buffer=shm.buf)
    values.setflags(write=False)
    ds = TimeSeriesDataset(names, kinds, values, np.zeros(shape, dtype=bool))
    _worker["shm"] = shm  # keep the mapping alive
    _worker["scorer"] = LocalScorer(ds, score_cfg)
    _worker["settings"] = settings


def _eval_chunk(n_vars, edges, offset, moves):
    graph = LaggedGraph(n_vars, edges)
    return evaluate_serial(_worker["scorer"], graph, moves, _worker["settings"], offset)


def _chunks(n: int, parts: int) -> list[tuple[int, int]]:
    """Static contiguous partition of ``range(n)`` into at most ``parts`` slices."""
    parts = max(1, min(parts, n))
    base, extra = divmod(n, parts)
    out, start = [], 0
    for k in range(parts):
        stop = start + base + (1 if k < extra else 0)
        out.append((start, stop))
        start = stop
    return out


class Evaluator:
    """Scores candidate lists serially (``workers=1``) or on a process pool.

    Use as a context manager so the pool and shared block are released.
    """

    def __init__(self, scorer: LocalScorer, settings: TuneSettings, workers: int = 1):
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.scorer = scorer
        self.settings = settings
        self.workers = workers
        self._pool = None
        self._shm = None
        self._batches = 0

    def _start(self):
        ds = self.scorer.ds
        self._shm = shared_memory.SharedMemory(create=True, size=max(ds.values.nbytes, 1))
        buf = np.ndarray(ds.values.shape, dtype=np.float64, buffer=self._shm.buf)
        buf[:] = ds.values
        methods = mp.get_all_start_methods()
        ctx = mp.get_context("fork" if "fork" in methods else "spawn")
        self._pool = ProcessPoolExecutor(
            max_workers=self.workers, mp_context=ctx, initializer=_init_worker,
            initargs=(self._shm.name, ds.values.shape, ds.names, ds.kinds,
                      self.scorer.cfg, self.settings))

    def close(self):
        if self._pool is not None:
            self._pool.shutdown(wait=True, cancel_futures=True)
            self._pool = None
        if self._shm is not None:
            self._shm.close()
            self._shm.unlink()
            self._shm = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def evaluate(self, graph: LaggedGraph, moves: list[Move]) -> list[Candidate]:
        return list(self.evaluate_batch(graph, moves).results)

    def evaluate_batch(self, graph: LaggedGraph, moves: list[Move]) -> CandidateBatch:
        self._batches += 1
        moves = list(moves)
        if self.workers == 1 or len(moves) < 2:
            results = evaluate_serial(self.scorer, graph, moves, self.settings)
        else:
            results = self._evaluate_parallel(graph, moves)
        return CandidateBatch(self._batches, tuple(moves), tuple(results))

    def _evaluate_parallel(self, graph, moves):
        try:
            if self._pool is None:
                self._start()
            edges = [(e.parent, e.child, e.lag) for e in graph.edges()]
            futures = [self._pool.submit(_eval_chunk, graph.n_vars, edges, a, moves[a:b])
                       for a, b in _chunks(len(moves), self.workers)]
            results = [c for f in futures for c in f.result()]
        except Exception as exc:  # broken pool, pickling failure, worker crash
            log.warning("parallel batch failed (%s); re-evaluating serially", exc)
            self.close()
            return evaluate_serial(self.scorer, graph, moves, self.settings)
        results.sort(key=lambda c: c.index)
        if [c.index for c in results] != list(range(len(moves))):
            log.warning("parallel batch returned inconsistent indices; re-evaluating serially")
            return evaluate_serial(self.scorer, graph, moves, self.settings)
        return results


def evaluate_batch(scorer: LocalScorer, graph: LaggedGraph, moves: list[Move],
                   workers: int = 1, settings: TuneSettings = TuneSettings()) -> CandidateBatch:
    """One-shot batch evaluation; spins a pool up and down when ``workers > 1``."""
    with Evaluator(scorer, settings, workers) as ev:
        return ev.evaluate_batch(graph, moves)
