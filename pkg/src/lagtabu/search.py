"""Hill-climbing initialisation followed by Tabu search over lagged graphs."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .candidates import (Candidate, TuneSettings, apply_candidate, evaluate_move,
                         tune_parents)
from .dataset import TimeSeriesDataset
from .graph import LaggedGraph, Move, enumerate_neighbourhood
from .parallel import Evaluator
from .score import (INADMISSIBLE, LocalScorer, NodeScoreCard, ScoreCache, ScoreConfig,
                    heldout_loglik)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchConfig:
    tabu_tenure: int = 10
    max_hc_iters: int = 200
    max_tabu_iters: int = 100
    tune_after_changelag: bool = True
    retune_both_on_reverse: bool = True
    tune_candidates: bool = True  # False: only the selected move is lag-tuned
    workers: int = 1

    def __post_init__(self):
        if self.tabu_tenure < 0 or self.max_hc_iters < 0 or self.max_tabu_iters < 0:
            raise ValueError("tabu tenure and iteration caps must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def tune_settings(self) -> TuneSettings:
        return TuneSettings(self.tune_candidates, self.tune_after_changelag,
                            self.retune_both_on_reverse)


class TabuList:
    """Lag-free move signatures with a remaining tenure."""

    def __init__(self, tenure: int):
        self.tenure = tenure
        self.entries: dict[tuple[int, int, int], int] = {}

    def __contains__(self, move: Move) -> bool:
        return move.signature in self.entries

    def push(self, forbidden: Move) -> None:
        """Age existing entries by one, drop expired ones, then forbid ``forbidden``."""
        self.entries = {sig: left - 1 for sig, left in self.entries.items() if left > 1}
        if self.tenure > 0:
            self.entries[forbidden.signature] = self.tenure


@dataclass(frozen=True)
class TraceStep:
    phase: str
    iteration: int
    move: Move
    score: float
    best_score: float
    graph: LaggedGraph
    tabu: bool = False  # taken through aspiration

    def to_dict(self) -> dict:
        return {"phase": self.phase, "iter": self.iteration, "move": self.move.to_dict(),
                "score": self.score, "best_score": self.best_score, "aspiration": self.tabu}


@dataclass
class SearchTrace:
    initial_graph: LaggedGraph
    initial_score: float
    best_graph: LaggedGraph
    best_score: float
    steps: list[TraceStep] = field(default_factory=list)

    def graphs(self) -> list[LaggedGraph]:
        return [self.initial_graph] + [s.graph for s in self.steps]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s.to_dict()) + "\n" for s in self.steps)

    def extend(self, other: "SearchTrace") -> None:
        self.steps.extend(other.steps)
        if other.best_score > self.best_score:
            self.best_graph, self.best_score = other.best_graph, other.best_score


class _Context:
    """Scorer and evaluator shared by the phases of one run."""

    def __init__(self, ds, cfg: SearchConfig, score_cfg: ScoreConfig,
                 scorer: LocalScorer | None = None, evaluator: Evaluator | None = None):
        self.scorer = scorer or LocalScorer(ds, score_cfg)
        self.owns_evaluator = evaluator is None
        self.evaluator = evaluator or Evaluator(self.scorer, cfg.tune_settings, cfg.workers)
        self.cfg = cfg

    def close(self):
        if self.owns_evaluator:
            self.evaluator.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def finalize(self, graph: LaggedGraph, cand: Candidate) -> tuple[LaggedGraph, Candidate]:
        """Apply a selected candidate; in fast mode tune it here."""
        if not self.cfg.tune_candidates:
            cand = evaluate_move(self.scorer, graph, cand.move, cand.index,
                                 self.cfg.tune_settings, tune=True)
        return apply_candidate(graph, cand).with_names(graph.names), cand


def _better(cand: Candidate, score: float, best: tuple[Candidate, float] | None) -> bool:
    # candidates arrive in (kind, parent, child, new_lag) order, so ">" keeps the lowest key on ties
    return best is None or score > best[1]


def hill_climb(ds: TimeSeriesDataset, cfg: SearchConfig = SearchConfig(),
               score_cfg: ScoreConfig = ScoreConfig(), *, start: LaggedGraph | None = None,
               scorer: LocalScorer | None = None, evaluator: Evaluator | None = None
               ) -> tuple[LaggedGraph, SearchTrace]:
    """Greedy best-improvement search from the empty graph.

    Stops when no neighbour (after its induced lag tuning) strictly improves
    the score, or after ``cfg.max_hc_iters`` moves.
    """
    with _Context(ds, cfg, score_cfg, scorer, evaluator) as ctx:
        graph = start if start is not None else LaggedGraph(ds.N, names=ds.names)
        cache = ScoreCache(ctx.scorer, graph)
        trace = SearchTrace(graph, cache.total, graph, cache.total)
        for it in range(1, cfg.max_hc_iters + 1):
            moves = enumerate_neighbourhood(cache.graph, score_cfg.l_max)
            best = None
            for cand in ctx.evaluator.evaluate(cache.graph, moves):
                if not cand.admissible:
                    continue
                score = cache.total_with(cand.cards)
                if score > cache.total and _better(cand, score, best):
                    best = (cand, score)
            if best is None:
                break
            new_graph, cand = ctx.finalize(cache.graph, best[0])
            cache.commit(new_graph, cand.cards)
            trace.best_graph, trace.best_score = cache.graph, cache.total
            trace.steps.append(TraceStep("hc", it, cand.move, cache.total, cache.total,
                                         cache.graph))
        return cache.graph, trace


def tabu_search(ds: TimeSeriesDataset, g0: LaggedGraph, cfg: SearchConfig = SearchConfig(),
                score_cfg: ScoreConfig = ScoreConfig(), *, scorer: LocalScorer | None = None,
                evaluator: Evaluator | None = None) -> SearchTrace:
    """Tabu phase: always move to the best admissible neighbour, even if worse.

    A move whose signature is tabu is admissible only when its resulting score
    beats the best score seen so far. The best graph encountered is returned.
    """
    with _Context(ds, cfg, score_cfg, scorer, evaluator) as ctx:
        cache = ScoreCache(ctx.scorer, g0)
        trace = SearchTrace(g0, cache.total, g0, cache.total)
        tabu = TabuList(cfg.tabu_tenure)
        for it in range(1, cfg.max_tabu_iters + 1):
            moves = enumerate_neighbourhood(cache.graph, score_cfg.l_max)
            best = None
            for cand in ctx.evaluator.evaluate(cache.graph, moves):
                if not cand.admissible:
                    continue
                # same summation order as the committed total, so aspiration is exact
                score = cache.total_with(cand.cards)
                if cand.move in tabu and not score > trace.best_score:
                    continue
                if _better(cand, score, best):
                    best = (cand, score)
            if best is None:
                break
            was_tabu = best[0].move in tabu
            new_graph, cand = ctx.finalize(cache.graph, best[0])
            cache.commit(new_graph, cand.cards)
            tabu.push(cand.move.inverse())
            if cache.total > trace.best_score:
                trace.best_graph, trace.best_score = cache.graph, cache.total
            trace.steps.append(TraceStep("tabu", it, cand.move, cache.total, trace.best_score,
                                         cache.graph, was_tabu))
        return trace


def greedy_lag_tune(ds: TimeSeriesDataset, g: LaggedGraph, child: int,
                    score_cfg: ScoreConfig = ScoreConfig(), *,
                    scorer: LocalScorer | None = None) -> LaggedGraph:
    """Tune the lags of ``child``'s incoming edges by single steps until none helps."""
    scorer = scorer or LocalScorer(ds, score_cfg)
    parents = g.parents(child)
    if not parents:
        return g
    return g.with_parents(child, tune_parents(scorer, child, parents))


@dataclass
class LearnResult:
    graph: LaggedGraph
    trace: SearchTrace
    cards: list[NodeScoreCard]
    hc_graph: LaggedGraph
    hc_score: float

    def __iter__(self):
        return iter((self.graph, self.trace, self.cards))


def learn(ds: TimeSeriesDataset, cfg: SearchConfig = SearchConfig(),
          score_cfg: ScoreConfig = ScoreConfig()) -> LearnResult:
    """Hill climbing from the empty graph, then Tabu search from its result.

    Unpacks as ``graph, trace, cards``.
    """
    if not ds.is_complete:
        raise ValueError("dataset has missing values; impute it first")
    scorer = LocalScorer(ds, score_cfg)
    with Evaluator(scorer, cfg.tune_settings, cfg.workers) as ev:
        hc_graph, trace = hill_climb(ds, cfg, score_cfg, scorer=scorer, evaluator=ev)
        hc_score = trace.best_score
        tabu = tabu_search(ds, hc_graph, cfg, score_cfg, scorer=scorer, evaluator=ev)
    trace.extend(tabu)
    best = trace.best_graph.with_names(ds.names)
    cards = [scorer.card(j, best.parents(j)) for j in range(ds.N)]
    log.info("learnt %d edges, score %.4f (%d local fits)", len(best), trace.best_score,
             scorer.fits)
    return LearnResult(best, trace, cards, hc_graph, hc_score)


LAMBDA_GRID = (0.0, 0.5, 1.0, 2.0, 4.0)


def select_lambda(ds: TimeSeriesDataset, cfg: SearchConfig = SearchConfig(),
                  score_cfg: ScoreConfig = ScoreConfig(), grid: Sequence[float] = LAMBDA_GRID,
                  holdout: float = 0.2) -> tuple[float, dict[float, float]]:
    """Pick the lag penalty whose learnt graph best predicts the last ``holdout`` of the series.

    Each candidate graph is learnt on the leading part only and scored by the
    held-out log-likelihood of the tail. Ties go to the larger penalty.
    """
    split = int(round(ds.T * (1.0 - holdout)))
    train = ds.window(0, split)
    scores: dict[float, float] = {}
    for lam in grid:
        sc = replace(score_cfg, lam=float(lam))
        graph = learn(train, cfg, sc).graph
        scores[float(lam)] = heldout_loglik(ds, graph, split, sc)
    best = max(sorted(scores, reverse=True), key=lambda lam: scores[lam])
    if not math.isfinite(scores[best]):
        best = score_cfg.lam
    return best, scores


__all__ = ["SearchConfig", "TabuList", "TraceStep", "SearchTrace", "LearnResult",
           "hill_climb", "tabu_search", "greedy_lag_tune", "learn", "select_lambda",
           "INADMISSIBLE"]
