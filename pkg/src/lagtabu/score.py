"""Decomposable lag-aware BIC score with per-child caching.

Each child contributes ``2 log L_j - p_j log n_j - lam * sum(max(0, lag - 1))``
where ``n_j`` is the number of rows left once the longest parent lag has been
dropped from the start of the series.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .dataset import InadmissibleCandidate, TimeSeriesDataset, VariableKind, build_design
from .graph import LaggedGraph, Move, MoveKind, apply_move
from .local_models import (IRLS_MAX_ITER, IRLS_RIDGE, IRLS_TOL, FitResult, fit_logistic_irls,
                           fit_ols)

INADMISSIBLE = -math.inf

Parents = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class ScoreConfig:
    lam: float = 1.0
    l_max: int = 5
    irls_max_iter: int = IRLS_MAX_ITER
    irls_tol: float = IRLS_TOL
    irls_ridge: float = IRLS_RIDGE

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lag penalty must be >= 0, got {self.lam}")
        if self.l_max < 1:
            raise ValueError(f"l_max must be >= 1, got {self.l_max}")


@dataclass(frozen=True)
class NodeScoreCard:
    child: int
    parents: Parents
    local_score: float
    log_lik: float
    p: int
    n_eff: int
    lag_penalty: float

    @property
    def admissible(self) -> bool:
        return self.local_score != INADMISSIBLE

    @property
    def bic(self) -> float:
        """``2 log L - p log n`` without the lag penalty."""
        return 2.0 * self.log_lik - self.p * math.log(self.n_eff)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["parents"] = [list(p) for p in self.parents]
        return d


def canonical(parents: Sequence[tuple[int, int]]) -> Parents:
    return tuple(sorted((int(i), int(lag)) for i, lag in parents))


def lag_penalty(parents: Sequence[tuple[int, int]], lam: float) -> float:
    return lam * sum(max(0, lag - 1) for _, lag in parents)


def fit_node(ds: TimeSeriesDataset, child: int, parents: Sequence[tuple[int, int]],
             cfg: ScoreConfig) -> FitResult:
    dm = build_design(ds, child, parents, cfg.l_max)
    if ds.kinds[child] is VariableKind.BINARY:
        return fit_logistic_irls(dm, cfg.irls_max_iter, cfg.irls_tol, cfg.irls_ridge)
    return fit_ols(dm)


def score_node(ds: TimeSeriesDataset, child: int, parents: Sequence[tuple[int, int]],
               cfg: ScoreConfig) -> NodeScoreCard:
    """Local score card for ``child`` given lagged ``parents``.

    Candidates that cannot be fitted get ``local_score = -inf`` rather than
    raising, so neighbourhood scans can skip them.
    """
    parents = canonical(parents)
    for i, lag in parents:
        if not 1 <= lag <= cfg.l_max:
            raise ValueError(f"lag {lag} of parent {i} outside [1, {cfg.l_max}]")
    n_eff = ds.T - max((lag for _, lag in parents), default=0)
    pen = lag_penalty(parents, cfg.lam)
    try:
        fit = fit_node(ds, child, parents, cfg)
    except InadmissibleCandidate:
        return NodeScoreCard(child, parents, INADMISSIBLE, -math.inf, 1 + len(parents),
                             n_eff, pen)
    score = 2.0 * fit.log_likelihood - fit.param_count * math.log(fit.n_used) - pen
    return NodeScoreCard(child, parents, score, fit.log_likelihood, fit.param_count,
                         fit.n_used, pen)


class LocalScorer:
    """Memoised :func:`score_node` keyed by ``(child, canonical parents)``.

    The memo only ever stores values of a pure function, so sharing or
    discarding it never changes a result.
    """

    def __init__(self, ds: TimeSeriesDataset, cfg: ScoreConfig):
        if not ds.is_complete:
            raise ValueError("dataset has missing values; impute it first")
        if ds.T <= cfg.l_max:
            raise ValueError(f"T={ds.T} must exceed l_max={cfg.l_max}")
        self.ds = ds
        self.cfg = cfg
        self._memo: dict[tuple[int, Parents], NodeScoreCard] = {}
        self.fits = 0

    def card(self, child: int, parents: Sequence[tuple[int, int]]) -> NodeScoreCard:
        key = (child, canonical(parents))
        hit = self._memo.get(key)
        if hit is None:
            hit = score_node(self.ds, child, key[1], self.cfg)
            self._memo[key] = hit
            self.fits += 1
        return hit

    def local(self, child: int, parents: Sequence[tuple[int, int]]) -> float:
        return self.card(child, parents).local_score


def total_of(cards: Sequence[NodeScoreCard]) -> float:
    total = 0.0
    for c in cards:
        if not c.admissible:
            return INADMISSIBLE
        total += c.local_score
    return total


def score_graph(ds: TimeSeriesDataset, graph: LaggedGraph, cfg: ScoreConfig
                ) -> tuple[float, list[NodeScoreCard]]:
    cards = [score_node(ds, j, graph.parents(j), cfg) for j in range(graph.n_vars)]
    return total_of(cards), cards


def touched_children(move: Move) -> tuple[int, ...]:
    if move.kind is MoveKind.REVERSE:
        return (move.child, move.parent)
    return (move.child,)


class ScoreCache:
    """Current graph plus one score card per child.

    Only the search thread mutates it, after a move has been selected.
    """

    def __init__(self, scorer: LocalScorer, graph: LaggedGraph):
        self.scorer = scorer
        self.graph = graph
        self.cards = [scorer.card(j, graph.parents(j)) for j in range(graph.n_vars)]
        self.total = total_of(self.cards)

    def commit(self, graph: LaggedGraph, cards: Sequence[NodeScoreCard] = ()) -> None:
        for card in cards:
            self.cards[card.child] = card
        self.graph = graph
        for j in range(graph.n_vars):
            if self.cards[j].parents != graph.parents(j):
                self.cards[j] = self.scorer.card(j, graph.parents(j))
        self.total = total_of(self.cards)

    def total_with(self, cards: Sequence[NodeScoreCard]) -> float:
        """Total after swapping in ``cards``, summed in the same order as :meth:`commit`."""
        swap = {c.child: c for c in cards}
        return total_of([swap.get(j, c) for j, c in enumerate(self.cards)])

    def check(self) -> None:
        for j, card in enumerate(self.cards):
            if card.parents != self.graph.parents(j):
                raise AssertionError(f"cache card for child {j} is stale")


def score_delta(cache: ScoreCache, move: Move) -> tuple[float, list[NodeScoreCard]]:
    """Score change of applying ``move`` (no lag tuning), recomputing touched children only."""
    g_new = apply_move(cache.graph, move, cache.scorer.cfg.l_max)
    updated = [cache.scorer.card(j, g_new.parents(j)) for j in touched_children(move)]
    if any(not c.admissible for c in updated):
        return INADMISSIBLE, updated
    delta = sum(c.local_score - cache.cards[c.child].local_score for c in updated)
    return delta, updated


def heldout_loglik(ds: TimeSeriesDataset, graph: LaggedGraph, split: int,
                   cfg: ScoreConfig) -> float:
    """Fit each child on time points before ``split`` and score the rest.

    Test rows may use lagged values from before ``split``.
    """
    from .local_models import bernoulli_loglik, gaussian_loglik

    total = 0.0
    for j in range(graph.n_vars):
        parents = graph.parents(j)
        full = build_design(ds, j, parents, cfg.l_max)
        cut = split - (full.start - 1)  # rows with 0-based time < split
        if cut < full.p or cut >= full.n:
            return -math.inf
        train = type(full)(j, full.rows[:cut], full.response[:cut], full.start)
        try:
            if ds.kinds[j] is VariableKind.BINARY:
                fit = fit_logistic_irls(train, cfg.irls_max_iter, cfg.irls_tol, cfg.irls_ridge)
                total += bernoulli_loglik(full.response[cut:], full.rows[cut:] @ fit.coefficients)
            else:
                fit = fit_ols(train)
                resid_tr = train.response - train.rows @ fit.coefficients
                sigma2 = max(float(resid_tr @ resid_tr) / train.n, 1e-12)
                resid = full.response[cut:] - full.rows[cut:] @ fit.coefficients
                total += gaussian_loglik(resid, sigma2)
        except InadmissibleCandidate:
            return -math.inf
    return float(total)


def graph_summary(graph: LaggedGraph, cards: Sequence[NodeScoreCard]) -> dict:
    """Totals and lag profile in the layout written to ``score_report.json``."""
    lags = [e.lag for e in graph.edges()]
    hist: dict[str, int] = {}
    for lag in sorted(set(lags)):
        hist[str(lag)] = lags.count(lag)
    total = total_of(cards)
    return {
        "total_score": total,
        "log_likelihood": float(sum(c.log_lik for c in cards)),
        "n_params": int(sum(c.p for c in cards)),
        "bic_2ll_minus_plogn": float(sum(c.bic for c in cards)),
        "lag_penalty": float(sum(c.lag_penalty for c in cards)),
        "n_edges": len(lags),
        "lag_histogram": hist,
        "mean_lag": float(np.mean(lags)) if lags else 0.0,
        "fraction_lag_gt_1": (sum(1 for x in lags if x > 1) / len(lags)) if lags else 0.0,
        "nodes": [c.to_dict() for c in cards],
    }
