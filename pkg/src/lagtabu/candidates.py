"""Scoring of single candidate moves, including greedy per-child lag tuning.

Everything here is a pure function of (scorer, graph, move, settings) so the
same code path serves the serial loop and the worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .graph import LaggedGraph, Move, MoveKind
from .score import INADMISSIBLE, LocalScorer, NodeScoreCard, Parents, canonical


@dataclass(frozen=True)
class TuneSettings:
    tune_candidates: bool = True
    tune_after_changelag: bool = True
    retune_both_on_reverse: bool = True


@dataclass(frozen=True)
class Candidate:
    index: int
    move: Move
    delta: float
    cards: tuple[NodeScoreCard, ...]  # new cards of every touched child, after tuning
    noop: bool = False  # tuning led straight back to the current graph

    @property
    def admissible(self) -> bool:
        return self.delta != INADMISSIBLE and not self.noop


def tune_parents(scorer: LocalScorer, child: int, parents: Parents) -> Parents:
    """Single-step lag search over ``child``'s incoming edges.

    For each parent in turn try lag+1 then lag-1 and keep the strictly best;
    repeat full passes until a pass changes nothing.
    """
    l_max = scorer.cfg.l_max
    current = list(canonical(parents))
    score = scorer.local(child, current)
    changed = True
    while changed:
        changed = False
        for k in range(len(current)):
            parent, lag = current[k]
            best_lag, best = lag, score
            for trial in (lag + 1, lag - 1):
                if not 1 <= trial <= l_max:
                    continue
                current[k] = (parent, trial)
                s = scorer.local(child, current)
                if s > best:
                    best_lag, best = trial, s
            current[k] = (parent, best_lag)
            if best_lag != lag:
                score = best
                changed = True
    return tuple(current)


def moved_parents(graph: LaggedGraph, move: Move) -> dict[int, Parents]:
    """New (untuned) parent sets of the children a move touches."""
    i, j = move.parent, move.child
    pj = [p for p in graph.parents(j) if p[0] != i]
    if move.kind is MoveKind.ADD:
        return {j: canonical(pj + [(i, 1)])}
    if move.kind is MoveKind.DELETE:
        return {j: canonical(pj)}
    if move.kind is MoveKind.CHANGE_LAG:
        return {j: canonical(pj + [(i, move.new_lag)])}
    pi = list(graph.parents(i)) + [(j, 1)]
    return {j: canonical(pj), i: canonical(pi)}


def tuned_children(move: Move, settings: TuneSettings) -> tuple[int, ...]:
    if move.kind is MoveKind.ADD:
        return (move.child,)
    if move.kind is MoveKind.REVERSE:
        # the reversed edge now points into the old parent
        return (move.parent, move.child) if settings.retune_both_on_reverse else (move.parent,)
    if move.kind is MoveKind.CHANGE_LAG and settings.tune_after_changelag:
        return (move.child,)
    return ()


def evaluate_move(scorer: LocalScorer, graph: LaggedGraph, move: Move, index: int,
                  settings: TuneSettings, tune: bool | None = None) -> Candidate:
    tune = settings.tune_candidates if tune is None else tune
    new = moved_parents(graph, move)
    if tune:
        for child in tuned_children(move, settings):
            if scorer.local(child, new[child]) != INADMISSIBLE:
                new[child] = tune_parents(scorer, child, new[child])
    delta = 0.0
    cards = []
    for child in sorted(new):
        card = scorer.card(child, new[child])
        cards.append(card)
        if not card.admissible:
            delta = INADMISSIBLE
        elif delta != INADMISSIBLE:
            delta += card.local_score - scorer.local(child, graph.parents(child))
    if math.isnan(delta):
        delta = INADMISSIBLE
    noop = all(new[c] == graph.parents(c) for c in new)
    return Candidate(index, move, delta, tuple(cards), noop)


def apply_candidate(graph: LaggedGraph, cand: Candidate) -> LaggedGraph:
    for card in cand.cards:
        graph = graph.with_parents(card.child, card.parents)
    return graph


def evaluate_serial(scorer: LocalScorer, graph: LaggedGraph, moves: list[Move],
                    settings: TuneSettings, offset: int = 0) -> list[Candidate]:
    return [evaluate_move(scorer, graph, m, offset + k, settings) for k, m in enumerate(moves)]
