"""Structural comparison of a learnt lagged graph with the ground truth.

The edge universe is every ordered pair of variables, self-pairs included.
Pairs are matched by direction and ignore the lag; lag accuracy is reported
separately as the mean absolute lag error on matched pairs.

A true edge i->j learnt as j->i (with j->i not itself a true edge and i->j
absent from the learnt graph) counts once as a reversal in SHD, while the
confusion counts see it as one false positive plus one false negative.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass

from .graph import LaggedGraph


@dataclass(frozen=True)
class StructuralReport:
    tp: int
    tn: int
    fp: int
    fn: int
    n_add: int
    n_del: int
    n_rev: int
    precision: float
    recall: float
    f1: float
    shd: int
    bsf: float
    lag_mae: float
    n_matched_adjacencies: int
    lag_mae_defined: bool

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def csv_header(cls) -> list[str]:
        return list(cls.__dataclass_fields__)

    def csv_row(self) -> list:
        return [getattr(self, k) for k in self.csv_header()]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.csv_header())
        w.writerow(self.csv_row())
        return buf.getvalue()


class VariableSetMismatch(ValueError):
    pass


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def bsf_score(tp: int, tn: int, fp: int, fn: int) -> float:
    """Balanced scoring function in [-1, 1].

    If the truth has no edges (or no non-edges) only the defined half is used,
    so a perfect graph still scores 1.
    """
    n_edges, n_non = tp + fn, tn + fp
    if n_edges and n_non:
        return 0.5 * (tp / n_edges + tn / n_non - fp / n_non - fn / n_edges)
    if n_edges:
        return (tp - fn) / n_edges
    return (tn - fp) / n_non


def compare(learnt: LaggedGraph, truth: LaggedGraph) -> StructuralReport:
    if learnt.n_vars != truth.n_vars or learnt.names != truth.names:
        raise VariableSetMismatch("learnt and true graphs are over different variables")
    L = {(e.parent, e.child): e.lag for e in learnt.edges()}
    G = {(e.parent, e.child): e.lag for e in truth.edges()}
    n = truth.n_vars

    matched = L.keys() & G.keys()
    tp = len(matched)
    fp = len(L.keys() - G.keys())
    fn = len(G.keys() - L.keys())
    tn = n * n - tp - fp - fn

    n_rev = sum(1 for (i, j) in G
                if i != j and (j, i) in L and (i, j) not in L and (j, i) not in G)
    n_add = fn - n_rev
    n_del = fp - n_rev

    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    errors = [abs(L[k] - G[k]) for k in sorted(matched)]
    lag_mae = sum(errors) / len(errors) if errors else 0.0
    return StructuralReport(
        tp=tp, tn=tn, fp=fp, fn=fn, n_add=n_add, n_del=n_del, n_rev=n_rev,
        precision=precision, recall=recall, f1=f1_score(precision, recall),
        shd=n_add + n_del + n_rev, bsf=bsf_score(tp, tn, fp, fn),
        lag_mae=lag_mae, n_matched_adjacencies=tp, lag_mae_defined=bool(errors))
