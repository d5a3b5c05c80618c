"""
Greedy lag tuning on one child
==============================

y depends on x three steps back. Starting from an edge at lag 1, single-step
tuning walks the lag up while each step improves the child's local score.
"""

import numpy as np

from lagtabu import LaggedGraph, ScoreConfig, TimeSeriesDataset, VariableKind
from lagtabu import greedy_lag_tune, score_node

rng = np.random.default_rng(0)
T = 1000
x = rng.standard_normal(T + 3)
y = 2.0 * x[:-3] + rng.standard_normal(T)
ds = TimeSeriesDataset(("x", "y"), (VariableKind.CONTINUOUS,) * 2, np.vstack([x[3:], y]))

cfg = ScoreConfig(lam=1.0, l_max=5)
for lag in range(1, 6):
    card = score_node(ds, 1, [(0, lag)], cfg)
    print("lag %d: local score %10.2f  (n_eff %d, penalty %.1f)"
          % (lag, card.local_score, card.n_eff, card.lag_penalty))

g = greedy_lag_tune(ds, LaggedGraph(2, [(0, 1, 1)], ds.names), child=1, score_cfg=cfg)
print("tuned lag:", g.lag(0, 1))
