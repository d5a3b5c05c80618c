"""
Simulate a lagged system and learn it back
==========================================

Draw a random lagged graph, simulate mixed continuous/binary series from it,
then recover the structure with hill climbing followed by Tabu search.
"""

from lagtabu import GenConfig, compare, generate, learn

# eight variables, 2000 time points, short lags (1 or 2)
cfg = GenConfig(n_vars=8, t_len=2000, seed=1)
truth, ds = generate(cfg)
print("true edges:", [(e.parent, e.child, e.lag) for e in truth.graph.edges()])

graph, trace, cards = learn(ds)
print("learnt edges:", [(e.parent, e.child, e.lag) for e in graph.edges()])
print("best score %.2f after %d moves" % (trace.best_score, len(trace.steps)))

# structural agreement with the truth, lags matched separately
report = compare(graph, truth.graph)
print("F1 %.3f  SHD %d  BSF %.3f  lag MAE %.3f"
      % (report.f1, report.shd, report.bsf, report.lag_mae))
