"""
Reading the structural metrics
==============================

A small worked comparison: one correct edge, one reversed edge, one extra
edge and a lag that is off by one.
"""

from lagtabu import LaggedGraph, compare

names = ["a", "b", "c"]
truth = LaggedGraph(3, [(0, 1, 1), (1, 2, 2)], names)
learnt = LaggedGraph(3, [(0, 1, 2), (2, 1, 1), (2, 2, 1)], names)

r = compare(learnt, truth)
# b->c learnt as c->b: one reversal in SHD, but a false positive plus a false negative for F1
print("TP %d  FP %d  FN %d  TN %d" % (r.tp, r.fp, r.fn, r.tn))
print("SHD %d = %d added + %d deleted + %d reversed" % (r.shd, r.n_add, r.n_del, r.n_rev))
print("precision %.2f  recall %.2f  F1 %.2f  BSF %.3f" % (r.precision, r.recall, r.f1, r.bsf))
print("lag MAE over matched pairs %.2f" % r.lag_mae)

# the balanced score is 1 for the truth itself and 0 for the empty graph
print(compare(truth, truth).bsf, compare(LaggedGraph(3, names=names), truth).bsf)
