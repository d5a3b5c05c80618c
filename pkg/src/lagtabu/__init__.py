"""Score-based causal structure learning for time series with edge-specific lags."""

from .dataset import (DatasetError, DesignMatrix, InadmissibleCandidate, TimeSeriesDataset,
                      VariableKind, build_design, impute, load_csv, write_csv)
from .graph import (LaggedEdge, LaggedGraph, Move, MoveKind, apply_move, check_unrolled_acyclic,
                    enumerate_neighbourhood)
from .local_models import FitResult, fit_logistic_irls, fit_ols
from .metrics import StructuralReport, compare
from .score import (INADMISSIBLE, LocalScorer, NodeScoreCard, ScoreCache, ScoreConfig,
                    score_delta, score_graph, score_node)
from .search import (LearnResult, SearchConfig, SearchTrace, greedy_lag_tune, hill_climb, learn,
                     select_lambda, tabu_search)
from .synth import (GenConfig, GroundTruth, LagMode, MissingMode, SweepSpec, TrialResult,
                    apply_missingness, generate, generate_truth, run_sweep, simulate)

__version__ = "0.1.0"
