"""Synthetic lagged linear / logistic processes, missingness, and factor sweeps."""

from __future__ import annotations

import enum
import logging
import math
import traceback
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .dataset import TimeSeriesDataset, VariableKind, impute
from .graph import LaggedGraph
from .metrics import StructuralReport, compare
from .score import ScoreConfig
from .search import SearchConfig, learn

log = logging.getLogger(__name__)

BURN_IN = 200
COEF_RANGE = (0.5, 1.5)
INTERCEPT_RANGE = (-0.5, 0.5)
CONFOUNDER_PHI = 0.5
CONFOUNDER_COEF = 1.0
LOGIT_CLIP = 30.0
BLOWUP = 1e6
MAR_SLOPE = 1.0


class LagMode(str, enum.Enum):
    SHORT = "short"
    LONG = "long"


class MissingMode(str, enum.Enum):
    NONE = "none"
    MCAR = "mcar"
    MAR = "mar"


@dataclass(frozen=True)
class GenConfig:
    n_vars: int = 8
    t_len: int = 2000
    p_edge: float = 0.15
    lag_mode: LagMode = LagMode.SHORT
    l_max: int = 5
    noise_sd: float = 0.8
    phi: float = 0.0
    frac_binary: float = 0.2
    n_confounders: int = 0
    missing_mode: MissingMode = MissingMode.NONE
    missing_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lag_mode", LagMode(self.lag_mode))
        object.__setattr__(self, "missing_mode", MissingMode(self.missing_mode))
        if self.n_vars < 1 or self.t_len < 2:
            raise ValueError("need n_vars >= 1 and t_len >= 2")
        if not 0 <= self.p_edge <= 1:
            raise ValueError("p_edge must lie in [0, 1]")
        if not 0 <= self.frac_binary <= 1:
            raise ValueError("frac_binary must lie in [0, 1]")
        if not 0 <= self.missing_rate < 1:
            raise ValueError("missing_rate must lie in [0, 1)")
        if not self.noise_sd > 0:
            raise ValueError("noise_sd must be > 0")
        if not 0 <= self.phi < 1:
            raise ValueError("phi must lie in [0, 1)")
        if self.l_max < 1 or self.n_confounders < 0:
            raise ValueError("need l_max >= 1 and n_confounders >= 0")
        if self.lag_mode is LagMode.LONG and self.l_max < 2:
            raise ValueError("long lags need l_max >= 2")


@dataclass(frozen=True)
class Confounder:
    targets: tuple[int, int]
    lags: tuple[int, int]


@dataclass
class GroundTruth:
    """True graph over the observed variables plus hidden-series wiring.

    ``coefficients`` maps ``(parent, child)`` to the effect size. When
    ``phi > 0`` every continuous variable carries a lag-1 self-edge with
    coefficient ``phi``. ``coef_scale`` records any shrinking applied by the
    simulator's stability guard.
    """

    graph: LaggedGraph
    kinds: tuple[VariableKind, ...]
    coefficients: dict[tuple[int, int], float]
    intercepts: np.ndarray
    confounders: tuple[Confounder, ...] = ()
    coef_scale: float = 1.0

    def to_dict(self) -> dict:
        from .graph import graph_to_dict

        d = graph_to_dict(self.graph)
        names = self.graph.names
        for e in d["edges"]:
            i, j = names.index(e["parent"]), names.index(e["child"])
            e["coefficient"] = self.coefficients[(i, j)] * self.coef_scale
        d["kinds"] = [k.value for k in self.kinds]
        d["intercepts"] = [float(b) for b in self.intercepts]
        d["confounders"] = [{"targets": [names[t] for t in c.targets], "lags": list(c.lags)}
                            for c in self.confounders]
        d["coef_scale"] = self.coef_scale
        return d


def variable_names(n: int) -> tuple[str, ...]:
    return tuple(f"X{i}" for i in range(n))


def _draw_lag(rng: np.random.Generator, cfg: GenConfig) -> int:
    if cfg.lag_mode is LagMode.SHORT:
        return int(rng.integers(1, min(2, cfg.l_max) + 1))
    return int(rng.integers(cfg.l_max - 1, cfg.l_max + 1))


def _draw_coef(rng: np.random.Generator) -> float:
    return float(rng.choice((-1.0, 1.0)) * rng.uniform(*COEF_RANGE))


def generate_truth(cfg: GenConfig) -> GroundTruth:
    rng = np.random.default_rng([cfg.seed, 0])
    n = cfg.n_vars
    n_bin = math.ceil(cfg.frac_binary * n - 1e-12)
    kinds = tuple(VariableKind.BINARY if i < n_bin else VariableKind.CONTINUOUS
                  for i in range(n))
    edges, coefs = [], {}
    for i in range(n):
        for j in range(n):
            if rng.random() < cfg.p_edge:
                edges.append((i, j, _draw_lag(rng, cfg)))
                coefs[(i, j)] = _draw_coef(rng)
    if cfg.phi > 0:
        # persistence enters as an explicit lag-1 self-edge on continuous series
        edges = [e for e in edges
                 if not (e[0] == e[1] and kinds[e[0]] is VariableKind.CONTINUOUS)]
        coefs = {(a, b): coefs[(a, b)] for a, b, _ in edges}
        for i in range(n):
            if kinds[i] is VariableKind.CONTINUOUS:
                edges.append((i, i, 1))
                coefs[(i, i)] = cfg.phi
    intercepts = rng.uniform(*INTERCEPT_RANGE, size=n)
    confounders = []
    for _ in range(cfg.n_confounders):
        if n < 2:
            break
        a, b = rng.choice(n, size=2, replace=False)
        confounders.append(Confounder((int(a), int(b)), (_draw_lag(rng, cfg), _draw_lag(rng, cfg))))
    graph = LaggedGraph(n, edges, variable_names(n))
    return GroundTruth(graph, kinds, coefs, intercepts, tuple(confounders))


def _run(truth: GroundTruth, cfg: GenConfig, scale: float, rng: np.random.Generator):
    n, T, L = cfg.n_vars, cfg.t_len, cfg.l_max
    steps = BURN_IN + T
    x = np.empty((n, L + steps))
    for i in range(n):
        if truth.kinds[i] is VariableKind.BINARY:
            x[i, :L] = rng.random(L) < 0.5
        else:
            x[i, :L] = rng.standard_normal(L)
    n_conf = len(truth.confounders)
    h = np.zeros((n_conf, L + steps))
    h[:, :L] = rng.standard_normal((n_conf, L))
    noise = rng.standard_normal((n, steps)) * cfg.noise_sd
    uniforms = rng.random((n, steps))
    hnoise = rng.standard_normal((n_conf, steps))
    parents = [truth.graph.parents(j) for j in range(n)]
    beta = {k: v * scale for k, v in truth.coefficients.items()}
    drivers: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for c, conf in enumerate(truth.confounders):
        for tgt, lag in zip(conf.targets, conf.lags):
            drivers[tgt].append((c, lag))
    binary = [k is VariableKind.BINARY for k in truth.kinds]
    for s in range(steps):
        t = L + s
        h[:, t] = CONFOUNDER_PHI * h[:, t - 1] + hnoise[:, s]
        for j in range(n):
            eta = truth.intercepts[j]
            for i, lag in parents[j]:
                eta += beta[(i, j)] * x[i, t - lag]
            for c, lag in drivers[j]:
                eta += CONFOUNDER_COEF * scale * h[c, t - lag]
            if binary[j]:
                eta = min(max(eta, -LOGIT_CLIP), LOGIT_CLIP)
                x[j, t] = 1.0 if uniforms[j, s] < 1.0 / (1.0 + math.exp(-eta)) else 0.0
            else:
                x[j, t] = eta + noise[j, s]
                if not abs(x[j, t]) <= BLOWUP:
                    return None
    return x[:, L + BURN_IN:]


def simulate(truth: GroundTruth, cfg: GenConfig) -> TimeSeriesDataset:
    """Forward-simulate the truth for ``cfg.t_len`` steps after a burn-in.

    If a continuous series blows past 1e6 all coefficients are halved and the
    run restarts; the final factor is stored in ``truth.coef_scale``.
    """
    scale = 1.0
    for attempt in range(60):
        rng = np.random.default_rng([cfg.seed, 1])
        values = _run(truth, cfg, scale, rng)
        if values is not None:
            break
        scale *= 0.5
        log.info("simulation diverged; shrinking coefficients to x%.4g", scale)
    else:
        raise RuntimeError("simulation diverged even with shrunken coefficients")
    truth.coef_scale = scale
    return TimeSeriesDataset(truth.graph.names, truth.kinds, values)


def _logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


def apply_missingness(ds: TimeSeriesDataset, cfg: GenConfig) -> TimeSeriesDataset:
    """Mask cells completely at random (MCAR) or driven by another variable (MAR).

    Under MAR, target j at time t is masked with probability
    ``logistic(a + b * z_{k,t-1})`` where ``z_k`` is the standardised donor
    series and ``a`` is bisected so the realised rate matches the target.
    """
    rate = cfg.missing_rate
    if cfg.missing_mode is MissingMode.NONE or rate == 0:
        return TimeSeriesDataset(ds.names, ds.kinds, ds.values, ds.missing)
    rng = np.random.default_rng([cfg.seed, 2])
    N, T = ds.N, ds.T
    u = rng.random((N, T))
    if cfg.missing_mode is MissingMode.MCAR or N < 2:
        mask = u < rate
    else:
        donors = [int(rng.choice([k for k in range(N) if k != j])) for j in range(N)]
        lagged = np.empty((N, T))
        for j, k in enumerate(donors):
            v = ds.values[k]
            sd = v.std()
            z = (v - v.mean()) / sd if sd > 0 else np.zeros(T)
            lagged[j, 0] = z[0]
            lagged[j, 1:] = z[:-1]
        lo, hi = -30.0, 30.0
        for _ in range(200):
            a = 0.5 * (lo + hi)
            frac = np.mean(u < _logistic(a + MAR_SLOPE * lagged))
            if abs(frac - rate) <= 0.01 * 0.5:
                break
            if frac < rate:
                lo = a
            else:
                hi = a
        mask = u < _logistic(a + MAR_SLOPE * lagged)
    missing = ds.missing | mask
    # never blank a whole column, imputation needs one observed value
    for j in range(N):
        if missing[j].all():
            missing[j, int(rng.integers(T))] = False
    values = np.array(ds.values)
    return TimeSeriesDataset(ds.names, ds.kinds, values, missing)


def generate(cfg: GenConfig) -> tuple[GroundTruth, TimeSeriesDataset]:
    """Truth, simulated data and missingness in one call (observed data may have gaps)."""
    truth = generate_truth(cfg)
    ds = simulate(truth, cfg)
    return truth, apply_missingness(ds, cfg)


# --- sweeps --------------------------------------------------------------

SWEEP_FACTORS = {
    "n_vars": int, "t_len": int, "p_edge": float, "lag_mode": LagMode, "noise_sd": float,
    "phi": float, "frac_binary": float, "n_confounders": int, "missing_rate": float,
}


@dataclass(frozen=True)
class SweepSpec:
    name: str
    factor: str
    values: tuple
    base: GenConfig = GenConfig()
    n_trials: int = 5
    seed: int = 0
    search: SearchConfig = SearchConfig()
    score: ScoreConfig = ScoreConfig()

    def __post_init__(self):
        if self.factor not in SWEEP_FACTORS:
            raise ValueError(f"unknown sweep factor {self.factor!r}")
        conv = SWEEP_FACTORS[self.factor]
        object.__setattr__(self, "values", tuple(conv(v) for v in self.values))
        if not self.values:
            raise ValueError("sweep grid is empty")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")


@dataclass
class TrialResult:
    sweep: str
    factor: str
    value: object
    setting: int
    trial: int
    seed: int
    ok: bool
    report: StructuralReport | None = None
    n_true_edges: int = 0
    n_learnt_edges: int = 0
    score: float = float("nan")
    seconds: float = 0.0
    error: str = ""

    METRICS = ("f1", "shd", "bsf", "lag_mae", "precision", "recall")

    def row(self) -> dict:
        d = {"sweep": self.sweep, "factor": self.factor,
             "value": getattr(self.value, "value", self.value), "setting": self.setting,
             "trial": self.trial, "seed": self.seed, "ok": int(self.ok),
             "n_true_edges": self.n_true_edges, "n_learnt_edges": self.n_learnt_edges,
             "score": self.score, "seconds": round(self.seconds, 3)}
        rep = self.report.to_dict() if self.report is not None else {}
        for k in ("tp", "fp", "fn", "tn", "n_add", "n_del", "n_rev") + self.METRICS:
            d[k] = rep.get(k, "")
        d["error"] = self.error
        return d


def trial_seed(spec_seed: int, setting: int, trial: int) -> int:
    return int(np.random.SeedSequence([spec_seed, setting, trial]).generate_state(1)[0])


def run_trial(gen: GenConfig, search: SearchConfig = SearchConfig(),
              score: ScoreConfig | None = None) -> tuple[StructuralReport, GroundTruth, object]:
    """Generate, impute if needed, learn, and compare with the truth."""
    score = score if score is not None else ScoreConfig(l_max=gen.l_max)
    truth, ds = generate(gen)
    if not ds.is_complete:
        ds = impute(ds)
    result = learn(ds, search, score)
    return compare(result.graph, truth.graph), truth, result


def run_sweep(spec: SweepSpec) -> list[TrialResult]:
    import time

    out = []
    for s, value in enumerate(spec.values):
        for k in range(spec.n_trials):
            seed = trial_seed(spec.seed, s, k)
            gen = replace(spec.base, **{spec.factor: value}, seed=seed)
            score_cfg = replace(spec.score, l_max=gen.l_max)
            t0 = time.perf_counter()
            try:
                report, truth, result = run_trial(gen, spec.search, score_cfg)
                tr = TrialResult(spec.name, spec.factor, value, s, k, seed, True, report,
                                 len(truth.graph), len(result.graph), result.trace.best_score)
            except Exception as exc:
                log.warning("trial %s=%s #%d failed: %s", spec.factor, value, k, exc)
                tr = TrialResult(spec.name, spec.factor, value, s, k, seed, False,
                                 error=f"{type(exc).__name__}: {exc}".replace("\n", " "))
                log.debug(traceback.format_exc())
            tr.seconds = time.perf_counter() - t0
            out.append(tr)
    return out


def summarize(trials: Sequence[TrialResult]) -> list[dict]:
    """Per-setting mean and sample standard deviation of each metric over successful trials."""
    rows = []
    settings = sorted({t.setting for t in trials})
    for s in settings:
        group = [t for t in trials if t.setting == s]
        good = [t for t in group if t.ok]
        first = group[0]
        row = {"sweep": first.sweep, "factor": first.factor,
               "value": getattr(first.value, "value", first.value),
               "n_ok": len(good), "n_failed": len(group) - len(good)}
        for m in TrialResult.METRICS:
            vals = np.array([getattr(t.report, m) for t in good], dtype=float)
            row[f"{m}_mean"] = float(vals.mean()) if vals.size else float("nan")
            row[f"{m}_sd"] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        rows.append(row)
    return rows


def mean_metric(trials: Sequence[TrialResult], value, metric: str) -> float:
    vals = [getattr(t.report, metric) for t in trials if t.ok and t.value == value]
    return float(np.mean(vals)) if vals else float("nan")
