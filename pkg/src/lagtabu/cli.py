"""Command-line entry point: ``learn``, ``simulate``, ``sweep`` and ``evaluate``.

Exit codes: 0 ok, 2 I/O error, 3 invalid config, 4 inadmissible dataset,
5 too many failed sweep trials.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

from .config import (ConfigError, RunConfig, build_run_config, parse_config_text,
                     read_config_file)
from .dataset import DatasetError, impute, load_csv, write_csv
from .graph import graph_from_json, graph_to_edge_csv, graph_to_json
from .metrics import VariableSetMismatch, compare
from .score import graph_summary
from .search import learn, select_lambda
from .synth import apply_missingness, generate_truth, run_sweep, simulate, summarize

log = logging.getLogger("lagtabu")

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_DATA, EXIT_SWEEP = 0, 2, 3, 4, 5
SWEEP_SUCCESS_FRACTION = 0.8


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _common_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run settings (override --config)")
    g.add_argument("--config", type=Path, help="key = value config file")
    g.add_argument("--seed", type=int)
    g.add_argument("--workers", type=int, help="candidate-scoring processes "
                   "(default: $LAGTABU_WORKERS or all cores)")
    g.add_argument("--lambda", dest="lam", type=float, help="lag-penalty weight")
    g.add_argument("--l-max", dest="l_max", type=int, help="maximum lag")
    g.add_argument("--tabu-tenure", dest="tabu_tenure", type=int)
    g.add_argument("--max-iters", dest="max_iters", type=int, help="Tabu iterations")
    g.add_argument("--max-hc-iters", dest="max_hc_iters", type=int)
    g.add_argument("-v", "--verbose", action="count", default=0)


FLAG_KEYS = ("seed", "workers", "lam", "l_max", "tabu_tenure", "max_iters", "max_hc_iters")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lagtabu", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn a lagged graph from a CSV time series")
    p.add_argument("data", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--binary", help="comma-separated columns to treat as binary")
    p.add_argument("--continuous", help="comma-separated columns to treat as continuous")
    p.add_argument("--lambda-grid", dest="lambda_grid", action="store_const", const=True,
                   help="choose the lag penalty from {0, 0.5, 1, 2, 4} on a held-out tail")
    _common_flags(p)

    p = sub.add_parser("simulate", help="generate a synthetic dataset and its true graph")
    p.add_argument("--out", type=Path, required=True)
    _common_flags(p)

    p = sub.add_parser("sweep", help="run a one-factor-at-a-time simulation sweep")
    p.add_argument("spec", help="sweep spec file, or the name of a shipped spec "
                   "(see --list), or 'all'")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--trials", dest="n_trials", type=int)
    p.add_argument("--plots", action="store_true", help="write metric-vs-factor PNGs")
    p.add_argument("--list", action="store_true", help="list shipped specs and exit")
    _common_flags(p)

    p = sub.add_parser("evaluate", help="compare a learnt graph.json with a truth graph")
    p.add_argument("learnt", type=Path)
    p.add_argument("truth", type=Path)
    _common_flags(p)
    return parser


def _run_config(args) -> RunConfig:
    file_values = read_config_file(args.config) if args.config else {}
    flags = {k: getattr(args, k, None) for k in FLAG_KEYS + ("binary", "continuous",
                                                              "lambda_grid", "n_trials")}
    return build_run_config(file_values, flags)


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def _mkdir(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot create {path}: {exc}") from None


def cmd_learn(args) -> int:
    cfg = _run_config(args)
    try:
        ds = load_csv(args.data, cfg.kind_overrides())
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {args.data}: {exc}") from None
    except DatasetError as exc:
        raise CliError(EXIT_DATA, str(exc)) from None
    if ds.T <= cfg.l_max:
        raise CliError(EXIT_DATA, f"T={ds.T} must exceed l_max={cfg.l_max}")
    if not ds.is_complete:
        log.info("imputing %d missing cells", int(ds.missing.sum()))
        try:
            ds = impute(ds)
        except DatasetError as exc:
            raise CliError(EXIT_DATA, str(exc)) from None
    _mkdir(args.out)
    lambda_scores = None
    if cfg.lambda_grid:
        lam, lambda_scores = select_lambda(ds, cfg.search_config(), cfg.score_config())
        log.info("selected lambda=%g", lam)
        cfg = replace(cfg, lam=lam)
    result = learn(ds, cfg.search_config(), cfg.score_config())
    graph = result.graph
    report = graph_summary(graph, result.cards)
    report["names"] = list(ds.names)
    report["score_convention"] = ("score = sum_j [2 logL_j - p_j log n_j - lambda * "
                                  "sum max(0, lag-1)]; bic_2ll_minus_plogn omits the lag term")
    report["hill_climb_score"] = result.hc_score
    report["lambda"] = cfg.lam
    if lambda_scores is not None:
        report["lambda_grid_heldout_loglik"] = {str(k): v for k, v in lambda_scores.items()}
    try:
        _write(args.out / "graph.json", graph_to_json(graph))
        _write(args.out / "edges.csv", graph_to_edge_csv(graph))
        _write(args.out / "trace.jsonl", result.trace.to_jsonl())
        _write(args.out / "score_report.json", json.dumps(report, indent=2) + "\n")
        _write(args.out / "config_echo.cfg", cfg.dumps())
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write outputs: {exc}") from None
    print(f"{len(graph)} edges, score {report['total_score']:.4f}, "
          f"mean lag {report['mean_lag']:.2f}, "
          f"{100 * report['fraction_lag_gt_1']:.1f}% of lags > 1")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _run_config(args)
    gen = cfg.gen_config()
    _mkdir(args.out)
    truth = generate_truth(gen)
    ds = apply_missingness(simulate(truth, gen), gen)
    try:
        write_csv(ds, args.out / "data.csv")
        _write(args.out / "truth.json", json.dumps(truth.to_dict(), indent=2) + "\n")
        with (args.out / "mask.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(ds.names)
            w.writerows(ds.missing.T.astype(int).tolist())
        _write(args.out / "config_echo.cfg", cfg.dumps())
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write outputs: {exc}") from None
    print(f"simulated N={ds.N}, T={ds.T}, {len(truth.graph)} true edges, "
          f"{int(ds.missing.sum())} missing cells")
    return EXIT_OK


def shipped_specs() -> dict[str, str]:
    root = resources.files("lagtabu") / "sweeps"
    return {p.name[:-4]: p.read_text(encoding="utf-8")
            for p in sorted(root.iterdir(), key=lambda p: p.name) if p.name.endswith(".cfg")}


def _plot(summary: list[dict], path: Path) -> None:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib not installed; skipping plots")
        return
    metrics = ("f1", "shd", "bsf", "lag_mae")
    fig, axes = plt.subplots(1, len(metrics), figsize=(4 * len(metrics), 3.2))
    xs = [str(r["value"]) for r in summary]
    for ax, m in zip(axes, metrics):
        ax.errorbar(xs, [r[f"{m}_mean"] for r in summary],
                    yerr=[r[f"{m}_sd"] for r in summary], marker="o", capsize=3)
        ax.set_title(m)
        ax.set_xlabel(summary[0]["factor"])
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def _write_rows(path: Path, rows: list[dict]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def cmd_sweep(args) -> int:
    specs = shipped_specs()
    if args.list:
        print("\n".join(specs))
        return EXIT_OK
    if args.spec == "all":
        texts = list(specs.items())
    elif args.spec in specs:
        texts = [(args.spec, specs[args.spec])]
    else:
        try:
            texts = [(Path(args.spec).stem, Path(args.spec).read_text(encoding="utf-8"))]
        except OSError as exc:
            raise CliError(EXIT_CONFIG, f"cannot read sweep spec {args.spec}: {exc}") from None
    flags = {k: getattr(args, k, None) for k in FLAG_KEYS + ("n_trials",)}
    base_file = read_config_file(args.config) if args.config else {}
    _mkdir(args.out)
    n_ok = n_all = 0
    for name, text in texts:
        try:
            cfg = build_run_config({**base_file, **parse_config_text(text)}, flags)
            spec = cfg.sweep_spec()
        except ValueError as exc:
            raise CliError(EXIT_CONFIG, f"invalid sweep spec {name}: {exc}") from None
        trials = run_sweep(spec)
        summary = summarize(trials)
        out = args.out / name if len(texts) > 1 else args.out
        _mkdir(out)
        _write_rows(out / "trials.csv", [t.row() for t in trials])
        _write_rows(out / "summary.csv", summary)
        _write(out / "config_echo.cfg", cfg.dumps())
        if args.plots:
            _plot(summary, out / "summary.png")
        n_ok += sum(t.ok for t in trials)
        n_all += len(trials)
        for row in summary:
            print(f"{spec.name}: {spec.factor}={row['value']}: f1={row['f1_mean']:.3f} "
                  f"shd={row['shd_mean']:.2f} bsf={row['bsf_mean']:.3f} "
                  f"lag_mae={row['lag_mae_mean']:.3f} ({row['n_ok']} ok)")
    if n_all and n_ok / n_all < SWEEP_SUCCESS_FRACTION:
        print(f"only {n_ok}/{n_all} trials succeeded", file=sys.stderr)
        return EXIT_SWEEP
    return EXIT_OK


def cmd_evaluate(args) -> int:
    _run_config(args)
    try:
        learnt = graph_from_json(args.learnt.read_text(encoding="utf-8"))
        truth = graph_from_json(args.truth.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise CliError(EXIT_IO, f"cannot read graphs: {exc}") from None
    try:
        report = compare(learnt, truth)
    except VariableSetMismatch as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


COMMANDS = {"learn": cmd_learn, "simulate": cmd_simulate, "sweep": cmd_sweep,
            "evaluate": cmd_evaluate}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"lagtabu {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"lagtabu {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
