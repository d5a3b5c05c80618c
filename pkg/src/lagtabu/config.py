"""Flat ``key = value`` run configuration shared by every CLI command.

A config file is a list of ``key = value`` lines (``#`` starts a comment; an
optional ``[section]`` header is ignored). Keys mirror the long CLI flags with
dashes replaced by underscores. Precedence: flag > file > built-in default.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .parallel import default_workers
from .score import ScoreConfig
from .search import SearchConfig
from .synth import GenConfig, LagMode, MissingMode, SweepSpec


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # search and score
    seed: int = 0
    workers: int = 0  # 0 resolves to $LAGTABU_WORKERS or the number of cores
    lam: float = 1.0
    l_max: int = 5
    tabu_tenure: int = 10
    max_iters: int = 100
    max_hc_iters: int = 200
    tune_after_changelag: bool = True
    retune_both_on_reverse: bool = True
    tune_candidates: bool = True
    irls_max_iter: int = 25
    irls_tol: float = 1e-8
    irls_ridge: float = 1e-8
    lambda_grid: bool = False
    # learn inputs
    binary: str = ""
    continuous: str = ""
    # data generation
    n_vars: int = 8
    t_len: int = 2000
    p_edge: float = 0.15
    lag_mode: str = "short"
    noise_sd: float = 0.8
    phi: float = 0.0
    frac_binary: float = 0.2
    n_confounders: int = 0
    missing_mode: str = "none"
    missing_rate: float = 0.0
    # sweeps
    name: str = ""
    factor: str = ""
    values: str = ""
    n_trials: int = 5

    def score_config(self) -> ScoreConfig:
        return ScoreConfig(self.lam, self.l_max, self.irls_max_iter, self.irls_tol,
                           self.irls_ridge)

    def search_config(self) -> SearchConfig:
        return SearchConfig(self.tabu_tenure, self.max_hc_iters, self.max_iters,
                            self.tune_after_changelag, self.retune_both_on_reverse,
                            self.tune_candidates, self.resolved_workers())

    def gen_config(self) -> GenConfig:
        return GenConfig(self.n_vars, self.t_len, self.p_edge, LagMode(self.lag_mode),
                         self.l_max, self.noise_sd, self.phi, self.frac_binary,
                         self.n_confounders, MissingMode(self.missing_mode),
                         self.missing_rate, self.seed)

    def sweep_spec(self) -> SweepSpec:
        if not self.factor or not self.values:
            raise ConfigError("a sweep spec needs 'factor' and 'values'")
        values = tuple(v.strip() for v in self.values.split(",") if v.strip())
        return SweepSpec(self.name or self.factor, self.factor, values, self.gen_config(),
                         self.n_trials, self.seed, self.search_config(), self.score_config())

    def resolved_workers(self) -> int:
        return self.workers if self.workers > 0 else default_workers()

    def kind_overrides(self) -> dict[str, str]:
        out = {}
        for kind in ("binary", "continuous"):
            for name in getattr(self, kind).split(","):
                if name.strip():
                    out[name.strip()] = kind
        return out

    def validate(self) -> "RunConfig":
        try:
            self.score_config()
            self.search_config()
            self.gen_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def dumps(self) -> str:
        lines = []
        for key, value in asdict(self).items():
            if isinstance(value, bool):
                value = str(value).lower()
            lines.append(f"{file_key(key)} = {value}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_ALIASES = {"lambda": "lam"}


def file_key(name: str) -> str:
    return {v: k for k, v in _ALIASES.items()}.get(name, name)


def _convert(key: str, raw, kind: str):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if kind == "bool":
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {raw!r} (expected {kind})") from None
    return text


def parse_config_text(text: str) -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    raw = {}
    for section in parser.sections():
        raw.update(parser.items(section))
    out = {}
    for key, value in raw.items():
        name = _ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
        if name not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        out[name] = _convert(key, value, _FIELD_TYPES[name])
    return out


def read_config_file(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text)


def build_run_config(file_values: dict | None = None, flag_values: dict | None = None
                     ) -> RunConfig:
    """Merge defaults, then file values, then explicitly given flags (``None`` means unset)."""
    merged = {}
    merged.update(file_values or {})
    merged.update({k: v for k, v in (flag_values or {}).items() if v is not None})
    for key, value in merged.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        merged[key] = _convert(key, value, _FIELD_TYPES[key])
    return RunConfig(**merged).validate()
