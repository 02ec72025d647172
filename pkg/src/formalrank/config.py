"""Run configuration: TOML file plus flag overrides over defaults.

Precedence: flags > file > defaults.  Unknown keys are rejected so typos
fail loudly instead of silently running with defaults.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .scoring import STRATEGIES

BACKEND_NAMES = ("syntactic", "builtin", "smt")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    # run
    seed: int = 0
    cache_dir: str = "cache"
    out_dir: str = "out"
    run_id: str = ""
    skip_failed: bool = False
    workers: int = 4
    # combination strategy
    rho: str = "log"
    alpha: float = 0.5
    true_softmax: bool = False
    # equivalence backends
    backends: tuple[str, ...] = ("syntactic", "builtin")
    builtin_max_samples: int = 1000
    builtin_nat_max: int = 20
    smt_executable: str = ""
    smt_args: tuple[str, ...] = ()
    smt_timeout: float = 10.0
    matching_top_k: int = 3
    # semantic consistency
    tau: float = 0.85
    embed_provider: str = "builtin"
    embed_dimension: int = 256
    embed_endpoint: str = ""
    informal_provider: str = "fixture"
    informal_endpoint: str = ""
    informal_model: str = ""
    replay: bool = False
    temperature: float = 0.7
    max_inflight: int = 4
    # candidate generation
    gen_model: str = ""
    gen_endpoint: str = ""
    gen_n: int = 10
    few_shot_file: str = ""
    api_key_env: str = "FORMALRANK_API_KEY"

    def validate(self) -> None:
        if self.rho not in STRATEGIES:
            raise ConfigError(f"rho must be one of {STRATEGIES}, got {self.rho!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must lie in [0, 1], got {self.tau}")
        for name in self.backends:
            if name not in BACKEND_NAMES:
                raise ConfigError(f"unknown backend {name!r}")
        if "smt" in self.backends and not self.smt_executable:
            raise ConfigError("backend 'smt' requires smt_executable")
        if self.matching_top_k < 1:
            raise ConfigError("matching_top_k must be positive")
        if self.gen_n < 1:
            raise ConfigError("gen_n must be positive")
        if self.workers < 1 or self.max_inflight < 1:
            raise ConfigError("worker counts must be positive")

    def cache_path(self, *parts: str) -> Path:
        return Path(self.cache_dir).joinpath(*parts)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_TUPLE_FIELDS = {"backends", "smt_args"}


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Assemble a validated RunConfig from defaults, a TOML file, and
    explicit overrides (None values in overrides are ignored)."""
    values: dict = {}
    if path is not None:
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
        for key, value in data.items():
            if key not in _FIELDS:
                raise ConfigError(f"unknown config key {key!r} in {path}")
            values[key] = value
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown config override {key!r}")
        values[key] = value
    for key in _TUPLE_FIELDS & set(values):
        values[key] = tuple(values[key])
    config = RunConfig(**values)
    config.validate()
    return config
