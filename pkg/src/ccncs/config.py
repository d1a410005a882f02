"""Experiment configuration: JSON in, validated dataclass out.

A minimal benchmark config::

    {"algorithm": "ccncs", "problem": "sphere", "dimension": 100,
     "budget_evals": 10000, "master_seed": 1}

Unknown keys are rejected so that typos do not silently fall back to
defaults.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

from .coco import ALGORITHMS, OptimizerSettings
from .problems import BENCHMARKS
from .search_core import NCSParams

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "ExperimentConfig",
    "SuiteConfig",
    "config_from_dict",
    "parse_config",
    "suite_from_dict",
    "parse_suite",
    "WORKERS_ENV",
]

SCHEMA_VERSION = 1
WORKERS_ENV = "CCNCS_WORKERS"
ENVIRONMENTS = ("sparse_chain", "cartpole")
CC_ALGORITHMS = ("ccncs", "ccncs-shared-complement")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class OutputPaths:
    dir: str = "runs/{name}-s{master_seed}"
    log_csv: str = "iterations.csv"
    summary_json: str = "summary.json"
    genome_file: str = "best_genome.txt"


@dataclass
class OneFifth:
    r: float = 0.99
    epoch: int = 10
    sigma_floor: float = 1e-8


@dataclass
class ExperimentConfig:
    algorithm: str
    problem: str
    budget_evals: int
    master_seed: int
    name: Optional[str] = None
    dimension: Optional[int] = None
    arch: Optional[list[int]] = None
    env_params: dict = field(default_factory=dict)
    episodes: int = 3
    test_episodes: int = 200
    common_random_numbers: bool = False
    lam: int = 6
    phi: float = 1.0
    sigma_init: float = 0.2
    m_pool: Optional[list[int]] = None
    normalization: bool = True
    diversity_scope: str = "full"
    one_fifth: OneFifth = field(default_factory=OneFifth)
    shared_vector: str = "best"
    init_range: Optional[list[float]] = None
    workers: int = 1
    executor: str = "thread"
    output: OutputPaths = field(default_factory=OutputPaths)
    schema_version: int = SCHEMA_VERSION

    @property
    def label(self) -> str:
        return self.name or f"{self.algorithm}-{self.problem}"

    @property
    def is_env(self) -> bool:
        return self.problem in ENVIRONMENTS

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    def settings(self) -> OptimizerSettings:
        params = NCSParams(phi=self.phi, normalize=self.normalization, r=self.one_fifth.r,
                           epoch=self.one_fifth.epoch, sigma_floor=self.one_fifth.sigma_floor,
                           diversity_scope=self.diversity_scope)
        return OptimizerSettings(
            algorithm=self.algorithm,
            lam=self.lam,
            sigma_init=self.sigma_init,
            m_pool=tuple(self.m_pool or (1,)),
            params=params,
            budget_evals=self.budget_evals,
            shared_vector=self.shared_vector,
            init_range=None if self.init_range is None else (self.init_range[0], self.init_range[1]),
        )

    def resolved_workers(self) -> int:
        env = os.environ.get(WORKERS_ENV)
        if env:
            try:
                n = int(env)
            except ValueError:
                raise ConfigError(WORKERS_ENV, f"must be a positive integer, got {env!r}") from None
            if n < 1:
                raise ConfigError(WORKERS_ENV, f"must be a positive integer, got {n}")
            return n
        return self.workers

    def output_dir(self) -> Path:
        return Path(self.output.dir.format(name=self.label, algorithm=self.algorithm,
                                           problem=self.problem, master_seed=self.master_seed))


_TOP_KEYS = {
    "schema_version", "name", "algorithm", "problem", "dimension", "arch", "env_params", "episodes",
    "test_episodes", "common_random_numbers", "lambda", "phi", "sigma_init", "m_pool", "normalization",
    "diversity_scope", "one_fifth", "shared_vector", "init_range", "budget_evals", "master_seed",
    "workers", "executor", "output",
}
_REQUIRED = ("algorithm", "problem", "budget_evals", "master_seed")


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _int(d, key, minimum=None):
    v = d[key]
    if not _is_int(v):
        raise ConfigError(key, f"expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(key, f"must be >= {minimum}, got {v}")
    return v


def _num(d, key, positive=False):
    v = d[key]
    if not _is_num(v):
        raise ConfigError(key, f"expected a number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(key, f"must be positive, got {v}")
    return float(v)


def _bool(d, key):
    v = d[key]
    if not isinstance(v, bool):
        raise ConfigError(key, f"expected true or false, got {v!r}")
    return v


def _sub(d: dict, key: str, cls, allowed: dict):
    raw = d[key]
    if not isinstance(raw, dict):
        raise ConfigError(key, f"expected an object, got {raw!r}")
    for k in raw:
        if k not in allowed:
            raise ConfigError(f"{key}.{k}", "unknown key")
    out = {}
    for k, kind in allowed.items():
        if k in raw:
            if kind is int:
                out[k] = _int(raw, k, 1)
            elif kind is float:
                out[k] = _num(raw, k, positive=True)
            else:
                if not isinstance(raw[k], str):
                    raise ConfigError(f"{key}.{k}", f"expected a string, got {raw[k]!r}")
                out[k] = raw[k]
    return cls(**out)


def config_from_dict(raw: dict[str, Any]) -> ExperimentConfig:
    """Validate a raw mapping and fill in defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    for key in raw:
        if key not in _TOP_KEYS:
            raise ConfigError(key, "unknown key")
    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError(key, "required key missing")

    if raw.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {raw['schema_version']!r}")
    algorithm = raw["algorithm"]
    if algorithm not in ALGORITHMS:
        raise ConfigError("algorithm", f"must be one of {list(ALGORITHMS)}, got {algorithm!r}")
    problem = raw["problem"]
    if problem not in BENCHMARKS and problem not in ENVIRONMENTS:
        raise ConfigError("problem", f"must be one of {sorted(BENCHMARKS) + list(ENVIRONMENTS)}, got {problem!r}")

    kw: dict[str, Any] = {"algorithm": algorithm, "problem": problem}
    kw["budget_evals"] = _int(raw, "budget_evals", 1)
    kw["master_seed"] = _int(raw, "master_seed", 0)
    if "name" in raw:
        if not isinstance(raw["name"], str) or not raw["name"]:
            raise ConfigError("name", "expected a non-empty string")
        kw["name"] = raw["name"]

    if problem in BENCHMARKS:
        for key in ("arch", "env_params", "episodes", "test_episodes", "common_random_numbers"):
            if key in raw:
                raise ConfigError(key, f"only valid for environment problems, not {problem!r}")
        if "dimension" not in raw:
            raise ConfigError("dimension", "required for benchmark problems")
        kw["dimension"] = _int(raw, "dimension", 1)
        if problem == "himmelblau" and kw["dimension"] != 2:
            raise ConfigError("dimension", "himmelblau is 2-dimensional")
    else:
        if "dimension" in raw:
            raise ConfigError("dimension", "environment problems take their dimension from 'arch'")
        if "arch" not in raw:
            raise ConfigError("arch", "required for environment problems")
        arch = raw["arch"]
        if not isinstance(arch, list) or len(arch) < 2 or not all(_is_int(n) and n > 0 for n in arch):
            raise ConfigError("arch", f"expected a list of at least two positive integers, got {arch!r}")
        kw["arch"] = list(arch)
        env_params = raw.get("env_params", {})
        if not isinstance(env_params, dict):
            raise ConfigError("env_params", "expected an object")
        kw["env_params"] = dict(env_params)
        for key in ("episodes", "test_episodes"):
            if key in raw:
                kw[key] = _int(raw, key, 1)
        if "common_random_numbers" in raw:
            kw["common_random_numbers"] = _bool(raw, "common_random_numbers")

    if "lambda" in raw:
        kw["lam"] = _int(raw, "lambda", 2)
    for key in ("phi",):
        if key in raw:
            kw[key] = _num(raw, key)
            if kw[key] < 0:
                raise ConfigError(key, f"must be non-negative, got {kw[key]}")
    if "sigma_init" in raw:
        kw["sigma_init"] = _num(raw, "sigma_init", positive=True)
    if "normalization" in raw:
        kw["normalization"] = _bool(raw, "normalization")
    if "diversity_scope" in raw:
        if raw["diversity_scope"] not in ("full", "group"):
            raise ConfigError("diversity_scope", f"must be 'full' or 'group', got {raw['diversity_scope']!r}")
        kw["diversity_scope"] = raw["diversity_scope"]
    if "shared_vector" in raw:
        if raw["shared_vector"] not in ("best", "random"):
            raise ConfigError("shared_vector", f"must be 'best' or 'random', got {raw['shared_vector']!r}")
        kw["shared_vector"] = raw["shared_vector"]
    if "one_fifth" in raw:
        kw["one_fifth"] = _sub(raw, "one_fifth", OneFifth, {"r": float, "epoch": int, "sigma_floor": float})
        if not kw["one_fifth"].r < 1:
            raise ConfigError("one_fifth.r", f"must lie in (0, 1), got {kw['one_fifth'].r}")
    if "output" in raw:
        kw["output"] = _sub(raw, "output", OutputPaths,
                            {"dir": str, "log_csv": str, "summary_json": str, "genome_file": str})
    if "workers" in raw:
        kw["workers"] = _int(raw, "workers", 1)
    if "executor" in raw:
        if raw["executor"] not in ("thread", "process"):
            raise ConfigError("executor", f"must be 'thread' or 'process', got {raw['executor']!r}")
        kw["executor"] = raw["executor"]
    if "init_range" in raw and raw["init_range"] is not None:
        rng = raw["init_range"]
        if not (isinstance(rng, list) and len(rng) == 2 and all(_is_num(v) for v in rng) and rng[0] < rng[1]):
            raise ConfigError("init_range", f"expected [low, high] with low < high, got {rng!r}")
        kw["init_range"] = [float(rng[0]), float(rng[1])]

    dimension = kw.get("dimension")
    if algorithm in CC_ALGORITHMS:
        pool = raw.get("m_pool", [2, 3, 4])
        if not isinstance(pool, list) or not pool or not all(_is_int(m) and m >= 1 for m in pool):
            raise ConfigError("m_pool", f"expected a non-empty list of positive integers, got {pool!r}")
        if dimension is not None and max(pool) > dimension:
            raise ConfigError("m_pool", f"entry {max(pool)} exceeds the problem dimension {dimension}")
        kw["m_pool"] = sorted(set(pool))
    elif "m_pool" in raw:
        raise ConfigError("m_pool", f"only valid for {list(CC_ALGORITHMS)}, not {algorithm!r}")

    lam = kw.get("lam", 6)
    if kw["budget_evals"] < lam:
        raise ConfigError("budget_evals", f"must cover the {lam} initial evaluations, got {kw['budget_evals']}")
    return ExperimentConfig(**kw)


def _load_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"{path} is not valid JSON: {exc}") from None


def parse_config(path) -> ExperimentConfig:
    """Read and validate one experiment config file."""
    return config_from_dict(_load_json(path))


@dataclass
class SuiteConfig:
    experiments: list[dict]
    seeds: list[int]
    summary_csv: str = "runs/suite_summary.csv"
    parallel_cells: int = 1

    def cells(self) -> list[ExperimentConfig]:
        out = []
        for exp in self.experiments:
            for seed in self.seeds:
                raw = copy.deepcopy(exp)
                raw["master_seed"] = seed
                out.append(config_from_dict(raw))
        return out


def suite_from_dict(raw: dict) -> SuiteConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "suite config must be a JSON object")
    allowed = {"schema_version", "experiments", "seeds", "summary_csv", "parallel_cells"}
    for key in raw:
        if key not in allowed:
            raise ConfigError(key, "unknown key")
    if raw.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {raw['schema_version']!r}")
    exps = raw.get("experiments")
    if not isinstance(exps, list) or not exps or not all(isinstance(e, dict) for e in exps):
        raise ConfigError("experiments", "expected a non-empty list of experiment objects")
    seeds = raw.get("seeds")
    if not isinstance(seeds, list) or not seeds or not all(_is_int(s) and s >= 0 for s in seeds):
        raise ConfigError("seeds", "expected a non-empty list of non-negative integers")
    for i, exp in enumerate(exps):
        if "master_seed" in exp:
            raise ConfigError(f"experiments[{i}].master_seed", "seeds come from the suite's 'seeds' list")
        try:
            config_from_dict({**exp, "master_seed": seeds[0]})
        except ConfigError as exc:
            raise ConfigError(f"experiments[{i}].{exc.key}", str(exc).split(": ", 1)[-1]) from None
    kw = {"experiments": exps, "seeds": list(seeds)}
    if "summary_csv" in raw:
        if not isinstance(raw["summary_csv"], str):
            raise ConfigError("summary_csv", "expected a path string")
        kw["summary_csv"] = raw["summary_csv"]
    if "parallel_cells" in raw:
        kw["parallel_cells"] = _int(raw, "parallel_cells", 1)
    return SuiteConfig(**kw)


def parse_suite(path) -> SuiteConfig:
    return suite_from_dict(_load_json(path))
