"""Experiment orchestration: build problems, run optimizers, write artifacts.

Outputs per experiment (paths from ``config.output``):

- an iteration CSV, one row per completed iteration, floats written with
  ``repr`` so reruns are byte-identical;
- a JSON summary holding the resolved config, version, best-ever and
  final-population-best scores, wall time and, for policy problems, the
  held-out test returns of both genomes;
- the best-ever genome as a flat text vector, one value per line.
"""

from __future__ import annotations

import csv
import json
import logging
import statistics
import traceback
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from . import __version__
from .coco import RunLog, run_optimizer
from .config import ExperimentConfig, SuiteConfig
from .envs import EnvSpec, PolicyObjective, evaluate_policy, make_env
from .neuro import MlpArchitecture, genome_size
from .problems import Problem, benchmark, negate_wrap
from .streams import TEST, RandomStreams

__all__ = [
    "ExperimentResult",
    "build_problem",
    "make_pool",
    "run_experiment",
    "run_suite",
    "optima_coverage",
    "log_rows",
    "write_log_csv",
    "held_out_return",
]

log = logging.getLogger(__name__)


def build_problem(config: ExperimentConfig) -> Problem:
    """Maximization problem described by ``config`` (benchmarks are negated)."""
    if not config.is_env:
        return negate_wrap(benchmark(config.problem, config.dimension))
    arch = MlpArchitecture(tuple(config.arch))
    spec = EnvSpec.from_dict(config.problem, config.env_params)
    env = make_env(spec)  # validates env_params and the architecture early
    if arch.n_inputs != env.observation_size or arch.n_outputs != env.action_count:
        raise ValueError(f"arch {list(arch.layer_sizes)} does not fit {config.problem}: expected "
                         f"{env.observation_size} inputs and {env.action_count} outputs")
    return Problem(dimension=genome_size(arch), func=PolicyObjective(arch, spec, config.episodes),
                   stochastic=True, name=config.problem)


@contextmanager
def make_pool(workers: int, executor: str = "thread") -> Iterator[Optional[Executor]]:
    """Evaluation pool; ``None`` (inline evaluation) for a single worker."""
    if workers <= 1:
        yield None
        return
    cls = ThreadPoolExecutor if executor == "thread" else ProcessPoolExecutor
    with cls(max_workers=workers) as pool:
        yield pool


def held_out_seed(master_seed: int) -> int:
    """Seed for held-out test episodes; disjoint from every training stream."""
    return int(np.random.SeedSequence(int(master_seed), spawn_key=(TEST,)).generate_state(1, np.uint64)[0])


def held_out_return(config: ExperimentConfig, genome) -> float:
    """Mean return of ``genome`` over ``config.test_episodes`` fresh episodes."""
    arch = MlpArchitecture(tuple(config.arch))
    env = make_env(EnvSpec.from_dict(config.problem, config.env_params))
    return float(evaluate_policy(genome, arch, env, config.test_episodes, held_out_seed(config.master_seed)))


def _fmt(v) -> str:
    return repr(float(v))


def log_rows(runlog: RunLog) -> tuple[list[str], list[list[str]]]:
    """CSV header and rows for an iteration log."""
    lam = len(runlog.rows[0].fitness) if runlog.rows else len(runlog.final_means)
    header = ["iteration", "M", "steps", "evaluations", "best_ever", "population_best"]
    for prefix in ("fitness", "diversity", "mean_sigma"):
        header += [f"{prefix}_{i}" for i in range(lam)]
    rows = []
    for r in runlog.rows:
        rows.append([str(r.iteration), str(r.M), str(r.steps), str(r.evaluations), _fmt(r.best_ever),
                     _fmt(r.population_best)]
                    + [_fmt(v) for v in r.fitness] + [_fmt(v) for v in r.diversity]
                    + [_fmt(v) for v in r.mean_sigma])
    return header, rows


def write_log_csv(runlog: RunLog, path: Path) -> None:
    header, rows = log_rows(runlog)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    log: RunLog
    summary: dict
    paths: dict[str, Path] = field(default_factory=dict)

    @property
    def best_ever(self) -> float:
        return self.log.best_score


def _write(path: Path, writer: Callable[[Path], None]) -> None:
    try:
        writer(path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def run_experiment(config: ExperimentConfig, write: bool = True, workers: Optional[int] = None) -> ExperimentResult:
    """Run one configured experiment and (optionally) write its artifacts.

    ``workers`` overrides the configured/env-var worker count; results do not
    depend on it.
    """
    problem = build_problem(config)
    streams = RandomStreams(config.master_seed, config.is_env and config.common_random_numbers)
    n_workers = workers if workers is not None else config.resolved_workers()
    header = {"config": config.to_dict(), "version": __version__}
    with make_pool(n_workers, config.executor) as pool:
        runlog = run_optimizer(problem, config.settings(), streams, pool=pool, header=header)
    if problem.eval_counter != runlog.evaluations:
        raise RuntimeError(f"evaluation count mismatch: log {runlog.evaluations}, problem {problem.eval_counter}")

    summary = {
        "name": config.label,
        "algorithm": config.algorithm,
        "problem": config.problem,
        "master_seed": config.master_seed,
        "version": __version__,
        "iterations": len(runlog.rows),
        "evaluations": runlog.evaluations,
        "best_ever": runlog.best_score,
        "final_population_best": runlog.final_best_score,
        "wall_time_s": runlog.wall_time,
        "config": config.to_dict(),
    }
    if config.is_env:
        summary["test_episodes"] = config.test_episodes
        summary["test_return_best_ever"] = held_out_return(config, runlog.best_genome)
        summary["test_return_final_best"] = held_out_return(config, runlog.final_best_genome)
    else:
        # benchmarks are minimized; report the objective in its own sense too
        summary["best_ever_objective"] = -runlog.best_score
        summary["final_population_best_objective"] = -runlog.final_best_score

    paths: dict[str, Path] = {}
    if write:
        out = config.output_dir()
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
        paths = {"log_csv": out / config.output.log_csv, "summary_json": out / config.output.summary_json,
                 "genome_file": out / config.output.genome_file}
        summary["genome_file"] = str(paths["genome_file"])
        summary["log_csv"] = str(paths["log_csv"])
        _write(paths["log_csv"], lambda p: write_log_csv(runlog, p))
        _write(paths["genome_file"], lambda p: p.write_text("".join(_fmt(v) + "\n" for v in runlog.best_genome)))
        _write(paths["summary_json"], lambda p: p.write_text(json.dumps(summary, indent=2) + "\n"))
        log.info("%s seed %d: best_ever %r after %d evaluations -> %s", config.label, config.master_seed,
                 runlog.best_score, runlog.evaluations, out)
    return ExperimentResult(config, runlog, summary, paths)


# -- suites -------------------------------------------------------------------

SUITE_COLUMNS = ["name", "algorithm", "problem", "seed", "status", "best_ever", "final_population_best",
                 "evaluations", "test_return_best_ever", "test_return_final_best", "error"]


def _cell(config: ExperimentConfig) -> dict:
    row = {"name": config.label, "algorithm": config.algorithm, "problem": config.problem,
           "seed": config.master_seed}
    try:
        res = run_experiment(config, workers=1)
    except Exception as exc:  # a failed cell is recorded, the suite carries on
        log.error("cell %s seed %d failed: %s", config.label, config.master_seed, exc)
        log.debug("%s", traceback.format_exc())
        return {**row, "status": "failed", "error": f"{type(exc).__name__}: {exc}"}
    s = res.summary
    return {**row, "status": "ok", "best_ever": s["best_ever"], "final_population_best": s["final_population_best"],
            "evaluations": s["evaluations"], "test_return_best_ever": s.get("test_return_best_ever"),
            "test_return_final_best": s.get("test_return_final_best")}


def _aggregate(rows: Sequence[dict]) -> list[dict]:
    out = []
    names = list(dict.fromkeys(r["name"] for r in rows))
    for name in names:
        ok = [r for r in rows if r["name"] == name and r["status"] == "ok"]
        first = next(r for r in rows if r["name"] == name)
        for stat, fn in (("mean", statistics.fmean), ("median", statistics.median)):
            agg = {"name": name, "algorithm": first["algorithm"], "problem": first["problem"], "seed": stat,
                   "status": f"{len(ok)}/{sum(r['name'] == name for r in rows)} ok"}
            for key in ("best_ever", "final_population_best", "evaluations", "test_return_best_ever",
                        "test_return_final_best"):
                vals = [r[key] for r in ok if r.get(key) is not None]
                agg[key] = fn(vals) if vals else None
            out.append(agg)
    return out


def run_suite(suite: SuiteConfig, summary_path: Optional[Path] = None, parallel_cells: Optional[int] = None) -> list[dict]:
    """Run every (experiment, seed) cell and write the summary CSV.

    Returns per-cell rows followed by mean/median rows per experiment.
    Cells are independent, so running them concurrently changes nothing
    but wall time.
    """
    cells = suite.cells()
    n = parallel_cells or suite.parallel_cells
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(_cell, cells))
    else:
        rows = [_cell(c) for c in cells]
    table = rows + _aggregate(rows)
    path = Path(summary_path or suite.summary_csv)
    path.parent.mkdir(parents=True, exist_ok=True)

    def _dump(p: Path):
        with open(p, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=SUITE_COLUMNS, lineterminator="\n")
            w.writeheader()
            for r in table:
                w.writerow({k: ("" if r.get(k) is None else (repr(r[k]) if isinstance(r[k], float) else r[k]))
                            for k in SUITE_COLUMNS})

    _write(path, _dump)
    return table


# -- analysis -----------------------------------------------------------------

def optima_coverage(points, optima, radius: float, f_threshold: float, objective: Callable[[np.ndarray], float]) -> int:
    """Number of distinct optima with a point within ``radius`` whose objective is below ``f_threshold``.

    ``objective`` is in the minimization sense (e.g. :func:`ccncs.problems.himmelblau`).
    """
    pts = [np.asarray(p, dtype=float) for p in points]
    good = [p for p in pts if objective(p) < f_threshold]
    covered = 0
    for opt in np.asarray(optima, dtype=float):
        if any(np.linalg.norm(p - opt) <= radius for p in good):
            covered += 1
    return covered
