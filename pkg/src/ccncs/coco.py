"""Cooperative coevolution on top of NCS.

Variables are randomly regrouped every outer iteration. Within a group, each
search process is scored after scattering its partial solution back into its
*own* genome (per-individual complement), so parent fitness is always the
cached value and one sub-problem step costs λ evaluations.

The classic scheme, where every partial solution of a group is scored inside
one shared context vector, is kept as an ablation baseline.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from . import __version__
from .problems import Problem
from .search_core import (
    NCSParams,
    Population,
    _finite_or_reject,
    _selection_round,
    init_population,
    ncs_step,
    nearest_neighbor_diversities,
    offspring_from_noise,
    subspace_step,
    update_sigma,
)
from .streams import RandomStreams

__all__ = [
    "GroupingPlan",
    "PartialSolution",
    "validate_m_pool",
    "choose_M",
    "random_grouping",
    "extract_partial",
    "complement_individual",
    "complement_shared",
    "draw_plan",
    "ccncs_iteration",
    "shared_cc_iteration",
    "ALGORITHMS",
    "OptimizerSettings",
    "IterationRecord",
    "RunLog",
    "run_optimizer",
]


@dataclass
class GroupingPlan:
    """Partition of ``range(dimension)`` into disjoint, non-empty, sorted groups."""

    groups: list[np.ndarray]
    dimension: int

    def __post_init__(self):
        self.groups = [np.asarray(g, dtype=np.intp) for g in self.groups]
        if not self.groups or any(g.size == 0 for g in self.groups):
            raise ValueError("groups must be non-empty")
        allidx = np.concatenate(self.groups)
        if allidx.size != self.dimension or not np.array_equal(np.sort(allidx), np.arange(self.dimension)):
            raise ValueError("groups must partition range(dimension) exactly")

    @property
    def M(self) -> int:
        return len(self.groups)

    def __len__(self):
        return len(self.groups)

    def __iter__(self):
        return iter(self.groups)


@dataclass
class PartialSolution:
    values: np.ndarray
    group: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.group = np.asarray(self.group, dtype=np.intp)
        if self.values.shape != self.group.shape:
            raise ValueError(f"partial of length {self.values.size} does not match group of size {self.group.size}")


def validate_m_pool(m_pool: Iterable[int], dimension: int) -> list[int]:
    pool = sorted({int(m) for m in m_pool})
    if not pool:
        raise ValueError("m_pool must not be empty")
    for m in pool:
        if m < 1:
            raise ValueError(f"m_pool entries must be positive, got {m}")
        if m > dimension:
            raise ValueError(f"m_pool entry {m} exceeds the problem dimension {dimension}")
    return pool


def choose_M(m_pool: Iterable[int], rng: np.random.Generator) -> int:
    """Uniform draw from the pool of group counts."""
    pool = sorted({int(m) for m in m_pool})
    if not pool:
        raise ValueError("m_pool must not be empty")
    return pool[int(rng.integers(len(pool)))]


def random_grouping(dimension: int, M: int, rng: np.random.Generator) -> GroupingPlan:
    """Shuffle the indices and cut them into ``M`` balanced contiguous chunks.

    Indices inside a chunk are stored sorted, which makes ``M=1`` reproduce the
    flat iteration exactly.
    """
    if not 1 <= M <= dimension:
        raise ValueError(f"need 1 <= M <= dimension, got M={M}, dimension={dimension}")
    perm = rng.permutation(dimension)
    return GroupingPlan([np.sort(chunk) for chunk in np.array_split(perm, M)], dimension)


def _check_group(group: np.ndarray, dimension: int) -> np.ndarray:
    group = np.asarray(group, dtype=np.intp)
    if group.size and (group.min() < 0 or group.max() >= dimension):
        raise ValueError(f"group index out of range for dimension {dimension}")
    return group


def extract_partial(full, group) -> PartialSolution:
    full = np.asarray(full, dtype=float)
    group = _check_group(group, full.size)
    return PartialSolution(full[group].copy(), group)


def complement_individual(partial: PartialSolution, own_full) -> np.ndarray:
    """The individual's own genome with the group coordinates replaced."""
    own_full = np.asarray(own_full, dtype=float)
    group = _check_group(partial.group, own_full.size)
    out = own_full.copy()
    out[group] = partial.values
    return out


def complement_shared(partial: PartialSolution, shared_vector) -> np.ndarray:
    """Classic CC: scatter the partial into a context vector shared by all individuals."""
    return complement_individual(partial, shared_vector)


def draw_plan(dimension: int, m_pool, streams: RandomStreams, iteration: int) -> GroupingPlan:
    rng = streams.grouping(iteration)
    return random_grouping(dimension, choose_M(m_pool, rng), rng)


def ccncs_iteration(pop: Population, problem: Problem, params: NCSParams, streams: RandomStreams,
                    iteration: int, m_pool=None, plan: Optional[GroupingPlan] = None,
                    max_steps: Optional[int] = None, pool=None) -> Population:
    """One CCNCS outer iteration: regroup, then one NCS step per group in order.

    Consumes ``λ`` evaluations per sub-problem step. ``max_steps`` truncates
    the iteration after that many whole sub-problem steps.
    """
    if plan is None:
        plan = draw_plan(pop.dimension, m_pool, streams, iteration)
    groups = plan.groups if max_steps is None else plan.groups[:max_steps]
    for j, group in enumerate(groups):
        subspace_step(pop, problem, params, streams, iteration, j, group, pool)
    return pop


def shared_cc_iteration(pop: Population, problem: Problem, params: NCSParams, streams: RandomStreams,
                        iteration: int, m_pool=None, plan: Optional[GroupingPlan] = None,
                        max_steps: Optional[int] = None, pool=None, shared_vector: str = "best") -> Population:
    """Classic-CC ablation: all partials of a group share one context vector.

    The context changes between steps, so parents are re-scored in it as well:
    ``2λ`` evaluations per sub-problem step. ``cached_fitness`` then holds the
    score of the process's partial in the most recent context.
    """
    if plan is None:
        plan = draw_plan(pop.dimension, m_pool, streams, iteration)
    groups = plan.groups if max_steps is None else plan.groups[:max_steps]
    lam = pop.size
    bounds = problem.bounds
    for j, group in enumerate(groups):
        if shared_vector == "best":
            context = pop.best_genome.copy()
        elif shared_vector == "random":
            k = int(streams.shared(iteration, j).integers(lam))
            context = pop.processes[k].mean.copy()
        else:
            raise ValueError(f"shared_vector must be 'best' or 'random', got {shared_vector!r}")
        sub_bounds = None if bounds is None else (bounds[0][group], bounds[1][group])

        parent_full = pop.means()
        sigma_full = pop.sigmas()
        parent_sub = parent_full[:, group]
        sigma_sub = sigma_full[:, group]
        z = streams.sampling(iteration, j).standard_normal(parent_sub.shape)
        offspring_sub = offspring_from_noise(parent_sub, sigma_sub, z, sub_bounds)
        # the search distributions are the processes' own, only the scoring context is shared
        offspring_own = parent_full.copy()
        offspring_own[:, group] = offspring_sub

        parents_c, offspring_c = [], []
        for i in range(lam):
            c = context.copy()
            c[group] = parent_sub[i]
            parents_c.append(c)
            c = context.copy()
            c[group] = offspring_sub[i]
            offspring_c.append(c)
        seeds = None
        if problem.stochastic:
            seeds = streams.eval_seeds(iteration, j, lam, 1) + streams.eval_seeds(iteration, j, lam, 0)
        values = problem.evaluate_many(parents_c + offspring_c, seeds, pool)
        pop.evaluations += 2 * lam
        parent_f = _finite_or_reject(values[:lam], "parent fitness")
        offspring_f = _finite_or_reject(values[lam:], "offspring fitness")

        if params.diversity_scope == "full":
            accepted, _, _ = _selection_round(parent_full, sigma_full, offspring_own, parent_f, offspring_f, params)
        else:
            accepted, _, _ = _selection_round(parent_sub, sigma_sub, offspring_sub, parent_f, offspring_f, params)
        for i, proc in enumerate(pop.processes):
            if accepted[i]:
                proc.dist.mean = offspring_own[i]
                proc.cached_fitness = float(offspring_f[i])
            else:
                proc.cached_fitness = float(parent_f[i])
            update_sigma(proc, bool(accepted[i]), params)
        for i in range(lam):
            pop.observe(parents_c[i], parent_f[i])
            pop.observe(offspring_c[i], offspring_f[i])
    return pop


# -- driver ------------------------------------------------------------------

ALGORITHMS = ("ncs", "ccncs", "ccncs-shared-complement", "hillclimb-baseline")


@dataclass
class OptimizerSettings:
    algorithm: str = "ccncs"
    lam: int = 6
    sigma_init: float = 0.2
    m_pool: tuple[int, ...] = (2, 3, 4)
    params: NCSParams = field(default_factory=NCSParams)
    budget_evals: int = 10000
    shared_vector: str = "best"
    init_range: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.lam < 2:
            raise ValueError(f"lambda must be at least 2, got {self.lam}")
        if self.budget_evals < self.lam:
            raise ValueError(f"budget_evals ({self.budget_evals}) must cover the {self.lam} initial evaluations")
        self.m_pool = tuple(sorted({int(m) for m in self.m_pool}))

    @property
    def is_cc(self) -> bool:
        return self.algorithm in ("ccncs", "ccncs-shared-complement")

    def evals_per_step(self) -> int:
        return 2 * self.lam if self.algorithm == "ccncs-shared-complement" else self.lam


@dataclass
class IterationRecord:
    iteration: int
    M: int
    steps: int
    evaluations: int
    best_ever: float
    population_best: float
    fitness: tuple
    diversity: tuple
    mean_sigma: tuple


@dataclass
class RunLog:
    header: dict
    rows: list[IterationRecord]
    best_genome: np.ndarray
    best_score: float
    final_best_genome: np.ndarray
    final_best_score: float
    final_means: np.ndarray
    evaluations: int
    wall_time: float = 0.0

    def best_scores(self) -> list[float]:
        return [r.best_ever for r in self.rows]


def _record(pop: Population, iteration: int, M: int, steps: int) -> IterationRecord:
    means, sigmas = pop.means(), pop.sigmas()
    return IterationRecord(
        iteration=iteration,
        M=M,
        steps=steps,
        evaluations=pop.evaluations,
        best_ever=float(pop.best_score),
        population_best=float(np.max(pop.fitnesses())),
        fitness=tuple(float(v) for v in pop.fitnesses()),
        diversity=tuple(float(v) for v in nearest_neighbor_diversities(means, sigmas)),
        mean_sigma=tuple(float(v) for v in sigmas.mean(axis=1)),
    )


def run_optimizer(problem: Problem, settings: OptimizerSettings, streams: RandomStreams,
                  pool=None, header: Optional[dict] = None) -> RunLog:
    """Initialize λ processes and iterate until the evaluation budget runs out.

    Only whole sub-problem steps are run, so the evaluation count never
    exceeds ``settings.budget_evals``.
    """
    if problem.sense != "maximize":
        raise ValueError("run_optimizer maximizes; wrap minimization problems with negate_wrap")
    if settings.is_cc:
        validate_m_pool(settings.m_pool, problem.dimension)
    params = settings.params
    if settings.algorithm == "hillclimb-baseline":
        params = replace(params, phi=0.0, normalize=False)

    start = time.perf_counter()
    pop = init_population(problem, settings.lam, settings.sigma_init, streams, settings.init_range, pool)
    rows: list[IterationRecord] = []
    per_step = settings.evals_per_step()
    t = 0
    while True:
        remaining = settings.budget_evals - pop.evaluations
        if remaining < per_step:
            break
        t += 1
        if settings.is_cc:
            plan = draw_plan(problem.dimension, settings.m_pool, streams, t)
            steps = min(plan.M, remaining // per_step)
            if settings.algorithm == "ccncs":
                ccncs_iteration(pop, problem, params, streams, t, plan=plan, max_steps=steps, pool=pool)
            else:
                shared_cc_iteration(pop, problem, params, streams, t, plan=plan, max_steps=steps,
                                    pool=pool, shared_vector=settings.shared_vector)
            rows.append(_record(pop, t, plan.M, steps))
        else:
            ncs_step(pop, problem, params, streams, t, pool)
            rows.append(_record(pop, t, 1, 1))

    final_genome, final_score = pop.current_best()
    hdr = {"version": __version__, "problem": problem.name, "dimension": problem.dimension,
           "algorithm": settings.algorithm, "master_seed": streams.master_seed}
    if header:
        hdr.update(header)
    return RunLog(
        header=hdr,
        rows=rows,
        best_genome=pop.best_genome.copy(),
        best_score=float(pop.best_score),
        final_best_genome=final_genome,
        final_best_score=final_score,
        final_means=pop.means(),
        evaluations=pop.evaluations,
        wall_time=time.perf_counter() - start,
    )
