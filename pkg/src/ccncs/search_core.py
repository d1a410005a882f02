"""Negatively correlated search primitives and the flat NCS-C iteration.

Each member of the population is a search process that owns a diagonal
Gaussian ``N(mean, diag(sigma**2))``. An offspring is accepted when its
fitness plus ``phi`` times its diversity beats the parent's, where diversity
is the Bhattacharyya distance to the nearest other search process.

Everything here maximizes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .problems import Problem
from .streams import RandomStreams

__all__ = [
    "GaussianSearchDistribution",
    "SearchProcess",
    "Population",
    "NCSParams",
    "offspring_from_noise",
    "sample_offspring",
    "bhattacharyya_distance",
    "bhattacharyya_to_many",
    "diversity",
    "pairwise_bhattacharyya",
    "nearest_neighbor_diversities",
    "combined_score",
    "select",
    "normalize_scores",
    "update_sigma",
    "init_population",
    "subspace_step",
    "ncs_step",
]

logger = logging.getLogger(__name__)


def _as_genome(values) -> np.ndarray:
    x = np.array(values, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"genome must be one-dimensional, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("genome entries must be finite")
    return x


@dataclass
class GaussianSearchDistribution:
    """Diagonal Gaussian ``N(mean, diag(sigma**2))``."""

    mean: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.mean = _as_genome(self.mean)
        self.sigma = np.array(self.sigma, dtype=float)
        if self.sigma.shape != self.mean.shape:
            raise ValueError(f"sigma shape {self.sigma.shape} does not match mean shape {self.mean.shape}")
        if not np.all(np.isfinite(self.sigma)) or np.any(self.sigma <= 0):
            raise ValueError("sigma entries must be positive and finite")

    @property
    def dimension(self) -> int:
        return self.mean.size


@dataclass
class SearchProcess:
    dist: GaussianSearchDistribution
    cached_fitness: float = -np.inf
    success_count: int = 0
    trial_count: int = 0

    @property
    def mean(self) -> np.ndarray:
        return self.dist.mean

    @property
    def sigma(self) -> np.ndarray:
        return self.dist.sigma


@dataclass
class Population:
    """Search processes plus the best solution ever evaluated.

    ``evaluations`` counts objective calls made on behalf of this population.
    """

    processes: list[SearchProcess]
    best_genome: np.ndarray
    best_score: float
    evaluations: int = 0

    def __post_init__(self):
        if len(self.processes) < 2:
            raise ValueError(f"a population needs at least 2 search processes, got {len(self.processes)}")
        dims = {p.dist.dimension for p in self.processes}
        if len(dims) != 1:
            raise ValueError("all search processes must share one dimension")

    @property
    def size(self) -> int:
        return len(self.processes)

    @property
    def dimension(self) -> int:
        return self.processes[0].dist.dimension

    @property
    def best_ever(self) -> tuple[np.ndarray, float]:
        return self.best_genome, self.best_score

    def means(self) -> np.ndarray:
        return np.stack([p.mean for p in self.processes])

    def sigmas(self) -> np.ndarray:
        return np.stack([p.sigma for p in self.processes])

    def fitnesses(self) -> np.ndarray:
        return np.array([p.cached_fitness for p in self.processes])

    def current_best(self) -> tuple[np.ndarray, float]:
        """Best member of the current population (by cached fitness)."""
        f = self.fitnesses()
        i = int(np.argmax(f))
        return self.processes[i].mean.copy(), float(f[i])

    def observe(self, genome: np.ndarray, score: float) -> None:
        if np.isfinite(score) and score > self.best_score:
            self.best_score = float(score)
            self.best_genome = np.array(genome, dtype=float)


@dataclass
class NCSParams:
    """Selection and step-size settings.

    ``normalize`` min-max scales fitness and diversity over the 2λ candidates
    of a step before they are combined. With ``normalize=False`` the raw sum
    ``f + phi * d`` is used.

    ``diversity_scope`` picks the distributions compared during a sub-problem
    step: ``"full"`` uses each process's whole genome (the partial scattered
    into it), ``"group"`` only the coordinates of the active group. Both agree
    when the group covers every coordinate.
    """

    phi: float = 1.0
    normalize: bool = True
    r: float = 0.99
    epoch: int = 10
    sigma_floor: float = 1e-8
    diversity_scope: str = "full"

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"r must lie in (0, 1), got {self.r}")
        if self.epoch < 1:
            raise ValueError(f"epoch must be a positive integer, got {self.epoch}")
        if self.sigma_floor <= 0:
            raise ValueError(f"sigma_floor must be positive, got {self.sigma_floor}")
        if self.diversity_scope not in ("full", "group"):
            raise ValueError(f"diversity_scope must be 'full' or 'group', got {self.diversity_scope!r}")


# -- sampling ----------------------------------------------------------------

def offspring_from_noise(mean, sigma, z, bounds=None) -> np.ndarray:
    """``mean + sigma * z``, clipped into ``bounds`` when given."""
    x = np.asarray(mean, dtype=float) + np.asarray(sigma, dtype=float) * np.asarray(z, dtype=float)
    if bounds is not None:
        x = np.clip(x, bounds[0], bounds[1])
    return x


def sample_offspring(process: SearchProcess, rng: np.random.Generator, bounds=None) -> np.ndarray:
    z = rng.standard_normal(process.dist.dimension)
    return offspring_from_noise(process.mean, process.sigma, z, bounds)


# -- diversity ---------------------------------------------------------------

def bhattacharyya_to_many(mean, sigma, means, sigmas) -> np.ndarray:
    """Distances from one diagonal Gaussian to each row of ``means``/``sigmas``."""
    mean = np.asarray(mean, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    means = np.atleast_2d(means)
    sigmas = np.atleast_2d(sigmas)
    var_a = sigma * sigma
    var_b = sigmas * sigmas
    var_mid = 0.5 * (var_a + var_b)
    diff = means - mean
    mahal = 0.125 * np.sum(diff * diff / var_mid, axis=1)
    logdet = 0.5 * np.sum(np.log(var_mid / (sigma * sigmas)), axis=1)
    return mahal + logdet


def bhattacharyya_distance(a: GaussianSearchDistribution, b: GaussianSearchDistribution) -> float:
    if a.dimension != b.dimension:
        raise ValueError(f"dimension mismatch: {a.dimension} vs {b.dimension}")
    d = float(bhattacharyya_to_many(a.mean, a.sigma, b.mean[None, :], b.sigma[None, :])[0])
    # the log term can round to a tiny negative value for near-identical sigmas
    return max(d, 0.0)


def diversity(candidate: GaussianSearchDistribution, others: Sequence[GaussianSearchDistribution]) -> float:
    """Bhattacharyya distance from ``candidate`` to its nearest neighbour in ``others``."""
    if len(others) == 0:
        raise ValueError("diversity needs at least one other distribution")
    return min(bhattacharyya_distance(candidate, o) for o in others)


def _isotropic_scale(sigmas: np.ndarray):
    """Per-row scalar if every row of ``sigmas`` is constant, else None."""
    first = sigmas[:, :1]
    if np.all(sigmas == first):
        return first[:, 0]
    return None


def pairwise_bhattacharyya(means_a, sigmas_a, means_b, sigmas_b, max_block: int = 1 << 22) -> np.ndarray:
    """``(len(a), len(b))`` matrix of distances, computed in row blocks to bound memory.

    Rows whose sigma is a constant vector take a shortcut that needs no
    per-coordinate logarithms.
    """
    means_a, sigmas_a = np.atleast_2d(means_a), np.atleast_2d(sigmas_a)
    means_b, sigmas_b = np.atleast_2d(means_b), np.atleast_2d(sigmas_b)
    na, nb, dim = means_a.shape[0], means_b.shape[0], means_a.shape[1]
    rows = max(1, max_block // max(1, nb * dim))
    out = np.empty((na, nb))
    iso_a, iso_b = _isotropic_scale(sigmas_a), _isotropic_scale(sigmas_b)
    if iso_a is not None and iso_b is not None:
        var_mid = 0.5 * (iso_a[:, None] ** 2 + iso_b[None, :] ** 2)
        logdet = 0.5 * dim * np.log(var_mid / (iso_a[:, None] * iso_b[None, :]))
        for start in range(0, na, rows):
            diff = means_a[start:start + rows, None, :] - means_b
            out[start:start + rows] = np.einsum("ijk,ijk->ij", diff, diff)
        return 0.125 * out / var_mid + logdet
    var_b = sigmas_b * sigmas_b
    for start in range(0, na, rows):
        ma = means_a[start:start + rows, None, :]
        sa = sigmas_a[start:start + rows, None, :]
        var_mid = 0.5 * (sa * sa + var_b)
        diff = ma - means_b
        out[start:start + rows] = (0.125 * (diff * diff / var_mid).sum(axis=2)
                                   + 0.5 * np.log(var_mid / (sa * sigmas_b)).sum(axis=2))
    return out


def nearest_neighbor_diversities(means: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
    """Diversity of every row against all other rows."""
    dist = pairwise_bhattacharyya(means, sigmas, means, sigmas)
    np.fill_diagonal(dist, np.inf)
    return np.maximum(dist.min(axis=1), 0.0)


# -- selection ---------------------------------------------------------------

def combined_score(fitness: float, div: float, phi: float) -> float:
    return fitness + phi * div


def select(parent_fitness, parent_div, offspring_fitness, offspring_div, phi) -> str:
    """Return ``"offspring"`` only if it strictly beats the parent, else ``"parent"``."""
    if combined_score(offspring_fitness, offspring_div, phi) > combined_score(parent_fitness, parent_div, phi):
        return "offspring"
    return "parent"


def _minmax(values: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values, dtype=float)
    finite = np.isfinite(values)
    if not finite.any():
        return np.where(finite, 0.0, values)
    lo = values[finite].min()
    span = values[finite].max() - lo
    if span > 0:
        out[finite] = (values[finite] - lo) / span
    # non-finite entries (e.g. failed initial evaluations) stay as they are
    out[~finite] = values[~finite]
    return out


def normalize_scores(fitnesses, diversities) -> tuple[np.ndarray, np.ndarray]:
    """Min-max scale both sequences independently to [0, 1]; constants map to 0."""
    f = np.asarray(fitnesses, dtype=float)
    d = np.asarray(diversities, dtype=float)
    if f.size == 0 or d.size == 0:
        raise ValueError("normalize_scores needs non-empty sequences")
    return _minmax(f), _minmax(d)


def update_sigma(process: SearchProcess, accepted: bool, params: NCSParams) -> SearchProcess:
    """Record one selection event and apply the 1/5 success rule every ``epoch`` events."""
    process.trial_count += 1
    if accepted:
        process.success_count += 1
    if process.trial_count >= params.epoch:
        # integer comparison keeps the 1/5 boundary exact
        ratio_vs_fifth = 5 * process.success_count - process.trial_count
        sigma = process.dist.sigma
        if ratio_vs_fifth > 0:
            sigma = sigma / params.r
        elif ratio_vs_fifth < 0:
            sigma = sigma * params.r
        process.dist.sigma = np.maximum(sigma, params.sigma_floor)
        process.success_count = 0
        process.trial_count = 0
    return process


# -- iterations --------------------------------------------------------------

def _finite_or_reject(values: np.ndarray, what: str) -> np.ndarray:
    bad = ~np.isfinite(values)
    if bad.any():
        logger.warning("%d non-finite %s value(s) rejected", int(bad.sum()), what)
        values = np.where(bad, -np.inf, values)
    return values


def init_population(problem: Problem, lam: int, sigma_init: float, streams: RandomStreams,
                    init_range: Optional[tuple[float, float]] = None, pool=None) -> Population:
    """Uniform initial means, uniform sigma, and ``lam`` evaluations.

    Means are drawn inside ``problem.bounds`` unless ``init_range`` is given;
    unbounded problems without ``init_range`` use [-0.5, 0.5].
    """
    if lam < 2:
        raise ValueError(f"lambda must be at least 2, got {lam}")
    if sigma_init <= 0:
        raise ValueError(f"sigma_init must be positive, got {sigma_init}")
    rng = streams.init()
    dim = problem.dimension
    if init_range is not None:
        lo, hi = np.full(dim, float(init_range[0])), np.full(dim, float(init_range[1]))
    elif problem.bounds is not None:
        lo, hi = problem.bounds
    else:
        lo, hi = np.full(dim, -0.5), np.full(dim, 0.5)
    means = rng.uniform(lo, hi, size=(lam, dim))
    seeds = streams.eval_seeds(0, 0, lam) if problem.stochastic else None
    fitness = _finite_or_reject(problem.evaluate_many(list(means), seeds, pool), "initial fitness")
    processes = [
        SearchProcess(GaussianSearchDistribution(means[i], np.full(dim, float(sigma_init))), float(fitness[i]))
        for i in range(lam)
    ]
    best = int(np.argmax(fitness))
    pop = Population(processes, means[best].copy(), float(fitness[best]), evaluations=lam)
    if not np.isfinite(pop.best_score):
        pop.best_score = -np.inf
    return pop


def _selection_round(parent_sub, sigma_sub, offspring_sub, parent_f, offspring_f, params: NCSParams):
    """Diversities against the parent snapshot, optional normalization, selection mask."""
    lam = parent_sub.shape[0]
    # rows: the λ parents then the λ offspring, each against every parent;
    # a process is never compared with its own parent
    both = pairwise_bhattacharyya(np.vstack([parent_sub, offspring_sub]), np.vstack([sigma_sub, sigma_sub]),
                                  parent_sub, sigma_sub)
    pp, op = both[:lam], both[lam:]
    np.fill_diagonal(pp, np.inf)
    np.fill_diagonal(op, np.inf)
    parent_div = np.maximum(pp.min(axis=1), 0.0)
    offspring_div = np.maximum(op.min(axis=1), 0.0)

    valid = np.isfinite(offspring_f)
    if params.normalize:
        # offspring that failed to evaluate stay out of the scaling range
        f_all = np.concatenate([parent_f, np.where(valid, offspring_f, np.nan)])
        d_all = np.concatenate([parent_div, np.where(valid, offspring_div, np.nan)])
        f_all, d_all = normalize_scores(f_all, d_all)
        fp, fo = f_all[:lam], f_all[lam:]
        dp, do = d_all[:lam], d_all[lam:]
    else:
        fp, fo, dp, do = parent_f, offspring_f, parent_div, offspring_div

    fo = np.where(valid, fo, -np.inf)
    do = np.where(valid, do, 0.0)
    # same strict rule as select(), vectorized
    accepted = valid & (fo + params.phi * do > fp + params.phi * dp)
    return accepted, parent_div, offspring_div


def subspace_step(pop: Population, problem: Problem, params: NCSParams, streams: RandomStreams,
                  iteration: int, subproblem: int = 0, group=None, pool=None) -> Population:
    """One synchronous NCS step restricted to the coordinates in ``group``.

    Each process perturbs only ``group``; the rest of the offspring genome is
    the process's own current genome, and the parent is scored by its cached
    fitness. ``group=None`` means all coordinates. Consumes exactly
    ``pop.size`` evaluations.
    """
    lam = pop.size
    sel = slice(None) if group is None else np.asarray(group)
    bounds = problem.bounds
    sub_bounds = None if bounds is None else (bounds[0][sel], bounds[1][sel])

    parent_full = pop.means()
    sigma_full = pop.sigmas()
    parent_sub = parent_full[:, sel]
    sigma_sub = sigma_full[:, sel]
    z = streams.sampling(iteration, subproblem).standard_normal(parent_sub.shape)
    offspring_sub = offspring_from_noise(parent_sub, sigma_sub, z, sub_bounds)
    offspring_full = parent_full.copy()
    offspring_full[:, sel] = offspring_sub
    candidates = list(offspring_full)

    seeds = streams.eval_seeds(iteration, subproblem, lam) if problem.stochastic else None
    offspring_f = _finite_or_reject(problem.evaluate_many(candidates, seeds, pool), "offspring fitness")
    pop.evaluations += lam
    parent_f = pop.fitnesses()

    if params.diversity_scope == "full":
        accepted, _, _ = _selection_round(parent_full, sigma_full, offspring_full, parent_f, offspring_f, params)
    else:
        accepted, _, _ = _selection_round(parent_sub, sigma_sub, offspring_sub, parent_f, offspring_f, params)

    for i, proc in enumerate(pop.processes):
        if accepted[i]:
            proc.dist.mean = candidates[i].copy()
            proc.cached_fitness = float(offspring_f[i])
    for i, proc in enumerate(pop.processes):
        update_sigma(proc, bool(accepted[i]), params)
    for i in range(lam):
        pop.observe(candidates[i], offspring_f[i])
    return pop


def ncs_step(pop: Population, problem: Problem, params: NCSParams, streams: RandomStreams,
             iteration: int, pool=None) -> Population:
    """One NCS-C iteration over the full genome (λ evaluations)."""
    return subspace_step(pop, problem, params, streams, iteration, 0, None, pool)
