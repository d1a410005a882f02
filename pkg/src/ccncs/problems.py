"""Black-box objective contract and benchmark functions.

The optimizers in this package maximize. Minimization benchmarks are
returned with ``sense="minimize"`` and must go through :func:`negate_wrap`
before being handed to an optimizer.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "EvalCounter",
    "Problem",
    "negate_wrap",
    "benchmark",
    "sphere",
    "rastrigin",
    "ackley",
    "rosenbrock",
    "himmelblau",
    "HIMMELBLAU_MINIMA",
    "BENCHMARKS",
]


class EvalCounter:
    """Thread-safe evaluation counter, shared between a problem and its wrappers."""

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def add(self, n: int = 1) -> None:
        with self._lock:
            self._count += n

    @property
    def count(self) -> int:
        return self._count

    def reset(self) -> None:
        with self._lock:
            self._count = 0


def _call(func, x, seed):
    if seed is None:
        return float(func(x))
    return float(func(x, seed))


@dataclass
class Problem:
    """A black-box objective.

    Parameters
    ----------
    dimension : int
        Number of decision variables.
    func : callable
        ``func(x)`` for deterministic objectives, ``func(x, seed)`` when
        ``stochastic`` is True. Must be picklable to run under a process pool.
    bounds : (lower, upper) arrays, optional
        Box constraints. ``None`` means unbounded.
    sense : {"maximize", "minimize"}
    stochastic : bool
        Stochastic objectives receive a per-evaluation integer seed.
    name : str
    """

    dimension: int
    func: Callable
    bounds: Optional[tuple[np.ndarray, np.ndarray]] = None
    sense: str = "maximize"
    stochastic: bool = False
    name: str = "problem"
    counter: EvalCounter = field(default_factory=EvalCounter)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be positive, got {self.dimension}")
        if self.sense not in ("maximize", "minimize"):
            raise ValueError(f"sense must be 'maximize' or 'minimize', got {self.sense!r}")
        if self.bounds is not None:
            lower = np.broadcast_to(np.asarray(self.bounds[0], dtype=float), (self.dimension,)).copy()
            upper = np.broadcast_to(np.asarray(self.bounds[1], dtype=float), (self.dimension,)).copy()
            if np.any(upper < lower):
                raise ValueError("upper bounds must not be below lower bounds")
            self.bounds = (lower, upper)

    @property
    def eval_counter(self) -> int:
        return self.counter.count

    def evaluate(self, x, seed: Optional[int] = None) -> float:
        """Evaluate one genome; increments the counter by exactly one."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"expected genome of shape ({self.dimension},), got {x.shape}")
        self.counter.add(1)
        return _call(self.func, x, seed if self.stochastic else None)

    def evaluate_many(self, genomes: Sequence[np.ndarray], seeds: Optional[Sequence[int]] = None,
                      pool=None) -> np.ndarray:
        """Evaluate a batch, optionally on a ``concurrent.futures`` executor.

        The counter is advanced in the calling thread, so it stays exact for
        process pools as well. Results keep the input order.
        """
        n = len(genomes)
        for x in genomes:
            if np.shape(x) != (self.dimension,):
                raise ValueError(f"expected genome of shape ({self.dimension},), got {np.shape(x)}")
        if not self.stochastic or seeds is None:
            seeds = [None] * n
        self.counter.add(n)
        if pool is None or n <= 1:
            values = [_call(self.func, x, s) for x, s in zip(genomes, seeds)]
        else:
            values = list(pool.map(_call, [self.func] * n, genomes, seeds))
        return np.asarray(values, dtype=float)


class _Negated:
    def __init__(self, func):
        self.func = func

    def __call__(self, *args):
        return -self.func(*args)


def negate_wrap(problem: Problem) -> Problem:
    """Turn a minimization problem into a maximization one.

    Bounds, dimension and the evaluation counter are shared with the original.
    """
    if problem.sense != "minimize":
        raise ValueError("negate_wrap expects a problem with sense='minimize'")
    return Problem(
        dimension=problem.dimension,
        func=_Negated(problem.func),
        bounds=problem.bounds,
        sense="maximize",
        stochastic=problem.stochastic,
        name=problem.name,
        counter=problem.counter,
    )


# -- benchmark functions (minimization form) ---------------------------------

def sphere(x):
    x = np.asarray(x, dtype=float)
    return float(np.dot(x, x))


def rastrigin(x):
    x = np.asarray(x, dtype=float)
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def ackley(x):
    x = np.asarray(x, dtype=float)
    n = x.size
    a = -20.0 * np.exp(-0.2 * np.sqrt(np.dot(x, x) / n))
    b = -np.exp(np.sum(np.cos(2.0 * np.pi * x)) / n)
    return float(a + b + 20.0 + np.e)


def rosenbrock(x):
    x = np.asarray(x, dtype=float)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def himmelblau(x):
    x0, x1 = float(x[0]), float(x[1])
    return (x0 * x0 + x1 - 11.0) ** 2 + (x0 + x1 * x1 - 7.0) ** 2


# Refined with BFGS followed by Nelder-Mead from the textbook coordinates.
HIMMELBLAU_MINIMA = np.array([
    [3.0, 2.0],
    [-2.8051180869527443, 3.1313125182505726],
    [-3.779310253377747, -3.283185991286169],
    [3.5844283403304917, -1.8481265269644034],
])

BENCHMARKS = {
    "sphere": (sphere, (-5.12, 5.12)),
    "rastrigin": (rastrigin, (-5.12, 5.12)),
    "ackley": (ackley, (-32.768, 32.768)),
    "rosenbrock": (rosenbrock, (-5.0, 10.0)),
    "himmelblau": (himmelblau, (-6.0, 6.0)),
}


def benchmark(name: str, dimension: int) -> Problem:
    """Standard benchmark with its conventional box, in minimization form."""
    try:
        func, (lo, hi) = BENCHMARKS[name]
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}") from None
    if name == "himmelblau" and dimension != 2:
        raise ValueError(f"himmelblau is defined for dimension 2 only, got {dimension}")
    return Problem(
        dimension=dimension,
        func=func,
        bounds=(np.full(dimension, lo), np.full(dimension, hi)),
        sense="minimize",
        name=name,
    )
