"""Feed-forward policies whose flattened weights are the optimizer's genome.

Layout is layer by layer, weights before biases, and weights are row-major
with shape ``(n_in, n_out)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = ["MlpArchitecture", "genome_size", "unflatten", "flatten", "forward", "policy_act"]


@dataclass(frozen=True)
class MlpArchitecture:
    layer_sizes: tuple[int, ...]
    hidden_activation: str = "tanh"

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.layer_sizes)
        if len(sizes) < 2:
            raise ValueError(f"an MLP needs at least an input and an output layer, got {sizes}")
        if any(n < 1 for n in sizes):
            raise ValueError(f"layer sizes must be positive, got {sizes}")
        if self.hidden_activation != "tanh":
            raise ValueError(f"unsupported hidden activation {self.hidden_activation!r}")
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]


def genome_size(arch: MlpArchitecture) -> int:
    sizes = arch.layer_sizes
    return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))


def unflatten(genome, arch: MlpArchitecture) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split a flat genome into ``[(W, b), ...]``; arrays are views into ``genome``."""
    genome = np.asarray(genome, dtype=float)
    n = genome_size(arch)
    if genome.shape != (n,):
        raise ValueError(f"genome length {genome.size} does not match architecture size {n}")
    layers = []
    pos = 0
    for a, b in zip(arch.layer_sizes[:-1], arch.layer_sizes[1:]):
        w = genome[pos:pos + a * b].reshape(a, b)
        pos += a * b
        bias = genome[pos:pos + b]
        pos += b
        layers.append((w, bias))
    return layers


def flatten(layers: Sequence[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    parts = []
    for w, b in layers:
        parts.append(np.asarray(w, dtype=float).ravel())
        parts.append(np.asarray(b, dtype=float).ravel())
    return np.concatenate(parts)


def forward(layers, observation) -> np.ndarray:
    """tanh hidden layers, linear output."""
    h = np.asarray(observation, dtype=float)
    last = len(layers) - 1
    for k, (w, b) in enumerate(layers):
        h = h @ w + b
        if k < last:
            h = np.tanh(h)
    return h


def policy_act(genome, arch: MlpArchitecture, observation) -> int:
    """Greedy action; ties go to the lowest index."""
    obs = np.asarray(observation, dtype=float)
    if obs.shape != (arch.n_inputs,):
        raise ValueError(f"observation of shape {obs.shape} does not match input size {arch.n_inputs}")
    if not np.all(np.isfinite(obs)):
        raise ValueError("observation must be finite")
    return int(np.argmax(forward(unflatten(genome, arch), obs)))
