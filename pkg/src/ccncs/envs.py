"""Desk-scale episodic environments and the policy fitness evaluator.

Two environments are provided: a deceptive sparse-reward chain and the
classic cart-pole balance task. Both expose a small ``reset``/``step`` API.
For MLP policies, :func:`evaluate_policy` runs whole episodes in compiled
kernels that follow the same transition rules as the Python classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

from .neuro import MlpArchitecture, genome_size, policy_act

__all__ = [
    "SparseChain",
    "CartPole",
    "CartPoleConfig",
    "sparse_chain",
    "cartpole",
    "EnvSpec",
    "make_env",
    "episode_seed",
    "run_episode",
    "evaluate_policy",
    "PolicyObjective",
]

LEFT, RIGHT = 0, 1


class SparseChain:
    """States ``0..N-1`` on a line, start at 1.

    State 0 pays a small distractor reward and ends the episode; state N-1
    pays 1.0 and ends it. Anything else pays 0 until the horizon.
    """

    action_count = 2

    def __init__(self, N: int = 10, horizon: int = 20, distractor_reward: float = 0.01):
        if N < 3:
            raise ValueError(f"sparse chain needs N >= 3, got {N}")
        if horizon < N:
            raise ValueError(f"horizon ({horizon}) must be at least N ({N})")
        self.N = int(N)
        self.horizon = int(horizon)
        self.distractor_reward = float(distractor_reward)
        self.state = 1
        self.t = 0
        self.done = True

    @property
    def observation_size(self) -> int:
        return self.N

    @property
    def max_steps(self) -> int:
        return self.horizon

    def _obs(self) -> np.ndarray:
        obs = np.zeros(self.N)
        obs[self.state] = 1.0
        return obs

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        self.state = 1
        self.t = 0
        self.done = False
        return self._obs()

    def step(self, action: int):
        if self.done:
            raise RuntimeError("step() called on a finished episode; call reset()")
        if action == RIGHT:
            self.state = min(self.state + 1, self.N - 1)
        elif action == LEFT:
            self.state = max(self.state - 1, 0)
        else:
            raise ValueError(f"invalid action {action}")
        self.t += 1
        reward = 0.0
        if self.state == 0:
            reward, self.done = self.distractor_reward, True
        elif self.state == self.N - 1:
            reward, self.done = 1.0, True
        elif self.t >= self.horizon:
            self.done = True
        return self._obs(), reward, self.done


@dataclass(frozen=True)
class CartPoleConfig:
    gravity: float = 9.8
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    half_length: float = 0.5
    force: float = 10.0
    tau: float = 0.02
    angle_limit: float = 12 * 2 * math.pi / 360
    position_limit: float = 2.4
    max_steps: int = 500

    def as_array(self) -> np.ndarray:
        return np.array([self.gravity, self.cart_mass, self.pole_mass, self.half_length,
                         self.force, self.tau, self.angle_limit, self.position_limit])


@numba.njit(cache=True)
def _cartpole_step(s, action, p):
    g, mc, mp, l, fmag, tau = p[0], p[1], p[2], p[3], p[4], p[5]
    x, x_dot, theta, theta_dot = s[0], s[1], s[2], s[3]
    f = fmag if action == 1 else -fmag
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    total = mc + mp
    pml = mp * l
    temp = (f + pml * theta_dot * theta_dot * sin_t) / total
    theta_acc = (g * sin_t - cos_t * temp) / (l * (4.0 / 3.0 - mp * cos_t * cos_t / total))
    x_acc = temp - pml * theta_acc * cos_t / total
    s[0] = x + tau * x_dot
    s[1] = x_dot + tau * x_acc
    s[2] = theta + tau * theta_dot
    s[3] = theta_dot + tau * theta_acc
    return abs(s[0]) > p[7] or abs(s[2]) > p[6]


class CartPole:
    """Inverted pendulum on a cart, explicit Euler integration.

    Reward is +1 for every step that does not end in failure.
    """

    action_count = 2
    observation_size = 4

    def __init__(self, config: Optional[CartPoleConfig] = None):
        self.config = config or CartPoleConfig()
        self._params = self.config.as_array()
        self.state = np.zeros(4)
        self.t = 0
        self.done = True

    @property
    def max_steps(self) -> int:
        return self.config.max_steps

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        self.state = np.random.default_rng(seed).uniform(-0.05, 0.05, size=4)
        self.t = 0
        self.done = False
        return self.state.copy()

    def step(self, action: int):
        if self.done:
            raise RuntimeError("step() called on a finished episode; call reset()")
        if action not in (LEFT, RIGHT):
            raise ValueError(f"invalid action {action}")
        failed = _cartpole_step(self.state, int(action), self._params)
        self.t += 1
        reward = 0.0 if failed else 1.0
        self.done = bool(failed) or self.t >= self.config.max_steps
        return self.state.copy(), reward, self.done


def sparse_chain(N: int = 10, horizon: int = 20, distractor_reward: float = 0.01) -> SparseChain:
    return SparseChain(N, horizon, distractor_reward)


def cartpole(config: Optional[CartPoleConfig] = None, **overrides) -> CartPole:
    if overrides:
        config = CartPoleConfig(**{**(config or CartPoleConfig()).__dict__, **overrides})
    return CartPole(config)


@dataclass(frozen=True)
class EnvSpec:
    """Picklable description of an environment, used by worker processes."""

    name: str
    params: tuple = field(default_factory=tuple)

    @classmethod
    def from_dict(cls, name: str, params: Optional[dict] = None) -> "EnvSpec":
        return cls(name, tuple(sorted((params or {}).items())))

    def kwargs(self) -> dict:
        return dict(self.params)


def make_env(spec: EnvSpec):
    if spec.name == "sparse_chain":
        return sparse_chain(**spec.kwargs())
    if spec.name == "cartpole":
        return cartpole(**spec.kwargs())
    raise ValueError(f"unknown environment {spec.name!r}; choose 'sparse_chain' or 'cartpole'")


# -- compiled rollouts --------------------------------------------------------

@numba.njit(cache=True)
def _mlp_act(genome, sizes, obs, buf_a, buf_b):
    n_layers = sizes.shape[0] - 1
    cur = buf_a
    nxt = buf_b
    for k in range(sizes[0]):
        cur[k] = obs[k]
    pos = 0
    for layer in range(n_layers):
        n_in = sizes[layer]
        n_out = sizes[layer + 1]
        bias_pos = pos + n_in * n_out
        for j in range(n_out):
            acc = 0.0
            for i in range(n_in):
                acc += cur[i] * genome[pos + i * n_out + j]
            acc += genome[bias_pos + j]
            if layer < n_layers - 1:
                acc = math.tanh(acc)
            nxt[j] = acc
        pos = bias_pos + n_out
        cur, nxt = nxt, cur
    best = 0
    for j in range(1, sizes[n_layers]):
        if cur[j] > cur[best]:
            best = j
    return best


@numba.njit(cache=True)
def _chain_episode(genome, sizes, N, horizon, distractor):
    width = 0
    for k in range(sizes.shape[0]):
        width = max(width, sizes[k])
    buf_a = np.zeros(width)
    buf_b = np.zeros(width)
    obs = np.zeros(N)
    state = 1
    for t in range(horizon):
        obs[:] = 0.0
        obs[state] = 1.0
        if _mlp_act(genome, sizes, obs, buf_a, buf_b) == 1:
            state = min(state + 1, N - 1)
        else:
            state = max(state - 1, 0)
        if state == 0:
            return distractor
        if state == N - 1:
            return 1.0
    return 0.0


@numba.njit(cache=True)
def _cartpole_episode(genome, sizes, state0, params, max_steps):
    width = 0
    for k in range(sizes.shape[0]):
        width = max(width, sizes[k])
    buf_a = np.zeros(width)
    buf_b = np.zeros(width)
    s = state0.copy()
    total = 0.0
    for t in range(max_steps):
        action = _mlp_act(genome, sizes, s, buf_a, buf_b)
        if _cartpole_step(s, action, params):
            break
        total += 1.0
    return total


# -- evaluation ---------------------------------------------------------------

def episode_seed(seed: int, episode: int) -> int:
    """Per-episode seed derived from an evaluation seed and the episode index."""
    return int(np.random.SeedSequence(int(seed), spawn_key=(int(episode),)).generate_state(1, np.uint64)[0])


def run_episode(genome, arch: MlpArchitecture, env, seed: Optional[int]) -> float:
    """Reference rollout through the Python ``reset``/``step`` API."""
    obs = env.reset(seed)
    total = 0.0
    done = False
    while not done:
        obs, reward, done = env.step(policy_act(genome, arch, obs))
        total += reward
    return total


def _fast_episode(genome, sizes, env, seed):
    if isinstance(env, SparseChain):
        return _chain_episode(genome, sizes, env.N, env.horizon, env.distractor_reward)
    state0 = np.random.default_rng(seed).uniform(-0.05, 0.05, size=4)
    return _cartpole_episode(genome, sizes, state0, env._params, env.config.max_steps)


def evaluate_policy(genome, arch: MlpArchitecture, env, episodes: int, seed: int,
                    backend: str = "auto") -> float:
    """Mean return over ``episodes`` episodes with seeds derived from ``seed``.

    ``backend="python"`` forces the step-by-step reference path; ``"auto"``
    uses the compiled kernels for the built-in environments.
    """
    if episodes < 1:
        raise ValueError(f"episodes must be positive, got {episodes}")
    genome = np.ascontiguousarray(genome, dtype=float)
    if genome.shape != (genome_size(arch),):
        raise ValueError(f"genome length {genome.size} does not match architecture size {genome_size(arch)}")
    if arch.n_inputs != env.observation_size or arch.n_outputs != env.action_count:
        raise ValueError("architecture does not match the environment's observation/action sizes")
    fast = backend != "python" and isinstance(env, (SparseChain, CartPole))
    if backend == "numba" and not fast:
        raise ValueError("no compiled kernel for this environment")
    sizes = np.asarray(arch.layer_sizes, dtype=np.int64)
    total = 0.0
    for e in range(episodes):
        s = episode_seed(seed, e)
        total += _fast_episode(genome, sizes, env, s) if fast else run_episode(genome, arch, env, s)
    return total / episodes


class PolicyObjective:
    """``f(genome, seed)`` = mean episodic return; picklable for process pools.

    With ``fixed_seed`` set, every evaluation reuses that seed (common random
    numbers across individuals).
    """

    def __init__(self, arch: MlpArchitecture, env_spec: EnvSpec, episodes: int = 3,
                 fixed_seed: Optional[int] = None, backend: str = "auto"):
        self.arch = arch
        self.env_spec = env_spec
        self.episodes = int(episodes)
        self.fixed_seed = fixed_seed
        self.backend = backend

    def __call__(self, genome, seed: int = 0) -> float:
        if self.fixed_seed is not None:
            seed = self.fixed_seed
        # fresh env per call: live environment state is never shared between threads
        return evaluate_policy(genome, self.arch, make_env(self.env_spec), self.episodes, seed, self.backend)
