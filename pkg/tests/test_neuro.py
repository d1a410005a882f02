"""neuro: genome layout and greedy policy."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccncs.neuro import MlpArchitecture, flatten, forward, genome_size, policy_act, unflatten


def test_genome_size_examples():
    assert genome_size(MlpArchitecture((4, 8, 2))) == 58
    assert genome_size(MlpArchitecture((1, 1))) == 2
    assert genome_size(MlpArchitecture((10, 1))) == 11


def test_architecture_validation():
    for bad in [(4,), (4, 0, 2)]:
        with pytest.raises(ValueError):
            MlpArchitecture(bad)
    with pytest.raises(ValueError):
        MlpArchitecture((2, 2), hidden_activation="relu")


def test_layout_examples():
    arch = MlpArchitecture((4, 8, 2))
    g = np.arange(58.0)
    (w1, b1), (w2, b2) = unflatten(g, arch)
    assert [w1.size, b1.size, w2.size, b2.size] == [32, 8, 16, 2]
    assert w1.shape == (4, 8) and w1[0, 1] == 1.0 and w1[1, 0] == 8.0  # row-major
    assert b1[0] == 32 and w2[0, 0] == 40 and b2.tolist() == [56, 57]
    assert all(np.all(t == 0) for layer in unflatten(np.zeros(58), arch) for t in layer)
    with pytest.raises(ValueError):
        unflatten(np.zeros(57), arch)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 9), min_size=2, max_size=5), st.integers(0, 2 ** 32 - 1))
def test_flatten_unflatten_bijection(sizes, seed):
    arch = MlpArchitecture(tuple(sizes))
    g = np.random.default_rng(seed).normal(size=genome_size(arch))
    assert np.array_equal(flatten(unflatten(g, arch)), g)


def test_policy_act_examples():
    arch = MlpArchitecture((4, 8, 2))
    assert policy_act(np.zeros(58), arch, np.ones(4)) == 0
    tiny = MlpArchitecture((1, 2))
    assert policy_act(np.array([0.0, 0.0, 0.0, 1.0]), tiny, np.array([3.7])) == 1
    with pytest.raises(ValueError):
        policy_act(np.zeros(58), arch, np.ones(3))
    with pytest.raises(ValueError):
        policy_act(np.zeros(58), arch, np.array([0, 0, np.nan, 0]))


def test_forward_tanh_hidden_linear_output():
    arch = MlpArchitecture((1, 1, 1))
    g = np.array([2.0, 0.0, 3.0, 0.5])
    assert forward(unflatten(g, arch), np.array([1.0]))[0] == pytest.approx(3 * np.tanh(2.0) + 0.5)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=2, max_size=4), st.integers(0, 2 ** 32 - 1), st.floats(-100, 100))
def test_argmax_invariant_to_output_bias_shift(sizes, seed, shift):
    arch = MlpArchitecture(tuple(sizes))
    rng = np.random.default_rng(seed)
    g = rng.normal(size=genome_size(arch))
    obs = rng.normal(size=sizes[0])
    a = policy_act(g, arch, obs)
    shifted = g.copy()
    shifted[-sizes[-1]:] += shift
    out, out_s = forward(unflatten(g, arch), obs), forward(unflatten(shifted, arch), obs)
    # a shift can only flip the argmax through rounding when outputs are nearly tied
    gap = np.sort(out)[-1] - np.sort(out)[-2] if sizes[-1] > 1 else np.inf
    if gap > 1e-9 * (1 + abs(shift)):
        assert policy_act(shifted, arch, obs) == a
    assert policy_act(g, arch, obs) == a  # deterministic
    assert np.allclose(out_s - out, shift)
