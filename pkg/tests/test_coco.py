"""coco: grouping, complements, CCNCS iteration and the optimizer driver."""

from __future__ import annotations

from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccncs.coco import (
    GroupingPlan,
    OptimizerSettings,
    PartialSolution,
    ccncs_iteration,
    choose_M,
    complement_individual,
    complement_shared,
    draw_plan,
    extract_partial,
    random_grouping,
    run_optimizer,
    shared_cc_iteration,
    validate_m_pool,
)
from ccncs.problems import benchmark, negate_wrap
from ccncs.search_core import NCSParams, init_population, subspace_step
from ccncs.streams import RandomStreams


def test_choose_M_examples():
    rng = np.random.default_rng(0)
    counts = Counter(choose_M({2, 3, 4}, rng) for _ in range(3000))
    assert set(counts) == {2, 3, 4}
    assert all(abs(c - 1000) < 120 for c in counts.values())
    assert {choose_M({1}, rng) for _ in range(20)} == {1}
    with pytest.raises(ValueError):
        validate_m_pool({2, 3, 4}, 3)


def test_random_grouping_examples():
    rng = np.random.default_rng(1)
    plan = random_grouping(6, 3, rng)
    assert sorted(len(g) for g in plan) == [2, 2, 2]
    assert sorted(np.concatenate(plan.groups).tolist()) == list(range(6))
    assert sorted(len(g) for g in random_grouping(5, 2, rng)) == [2, 3]
    assert random_grouping(7, 1, rng).groups[0].tolist() == list(range(7))
    with pytest.raises(ValueError):
        random_grouping(3, 4, rng)


def test_grouping_plan_validates():
    with pytest.raises(ValueError):
        GroupingPlan([np.array([0, 1]), np.array([1, 2])], 3)
    with pytest.raises(ValueError):
        GroupingPlan([np.array([0]), np.array([1])], 3)


def test_grouping_invariants_1000_draws():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        D = int(rng.integers(1, 60))
        M = int(rng.integers(1, D + 1))
        plan = random_grouping(D, M, rng)
        sizes = [len(g) for g in plan]
        assert len(plan) == M and min(sizes) >= 1 and max(sizes) - min(sizes) <= 1
        flat = np.concatenate(plan.groups)
        assert flat.size == D and np.array_equal(np.sort(flat), np.arange(D))


def test_extract_and_complement_examples():
    full = np.array([10.0, 11.0, 12.0, 13.0])
    assert extract_partial(full, [0, 2]).values.tolist() == [10, 12]
    assert np.array_equal(extract_partial(full, [0, 1, 2, 3]).values, full)
    part = PartialSolution(np.array([1.0, 2.0]), np.array([0, 2]))
    assert complement_individual(part, full).tolist() == [1, 11, 2, 13]
    assert np.array_equal(complement_individual(extract_partial(full, [1, 3]), full), full)
    whole = PartialSolution(np.array([5.0, 6, 7, 8]), np.arange(4))
    assert complement_individual(whole, full).tolist() == [5, 6, 7, 8]
    with pytest.raises(ValueError):
        extract_partial(full, [4])
    with pytest.raises(ValueError):
        complement_individual(part, np.zeros(2))


def test_complement_shared_examples():
    shared = np.arange(5.0)
    g = np.array([1, 3])
    a = complement_shared(PartialSolution(np.array([9.0, 9.0]), g), shared)
    b = complement_shared(PartialSolution(np.array([-1.0, 4.0]), g), shared)
    mask = np.ones(5, bool)
    mask[g] = False
    assert np.array_equal(a[mask], b[mask])
    p = PartialSolution(np.array([7.0, 8.0]), g)
    assert np.array_equal(complement_shared(p, shared), complement_individual(p, shared))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 30).flatmap(lambda d: st.tuples(
    st.lists(st.floats(-1e6, 1e6), min_size=d, max_size=d),
    st.lists(st.integers(0, d - 1), min_size=1, max_size=d, unique=True))))
def test_roundtrip_identity(case):
    g, grp = np.array(case[0]), np.array(case[1])
    assert np.array_equal(complement_individual(extract_partial(g, grp), g), g)


def _problem(dim=8, name="sphere"):
    return negate_wrap(benchmark(name, dim))


def test_ccncs_iteration_costs_lambda_times_M_and_touches_group_only():
    prob = _problem(9)
    streams = RandomStreams(3)
    pop = init_population(prob, 6, 0.2, streams)
    for t in range(1, 20):
        before = pop.evaluations
        plan = draw_plan(9, (2, 3, 4), streams, t)
        ccncs_iteration(pop, prob, NCSParams(), streams, t, plan=plan)
        assert pop.evaluations - before == 6 * plan.M
        assert prob.eval_counter == pop.evaluations
    # one sub-problem step changes only the active group's coordinates
    group = np.array([1, 4, 7])
    before = pop.means().copy()
    subspace_step(pop, prob, NCSParams(), streams, 99, 0, group)
    other = np.setdiff1d(np.arange(9), group)
    np.testing.assert_array_equal(pop.means()[:, other], before[:, other])


def test_ccncs_cache_matches_reevaluation():
    prob = _problem(10, "rastrigin")
    streams = RandomStreams(4)
    pop = init_population(prob, 6, 0.2, streams)
    for t in range(1, 30):
        ccncs_iteration(pop, prob, NCSParams(), streams, t, m_pool=(2, 3, 4))
        for proc in pop.processes:
            assert proc.cached_fitness == prob.func(proc.mean)


def test_shared_variant_costs_two_lambda_per_step():
    prob = _problem(6)
    streams = RandomStreams(5)
    pop = init_population(prob, 4, 0.2, streams)
    plan = draw_plan(6, (2, 3), streams, 1)
    shared_cc_iteration(pop, prob, NCSParams(), streams, 1, plan=plan)
    assert pop.evaluations == 4 + 2 * 4 * plan.M == prob.eval_counter
    shared_cc_iteration(pop, prob, NCSParams(), streams, 2, m_pool=(2,), shared_vector="random")
    with pytest.raises(ValueError):
        shared_cc_iteration(pop, prob, NCSParams(), streams, 3, m_pool=(2,), shared_vector="worst")


@pytest.mark.parametrize("algorithm", ["ncs", "ccncs", "ccncs-shared-complement", "hillclimb-baseline"])
def test_run_optimizer_budget_and_log_invariants(algorithm):
    prob = _problem(7)
    s = OptimizerSettings(algorithm=algorithm, lam=5, m_pool=(2, 3), budget_evals=437)
    log = run_optimizer(prob, s, RandomStreams(1))
    assert log.evaluations == prob.eval_counter <= 437
    assert 437 - log.evaluations < s.evals_per_step()
    evals = [r.evaluations for r in log.rows]
    assert all(b > a for a, b in zip(evals, evals[1:]))
    best = log.best_scores()
    assert all(b >= a for a, b in zip(best, best[1:]))
    assert log.header["algorithm"] == algorithm


def test_run_optimizer_budget_equal_lambda_is_init_only():
    prob = _problem(4)
    log = run_optimizer(prob, OptimizerSettings("ccncs", lam=6, budget_evals=6, m_pool=(2,)), RandomStreams(2))
    assert log.rows == [] and log.evaluations == 6
    streams = RandomStreams(2)
    pop = init_population(_problem(4), 6, 0.2, streams)
    assert log.best_score == pop.best_score


def test_optimizer_settings_validation():
    with pytest.raises(ValueError):
        OptimizerSettings("ncs", lam=1)
    with pytest.raises(ValueError):
        OptimizerSettings("ncs", lam=6, budget_evals=3)
    with pytest.raises(ValueError):
        OptimizerSettings("nope")
    with pytest.raises(ValueError):
        run_optimizer(benchmark("sphere", 3), OptimizerSettings("ncs"), RandomStreams(0))


def test_m1_equivalence_small():
    for seed in range(3):
        a = run_optimizer(_problem(6), OptimizerSettings("ncs", budget_evals=600), RandomStreams(seed))
        b = run_optimizer(_problem(6), OptimizerSettings("ccncs", m_pool=(1,), budget_evals=600), RandomStreams(seed))
        assert a.best_scores() == b.best_scores()
        assert np.array_equal(a.final_means, b.final_means)


def test_same_seed_same_log_different_seed_differs():
    def run(seed):
        return run_optimizer(_problem(5), OptimizerSettings("ccncs", budget_evals=500), RandomStreams(seed))
    a, b, c = run(1), run(1), run(2)
    assert [r.fitness for r in a.rows] == [r.fitness for r in b.rows]
    assert a.best_scores() != c.best_scores()
