import numpy as np
import pytest

import algo_tree
from algo_tree import BudgetExhausted, Refined, TreeBandit, run_anytime
from confidence import make_confidence_config
from env import make_grid_gp
from gp_core import KernelSpec, PosteriorState
from partition_tree import BoxDomain, check_tiling

BUDGET = 30


@pytest.fixture
def env(se_kernel, unit_domain):
    return make_grid_gp(se_kernel, unit_domain, grid_res=64, sigma=0.1, seed=11)


@pytest.fixture
def cfg(se_kernel, unit_domain):
    return make_confidence_config(se_kernel, unit_domain, n=BUDGET, sigma=0.1)


def test_requires_odd_split(se_kernel, unit_domain):
    cfg = make_confidence_config(se_kernel, unit_domain, n=10, sigma=0.1, n_split=2)
    with pytest.raises(ValueError):
        TreeBandit(se_kernel, unit_domain, cfg)


def test_requires_matching_dimension(se_kernel, cfg):
    with pytest.raises(ValueError):
        TreeBandit(se_kernel, BoxDomain.unit(2), cfg)


def test_first_round_refines_root(se_kernel, unit_domain, cfg, env):
    bandit = TreeBandit(se_kernel, unit_domain, cfg)
    action = bandit.step(env)
    assert isinstance(action, Refined)
    assert action.node.key == (0, 1)
    assert [leaf.node.key for leaf in bandit.leaves] == [(1, 1), (1, 2), (1, 3)]


def test_run_respects_budget_and_tiling(se_kernel, unit_domain, cfg, env):
    bandit = TreeBandit(se_kernel, unit_domain, cfg, debug=True)
    trace, recommendation = bandit.run(env)
    assert len(trace) == BUDGET
    assert list(trace.column('n_e')) == list(range(1, BUDGET + 1))
    assert bandit.t >= BUDGET
    assert sum(bandit.eval_counts.values()) == BUDGET
    assert check_tiling([leaf.node for leaf in bandit.leaves])
    assert len(bandit.leaves) <= (3 - 1) * bandit.h_max * BUDGET + 1
    assert max(leaf.node.depth for leaf in bandit.leaves) <= bandit.h_max
    assert unit_domain.contains(recommendation)
    with pytest.raises(BudgetExhausted):
        bandit.step(env)


def test_trace_regret_columns(cfg, se_kernel, env):
    trace, _ = algo_tree.run(env, se_kernel, cfg)
    deltas = trace.column('delta')
    assert np.all(deltas >= -1e-12)
    assert np.allclose(trace.column('cumulative_regret'), np.cumsum(deltas))
    assert trace.metadata['algorithm'] == 'tree'


def test_cached_indices_match_direct_computation(se_kernel, unit_domain, cfg, env):
    bandit = TreeBandit(se_kernel, unit_domain, cfg)
    for _ in range(15):
        bandit.step(env)
    stats = bandit._leaf_stats()
    for leaf, row in zip(bandit.leaves, stats):
        assert bandit.index_i(leaf) == pytest.approx(row[0], abs=1e-9)


def test_monitor_sees_every_selection(se_kernel, unit_domain, cfg, env):
    seen = []
    bandit = TreeBandit(se_kernel, unit_domain, cfg, monitor=seen.append)
    bandit.run(env)
    assert len(seen) == bandit.t
    assert {'t', 'x', 'mu', 'sigma', 'beta', 'node'} <= set(seen[0])


def test_repeat_budget_bounds_evaluations(se_kernel, unit_domain, cfg, env):
    bandit = TreeBandit(se_kernel, unit_domain, cfg)
    bandit.run(env)
    for (h, _), count in bandit.eval_counts.items():
        if h < bandit.h_max:
            assert count <= bandit.repeat_budget(h) + 1


@pytest.mark.parametrize('seed', [0, 4])
def test_refines_whenever_confidence_is_below_v(unit_domain, seed):
    kernel = KernelSpec.matern(2.5, lengthscale=0.2)
    env = make_grid_gp(kernel, unit_domain, 128, 0.1, seed)
    cfg = make_confidence_config(kernel, unit_domain, n=100, sigma=0.1)
    seen = []
    bandit = TreeBandit(kernel, unit_domain, cfg, debug=True, monitor=seen.append)
    while bandit.n_e < bandit.n:
        action = bandit.step(env)
        h = seen[-1]['node'].depth
        refine = seen[-1]['beta'] * seen[-1]['sigma'] <= bandit.v(h) and h < bandit.h_max
        assert isinstance(action, Refined) == refine
    assert len(bandit.leaves) <= bandit.leaf_limit
    for (depth, _), count in bandit.eval_counts.items():
        if depth < bandit.h_max:
            assert count <= bandit.repeat_budget(depth) + 1


def test_empty_posterior_is_kept(se_kernel, unit_domain, cfg, env):
    shared = PosteriorState(se_kernel, noise_var=0.01)
    bandit = TreeBandit(se_kernel, unit_domain, cfg, posterior=shared)
    assert bandit.posterior is shared
    bandit.run(env)
    assert len(shared) == BUDGET


def test_same_seed_same_trace(se_kernel, unit_domain, cfg):
    a, _ = algo_tree.run(make_grid_gp(se_kernel, unit_domain, 64, 0.1, 4), se_kernel, cfg)
    b, _ = algo_tree.run(make_grid_gp(se_kernel, unit_domain, 64, 0.1, 4), se_kernel, cfg)
    assert np.array_equal(a.column('x_0'), b.column('x_0'))
    assert np.array_equal(a.column('y'), b.column('y'))


def test_anytime_phases(se_kernel, unit_domain, env):
    def factory(budget):
        return make_confidence_config(se_kernel, unit_domain, n=budget, sigma=0.1)

    phases = list(run_anytime(env, se_kernel, factory, n0=4, phases=3))
    assert [p.budget for p in phases] == [4, 8, 16]
    assert [len(p.trace) for p in phases] == [4, 8, 16]
    assert phases[2].beta > phases[0].beta
