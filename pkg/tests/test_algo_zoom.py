import numpy as np
import pytest

import algo_zoom
from algo_zoom import (ActivePoint, Added, Covered, Uncovered, ZoomBandit, covering_check,
                       packing_number)
from confidence import make_confidence_config
from env import make_grid_gp
from partition_tree import BoxDomain

BUDGET = 30


@pytest.fixture
def env(se_kernel, unit_domain):
    return make_grid_gp(se_kernel, unit_domain, grid_res=64, sigma=0.1, seed=21)


@pytest.fixture
def cfg(se_kernel, unit_domain):
    return make_confidence_config(se_kernel, unit_domain, n=BUDGET, sigma=0.1)


def _point(x, radius_level):
    return ActivePoint(np.array(x, dtype=float), k=radius_level)


def test_empty_active_set_is_uncovered():
    result = covering_check([], BoxDomain.unit(1), 0.01)
    assert isinstance(result, Uncovered)
    assert np.allclose(result.point, [0.5])


def test_single_large_ball_covers():
    assert isinstance(covering_check([_point([0.5], 0)], BoxDomain.unit(2), 0.01), Covered)


def test_gap_between_balls_is_found():
    # B(0.25, 0.25) y B(0.8, 0.25) dejan libre (0.5, 0.55)
    active = [_point([0.25], 2), _point([0.8], 2)]
    result = covering_check(active, BoxDomain.unit(1), 0.001)
    assert isinstance(result, Uncovered)
    assert 0.5 < result.point[0] < 0.55


def test_gap_at_the_border_is_found():
    active = [ActivePoint(np.array([0.25]), k=0, r0=0.7)]
    result = covering_check(active, BoxDomain.unit(1), 0.001)
    assert isinstance(result, Uncovered)
    assert 0.95 <= result.point[0] <= 1.0


def test_upper_gap_is_reported_first():
    # B(0.25, 0.25) y B(0.75, 0.2) dejan libres (0.5, 0.55) y (0.95, 1]
    active = [_point([0.25], 2), ActivePoint(np.array([0.75]), k=0, r0=0.2)]
    result = covering_check(active, BoxDomain.unit(1), 1e-4)
    assert isinstance(result, Uncovered)
    assert 0.95 <= result.point[0] <= 1.0
    lower = covering_check(active, BoxDomain.unit(1), 1e-4, region=(np.array([0.0]), np.array([0.9])))
    assert isinstance(lower, Uncovered)
    assert 0.5 < lower.point[0] < 0.55


def test_region_restricted_check():
    active = [_point([0.25], 2)]
    assert isinstance(covering_check(active, BoxDomain.unit(1), 0.01, region=(np.array([0.0]),
                                                                            np.array([0.4]))),
                      Covered)
    assert isinstance(covering_check(active, BoxDomain.unit(1), 0.01, region=(np.array([0.6]),
                                                                            np.array([0.9]))),
                      Uncovered)


def test_covering_check_rejects_bad_eps():
    with pytest.raises(ValueError):
        covering_check([], BoxDomain.unit(1), 0.0)


def test_packing_number():
    assert packing_number(1, 0.1) == 10
    assert packing_number(2, 0.25) == 16
    assert packing_number(1, 0.3) == 4


def test_first_round_adds_a_point(se_kernel, unit_domain, cfg, env):
    bandit = ZoomBandit(se_kernel, unit_domain, cfg)
    action = bandit.step(env)
    assert isinstance(action, Added)
    assert np.allclose(action.point, [0.5])
    assert len(bandit.active) == 1


def test_run_keeps_domain_covered(se_kernel, unit_domain, cfg, env):
    bandit = ZoomBandit(se_kernel, unit_domain, cfg, debug=True)
    trace, recommendation = bandit.run(env)
    assert len(trace) == BUDGET
    assert bandit.separation_ok()
    assert len(bandit.active) <= packing_number(1, bandit.r_min / 2.0)
    assert all(p.radius >= bandit.r_min / 2.0 for p in bandit.active)
    assert unit_domain.contains(recommendation)
    assert trace.metadata['algorithm'] == 'zoom'


def test_separation_follows_addition_order(se_kernel, unit_domain, cfg):
    bandit = ZoomBandit(se_kernel, unit_domain, cfg)
    bandit.active = [ActivePoint(np.array([0.2]), k=2, order=0), ActivePoint(np.array([0.6]), k=0, order=1)]
    assert bandit.separation_ok()
    bandit.active = [ActivePoint(np.array([0.6]), k=0, order=0), ActivePoint(np.array([0.2]), k=2, order=1)]
    assert not bandit.separation_ok()


def test_run_respects_repeat_budget_and_suboptimality(se_kernel, unit_domain, cfg, env):
    bandit = ZoomBandit(se_kernel, unit_domain, cfg)
    bandit.run(env)
    assert sum(bandit.level_evals.values()) == BUDGET
    assert len(bandit.evaluated_levels) == BUDGET
    assert bandit.repeat_overruns() == []
    assert bandit.suboptimality_ok()
    assert bandit.separation_ok()


def test_repeat_overruns_skip_levels_below_r_min(se_kernel, unit_domain, cfg):
    bandit = ZoomBandit(se_kernel, unit_domain, cfg)
    bandit.active = [ActivePoint(np.array([0.5]), k=0, order=0)]
    excess = bandit.repeat_budget(0) + 2
    bandit.level_evals = {(0, 0): excess, (0, 30): 1000}
    assert bandit.repeat_overruns() == [(0, 0, excess)]


def test_suboptimality_flags_large_gap(se_kernel, unit_domain, cfg):
    bandit = ZoomBandit(se_kernel, unit_domain, cfg)
    bandit.evaluated_levels = [(0.0, 0), (5.0 * bandit.w(1) + 1.0, 1)]
    assert not bandit.suboptimality_ok()


def test_two_dimensional_run(se_kernel):
    domain = BoxDomain.unit(2)
    env = make_grid_gp(se_kernel, domain, grid_res=16, sigma=0.1, seed=2)
    cfg = make_confidence_config(se_kernel, domain, n=20, sigma=0.1)
    trace, _ = algo_zoom.run(env, se_kernel, cfg, debug=True)
    assert len(trace) == 20
    assert np.all(trace.column('delta') >= -1e-12)


def test_user_domain_scaling(se_kernel):
    domain = BoxDomain((2.0,), (4.0,))
    env = make_grid_gp(se_kernel, domain, grid_res=64, sigma=0.1, seed=8)
    cfg = make_confidence_config(se_kernel, domain, n=15, sigma=0.1)
    trace, recommendation = algo_zoom.run(env, se_kernel, cfg)
    xs = trace.column('x_0')
    assert np.all((xs >= 2.0) & (xs <= 4.0))
    assert domain.contains(recommendation)
