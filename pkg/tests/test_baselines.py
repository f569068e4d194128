import numpy as np
import pytest

from baselines import UniformGrid, run_gp_ucb, run_random, theoretical_grid_size
from confidence import make_confidence_config
from env import make_grid_gp
from gp_core import GridTooLargeError
from partition_tree import BoxDomain


@pytest.fixture
def env(se_kernel, unit_domain):
    return make_grid_gp(se_kernel, unit_domain, grid_res=64, sigma=0.1, seed=13)


def test_uniform_grid_cell_centers():
    grid = UniformGrid(BoxDomain((0.0, 2.0), (1.0, 4.0)), 4)
    points = grid.points
    assert grid.size == 16
    assert points.shape == (16, 2)
    assert np.allclose(np.unique(points[:, 0]), [0.125, 0.375, 0.625, 0.875])
    assert np.allclose(np.unique(points[:, 1]), [2.25, 2.75, 3.25, 3.75])
    assert grid.covering_radius == pytest.approx(0.25)


def test_uniform_grid_covers_domain(rng):
    grid = UniformGrid(BoxDomain.unit(2), 5)
    samples = rng.uniform(size=(200, 2))
    dist = np.max(np.abs(samples[:, None, :] - grid.points[None, :, :]), axis=2).min(axis=1)
    assert np.all(dist <= grid.covering_radius + 1e-12)


def test_uniform_grid_rejects_zero_resolution(unit_domain):
    with pytest.raises(ValueError):
        UniformGrid(unit_domain, 0)


def test_theoretical_grid_size():
    assert theoretical_grid_size(10, 1) == 100
    assert theoretical_grid_size(100, 6) == 10 ** 24


def test_gp_ucb_run(se_kernel, unit_domain, env):
    cfg = make_confidence_config(se_kernel, unit_domain, n=15, sigma=0.1)
    grid = UniformGrid(unit_domain, 32)
    trace = run_gp_ucb(env, se_kernel, cfg, grid=grid)
    assert len(trace) == 15
    assert trace.metadata['grid_size'] == 32
    assert set(trace.column('active_count')) == {32.0}
    candidates = set(np.round(grid.points[:, 0], 12))
    assert set(np.round(trace.column('x_0'), 12)) <= candidates
    assert np.all(trace.column('delta') >= -1e-12)


def test_gp_ucb_budget_override(se_kernel, unit_domain, env):
    cfg = make_confidence_config(se_kernel, unit_domain, n=50, sigma=0.1)
    assert len(run_gp_ucb(env, se_kernel, cfg, n=5, grid=UniformGrid(unit_domain, 8))) == 5


def test_gp_ucb_rejects_dense_grid(se_kernel):
    domain = BoxDomain.unit(2)
    cfg = make_confidence_config(se_kernel, domain, n=5, sigma=0.1)
    env = make_grid_gp(se_kernel, domain, grid_res=8, sigma=0.1, seed=0)
    with pytest.raises(GridTooLargeError):
        run_gp_ucb(env, se_kernel, cfg, grid=UniformGrid(domain, 65))


def test_random_search(env):
    trace = run_random(env, 40, seed=3)
    assert len(trace) == 40
    deltas = trace.column('delta')
    assert np.allclose(trace.column('simple_regret'), np.minimum.accumulate(deltas))
    xs = trace.column('x_0')
    assert np.all((xs >= 0.0) & (xs <= 1.0))


def test_random_search_is_reproducible(se_kernel, unit_domain):
    a = run_random(make_grid_gp(se_kernel, unit_domain, 32, 0.1, 1), 10, seed=5)
    b = run_random(make_grid_gp(se_kernel, unit_domain, 32, 0.1, 1), 10, seed=5)
    assert np.array_equal(a.column('x_0'), b.column('x_0'))


def test_random_search_empty(env):
    trace = run_random(env, 0, seed=0)
    assert len(trace) == 0
