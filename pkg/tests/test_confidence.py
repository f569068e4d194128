import math

import pytest

from confidence import (beta_n, beta_union, beta_zoom, chaining_series, h_max,
                        make_confidence_config, q_h, v_h, w_cap, zoom_r_min, zoom_repeat_budget)
from gp_core import KernelSpec
from partition_tree import BoxDomain


@pytest.fixture
def cfg(se_kernel, unit_domain):
    return make_confidence_config(se_kernel, unit_domain, n=100, sigma=0.1)


def test_chaining_series_values():
    alpha1, alpha2 = chaining_series()
    assert 0.8 < alpha1 < 1.2
    assert alpha2 > 2.0
    # el primer término de alpha1 es sqrt(log 1) = 0
    assert alpha1 == pytest.approx(sum(2.0 ** (-(n - 1)) * math.sqrt(math.log(n))
                                       for n in range(2, 80)))


def test_h_max_example(cfg):
    # log(100) / (2 log 3) * 2 = 4.19...
    assert h_max(cfg) == 5
    assert cfg.h_max == 5


def test_h_max_single_round(se_kernel, unit_domain):
    assert h_max(make_confidence_config(se_kernel, unit_domain, n=1, sigma=0.1)) == 0


def test_beta_tight_formula(cfg):
    expected = math.sqrt(2.0 * (2.0 + math.log(2.0 * 3 * 25 * 100 * 100)))
    assert beta_n(cfg) == pytest.approx(expected)


@pytest.mark.parametrize('n', [10, 100, 1000])
def test_worst_beta_dominates_tight_in_one_dimension(se_kernel, unit_domain, n):
    cfg = make_confidence_config(se_kernel, unit_domain, n=n, sigma=0.1)
    assert beta_n(cfg, mode='worst') >= beta_n(cfg, mode='tight_odd_n')


def test_beta_grows_with_budget(se_kernel, unit_domain):
    betas = [beta_n(make_confidence_config(se_kernel, unit_domain, n=n, sigma=0.1))
             for n in (10, 100, 1000)]
    assert betas == sorted(betas)


def test_beta_zoom_and_union(cfg):
    assert beta_zoom(cfg) == pytest.approx(math.sqrt(2.0 * (2.0 + 2.0 * math.log(2.0)
                                                             + 2.0 * math.log(100))))
    assert beta_union(cfg, 50) == pytest.approx(math.sqrt(2.0 * (2.0 + math.log(2.0 * 100 * 50))))


def test_unknown_beta_mode(cfg):
    with pytest.raises(ValueError):
        beta_n(cfg, mode='loose')


def test_v_h_decreases_with_depth(cfg):
    values = [v_h(cfg, h) for h in range(10)]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] > 0


def test_theory_scale_is_linear(se_kernel, unit_domain):
    base = make_confidence_config(se_kernel, unit_domain, n=100, sigma=0.1)
    scaled = make_confidence_config(se_kernel, unit_domain, n=100, sigma=0.1, theory_scale=0.25)
    for h in range(5):
        assert v_h(scaled, h) == pytest.approx(0.25 * v_h(base, h))
    assert w_cap(scaled, 3) == pytest.approx(0.25 * w_cap(base, 3))


def test_w_cap_decreases_with_level(cfg):
    values = [w_cap(cfg, k) for k in range(1, 10)]
    assert all(b < a for a, b in zip(values, values[1:]))
    with pytest.raises(ValueError):
        w_cap(cfg, -1)


def test_repeat_budgets(cfg, se_kernel, unit_domain):
    assert q_h(cfg, 0) == 1
    deep = q_h(cfg, cfg.h_max)
    assert deep == max(1, math.ceil(0.01 * cfg.beta ** 2 / v_h(cfg, cfg.h_max) ** 2))
    noiseless = make_confidence_config(se_kernel, unit_domain, n=100, sigma=0.0)
    assert q_h(noiseless, 5) == 1
    assert zoom_repeat_budget(noiseless, 5, 3.0) == 1


def test_zoom_r_min(cfg):
    assert zoom_r_min(cfg) == pytest.approx(0.1)
    rough = make_confidence_config(KernelSpec.matern(0.5, 0.2), BoxDomain.unit(1), n=100, sigma=0.1)
    assert zoom_r_min(rough) == pytest.approx(0.01)


@pytest.mark.parametrize('field,value', [('u', -1.0), ('n', 0), ('sigma', -0.1)])
def test_invalid_config_values(se_kernel, unit_domain, field, value):
    kwargs = {'n': 10, 'sigma': 0.1, 'u': 2.0}
    kwargs[field] = value
    with pytest.raises(ValueError):
        make_confidence_config(se_kernel, unit_domain, **kwargs)
