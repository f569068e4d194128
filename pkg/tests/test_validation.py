import pytest

import validation
from validation import (CHECKS, QUICK_SIZES, _timed, check_contextual, check_posterior_oracle,
                        check_variance_bounds, check_variation_coverage, check_zoom_covering,
                        run_validation)


def test_every_criterion_has_quick_sizes():
    assert sorted(CHECKS) == list(range(1, 12))
    assert set(QUICK_SIZES) == set(CHECKS)


def test_timed_turns_errors_into_results():
    @_timed("siempre falla", 99)
    def broken():
        raise RuntimeError("sin datos")

    result = broken()
    assert result['success'] is False
    assert result['error'] == "sin datos"
    assert result['criterion'] == 99 and result['name'] == "siempre falla"
    assert result['elapsed_s'] >= 0.0


def test_unknown_criterion():
    outcome = run_validation([42])
    assert not outcome['success']
    assert '42' in outcome['error']


def test_posterior_oracle_small():
    result = check_posterior_oracle(n_configs=8, max_t=15)
    assert result['success'], result


def test_variance_bounds_small():
    result = check_variance_bounds(max_repeats=10, n_ball_configs=5)
    assert result['success'], result


def test_variation_coverage_sample_layout():
    result = check_variation_coverage(functions=10)
    assert 'error' not in result, result
    assert 2048 < result['sampled_points'] <= 4096
    for key in ('v_violation_frequency', 'w_violation_frequency', 'ball_violation_frequency'):
        assert 0.0 <= result[key] <= 1.0


def test_zoom_invariants_small():
    result = check_zoom_covering(runs=2, n=20, dims=(1,), suboptimality_runs=5)
    assert result['failures'] == [], result
    assert result['good_run_fraction'] == 1.0


def test_contextual_delta_bound_small():
    result = check_contextual(seeds=2, n=30, first=10)
    assert 'error' not in result, result
    assert result['one_evaluation_per_context']
    assert result['good_run_fraction'] == 1.0


def test_quick_run_of_deterministic_criteria():
    outcome = run_validation([1, 2], quick=True)
    assert set(outcome['results']) == {1, 2}
    assert outcome['success']


@pytest.mark.slow
@pytest.mark.parametrize('criterion', sorted(validation.CHECKS))
def test_quick_criteria(criterion):
    outcome = run_validation([criterion], quick=True)
    result = outcome['results'][criterion]
    assert 'error' not in result, result
    if criterion != 9:
        assert result['success'], result
