import math

import numpy as np
import pytest

from bench_runner import (SUMMARY_HEADER, ConfigError, ExperimentConfig, ExperimentRunner,
                          build_environment, compare, load_traces, loglog_slope, run_single,
                          summarize, toy_gamma_report)
from env import ContextualGridEnv, GridGPEnv, ToyEnv1, ToyEnv2
from regret_trace import RegretTrace
from utils import load_config


def small_config(tmp_path, **overrides):
    values = dict(name='prueba', budget=10, seeds=(0, 1), grid_res=32, ucb_grid_res=16,
                  checkpoints=(5, 10), output_directory=str(tmp_path / 'results'))
    values.update(overrides)
    return ExperimentConfig(**values)


def test_defaults_match_default_config():
    assert ExperimentConfig.from_config(load_config(None)) == ExperimentConfig()


@pytest.mark.parametrize('overrides,key', [
    ({'algorithm': 'bogus'}, 'Experiment.algorithm'),
    ({'budget': 0}, 'Experiment.budget'),
    ({'seeds': ()}, 'Experiment.seeds'),
    ({'n_split': 2}, 'Experiment.n_split'),
    ({'algorithm': 'toy2_oracle', 'budget': 31}, 'Experiment.budget'),
    ({'kernel': 'cosine'}, 'Environment.kernel'),
    ({'lower': 1.0, 'upper': 0.0}, 'Environment.upper'),
    ({'composition': 'max'}, 'Environment.composition'),
])
def test_invalid_values_name_their_key(overrides, key):
    with pytest.raises(ConfigError) as info:
        ExperimentConfig(**overrides)
    assert info.value.key == key


def test_even_split_allowed_outside_tree():
    assert ExperimentConfig(algorithm='zoom', n_split=2).n_split == 2


def test_unparseable_value_names_its_key():
    config = load_config(None)
    config.set('Experiment', 'budget', 'muchos')
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_config(config)
    assert info.value.key == 'Experiment.budget'


def test_config_round_trip_and_hash():
    cfg = ExperimentConfig(lengthscale=0.1 + 0.2, seeds=(3, 1, 2), jitter=1e-8, debug_mode=True)
    assert ExperimentConfig.from_config(cfg.to_config()) == cfg
    assert cfg.hash == ExperimentConfig.from_config(cfg.to_config()).hash
    assert cfg.hash != ExperimentConfig(lengthscale=0.3).hash


def test_hash_ignores_processing_section():
    config = load_config(None)
    before = ExperimentConfig.from_config(config).hash
    config.set('Processing', 'max_workers', '16')
    assert ExperimentConfig.from_config(config).hash == before


def test_effective_checkpoints():
    assert ExperimentConfig(budget=120, checkpoints=(50, 100, 200)).effective_checkpoints() == [50, 100, 120]


def test_build_environment_variants(tmp_path):
    assert isinstance(build_environment(small_config(tmp_path), 0), GridGPEnv)
    assert isinstance(build_environment(small_config(tmp_path, environment='toy1'), 0), ToyEnv1)
    toy2 = build_environment(small_config(tmp_path, algorithm='toy2_oracle', budget=20), 0)
    assert isinstance(toy2, ToyEnv2) and toy2.depth_max == 20
    contextual = build_environment(small_config(tmp_path, algorithm='contextual', context_res=4,
                                                action_res=16), 0)
    assert isinstance(contextual, ContextualGridEnv)


@pytest.mark.parametrize('algorithm', ['tree', 'zoom', 'gp_ucb', 'random', 'toy2_oracle'])
def test_run_single_algorithms(tmp_path, algorithm):
    cfg = small_config(tmp_path, algorithm=algorithm)
    trace = run_single(cfg, 0)
    assert len(trace) == cfg.budget
    assert trace.metadata['config_hash'] == cfg.hash
    assert trace.metadata['seed'] == 0


def test_run_single_contextual(tmp_path):
    cfg = small_config(tmp_path, algorithm='contextual', context_res=4, action_res=16)
    trace = run_single(cfg, 1)
    assert len(trace) == cfg.budget
    assert trace.metadata['environment'] == 'contextual'


def test_loglog_slope():
    n = np.arange(1, 101, dtype=float)
    assert loglog_slope(1.0 / n) == pytest.approx(-1.0)
    assert loglog_slope(n ** -0.5) == pytest.approx(-0.5)
    assert math.isnan(loglog_slope([1.0]))


def _synthetic(scale):
    trace = RegretTrace(1)
    for t in range(1, 11):
        trace.add_evaluation(t, t, [0.5], 0.0, scale / t, scale / t, t, 0)
    return trace


def test_summarize_medians():
    table, slope = summarize([_synthetic(1.0), _synthetic(2.0), _synthetic(3.0)], [5, 10])
    assert list(table['n']) == [5, 10]
    row = table.iloc[1]
    assert row['median_S'] == pytest.approx(0.2)
    assert row['iqr_S'] == pytest.approx(0.1)
    assert row['median_R_over_n'] == pytest.approx(row['median_R'] / 10)
    assert slope == pytest.approx(-1.0)


def test_run_experiment_outputs(tmp_path):
    cfg = small_config(tmp_path)
    result = ExperimentRunner(cfg, max_workers=2).run_experiment()
    assert result['success'], result.get('error')
    assert len(result['traces']) == 2
    lines = open(result['summary'], encoding='utf-8').read().splitlines()
    assert lines[0] == SUMMARY_HEADER
    assert lines[1] == f"# config_hash={cfg.hash}"
    assert list(result['summary_table']['n']) == [5, 10]
    assert result['stats']['runs_completed'] == 2
    assert ExperimentConfig.from_config(load_config(result['config_file'])) == cfg


def test_rerun_is_byte_identical(tmp_path):
    cfg = small_config(tmp_path, seeds=(4,))
    first = ExperimentRunner(cfg, max_workers=1).run_experiment()
    content = open(first['traces'][0], 'rb').read()
    second = ExperimentRunner(cfg, max_workers=1).run_experiment()
    assert open(second['traces'][0], 'rb').read() == content


def test_parallel_matches_serial(tmp_path):
    serial = ExperimentRunner(small_config(tmp_path / 'a', seeds=(0, 1, 2)), max_workers=1).run_experiment()
    parallel = ExperimentRunner(small_config(tmp_path / 'b', seeds=(0, 1, 2)), max_workers=3).run_experiment()
    for a, b in zip(serial['traces'], parallel['traces']):
        assert RegretTrace.from_csv(a).to_frame().equals(RegretTrace.from_csv(b).to_frame())


def test_run_experiment_rejects_file_as_output(tmp_path):
    blocker = tmp_path / 'ocupado'
    blocker.write_text('x')
    result = ExperimentRunner(small_config(tmp_path, output_directory=str(blocker))).run_experiment()
    assert not result['success']
    assert result['key'] == 'Experiment.output_directory'


def test_compare_with_plot(tmp_path):
    tree = small_config(tmp_path, name='cmp')
    rand = small_config(tmp_path, name='cmp', algorithm='random', budget=8, checkpoints=(4,))
    for cfg in (tree, rand):
        assert ExperimentRunner(cfg, max_workers=1).run_experiment()['success']
    assert len(load_traces(tree)) == 2

    plot = tmp_path / 'regret.svg'
    result = compare([tree, rand], plot_path=str(plot))
    assert result['success']
    assert result['common_budget'] == 8
    assert set(result['table']['label']) == {'cmp:tree', 'cmp:random'}
    assert plot.exists() and '<svg' in plot.read_text()


def test_compare_missing_traces(tmp_path):
    result = compare([small_config(tmp_path, name='nunca')])
    assert not result['success']
    assert 'nunca' in result['error']


def test_toy_gamma_report():
    table = toy_gamma_report(0.05, 1.0, [20, 10, 50])
    assert list(table['n']) == [10, 20, 50]
    assert list(table.columns) == ['n', 'closed_form', 'series', 'computed', 'computed_over_n']
    assert np.allclose(table['computed'], table['series'])
    assert np.allclose(table['computed_over_n'], table['computed'] / table['n'])
