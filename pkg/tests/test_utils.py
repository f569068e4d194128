import logging

import pytest

from utils import (DEFAULT_CONFIG, WORKERS_ENV_VAR, config_hash, format_duration, load_config,
                   resolve_workers, sanitize_filename, save_config, setup_logging,
                   summary_filename, trace_filename, validate_output_dir)


def test_load_config_defaults_when_missing(tmp_path):
    config = load_config(str(tmp_path / 'missing.ini'))
    for section, values in DEFAULT_CONFIG.items():
        for key, value in values.items():
            assert config.get(section, key) == value


def test_load_config_overrides(tmp_path):
    path = tmp_path / 'exp.ini'
    path.write_text("[Experiment]\nbudget = 50\n", encoding='utf-8')
    config = load_config(str(path))
    assert config.getint('Experiment', 'budget') == 50
    assert config.get('Experiment', 'algorithm') == 'tree'


def test_save_and_reload(tmp_path):
    config = load_config(None)
    config.set('Experiment', 'name', 'guardado')
    path = tmp_path / 'saved.ini'
    assert save_config(config, str(path))
    assert load_config(str(path)).get('Experiment', 'name') == 'guardado'


def test_config_hash_is_order_independent():
    a = load_config(None)
    b = load_config(None)
    b.remove_section('Logging')
    b.read_dict({'Logging': DEFAULT_CONFIG['Logging']})
    assert config_hash(a) == config_hash(b)
    b.set('Experiment', 'budget', '201')
    assert config_hash(a) != config_hash(b)
    assert len(config_hash(a)) == 16


def test_resolve_workers(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV_VAR, raising=False)
    config = load_config(None)
    assert resolve_workers(config) == 4
    config.set('Processing', 'parallel_processing', 'False')
    assert resolve_workers(config) == 1
    assert resolve_workers() == 1
    monkeypatch.setenv(WORKERS_ENV_VAR, '3')
    assert resolve_workers(config) == 3
    monkeypatch.setenv(WORKERS_ENV_VAR, 'muchos')
    assert resolve_workers() == 1


def test_output_filenames(tmp_path):
    path = trace_filename(tmp_path, 'mi experimento', 'tree', 7)
    assert path.name == 'mi_experimento_tree_seed7.csv'
    assert summary_filename(tmp_path, 'exp', 'zoom').name == 'exp_zoom_summary.csv'


def test_validate_output_dir(tmp_path):
    ok, errors = validate_output_dir(str(tmp_path / 'nuevo' / 'dir'))
    assert ok and not errors
    blocker = tmp_path / 'archivo'
    blocker.write_text('x')
    ok, errors = validate_output_dir(str(blocker))
    assert not ok and errors
    assert validate_output_dir('') == (False, ["Ruta vacía proporcionada"])


@pytest.mark.parametrize('nanoseconds,expected', [(850, '850 ns'), (12_500, '12.5 µs'),
                                                  (4_250_000, '4.25 ms'), (2.5e9, '2.5 s'),
                                                  (125e9, '2m 5s'), (7260e9, '2h 1m')])
def test_format_duration(nanoseconds, expected):
    assert format_duration(nanoseconds) == expected


def test_sanitize_filename():
    assert sanitize_filename(' a/b:c ') == 'a_b_c'
    assert len(sanitize_filename('x' * 300)) == 200


def test_setup_logging_creates_file(tmp_path):
    log_file = setup_logging(str(tmp_path / 'logs'), 'DEBUG')
    assert log_file.endswith('.log')
    assert logging.getLogger().level == logging.DEBUG
    for handler in logging.getLogger().handlers[:]:
        handler.close()
        logging.getLogger().removeHandler(handler)
