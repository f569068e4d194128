import logging
import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import main  # noqa: E402


@pytest.fixture(autouse=True)
def reset_logging():
    yield
    root = logging.getLogger()
    for handler in root.handlers[:]:
        handler.close()
        root.removeHandler(handler)


def write_config(tmp_path, **experiment):
    values = dict(name='cli', algorithm='random', budget='6', seeds='0, 1', checkpoints='3, 6',
                  output_directory=str(tmp_path / 'results'))
    values.update(experiment)
    lines = ["[Experiment]"] + [f"{key} = {value}" for key, value in values.items()]
    lines += ["", "[Environment]", "grid_res = 32",
              "", "[Logging]", f"log_directory = {tmp_path / 'logs'}"]
    path = tmp_path / f"{values['name']}.ini"
    path.write_text("\n".join(lines) + "\n", encoding='utf-8')
    return str(path)


def test_run_writes_traces(tmp_path, capsys):
    config = write_config(tmp_path)
    assert main.main(['--config', config, 'run', '--workers', '1']) == 0
    assert '✅' in capsys.readouterr().out
    assert len(list((tmp_path / 'results').glob('cli_random_seed*.csv'))) >= 2


def test_run_overrides_budget(tmp_path):
    config = write_config(tmp_path)
    assert main.main(['--config', config, 'run', '--budget', '4', '--seeds', '3', '--workers', '1']) == 0


def test_invalid_config_exits_with_two(tmp_path, capsys):
    config = write_config(tmp_path, budget='0')
    assert main.main(['--config', config, 'run']) == 2
    assert 'Experiment.budget' in capsys.readouterr().out


def test_compare_after_run(tmp_path, capsys):
    first = write_config(tmp_path, name='uno')
    second = write_config(tmp_path, name='dos', budget='4', checkpoints='4')
    plot = tmp_path / 'curvas.svg'
    code = main.main(['--config', first, 'compare', first, second, '--run', '--plot', str(plot)])
    assert code == 0
    assert plot.exists()
    assert 'uno:random' in capsys.readouterr().out


def test_compare_without_traces_fails(tmp_path):
    config = write_config(tmp_path, name='vacio')
    assert main.main(['--config', config, 'compare', config]) == 1


def test_toy_gamma_writes_csv(tmp_path):
    output = tmp_path / 'gamma.csv'
    config = write_config(tmp_path)
    assert main.main(['--config', config, 'toy-gamma', '--n', '10', '20', '--output', str(output)]) == 0
    assert output.read_text().splitlines()[0].startswith('n,')


def test_validate_unknown_criterion(tmp_path):
    config = write_config(tmp_path)
    assert main.main(['--config', config, 'validate', '--criteria', '42']) == 2
