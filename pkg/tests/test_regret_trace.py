import math

import numpy as np
import pytest

from regret_trace import SCHEMA_HEADER, RegretTrace


def _filled_trace() -> RegretTrace:
    trace = RegretTrace(2, {'seed': 3, 'algorithm': 'tree'})
    deltas = [0.5, 0.25, 0.125, 0.1]
    for t, delta in enumerate(deltas, start=1):
        trace.add_evaluation(t, t, [0.1 * t, 0.2], y=1.0 - delta, delta=delta,
                             simple_regret=delta / 2, active_count=t + 2, level=t // 2,
                             wall_ns=1000 * t)
    return trace


def test_cumulative_regret_is_prefix_sum():
    trace = _filled_trace()
    assert np.allclose(trace.column('cumulative_regret'), np.cumsum([0.5, 0.25, 0.125, 0.1]))
    assert trace.cumulative_regret == pytest.approx(0.975)
    assert trace.simple_regret == pytest.approx(0.05)
    assert trace.total_wall_ns == 10000


def test_empty_trace():
    trace = RegretTrace(1)
    assert len(trace) == 0
    assert math.isnan(trace.simple_regret)
    assert list(trace.to_frame().columns) == trace.columns


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        RegretTrace(2).add_evaluation(1, 1, [0.5], 0.0, 0.0, 0.0, 1, 0)


def test_csv_layout(tmp_path):
    path = _filled_trace().to_csv(tmp_path / 'run.csv')
    lines = path.read_text(encoding='utf-8').splitlines()
    assert lines[0] == SCHEMA_HEADER
    assert lines[1] == '# algorithm=tree'
    assert lines[2] == '# seed=3'
    assert lines[3].startswith('t,n_e,x_0,x_1,y,delta')
    assert (tmp_path / 'run_timing.csv').exists()


def test_csv_without_timing(tmp_path):
    _filled_trace().to_csv(tmp_path / 'run.csv', timing=False)
    assert not (tmp_path / 'run_timing.csv').exists()


def test_csv_is_byte_identical_between_writes(tmp_path):
    a = _filled_trace().to_csv(tmp_path / 'a.csv')
    b = _filled_trace().to_csv(tmp_path / 'b.csv')
    assert a.read_bytes() == b.read_bytes()


def test_read_back(tmp_path):
    original = _filled_trace()
    loaded = RegretTrace.from_csv(original.to_csv(tmp_path / 'run.csv'))
    assert loaded.dim == 2
    assert loaded.metadata == {'algorithm': 'tree', 'seed': '3'}
    assert np.array_equal(loaded.column('delta'), original.column('delta'))
    assert np.array_equal(loaded.column('cumulative_regret'), original.column('cumulative_regret'))


def test_read_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        RegretTrace.from_csv(tmp_path / 'missing.csv')


def test_read_rejects_foreign_header(tmp_path):
    path = tmp_path / 'other.csv'
    path.write_text("t,y\n1,0.5\n", encoding='utf-8')
    with pytest.raises(ValueError):
        RegretTrace.from_csv(path)
