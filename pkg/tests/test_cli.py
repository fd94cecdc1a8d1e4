import json
import math

import numpy as np
import pytest

from lib.dataset import DatasetRecord, read_dataset, read_varieties, write_dataset
from main import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if code == 0 else None


def synthetic_records(n_per_dim=30, seed=0):
    rng = np.random.default_rng(seed)
    records = []
    for dim, slope, intercept in ((3, 1.0, -1.0), (4, 2.0, -5.0)):
        for i in range(n_per_dim):
            records.append(DatasetRecord(
                kind='wps', weights=(1,) * (dim + 1), dim=dim,
                slope=slope + 0.01 * rng.normal(), intercept=intercept + 0.05 * rng.normal(),
                se_slope=1e-4, se_int=0.1 if i % 2 == 0 else 2.0, A=math.log(dim + 1), B=-1.0,
            ))
    return records


def test_asympt(capsys):
    code, out = run(capsys, 'asympt', '--weights', '1,1')
    assert code == 0
    assert out['A'] == pytest.approx(math.log(2))
    assert out['dim'] == 1


def test_periods_exact(capsys):
    code, out = run(capsys, 'periods', '--weights', '1,1,1', '--dmax', '6', '--exact')
    assert code == 0
    assert out['coeffs'] == ['1', '0', '0', '6', '0', '0', '90']


def test_periods_log_csv(capsys, tmp_path):
    path = tmp_path / 'coeffs.csv'
    code, out = run(capsys, 'periods', '--matrix', '1,1,0,0;0,0,1,1', '--dmax', '50', '--out', str(path))
    assert code == 0
    assert out['last_nonzero'] == 50
    assert path.exists()


def test_enumerate_dim3(capsys):
    code, out = run(capsys, 'enumerate-dim3', '--bounds', '20')
    assert code == 0
    assert out['counts'] == {'20': 7}
    assert [1, 1, 1, 1] in out['varieties']


def test_gen_then_features(capsys, tmp_path):
    varieties = tmp_path / 'wps.jsonl'
    code, out = run(capsys, 'gen-wps', '--count', '3', '--dim-min', '4', '--dim-max', '4',
                    '--seed', '2', '--out', str(varieties))
    assert code == 0
    assert out['by_dim'] == {'4': 3}
    assert len(read_varieties(varieties)) == 3

    dataset = tmp_path / 'data.jsonl'
    code, out = run(capsys, 'features', '--input', str(varieties), '--dmax', '2000',
                    '--out', str(dataset))
    assert code == 0
    assert out['records'] == 3
    assert all(r.dim == 4 for r in read_dataset(dataset))


def test_train_and_eval(capsys, tmp_path):
    dataset = tmp_path / 'data.jsonl'
    write_dataset(dataset, synthetic_records())
    model = tmp_path / 'model.json'
    code, out = run(capsys, 'train', '--data', str(dataset), '--model', 'svm', '--train-frac', '0.5',
                    '--filter-se', '1.0', '--out', str(model))
    assert code == 0
    assert out['train'] + out['validation'] == 30
    assert out['report']['accuracy'] >= 0.9

    code, out = run(capsys, 'eval', '--data', str(dataset), '--model-file', str(model))
    assert code == 0
    assert out['accuracy'] >= 0.9


def test_bounds_min(capsys):
    code, out = run(capsys, 'bounds', '--restarts', '4')
    assert code == 0
    assert out['at_least_41_over_8']


def test_invalid_input_returns_error(capsys):
    assert main(['asympt', '--weights', '2,2,4']) == 1
    assert main(['asympt']) == 1
    assert main(['periods', '--weights', '1,1,1', '--config', '/nonexistent/config.json']) == 1


def test_unknown_experiment_is_rejected():
    with pytest.raises(SystemExit):
        main(['experiment', 'nope'])
