"""
설정 로드와 결과 출력 테스트
"""

import io
import json
import math

import numpy as np
import pytest
import yaml

from src.construction.controls import FeedbackRule
from src.market.basis import planar_basis
from src.market.model import PRODUCT_CRR
from src.market.payoffs import BasketCall, Constant, LookbackMax, TerminalFunction
from src.utils.config_loader import (
    DEFAULTS,
    config_hash,
    load_control,
    load_experiment_config,
    load_market_spec,
    load_payoff,
    load_yaml_config,
    validate_config,
)
from src.utils.errors import ConfigurationError
from src.utils.result_writer import TOOL_VERSION, ResultWriter, to_jsonable


MARKET = {
    'd': 2, 'n': 3, 'sigma': [1.0, 0.0, 0.0, 1.0], 's0': [1.0, 1.0],
    'kappa_plus': [0.0, 0.2], 'kappa_minus': 0.0
}


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data), encoding='utf-8')
    return str(path)


def test_validate_config_fills_defaults():
    config = {}
    assert validate_config(config)
    for section, defaults in DEFAULTS.items():
        for key, value in defaults.items():
            assert config[section][key] == value

    config = {'lp': {'tolerance': 1e-9}}
    assert validate_config(config)
    assert config['lp']['tolerance'] == 1e-9
    assert config['lp']['max_iterations'] == DEFAULTS['lp']['max_iterations']


def test_validate_config_rejects_bad_values():
    assert not validate_config([])
    assert not validate_config({'pricer': {'node_cap': 0}})
    assert not validate_config({'pde': 'fine'})


def test_load_yaml_config(tmp_path):
    assert load_yaml_config(str(tmp_path / 'missing.yaml')) is None
    empty = tmp_path / 'empty.yaml'
    empty.write_text('', encoding='utf-8')
    assert load_yaml_config(str(empty)) == {}
    broken = tmp_path / 'broken.yaml'
    broken.write_text('a: [1, 2', encoding='utf-8')
    assert load_yaml_config(str(broken)) is None


def test_load_market_spec_with_rotation():
    spec = load_market_spec(dict(MARKET, basis_rotation=0.3))
    np.testing.assert_allclose(spec.basis.vertices, planar_basis(0.3).vertices)
    np.testing.assert_allclose(spec.kappa_minus, [0.0, 0.0])
    assert spec.n == 3

    matrix = [[math.cos(0.3), math.sin(0.3)], [-math.sin(0.3), math.cos(0.3)]]
    rotated = load_market_spec(dict(MARKET, basis_rotation=matrix))
    assert rotated.basis.vertices.shape == (3, 2)


def test_load_market_spec_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        load_market_spec({'d': 2, 'n': 3, 'sigma': [1.0, 0.0, 0.0, 1.0]})
    with pytest.raises(ConfigurationError):
        load_market_spec(dict(MARKET, d=1, sigma=[1.0], s0=[1.0], kappa_plus=0.0, basis_rotation=0.1))
    with pytest.raises(ConfigurationError):
        load_market_spec(dict(MARKET, sigma=[1.0, 0.0, 0.0]))
    with pytest.raises(ConfigurationError):
        load_market_spec(str(tmp_path / 'missing.yaml'))


def test_load_market_spec_from_file(tmp_path):
    path = write_yaml(tmp_path / 'market.yaml', {'market': dict(MARKET, kappa_plus=0.0, driver=PRODUCT_CRR)})
    spec = load_market_spec(path)
    assert spec.driver == PRODUCT_CRR
    assert spec.basis is None
    assert spec.branching == 4


def test_load_payoff_kinds():
    call = load_payoff({'kind': 'call', 'strike': 1.0, 'asset': 1}, 2)
    assert isinstance(call, BasketCall)
    np.testing.assert_allclose(call.weights, [0.0, 1.0])

    assert isinstance(load_payoff({'kind': 'constant', 'value': 2.0}), Constant)
    assert isinstance(load_payoff({'kind': 'lookback_max', 'asset': 0}), LookbackMax)

    root = load_payoff({'kind': 'terminal_function', 'asset': 1, 'function': 'sqrt', 'lower': 0.0, 'upper': 4.0})
    assert isinstance(root, TerminalFunction)
    assert root.terminal_value(np.array([[1.0, 2.25]]))[0] == pytest.approx(1.5, abs=1e-5)


@pytest.mark.parametrize("data", [
    {'strike': 1.0},
    {'kind': 'digital'},
    {'kind': 'constant', 'level': 1.0},
    {'kind': 'terminal_function', 'function': 'cube', 'lower': 0.0, 'upper': 1.0},
])
def test_load_payoff_errors(data):
    with pytest.raises(ConfigurationError):
        load_payoff(data, 1)


def test_load_control_with_feedback():
    control = load_control({
        'breakpoints': [0.0, 0.5, 1.0],
        'targets': [
            [0.09],
            {'inputs': [[0.5, 0]], 'axes': [[-1.0, 1.0]], 'values': [[[0.05]], [[0.15]]]}
        ],
        'epsilon': 1e-4
    }, 1)
    assert control.intervals == 2
    assert control.epsilon == 1e-4
    np.testing.assert_allclose(control.targets[0], [[0.09]])
    assert isinstance(control.targets[1], FeedbackRule)
    assert control.describe()['targets'][1] == 'feedback'


def test_config_hash_is_order_independent():
    first = config_hash({'a': 1, 'b': [1, 2], 'c': {'x': 0.5}})
    second = config_hash({'c': {'x': 0.5}, 'b': [1, 2], 'a': 1})
    assert first == second
    assert len(first) == 64
    assert config_hash({'a': 2}) != config_hash({'a': 1})


def test_load_experiment_config_overrides(tmp_path):
    config_path = write_yaml(tmp_path / 'config.yaml', {'simulation': {'paths': 7, 'seed': 3}})
    market_path = write_yaml(tmp_path / 'market.yaml', {
        'market': MARKET, 'n_list': [2, 4], 'payoff': {'kind': 'exchange'}
    })

    experiment = load_experiment_config(config_path, market_path)
    assert experiment.n_list == [2, 4]
    assert experiment.paths == 7
    assert experiment.seed == 3
    assert experiment.control is None

    experiment = load_experiment_config(config_path, market_path, {'n': [6], 'seed': 9, 'format': 'csv'})
    assert experiment.n_list == [6]
    assert experiment.spec.n == 6
    assert experiment.seed == 9
    assert experiment.output_format == 'csv'

    hashes = {load_experiment_config(config_path, market_path, {'seed': s}).hash for s in (1, 1, 2)}
    assert len(hashes) == 2


def test_load_experiment_config_errors(tmp_path):
    config_path = write_yaml(tmp_path / 'config.yaml', {})
    market_path = write_yaml(tmp_path / 'market.yaml', {'market': MARKET})
    bare_path = write_yaml(tmp_path / 'bare.yaml', MARKET)

    with pytest.raises(ConfigurationError):
        load_experiment_config(config_path, None)
    with pytest.raises(ConfigurationError):
        load_experiment_config(config_path, bare_path)
    with pytest.raises(ConfigurationError):
        load_experiment_config(config_path, market_path, {'n': [4, 2]})


def test_to_jsonable():
    value = to_jsonable({'a': np.array([1.0, np.nan]), 'b': np.int64(3), 'c': np.bool_(True),
                         'd': (np.float64(0.5),), 'e': Constant(1.0)})
    assert value == {'a': [1.0, None], 'b': 3, 'c': True, 'd': [0.5], 'e': {'kind': 'constant', 'value': 1.0}}
    json.dumps(value)


def test_result_writer_json():
    stream = io.StringIO()
    writer = ResultWriter('json', None, 'abc', stream)
    document = writer.write('price', {'value': np.float64(1.0)})
    parsed = json.loads(stream.getvalue())
    assert parsed == document
    assert parsed['tool_version'] == TOOL_VERSION
    assert parsed['config_hash'] == 'abc'
    assert parsed['command'] == 'price'
    assert parsed['value'] == 1.0


def test_result_writer_csv(tmp_path):
    rows = [{'n': 2, 'value': 0.5, 'extra': 1}, {'n': 4, 'value': 0.25, 'extra': 2}]

    stream = io.StringIO()
    ResultWriter('csv', None, 'abc', stream).write('converge', {'rows': rows}, rows, ['n', 'value'])
    lines = stream.getvalue().strip().splitlines()
    assert lines == ['n,value', '2,0.5', '4,0.25']

    out = tmp_path / 'rows.csv'
    stream = io.StringIO()
    ResultWriter('csv', str(out), 'abc', stream).write('converge', {'rows': rows}, rows, ['n', 'value'])
    assert out.read_text(encoding='utf-8').splitlines()[0] == 'n,value'
    assert json.loads(stream.getvalue())['command'] == 'converge'


def test_result_writer_rejects_unknown_format():
    with pytest.raises(ValueError):
        ResultWriter('xml')
