"""
명령행 진입점 테스트
"""

import json
import math
from pathlib import Path

import pytest
import yaml

from main import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK, main
from src.limit.closed_form import black_scholes_call
from src.lp.problem import load_lp
from src.lp.simplex import solve_lp

MARKETS = Path(__file__).resolve().parent.parent / 'config' / 'markets'


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / 'config.yaml'
    path.write_text(yaml.safe_dump({'logging': {'level': 'WARNING', 'file': None}}), encoding='utf-8')
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_price_constant(capsys, config_path):
    code, out = run(capsys, 'price', '--config', config_path, '--market', str(MARKETS / 'constant.yaml'), '--n', '2')
    assert code == EXIT_OK
    document = json.loads(out)
    assert document['command'] == 'price'
    assert document['n'] == 2
    assert document['value'] == pytest.approx(1.0, abs=1e-9)
    assert len(document['config_hash']) == 64


def test_price_several_n(capsys, config_path):
    code, out = run(capsys, 'price', '--config', config_path, '--market', str(MARKETS / 'constant.yaml'))
    assert code == EXIT_OK
    assert [item['n'] for item in json.loads(out)['results']] == [1, 2, 3]


def test_limit_call(capsys, config_path):
    code, out = run(capsys, 'limit', '--config', config_path, '--market', str(MARKETS / 'call_d1.yaml'))
    assert code == EXIT_OK
    document = json.loads(out)
    assert document['method'] == 'black_scholes'
    assert document['value'] == pytest.approx(black_scholes_call(1.0, 1.0, math.sqrt(0.21)))
    assert document['band']['nu_max'] == pytest.approx(math.sqrt(0.21))


def test_converge_csv(capsys, config_path):
    code, out = run(capsys, 'converge', '--config', config_path, '--market', str(MARKETS / 'constant.yaml'),
                    '--format', 'csv')
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0] == 'n,value,limit,gap,runtime'
    assert len(lines) == 4
    for line in lines[1:]:
        n, value, limit, gap, _ = line.split(',')
        assert float(value) == pytest.approx(1.0, abs=1e-9)
        assert float(gap) <= 1e-9


def test_check_reports_violated_assumption(capsys, config_path):
    code, out = run(capsys, 'check', '--config', config_path, '--market', str(MARKETS / 'assumption_violated.yaml'))
    assert code == EXIT_CHECK_FAILED
    document = json.loads(out)
    assert not document['assumption']['passes']
    assert not document['lemma61']['passes']


def test_check_passes_for_small_costs(capsys, config_path):
    code, out = run(capsys, 'check', '--config', config_path, '--market', str(MARKETS / 'exchange_d2.yaml'))
    assert code == EXIT_OK
    assert json.loads(out)['assumption']['passes']


def test_simulate(capsys, config_path):
    code, out = run(capsys, 'simulate', '--config', config_path, '--market', str(MARKETS / 'call_d1.yaml'),
                    '--n', '9', '--paths', '50', '--seed', '4')
    assert code == EXIT_OK
    document = json.loads(out)
    assert document['paths'] == 50
    assert document['n'] == 9


def test_simulate_requires_control(capsys, config_path):
    code, _ = run(capsys, 'simulate', '--config', config_path, '--market', str(MARKETS / 'exchange_d2.yaml'))
    assert code == EXIT_CONFIG


def test_counterexample_basis_dependence(capsys, config_path):
    code, out = run(capsys, 'counterexample', 'basis-dependence', '--config', config_path)
    assert code == EXIT_OK
    document = json.loads(out)
    assert document['passes']
    assert len(document['config_hash']) == 64


def test_counterexample_csv_rows(capsys, config_path):
    code, out = run(capsys, 'counterexample', 'basis-dependence', '--config', config_path, '--format', 'csv')
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0].split(',')[:2] == ['basis', 'angle']
    assert [line.split(',')[0] for line in lines[1:]] == ['planar', 'rotated']


def test_missing_market_is_configuration_error(capsys, config_path, tmp_path):
    code, _ = run(capsys, 'price', '--config', config_path, '--market', str(tmp_path / 'missing.yaml'))
    assert code == EXIT_CONFIG


def test_invalid_market_is_configuration_error(capsys, config_path, tmp_path):
    market = tmp_path / 'bad.yaml'
    market.write_text(yaml.safe_dump({
        'market': {'d': 1, 'n': 1, 'sigma': [2.0], 's0': [1.0]},
        'payoff': {'kind': 'constant', 'value': 1.0}
    }), encoding='utf-8')
    code, _ = run(capsys, 'price', '--config', config_path, '--market', str(market))
    assert code == EXIT_CONFIG


def test_out_file(capsys, config_path, tmp_path):
    out = tmp_path / 'price.json'
    code, stdout = run(capsys, 'price', '--config', config_path, '--market', str(MARKETS / 'constant.yaml'),
                       '--n', '1', '--out', str(out))
    assert code == EXIT_OK
    assert stdout == ''
    assert json.loads(out.read_text(encoding='utf-8'))['value'] == pytest.approx(1.0, abs=1e-9)


def test_price_dumps_lps(capsys, config_path, tmp_path):
    prefix = tmp_path / 'call'
    code, out = run(capsys, 'price', '--config', config_path, '--market', str(MARKETS / 'call_d1.yaml'),
                    '--n', '2', '--dump-lp', str(prefix))
    assert code == EXIT_OK
    value = json.loads(out)['value']
    dual = load_lp(f"{prefix}.n2.dual.lp")
    primal = load_lp(f"{prefix}.n2.primal.lp")
    assert solve_lp(dual).objective == pytest.approx(value, abs=1e-9)
    assert solve_lp(primal).objective == pytest.approx(value, abs=1e-7)


def test_limit_writes_surface(capsys, config_path, tmp_path):
    path = tmp_path / 'surface.csv'
    code, out = run(capsys, 'limit', '--config', config_path, '--market', str(MARKETS / 'call_d1.yaml'),
                    '--grid', '21', '--surface', str(path))
    assert code == EXIT_OK
    assert json.loads(out)['surface'] == str(path)
    lines = path.read_text(encoding='utf-8').strip().splitlines()
    assert lines[0] == 'x1,initial,terminal'
    assert len(lines) == 22
