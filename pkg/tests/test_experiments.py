"""
수렴 실험과 반례 재현 테스트
"""

import math

import numpy as np
import pytest

from experiments.convergence import run_convergence, trend_statistic
from experiments.counterexamples import (
    DECREASE_TOLERANCE,
    assumption_essential,
    basis_dependence,
    crr_trivial,
    exchange_sup_formula,
    run_counterexample,
)
from src.corridor.volatility_corridor import VolatilityCorridor, sup_linear_over_gamma
from src.limit.closed_form import EXCHANGE_WEIGHTS
from src.market.basis import planar_basis
from src.market.model import MarketSpec
from src.market.payoffs import BasketCall, Constant, Exchange, LookbackMax
from src.pricing.superreplication import TreeTooLargeError
from src.utils.errors import ConfigurationError


def test_trend_statistic():
    assert trend_statistic([{'gap': 0.2}, {'gap': 0.05}]) == pytest.approx(0.25)
    assert trend_statistic([{'gap': 0.0}, {'gap': 0.0}]) == 0.0
    assert trend_statistic([{'gap': 0.0}, {'gap': 0.1}]) == math.inf
    assert math.isnan(trend_statistic([{'gap': math.nan}, {'gap': 0.1}]))


def test_convergence_constant_payoff():
    spec = MarketSpec(d=1, n=1, sigma=[[0.3]], s0=[1.0], kappa_plus=[0.1], kappa_minus=[0.1])
    summary = run_convergence(spec, Constant(1.0), [1, 2, 4])
    assert summary['limit'] == 1.0
    assert summary['limit_method'] == 'constant'
    assert [row['n'] for row in summary['rows']] == [1, 2, 4]
    assert all(row['gap'] <= 1e-9 for row in summary['rows'])


def test_convergence_call_moves_toward_limit():
    spec = MarketSpec(d=1, n=1, sigma=[[0.3]], s0=[1.0], kappa_plus=[0.2], kappa_minus=[0.2])
    summary = run_convergence(spec, BasketCall([1.0], 1.0), [2, 4, 8])
    assert summary['limit_method'] == 'black_scholes'
    assert all(np.isfinite(row['value']) for row in summary['rows'])


def test_convergence_without_limit():
    spec = MarketSpec(d=1, n=1, sigma=[[0.3]], s0=[1.0], kappa_plus=[0.1], kappa_minus=[0.1])
    summary = run_convergence(spec, LookbackMax(0), [1, 2])
    assert summary['limit'] is None
    assert math.isnan(summary['trend'])


def test_convergence_checks_tree_size_first():
    spec = MarketSpec(d=1, n=1, sigma=[[0.3]], s0=[1.0], kappa_plus=[0.1], kappa_minus=[0.1])
    with pytest.raises(TreeTooLargeError):
        run_convergence(spec, Constant(1.0), [2, 20], node_cap=100)


@pytest.mark.parametrize("angle", [0.0, math.pi / 12, 0.4, 1.0])
def test_exchange_sup_formula_matches_lp(angle):
    basis = planar_basis(angle)
    corr = VolatilityCorridor(basis, np.eye(2), np.array([0.0, 0.2]), np.zeros(2))
    assert sup_linear_over_gamma(corr, EXCHANGE_WEIGHTS)['value'] == pytest.approx(
        exchange_sup_formula(basis, 0.2), abs=1e-12
    )


def test_basis_dependence():
    result = basis_dependence()
    assert result['passes']
    assert result['price_difference'] > 1e-3
    assert [row['basis'] for row in result['bases']] == ['planar', 'rotated']


def test_crr_trivial_small():
    result = crr_trivial(n_values=(1, 2, 3))
    assert result['passes']
    assert result['rows'][0]['simplex'] is None
    for row in result['rows']:
        assert row['product_crr'] == pytest.approx(1.0, abs=1e-9)


@pytest.mark.slow
def test_crr_trivial_full():
    assert run_counterexample('crr-trivial')['passes']


@pytest.mark.slow
def test_assumption_essential():
    result = assumption_essential()
    assert result['witness_value'] == pytest.approx(-2.0, abs=1e-12)
    assert result['diag_1_0_in_gamma']
    assert not result['lemma61']['passes']
    prices = [row['price'] for row in result['rows']]
    assert [row['n'] for row in result['rows']] == [2, 4, 6]
    assert all(later < earlier - DECREASE_TOLERANCE for earlier, later in zip(prices, prices[1:]))
    assert prices[0] == pytest.approx(1.2407, abs=1e-3)
    assert result['decreasing']
    assert result['passes']


def test_unknown_counterexample():
    with pytest.raises(ConfigurationError):
        run_counterexample('no-such-example')


@pytest.mark.slow
def test_call_convergence_trend():
    spec = MarketSpec(d=1, n=1, sigma=[[0.3]], s0=[1.0], kappa_plus=[0.2], kappa_minus=[0.2])
    summary = run_convergence(spec, BasketCall([1.0], 1.0), [4, 8, 12])
    rows = summary['rows']
    assert rows[-1]['gap'] < rows[0]['gap']
    assert rows[-1]['gap'] / summary['limit'] < 0.15
    assert summary['trend'] < 1.0


@pytest.mark.slow
def test_exchange_convergence_toward_margrabe_limit():
    spec = MarketSpec(d=2, n=1, sigma=np.eye(2), s0=np.ones(2), kappa_plus=[0.0, 0.2],
                      kappa_minus=[0.0, 0.0], basis=planar_basis(0.0))
    summary = run_convergence(spec, Exchange(), [2, 4, 6])
    assert summary['limit_method'] == 'margrabe'
    gaps = [row['gap'] for row in summary['rows']]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[-1] < 0.01
    assert summary['trend'] < 0.1
