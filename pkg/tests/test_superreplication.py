"""
초과헤지 가격 LP 테스트
"""

import numpy as np
import pytest

from src.market.model import PRODUCT_CRR, MarketSpec, frictionless_price
from src.market.payoffs import BasketCall, Constant, Exchange, LookbackMax, MinOfAssets
from src.pricing.superreplication import (
    TreeTooLargeError,
    build_dual_lp,
    build_primal_lp,
    price_table,
    superreplication_price,
)


def make_spec(d=1, n=2, sigma=0.5, kappa=0.0, driver='simplex', s0=None):
    s0 = np.ones(d) if s0 is None else s0
    return MarketSpec(d=d, n=n, sigma=sigma * np.eye(d), s0=s0,
                      kappa_plus=np.full(d, kappa), kappa_minus=np.full(d, kappa), driver=driver)


def payoff_for(name, d):
    if name == 'call':
        weights = np.zeros(d)
        weights[0] = 1.0
        return BasketCall(weights, 1.0)
    if name == 'exchange':
        return Exchange()
    if name == 'min':
        return MinOfAssets()
    return LookbackMax(0)


DUALITY_CASES = (
    [(1, n, kappa, payoff) for n in (1, 3, 6) for kappa in (0.0, 0.1, 0.5) for payoff in ('call', 'lookback')]
    + [(2, n, kappa, payoff) for n in (1, 3) for kappa in (0.0, 0.1, 0.5) for payoff in ('exchange', 'min')]
)


@pytest.mark.parametrize("d, n, kappa, payoff_name", DUALITY_CASES)
def test_strong_duality(d, n, kappa, payoff_name):
    spec = make_spec(d=d, n=n, sigma=0.5 if d == 1 else 0.4, kappa=kappa)
    result = superreplication_price(spec, payoff_for(payoff_name, d))
    assert result['gap'] <= 1e-7 * (1.0 + abs(result['value']))
    assert result['cps'].validate(spec, 1e-8)['passes']


def test_one_period_call_is_one_half():
    spec = make_spec(d=1, n=1, sigma=1.0)
    result = superreplication_price(spec, BasketCall([1.0], 1.0))
    assert result['value'] == pytest.approx(0.5, abs=1e-10)
    assert result['primal'] == pytest.approx(0.5, abs=1e-10)


@pytest.mark.parametrize("d, n, kappa", [(1, 2, 0.0), (1, 4, 0.3), (2, 2, 0.2)])
def test_constant_payoff(d, n, kappa):
    spec = make_spec(d=d, n=n, sigma=0.5 if d == 1 else 0.4, kappa=kappa)
    assert superreplication_price(spec, Constant(1.0))['value'] == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("d, n", [(1, 4), (2, 3)])
def test_frictionless_price_matches_unique_martingale_measure(d, n):
    spec = make_spec(d=d, n=n, sigma=0.5 if d == 1 else 0.4)
    payoff = payoff_for('call', d)
    value = superreplication_price(spec, payoff)['value']
    assert value == pytest.approx(frictionless_price(spec, payoff), abs=1e-9)


def test_price_is_monotone_in_costs():
    payoff = BasketCall([1.0], 1.0)
    values = [superreplication_price(make_spec(d=1, n=4, kappa=kappa), payoff, with_primal=False)['value']
              for kappa in (0.0, 0.1, 0.3, 0.5)]
    assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))


def test_price_is_scale_equivariant():
    spec = make_spec(d=1, n=3, kappa=0.2)
    base = superreplication_price(spec, BasketCall([1.0], 1.0), with_primal=False)['value']

    doubled_payoff = superreplication_price(spec, BasketCall([2.0], 2.0), with_primal=False)['value']
    assert doubled_payoff == pytest.approx(2.0 * base, rel=1e-9)

    scaled = make_spec(d=1, n=3, kappa=0.2, s0=np.array([3.0]))
    scaled_value = superreplication_price(scaled, BasketCall([1.0], 3.0), with_primal=False)['value']
    assert scaled_value == pytest.approx(3.0 * base, rel=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_product_crr_min_is_trivial(n):
    spec = make_spec(d=2, n=n, sigma=1.0, driver=PRODUCT_CRR)
    assert superreplication_price(spec, MinOfAssets(), with_primal=False)['value'] == pytest.approx(1.0, abs=1e-9)


@pytest.mark.slow
@pytest.mark.parametrize("n", [5, 6])
def test_product_crr_min_is_trivial_large(n):
    spec = make_spec(d=2, n=n, sigma=1.0, driver=PRODUCT_CRR)
    assert superreplication_price(spec, MinOfAssets(), with_primal=False)['value'] == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_complete_model_min_has_strict_gap(n):
    spec = make_spec(d=2, n=n, sigma=1.0)
    assert superreplication_price(spec, MinOfAssets(), with_primal=False)['value'] <= 1.0 - 0.01


def test_hedge_and_price_system_shapes():
    spec = make_spec(d=2, n=2, sigma=0.4, kappa=0.1)
    result = superreplication_price(spec, Exchange())
    hedge, cps = result['hedge'], result['cps']

    assert hedge.x == pytest.approx(result['value'], abs=1e-8)
    assert hedge.holdings(()).shape == (2,)
    np.testing.assert_array_equal(hedge.holdings((1, 2)), np.zeros(2))
    buys, sells = hedge.trades((1, 2))
    assert np.all(buys >= -1e-12) and np.all(sells >= -1e-12)

    assert cps.leaf_measure.shape == (9,)
    assert cps.leaf_measure.sum() == pytest.approx(1.0, abs=1e-9)
    root = cps.shadow_price(())
    assert np.all(root >= spec.band_lower * spec.s0 - 1e-9)
    assert np.all(root <= spec.band_upper * spec.s0 + 1e-9)


def test_lp_sizes():
    spec = make_spec(d=2, n=2, sigma=0.4)
    dual = build_dual_lp(spec, Exchange())
    primal = build_primal_lp(spec, Exchange())
    # 노드 13 개: q 13 + y 26, 원 LP: x 1 + gamma 8 + b 26 + s 26
    assert dual.n_vars == 39
    assert primal.n_vars == 61
    assert primal.n_rows == 26 + 9


def test_tree_size_cap():
    spec = make_spec(d=2, n=4, sigma=0.4)
    with pytest.raises(TreeTooLargeError):
        superreplication_price(spec, Exchange(), node_cap=100)


def test_price_table_is_ordered_by_n():
    specs = [make_spec(d=1, n=n, kappa=0.1) for n in (3, 1, 2)]
    rows = price_table(specs, BasketCall([1.0], 1.0))
    assert [row['n'] for row in rows] == [1, 2, 3]
    for row in rows:
        assert row['value'] == row['result']['value']
        assert row['node_count'] == 2 ** (row['n'] + 1) - 1


@pytest.mark.slow
@pytest.mark.parametrize("n", [8, 10, 12])
def test_degenerate_call_trees_solve(n):
    # 등가격 콜의 깊은 트리는 퇴화 피벗이 많다
    spec = make_spec(d=1, n=n, sigma=0.3, kappa=0.2)
    result = superreplication_price(spec, payoff_for('call', 1))
    assert result['gap'] <= 1e-7 * (1.0 + abs(result['value']))
    assert result['cps'].validate(spec, 1e-8)['passes']
