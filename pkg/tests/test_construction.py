"""
하한 구성 (제어, A 과정, 노드 마팅게일 측도, Q_n 표본) 테스트
"""

import math
from collections import OrderedDict

import numpy as np
import pytest

from src.construction.controls import (
    FeedbackRule,
    InvalidControlError,
    PiecewiseVolControl,
    grid_index,
)
from src.construction import kusuoka, simulation
from src.construction.kusuoka import (
    BlendWindowError,
    KusuokaConstruction,
    KusuokaProcesses,
    build_A_process,
    martingale_weights,
    node_mm_feasibility,
    quadratic_variation_diagnostic,
)
from src.construction.simulation import mc_lower_bound, sample_path
from src.corridor.volatility_corridor import beta_from_w, corridor_from_spec, gamma_from_beta
from src.market.model import InvalidNodeError, MarketSpec
from src.market.payoffs import BasketCall
from src.pricing.superreplication import superreplication_price


def spec_d1(n=16, sigma=0.3, kappa=0.2):
    return MarketSpec(d=1, n=n, sigma=[[sigma]], s0=[1.0],
                      kappa_plus=[kappa], kappa_minus=[kappa])


def spec_d2(n=64, kappa=0.1):
    return MarketSpec(d=2, n=n, sigma=np.eye(2), s0=np.ones(2),
                      kappa_plus=np.full(2, kappa), kappa_minus=np.full(2, kappa))


def interior_target(corr, fraction=0.5):
    w = np.full((corr.d + 1, corr.d), fraction) * corr.box[None, :]
    return gamma_from_beta(corr, beta_from_w(corr, w))


def test_grid_index():
    assert grid_index(10, 0.3) == 3
    assert grid_index(64, 0.5) == 32
    assert grid_index(7, 1.0) == 7


@pytest.mark.parametrize("breakpoints, targets", [
    ([0.1, 1.0], [[[0.1]]]),
    ([0.0, 0.9], [[[0.1]]]),
    ([0.0, 0.5, 0.5, 1.0], [[[0.1]], [[0.1]], [[0.1]]]),
    ([0.0, 0.5, 1.0], [[[0.1]]]),
])
def test_control_rejects_bad_intervals(breakpoints, targets):
    with pytest.raises(InvalidControlError):
        PiecewiseVolControl(breakpoints, targets)


def test_control_rejects_feedback_in_first_interval():
    rule = FeedbackRule([(0.0, 0)], [[-1.0, 1.0]], [[[0.1]], [[0.2]]])
    with pytest.raises(InvalidControlError):
        PiecewiseVolControl([0.0, 1.0], [rule])


def test_control_rejects_future_sample_time():
    rule = FeedbackRule([(0.75, 0)], [[-1.0, 1.0]], [[[0.1]], [[0.2]]])
    with pytest.raises(InvalidControlError):
        PiecewiseVolControl([0.0, 0.5, 1.0], [[[0.1]], rule])


def test_control_validate_against_corridor():
    corr = corridor_from_spec(spec_d1())
    PiecewiseVolControl.constant([[0.21]]).validate(corr)
    PiecewiseVolControl.constant([[0.1]]).validate(corr)

    with pytest.raises(InvalidControlError):
        PiecewiseVolControl.constant([[0.5]]).validate(corr)
    with pytest.raises(InvalidControlError):
        PiecewiseVolControl.constant([[0.0]]).validate(corr)
    with pytest.raises(InvalidControlError):
        PiecewiseVolControl.constant(np.eye(2)).validate(corr)

    corr2 = corridor_from_spec(spec_d2())
    with pytest.raises(InvalidControlError):
        PiecewiseVolControl.constant([[1.0, 0.1], [0.0, 1.0]]).validate(corr2)


def test_feedback_rule_interpolates_and_clips():
    rule = FeedbackRule([(0.5, 0)], [[-1.0, 1.0]], [[[0.1]], [[0.2]]])
    history = np.zeros((3, 1))
    assert rule.evaluate(history, 4)[0, 0] == pytest.approx(0.15)

    history[2, 0] = 5.0
    assert rule.evaluate(history, 4)[0, 0] == pytest.approx(0.2)

    with pytest.raises(InvalidControlError):
        rule.evaluate(np.zeros((2, 1)), 4)


def test_ramp_and_plateau_hit_band_edges_d1():
    spec = spec_d1(n=16)
    control = PiecewiseVolControl.constant([[0.21]])
    path = (1, 2, 1, 1, 2, 2, 1, 2, 1, 2, 2, 1)
    processes = build_A_process(spec, control, path)

    root_n = math.sqrt(spec.n)
    r = 4
    assert processes.A[0, 0] == 0.0
    for k, branch in enumerate(path, start=1):
        xi = 1.0 if branch == 1 else -1.0
        plateau = xi * 0.2 / root_n
        expected = plateau * min(k, r) / r
        assert processes.A[k, 0] == pytest.approx(expected, abs=1e-9)

    assert processes.check(spec)['passes']


def test_blend_between_intervals_d1():
    spec = spec_d1(n=64)
    control = PiecewiseVolControl([0.0, 0.5, 1.0], [[[0.21]], [[0.09]]])
    construction = KusuokaConstruction(spec, control)
    assert construction.window == 8
    assert construction.boundaries == [0, 32, 64]
    assert construction.interval_of(32) == 0
    assert construction.interval_of(33) == 1

    down = build_A_process(spec, control, (2,) * 36)
    up = build_A_process(spec, control, (2,) * 35 + (1,))
    # 혼합 가중치 1/2: P_0 = xi 0.2/8, P_1 = -0.2/8
    assert down.A[36, 0] == pytest.approx(-0.025, abs=1e-9)
    assert up.A[36, 0] == pytest.approx(0.0, abs=1e-9)

    tail = build_A_process(spec, control, (1,) * 64)
    assert tail.A[64, 0] == pytest.approx(-0.025, abs=1e-9)
    assert tail.check(spec)['passes']


def test_short_interval_raises_blend_window_error():
    spec = spec_d1(n=4)
    control = PiecewiseVolControl([0.0, 0.5, 1.0], [[[0.21]], [[0.09]]])
    with pytest.raises(BlendWindowError):
        KusuokaConstruction(spec, control)


def test_invariants_on_random_paths_d2():
    spec = spec_d2(n=64)
    corr = corridor_from_spec(spec)
    control = PiecewiseVolControl(
        [0.0, 0.5, 1.0], [interior_target(corr, 0.5), interior_target(corr, 0.9)]
    )
    control.validate(corr)

    rng = np.random.default_rng(7)
    for _ in range(20):
        path = tuple(rng.integers(1, 4, size=64))
        result = build_A_process(spec, control, path).check(spec)
        assert result['passes'], result


def test_build_rejects_bad_path():
    spec = spec_d1(n=16)
    control = PiecewiseVolControl.constant([[0.21]])
    with pytest.raises(InvalidNodeError):
        build_A_process(spec, control, (3,))
    with pytest.raises(InvalidNodeError):
        build_A_process(spec, control, (1,) * 17)


def test_martingale_weights():
    result = martingale_weights(np.array([[1.0], [-1.0]]))
    assert result['feasible']
    assert result['margin'] == pytest.approx(0.5)
    np.testing.assert_allclose(result['q'], [0.5, 0.5])

    result = martingale_weights(np.array([[1.0], [2.0]]))
    assert not result['feasible']
    assert result['margin'] == -math.inf


def test_martingale_weights_lp_branch():
    # m > d+1 이면 LP 로 최소 확률을 최대화
    dN = np.array([[1.0], [-1.0], [0.0]])
    result = martingale_weights(dN)
    assert result['feasible']
    assert result['margin'] == pytest.approx(1.0 / 3.0, abs=1e-9)
    assert float(result['q'] @ dN[:, 0]) == pytest.approx(0.0, abs=1e-9)


def test_node_measure_exists_along_sampled_paths():
    spec = spec_d2(n=64)
    corr = corridor_from_spec(spec)
    control = PiecewiseVolControl.constant(interior_target(corr, 0.5))

    assert node_mm_feasibility(spec, control, ())['feasible']

    rng = np.random.default_rng(3)
    construction = KusuokaConstruction(spec, control)
    memo = OrderedDict()
    for _ in range(5):
        processes = sample_path(spec, control, rng, memo, construction)
        assert processes.depth == 64
        assert processes.check(spec)['passes']
    assert len(memo) > 64

    node = tuple(rng.integers(1, 4, size=40))
    result = node_mm_feasibility(spec, control, node)
    assert result['node'] == node
    assert result['feasible']
    assert abs(result['q'].sum() - 1.0) <= 1e-12

    with pytest.raises(InvalidNodeError):
        node_mm_feasibility(spec, control, (1,) * 64)


def test_quadratic_variation_without_costs_is_exact():
    spec = spec_d1(n=16, kappa=0.0)
    control = PiecewiseVolControl.constant(spec.sigma @ spec.sigma.T)
    path = (1, 1, 2, 1, 2, 2, 2, 1, 1, 2, 1, 2, 1, 1, 2, 2)
    result = quadratic_variation_diagnostic(spec, control, path, 0.0, 1.0)
    assert result['qv_rate'][0, 0] == pytest.approx(0.09, abs=1e-12)
    assert result['z_rate'][0, 0] == pytest.approx(0.09, abs=1e-12)
    np.testing.assert_allclose(result['target'], [[0.09]])


def test_quadratic_variation_tracks_target_under_constructed_measure():
    spec = spec_d1(n=256)
    control = PiecewiseVolControl.constant([[0.21]])
    construction = KusuokaConstruction(spec, control)
    memo = OrderedDict()

    rates, z_rates = [], []
    for p in range(20):
        rng = np.random.default_rng([11, p])
        path = sample_path(spec, control, rng, memo, construction).path
        result = quadratic_variation_diagnostic(spec, control, path, 0.25, 1.0)
        rates.append(result['qv_rate'][0, 0])
        z_rates.append(result['z_rate'][0, 0])

    assert np.mean(rates) == pytest.approx(0.21, abs=0.02)
    assert np.mean(z_rates) == pytest.approx(0.21, abs=0.05)


def test_quadratic_variation_rejects_bad_interval():
    spec = spec_d1(n=16)
    control = PiecewiseVolControl.constant([[0.21]])
    with pytest.raises(ValueError):
        quadratic_variation_diagnostic(spec, control, (1,) * 16, 0.5, 0.5)
    with pytest.raises(InvalidNodeError):
        quadratic_variation_diagnostic(spec, control, (1,) * 4, 0.0, 1.0)


def _frictionless_check(paths):
    spec = spec_d1(n=8, kappa=0.0)
    control = PiecewiseVolControl.constant(spec.sigma @ spec.sigma.T)
    payoff = BasketCall([1.0], 1.0)
    estimate = mc_lower_bound(spec, control, payoff, paths=paths, seed=5)
    price = superreplication_price(spec, payoff, with_primal=False)['value']
    assert estimate['paths'] == paths
    assert estimate['infeasible_nodes'] == 0
    assert abs(estimate['estimate'] - price) <= 3.0 * estimate['stderr']


def test_mc_matches_frictionless_price():
    _frictionless_check(2000)


@pytest.mark.slow
def test_mc_matches_frictionless_price_many_paths():
    _frictionless_check(100000)


def test_mc_estimate_is_below_superreplication_price():
    spec = spec_d1(n=9)
    control = PiecewiseVolControl.constant([[0.21]])
    payoff = BasketCall([1.0], 1.0)
    estimate = mc_lower_bound(spec, control, payoff, paths=2000, seed=1)
    price = superreplication_price(spec, payoff, with_primal=False)['value']
    assert estimate['estimate'] <= price + 3.0 * estimate['stderr']


def test_mc_is_reproducible():
    spec = spec_d1(n=9)
    control = PiecewiseVolControl.constant([[0.21]])
    payoff = BasketCall([1.0], 1.0)
    first = mc_lower_bound(spec, control, payoff, paths=200, seed=42)
    second = mc_lower_bound(spec, control, payoff, paths=200, seed=42)
    assert first == second


def test_mc_rejects_bad_arguments():
    spec = spec_d1(n=9)
    control = PiecewiseVolControl.constant([[0.21]])
    payoff = BasketCall([1.0], 1.0)
    with pytest.raises(ValueError):
        mc_lower_bound(spec, control, payoff, paths=0)
    with pytest.raises(ValueError):
        mc_lower_bound(spec, control, payoff, paths=10, on_infeasible='ignore')


@pytest.mark.slow
def test_band_on_many_random_controls():
    spec = spec_d2(n=16, kappa=0.3)
    corr = corridor_from_spec(spec)
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        w = rng.random((3, 2)) * corr.box[None, :]
        target = gamma_from_beta(corr, beta_from_w(corr, w))
        control = PiecewiseVolControl.constant(target)
        construction = KusuokaConstruction(spec, control, corr)
        state = construction.initial_state()
        for branch in rng.integers(1, 4, size=16):
            construction.advance(state, int(branch))
        assert construction.processes(state).check(spec)['passes']


def test_node_memo_is_bounded(monkeypatch):
    monkeypatch.setattr(simulation, 'MEMO_SIZE', 10)
    spec = spec_d2(n=64)
    control = PiecewiseVolControl.constant(interior_target(corridor_from_spec(spec), 0.5))
    construction = KusuokaConstruction(spec, control)
    memo = OrderedDict()
    rng = np.random.default_rng(5)
    for _ in range(3):
        assert sample_path(spec, control, rng, memo, construction).depth == 64
    assert len(memo) == 10


def test_prescription_cache_is_bounded(monkeypatch):
    monkeypatch.setattr(kusuoka, 'PRESCRIPTION_CACHE_SIZE', 2)
    spec = spec_d2(n=16)
    corr = corridor_from_spec(spec)
    construction = KusuokaConstruction(spec, PiecewiseVolControl.constant(interior_target(corr)), corr)
    targets = [interior_target(corr, fraction) for fraction in (0.2, 0.5, 0.8)]
    for target in targets:
        beta, _ = construction.prescription(target)
        np.testing.assert_allclose(gamma_from_beta(corr, beta), target, atol=1e-9)
    construction.prescription(targets[-1])

    info = construction.prescription_cache_info()
    assert info.currsize == 2
    assert info.hits == 1


def test_x_gap_bound_is_per_asset():
    spec = MarketSpec(d=2, n=16, sigma=np.eye(2), s0=np.ones(2),
                      kappa_plus=[0.05, 0.3], kappa_minus=[0.05, 0.3])
    zeros = np.zeros((2, 2))
    ones = np.ones((2, 2))

    def processes(gap):
        return KusuokaProcesses(path=(1,), A=zeros, S=ones, M=ones, N=zeros, X=zeros + gap, alpha=zeros)

    # 첫 자산의 간극 0.05 는 그 자산의 한계 0.05/4 를 넘고, 둘째 자산 한계 0.3/4 안에는 든다
    wide_on_first = processes(np.array([[0.0, 0.0], [0.05, 0.0]]))
    result = wide_on_first.check(spec)
    assert result['x_gap'] == pytest.approx((0.2 - 0.05) / 4.0)
    assert not result['passes']

    wide_on_second = processes(np.array([[0.0, 0.0], [0.0, 0.05]]))
    assert wide_on_second.check(spec)['passes']
