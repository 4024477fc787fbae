"""
초과헤지 가격 모듈

유한 트리 위에서 V_n(F) 를 두 선형계획으로 계산한다.
- 원 문제 (헤지): 초기 현금 x 를 최소화, 만기 노드마다 Z_n >= F_n
- 쌍대 문제 (일관 가격 체계): q 와 y = q M 을 변수로 sum_leaf q F 를 최대화

노드 번호는 깊이별 사전식 순서이며, 깊이 k 노드 p 의 자식 j 는 깊이 k+1 의 p*m + j 번이다.
"""

import logging
import time
from dataclasses import dataclass

import numpy as np

from src.lp.problem import LPBuilder
from src.lp.simplex import solve_lp
from src.market.model import (
    leaf_paths,
    level_offsets,
    level_prices,
    local_index,
    node_count,
)
from src.utils.errors import ConfigurationError, NumericalError

logger = logging.getLogger(__name__)

DEFAULT_NODE_CAP = 100000
CPS_TOLERANCE = 1e-9
POSITIVE_MASS = 1e-12
PRICE_COLUMNS = ('n', 'value', 'primal', 'dual', 'gap', 'solver_iterations', 'wall_time', 'node_count')


class TreeTooLargeError(ConfigurationError):
    """
    트리 노드 수가 상한을 넘을 때 발생
    """


class PricingError(NumericalError):
    """
    LP 풀이 실패 또는 최적 가격 체계 검증 실패
    """


@dataclass(eq=False)
class HedgingStrategy:
    """
    초기 현금과 노드별 보유량/매수량/매도량

    gamma 는 내부 노드 (깊이 < n) 에만, buys/sells 는 만기 청산을 포함해 모든 노드에 정의된다.
    """
    x: float
    gamma: np.ndarray
    buys: np.ndarray
    sells: np.ndarray
    offsets: list
    branching: int

    def _index(self, node):
        return self.offsets[len(node)] + local_index(self.branching, node)

    def holdings(self, node):
        """
        노드에서 거래 후 보유량 gamma (길이 d)
        """
        index = self._index(node)
        if index >= self.gamma.shape[0]:
            return np.zeros(self.gamma.shape[1])
        return self.gamma[index]

    def trades(self, node):
        """
        노드에서의 (매수량, 매도량)
        """
        index = self._index(node)
        return self.buys[index], self.sells[index]

    def describe(self):
        return {
            'x': self.x,
            'root_holdings': self.holdings(()).tolist(),
            'root_trades': [side.tolist() for side in self.trades(())]
        }


@dataclass(eq=False)
class ConsistentPriceSystem:
    """
    노드별 측도 q 와 측도 가중 그림자 가격 y = q M
    """
    q: np.ndarray
    y: np.ndarray
    offsets: list
    branching: int

    @property
    def leaf_measure(self):
        return self.q[self.offsets[-2]:]

    def _index(self, node):
        return self.offsets[len(node)] + local_index(self.branching, node)

    def shadow_price(self, node):
        """
        M(node) = y / q, q(node) 가 0 이면 None
        """
        index = self._index(node)
        if self.q[index] <= POSITIVE_MASS:
            return None
        return self.y[index] / self.q[index]

    def describe(self):
        root = self.shadow_price(())
        return {
            'root_shadow_price': None if root is None else root.tolist(),
            'leaf_measure': self.leaf_measure.tolist()
        }

    def validate(self, spec, tol=CPS_TOLERANCE):
        """
        측도 합, 마팅게일 집계, 밴드 조건 검사

        Args:
            spec (MarketSpec): 시장
            tol (float): 허용 오차

        Returns:
            dict: mass / aggregation / band 잔차와 passes
        """
        m = spec.branching
        prices = np.concatenate(level_prices(spec))
        internal = self.offsets[-2]

        mass_error = abs(self.q[0] - 1.0)
        aggregation_error = 0.0
        for depth in range(spec.n):
            parents = np.arange(self.offsets[depth], self.offsets[depth + 1])
            children_q = self.q[self.offsets[depth + 1]:self.offsets[depth + 2]].reshape(-1, m)
            children_y = self.y[self.offsets[depth + 1]:self.offsets[depth + 2]].reshape(-1, m, spec.d)
            aggregation_error = max(
                aggregation_error,
                float(np.max(np.abs(self.q[parents] - children_q.sum(axis=1)), initial=0.0)),
                float(np.max(np.abs(self.y[parents] - children_y.sum(axis=1)), initial=0.0))
            )

        active = self.q > POSITIVE_MASS
        lower = spec.band_lower * prices * self.q[:, None]
        upper = spec.band_upper * prices * self.q[:, None]
        violation = np.maximum(lower - self.y, 0.0) + np.maximum(self.y - upper, 0.0)
        band_error = float(np.max(violation[active], initial=0.0))
        negative_mass = float(np.max(-self.q, initial=0.0))

        worst = max(mass_error, aggregation_error, band_error, negative_mass)
        return {
            'mass': mass_error,
            'aggregation': aggregation_error,
            'band': band_error,
            'negative_mass': negative_mass,
            'internal_nodes': internal,
            'passes': worst <= tol
        }


def check_tree_size(spec, node_cap):
    count = node_count(spec)
    if count > node_cap:
        logger.error(f"트리 노드 수 {count} 가 상한 {node_cap} 을 넘습니다 (d={spec.d}, n={spec.n})")
        raise TreeTooLargeError(f"노드 수 {count} > 상한 {node_cap} (d={spec.d}, n={spec.n})")
    return count


def _children_of_depth(offsets, depth, m):
    """
    깊이 depth 노드들의 전역 번호와 자식 전역 번호 (부모 수 x m)
    """
    parents = np.arange(offsets[depth], offsets[depth + 1])
    local = np.arange(parents.size)
    children = offsets[depth + 1] + local[:, None] * m + np.arange(m)[None, :]
    return parents, children


def _offsets_with_end(spec):
    offsets = level_offsets(spec)
    return offsets + [offsets[-1] + spec.branching ** spec.n]


def leaf_payoffs(spec, payoff, levels=None):
    """
    만기 노드 순서대로 F(W_n(S)) 값
    """
    return np.asarray(payoff.evaluate_paths(leaf_paths(spec, levels)), dtype=float)


def build_dual_lp(spec, payoff, node_cap=DEFAULT_NODE_CAP):
    """
    일관 가격 체계 LP

    변수: q(node) >= 0 (N 개), y^i(node) 자유 (N*d 개, 노드 우선 순서)
    최대화 sum_leaf q F, 제약:
        q(root) = 1
        q(node) = sum_children q,  y(node) = sum_children y   (내부 노드)
        lo_i S^i q <= y^i <= hi_i S^i q                       (모든 노드)

    Args:
        spec (MarketSpec): 시장
        payoff (Payoff): 지급 함수
        node_cap (int): 노드 수 상한

    Returns:
        LinearProgram: 쌍대 LP
    """
    count = check_tree_size(spec, node_cap)
    d, m, n = spec.d, spec.branching, spec.n
    offsets = _offsets_with_end(spec)
    levels = level_prices(spec)
    prices = np.concatenate(levels)

    builder = LPBuilder('max')
    cost = np.zeros(count)
    cost[offsets[n]:] = leaf_payoffs(spec, payoff, levels)
    q = builder.add_variables(count, lower=0.0, upper=np.inf, cost=cost)
    y = builder.add_variables(count * d, lower=-np.inf, upper=np.inf).reshape(count, d)

    root = builder.add_rows(1, '=', 1.0)
    builder.add_entries(root, q[0], 1.0)

    for depth in range(n):
        parents, children = _children_of_depth(offsets, depth, m)
        rows = builder.add_rows(parents.size, '=', 0.0)
        builder.add_entries(rows, q[parents], 1.0)
        builder.add_entries(rows[:, None], q[children], -1.0)

        rows = builder.add_rows(parents.size * d, '=', 0.0).reshape(parents.size, d)
        builder.add_entries(rows, y[parents], 1.0)
        builder.add_entries(rows[:, None, :], y[children], -1.0)

    # y - lo S q >= 0
    rows = builder.add_rows(count * d, '>=', 0.0).reshape(count, d)
    builder.add_entries(rows, y, 1.0)
    builder.add_entries(rows, q[:, None], -spec.band_lower[None, :] * prices)

    # y - hi S q <= 0
    rows = builder.add_rows(count * d, '<=', 0.0).reshape(count, d)
    builder.add_entries(rows, y, 1.0)
    builder.add_entries(rows, q[:, None], -spec.band_upper[None, :] * prices)

    lp = builder.build()
    logger.debug(f"쌍대 LP 생성: {lp.n_rows} 행, {lp.n_vars} 변수 (노드 {count})")
    return lp


def build_primal_lp(spec, payoff, node_cap=DEFAULT_NODE_CAP):
    """
    헤지 LP

    변수: x 자유, gamma(node) 자유 (내부 노드), b(node), s(node) >= 0 (모든 노드)
    최소화 x, 제약:
        gamma(node) - gamma(parent) - b(node) + s(node) = 0   (만기 노드의 gamma 는 0, 루트의 부모 gamma 는 0)
        x + sum_{경로} [ -hi S b + lo S s ] >= F               (만기 노드)

    Returns:
        LinearProgram: 원 LP
    """
    count = check_tree_size(spec, node_cap)
    d, m, n = spec.d, spec.branching, spec.n
    offsets = _offsets_with_end(spec)
    levels = level_prices(spec)
    prices = np.concatenate(levels)
    internal = offsets[n]
    leaves = count - internal

    builder = LPBuilder('min')
    x = builder.add_variables(1, lower=-np.inf, upper=np.inf, cost=1.0)
    gamma = builder.add_variables(internal * d, lower=-np.inf, upper=np.inf).reshape(internal, d)
    buys = builder.add_variables(count * d).reshape(count, d)
    sells = builder.add_variables(count * d).reshape(count, d)

    rows = builder.add_rows(count * d, '=', 0.0).reshape(count, d)
    builder.add_entries(rows, buys, -1.0)
    builder.add_entries(rows, sells, 1.0)
    builder.add_entries(rows[:internal], gamma, 1.0)
    for depth in range(n):
        parents, children = _children_of_depth(offsets, depth, m)
        builder.add_entries(rows[children], gamma[parents][:, None, :], -1.0)

    leaf_rows = builder.add_rows(leaves, '>=', leaf_payoffs(spec, payoff, levels))
    builder.add_entries(leaf_rows, x[0], 1.0)

    # 만기 노드의 경로 위 조상 (깊이 0..n)
    leaf_local = np.arange(leaves)
    for depth in range(n + 1):
        ancestors = offsets[depth] + leaf_local // (m ** (n - depth))
        builder.add_entries(leaf_rows[:, None], buys[ancestors], -spec.band_upper[None, :] * prices[ancestors])
        builder.add_entries(leaf_rows[:, None], sells[ancestors], spec.band_lower[None, :] * prices[ancestors])

    lp = builder.build()
    logger.debug(f"원 LP 생성: {lp.n_rows} 행, {lp.n_vars} 변수 (노드 {count})")
    return lp


def _require_optimal(solution, name):
    if not solution.is_optimal:
        logger.error(f"{name} LP 풀이 실패: {solution.status.value}")
        raise PricingError(f"{name} LP 가 최적해에 도달하지 못했습니다: {solution.status.value}")


def superreplication_price(spec, payoff, options=None, node_cap=DEFAULT_NODE_CAP, with_primal=True):
    """
    초과헤지 가격 V_n(F)

    Args:
        spec (MarketSpec): 시장
        payoff (Payoff): 지급 함수
        options (dict, optional): solve_lp 옵션
        node_cap (int): 노드 수 상한
        with_primal (bool): 원 LP (헤지) 도 풀지 여부

    Returns:
        dict: value, primal, dual, gap, hedge, cps, solver_iterations, wall_time, node_count 등
    """
    started = time.perf_counter()
    count = check_tree_size(spec, node_cap)
    offsets = _offsets_with_end(spec)
    d = spec.d

    dual_solution = solve_lp(build_dual_lp(spec, payoff, node_cap), options)
    _require_optimal(dual_solution, '쌍대')
    cps = ConsistentPriceSystem(
        q=dual_solution.x[:count].copy(),
        y=dual_solution.x[count:].reshape(count, d).copy(),
        offsets=offsets,
        branching=spec.branching
    )
    check = cps.validate(spec, CPS_TOLERANCE * (1.0 + float(np.max(spec.s0))))
    if not check['passes']:
        logger.error(f"최적 가격 체계 검증 실패: {check}")
        raise PricingError(f"일관 가격 체계 불변식 위반: {check}")

    dual_value = float(dual_solution.objective)
    iterations = dual_solution.iterations

    hedge = None
    primal_value = float('nan')
    gap = float('nan')
    if with_primal:
        primal_solution = solve_lp(build_primal_lp(spec, payoff, node_cap), options)
        _require_optimal(primal_solution, '원')
        internal = offsets[spec.n]
        values = primal_solution.x
        hedge = HedgingStrategy(
            x=float(values[0]),
            gamma=values[1:1 + internal * d].reshape(internal, d).copy(),
            buys=values[1 + internal * d:1 + internal * d + count * d].reshape(count, d).copy(),
            sells=values[1 + internal * d + count * d:].reshape(count, d).copy(),
            offsets=offsets,
            branching=spec.branching
        )
        primal_value = float(primal_solution.objective)
        gap = abs(primal_value - dual_value)
        iterations += primal_solution.iterations

        if gap > 1e-7 * (1.0 + abs(dual_value)):
            logger.warning(f"쌍대 간극이 큽니다: primal={primal_value:.12g}, dual={dual_value:.12g}")

    return {
        'd': spec.d,
        'n': spec.n,
        'kappa': {'plus': spec.kappa_plus.tolist(), 'minus': spec.kappa_minus.tolist()},
        'payoff': payoff.describe(),
        'value': dual_value,
        'primal': primal_value,
        'dual': dual_value,
        'gap': gap,
        'hedge': hedge,
        'cps': cps,
        'solver_iterations': iterations,
        'wall_time': time.perf_counter() - started,
        'node_count': count
    }


def price_table(specs, payoff, options=None, node_cap=DEFAULT_NODE_CAP, with_primal=False):
    """
    여러 시장(보통 n 만 다른)에 대한 가격 표

    Returns:
        list: n 순서의 행 dict (n, value, primal, dual, gap, solver_iterations, wall_time, node_count, result)
    """
    rows = []
    for spec in sorted(specs, key=lambda s: s.n):
        result = superreplication_price(spec, payoff, options, node_cap, with_primal)
        row = {key: result[key] for key in PRICE_COLUMNS}
        row['result'] = result
        rows.append(row)
    return rows
