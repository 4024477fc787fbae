"""
하한 구성: 제어 -> 그림자 가격 과정

경로 위에서 A_k 를 만들고 M = S (1 + A), N, X 를 계산한다.

    P_l(xi) = (xi beta_l + Phi(beta_l)) / sqrt(n),  beta_l = Psi(a_l^2)

r = [sqrt(n)], k_l = [n T_l] 일 때 A_0 = 0, 처음 r 스텝은 (k/r) P_0 로 램프, 이후 P_0 유지.
각 경계 k_l 뒤 r 스텝 동안 P_{l-1} 에서 P_l 로 선형 혼합하고 이후 P_l 유지.
"""

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np

from src.construction.controls import grid_index
from src.corridor.volatility_corridor import corridor_from_spec, phi, psi
from src.lp.problem import LPBuilder, LPStatus
from src.lp.simplex import solve_lp
from src.market.model import InvalidNodeError, branch_vectors
from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

FEASIBILITY_MARGIN = 1e-12
PRESCRIPTION_CACHE_SIZE = 4096


class BlendWindowError(ConfigurationError):
    """
    구간 길이가 혼합 창 2r 보다 짧을 때 발생
    """


@dataclass(eq=False)
class KusuokaProcesses:
    """
    한 경로 위의 과정들, 모두 (k+1) x d (k = 경로 길이)
    """
    path: tuple
    A: np.ndarray
    S: np.ndarray
    M: np.ndarray
    N: np.ndarray
    X: np.ndarray
    alpha: np.ndarray

    @property
    def depth(self):
        return len(self.path)

    def increments(self):
        """
        Delta N_k (k = 1..depth)
        """
        return np.diff(self.N, axis=0)

    def check(self, spec, tolerance=1e-10):
        """
        불변식 잔차

        Returns:
            dict: band (A 의 띠 위반), identity (M - S(1+A)), increments (Delta N 정의),
                  x_gap (자산별 max_k |X_i - N_i| - max(kappa_i^+, kappa_i^-)/sqrt(n) 의 최대값), passes
        """
        root_n = math.sqrt(spec.n)
        lower = -spec.kappa_minus / root_n
        upper = spec.kappa_plus / root_n
        band = float(max(np.max(lower - self.A, initial=0.0), np.max(self.A - upper, initial=0.0)))

        identity = float(np.max(np.abs(self.M - self.S * (1.0 + self.A))))
        expected = np.diff(self.M, axis=0) / self.S[:-1]
        increments = float(np.max(np.abs(self.increments() - expected), initial=0.0))

        bound = np.maximum(spec.kappa_plus, spec.kappa_minus) / root_n
        x_gap = float(np.max(np.max(np.abs(self.X - self.N), axis=0) - bound))

        scale = tolerance * (1.0 + float(np.max(np.abs(self.M))))
        return {
            'band': band,
            'identity': identity,
            'increments': increments,
            'x_gap': x_gap,
            'passes': band <= tolerance and identity <= scale and increments <= scale and x_gap <= tolerance
        }


class KusuokaConstruction:
    """
    시장과 제어로부터 A 과정을 만드는 상태 없는 도우미 (상수 목표의 Psi/Phi 는 캐시)
    """

    def __init__(self, spec, control, corridor=None):
        if spec.basis is None:
            raise ConfigurationError("하한 구성은 심플렉스 구동 시장에서만 정의됩니다.")

        self.spec = spec
        self.control = control
        self.corridor = corridor or corridor_from_spec(spec)
        self.n = spec.n
        self.root_n = math.sqrt(spec.n)
        self.window = max(int(math.floor(self.root_n)), 1)
        self.branches = branch_vectors(spec)
        self.boundaries = [grid_index(spec.n, t) for t in control.breakpoints]

        for l, (start, end) in enumerate(zip(self.boundaries, self.boundaries[1:])):
            if end - start < 2 * self.window:
                logger.error(f"구간 {l} 의 스텝 수 {end - start} 가 혼합 창 2r={2 * self.window} 보다 짧습니다.")
                raise BlendWindowError(
                    f"n={spec.n} 에서 구간 {l} 이 너무 짧습니다 ({end - start} < {2 * self.window})"
                )

        self._prescribe = functools.lru_cache(maxsize=PRESCRIPTION_CACHE_SIZE)(self._solve_prescription)

    def _solve_prescription(self, key):
        d = self.corridor.d
        target = np.frombuffer(key, dtype=float).reshape(d, d)
        beta = psi(self.corridor, target)
        return beta, phi(self.corridor, beta)

    def prescription(self, target):
        """
        분산 목표 -> (beta, Phi), 최근 PRESCRIPTION_CACHE_SIZE 개 목표만 보관
        """
        d = self.corridor.d
        target = np.ascontiguousarray(np.asarray(target, dtype=float).reshape(d, d))
        return self._prescribe(target.tobytes())

    def prescription_cache_info(self):
        return self._prescribe.cache_info()

    def interval_of(self, k):
        """
        k_l < k <= k_{l+1} 인 l (k >= 1)
        """
        for l in range(self.control.intervals):
            if k <= self.boundaries[l + 1]:
                return l
        return self.control.intervals - 1

    def _P(self, l, xi, history):
        beta, shift = self.prescription(self.control.target(l, history, self.n))
        return (xi @ beta + shift) / self.root_n

    def a_value(self, k, xi, history):
        """
        A_k

        Args:
            k (int): 스텝 (1..n)
            xi (np.ndarray): xi_k
            history (np.ndarray): N_0..N_{k-1}
        """
        l = self.interval_of(k)
        elapsed = k - self.boundaries[l]
        current = self._P(l, xi, history)
        if elapsed > self.window:
            return current
        if l == 0:
            return (elapsed / self.window) * current
        previous = self._P(l - 1, xi, history)
        weight = elapsed / self.window
        return (1.0 - weight) * previous + weight * current

    def initial_state(self):
        d = self.spec.d
        s0 = self.spec.s0
        return {
            'path': [],
            'A': [np.zeros(d)],
            'S': [s0.copy()],
            'M': [s0.copy()],
            'N': [np.zeros(d)],
            'X': [np.zeros(d)],
            'alpha': [np.zeros(d)]
        }

    def child_values(self, state):
        """
        다음 스텝의 분기별 (A, alpha, Delta N), 각 m x d
        """
        k = len(state['path']) + 1
        if k > self.n:
            raise InvalidNodeError("만기 노드에는 자식이 없습니다.")

        history = np.array(state['N'])
        A_prev = state['A'][-1]
        alpha = self.branches @ self.spec.sigma.T / self.root_n
        A_next = np.array([self.a_value(k, xi, history) for xi in self.branches])
        dN = A_next - A_prev[None, :] + alpha * (1.0 + A_next)
        return A_next, alpha, dN

    def advance(self, state, branch, values=None):
        """
        분기 라벨 (1..m) 로 한 스텝 진행 (state 를 제자리에서 갱신)
        """
        A_next, alpha, dN = values if values is not None else self.child_values(state)
        j = branch - 1
        S_next = state['S'][-1] * (1.0 + alpha[j])

        state['path'].append(branch)
        state['A'].append(A_next[j])
        state['S'].append(S_next)
        state['M'].append(S_next * (1.0 + A_next[j]))
        state['N'].append(state['N'][-1] + dN[j])
        state['X'].append(state['X'][-1] + alpha[j] * (1.0 + A_next[j]))
        state['alpha'].append(alpha[j])
        return state

    def processes(self, state):
        return KusuokaProcesses(
            path=tuple(state['path']),
            **{key: np.array(state[key]) for key in ('A', 'S', 'M', 'N', 'X', 'alpha')}
        )


def _validate_path(spec, path):
    path = tuple(int(b) for b in path)
    if len(path) > spec.n:
        raise InvalidNodeError(f"경로 길이 {len(path)} 가 n={spec.n} 을 넘습니다.")
    if any(b < 1 or b > spec.branching for b in path):
        raise InvalidNodeError(f"분기 라벨이 범위 1..{spec.branching} 밖입니다: {path}")
    return path


def build_A_process(spec, control, path, corridor=None):
    """
    경로 (또는 노드) 위의 A, S, M, N, X

    Args:
        spec (MarketSpec): 심플렉스 구동 시장
        control (PiecewiseVolControl): 제어
        path (tuple): 분기 라벨 (길이 <= n)

    Returns:
        KusuokaProcesses: 과정들
    """
    path = _validate_path(spec, path)
    construction = KusuokaConstruction(spec, control, corridor)
    state = construction.initial_state()
    for branch in path:
        construction.advance(state, branch)
    return construction.processes(state)


def _martingale_lp(dN):
    m, d = dN.shape
    builder = LPBuilder('max')
    q = builder.add_variables(m, lower=0.0)
    delta = builder.add_variables(1, lower=-np.inf, cost=1.0)[0]

    margin_rows = builder.add_rows(m, '>=')
    builder.add_entries(margin_rows, q, 1.0)
    builder.add_entries(margin_rows, delta, -1.0)

    total = builder.add_rows(1, '=', 1.0)
    builder.add_entries(total[0], q, 1.0)

    moments = builder.add_rows(d, '=')
    builder.add_entries(moments[:, None], q[None, :], dN.T)
    return builder.build(), q, delta


def martingale_weights(dN, options=None):
    """
    sum q = 1, sum q_j dN_j = 0 에서 min q 를 최대화

    Returns:
        dict: feasible, margin (불능이면 -inf), q
    """
    dN = np.asarray(dN, dtype=float)
    m, d = dN.shape

    # 심플렉스 구동은 해가 유일하므로 선형계 풀이로 충분
    if m == d + 1:
        system = np.vstack([dN.T, np.ones((1, m))])
        try:
            q = np.linalg.solve(system, np.append(np.zeros(d), 1.0))
            if np.all(np.isfinite(q)) and q.min() > FEASIBILITY_MARGIN:
                return {'feasible': True, 'margin': float(q.min()), 'q': q}
        except np.linalg.LinAlgError:
            pass

    lp, q_index, delta = _martingale_lp(dN)
    solution = solve_lp(lp, options)
    if solution.status == LPStatus.INFEASIBLE:
        return {'feasible': False, 'margin': -math.inf, 'q': None}
    if not solution.is_optimal:
        logger.warning(f"노드 마팅게일 LP 가 최적이 아닙니다: {solution.status.value}")
        return {'feasible': False, 'margin': -math.inf, 'q': None}

    margin = float(solution.x[delta])
    q = np.clip(solution.x[q_index], 0.0, None)
    return {'feasible': margin > FEASIBILITY_MARGIN, 'margin': margin, 'q': q / q.sum()}


def node_mm_feasibility(spec, control, node, corridor=None, options=None):
    """
    노드에서 자식들의 Delta N 에 대한 양의 마팅게일 측도 존재 여부

    Args:
        node (tuple): 깊이 < n 인 노드

    Returns:
        dict: node, feasible, margin, q
    """
    node = _validate_path(spec, node)
    if len(node) >= spec.n:
        raise InvalidNodeError(f"만기 노드에는 자식이 없습니다: 깊이 {len(node)}")

    construction = KusuokaConstruction(spec, control, corridor)
    state = construction.initial_state()
    for branch in node:
        construction.advance(state, branch)
    _, _, dN = construction.child_values(state)

    result = martingale_weights(dN, options)
    result['node'] = node
    if not result['feasible']:
        logger.debug(f"노드 {node} 에서 마팅게일 측도 없음 (여유 {result['margin']})")
    return result


def quadratic_variation_diagnostic(spec, control, path, u, t, corridor=None):
    """
    (u, t] 구간의 실현 이차변동 진단

    Returns:
        dict: qv_rate (sum dN dN' / (t-u)), z_rate ((Z_t - Z_u)/(t-u), Z = X X' - Y), target (상수 목표일 때)
    """
    if not 0.0 <= u < t <= 1.0:
        raise ConfigurationError(f"구간이 잘못되었습니다: ({u}, {t}]")

    processes = build_A_process(spec, control, path, corridor)
    start, end = grid_index(spec.n, u), grid_index(spec.n, t)
    if end > processes.depth:
        raise InvalidNodeError(f"경로 길이 {processes.depth} 가 [n t]={end} 보다 짧습니다.")

    dN = processes.increments()[start:end]
    qv = dN.T @ dN / (t - u)

    X = processes.X
    dN_all = processes.increments()
    # Y_k = sum_m (X_{m-1} dN_m' + dN_m X_{m-1}')
    terms = X[:-1, :, None] * dN_all[:, None, :]
    Y = np.concatenate([np.zeros((1,) + terms.shape[1:]), np.cumsum(terms + terms.transpose(0, 2, 1), axis=0)])
    Z = X[:, :, None] * X[:, None, :] - Y
    z_rate = (Z[end] - Z[start]) / (t - u)

    construction = KusuokaConstruction(spec, control, corridor)
    l = construction.interval_of(max(end, 1))
    target = control.targets[l] if control.is_constant(l) else None
    return {
        'qv_rate': qv,
        'z_rate': z_rate,
        'target': None if target is None else np.asarray(target)
    }
