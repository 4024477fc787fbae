"""
n 기간 시장 모델 모듈

자산 가격 S^{n,i}_k = s_i prod_{m<=k} (1 + n^{-1/2} <sigma_i, xi_m>) 의 사건 트리,
거래비용 밴드, 경로 보간 연산자를 다룬다.
트리 노드는 PathIndex (1 부터 시작하는 분기 라벨의 튜플) 로 암묵적으로 주소 지정한다.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from src.market.basis import SimplexBasis, build_simplex_basis
from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

SIMPLEX = 'simplex'
PRODUCT_CRR = 'product_crr'
DRIVERS = (SIMPLEX, PRODUCT_CRR)


class InvalidMarketError(ConfigurationError):
    """
    MarketSpec 불변식 위반
    """


class LeafNodeError(ValueError):
    """
    만기(깊이 n) 노드에서 자식 노드를 요청했을 때 발생
    """


class InvalidNodeError(ValueError):
    """
    분기 라벨 또는 깊이가 범위를 벗어났을 때 발생
    """


@dataclass(frozen=True, eq=False)
class MarketSpec:
    """
    이산 시장 하나의 완전한 기술

    kappa_plus / kappa_minus 는 스케일링 전 계수이며, 한 기간의 실제 비용은 kappa / sqrt(n) 이다.
    """
    d: int
    n: int
    sigma: np.ndarray
    s0: np.ndarray
    kappa_plus: np.ndarray
    kappa_minus: np.ndarray
    driver: str = SIMPLEX
    basis: Optional[SimplexBasis] = None
    _factors: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = self.d
        if not isinstance(d, (int, np.integer)) or d < 1:
            raise InvalidMarketError(f"d 는 1 이상의 정수여야 합니다: {d}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise InvalidMarketError(f"n 은 1 이상의 정수여야 합니다: {self.n}")
        if self.driver not in DRIVERS:
            raise InvalidMarketError(f"알 수 없는 구동 방식: {self.driver}")

        sigma = _as_readonly(np.asarray(self.sigma, dtype=float).reshape(d, d))
        s0 = _as_readonly(np.asarray(self.s0, dtype=float).reshape(d))
        kappa_plus = _as_readonly(np.asarray(self.kappa_plus, dtype=float).reshape(d))
        kappa_minus = _as_readonly(np.asarray(self.kappa_minus, dtype=float).reshape(d))

        if not np.all(np.isfinite(sigma)) or np.linalg.svd(sigma, compute_uv=False).min() <= 1e-10:
            raise InvalidMarketError("변동성 행렬 sigma 가 가역이 아닙니다.")
        if np.any(s0 <= 0):
            raise InvalidMarketError(f"초기 가격은 양수여야 합니다: {s0}")
        if np.any(kappa_plus < 0) or np.any(kappa_minus < 0):
            raise InvalidMarketError("거래비용 계수는 0 이상이어야 합니다.")

        basis = self.basis
        if self.driver == SIMPLEX:
            if basis is None:
                basis = build_simplex_basis(d)
            if basis.d != d:
                raise InvalidMarketError(f"기저 차원 {basis.d} 과 d={d} 가 다릅니다.")
            branches = basis.vertices
        else:
            if not np.allclose(sigma, np.eye(d)) or np.any(kappa_plus > 0) or np.any(kappa_minus > 0):
                raise InvalidMarketError("ProductCRR 구동은 sigma = I, kappa = 0 에서만 허용됩니다.")
            basis = None
            branches = _crr_branches(d)

        # <sigma_i, xi> / sqrt(n), 행: 분기, 열: 자산
        moves = branches @ sigma.T / math.sqrt(self.n)
        if np.max(np.abs(moves)) > 1.0 + 1e-12:
            raise InvalidMarketError(
                f"한 기간 가격 변화율이 -100% 를 넘습니다 (max |<sigma_i, xi>|/sqrt(n) = {np.max(np.abs(moves)):.4f})"
            )

        object.__setattr__(self, 'sigma', sigma)
        object.__setattr__(self, 's0', s0)
        object.__setattr__(self, 'kappa_plus', kappa_plus)
        object.__setattr__(self, 'kappa_minus', kappa_minus)
        object.__setattr__(self, 'basis', basis)
        object.__setattr__(self, '_factors', _as_readonly(1.0 + moves))

    @property
    def branching(self):
        """
        한 노드의 자식 수 m
        """
        return self.d + 1 if self.driver == SIMPLEX else 2 ** self.d

    @property
    def band_lower(self):
        """
        1 - kappa^- / sqrt(n)
        """
        return 1.0 - self.kappa_minus / math.sqrt(self.n)

    @property
    def band_upper(self):
        """
        1 + kappa^+ / sqrt(n)
        """
        return 1.0 + self.kappa_plus / math.sqrt(self.n)

    def with_n(self, n):
        return replace(self, n=n)

    def with_kappa(self, kappa_plus, kappa_minus):
        return replace(self, kappa_plus=kappa_plus, kappa_minus=kappa_minus)

    def describe(self):
        """
        JSON 직렬화용 요약
        """
        return {
            'd': int(self.d),
            'n': int(self.n),
            'sigma': self.sigma.tolist(),
            's0': self.s0.tolist(),
            'kappa_plus': self.kappa_plus.tolist(),
            'kappa_minus': self.kappa_minus.tolist(),
            'driver': self.driver
        }


def _as_readonly(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


def _crr_branches(d):
    # {+1,-1}^d, 첫 좌표가 가장 느리게 변하는 사전식 순서
    grid = np.array(np.meshgrid(*([[1.0, -1.0]] * d), indexing='ij'))
    return grid.reshape(d, -1).T


def branch_vectors(spec):
    """
    구동 변수 xi 의 값들 (m x d)
    """
    if spec.driver == SIMPLEX:
        return spec.basis.vertices
    return _crr_branches(spec.d)


def step_factors(spec):
    """
    한 기간 가격 배율 1 + n^{-1/2} <sigma_i, xi> (m x d)
    """
    return spec._factors


def _check_node(spec, node):
    node = tuple(int(b) for b in node)
    if len(node) > spec.n:
        raise InvalidNodeError(f"노드 깊이 {len(node)} 가 n={spec.n} 을 넘습니다.")
    m = spec.branching
    for b in node:
        if b < 1 or b > m:
            raise InvalidNodeError(f"분기 라벨 {b} 가 범위 1..{m} 밖입니다.")
    return node


def children(spec, node):
    """
    자식 노드 목록

    Args:
        spec (MarketSpec): 시장
        node (tuple): 노드 (분기 라벨 튜플)

    Returns:
        list: 각 분기 라벨을 한 번씩 덧붙인 m 개의 노드
    """
    node = _check_node(spec, node)
    if len(node) >= spec.n:
        raise LeafNodeError(f"깊이 {len(node)} 노드는 만기 노드입니다.")
    return [node + (j,) for j in range(1, spec.branching + 1)]


def asset_prices(spec, node):
    """
    노드의 자산 가격 벡터

    Args:
        spec (MarketSpec): 시장
        node (tuple): 노드

    Returns:
        np.ndarray: S_k (길이 d)
    """
    node = _check_node(spec, node)
    prices = spec.s0.copy()
    for b in node:
        prices = prices * spec._factors[b - 1]
    return prices


def path_prices(spec, node):
    """
    루트부터 노드까지의 가격 경로 ((k+1) x d)
    """
    node = _check_node(spec, node)
    prices = [spec.s0.copy()]
    for b in node:
        prices.append(prices[-1] * spec._factors[b - 1])
    return np.array(prices)


def interpolate_path(spec, leaf, t):
    """
    보간 연산자 W_n: ([nt]+1-nt) y_[nt] + (nt-[nt]) y_[nt]+1

    Args:
        spec (MarketSpec): 시장
        leaf (tuple): 깊이 n 노드
        t (float): [0, 1] 의 시각

    Returns:
        np.ndarray: 보간된 가격 (길이 d)
    """
    leaf = _check_node(spec, leaf)
    if len(leaf) != spec.n:
        raise InvalidNodeError(f"만기 노드가 아닙니다 (깊이 {len(leaf)}, n={spec.n}).")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t 는 [0, 1] 범위여야 합니다: {t}")

    y = path_prices(spec, leaf)
    nt = spec.n * t
    k = int(math.floor(nt))
    if k >= spec.n:
        return y[spec.n]
    frac = nt - k
    return (1.0 - frac) * y[k] + frac * y[k + 1]


def evaluate_payoff(payoff, spec, leaf):
    """
    F(W_n(S^(n))) 를 만기 노드에서 평가

    Args:
        payoff (Payoff): 수익 함수
        spec (MarketSpec): 시장
        leaf (tuple): 깊이 n 노드

    Returns:
        float: 지급액
    """
    leaf = _check_node(spec, leaf)
    if len(leaf) != spec.n:
        raise InvalidNodeError(f"만기 노드가 아닙니다 (깊이 {len(leaf)}, n={spec.n}).")
    return float(payoff.evaluate_paths(path_prices(spec, leaf)[None, :, :])[0])


def node_count(spec):
    """
    트리 전체 노드 수 sum_{k=0}^n m^k
    """
    m = spec.branching
    return sum(m ** k for k in range(spec.n + 1))


def level_offsets(spec):
    """
    깊이별 전역 노드 번호 시작점 (사전식 순서)
    """
    m = spec.branching
    offsets = [0]
    for k in range(spec.n):
        offsets.append(offsets[-1] + m ** k)
    return offsets


def level_prices(spec):
    """
    깊이별 전체 노드 가격

    Returns:
        list: k 번째 원소는 (m^k x d) 배열, 행 순서는 사전식 노드 순서
    """
    levels = [spec.s0[None, :].copy()]
    for _ in range(spec.n):
        # 부모 p 의 자식 j 는 p*m + j 번째 행
        levels.append((levels[-1][:, None, :] * spec._factors[None, :, :]).reshape(-1, spec.d))
    return levels


def leaf_paths(spec, levels=None):
    """
    모든 만기 경로의 격자 가격 (m^n x (n+1) x d)
    """
    if levels is None:
        levels = level_prices(spec)
    m, n = spec.branching, spec.n
    leaves = np.arange(m ** n)
    paths = np.empty((m ** n, n + 1, spec.d))
    for k in range(n + 1):
        paths[:, k, :] = levels[k][leaves // (m ** (n - k))]
    return paths


def iterate_nodes(spec, depth):
    """
    깊이 depth 의 노드를 사전식으로 생성
    """
    for local in range(spec.branching ** depth):
        yield node_from_local(spec, depth, local)


def node_from_local(spec, depth, local):
    """
    깊이 depth 의 사전식 번호를 PathIndex 로 변환
    """
    m = spec.branching
    labels = []
    for _ in range(depth):
        local, b = divmod(local, m)
        labels.append(b + 1)
    return tuple(reversed(labels))


def local_index(branching, node):
    """
    PathIndex 를 깊이 내 사전식 번호로 변환
    """
    local = 0
    for b in node:
        local = local * branching + (b - 1)
    return local


def martingale_residual(spec):
    """
    마찰 없는 모델의 마팅게일 항등식 잔차: 자식 가격의 균등 평균 / 부모 가격 - 1
    """
    return float(np.max(np.abs(spec._factors.mean(axis=0) - 1.0)))


def covariance_residual(spec):
    """
    공분산 항등식 잔차: mean_xi (sigma xi')(sigma xi')' - sigma sigma'
    """
    moves = branch_vectors(spec) @ spec.sigma.T
    covariance = moves.T @ moves / spec.branching
    return float(np.max(np.abs(covariance - spec.sigma @ spec.sigma.T)))


def frictionless_price(spec, payoff):
    """
    균등 측도(완전 모델의 유일한 마팅게일 측도) 아래 E[F_n]

    Args:
        spec (MarketSpec): 시장
        payoff (Payoff): 수익 함수

    Returns:
        float: 기대 지급액
    """
    values = payoff.evaluate_paths(leaf_paths(spec))
    return float(np.mean(values))
