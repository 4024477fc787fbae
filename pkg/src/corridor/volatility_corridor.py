"""
변동성 회랑 모듈

비용 다면체 B = { beta(w) : 0 <= w_jk <= c_k }, c_k = (kappa+_k + kappa-_k)/(d+1),
beta(w) 의 k 번째 열은 sum_j w_jk v_j' 이고 변동성 집합은 Gamma = { sigma sigma' + sigma beta + beta' sigma' }.
"""

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from src.lp.problem import LinearProgram, LPStatus
from src.lp.simplex import solve_lp
from src.market.basis import SimplexBasis, build_simplex_basis
from src.utils.errors import ConfigurationError, NumericalError

logger = logging.getLogger(__name__)

BOX_TOLERANCE = 1e-12
ASSUMPTION_BUDGET = 10 ** 6
BATCH_SIZE = 20000


class OutsideBoxError(ValueError):
    """
    w 가 상자 [0, c_k] 밖에 있을 때 발생
    """


class NotInGammaError(NumericalError):
    """
    주어진 행렬이 Gamma 에 속하지 않을 때 발생
    """


class NotInBError(NumericalError):
    """
    주어진 beta 가 B 에 속하지 않을 때 발생
    """


class SingularVolatilityError(ConfigurationError):
    """
    sigma 가 특이 행렬일 때 발생
    """


@dataclass(frozen=True, eq=False)
class VolatilityCorridor:
    """
    구동 기저, 변동성 행렬, 비용 계수로 정해지는 회랑
    """
    basis: SimplexBasis
    sigma: np.ndarray
    kappa_plus: np.ndarray
    kappa_minus: np.ndarray

    def __post_init__(self):
        d = self.basis.d
        for name in ('sigma', 'kappa_plus', 'kappa_minus'):
            value = np.array(getattr(self, name), dtype=float)
            value.setflags(write=False)
            object.__setattr__(self, name, value)

        if self.sigma.shape != (d, d):
            raise ConfigurationError(f"sigma 크기가 잘못되었습니다: {self.sigma.shape}")
        if self.kappa_plus.shape != (d,) or self.kappa_minus.shape != (d,):
            raise ConfigurationError("kappa 길이가 d 와 다릅니다.")
        if np.any(self.kappa_plus < 0) or np.any(self.kappa_minus < 0):
            raise ConfigurationError("거래비용 계수는 0 이상이어야 합니다.")

    @property
    def d(self):
        return self.basis.d

    @property
    def box(self):
        """
        w 좌표 상한 c_k (길이 d)
        """
        return (self.kappa_plus + self.kappa_minus) / (self.d + 1)

    def with_kappa(self, kappa_plus, kappa_minus):
        return VolatilityCorridor(self.basis, self.sigma, kappa_plus, kappa_minus)

    def describe(self):
        return {
            'd': self.d,
            'sigma': self.sigma.tolist(),
            'kappa_plus': self.kappa_plus.tolist(),
            'kappa_minus': self.kappa_minus.tolist(),
            'basis': self.basis.vertices.tolist()
        }


def corridor_from_spec(spec):
    """
    MarketSpec 에서 회랑 생성 (심플렉스 구동만 해당)
    """
    if spec.basis is None:
        raise ConfigurationError("ProductCRR 구동 시장에는 회랑이 정의되지 않습니다.")
    return VolatilityCorridor(spec.basis, spec.sigma, spec.kappa_plus, spec.kappa_minus)


def beta_from_w(corr, w):
    """
    상자 좌표 w ((d+1) x d) 를 beta (d x d) 로 변환
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (corr.d + 1, corr.d):
        raise OutsideBoxError(f"w 크기가 잘못되었습니다: {w.shape}")

    upper = corr.box[None, :]
    if np.any(w < -BOX_TOLERANCE) or np.any(w > upper + BOX_TOLERANCE * (1.0 + upper)):
        raise OutsideBoxError("w 가 상자 [0, c_k] 밖에 있습니다.")

    return corr.basis.vertices.T @ w


def gamma_from_beta(corr, beta):
    """
    a = sigma sigma' + sigma beta + beta' sigma' (정확히 대칭화)
    """
    beta = np.asarray(beta, dtype=float)
    sigma = corr.sigma
    a = sigma @ sigma.T + sigma @ beta + beta.T @ sigma.T
    return 0.5 * (a + a.T)


def _coefficients(corr, W):
    # trace(W (sigma beta + beta' sigma')) = sum_jk w_jk K_jk, K = 2 V sigma' W
    return 2.0 * corr.basis.vertices @ corr.sigma.T @ W


def sup_linear_over_gamma(corr, W):
    """
    trace(W a) 의 Gamma 위 최대값

    목적이 각 w_jk 에 선형이므로 계수가 양수인 좌표만 상한 c_k 로 둔다.

    Args:
        corr (VolatilityCorridor): 회랑
        W (array-like): 대칭 가중 행렬 (d x d)

    Returns:
        dict: value, w (최대점), a (최대 행렬)
    """
    W = np.asarray(W, dtype=float)
    W = 0.5 * (W + W.T)
    K = _coefficients(corr, W)
    w = np.where(K > 0, np.broadcast_to(corr.box[None, :], K.shape), 0.0)
    base = float(np.trace(W @ corr.sigma @ corr.sigma.T))
    value = base + float(np.sum(K * w))
    a = gamma_from_beta(corr, corr.basis.vertices.T @ w)
    return {'value': value, 'w': w, 'a': a}


def inf_linear_over_gamma(corr, W):
    """
    trace(W a) 의 Gamma 위 최소값 (= -sup(-W))
    """
    result = sup_linear_over_gamma(corr, -np.asarray(W, dtype=float))
    return {'value': -result['value'], 'w': result['w'], 'a': result['a']}


def _gamma_equations(corr):
    """
    Gamma(w) = a 의 상삼각 성분 방정식 계수 (d(d+1)/2 x (d+1)d), w 는 행 우선으로 펼친다
    """
    d = corr.d
    P = corr.basis.vertices @ corr.sigma.T  # P_jp = (v_j sigma')_p
    rows = []
    pairs = [(p, q) for p in range(d) for q in range(p, d)]
    for p, q in pairs:
        row = np.zeros((d + 1, d))
        row[:, q] += P[:, p]
        row[:, p] += P[:, q]
        rows.append(row.ravel())
    return np.array(rows), pairs


def psi(corr, a, options=None):
    """
    a in Gamma 에 대해 Gamma(beta) = a 인 beta in B 선택

    상자 안에서 sum w 를 최소화하는 실행가능성 LP 로 푼다. 불능이면 a 는 Gamma 밖이다.

    Args:
        corr (VolatilityCorridor): 회랑
        a (array-like): 대칭 행렬 (d x d)
        options (dict, optional): solve_lp 옵션

    Returns:
        np.ndarray: beta (d x d)
    """
    d = corr.d
    a = np.asarray(a, dtype=float)
    if a.shape != (d, d):
        raise ConfigurationError(f"a 크기가 잘못되었습니다: {a.shape}")
    a = 0.5 * (a + a.T)

    equations, pairs = _gamma_equations(corr)
    target = a - corr.sigma @ corr.sigma.T
    rhs = np.array([target[p, q] for p, q in pairs])

    size = (d + 1) * d
    upper = np.repeat(corr.box[None, :], d + 1, axis=0).ravel()
    lp = LinearProgram.from_dense(
        'min', np.ones(size), equations, ['='] * len(pairs), rhs,
        lower=np.zeros(size), upper=upper
    )
    solution = solve_lp(lp, options)

    if solution.status == LPStatus.INFEASIBLE:
        logger.debug(f"Gamma 소속 LP 불능: a={a.tolist()}")
        raise NotInGammaError(f"행렬이 Gamma 에 속하지 않습니다: {a.tolist()}")
    if not solution.is_optimal:
        raise NotInGammaError(f"Gamma 소속 LP 실패: {solution.status.value}")

    w = np.clip(solution.x.reshape(d + 1, d), 0.0, corr.box[None, :])
    beta = corr.basis.vertices.T @ w

    error = float(np.max(np.abs(gamma_from_beta(corr, beta) - a)))
    if error > 1e-7 * (1.0 + float(np.max(np.abs(a)))):
        raise NotInGammaError(f"Gamma 복원 오차가 큽니다: {error:.3e}")

    return beta


def w_from_beta(corr, beta):
    """
    열별 이동 정규화 (min_i w_ik = 0) 로 w 복원

    Returns:
        tuple: (w, t), w_ik = ((v_i beta)_k + t_k)/(d+1), t_k = -min_i (v_i beta)_k
    """
    beta = np.asarray(beta, dtype=float)
    P = corr.basis.vertices @ beta
    t = -P.min(axis=0)
    w = (P + t[None, :]) / (corr.d + 1)
    return w, t


def phi(corr, beta):
    """
    beta in B 에 대해 v_i beta + Phi(beta) in prod_k [-kappa-_k, kappa+_k] 인 Phi

    Args:
        corr (VolatilityCorridor): 회랑
        beta (array-like): d x d

    Returns:
        np.ndarray: Phi (길이 d)
    """
    w, t = w_from_beta(corr, beta)
    upper = corr.box[None, :]
    if np.any(w > upper + 1e-10 * (1.0 + upper)):
        worst = float(np.max(w - upper))
        logger.debug(f"phi: 복원된 w 가 상자를 {worst:.3e} 만큼 벗어남")
        raise NotInBError(f"beta 가 B 에 속하지 않습니다 (상자 초과 {worst:.3e})")
    return t - corr.kappa_minus


def _inverse_transpose_sigma(corr):
    try:
        if np.linalg.svd(corr.sigma, compute_uv=False).min() <= 1e-12:
            raise np.linalg.LinAlgError("singular")
        return np.linalg.inv(corr.sigma.T)
    except np.linalg.LinAlgError as e:
        logger.error("sigma 가 특이 행렬입니다.")
        raise SingularVolatilityError("sigma 가 특이 행렬입니다.") from e


def check_lemma61(corr):
    """
    충분 조건 |x (sigma')^{-1}| < 1/(2 sqrt d), x 는 prod_k [-(kappa-_k+kappa+_k), kappa-_k+kappa+_k] 의 꼭짓점

    Returns:
        dict: passes, worst_norm, bound, worst_vertex
    """
    inverse = _inverse_transpose_sigma(corr)
    width = corr.kappa_plus + corr.kappa_minus
    worst_norm = 0.0
    worst_vertex = np.zeros(corr.d)
    for signs in itertools.product((-1.0, 1.0), repeat=corr.d):
        x = np.array(signs) * width
        norm = float(np.linalg.norm(x @ inverse))
        if norm > worst_norm:
            worst_norm, worst_vertex = norm, x

    bound = 1.0 / (2.0 * math.sqrt(corr.d))
    return {
        'passes': worst_norm < bound,
        'worst_norm': worst_norm,
        'bound': bound,
        'worst_vertex': worst_vertex.tolist()
    }


def _active_coordinates(corr):
    # 폭이 0 인 좌표는 0 으로 고정
    return [(j, k) for j in range(corr.d + 1) for k in range(corr.d) if corr.box[k] > 0]


def box_vertices(corr):
    """
    상자의 모든 꼭짓점 w (폭 0 좌표는 하나로 합침)
    """
    active = _active_coordinates(corr)
    for corner in itertools.product((0.0, 1.0), repeat=len(active)):
        w = np.zeros((corr.d + 1, corr.d))
        for (j, k), on in zip(active, corner):
            w[j, k] = on * corr.box[k]
        yield w


def _assumption_values(corr, w_batch):
    """
    w 묶음 (B x (d+1) x d) 에 대해 min_{i,j} v_i beta (sigma'+beta)^{-1} v_j' 와 그 위치

    sigma'+beta 가 특이하면 값은 -inf.
    """
    V = corr.basis.vertices
    betas = np.einsum('jl,bjk->blk', V, w_batch)
    matrices = corr.sigma.T[None, :, :] + betas
    singular_values = np.linalg.svd(matrices, compute_uv=False)
    singular = singular_values[:, -1] <= 1e-12 * np.maximum(1.0, singular_values[:, 0])

    size = w_batch.shape[0]
    values = np.full((size, V.shape[0], V.shape[0]), -np.inf)
    ok = ~singular
    if np.any(ok):
        right = np.broadcast_to(V.T, (int(ok.sum()),) + V.T.shape)
        solved = np.linalg.solve(matrices[ok], right)  # (sigma'+beta)^{-1} V'
        values[ok] = np.einsum('il,blk,bkj->bij', V, betas[ok], solved)

    flat = values.reshape(size, -1)
    position = np.argmin(flat, axis=1)
    return flat[np.arange(size), position], position, betas


def _grid_batches(corr, grid_per_axis, budget, rng):
    active = _active_coordinates(corr)
    count = len(active)
    if count == 0:
        return
    total = grid_per_axis ** count
    levels = np.linspace(0.0, 1.0, grid_per_axis)

    if total <= budget:
        indices = np.arange(total)
        for start in range(0, total, BATCH_SIZE):
            chunk = indices[start:start + BATCH_SIZE]
            digits = (chunk[:, None] // grid_per_axis ** np.arange(count)[None, :]) % grid_per_axis
            yield _fill(corr, active, levels[digits])
    else:
        logger.info(f"격자 점 {total} 개가 한도 {budget} 를 넘어 무작위 내부 점 {budget} 개로 대체합니다.")
        for start in range(0, budget, BATCH_SIZE):
            size = min(BATCH_SIZE, budget - start)
            yield _fill(corr, active, rng.random((size, count)))


def _fill(corr, active, fractions):
    w = np.zeros((fractions.shape[0], corr.d + 1, corr.d))
    for column, (j, k) in enumerate(active):
        w[:, j, k] = fractions[:, column] * corr.box[k]
    return w


def check_assumption21(corr, grid_per_axis=5, seed=0, budget=ASSUMPTION_BUDGET):
    """
    조건 v_i beta (sigma'+beta)^{-1} v_j' > -1 (모든 i, j) 와 sigma'+beta 가역성 검사

    상자 꼭짓점을 모두 (한도 초과 시 무작위 일부) 평가하고, 축당 grid_per_axis 점의 균등 격자
    (한도 초과 시 고정 시드 무작위 내부 점) 를 평가한다. 위반은 확정적이고 통과는 경험적이다.

    Args:
        corr (VolatilityCorridor): 회랑
        grid_per_axis (int): 축당 격자 점 수 (2 이상)
        seed (int): 무작위 점 시드
        budget (int): 평가 점 수 한도

    Returns:
        dict: passes, heuristic, worst_value, witness (가장 음수인 위반), vertices_checked, grid_points
    """
    if grid_per_axis < 2:
        raise ConfigurationError(f"grid_per_axis 는 2 이상이어야 합니다: {grid_per_axis}")

    rng = np.random.default_rng(seed)
    active = _active_coordinates(corr)

    worst = {'value': math.inf}

    def scan(w_batch):
        values, positions, betas = _assumption_values(corr, w_batch)
        index = int(np.argmin(values))
        if values[index] < worst['value']:
            i, j = divmod(int(positions[index]), corr.d + 1)
            worst.update({
                'value': float(values[index]),
                'i': i + 1,
                'j': j + 1,
                'beta': betas[index].tolist(),
                'w': w_batch[index].tolist()
            })
        return w_batch.shape[0]

    vertex_count = 0
    if 2 ** len(active) <= budget:
        vertices = list(box_vertices(corr))
        for start in range(0, len(vertices), BATCH_SIZE):
            vertex_count += scan(np.array(vertices[start:start + BATCH_SIZE]))
    else:
        corners = rng.integers(0, 2, size=(budget, len(active))).astype(float)
        vertex_count += scan(_fill(corr, active, corners))

    grid_count = 0
    for batch in _grid_batches(corr, grid_per_axis, budget, rng):
        grid_count += scan(batch)

    passes = worst['value'] > -1.0
    witness = None if passes else {k: v for k, v in worst.items()}
    result = {
        'passes': passes,
        'heuristic': passes,
        'worst_value': worst['value'],
        'witness': witness,
        'vertices_checked': vertex_count,
        'grid_points': grid_count
    }
    if passes:
        logger.debug(f"가정 검사 통과 (경험적): 최소값 {worst['value']:.6f}")
    else:
        logger.info(f"가정 위반: v_{worst['i']} beta (sigma'+beta)^-1 v_{worst['j']}' = {worst['value']:.6f}")
    return result


def default_corridor(d, sigma=None, kappa_plus=None, kappa_minus=None):
    """
    표준 기저로 회랑 생성
    """
    sigma = np.eye(d) if sigma is None else sigma
    kappa_plus = np.zeros(d) if kappa_plus is None else kappa_plus
    kappa_minus = np.zeros(d) if kappa_minus is None else kappa_minus
    return VolatilityCorridor(build_simplex_basis(d), sigma, kappa_plus, kappa_minus)
