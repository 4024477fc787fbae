"""
Black-Scholes-Barenblatt 방정식 명시적 차분 풀이 (d = 1, 2)

로그 가격 x = ln S 좌표에서
    u_t + sup_{a in Gamma} [ 1/2 sum_ij a_ij u_{x_i x_j} - 1/2 sum_i a_ii u_{x_i} ] = 0,  u(1, x) = F(e^x)
를 만기에서 0 까지 거꾸로 푼다. 목적이 w 에 선형이므로 점별 sup 은 상자 꼭짓점에서 달성되며,
꼭짓점 행렬 표를 한 번 만들어 두고 (양반정치가 아닌 꼭짓점은 PSD 로 사영) 매 스텝 표 위의 최대값을 취한다.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.corridor.volatility_corridor import box_vertices, gamma_from_beta
from src.limit.closed_form import black_scholes_call, kusuoka_band_d1, margrabe_limit_price
from src.market.payoffs import BasketCall, Constant, Exchange
from src.utils.errors import ConfigurationError, NumericalError

logger = logging.getLogger(__name__)

WIDTH_STD = 4.0
MIN_VOLATILITY = 1e-2
DEFAULT_MAX_TIME_STEPS = 200000


class CFLError(NumericalError):
    """
    안정성 조건을 만족하는 시간 스텝 수가 상한을 넘을 때 발생
    """


class NonTerminalPayoffError(ConfigurationError):
    """
    PDE 경로에 경로 의존 지급 함수를 넘겼을 때 발생
    """


@dataclass(frozen=True, eq=False)
class GExpectationProblem:
    """
    회랑, 초기 가격, 만기 지급 함수 (만기 T = 1 고정)
    """
    corridor: object
    s0: np.ndarray
    payoff: object

    def __post_init__(self):
        s0 = np.array(self.s0, dtype=float).reshape(-1)
        if s0.shape[0] != self.corridor.d:
            raise ConfigurationError(f"초기 가격 길이 {s0.shape[0]} 가 d={self.corridor.d} 와 다릅니다.")
        if np.any(s0 <= 0):
            raise ConfigurationError(f"초기 가격은 양수여야 합니다: {s0}")
        if not getattr(self.payoff, 'terminal_only', False):
            raise NonTerminalPayoffError(f"PDE 는 만기 지급 함수만 지원합니다: {self.payoff.describe()}")
        s0.setflags(write=False)
        object.__setattr__(self, 's0', s0)


def project_psd(a):
    """
    대칭 행렬의 음의 고유값을 0 으로 절단
    """
    a = 0.5 * (a + a.T)
    eigenvalues, eigenvectors = np.linalg.eigh(a)
    if eigenvalues.min() >= 0:
        return a
    clipped = np.maximum(eigenvalues, 0.0)
    return (eigenvectors * clipped) @ eigenvectors.T


def gamma_vertex_table(corr):
    """
    Gamma 꼭짓점 행렬 표 (중복 제거, PSD 사영)

    Returns:
        np.ndarray: (V x d x d)
    """
    table = []
    projected = 0
    for w in box_vertices(corr):
        a = gamma_from_beta(corr, corr.basis.vertices.T @ w)
        psd = project_psd(a)
        if not np.allclose(psd, a, atol=1e-14):
            projected += 1
        table.append(psd)

    table = np.unique(np.round(np.array(table), 14), axis=0)
    if projected:
        logger.warning(f"Gamma 꼭짓점 {projected} 개가 양반정치가 아니어서 PSD 로 사영했습니다.")
    return table


def _axes(problem, grid, table, width_std):
    d = problem.corridor.d
    axes = []
    for i in range(d):
        nu = max(math.sqrt(max(float(table[:, i, i].max()), 0.0)), MIN_VOLATILITY)
        half = width_std * nu
        center = math.log(problem.s0[i])
        axes.append(np.linspace(center - half, center + half, grid))
    return axes


def _required_steps(table, steps, spacing):
    rate = sum(float(table[:, i, i].max()) / spacing[i] ** 2 for i in range(len(spacing)))
    return max(steps, int(math.ceil(rate * (1.0 + 1e-9)))) if rate > 0 else steps


def _extrapolate_edges(u, prices, axis):
    """
    경계에서 가격에 선형 (u_xx = u_x) 이 되도록 가장 가까운 두 내부 점에서 외삽
    """
    u = np.moveaxis(u, axis, 0)
    s = prices
    u[0] = u[1] + (u[1] - u[2]) * (s[0] - s[1]) / (s[1] - s[2])
    u[-1] = u[-2] + (u[-2] - u[-3]) * (s[-1] - s[-2]) / (s[-2] - s[-3])
    return np.moveaxis(u, 0, axis)


def bsb_pde_price(problem, grid=200, time_steps=400, max_time_steps=DEFAULT_MAX_TIME_STEPS,
                  width_std=WIDTH_STD, return_surface=False):
    """
    G-기댓값 가격 u(0, ln s0)

    Args:
        problem (GExpectationProblem): 문제
        grid (int): 축당 로그 가격 노드 수 (짝수면 1 을 더해 s0 가 노드가 되게 함)
        time_steps (int): 시간 스텝 수 (안정성 조건에 맞게 자동 증가)
        max_time_steps (int): 자동 증가 상한
        width_std (float): 영역 반폭 (최대 변동성의 배수)
        return_surface (bool): 초기/만기 가치 면도 반환할지 여부

    Returns:
        float 또는 (float, dict): 가격, surface (axes, initial, terminal, time_steps)
    """
    corr = problem.corridor
    d = corr.d
    if d not in (1, 2):
        raise ConfigurationError(f"PDE 는 d = 1, 2 만 지원합니다 (d={d})")
    if grid < 5:
        raise ConfigurationError(f"격자 노드 수가 너무 작습니다: {grid}")
    if grid % 2 == 0:
        grid += 1

    table = gamma_vertex_table(corr)
    axes = _axes(problem, grid, table, width_std)
    spacing = [axis[1] - axis[0] for axis in axes]
    prices = [np.exp(axis) for axis in axes]

    steps = _required_steps(table, time_steps, spacing)
    if steps > max_time_steps:
        logger.error(f"안정성 조건에 필요한 시간 스텝 {steps} 가 상한 {max_time_steps} 를 넘습니다.")
        raise CFLError(f"필요한 시간 스텝 {steps} > 상한 {max_time_steps} (격자 {grid})")
    if steps > time_steps:
        logger.warning(f"안정성 조건을 위해 시간 스텝을 {time_steps} 에서 {steps} 로 늘립니다.")
    dt = 1.0 / steps

    mesh = np.stack(np.meshgrid(*prices, indexing='ij'), axis=-1)
    u = np.asarray(problem.payoff.terminal_value(mesh), dtype=float).reshape((grid,) * d)
    terminal = u.copy()

    # trace(W a) = W11 a11 + W22 a22 + 2 W12 a12 의 계수 표
    if d == 1:
        coefficients = table[:, 0, 0][None, :]
    else:
        coefficients = np.stack([table[:, 0, 0], table[:, 1, 1], 2.0 * table[:, 0, 1]])

    h = spacing
    for _ in range(steps):
        if d == 1:
            u_x = (u[2:] - u[:-2]) / (2 * h[0])
            u_xx = (u[2:] - 2 * u[1:-1] + u[:-2]) / h[0] ** 2
            weights = (0.5 * (u_xx - u_x))[:, None]
            generator = np.max(weights @ coefficients, axis=1)
            u[1:-1] = u[1:-1] + dt * generator
            u = _extrapolate_edges(u, prices[0], 0)
        else:
            center = u[1:-1, 1:-1]
            u_1 = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * h[0])
            u_2 = (u[1:-1, 2:] - u[1:-1, :-2]) / (2 * h[1])
            u_11 = (u[2:, 1:-1] - 2 * center + u[:-2, 1:-1]) / h[0] ** 2
            u_22 = (u[1:-1, 2:] - 2 * center + u[1:-1, :-2]) / h[1] ** 2
            u_12 = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * h[0] * h[1])
            weights = np.stack([0.5 * (u_11 - u_1), 0.5 * (u_22 - u_2), 0.5 * u_12], axis=-1)
            generator = np.max(weights @ coefficients, axis=-1)
            u[1:-1, 1:-1] = center + dt * generator
            u = _extrapolate_edges(u, prices[0], 0)
            u = _extrapolate_edges(u, prices[1], 1)

        if not np.all(np.isfinite(u)):
            raise NumericalError("PDE 해가 발산했습니다.")

    middle = grid // 2
    price = float(u[(middle,) * d])
    logger.debug(f"BSB PDE: d={d}, 격자 {grid}, 시간 스텝 {steps}, 가격 {price:.10f}")

    if return_surface:
        surface = {'axes': axes, 'initial': u, 'terminal': terminal, 'time_steps': steps}
        return price, surface
    return price


def surface_frame(surface):
    """
    가치 면을 긴 형식 DataFrame 으로 변환 (x1[, x2], initial, terminal)
    """
    axes = surface['axes']
    mesh = np.meshgrid(*axes, indexing='ij')
    columns = {f"x{i + 1}": m.ravel() for i, m in enumerate(mesh)}
    columns['initial'] = np.asarray(surface['initial']).ravel()
    columns['terminal'] = np.asarray(surface['terminal']).ravel()
    return pd.DataFrame(columns)


def limit_price(corr, s0, payoff, grid=200, time_steps=400):
    """
    극한 가격 계산 방법 선택

    상수는 그대로, d=1 단일 자산 콜은 BS(nu_max), d=2 교환 옵션은 Margrabe 극한,
    그 외 만기 지급 함수는 PDE 로 계산한다.

    Returns:
        dict: value, method
    """
    s0 = np.asarray(s0, dtype=float).reshape(-1)

    if isinstance(payoff, Constant):
        return {'value': payoff.value, 'method': 'constant'}
    if corr.d == 1 and isinstance(payoff, BasketCall) and payoff.weights[0] > 0:
        nu = kusuoka_band_d1(corr)['nu_max']
        value = float(payoff.weights[0]) * black_scholes_call(s0[0], payoff.strike / payoff.weights[0], nu)
        return {'value': value, 'method': 'black_scholes'}
    if corr.d == 2 and isinstance(payoff, Exchange):
        return {'value': margrabe_limit_price(corr, s0), 'method': 'margrabe'}

    problem = GExpectationProblem(corr, s0, payoff)
    return {'value': bsb_pde_price(problem, grid=grid, time_steps=time_steps), 'method': 'bsb_pde'}
