"""
극한 가격의 닫힌 형식 (금리 0, 만기 1, nu 는 [0,1] 구간 전체 변동성)
"""

import logging
import math

import numpy as np
from scipy.stats import norm

from src.corridor.volatility_corridor import inf_linear_over_gamma, sup_linear_over_gamma
from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

EXCHANGE_WEIGHTS = np.array([[1.0, -1.0], [-1.0, 1.0]])


def black_scholes_call(s, K, nu):
    """
    C(s, K, nu) = s N(ln(s/K)/nu + nu/2) - K N(ln(s/K)/nu - nu/2)

    Args:
        s (float): 현재 가격 (> 0)
        K (float): 행사가 (> 0)
        nu (float): 전체 변동성 (>= 0)

    Returns:
        float: 콜 가격, nu = 0 이면 (s-K)^+
    """
    if s <= 0 or K <= 0:
        raise ConfigurationError(f"가격과 행사가는 양수여야 합니다: s={s}, K={K}")
    if nu < 0:
        raise ConfigurationError(f"변동성은 0 이상이어야 합니다: {nu}")
    if nu == 0:
        return max(s - K, 0.0)

    d1 = (math.log(s) - math.log(K)) / nu + nu / 2.0
    return float(s * norm.cdf(d1) - K * norm.cdf(d1 - nu))


def margrabe_price(s1, s2, nu):
    """
    교환 옵션 (S^1 - S^2)^+ 가격 = C(s1, s2, nu)
    """
    return black_scholes_call(s1, s2, nu)


def margrabe_limit_volatility(corr):
    """
    sup_{a in Gamma} sqrt(a11 + a22 - a12 - a21)
    """
    if corr.d != 2:
        raise ConfigurationError(f"교환 옵션 극한은 d=2 에서만 정의됩니다 (d={corr.d})")
    value = sup_linear_over_gamma(corr, EXCHANGE_WEIGHTS)['value']
    return math.sqrt(max(value, 0.0))


def margrabe_limit_price(corr, s0):
    """
    교환 옵션의 극한 초과헤지 가격

    Args:
        corr (VolatilityCorridor): d=2 회랑
        s0 (array-like): 초기 가격 (s1, s2)

    Returns:
        float: C(s1, s2, sup sqrt(a11 + a22 - a12 - a21))
    """
    s0 = np.asarray(s0, dtype=float)
    nu = margrabe_limit_volatility(corr)
    price = margrabe_price(float(s0[0]), float(s0[1]), nu)
    logger.debug(f"Margrabe 극한: nu*={nu:.10f}, 가격={price:.10f}")
    return price


def kusuoka_band_d1(corr):
    """
    d=1 회랑의 변동성 구간 [sigma^2 - |sigma|(k+ + k-), sigma^2 + |sigma|(k+ + k-)] (0 에서 절단) 의 제곱근

    Returns:
        dict: nu_min, nu_max
    """
    if corr.d != 1:
        raise ConfigurationError(f"kusuoka_band_d1 은 d=1 전용입니다 (d={corr.d})")

    unit = np.ones((1, 1))
    upper = sup_linear_over_gamma(corr, unit)['value']
    lower = inf_linear_over_gamma(corr, unit)['value']
    return {
        'nu_min': math.sqrt(max(lower, 0.0)),
        'nu_max': math.sqrt(max(upper, 0.0))
    }
