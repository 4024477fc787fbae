"""
지급 함수 모듈

모든 지급 함수는 보간 경로의 격자 표본 (..., n+1, d) 배열에 벡터화되어 적용된다.
선형 보간 경로의 극값은 격자점에서 달성되고 적분은 사다리꼴 합과 같으므로 격자 표본으로 충분하다.
자산 번호는 0 부터 시작한다.
"""

import logging

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)


class ExtrapolationError(ValueError):
    """
    TerminalFunction 격자 밖에서 평가를 요청했을 때 발생
    """


class Payoff:
    """
    지급 함수 기본 클래스
    """
    kind = 'payoff'
    terminal_only = True

    def evaluate_paths(self, paths):
        """
        경로 배열에 지급 함수 적용

        Args:
            paths (np.ndarray): (..., n+1, d) 격자 가격

        Returns:
            np.ndarray: (...) 지급액
        """
        paths = np.asarray(paths, dtype=float)
        return self.terminal_value(paths[..., -1, :])

    def terminal_value(self, prices):
        """
        만기 가격 (..., d) 에 대한 지급액
        """
        raise NotImplementedError

    def describe(self):
        return {'kind': self.kind}


class Constant(Payoff):
    """
    F = c
    """
    kind = 'constant'

    def __init__(self, value):
        self.value = float(value)

    def terminal_value(self, prices):
        prices = np.asarray(prices, dtype=float)
        return np.full(prices.shape[:-1], self.value)

    def describe(self):
        return {'kind': self.kind, 'value': self.value}


class BasketCall(Payoff):
    """
    (<w, S_T> - K)^+
    """
    kind = 'basket_call'

    def __init__(self, weights, strike):
        self.weights = np.asarray(weights, dtype=float)
        self.strike = float(strike)

    def terminal_value(self, prices):
        prices = np.asarray(prices, dtype=float)
        if prices.shape[-1] != self.weights.shape[0]:
            raise ConfigurationError(
                f"가중치 길이 {self.weights.shape[0]} 와 자산 수 {prices.shape[-1]} 가 다릅니다."
            )
        return np.maximum(prices @ self.weights - self.strike, 0.0)

    def describe(self):
        return {'kind': self.kind, 'weights': self.weights.tolist(), 'strike': self.strike}


class Exchange(Payoff):
    """
    (S^1_T - S^2_T)^+
    """
    kind = 'exchange'

    def terminal_value(self, prices):
        prices = np.asarray(prices, dtype=float)
        if prices.shape[-1] < 2:
            raise ConfigurationError("교환 옵션은 자산이 2 개 이상 필요합니다.")
        return np.maximum(prices[..., 0] - prices[..., 1], 0.0)


class MinOfAssets(Payoff):
    """
    min_i S^i_T
    """
    kind = 'min'

    def terminal_value(self, prices):
        return np.min(np.asarray(prices, dtype=float), axis=-1)


class TerminalFunction(Payoff):
    """
    격자 위에 표본화된 만기 함수 f(S^{a_1}_T, ..., S^{a_r}_T), 다중선형 보간
    """
    kind = 'terminal_function'

    def __init__(self, assets, axes, values):
        self.assets = tuple(int(a) for a in assets)
        self.axes = tuple(np.asarray(axis, dtype=float) for axis in axes)
        self.values = np.asarray(values, dtype=float)

        if len(self.axes) != len(self.assets):
            raise ConfigurationError("격자 축 수와 자산 수가 다릅니다.")
        if self.values.shape != tuple(len(axis) for axis in self.axes):
            raise ConfigurationError(f"격자 값 크기가 잘못되었습니다: {self.values.shape}")

        self._interpolator = RegularGridInterpolator(self.axes, self.values, method='linear', bounds_error=True)

    @classmethod
    def from_function(cls, asset, func, lower, upper, points=2001):
        """
        1 변수 함수를 균등 격자로 표본화
        """
        axis = np.linspace(lower, upper, points)
        return cls([asset], [axis], func(axis))

    def terminal_value(self, prices):
        prices = np.asarray(prices, dtype=float)
        points = prices[..., list(self.assets)]
        try:
            return self._interpolator(points.reshape(-1, len(self.assets))).reshape(points.shape[:-1])
        except ValueError as e:
            logger.error(f"만기 함수 격자 밖 평가: {e}")
            raise ExtrapolationError(f"만기 가격이 격자 범위를 벗어났습니다: {e}") from e

    def describe(self):
        return {
            'kind': self.kind,
            'assets': list(self.assets),
            'bounds': [[float(axis[0]), float(axis[-1])] for axis in self.axes]
        }


class LookbackMax(Payoff):
    """
    max_t S^a_t (보간 경로의 최대값 = 격자 최대값)
    """
    kind = 'lookback_max'
    terminal_only = False

    def __init__(self, asset):
        self.asset = int(asset)

    def evaluate_paths(self, paths):
        paths = np.asarray(paths, dtype=float)
        return np.max(paths[..., :, self.asset], axis=-1)

    def terminal_value(self, prices):
        raise ConfigurationError("룩백 지급 함수는 만기 가격만으로 평가할 수 없습니다.")

    def describe(self):
        return {'kind': self.kind, 'asset': self.asset}


class AsianCall(Payoff):
    """
    (int_0^1 S^a_t dt - K)^+ (보간 경로의 적분 = 사다리꼴 합)
    """
    kind = 'asian_call'
    terminal_only = False

    def __init__(self, asset, strike):
        self.asset = int(asset)
        self.strike = float(strike)

    def evaluate_paths(self, paths):
        paths = np.asarray(paths, dtype=float)
        series = paths[..., :, self.asset]
        steps = series.shape[-1] - 1
        if steps == 0:
            average = series[..., 0]
        else:
            average = (series[..., 1:].sum(axis=-1) + series[..., :-1].sum(axis=-1)) / (2.0 * steps)
        return np.maximum(average - self.strike, 0.0)

    def terminal_value(self, prices):
        raise ConfigurationError("아시안 지급 함수는 만기 가격만으로 평가할 수 없습니다.")

    def describe(self):
        return {'kind': self.kind, 'asset': self.asset, 'strike': self.strike}


PAYOFF_KINDS = {
    'constant': Constant,
    'basket_call': BasketCall,
    'call': BasketCall,
    'exchange': Exchange,
    'min': MinOfAssets,
    'terminal_function': TerminalFunction,
    'lookback_max': LookbackMax,
    'asian_call': AsianCall,
}
