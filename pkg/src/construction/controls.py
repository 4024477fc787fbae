"""
구간별 변동성 제어 모듈

구간 (T_l, T_{l+1}] 마다 분산 목표 a_l^2 in Gamma 를 상수 행렬로 주거나,
더 이른 표본 시각의 N 값에 대한 조회표 (다중선형 보간) 로 준다.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from src.corridor.volatility_corridor import NotInGammaError, check_assumption21, psi
from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-6


class InvalidControlError(ConfigurationError):
    """
    제어가 유효하지 않을 때 발생 (구간, 목표의 Gamma 소속, 양정치성)
    """


def grid_index(n, t):
    """
    [n t] (부동소수 반올림 보정)
    """
    return int(math.floor(n * t + 1e-9))


@dataclass(eq=False)
class FeedbackRule:
    """
    표본 N 값 -> 분산 목표 조회표

    inputs: (시각 t, 자산 번호) 쌍 목록, 각 쌍이 조회표의 한 축
    values: (*축 길이, d, d)
    """
    inputs: list
    axes: list
    values: np.ndarray
    _interpolator: object = field(init=False, repr=False)

    def __post_init__(self):
        self.inputs = [(float(t), int(asset)) for t, asset in self.inputs]
        self.axes = [np.asarray(axis, dtype=float) for axis in self.axes]
        self.values = np.asarray(self.values, dtype=float)

        if len(self.inputs) != len(self.axes) or not self.inputs:
            raise InvalidControlError("조회표 입력 수와 축 수가 다르거나 비어 있습니다.")
        shape = tuple(len(axis) for axis in self.axes)
        if self.values.shape[:len(shape)] != shape or self.values.ndim != len(shape) + 2:
            raise InvalidControlError(f"조회표 값 크기가 잘못되었습니다: {self.values.shape}")

        d = self.values.shape[-1]
        self._interpolator = RegularGridInterpolator(
            self.axes, self.values.reshape(shape + (d * d,)), method='linear'
        )

    @property
    def d(self):
        return self.values.shape[-1]

    @property
    def last_sample_time(self):
        return max(t for t, _ in self.inputs)

    def table_entries(self):
        """
        조회표의 모든 격자 행렬
        """
        return self.values.reshape(-1, self.d, self.d)

    def evaluate(self, history, n):
        """
        분산 목표 계산

        Args:
            history (np.ndarray): N_0..N_k ((k+1) x d)
            n (int): 기간 수

        Returns:
            np.ndarray: d x d 대칭 행렬
        """
        point = []
        for (t, asset), axis in zip(self.inputs, self.axes):
            index = grid_index(n, t)
            if index >= len(history):
                raise InvalidControlError(f"표본 시각 {t} 의 N 이 아직 정해지지 않았습니다.")
            point.append(np.clip(history[index][asset], axis[0], axis[-1]))

        a = self._interpolator(np.array(point)[None, :])[0].reshape(self.d, self.d)
        return 0.5 * (a + a.T)


@dataclass(eq=False)
class PiecewiseVolControl:
    """
    0 = T_0 < ... < T_{L+1} = 1 과 구간별 분산 목표 (행렬 또는 FeedbackRule)
    """
    breakpoints: list
    targets: list
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        self.breakpoints = [float(t) for t in self.breakpoints]
        self.targets = [
            target if isinstance(target, FeedbackRule) else np.asarray(target, dtype=float)
            for target in self.targets
        ]

        points = self.breakpoints
        if len(points) < 2 or points[0] != 0.0 or points[-1] != 1.0:
            raise InvalidControlError(f"구간 경계는 0 에서 시작해 1 로 끝나야 합니다: {points}")
        if any(b <= a for a, b in zip(points, points[1:])):
            raise InvalidControlError(f"구간 경계가 증가하지 않습니다: {points}")
        if len(self.targets) != len(points) - 1:
            raise InvalidControlError(f"목표 수 {len(self.targets)} 와 구간 수 {len(points) - 1} 가 다릅니다.")
        if isinstance(self.targets[0], FeedbackRule):
            raise InvalidControlError("첫 구간의 목표는 상수여야 합니다.")
        for l, target in enumerate(self.targets):
            if isinstance(target, FeedbackRule) and target.last_sample_time > points[l] + 1e-12:
                raise InvalidControlError(f"구간 {l} 의 표본 시각이 T_{l}={points[l]} 이후입니다.")

    @classmethod
    def constant(cls, target, epsilon=DEFAULT_EPSILON):
        """
        [0, 1] 전체에 하나의 분산 목표
        """
        return cls([0.0, 1.0], [target], epsilon)

    @property
    def intervals(self):
        return len(self.targets)

    def is_constant(self, l):
        return not isinstance(self.targets[l], FeedbackRule)

    def validate(self, corridor, check_assumption=True):
        """
        모든 목표 (조회표는 격자 행렬) 가 Gamma 에 속하고 a - eps I 가 양정치인지 검사

        Args:
            corridor (VolatilityCorridor): 회랑
            check_assumption (bool): 가정 검사 실패 시 경고할지 여부
        """
        for l, target in enumerate(self.targets):
            matrices = target.table_entries() if isinstance(target, FeedbackRule) else [target]
            for a in matrices:
                self._check_target(corridor, l, a)

        if check_assumption:
            result = check_assumption21(corridor, grid_per_axis=3)
            if not result['passes']:
                logger.warning(
                    f"회랑이 가정을 위반합니다 (값 {result['worst_value']:.4f}), 노드별 마팅게일 측도가 없을 수 있습니다."
                )

    def _check_target(self, corridor, l, a):
        a = np.asarray(a, dtype=float)
        if a.shape != (corridor.d, corridor.d):
            raise InvalidControlError(f"구간 {l} 목표 크기가 잘못되었습니다: {a.shape}")
        if np.max(np.abs(a - a.T)) > 1e-12 * (1.0 + np.max(np.abs(a))):
            raise InvalidControlError(f"구간 {l} 목표가 대칭이 아닙니다.")
        if np.linalg.eigvalsh(0.5 * (a + a.T)).min() <= self.epsilon:
            raise InvalidControlError(f"구간 {l} 목표가 eps={self.epsilon} 만큼 양정치가 아닙니다.")
        try:
            psi(corridor, a)
        except NotInGammaError as e:
            raise InvalidControlError(f"구간 {l} 목표가 Gamma 밖에 있습니다: {a.tolist()}") from e

    def target(self, l, history, n):
        """
        구간 l 의 분산 목표 (조회표면 N 이력으로 계산)
        """
        target = self.targets[l]
        if isinstance(target, FeedbackRule):
            return target.evaluate(history, n)
        return target

    def describe(self):
        return {
            'breakpoints': self.breakpoints,
            'targets': [
                'feedback' if isinstance(t, FeedbackRule) else t.tolist() for t in self.targets
            ],
            'epsilon': self.epsilon
        }
