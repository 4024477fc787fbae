"""
정규 심플렉스 구동 벡터 모듈

완전시장 기준 모델의 구동 벡터 v_1, ..., v_{d+1} (정규 심플렉스의 꼭짓점)을 만들고 검증한다.
"""

import json
import logging
from dataclasses import dataclass

import numpy as np

from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

GRAM_TOLERANCE = 1e-12


class InvalidDimensionError(ConfigurationError):
    """
    자산 수 d 가 유효하지 않을 때 발생
    """


@dataclass(frozen=True, eq=False)
class SimplexBasis:
    """
    구동 벡터 집합

    vertices 는 (d+1) x d 행렬이며, 각 행이 하나의 꼭짓점 v_j 이다.
    <v_i, v_i> = d, <v_i, v_j> = -1 (i != j), sum_j v_j = 0.
    """
    d: int
    vertices: np.ndarray

    def __post_init__(self):
        vertices = np.array(self.vertices, dtype=float)
        if vertices.shape != (self.d + 1, self.d):
            raise InvalidDimensionError(
                f"꼭짓점 행렬 크기가 잘못되었습니다: {vertices.shape} (기대값 {(self.d + 1, self.d)})"
            )
        vertices.setflags(write=False)
        object.__setattr__(self, 'vertices', vertices)

    @property
    def size(self):
        return self.d + 1

    def gram(self):
        """
        (d+1) x (d+1) 그람 행렬
        """
        return self.vertices @ self.vertices.T

    def rotated(self, rotation):
        """
        직교 행렬로 꼭짓점을 회전 (v_j -> v_j Q)

        Args:
            rotation (array-like): d x d 직교 행렬

        Returns:
            SimplexBasis: 회전된 기저
        """
        rotation = np.asarray(rotation, dtype=float)
        if rotation.shape != (self.d, self.d):
            raise InvalidDimensionError(f"회전 행렬 크기가 잘못되었습니다: {rotation.shape}")

        if np.max(np.abs(rotation.T @ rotation - np.eye(self.d))) > 1e-10:
            raise ConfigurationError("회전 행렬이 직교 행렬이 아닙니다.")

        return SimplexBasis(self.d, self.vertices @ rotation)

    def to_json(self):
        """
        JSON 배열(행 벡터) 형식으로 내보내기 (17 유효숫자)
        """
        rows = [[float(f"{x:.17g}") for x in row] for row in self.vertices]
        return json.dumps(rows)

    @staticmethod
    def from_json(text):
        """
        JSON 배열에서 기저 복원

        Args:
            text (str): to_json 형식의 문자열

        Returns:
            SimplexBasis: 검증된 기저
        """
        rows = np.array(json.loads(text), dtype=float)
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1] + 1:
            raise InvalidDimensionError(f"기저 배열 크기가 잘못되었습니다: {rows.shape}")

        basis = SimplexBasis(rows.shape[1], rows)
        residual = gram_residual(basis)
        if residual > 1e-9:
            raise ConfigurationError(f"정규 심플렉스가 아닙니다 (잔차 {residual:.3e})")

        return basis


def build_simplex_basis(d):
    """
    정규 심플렉스 기저 생성

    R^{d+1} 의 단위 꼭짓점을 중심화하여 1 벡터의 직교 초평면에 놓고,
    제곱 노름이 d 가 되도록 확대한 뒤 첫 d 개 좌표 방향의 그람-슈미트 직교 틀로 좌표를 읽는다.

    Args:
        d (int): 위험 자산 수 (d >= 1)

    Returns:
        SimplexBasis: 결정적(canonical) 방향의 기저
    """
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < 1:
        logger.error(f"유효하지 않은 차원: {d}")
        raise InvalidDimensionError(f"d 는 1 이상의 정수여야 합니다: {d}")

    d = int(d)
    size = d + 1
    if size <= d:
        raise InvalidDimensionError(f"d+1 오버플로우: {d}")

    ones = np.ones(size) / np.sqrt(size)
    corners = np.eye(size) - 1.0 / size
    corners *= np.sqrt(size)  # 제곱 노름 d

    # 첫 d 개 좌표 방향을 초평면에 사영한 뒤 그람-슈미트
    frame = []
    for k in range(d):
        direction = np.eye(size)[k] - ones * ones[k]
        for f in frame:
            direction = direction - (direction @ f) * f
        frame.append(direction / np.linalg.norm(direction))
    frame = np.array(frame)

    vertices = corners @ frame.T
    return SimplexBasis(d, vertices)


def planar_basis(angle=0.0):
    """
    d=2 기저: v_1=(0,sqrt 2), v_2=(sqrt 6/2,-sqrt 2/2), v_3=(-sqrt 6/2,-sqrt 2/2) 를 angle 만큼 회전

    Args:
        angle (float): 회전 각도 (라디안)

    Returns:
        SimplexBasis: 회전된 평면 기저
    """
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    c, s = np.cos(angle), np.sin(angle)
    rotation = np.array([[c, s], [-s, c]])
    return build_simplex_basis(2).rotated(swap).rotated(rotation)


def gram_residual(basis):
    """
    그람 행렬과 (d+1)I - J 의 최대 절대 편차, 그리고 sum_j v_j 의 최대 절대값

    Args:
        basis (SimplexBasis): 검사할 기저

    Returns:
        float: 잔차 (0 이상)
    """
    size = basis.size
    target = size * np.eye(size) - np.ones((size, size))
    gram_error = np.max(np.abs(basis.gram() - target))
    sum_error = np.max(np.abs(basis.vertices.sum(axis=0)))
    return float(max(gram_error, sum_error))


def check_basis(basis, tolerance=GRAM_TOLERANCE):
    """
    기저 불변식 검사

    Args:
        basis (SimplexBasis): 검사할 기저
        tolerance (float): 허용 오차

    Returns:
        dict: 검사 결과
            - gram: 그람 잔차
            - outer: sum_j v_j' v_j 와 (d+1)I 의 편차
            - min_singular: 임의의 d 개 꼭짓점 행렬의 최소 특이값
            - passes: 전체 통과 여부
    """
    d = basis.d
    outer = basis.vertices.T @ basis.vertices
    outer_error = float(np.max(np.abs(outer - (d + 1) * np.eye(d))))

    min_singular = np.inf
    for skip in range(d + 1):
        sub = np.delete(basis.vertices, skip, axis=0)
        min_singular = min(min_singular, np.linalg.svd(sub, compute_uv=False).min())

    gram = gram_residual(basis)
    return {
        'gram': gram,
        'outer': outer_error,
        'min_singular': float(min_singular),
        'passes': gram <= tolerance and outer_error <= tolerance and min_singular > 1e-8
    }
