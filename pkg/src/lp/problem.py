"""
선형계획 문제/해 자료형 모듈

문제는 희소 트리플렛 (row, col, value) 으로 저장하며, 행 방향은 '<=', '=', '>=' 중 하나다.
쌍대 변수 부호 규약: 최소화 문제에서 '>=' 행의 y 는 0 이상, '<=' 행의 y 는 0 이하이고
최대화 문제에서는 그 반대다. 축소 비용은 d = c - A'y.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import scipy.sparse as sp

from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

ROW_SENSES = ('<=', '=', '>=')
OBJECTIVE_SENSES = ('min', 'max')


class LPDimensionError(ConfigurationError):
    """
    선형계획 문제의 차원이 서로 맞지 않을 때 발생
    """


class LPStatus(Enum):
    OPTIMAL = 'Optimal'
    INFEASIBLE = 'Infeasible'
    UNBOUNDED = 'Unbounded'
    ITERATION_LIMIT = 'IterationLimit'


@dataclass(eq=False)
class LinearProgram:
    """
    sense c'x  s.t.  A x (<=,=,>=) b,  lower <= x <= upper
    """
    sense: str
    objective: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    row_senses: list
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        self.rows = np.asarray(self.rows, dtype=np.int64).ravel()
        self.cols = np.asarray(self.cols, dtype=np.int64).ravel()
        self.values = np.asarray(self.values, dtype=float).ravel()
        self.rhs = np.asarray(self.rhs, dtype=float).ravel()
        self.lower = np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.asarray(self.upper, dtype=float).ravel()
        self.row_senses = list(self.row_senses)
        self.validate()

    @property
    def n_vars(self):
        return self.objective.shape[0]

    @property
    def n_rows(self):
        return self.rhs.shape[0]

    def validate(self):
        """
        차원과 값의 일관성 검사
        """
        if self.sense not in OBJECTIVE_SENSES:
            raise LPDimensionError(f"알 수 없는 목적 방향: {self.sense}")
        if self.n_vars < 1:
            raise LPDimensionError("변수가 최소 하나 필요합니다.")
        if not (self.rows.shape == self.cols.shape == self.values.shape):
            raise LPDimensionError(
                f"트리플렛 길이가 다릅니다: {self.rows.shape}, {self.cols.shape}, {self.values.shape}"
            )
        if len(self.row_senses) != self.n_rows:
            raise LPDimensionError(f"행 방향 수 {len(self.row_senses)} 와 행 수 {self.n_rows} 가 다릅니다.")
        if self.lower.shape[0] != self.n_vars or self.upper.shape[0] != self.n_vars:
            raise LPDimensionError("변수 범위 길이가 변수 수와 다릅니다.")
        if self.rows.size and (self.rows.min() < 0 or self.rows.max() >= self.n_rows):
            raise LPDimensionError("행 번호가 범위를 벗어났습니다.")
        if self.cols.size and (self.cols.min() < 0 or self.cols.max() >= self.n_vars):
            raise LPDimensionError("열 번호가 범위를 벗어났습니다.")
        for row_sense in self.row_senses:
            if row_sense not in ROW_SENSES:
                raise LPDimensionError(f"알 수 없는 행 방향: {row_sense}")

        if not (np.all(np.isfinite(self.objective)) and np.all(np.isfinite(self.values))
                and np.all(np.isfinite(self.rhs))):
            raise LPDimensionError("목적/계수/우변에 유한하지 않은 값이 있습니다.")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise LPDimensionError("변수 범위에 NaN 이 있습니다.")
        if np.any(self.lower > self.upper):
            raise LPDimensionError("하한이 상한보다 큰 변수가 있습니다.")
        if np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            raise LPDimensionError("변수 범위가 비어 있습니다.")

    def matrix(self):
        """
        제약 행렬 (csc, 중복 트리플렛은 합산)
        """
        return sp.coo_matrix(
            (self.values, (self.rows, self.cols)), shape=(self.n_rows, self.n_vars)
        ).tocsc()

    @classmethod
    def from_dense(cls, sense, objective, matrix, row_senses, rhs, lower=None, upper=None):
        """
        밀집 행렬로 문제 생성 (작은 문제와 테스트용)
        """
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        coo = sp.coo_matrix(matrix)
        n_vars = matrix.shape[1]
        lower = np.zeros(n_vars) if lower is None else lower
        upper = np.full(n_vars, np.inf) if upper is None else upper
        return cls(sense, objective, coo.row, coo.col, coo.data, row_senses, rhs, lower, upper)


class LPBuilder:
    """
    변수/행 블록 단위로 트리플렛을 모으는 빌더
    """

    def __init__(self, sense):
        self.sense = sense
        self._objective = []
        self._lower = []
        self._upper = []
        self._rows = []
        self._cols = []
        self._values = []
        self._senses = []
        self._rhs = []
        self.n_vars = 0
        self.n_rows = 0

    def add_variables(self, count, lower=0.0, upper=np.inf, cost=0.0):
        """
        변수 블록 추가

        Returns:
            np.ndarray: 새 변수 번호
        """
        start = self.n_vars
        self._objective.append(np.broadcast_to(np.asarray(cost, dtype=float), (count,)).copy())
        self._lower.append(np.broadcast_to(np.asarray(lower, dtype=float), (count,)).copy())
        self._upper.append(np.broadcast_to(np.asarray(upper, dtype=float), (count,)).copy())
        self.n_vars += count
        return np.arange(start, start + count)

    def add_rows(self, count, row_sense, rhs=0.0):
        """
        같은 방향의 행 블록 추가

        Returns:
            np.ndarray: 새 행 번호
        """
        start = self.n_rows
        self._senses.extend([row_sense] * count)
        self._rhs.append(np.broadcast_to(np.asarray(rhs, dtype=float), (count,)).copy())
        self.n_rows += count
        return np.arange(start, start + count)

    def add_entries(self, rows, cols, values):
        rows, cols = np.broadcast_arrays(np.asarray(rows), np.asarray(cols))
        values = np.broadcast_to(np.asarray(values, dtype=float), rows.shape)
        self._rows.append(rows.ravel().astype(np.int64))
        self._cols.append(cols.ravel().astype(np.int64))
        self._values.append(values.ravel().copy())

    def build(self):
        def join(parts, dtype):
            return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype=dtype)

        return LinearProgram(
            sense=self.sense,
            objective=join(self._objective, float),
            rows=join(self._rows, np.int64),
            cols=join(self._cols, np.int64),
            values=join(self._values, float),
            row_senses=self._senses,
            rhs=join(self._rhs, float),
            lower=join(self._lower, float),
            upper=join(self._upper, float)
        )


@dataclass(eq=False)
class LPSolution:
    """
    선형계획 해

    residuals: primal (제약/범위 위반), dual (부호/축소 비용 위반), complementarity, 모두 상대값
    """
    status: LPStatus
    x: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    objective: float
    dual_objective: float
    residuals: dict = field(default_factory=dict)
    iterations: int = 0
    phase_one_iterations: int = 0
    bland_switches: int = 0
    refactorizations: int = 0
    farkas: Optional[np.ndarray] = None
    farkas_verified: bool = False

    @property
    def is_optimal(self):
        return self.status == LPStatus.OPTIMAL

    def summary(self):
        return {
            'status': self.status.value,
            'objective': self.objective,
            'dual_objective': self.dual_objective,
            'residuals': dict(self.residuals),
            'iterations': self.iterations,
            'phase_one_iterations': self.phase_one_iterations,
            'bland_switches': self.bland_switches,
            'refactorizations': self.refactorizations
        }


def solution_residuals(lp, x, duals):
    """
    원 문제 기준 상대 잔차 계산

    Args:
        lp (LinearProgram): 문제
        x (np.ndarray): 원 변수
        duals (np.ndarray): 행 쌍대 변수 (모듈 머리말의 부호 규약)

    Returns:
        tuple: (residuals dict, reduced_costs, dual_objective)
    """
    A = lp.matrix()
    flip = -1.0 if lp.sense == 'max' else 1.0
    # 최소화 형식으로 통일
    c = flip * lp.objective
    y = flip * duals
    activity = A @ x
    slack = lp.rhs - activity
    senses = np.array(lp.row_senses, dtype="<U2")

    scale_b = 1.0 + np.abs(lp.rhs)
    row_violation = np.zeros(lp.n_rows)
    row_violation[senses == '<='] = np.maximum(-slack[senses == '<='], 0.0)
    row_violation[senses == '>='] = np.maximum(slack[senses == '>='], 0.0)
    row_violation[senses == '='] = np.abs(slack[senses == '='])
    bound_violation = np.maximum(lp.lower - x, 0.0) + np.maximum(x - lp.upper, 0.0)
    finite_bounds = np.where(np.isfinite(lp.lower), np.abs(lp.lower), 0.0)
    primal = max(
        float(np.max(row_violation / scale_b, initial=0.0)),
        float(np.max(bound_violation / (1.0 + finite_bounds), initial=0.0))
    )

    reduced = c - A.T @ y
    sign_violation = np.zeros(lp.n_rows)
    sign_violation[senses == '<='] = np.maximum(y[senses == '<='], 0.0)
    sign_violation[senses == '>='] = np.maximum(-y[senses == '>='], 0.0)

    span = np.where(np.isfinite(lp.upper - lp.lower), lp.upper - lp.lower, np.inf)
    tol = 1e-9 * (1.0 + np.minimum(span, 1.0))
    can_increase = x < lp.upper - tol
    can_decrease = x > lp.lower + tol
    reduced_violation = (
        np.where(can_increase, np.maximum(-reduced, 0.0), 0.0)
        + np.where(can_decrease, np.maximum(reduced, 0.0), 0.0)
    )
    dual = max(
        float(np.max(sign_violation, initial=0.0)) / (1.0 + float(np.max(np.abs(y), initial=0.0))),
        float(np.max(reduced_violation / (1.0 + np.abs(c)), initial=0.0))
    )

    # 축소 비용은 부호에 맞는 범위 끝에서 평가, 범위가 무한이면 현재 값을 사용
    bound_at = np.where(reduced > 0, lp.lower, lp.upper)
    bound_at = np.where(np.isfinite(bound_at), bound_at, x)
    primal_objective = float(c @ x)
    dual_objective = float(lp.rhs @ y + reduced @ bound_at)

    distance = np.minimum(np.abs(x - lp.lower), np.abs(lp.upper - x))
    distance = np.where(np.isfinite(distance), distance, 0.0)
    scale_obj = 1.0 + abs(primal_objective)
    complementarity = max(
        float(np.max(np.abs(y * slack), initial=0.0)) / scale_obj,
        float(np.max(np.abs(reduced) * distance, initial=0.0)) / scale_obj,
        abs(primal_objective - dual_objective) / scale_obj
    )

    residuals = {'primal': primal, 'dual': dual, 'complementarity': complementarity}
    return residuals, flip * reduced, flip * dual_objective


def _format_bound(value):
    if value == math.inf:
        return 'inf'
    if value == -math.inf:
        return '-inf'
    return repr(float(value))


def dump_lp(lp, path):
    """
    평문 형식으로 문제 저장

    형식:
        sense max|min
        dims <n_rows> <n_vars>
        obj j c_j
        row i <=|=|>= rhs
        a i j value
        bound j lower upper
    """
    lines = [f"sense {lp.sense}", f"dims {lp.n_rows} {lp.n_vars}"]
    for j, c in enumerate(lp.objective):
        if c != 0.0:
            lines.append(f"obj {j} {float(c)!r}")
    for i, (row_sense, b) in enumerate(zip(lp.row_senses, lp.rhs)):
        lines.append(f"row {i} {row_sense} {float(b)!r}")
    for i, j, a in zip(lp.rows, lp.cols, lp.values):
        lines.append(f"a {int(i)} {int(j)} {float(a)!r}")
    for j, (lo, hi) in enumerate(zip(lp.lower, lp.upper)):
        lines.append(f"bound {j} {_format_bound(lo)} {_format_bound(hi)}")

    with open(path, 'w', encoding='utf-8') as f:
        f.write('\n'.join(lines) + '\n')

    logger.debug(f"LP 저장: {path} ({lp.n_rows} 행, {lp.n_vars} 변수)")


def load_lp(path):
    """
    dump_lp 형식의 파일 읽기

    Returns:
        LinearProgram: 복원된 문제
    """
    sense = None
    n_rows = n_vars = None
    objective = rhs = lower = upper = None
    senses = []
    rows, cols, values = [], [], []

    with open(path, 'r', encoding='utf-8') as f:
        for number, line in enumerate(f, start=1):
            parts = line.split()
            if not parts or parts[0].startswith('#'):
                continue
            tag = parts[0]
            try:
                if tag == 'sense':
                    sense = parts[1]
                elif tag == 'dims':
                    n_rows, n_vars = int(parts[1]), int(parts[2])
                    objective = np.zeros(n_vars)
                    rhs = np.zeros(n_rows)
                    senses = ['='] * n_rows
                    lower = np.zeros(n_vars)
                    upper = np.full(n_vars, np.inf)
                elif tag == 'obj':
                    objective[int(parts[1])] = float(parts[2])
                elif tag == 'row':
                    i = int(parts[1])
                    senses[i] = parts[2]
                    rhs[i] = float(parts[3])
                elif tag == 'a':
                    rows.append(int(parts[1]))
                    cols.append(int(parts[2]))
                    values.append(float(parts[3]))
                elif tag == 'bound':
                    j = int(parts[1])
                    lower[j] = float(parts[2])
                    upper[j] = float(parts[3])
                else:
                    raise LPDimensionError(f"{path}:{number} 알 수 없는 태그 {tag}")
            except (IndexError, ValueError, TypeError) as e:
                logger.error(f"LP 파일 파싱 오류 {path}:{number}: {e}")
                raise LPDimensionError(f"{path}:{number} 형식 오류: {line.strip()}") from e

    if sense is None or n_rows is None:
        raise LPDimensionError(f"{path}: sense/dims 줄이 없습니다.")

    return LinearProgram(sense, objective, rows, cols, values, senses, rhs, lower, upper)
