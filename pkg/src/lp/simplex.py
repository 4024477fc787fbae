"""
유계 변수 개정 심플렉스 모듈

내부 형식: min c'x, [A | I] x = b, l <= x <= u
- 각 행에 논리(슬랙) 변수를 붙인다: '<=' 는 [0, inf), '>=' 는 (-inf, 0], '=' 는 [0, 0].
- 논리 변수 기저에서 출발하고, 범위를 벗어난 기저 변수는 1 단계에서 위반 합을 최소화해 없앤다.
  2 단계 중 재분해 뒤 위반이 보이면 다시 1 단계로 돌아간다.
- 기저 행렬은 scipy.sparse.linalg.splu 로 LU 분해하고, 피벗마다 eta 벡터(PFI)를 덧붙이며
  refactor_every 피벗마다 다시 분해한다.
- 가격 결정은 블록 단위 부분 Dantzig 규칙, 퇴화 스텝이 연속되면 Bland 규칙으로 바꾼다.
- 비율 검사는 2 회 통과 (완화된 범위로 최소 비율, 그 안에서 가장 큰 피벗). 동률은 가장 작은 변수 번호.
"""

import logging
import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as splinalg

from src.lp.problem import LPSolution, LPStatus, solution_residuals
from src.utils.errors import NumericalError

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-7
PIVOT_TOLERANCE = 1e-9
OPTIMALITY_TOLERANCE = 1e-9
FEASIBILITY_TOLERANCE = 1e-9
HARRIS_TOLERANCE = 5e-10
PIVOT_RELATIVE_TOLERANCE = 1e-7
PIVOT_REFACTOR_TOLERANCE = 1e-5
ZERO_TOLERANCE = 1e-14
DEFAULT_MAX_ITERATIONS = 200000
REFACTOR_EVERY = 64
PRICING_BLOCK = 4096
DEGENERATE_STEPS = 50
MAX_REFACTOR_RETRIES = 3
MAX_PHASE_SWITCHES = 10
SCALING_PASSES = 6

# 변수 상태
AT_LOWER = 0
AT_UPPER = 1
AT_ZERO = 2
BASIC = 3


class SingularBasisError(NumericalError):
    """
    재분해를 다시 시도해도 기저 행렬이 수치적으로 특이할 때 발생
    """


def geometric_scaling(matrix, passes=SCALING_PASSES):
    """
    기하 평균 행/열 균형화

    각 단계에서 행(열)을 sqrt(max|a| * min|a|) 로 나눈다. 배율은 2 의 거듭제곱으로 반올림하여
    스케일 복원에서 반올림 오차가 생기지 않게 한다.

    Args:
        matrix (scipy.sparse matrix): 제약 행렬 (m x n)
        passes (int): 반복 횟수

    Returns:
        tuple: (스케일된 csc 행렬, 행 배율 R, 열 배율 C), A_s = diag(R) A diag(C)
    """
    coo = sp.coo_matrix(matrix)
    m, n = coo.shape
    data = coo.data.copy()
    row_scale = np.ones(m)
    col_scale = np.ones(n)

    keep = data != 0.0
    rows, cols, data = coo.row[keep], coo.col[keep], data[keep]

    def factors(index, size, values):
        largest = np.zeros(size)
        smallest = np.full(size, np.inf)
        np.maximum.at(largest, index, values)
        np.minimum.at(smallest, index, values)
        has = largest > 0
        factor = np.ones(size)
        factor[has] = 1.0 / np.sqrt(largest[has] * smallest[has])
        return np.exp2(np.round(np.log2(factor)))

    for _ in range(passes):
        if data.size == 0:
            break
        r = factors(rows, m, np.abs(data))
        data = data * r[rows]
        row_scale *= r
        c = factors(cols, n, np.abs(data))
        data = data * c[cols]
        col_scale *= c

    scaled = sp.coo_matrix((data, (rows, cols)), shape=(m, n)).tocsc()
    return scaled, row_scale, col_scale


class _Factorization:
    """
    기저 행렬의 LU 분해와 eta 파일
    """

    def __init__(self, basis_matrix, pivot_tolerance):
        try:
            self.lu = splinalg.splu(sp.csc_matrix(basis_matrix), permc_spec='COLAMD')
        except RuntimeError as e:
            raise SingularBasisError(f"기저 LU 분해 실패: {e}") from e

        diagonal = np.abs(self.lu.U.diagonal())
        if diagonal.size and diagonal.min() <= pivot_tolerance * max(1.0, diagonal.max()) * 1e-4:
            raise SingularBasisError(f"기저 행렬이 수치적으로 특이합니다 (최소 피벗 {diagonal.min():.3e})")

        self.etas = []

    def ftran(self, column):
        z = self.lu.solve(column)
        for r, alpha in self.etas:
            zr = z[r] / alpha[r]
            z -= alpha * zr
            z[r] = zr
        return z

    def btran(self, vector):
        v = np.array(vector, dtype=float)
        for r, alpha in reversed(self.etas):
            v[r] = (v[r] - (alpha @ v - alpha[r] * v[r])) / alpha[r]
        return self.lu.solve(v, trans='T')

    def push(self, r, alpha):
        self.etas.append((r, alpha.copy()))

    def __len__(self):
        return len(self.etas)


class RevisedSimplex:
    """
    한 선형계획 문제에 대한 풀이 인스턴스 (다른 인스턴스와 상태를 공유하지 않음)
    """

    def __init__(self, lp, tolerance=DEFAULT_TOLERANCE, pivot_tolerance=PIVOT_TOLERANCE,
                 max_iterations=DEFAULT_MAX_ITERATIONS, refactor_every=REFACTOR_EVERY, scaling=True):
        self.lp = lp
        self.tolerance = tolerance
        self.pivot_tolerance = pivot_tolerance
        self.max_iterations = max_iterations
        self.refactor_every = refactor_every

        self.flip = -1.0 if lp.sense == 'max' else 1.0
        A = lp.matrix()
        if scaling:
            A, self.row_scale, self.col_scale = geometric_scaling(A)
        else:
            self.row_scale = np.ones(lp.n_rows)
            self.col_scale = np.ones(lp.n_vars)

        self.m = lp.n_rows
        self.n = lp.n_vars
        self.A = A
        self.b = lp.rhs * self.row_scale
        self.c = self.flip * lp.objective * self.col_scale
        self.lower_struct = lp.lower / self.col_scale
        self.upper_struct = lp.upper / self.col_scale
        # 2 단계 중 재분해 후 이 값을 넘는 위반이 보이면 1 단계로 돌아간다
        self.drift_tolerance = max(10.0 * FEASIBILITY_TOLERANCE, 0.1 * tolerance)

        self.iterations = 0
        self.phase_one_iterations = 0
        self.bland_switches = 0
        self.refactorizations = 0
        self._retries = 0
        self._force_bland = False
        self._rejected = set()
        self._pending = []
        self._last_good = None
        self._block = 0

    # ------------------------------------------------------------------
    # 초기화

    def _setup(self):
        """
        논리 변수 기저(단위 행렬)에서 출발, 범위를 벗어난 기저 변수는 1 단계에서 처리
        """
        m = self.m
        senses = np.array(self.lp.row_senses, dtype="<U2")
        logical_lower = np.where(senses == '>=', -np.inf, 0.0)
        logical_upper = np.where(senses == '<=', np.inf, 0.0)

        x_struct = np.where(
            np.isfinite(self.lower_struct), self.lower_struct,
            np.where(np.isfinite(self.upper_struct), self.upper_struct, 0.0)
        )
        status_struct = np.where(
            np.isfinite(self.lower_struct), AT_LOWER,
            np.where(np.isfinite(self.upper_struct), AT_UPPER, AT_ZERO)
        )

        self.M = sp.hstack([self.A, sp.identity(m, format='csc')], format='csc')
        self.MT = self.M.T.tocsr()
        self.cost = np.concatenate([self.c, np.zeros(m)])

        self.lower = np.concatenate([self.lower_struct, logical_lower])
        self.upper = np.concatenate([self.upper_struct, logical_upper])
        self.fixed = self.lower == self.upper
        self.x = np.concatenate([x_struct, self.b - self.A @ x_struct])
        self.status = np.concatenate([status_struct, np.full(m, BASIC)])
        self.basis = self.n + np.arange(m, dtype=np.int64)

        total = self.n + m
        size = max(PRICING_BLOCK, 1)
        self.blocks = [
            (start, min(start + size, total), self.MT[start:min(start + size, total)])
            for start in range(0, total, size)
        ]

        self._refactor()

    def _column(self, j):
        start, end = self.M.indptr[j], self.M.indptr[j + 1]
        column = np.zeros(self.m)
        column[self.M.indices[start:end]] = self.M.data[start:end]
        return column

    def _refactor(self):
        """
        기저 재분해와 기저 변수 값 재계산, 실패하면 마지막 정상 분해로 되돌린다
        """
        try:
            factor = _Factorization(self.M[:, self.basis], self.pivot_tolerance)
        except SingularBasisError:
            self._recover()
            return

        if self._pending:
            self._retries = 0
        self.factor = factor
        self.refactorizations += 1
        self._recompute_basics()
        self._last_good = (self.basis.copy(), self.status.copy(), self.x.copy(), factor)
        self._pending = []
        self._rejected.clear()

    def _recover(self):
        self._retries += 1
        if self._retries > MAX_REFACTOR_RETRIES or self._last_good is None:
            logger.error(f"기저 재분해 실패 ({self._retries} 회), 풀이 중단")
            raise SingularBasisError(f"재분해를 {self._retries} 회 시도해도 기저가 특이합니다.")

        basis, status, x, factor = self._last_good
        logger.warning(
            f"특이 기저 감지, 마지막 정상 기저로 복원하고 진입 열 {len(self._pending)} 개 제외 "
            f"(재시도 {self._retries})"
        )
        self.basis, self.status, self.x = basis.copy(), status.copy(), x.copy()
        factor.etas = []
        self.factor = factor
        self._rejected.update(self._pending)
        self._pending = []
        self._force_bland = True

    def _recompute_basics(self):
        nonbasic_x = self.x.copy()
        nonbasic_x[self.basis] = 0.0
        self.x[self.basis] = self.factor.ftran(self.b - self.M @ nonbasic_x)

    def _violations(self):
        """
        기저 변수의 (하한 미달, 상한 초과) 크기
        """
        x_basic = self.x[self.basis]
        below = np.maximum(self.lower[self.basis] - x_basic, 0.0)
        above = np.maximum(x_basic - self.upper[self.basis], 0.0)
        return below, above

    def _max_violation(self):
        below, above = self._violations()
        return float(max(np.max(below, initial=0.0), np.max(above, initial=0.0)))

    def _phase_one_cost(self):
        # 실행불가능 합의 기울기: 하한 미달 -1, 상한 초과 +1
        below, above = self._violations()
        return np.where(below > FEASIBILITY_TOLERANCE, -1.0, np.where(above > FEASIBILITY_TOLERANCE, 1.0, 0.0))

    # ------------------------------------------------------------------
    # 가격 결정과 비율 검사

    def _price(self, y, phase, bland):
        """
        진입 변수 선택

        블록 단위 부분 가격 결정: 직전에 후보가 나온 블록부터 순환하며 첫 후보 블록에서 Dantzig 최대값.
        Bland 규칙일 때는 블록 0 부터 훑어 가장 작은 번호를 고른다.

        Returns:
            tuple: (진입 변수, 축소 비용) 또는 (None, 0.0)
        """
        count = len(self.blocks)
        first = 0 if bland else self._block
        for offset in range(count):
            index = (first + offset) % count
            start, end, rows = self.blocks[index]
            reduced = -(rows @ y)
            if phase == 2:
                reduced += self.cost[start:end]

            status = self.status[start:end]
            fixed = self.fixed[start:end]
            can_up = ((status == AT_LOWER) & ~fixed) | (status == AT_ZERO)
            can_down = (status == AT_UPPER) | (status == AT_ZERO)
            eligible = (can_up & (reduced < -OPTIMALITY_TOLERANCE)) | (can_down & (reduced > OPTIMALITY_TOLERANCE))
            candidates = np.flatnonzero(eligible)
            if self._rejected and candidates.size:
                candidates = np.array([k for k in candidates if start + k not in self._rejected], dtype=np.int64)
            if candidates.size == 0:
                continue

            if bland:
                k = int(candidates[0])
            else:
                k = int(candidates[np.argmax(np.abs(reduced[candidates]))])
                self._block = index
            return start + k, float(reduced[k])
        return None, 0.0

    def _ratio_test(self, q, delta, phase):
        """
        2 회 통과 비율 검사

        첫 통과는 범위를 HARRIS_TOLERANCE 만큼 넓힌 최소 비율 theta 를 구하고, 둘째 통과는
        정확한 비율이 theta 이하인 행 중 |delta| 가 가장 큰 행을 고른다 (같으면 작은 기저 번호).
        1 단계에서 범위를 벗어난 기저 변수는 가까운 범위 끝까지만 움직인다.

        Returns:
            tuple: ('pivot', r, step, bound) / ('flip', step) / ('reject',) / ('unbounded',)
        """
        x_basic = self.x[self.basis]
        lower_basic = self.lower[self.basis]
        upper_basic = self.upper[self.basis]

        if phase == 1:
            below = x_basic < lower_basic - FEASIBILITY_TOLERANCE
            above = x_basic > upper_basic + FEASIBILITY_TOLERANCE
            down_target = np.where(above, upper_basic, np.where(below, -np.inf, lower_basic))
            up_target = np.where(below, lower_basic, np.where(above, np.inf, upper_basic))
        else:
            down_target = lower_basic
            up_target = upper_basic

        largest = float(np.max(np.abs(delta), initial=0.0))
        threshold = max(self.pivot_tolerance, PIVOT_RELATIVE_TOLERANCE * largest)
        decreasing = (delta > threshold) & np.isfinite(down_target)
        increasing = (delta < -threshold) & np.isfinite(up_target)

        relaxed = np.full(self.m, np.inf)
        exact = np.full(self.m, np.inf)
        exact[decreasing] = (x_basic[decreasing] - down_target[decreasing]) / delta[decreasing]
        exact[increasing] = (up_target[increasing] - x_basic[increasing]) / -delta[increasing]
        relaxed[decreasing] = exact[decreasing] + HARRIS_TOLERANCE / delta[decreasing]
        relaxed[increasing] = exact[increasing] + HARRIS_TOLERANCE / -delta[increasing]
        theta = float(relaxed.min()) if self.m else np.inf

        flip_step = self.upper[q] - self.lower[q] if self.status[q] != AT_ZERO else np.inf
        if not np.isfinite(theta):
            if np.isfinite(flip_step):
                return ('flip', flip_step)
            tiny = (np.abs(delta) > ZERO_TOLERANCE) & (
                ((delta > 0) & np.isfinite(down_target)) | ((delta < 0) & np.isfinite(up_target))
            )
            return ('reject',) if tiny.any() else ('unbounded',)

        if flip_step <= theta:
            return ('flip', flip_step)

        candidates = np.flatnonzero(exact <= theta)
        magnitude = np.abs(delta[candidates])
        top = candidates[magnitude >= magnitude.max() * (1.0 - 1e-12)]
        r = int(top[np.argmin(self.basis[top])])
        step = max(float(exact[r]), 0.0)
        bound = down_target[r] if delta[r] > 0 else up_target[r]
        return ('pivot', r, step, float(bound))

    # ------------------------------------------------------------------
    # 반복

    def _run(self, phase):
        """
        한 단계의 심플렉스 반복

        Returns:
            str: 'optimal', 'feasible' (1 단계 완료), 'drift' (2 단계 중 실행가능성 상실),
                 'unbounded', 'limit'
        """
        degenerate_run = 0
        bland = False
        stalls = 0

        while True:
            if self.iterations >= self.max_iterations:
                return 'limit'
            if len(self.factor) >= self.refactor_every:
                self._refactor()
                if phase == 2 and self._max_violation() > self.drift_tolerance:
                    return 'drift'
            if self._force_bland and not bland:
                bland = True
                self.bland_switches += 1
                self._force_bland = False

            if phase == 1:
                cost_basic = self._phase_one_cost()
                if not cost_basic.any():
                    return 'feasible'
            else:
                cost_basic = self.cost[self.basis]
            y = self.factor.btran(cost_basic)

            q, reduced_q = self._price(y, phase, bland)
            if q is None:
                if self._rejected and stalls < 2:
                    # 제외했던 열을 새 분해로 다시 검토
                    stalls += 1
                    self._rejected.clear()
                    self._refactor()
                    continue
                return 'optimal'

            direction = 1.0 if reduced_q < 0 else -1.0
            alpha = self.factor.ftran(self._column(q))
            delta = direction * alpha
            outcome = self._ratio_test(q, delta, phase)

            if outcome[0] == 'unbounded':
                if phase == 1:
                    self._rejected.add(q)
                    continue
                return 'unbounded'
            if outcome[0] == 'reject':
                logger.debug(f"작은 피벗만 남은 진입 열 {q} 제외 (반복 {self.iterations})")
                self._rejected.add(q)
                continue

            if outcome[0] == 'pivot':
                _, r, step, bound = outcome
                largest = float(np.max(np.abs(alpha)))
                if abs(alpha[r]) < PIVOT_REFACTOR_TOLERANCE * largest and len(self.factor):
                    # eta 누적 오차를 지운 뒤 같은 선택을 다시 평가
                    self._refactor()
                    if phase == 2 and self._max_violation() > self.drift_tolerance:
                        return 'drift'
                    continue

            self.iterations += 1
            if phase == 1:
                self.phase_one_iterations += 1
            stalls = 0

            x_basic = self.x[self.basis]
            if outcome[0] == 'flip':
                step = outcome[1]
                self.x[self.basis] = x_basic - step * delta
                if direction > 0:
                    self.status[q] = AT_UPPER
                    self.x[q] = self.upper[q]
                else:
                    self.status[q] = AT_LOWER
                    self.x[q] = self.lower[q]
            else:
                leaving = int(self.basis[r])
                self.x[self.basis] = x_basic - step * delta
                self.x[q] = self.x[q] + direction * step
                self.x[leaving] = bound
                if bound == self.lower[leaving]:
                    self.status[leaving] = AT_LOWER
                else:
                    self.status[leaving] = AT_UPPER

                self.basis[r] = q
                self.status[q] = BASIC
                self.factor.push(r, alpha)
                self._pending.append(q)

            if step <= 1e-12:
                degenerate_run += 1
                if degenerate_run >= DEGENERATE_STEPS and not bland:
                    bland = True
                    self.bland_switches += 1
                    logger.debug(f"퇴화 {degenerate_run} 회 연속, Bland 규칙으로 전환 (반복 {self.iterations})")
            else:
                degenerate_run = 0
                bland = False

            if self.iterations % 5000 == 0:
                logger.debug(f"심플렉스 {phase} 단계 - 반복 {self.iterations}, 최대 위반 {self._max_violation():.3e}")

    # ------------------------------------------------------------------
    # 풀이

    def solve(self):
        self._setup()
        scale_b = 1.0 + float(np.max(np.abs(self.b), initial=0.0))

        for switch in range(MAX_PHASE_SWITCHES):
            if self._max_violation() > FEASIBILITY_TOLERANCE:
                outcome = self._run(phase=1)
                if outcome == 'limit':
                    return self._partial(LPStatus.ITERATION_LIMIT)
                if outcome == 'optimal':
                    self._refactor()
                    below, above = self._violations()
                    infeasibility = float(below.sum() + above.sum())
                    if infeasibility > self.tolerance * scale_b:
                        y = self.factor.btran(self._phase_one_cost())
                        return self._infeasible(y * self.row_scale, infeasibility)
                    logger.debug(f"1 단계 잔여 위반 {infeasibility:.3e} 는 허용 범위, 2 단계 진행")

            outcome = self._run(phase=2)
            if outcome == 'limit':
                return self._partial(LPStatus.ITERATION_LIMIT)
            if outcome == 'unbounded':
                return self._partial(LPStatus.UNBOUNDED)
            if outcome == 'optimal':
                self._refactor()
                if self._max_violation() <= self.drift_tolerance:
                    return self._optimal()
            logger.debug(f"2 단계 실행가능성 상실 (위반 {self._max_violation():.3e}), 1 단계 재시작 ({switch + 1})")

        logger.warning(f"단계 전환이 {MAX_PHASE_SWITCHES} 회를 넘었습니다. 현재 기저로 해를 만듭니다.")
        return self._optimal()

    def _optimal(self):
        y_scaled = self.factor.btran(self.cost[self.basis])
        x = self._snap(self.x[:self.n] * self.col_scale)
        duals = self.flip * (y_scaled * self.row_scale)

        residuals, reduced_costs, dual_objective = solution_residuals(self.lp, x, duals)
        objective = float(self.lp.objective @ x)
        worst = max(residuals.values())
        if worst > self.tolerance:
            logger.warning(f"최적 해 잔차가 허용 오차를 넘습니다: {residuals}")

        return LPSolution(
            status=LPStatus.OPTIMAL,
            x=x,
            duals=duals,
            reduced_costs=reduced_costs,
            objective=objective,
            dual_objective=dual_objective,
            residuals=residuals,
            iterations=self.iterations,
            phase_one_iterations=self.phase_one_iterations,
            bland_switches=self.bland_switches,
            refactorizations=self.refactorizations
        )

    def _snap(self, x):
        # 범위 밖 반올림 오차 제거
        return np.minimum(np.maximum(x, self.lp.lower), self.lp.upper)

    def _partial(self, status):
        x = self.x[:self.n] * self.col_scale
        objective = float(self.lp.objective @ x)
        if status == LPStatus.UNBOUNDED:
            objective = math.inf if self.lp.sense == 'max' else -math.inf
        logger.info(f"LP 풀이 종료: {status.value} (반복 {self.iterations})")
        return LPSolution(
            status=status,
            x=x,
            duals=np.zeros(self.m),
            reduced_costs=np.zeros(self.n),
            objective=objective,
            dual_objective=math.nan,
            iterations=self.iterations,
            phase_one_iterations=self.phase_one_iterations,
            bland_switches=self.bland_switches,
            refactorizations=self.refactorizations
        )

    def _infeasible(self, farkas, infeasibility):
        verified, margin = verify_farkas(self.lp, farkas)
        scale = np.max(np.abs(farkas), initial=0.0)
        if scale > 0:
            farkas = farkas / scale
        if verified:
            logger.info(f"LP 불능: 1 단계 최소값 {infeasibility:.3e}, Farkas 여유 {margin:.3e}")
        else:
            logger.warning(f"LP 불능 판정의 Farkas 증명서 검증 실패 (여유 {margin:.3e})")

        solution = self._partial(LPStatus.INFEASIBLE)
        solution.objective = math.nan
        solution.farkas = farkas
        solution.farkas_verified = verified
        return solution


def verify_farkas(lp, y):
    """
    불능 증명서 검사: y'b - sup_{l<=x<=u, 슬랙 범위} y'(Ax + s) > 0

    Args:
        lp (LinearProgram): 원 문제
        y (np.ndarray): 행 승수

    Returns:
        tuple: (검증 여부, 여유값)
    """
    y = np.asarray(y, dtype=float)
    zero = 1e-9 * (1.0 + np.max(np.abs(y), initial=0.0))
    gradient = lp.matrix().T @ y

    def support(coefficients, lower, upper):
        positive = coefficients > zero
        negative = coefficients < -zero
        if np.any(positive & ~np.isfinite(upper)) or np.any(negative & ~np.isfinite(lower)):
            return math.inf
        return float(coefficients[positive] @ upper[positive] + coefficients[negative] @ lower[negative])

    senses = np.array(lp.row_senses, dtype="<U2")
    slack_lower = np.where(senses == '>=', -np.inf, 0.0)
    slack_upper = np.where(senses == '<=', np.inf, 0.0)

    bound = support(gradient, lp.lower, lp.upper) + support(y, slack_lower, slack_upper)
    margin = float(lp.rhs @ y) - bound
    noise = 1e-11 * (1.0 + float(np.abs(lp.rhs) @ np.abs(y)))
    return bool(margin > noise), margin


def _solve_unconstrained(lp):
    # 제약이 없는 문제: 각 변수를 비용 부호에 맞는 범위 끝에 둔다
    c = (-1.0 if lp.sense == 'max' else 1.0) * lp.objective
    x = np.where(c > 0, lp.lower, np.where(c < 0, lp.upper, np.clip(0.0, lp.lower, lp.upper)))
    if not np.all(np.isfinite(x)):
        objective = math.inf if lp.sense == 'max' else -math.inf
        return LPSolution(LPStatus.UNBOUNDED, np.nan_to_num(x), np.zeros(0), np.zeros(lp.n_vars),
                          objective, math.nan)

    residuals, reduced_costs, dual_objective = solution_residuals(lp, x, np.zeros(0))
    return LPSolution(LPStatus.OPTIMAL, x, np.zeros(0), reduced_costs, float(lp.objective @ x),
                      dual_objective, residuals)


def solve_lp(lp, options=None):
    """
    선형계획 문제 풀이

    Args:
        lp (LinearProgram): 문제
        options (dict, optional):
            - tolerance: 상대 실행가능 허용 오차 (기본 1e-7)
            - pivot_tolerance: 절대 피벗 허용 오차 (기본 1e-9)
            - max_iterations: 최대 반복 수
            - refactor_every: 재분해 주기 (피벗 수)
            - scaling: 기하 평균 균형화 여부

    Returns:
        LPSolution: 풀이 결과
    """
    options = options or {}
    lp.validate()

    if lp.n_rows == 0:
        return _solve_unconstrained(lp)

    solver = RevisedSimplex(
        lp,
        tolerance=options.get('tolerance', DEFAULT_TOLERANCE),
        pivot_tolerance=options.get('pivot_tolerance', PIVOT_TOLERANCE),
        max_iterations=options.get('max_iterations', DEFAULT_MAX_ITERATIONS),
        refactor_every=options.get('refactor_every', REFACTOR_EVERY),
        scaling=options.get('scaling', True)
    )
    solution = solver.solve()
    logger.debug(
        f"LP 풀이: {solution.status.value}, 목적값 {solution.objective:.10g}, "
        f"반복 {solution.iterations} (1 단계 {solution.phase_one_iterations}), "
        f"Bland 전환 {solution.bland_switches}, 재분해 {solution.refactorizations}"
    )
    return solution
