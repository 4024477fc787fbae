"""
구성된 측도 Q_n 아래 경로 표본과 하한 몬테카를로 추정
"""

import logging
import math
from collections import OrderedDict

import numpy as np
from tqdm import tqdm

from src.construction.kusuoka import KusuokaConstruction, martingale_weights
from src.utils.errors import NumericalError

logger = logging.getLogger(__name__)

MEMO_SIZE = 65536
RAISE = 'raise'
SKIP = 'skip'


class InfeasibleNodeError(NumericalError):
    """
    노드별 마팅게일 측도가 없는 노드를 만났을 때 발생
    """

    def __init__(self, node, margin):
        self.node = tuple(node)
        self.margin = margin
        super().__init__(f"노드 {self.node} 에서 마팅게일 측도가 없습니다 (여유 {margin})")


def sample_path(spec, control, rng, memo=None, construction=None):
    """
    루트에서 만기까지 Q_n 을 따라 한 경로 표본

    Args:
        spec (MarketSpec): 심플렉스 구동 시장
        control (PiecewiseVolControl): 제어
        rng (np.random.Generator): 난수 생성기
        memo (OrderedDict, optional): 노드 -> 분기 확률 캐시, MEMO_SIZE 개를 넘으면 가장 오래 안 쓴 노드부터 버린다
        construction (KusuokaConstruction, optional): 재사용할 구성

    Returns:
        KusuokaProcesses: 표본 경로 위의 과정들
    """
    memo = OrderedDict() if memo is None else memo
    construction = construction or KusuokaConstruction(spec, control)
    state = construction.initial_state()

    for _ in range(construction.n):
        node = tuple(state['path'])
        values = construction.child_values(state)
        if node in memo:
            memo.move_to_end(node)
        else:
            weights = martingale_weights(values[2])
            if not weights['feasible']:
                raise InfeasibleNodeError(node, weights['margin'])
            memo[node] = weights['q'] / weights['q'].sum()
            if len(memo) > MEMO_SIZE:
                memo.popitem(last=False)
        q = memo[node]
        branch = int(rng.choice(len(q), p=q)) + 1
        construction.advance(state, branch, values)

    return construction.processes(state)


def mc_lower_bound(spec, control, payoff, paths=10000, seed=0, corridor=None,
                   on_infeasible=RAISE, progress=False):
    """
    E_{Q_n}[F(S)] 의 몬테카를로 추정

    경로 p 는 default_rng([seed, p]) 로 표본을 뽑아 결과가 실행 순서와 무관하다.

    Args:
        spec (MarketSpec): 심플렉스 구동 시장
        control (PiecewiseVolControl): 제어
        payoff (Payoff): 지급 함수 (경로 의존 가능)
        paths (int): 경로 수
        seed (int): 시드
        on_infeasible (str): 'raise' 또는 'skip' (해당 경로를 버리고 센다)
        progress (bool): 진행 막대 표시

    Returns:
        dict: n, paths, estimate, stderr, infeasible_nodes
    """
    if paths < 1:
        raise ValueError(f"경로 수는 1 이상이어야 합니다: {paths}")
    if on_infeasible not in (RAISE, SKIP):
        raise ValueError(f"알 수 없는 on_infeasible: {on_infeasible}")

    construction = KusuokaConstruction(spec, control, corridor)
    control.validate(construction.corridor)

    memo = OrderedDict()
    prices = []
    infeasible = set()
    for p in tqdm(range(paths), desc="Q_n 경로", disable=not progress):
        rng = np.random.default_rng([seed, p])
        try:
            processes = sample_path(spec, control, rng, memo, construction)
        except InfeasibleNodeError as e:
            if on_infeasible == RAISE:
                logger.error(f"경로 {p} 에서 불능 노드: {e.node}")
                raise
            infeasible.add(e.node)
            continue
        prices.append(processes.S)

    if not prices:
        raise NumericalError(f"실행가능한 경로가 없습니다 (불능 노드 {len(infeasible)} 개)")

    values = np.asarray(payoff.evaluate_paths(np.array(prices)), dtype=float)
    estimate = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0

    logger.info(f"몬테카를로 하한: n={spec.n}, 경로 {len(values)}, 추정 {estimate:.6f} +- {stderr:.6f}")
    return {
        'n': int(spec.n),
        'paths': len(values),
        'estimate': estimate,
        'stderr': stderr,
        'infeasible_nodes': len(infeasible)
    }
