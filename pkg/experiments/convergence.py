"""
수렴 실험: 여러 n 에 대해 V_n 을 계산하고 극한 가격과의 간극을 기록
"""

import logging
import math
import time
import concurrent.futures

from tqdm import tqdm

from src.corridor.volatility_corridor import corridor_from_spec
from src.limit.bsb_pde import limit_price
from src.pricing.superreplication import DEFAULT_NODE_CAP, check_tree_size, superreplication_price
from src.utils.logger import log_convergence_row

logger = logging.getLogger(__name__)

COLUMNS = ['n', 'value', 'limit', 'gap', 'runtime']


def _price_row(task):
    spec, payoff, options, node_cap, limit = task
    started = time.perf_counter()
    result = superreplication_price(spec, payoff, options, node_cap, with_primal=False)
    value = result['value']
    return {
        'n': int(spec.n),
        'value': value,
        'limit': limit,
        'gap': abs(value - limit) if limit is not None else math.nan,
        'runtime': time.perf_counter() - started
    }


def trend_statistic(rows):
    """
    gap(n_max) / gap(n_min) (첫 간극이 0 이면 0 또는 inf)
    """
    first, last = rows[0]['gap'], rows[-1]['gap']
    if math.isnan(first) or math.isnan(last):
        return math.nan
    if first == 0:
        return 0.0 if last == 0 else math.inf
    return last / first


def run_convergence(spec, payoff, n_list, options=None, node_cap=DEFAULT_NODE_CAP,
                    jobs=1, grid=200, time_steps=400, progress=False):
    """
    n 목록에 대한 수렴 표

    Args:
        spec (MarketSpec): 기준 시장 (n 은 목록 값으로 바뀜)
        payoff (Payoff): 지급 함수
        n_list (list): 순증가 n 목록
        options (dict, optional): solve_lp 옵션
        jobs (int): 프로세스 수 (1 이면 순차 실행)
        grid, time_steps: 극한 가격이 PDE 일 때의 격자

    Returns:
        dict: rows (n 순서), limit, limit_method, trend
    """
    specs = [spec.with_n(n) for n in n_list]
    for item in specs:
        check_tree_size(item, node_cap)

    if spec.basis is not None and getattr(payoff, 'terminal_only', False):
        limit = limit_price(corridor_from_spec(spec), spec.s0, payoff, grid, time_steps)
    else:
        logger.warning("극한 가격을 계산할 수 없는 설정입니다 (ProductCRR 구동 또는 경로 의존 지급 함수).")
        limit = {'value': None, 'method': None}

    tasks = [(item, payoff, options, node_cap, limit['value']) for item in specs]
    if jobs > 1 and len(tasks) > 1:
        results = {}
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = {executor.submit(_price_row, task): task[0].n for task in tasks}
            for future in tqdm(concurrent.futures.as_completed(futures), total=len(futures),
                               desc="수렴 실험", disable=not progress):
                results[futures[future]] = future.result()
        rows = [results[n] for n in sorted(results)]
    else:
        rows = [_price_row(task) for task in tqdm(tasks, desc="수렴 실험", disable=not progress)]

    for row in rows:
        if row['limit'] is not None:
            log_convergence_row(logger, row)

    return {
        'rows': rows,
        'limit': limit['value'],
        'limit_method': limit['method'],
        'trend': trend_statistic(rows)
    }
