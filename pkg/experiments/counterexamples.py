"""
반례 재현

- assumption-essential: 가정이 깨진 회랑의 증인 값, Gamma 소속, 회랑 검사 실패와 가격 감소 추세
- basis-dependence: 같은 비용 계수라도 아핀 기저에 따라 극한 가격이 달라지는 예
- crr-trivial: 불완비 (곱 CRR) 구동에서 초과헤지 가격이 자명해지는 예
"""

import logging
import math

import numpy as np

from src.corridor.volatility_corridor import (
    NotInGammaError, VolatilityCorridor, check_assumption21, check_lemma61,
    corridor_from_spec, psi, sup_linear_over_gamma
)
from src.limit.closed_form import EXCHANGE_WEIGHTS, margrabe_limit_price
from src.market.basis import planar_basis
from src.market.model import PRODUCT_CRR, SIMPLEX, MarketSpec, step_factors
from src.market.payoffs import MinOfAssets, TerminalFunction
from src.pricing.superreplication import superreplication_price
from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

NAMES = ('assumption-essential', 'basis-dependence', 'crr-trivial')
DECREASE_TOLERANCE = 1e-6


def assumption_essential(n_values=(2, 4, 6), options=None):
    """
    sigma = I, kappa_2^+ = 3 sqrt(2)/4, 나머지 비용 0, 평면 기저

    beta = diag(0, -1/2) 에서 v_1 beta (sigma'+beta)^{-1} v_1' = -2 이고 a = diag(1, 0) 은 Gamma 에 속하지만
    회랑 검사는 실패한다. 오목 함수 sqrt(S^2_T) 의 초과헤지 가격 V_n 은 n 에 대해 감소한다.
    작은 n 에서는 V_n 이 아직 sqrt(s_2) 위에 있으므로 엄격한 가격 차이는 판정에 쓰지 않는다 (DESIGN.md 참고).
    """
    basis = planar_basis(0.0)
    kappa_plus = np.array([0.0, 3.0 * math.sqrt(2.0) / 4.0])

    def market(n):
        return MarketSpec(
            d=2, n=n, sigma=np.eye(2), s0=np.ones(2),
            kappa_plus=kappa_plus, kappa_minus=np.zeros(2), driver=SIMPLEX, basis=basis
        )

    corr = corridor_from_spec(market(n_values[0]))

    beta = np.diag([0.0, -0.5])
    v1 = basis.vertices[0]
    witness = float(v1 @ beta @ np.linalg.inv(corr.sigma.T + beta) @ v1)

    try:
        psi(corr, np.diag([1.0, 0.0]))
        in_gamma = True
    except NotInGammaError:
        in_gamma = False

    bound = 1.0
    rows = []
    for n in n_values:
        spec = market(n)
        upper = float(spec.s0[1] * step_factors(spec)[:, 1].max() ** n) * 1.01
        payoff = TerminalFunction.from_function(1, np.sqrt, 0.0, upper)
        price = superreplication_price(spec, payoff, options, with_primal=False)['value']
        rows.append({'n': n, 'price': price, 'gap_to_bound': price - bound})
        logger.info(f"assumption-essential n={n}: V_n={price:.10g}")

    decreasing = all(
        later['price'] < earlier['price'] - DECREASE_TOLERANCE
        for earlier, later in zip(rows, rows[1:])
    )
    lemma = check_lemma61(corr)
    assumption = check_assumption21(corr)
    return {
        'name': 'assumption-essential',
        'witness_value': witness,
        'expected_witness_value': -2.0,
        'diag_1_0_in_gamma': in_gamma,
        'lemma61': lemma,
        'assumption': assumption,
        'rows': rows,
        'frictionless_bound': bound,
        'decreasing': decreasing,
        'passes': abs(witness + 2.0) <= 1e-12 and in_gamma and not lemma['passes'] and decreasing
    }


def exchange_sup_formula(basis, kappa2_plus):
    """
    2 + (2 kappa_2^+ / 3) sum_j max(v_j1 - v_j2, 0)
    """
    v = basis.vertices
    return 2.0 + (2.0 * kappa2_plus / 3.0) * float(np.sum(np.maximum(v[:, 0] - v[:, 1], 0.0)))


def basis_dependence(kappa2_plus=0.2, angle=math.pi / 12):
    """
    sigma = I, kappa^+ = (0, kappa_2^+), kappa^- = 0 에서 교환 옵션 극한 가격을 두 기저로 비교
    """
    s0 = np.ones(2)
    rows = []
    for label, rotation in (('planar', 0.0), ('rotated', angle)):
        basis = planar_basis(rotation)
        corr = VolatilityCorridor(basis, np.eye(2), np.array([0.0, kappa2_plus]), np.zeros(2))
        computed = sup_linear_over_gamma(corr, EXCHANGE_WEIGHTS)['value']
        rows.append({
            'basis': label,
            'angle': rotation,
            'sup_value': computed,
            'formula_value': exchange_sup_formula(basis, kappa2_plus),
            'limit_price': margrabe_limit_price(corr, s0)
        })

    difference = abs(rows[0]['limit_price'] - rows[1]['limit_price'])
    formula_error = max(abs(row['sup_value'] - row['formula_value']) for row in rows)
    return {
        'name': 'basis-dependence',
        'kappa2_plus': kappa2_plus,
        'bases': rows,
        'price_difference': difference,
        'formula_error': formula_error,
        'passes': difference > 1e-3 and formula_error <= 1e-12
    }


def crr_trivial(n_values=(1, 2, 3, 4, 5, 6), options=None):
    """
    d=2, s=(1,1), kappa=0, F = min(S^1, S^2): 곱 CRR 에서 V_n = s_1, 심플렉스 구동에서는 V_n < s_1
    """
    payoff = MinOfAssets()
    rows = []
    for n in n_values:
        row = {'n': n}
        crr = MarketSpec(d=2, n=n, sigma=np.eye(2), s0=np.ones(2),
                         kappa_plus=np.zeros(2), kappa_minus=np.zeros(2), driver=PRODUCT_CRR)
        row['product_crr'] = superreplication_price(crr, payoff, options, with_primal=False)['value']
        try:
            simplex = MarketSpec(d=2, n=n, sigma=np.eye(2), s0=np.ones(2),
                                 kappa_plus=np.zeros(2), kappa_minus=np.zeros(2), driver=SIMPLEX)
            row['simplex'] = superreplication_price(simplex, payoff, options, with_primal=False)['value']
        except ConfigurationError as e:
            logger.info(f"n={n} 에서 심플렉스 시장을 만들 수 없습니다: {e}")
            row['simplex'] = None
        rows.append(row)

    trivial = all(abs(row['product_crr'] - 1.0) <= 1e-9 for row in rows)
    gap = all(row['simplex'] is None or row['simplex'] <= 1.0 - 0.01 for row in rows)
    return {
        'name': 'crr-trivial',
        'expected_value': 1.0,
        'rows': rows,
        'passes': trivial and gap
    }


def run_counterexample(name, options=None):
    """
    이름으로 반례 실행
    """
    if name == 'assumption-essential':
        return assumption_essential(options=options)
    if name == 'basis-dependence':
        return basis_dependence()
    if name == 'crr-trivial':
        return crr_trivial(options=options)
    raise ConfigurationError(f"알 수 없는 반례: {name} (가능: {', '.join(NAMES)})")
