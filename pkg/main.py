#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
거래비용 스케일링 하의 초과헤지 가격 계산기 메인 실행 파일
"""

import sys
import argparse
import logging

from experiments.convergence import COLUMNS as CONVERGENCE_COLUMNS
from experiments.convergence import run_convergence
from experiments.counterexamples import NAMES as COUNTEREXAMPLES
from experiments.counterexamples import run_counterexample
from src.construction.simulation import mc_lower_bound
from src.corridor.volatility_corridor import check_assumption21, check_lemma61, corridor_from_spec
from src.limit.bsb_pde import GExpectationProblem, bsb_pde_price, limit_price, surface_frame
from src.limit.closed_form import kusuoka_band_d1
from src.lp.problem import dump_lp
from src.pricing.superreplication import PRICE_COLUMNS, build_dual_lp, build_primal_lp, price_table
from src.utils.config_loader import config_hash, load_experiment_config, load_yaml_config, validate_config
from src.utils.errors import ConfigurationError, NumericalError
from src.utils.logger import log_check_result, log_price_result, setup_logger
from src.utils.result_writer import ResultWriter


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CHECK_FAILED = 4

logger = logging.getLogger(__name__)


def _n_list(text):
    try:
        return [int(item) for item in text.split(',') if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"n 목록은 쉼표로 구분한 정수여야 합니다: {text}") from e


def parse_arguments(argv=None):
    """
    명령행 인자 파싱
    """
    parser = argparse.ArgumentParser(description='거래비용 스케일링 하의 초과헤지 가격 계산기')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, default='config/config.yaml',
                        help='전역 설정 파일 경로 (기본값: config/config.yaml)')
    common.add_argument('--market', type=str, help='시장/지급 함수 설정 파일 경로')
    common.add_argument('--out', type=str, help='결과 파일 경로 (없으면 stdout)')
    common.add_argument('--n', type=_n_list, help='기간 수 (쉼표로 구분한 목록 가능)')
    common.add_argument('--seed', type=int, help='난수 시드')
    common.add_argument('--grid', type=int, help='PDE 격자 노드 수')
    common.add_argument('--paths', type=int, help='몬테카를로 경로 수')
    common.add_argument('--format', type=str, choices=['json', 'csv'], default='json', help='출력 형식')
    common.add_argument('--jobs', type=int, default=1, help='수렴 실험 프로세스 수')
    common.add_argument('--log-level', type=str, help='로깅 레벨 (설정 파일보다 우선)')

    commands = parser.add_subparsers(dest='command', required=True)
    price = commands.add_parser('price', parents=[common], help='초과헤지 가격 V_n')
    price.add_argument('--dump-lp', type=str, help='n 별 쌍대/원 LP 를 평문으로 저장할 경로 접두사')
    limit = commands.add_parser('limit', parents=[common], help='극한 가격')
    limit.add_argument('--surface', type=str, help='PDE 초기/만기 가치 면 CSV 경로')
    commands.add_parser('converge', parents=[common], help='n 목록에 대한 수렴 표')
    commands.add_parser('check', parents=[common], help='회랑 가정 검사')
    commands.add_parser('simulate', parents=[common], help='구성된 측도 아래 몬테카를로 하한')
    counterexample = commands.add_parser('counterexample', parents=[common], help='반례 재현')
    counterexample.add_argument('name', choices=COUNTEREXAMPLES)

    return parser.parse_args(argv)


def _overrides(args):
    return {
        'n': args.n,
        'seed': args.seed,
        'grid': args.grid,
        'paths': args.paths,
        'jobs': args.jobs,
        'format': args.format,
        'out': args.out,
        'dump_lp': getattr(args, 'dump_lp', None),
        'surface': getattr(args, 'surface', None)
    }


def _lp_options(config):
    return dict(config['lp'])


def _require_payoff(experiment):
    if experiment.payoff is None:
        raise ConfigurationError("시장 설정에 payoff 항목이 필요합니다.")
    return experiment.payoff


def _dump_pricing_lps(spec, payoff, experiment):
    node_cap = experiment.config['pricer']['node_cap']
    for label, build in (('dual', build_dual_lp), ('primal', build_primal_lp)):
        path = f"{experiment.dump_lp}.n{spec.n}.{label}.lp"
        dump_lp(build(spec, payoff, node_cap), path)
        logger.info(f"{label} LP 저장: {path}")


def cmd_price(experiment):
    payoff = _require_payoff(experiment)
    specs = [experiment.spec.with_n(n) for n in experiment.n_list]
    if experiment.dump_lp:
        for spec in specs:
            _dump_pricing_lps(spec, payoff, experiment)

    rows = price_table(specs, payoff, _lp_options(experiment.config),
                       experiment.config['pricer']['node_cap'], with_primal=True)
    results = [row.pop('result') for row in rows]
    for result in results:
        log_price_result(logger, result)

    payload = results[0] if len(results) == 1 else {'results': results}
    ResultWriter.from_config(experiment).write('price', payload, rows, list(PRICE_COLUMNS))
    return EXIT_OK


def cmd_limit(experiment):
    payoff = _require_payoff(experiment)
    spec = experiment.spec
    corr = corridor_from_spec(spec)
    result = limit_price(corr, spec.s0, payoff, experiment.grid, experiment.config['pde']['time_steps'])
    if corr.d == 1:
        result['band'] = kusuoka_band_d1(corr)
    result['payoff'] = payoff
    logger.info(f"극한 가격 ({result['method']}): {result['value']:.10f}")
    if experiment.surface:
        problem = GExpectationProblem(corr, spec.s0, payoff)
        _, surface = bsb_pde_price(problem, experiment.grid, experiment.config['pde']['time_steps'],
                                   return_surface=True)
        surface_frame(surface).to_csv(experiment.surface, index=False, float_format='%.17g')
        logger.info(f"PDE 가치 면 저장: {experiment.surface}")
        result['surface'] = experiment.surface
    ResultWriter.from_config(experiment).write('limit', result, [result], ['method', 'value'])
    return EXIT_OK


def cmd_converge(experiment):
    payoff = _require_payoff(experiment)
    summary = run_convergence(
        experiment.spec, payoff, experiment.n_list,
        options=_lp_options(experiment.config),
        node_cap=experiment.config['pricer']['node_cap'],
        jobs=experiment.jobs,
        grid=experiment.grid,
        time_steps=experiment.config['pde']['time_steps'],
        progress=True
    )
    ResultWriter.from_config(experiment).write('converge', summary, summary['rows'], CONVERGENCE_COLUMNS)
    return EXIT_OK


def cmd_check(experiment):
    corr = corridor_from_spec(experiment.spec)
    lemma = check_lemma61(corr)
    assumption = check_assumption21(corr, experiment.config['check']['grid_per_axis'], experiment.seed)
    log_check_result(logger, 'lemma61', lemma)
    log_check_result(logger, 'assumption', assumption)

    payload = {'corridor': corr, 'lemma61': lemma, 'assumption': assumption}
    ResultWriter.from_config(experiment).write('check', payload)
    return EXIT_OK if assumption['passes'] else EXIT_CHECK_FAILED


def cmd_simulate(experiment):
    payoff = _require_payoff(experiment)
    if experiment.control is None:
        raise ConfigurationError("시장 설정에 control 항목이 필요합니다.")
    result = mc_lower_bound(experiment.spec, experiment.control, payoff,
                            experiment.paths, experiment.seed, progress=True)
    ResultWriter.from_config(experiment).write('simulate', result, [result],
                                               ['n', 'paths', 'estimate', 'stderr', 'infeasible_nodes'])
    return EXIT_OK


def cmd_counterexample(args, config):
    result = run_counterexample(args.name, _lp_options(config))
    verdict = '재현됨' if result['passes'] else '재현 실패'
    logger.info(f"반례 {args.name}: {verdict}")
    writer = ResultWriter(args.format, args.out, config_hash({'config': config, 'counterexample': args.name}))
    writer.write('counterexample', result, result.get('rows', result.get('bases')))
    return EXIT_OK if result['passes'] else EXIT_CHECK_FAILED


COMMANDS = {
    'price': cmd_price,
    'limit': cmd_limit,
    'converge': cmd_converge,
    'check': cmd_check,
    'simulate': cmd_simulate,
}


def main(argv=None):
    """
    메인 함수

    Returns:
        int: 종료 코드 (0 정상, 2 설정 오류, 3 수치 실패, 4 검사 실패)
    """
    args = parse_arguments(argv)

    config = load_yaml_config(args.config) or {}
    if not validate_config(config):
        print("설정 로드 실패. 프로그램을 종료합니다.", file=sys.stderr)
        return EXIT_CONFIG
    setup_logger(config, args.log_level)

    try:
        if args.command == 'counterexample':
            return cmd_counterexample(args, config)
        experiment = load_experiment_config(args.config, args.market, _overrides(args))
        return COMMANDS[args.command](experiment)

    except ConfigurationError as e:
        logger.error(f"설정 오류: {e}")
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error(f"수치 계산 실패: {e}")
        return EXIT_NUMERICAL
    except ValueError as e:
        logger.error(f"입력 오류: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
