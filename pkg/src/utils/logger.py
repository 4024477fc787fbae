"""
로깅 설정 모듈
"""

import os
import logging
from logging.handlers import RotatingFileHandler


LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def setup_logger(config, level_override=None):
    """
    로거 설정

    Args:
        config (dict): 로깅 설정
            - level: 로깅 레벨 (DEBUG, INFO, WARNING, ERROR, CRITICAL)
            - file: 로그 파일 경로 (없으면 콘솔만 사용)
            - max_size: 최대 로그 파일 크기
            - backup_count: 백업 파일 수
        level_override (str, optional): 명령행에서 지정한 로깅 레벨

    Returns:
        logging.Logger: 설정된 루트 로거
    """
    log_config = config.get('logging', {})

    # 로깅 레벨 설정
    level_str = (level_override or log_config.get('level', 'INFO')).upper()
    level = getattr(logging, level_str, logging.INFO)

    logger = logging.getLogger()
    logger.setLevel(level)

    # 기존 핸들러 제거
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)

    # 콘솔 핸들러 추가 (결과 JSON 은 stdout 으로 나가므로 로그는 stderr)
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT, DATE_FORMAT))
    logger.addHandler(console_handler)

    # 파일 핸들러 추가
    log_file = log_config.get('file')
    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir)

        max_size = log_config.get('max_size', 10 * 1024 * 1024)  # 기본값 10MB
        backup_count = log_config.get('backup_count', 10)

        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=max_size,
            backupCount=backup_count,
            encoding='utf-8'
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT, DATE_FORMAT))
        logger.addHandler(file_handler)

    return logger


def log_price_result(logger, result):
    """
    초과헤지 가격 결과 로깅

    Args:
        logger: 로거 인스턴스
        result (dict): superreplication_price 결과
            - d, n, payoff: 문제 정보
            - primal, dual, gap: LP 값과 쌍대 간극
            - solver_iterations, wall_time: 계산 비용
    """
    message = f"가격 - d={result.get('d')} n={result.get('n')} payoff={result.get('payoff')} - "
    message += f"primal: {result.get('primal', float('nan')):.10f}, "
    message += f"dual: {result.get('dual', float('nan')):.10f}, "
    message += f"gap: {result.get('gap', float('nan')):.3e}, "
    message += f"반복: {result.get('solver_iterations', 0)}, "
    message += f"시간: {result.get('wall_time', 0.0):.2f}s"

    logger.info(message)


def log_check_result(logger, name, result):
    """
    가정 검사 결과 로깅

    Args:
        logger: 로거 인스턴스
        name (str): 검사 이름
        result (dict): 검사 결과 (passes, witness 등)
    """
    verdict = '통과' if result.get('passes') else '실패'
    message = f"검사 - {name} - {verdict}"

    witness = result.get('witness')
    if witness:
        message += f" - 반례 값: {witness.get('value')}"
    elif 'worst_norm' in result:
        message += f" - 최대 노름: {result['worst_norm']:.6f} (한계 {result['bound']:.6f})"

    if result.get('passes'):
        logger.info(message)
    else:
        logger.warning(message)


def log_convergence_row(logger, row):
    """
    수렴 실험 한 행 로깅

    Args:
        logger: 로거 인스턴스
        row (dict): n, value, limit, gap, runtime
    """
    logger.info(
        f"수렴 - n={row['n']} - V_n: {row['value']:.8f}, "
        f"극한: {row['limit']:.8f}, 간극: {row['gap']:.3e}, 시간: {row['runtime']:.2f}s"
    )
