"""
설정 파일 로드 및 검증 모듈
"""

import os
import json
import hashlib
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from src.construction.controls import FeedbackRule, PiecewiseVolControl
from src.market.basis import build_simplex_basis, planar_basis
from src.market.model import SIMPLEX, MarketSpec
from src.market.payoffs import PAYOFF_KINDS, TerminalFunction
from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULTS = {
    'logging': {'level': 'INFO', 'file': None, 'max_size': 10 * 1024 * 1024, 'backup_count': 5},
    'pricer': {'node_cap': 100000},
    'lp': {'tolerance': 1e-7, 'pivot_tolerance': 1e-9, 'max_iterations': 200000, 'refactor_every': 64},
    'pde': {'grid': 200, 'time_steps': 400},
    'simulation': {'paths': 10000, 'seed': 0},
    'check': {'grid_per_axis': 5},
}

# terminal_function 에서 이름으로 고를 수 있는 1 변수 함수
NAMED_FUNCTIONS = {
    'sqrt': np.sqrt,
    'log': np.log,
    'identity': lambda x: x,
    'square': np.square,
}


def load_yaml_config(file_path):
    """
    YAML 설정 파일 로드

    Args:
        file_path (str): 설정 파일 경로

    Returns:
        dict: 설정 데이터 (파일이 없거나 읽을 수 없으면 None)
    """
    try:
        if not os.path.exists(file_path):
            logger.error(f"설정 파일이 존재하지 않습니다: {file_path}")
            return None

        with open(file_path, 'r', encoding='utf-8') as file:
            config = yaml.safe_load(file)

        return config if config is not None else {}

    except yaml.YAMLError as e:
        logger.error(f"설정 파일 로드 중 오류 발생: {e}")
        return None


def validate_config(config):
    """
    설정 유효성 검사 (누락 항목은 경고 후 기본값으로 채움)

    Args:
        config (dict): 설정 데이터

    Returns:
        bool: 유효성 검사 결과
    """
    if not isinstance(config, dict):
        logger.error("설정 최상위가 매핑이 아닙니다.")
        return False

    for section, defaults in DEFAULTS.items():
        if section not in config or config[section] is None:
            logger.warning(f"{section} 설정 항목이 누락되었습니다. 기본값을 사용합니다.")
            config[section] = {}
        if not isinstance(config[section], dict):
            logger.error(f"{section} 설정 항목이 매핑이 아닙니다.")
            return False
        for key, value in defaults.items():
            config[section].setdefault(key, value)

    if config['pricer']['node_cap'] < 1:
        logger.error(f"pricer.node_cap 은 양수여야 합니다: {config['pricer']['node_cap']}")
        return False
    if config['pde']['grid'] < 5:
        logger.error(f"pde.grid 가 너무 작습니다: {config['pde']['grid']}")
        return False
    if config['simulation']['paths'] < 1:
        logger.error(f"simulation.paths 는 1 이상이어야 합니다: {config['simulation']['paths']}")
        return False

    return True


def _matrix(value, d, name):
    array = np.asarray(value, dtype=float)
    if array.size != d * d:
        raise ConfigurationError(f"{name} 은 {d}x{d} 행렬이어야 합니다 (원소 {array.size} 개)")
    return array.reshape(d, d)


def _vector(value, d, name):
    array = np.broadcast_to(np.asarray(value, dtype=float), (d,)) if np.ndim(value) == 0 else np.asarray(value, dtype=float)
    if array.shape != (d,):
        raise ConfigurationError(f"{name} 은 길이 {d} 벡터여야 합니다: {array.shape}")
    return array


def _basis(d, rotation):
    if rotation is None:
        return build_simplex_basis(d)
    if np.ndim(rotation) == 0:
        if d != 2:
            raise ConfigurationError("회전 각도는 d=2 에서만 지원합니다 (그 외에는 직교 행렬을 지정).")
        return planar_basis(float(rotation))
    return build_simplex_basis(d).rotated(_matrix(rotation, d, 'basis_rotation'))


def load_market_spec(source):
    """
    시장 설정 -> MarketSpec

    Args:
        source (str 또는 dict): YAML 파일 경로 또는 market 매핑
            - d, n, sigma (행 우선 d*d 또는 중첩 목록), s0, kappa_plus, kappa_minus
            - driver: simplex | product_crr
            - basis_rotation: d=2 회전 각도 (라디안) 또는 d x d 직교 행렬

    Returns:
        MarketSpec: 시장
    """
    if isinstance(source, str):
        data = load_yaml_config(source)
        if data is None:
            raise ConfigurationError(f"시장 설정 파일을 읽을 수 없습니다: {source}")
        data = data.get('market', data)
    else:
        data = source

    missing = [key for key in ('d', 'n', 'sigma', 's0') if key not in data]
    if missing:
        logger.error(f"시장 설정 필수 항목 누락: {missing}")
        raise ConfigurationError(f"시장 설정 필수 항목이 누락되었습니다: {missing}")

    d = int(data['d'])
    driver = data.get('driver', SIMPLEX)
    basis = _basis(d, data.get('basis_rotation')) if driver == SIMPLEX else None

    return MarketSpec(
        d=d,
        n=int(data['n']),
        sigma=_matrix(data['sigma'], d, 'sigma'),
        s0=_vector(data['s0'], d, 's0'),
        kappa_plus=_vector(data.get('kappa_plus', 0.0), d, 'kappa_plus'),
        kappa_minus=_vector(data.get('kappa_minus', 0.0), d, 'kappa_minus'),
        driver=driver,
        basis=basis
    )


def load_payoff(data, d=None):
    """
    지급 함수 설정 -> Payoff

    Args:
        data (dict): kind 와 매개변수
            - constant: value
            - call: strike, asset (0 부터), basket_call: weights, strike
            - exchange, min: 매개변수 없음
            - terminal_function: asset, function (sqrt|log|identity|square), lower, upper, points
              또는 assets, axes, values
            - lookback_max: asset, asian_call: asset, strike
        d (int, optional): 자산 수 (call 가중치 생성용)

    Returns:
        Payoff: 지급 함수
    """
    if not isinstance(data, dict) or 'kind' not in data:
        raise ConfigurationError(f"지급 함수 설정에 kind 가 없습니다: {data}")

    kind = data['kind']
    if kind not in PAYOFF_KINDS:
        raise ConfigurationError(f"알 수 없는 지급 함수: {kind} (가능: {sorted(PAYOFF_KINDS)})")
    params = {key: value for key, value in data.items() if key != 'kind'}

    if kind == 'call':
        asset = int(params.get('asset', 0))
        size = d if d is not None else asset + 1
        weights = np.zeros(size)
        weights[asset] = 1.0
        return PAYOFF_KINDS[kind](weights, params['strike'])

    if kind == 'terminal_function' and 'function' in params:
        name = params['function']
        if name not in NAMED_FUNCTIONS:
            raise ConfigurationError(f"알 수 없는 함수 이름: {name}")
        return TerminalFunction.from_function(
            int(params.get('asset', 0)), NAMED_FUNCTIONS[name],
            float(params['lower']), float(params['upper']), int(params.get('points', 2001))
        )

    try:
        return PAYOFF_KINDS[kind](**params)
    except TypeError as e:
        raise ConfigurationError(f"지급 함수 {kind} 매개변수가 잘못되었습니다: {params}") from e


def load_control(data, d):
    """
    제어 설정 -> PiecewiseVolControl

    Args:
        data (dict): breakpoints, targets (행렬 또는 feedback 매핑), epsilon
        d (int): 자산 수
    """
    targets = []
    for target in data['targets']:
        if isinstance(target, dict):
            targets.append(FeedbackRule(
                inputs=target['inputs'],
                axes=target['axes'],
                values=target['values']
            ))
        else:
            targets.append(_matrix(target, d, 'control target'))

    return PiecewiseVolControl(
        data.get('breakpoints', [0.0, 1.0]),
        targets,
        float(data.get('epsilon', 1e-6))
    )


def config_hash(config):
    """
    정규화된 JSON 덤프의 sha256
    """
    text = json.dumps(config, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


@dataclass
class ExperimentConfig:
    """
    명령 하나를 실행하는 데 필요한 모든 설정
    """
    config: dict
    market: dict
    spec: MarketSpec
    payoff: Optional[object] = None
    control: Optional[PiecewiseVolControl] = None
    n_list: list = field(default_factory=list)
    seed: int = 0
    grid: int = 200
    paths: int = 10000
    jobs: int = 1
    output_format: str = 'json'
    out: Optional[str] = None
    dump_lp: Optional[str] = None
    surface: Optional[str] = None

    @property
    def hash(self):
        return config_hash({'config': self.config, 'market': self.market, 'n_list': self.n_list,
                            'seed': self.seed, 'grid': self.grid, 'paths': self.paths})


def load_experiment_config(config_path="config/config.yaml", market_path=None, overrides=None):
    """
    전역 설정과 시장 설정을 합쳐 ExperimentConfig 생성

    Args:
        config_path (str): 전역 설정 파일 경로 (없으면 기본값)
        market_path (str): 시장/지급 함수 설정 파일 경로
        overrides (dict, optional): 명령행 값 (n, seed, grid, paths, jobs, format, out, dump_lp, surface)

    Returns:
        ExperimentConfig: 실행 설정
    """
    overrides = {key: value for key, value in (overrides or {}).items() if value is not None}

    config = load_yaml_config(config_path) if config_path and os.path.exists(config_path) else {}
    if config is None or not validate_config(config):
        raise ConfigurationError(f"전역 설정이 유효하지 않습니다: {config_path}")

    if not market_path:
        raise ConfigurationError("시장 설정 파일 (--market) 이 필요합니다.")
    market = load_yaml_config(market_path)
    if market is None:
        raise ConfigurationError(f"시장 설정 파일을 읽을 수 없습니다: {market_path}")
    if 'market' not in market:
        raise ConfigurationError(f"시장 설정에 market 항목이 없습니다: {market_path}")

    n_list = [int(n) for n in overrides.get('n', market.get('n_list', [market['market'].get('n', 1)]))]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ConfigurationError(f"n 목록은 순증가해야 합니다: {n_list}")

    market_data = dict(market['market'])
    market_data['n'] = n_list[0] if len(n_list) == 1 else market_data.get('n', n_list[0])
    spec = load_market_spec(market_data)

    payoff = load_payoff(market['payoff'], spec.d) if 'payoff' in market else None
    control = load_control(market['control'], spec.d) if 'control' in market else None

    experiment = ExperimentConfig(
        config=config,
        market=market,
        spec=spec,
        payoff=payoff,
        control=control,
        n_list=n_list,
        seed=int(overrides.get('seed', config['simulation']['seed'])),
        grid=int(overrides.get('grid', config['pde']['grid'])),
        paths=int(overrides.get('paths', config['simulation']['paths'])),
        jobs=int(overrides.get('jobs', 1)),
        output_format=overrides.get('format', 'json'),
        out=overrides.get('out'),
        dump_lp=overrides.get('dump_lp'),
        surface=overrides.get('surface')
    )
    logger.debug(f"실행 설정 로드: 시장 {market_path}, n={n_list}, 해시 {experiment.hash[:12]}")
    return experiment
