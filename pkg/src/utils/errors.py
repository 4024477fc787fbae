"""
공통 예외 정의 모듈

설정 오류는 종료 코드 2, 수치 계산 실패는 종료 코드 3 으로 매핑된다.
"""


class ConfigurationError(ValueError):
    """
    잘못된 설정/입력으로 인한 오류
    """


class NumericalError(RuntimeError):
    """
    수치 계산 실패 (LP 실패, 안정성 조건 위반 등)
    """
