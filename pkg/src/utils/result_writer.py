"""
결과 출력 모듈 (JSON / CSV)
"""

import io
import sys
import json
import logging
import math

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

TOOL_VERSION = '1.0.0'
FORMATS = ('json', 'csv')


def to_jsonable(value):
    """
    numpy 값/배열과 중첩 컨테이너를 JSON 직렬화 가능한 값으로 변환
    """
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return None
        return value
    if hasattr(value, 'describe'):
        return to_jsonable(value.describe())
    return value


class ResultWriter:
    """
    결과 문서를 stdout 또는 파일로 출력
    """

    def __init__(self, output_format='json', out=None, config_hash=None, stream=None):
        """
        ResultWriter 클래스 초기화

        Args:
            output_format (str): json 또는 csv
            out (str): 출력 파일 경로 (없으면 stdout)
            config_hash (str): 설정 해시
            stream: stdout 대체 스트림 (테스트용)
        """
        if output_format not in FORMATS:
            raise ValueError(f"알 수 없는 출력 형식: {output_format}")
        self.output_format = output_format
        self.out = out
        self.config_hash = config_hash
        self.stream = stream or sys.stdout

    @staticmethod
    def from_config(experiment, stream=None):
        """
        실행 설정에서 출력기 생성

        Args:
            experiment (ExperimentConfig): 실행 설정

        Returns:
            ResultWriter: 출력기
        """
        return ResultWriter(experiment.output_format, experiment.out, experiment.hash, stream)

    def document(self, command, payload):
        """
        공통 머리 (tool_version, config_hash, command) 를 붙인 JSON 문서
        """
        document = {
            'tool_version': TOOL_VERSION,
            'config_hash': self.config_hash,
            'command': command
        }
        document.update(to_jsonable(payload))
        return document

    def _emit(self, text, path):
        if path:
            with open(path, 'w', encoding='utf-8') as file:
                file.write(text)
            logger.info(f"결과를 저장했습니다: {path}")
        else:
            self.stream.write(text)
            if not text.endswith('\n'):
                self.stream.write('\n')

    def write(self, command, payload, rows=None, columns=None):
        """
        결과 출력

        json 형식은 문서를 out (또는 stdout) 에 쓴다.
        csv 형식은 rows 를 고정된 열 순서로 out (또는 stdout) 에 쓰고,
        out 이 지정되면 JSON 요약은 stdout 에 쓴다.

        Returns:
            dict: 출력한 JSON 문서
        """
        document = self.document(command, payload)
        text = json.dumps(document, indent=2, ensure_ascii=False)

        if self.output_format == 'csv' and rows is not None:
            frame = pd.DataFrame(to_jsonable(list(rows)), columns=columns)
            buffer = io.StringIO()
            frame.to_csv(buffer, index=False, float_format='%.17g')
            self._emit(buffer.getvalue(), self.out)
            if self.out:
                self._emit(text, None)
        else:
            self._emit(text, self.out)

        return document
