"""MILK 的异常层级。每个异常携带 CLI 退出码：1 配置错误，2 数据错误，3 数值错误。"""

from typing import Optional


class MilkError(Exception):
    exit_code = 1


class ConfigError(MilkError):
    exit_code = 1


class ParameterError(ConfigError):
    pass


class DataError(MilkError):
    exit_code = 2


class ParseError(DataError):
    """line_no 为 None 时错误位置已包含在 message 中。"""

    def __init__(self, path, line_no: Optional[int], message: str):
        self.path = path
        self.line_no = line_no
        location = f"{path}:{line_no}" if line_no is not None else f"{path}"
        super().__init__(f"{location}: {message}")


class EmptyDatasetError(DataError):
    pass


class DimensionError(DataError):
    pass


class SplitError(DataError):
    pass


class ProtocolError(DataError):
    pass


class ImputeError(DataError):
    pass


class FitError(DataError):
    pass


class EmptyReportError(DataError):
    pass


class NumericalError(MilkError):
    exit_code = 3


class ContractError(NumericalError):
    pass


class DivergenceError(NumericalError):
    def __init__(self, message: str, last_good=None, diagnostics: dict | None = None):
        self.last_good = last_good
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class GradientCheckError(NumericalError):
    pass
