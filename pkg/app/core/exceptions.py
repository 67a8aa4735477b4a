from typing import Any, Dict, Optional


class SolverError(Exception):
    """求解器异常基类，exit_code 即命令行退出码"""

    exit_code = 1

    def __init__(self, message: str, detail: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.detail = detail or {}


# 输入 / 校验类错误，退出码 1
class InputError(SolverError):
    exit_code = 1


class BisetError(InputError):
    """双集合内部不包含于外部"""


class NotLaminar(InputError):
    pass


class ModeMismatch(InputError):
    pass


class NodeNotBounded(InputError):
    pass


class BadAlpha(InputError):
    pass


class BadR(InputError):
    pass


class TooLarge(InputError):
    pass


class NotTerminal(InputError):
    pass


class NotSimple(InputError):
    pass


class InstanceFormatError(InputError):
    pass


class MalformedCut(InputError):
    pass


# 不可行，退出码 2
class Infeasible(SolverError):
    exit_code = 2


class InsufficientConnectivity(Infeasible):
    pass


# 定理违背诊断，退出码 3
class TheoremViolation(SolverError):
    exit_code = 3


class Stuck(TheoremViolation):
    pass


class NoSwapFound(TheoremViolation):
    pass


class NotCompletable(TheoremViolation):
    pass


class CertificateViolation(TheoremViolation):
    pass


class LPError(TheoremViolation):
    """单纯形内部不一致，只可能是实现错误"""
