"""
-*- coding: utf-8 -*-
@Author: li
@Email: lijianqiao2906@live.com
@FileName: exceptions.py
@DateTime: 2025/03/08 04:45:00
@Docs: 应用程序异常定义与命令行退出码映射
"""

from typing import Any

from pydantic import ValidationError as PydanticValidationError

from app.core.config import settings
from app.utils.logger import logger

# 退出码
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_CHECK_FAILED = 3


class MajorityError(Exception):
    """异常基类"""

    def __init__(
        self,
        exit_code: int = EXIT_NUMERICAL,
        message: str = "内部错误",
        detail: str | dict[str, Any] | None = None,
    ):
        self.exit_code = exit_code
        self.message = message
        self.detail = detail
        super().__init__(self.message)


# ==================== 用法类错误（退出码 1） ====================


class ParameterError(MajorityError):
    """参数错误异常"""

    def __init__(
        self,
        message: str = "参数错误",
        detail: str | dict[str, Any] | None = None,
        parameter: str | None = None,
        value: Any = None,
    ):
        self.parameter = parameter
        self.value = value
        super().__init__(exit_code=EXIT_USAGE, message=message, detail=detail)


class InvalidSpecError(ParameterError):
    """扩散模型定义无效"""

    def __init__(
        self,
        message: str = "扩散模型定义无效",
        detail: str | dict[str, Any] | None = None,
        label: str | None = None,
    ):
        self.label = label
        super().__init__(message=message, detail=detail)


class NoDecisionNeededError(ParameterError):
    """状态已处于决策集，无需再选择分量"""

    def __init__(self, message: str = "状态已位于决策集 D", state: tuple[float, ...] | None = None):
        self.state = state
        super().__init__(message=message, detail={"state": state} if state is not None else None)


class MissingDataError(ParameterError):
    """缺少所需数据（如未记录路径）"""

    def __init__(self, message: str = "缺少所需数据", detail: str | dict[str, Any] | None = None):
        super().__init__(message=message, detail=detail)


class UnsupportedDepthError(ParameterError):
    """多数树深度不受支持"""

    def __init__(self, depth: int, max_depth: int = 2):
        self.depth = depth
        self.max_depth = max_depth
        super().__init__(
            message=f"不支持的树深度: {depth}",
            detail={"depth": depth, "max_depth": max_depth},
        )


class InvalidComparisonError(ParameterError):
    """对比实验设置无效（例如两组使用相同种子）"""

    def __init__(self, message: str = "对比实验无效", detail: str | dict[str, Any] | None = None):
        super().__init__(message=message, detail=detail)


class OutOfDomainError(ParameterError):
    """扰动参数超出可解范围"""

    def __init__(self, message: str = "参数超出定义域", alpha: float | None = None, beta: float | None = None):
        self.alpha = alpha
        self.beta = beta
        super().__init__(message=message, detail={"alpha": alpha, "beta": beta})


class ConfigValidationError(ParameterError):
    """实验配置校验失败"""

    def __init__(self, message: str = "实验配置校验失败", errors: list[dict[str, Any]] | None = None):
        self.errors = errors or []
        super().__init__(message=message, detail={"errors": self.errors})

    @classmethod
    def from_pydantic(cls, exc: PydanticValidationError, source: str | None = None) -> "ConfigValidationError":
        """从 pydantic 校验异常构造，保留逐字段诊断信息"""
        errors = [
            {
                "loc": list(error.get("loc", [])),
                "msg": error.get("msg", ""),
                "type": error.get("type", ""),
            }
            for error in exc.errors()
        ]
        message = f"实验配置校验失败: {source}" if source else "实验配置校验失败"
        return cls(message=message, errors=errors)


# ==================== 数值类错误（退出码 2） ====================


class NumericalError(MajorityError):
    """数值计算失败"""

    def __init__(
        self,
        message: str = "数值计算失败",
        detail: str | dict[str, Any] | None = None,
        residual: float | None = None,
    ):
        self.residual = residual
        super().__init__(exit_code=EXIT_NUMERICAL, message=message, detail=detail)


class DegenerateIntervalError(NumericalError):
    """区间退化（a≈b）"""

    def __init__(self, a: float, b: float, denominator: float | None = None):
        self.a = a
        self.b = b
        super().__init__(
            message=f"区间退化: ({a}, {b})",
            detail={"a": a, "b": b, "denominator": denominator},
        )


class StencilPlacementError(NumericalError):
    """差分模板跨越决策集或切换平面"""

    def __init__(self, message: str = "差分模板位置无效", detail: str | dict[str, Any] | None = None):
        super().__init__(message=message, detail=detail)


class QuadratureError(NumericalError):
    """数值积分未达到误差目标"""

    def __init__(self, message: str = "数值积分失败", error_estimate: float | None = None, target: float | None = None):
        self.error_estimate = error_estimate
        self.target = target
        super().__init__(
            message=message,
            detail={"error_estimate": error_estimate, "target": target},
            residual=error_estimate,
        )


class ExtrapolationError(NumericalError):
    """外推不收敛"""

    def __init__(self, message: str = "外推不收敛", detail: str | dict[str, Any] | None = None):
        super().__init__(message=message, detail=detail)


# ==================== 验收失败（退出码 3） ====================


class AcceptanceCheckError(MajorityError):
    """验收检查未通过"""

    def __init__(self, failed: list[str], detail: str | dict[str, Any] | None = None):
        self.failed = failed
        super().__init__(
            exit_code=EXIT_CHECK_FAILED,
            message=f"验收检查未通过: {', '.join(failed)}",
            detail=detail,
        )


def handle_exception(exc: BaseException) -> int:
    """统一异常处理，记录日志并返回退出码

    Args:
        exc: 捕获的异常

    Returns:
        int: 进程退出码
    """
    if isinstance(exc, PydanticValidationError):
        exc = ConfigValidationError.from_pydantic(exc)

    if isinstance(exc, MajorityError):
        error_context = {
            "exception_type": exc.__class__.__name__,
            "exit_code": exc.exit_code,
            "detail": exc.detail,
            "parameter": getattr(exc, "parameter", None),
            "residual": getattr(exc, "residual", None),
        }
        # 过滤掉None值
        error_context = {k: v for k, v in error_context.items() if v is not None}
        logger.error(f"{exc.message}", **error_context)
        return exc.exit_code

    logger.exception(f"未处理的异常: {exc}")
    if settings.DEBUG:
        logger.debug("调试模式下保留完整异常栈")
    return EXIT_NUMERICAL
