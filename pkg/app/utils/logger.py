"""
-*- coding: utf-8 -*-
@Author: li
@ProjectName: majority-switching
@Email: lijianqiao2906@live.com
@FileName: logger.py
@DateTime: 2025/03/08 03:51:08
@Docs: 日志配置：控制台 + 可选的按天滚动文件
"""

import sys
from functools import wraps
from pathlib import Path
from typing import Any

from loguru import logger

from app.core.config import settings

LOG_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss.SSS}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> | "
    "<level>{message}</level> | {extra}"
)

# 仿真日志按天切分，保留两周
_FILE_OPTIONS: dict[str, Any] = {
    "rotation": "00:00",
    "retention": "14 days",
    "compression": "zip",
    "encoding": "utf-8",
    "enqueue": True,
}


def _add_file_sink(log_dir: Path, stem: str, level: str) -> None:
    logger.add(log_dir / f"{stem}_{{time:YYYY-MM-DD}}.log", format=LOG_FORMAT, level=level, **_FILE_OPTIONS)


def setup_logger() -> None:
    """配置日志系统

    控制台写 stderr，表格与报告走文件输出，两者互不干扰
    """
    logger.remove()
    logger.add(sys.stderr, format=LOG_FORMAT, level=settings.LOG_LEVEL, colorize=None)

    if not settings.LOG_TO_FILE:
        return

    log_dir = settings.LOG_PATH
    log_dir.mkdir(parents=True, exist_ok=True)
    _add_file_sink(log_dir, "majority", "DEBUG")
    _add_file_sink(log_dir, "majority_error", "ERROR")


def _config_context(args: tuple[Any, ...]) -> dict[str, Any]:
    """从首个参数（实验配置）中取出种子与规模"""
    if not args:
        return {}
    config = args[0]
    return {key: getattr(config, key) for key in ("seed", "paths", "step") if hasattr(config, key)}


def log_function_calls(*, include_args: bool = False, include_result: bool = False):
    """命令入口的日志装饰器

    Args:
        include_args: 是否记录完整的配置参数
        include_result: 是否记录返回值摘要
    """

    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            command = func.__name__.removeprefix("cmd_")
            context = _config_context(args)
            if include_args:
                context["args"] = f"args={args}, kwargs={kwargs}"[:500]
            logger.debug(f"命令 {command} 启动", **context)

            try:
                result = func(*args, **kwargs)
            except Exception as e:
                code = getattr(e, "exit_code", None)
                logger.warning(f"命令 {command} 失败", error_type=e.__class__.__name__, exit_code=code)
                raise

            if include_result:
                logger.debug(f"命令 {command} 返回", result=str(result)[:200])
            return result

        return wrapper

    return decorator


setup_logger()

__all__ = ["logger", "log_function_calls", "setup_logger"]
