"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: export.py
@DateTime: 2025/06/28 11:00:00
@Docs: 结果导出工具 - polars 表格与 pydantic 文档写盘、输出摘要
"""

import hashlib
from collections.abc import Iterable
from pathlib import Path

import polars as pl
from pydantic import BaseModel

from app.core.config import settings
from app.core.enums import OutputFormat
from app.utils.logger import logger


def with_schema_version(frame: pl.DataFrame) -> pl.DataFrame:
    """在首列插入 schema_version"""
    if "schema_version" in frame.columns:
        return frame
    return frame.select(pl.lit(settings.SCHEMA_VERSION).alias("schema_version"), pl.all())


def write_table(frame: pl.DataFrame, out_dir: Path, name: str, fmt: OutputFormat | str = OutputFormat.CSV) -> Path:
    """写出表格

    Args:
        frame: 数据表
        out_dir: 输出目录
        name: 不含扩展名的文件名
        fmt: csv（UTF-8、表头、'.' 小数点）或 json（行对象数组）

    Returns:
        Path: 写出的文件路径
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = OutputFormat(fmt)
    path = out_dir / f"{name}.{fmt.value}"
    frame = with_schema_version(frame)
    if fmt is OutputFormat.CSV:
        frame.write_csv(path)
    else:
        frame.write_json(path)
    logger.info(f"已写出表格: {path}", rows=frame.height)
    return path


def write_document(document: BaseModel, out_dir: Path, name: str) -> Path:
    """把 pydantic 文档写成缩进 JSON"""
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.json"
    path.write_text(document.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"已写出文档: {path}")
    return path


def outputs_digest(paths: Iterable[Path]) -> str:
    """按文件名排序后对文件名与内容整体计算 sha256"""
    digest = hashlib.sha256()
    for path in sorted(paths, key=lambda p: p.name):
        digest.update(path.name.encode("utf-8"))
        digest.update(path.read_bytes())
    return digest.hexdigest()
