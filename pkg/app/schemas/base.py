"""
-*- coding: utf-8 -*-
@Author: li
@Email: lijianqiao2906@live.com
@FileName: base.py
@DateTime: 2025/06/20 00:00:00
@Docs: 基础Pydantic校验模型
"""

from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field

from app.core.enums import OutputFormat


class BaseSchema(BaseModel):
    """基础Schema类"""

    model_config = ConfigDict(
        use_enum_values=True,  # 使用枚举值
        validate_assignment=True,  # 赋值时验证
        str_strip_whitespace=True,  # 自动去除字符串空白
        frozen=False,  # 允许修改
    )


class BaseConfig(BaseSchema):
    """实验配置基类，拒绝未知字段"""

    model_config = ConfigDict(extra="forbid")

    out: Path = Field(default=Path("results"), description="输出目录")
    format: OutputFormat = Field(default=OutputFormat.CSV, description="表格输出格式")
    threads: int = Field(default=1, ge=1, le=256, description="工作线程数")


class Provenance(BaseSchema):
    """结果来源信息，不含时间戳以保证重复运行逐字节一致"""

    command: str = Field(description="子命令")
    config_hash: str = Field(description="规范化配置的 sha256")
    seed: int | None = Field(default=None, description="随机种子")
    version: str = Field(description="程序版本")
    schema_version: str = Field(description="输出格式版本")


class BaseResult(BaseSchema):
    """结果文档基类"""

    provenance: Provenance = Field(description="来源信息")
