"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: base_service.py
@DateTime: 2025/06/20 00:00:00
@Docs: 服务层基类，提供配置加载、来源信息、批量执行与结果写出
"""

import tomllib
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any

import polars as pl
from pydantic import BaseModel, ValidationError

from app.core.config import settings
from app.core.enums import CommandName
from app.core.exceptions import ConfigValidationError, ParameterError
from app.schemas.base import BaseConfig, Provenance
from app.simulation.batch_runner import BatchRunner
from app.utils.common_utils import Timer, calculate_hash, canonical_json
from app.utils.export import write_document, write_table
from app.utils.logger import logger

# 同一种子下不同实验臂的随机数流间隔，单臂批次数不超过该值
STREAM_STRIDE = 1_000

# 不影响结果数值的字段，不参与配置哈希
_HASH_EXCLUDE = {"out", "threads"}


def load_config_file(path: Path | None) -> dict[str, Any]:
    """读取 TOML 配置文件，未给出时返回空配置"""
    if path is None:
        return {}
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as e:
        raise ParameterError("配置文件不存在", parameter="config", value=str(path)) from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigValidationError(
            f"配置文件解析失败: {path}",
            errors=[{"loc": [], "msg": str(e), "type": "toml_decode_error"}],
        ) from e


class BaseService[ConfigType: BaseConfig](ABC):
    """服务层基类

    子类声明 command 与 config_type，实现 execute：
    - 配置加载与命令行覆盖
    - 不含时间戳的来源信息
    - 按实验臂划分随机数流的批量执行器
    - 表格与文档写出，记录写出的文件
    """

    command: CommandName
    config_type: type[ConfigType]

    def __init__(self, config: ConfigType):
        """初始化服务

        Args:
            config: 已校验的实验配置
        """
        self.config = config
        self.written: list[Path] = []
        self._validate_config(config)

    @classmethod
    def load_config(cls, path: Path | None = None, overrides: dict[str, Any] | None = None) -> ConfigType:
        """读取配置文件并合并命令行覆盖项

        配置类型中不存在的覆盖项会被忽略并记录警告。

        Raises:
            ConfigValidationError: 字段校验失败
        """
        data = load_config_file(path)
        fields = cls.config_type.model_fields
        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if key not in fields:
                logger.warning(f"{cls.command.value} 不使用参数 --{key}，已忽略")
                continue
            data[key] = value
        try:
            return cls.config_type.model_validate(data)
        except ValidationError as e:
            raise ConfigValidationError.from_pydantic(e, source=str(path) if path else None) from e

    @property
    def config_hash(self) -> str:
        return calculate_hash(canonical_json(self.config.model_dump(mode="json", exclude=_HASH_EXCLUDE)))

    def provenance(self) -> Provenance:
        return Provenance(
            command=self.command.value,
            config_hash=self.config_hash,
            seed=getattr(self.config, "seed", None),
            version=settings.APP_VERSION,
            schema_version=settings.SCHEMA_VERSION,
        )

    def runner(self, arm: int = 0, seed: int | None = None) -> BatchRunner:
        """第 arm 个实验臂的批量执行器"""
        base_seed = getattr(self.config, "seed", settings.DEFAULT_SEED) if seed is None else seed
        return BatchRunner(base_seed, workers=self.config.threads, stream_offset=arm * STREAM_STRIDE)

    def write_table(self, frame: pl.DataFrame, name: str) -> Path:
        path = write_table(frame, Path(self.config.out), name, self.config.format)
        self.written.append(path)
        return path

    def write_document(self, document: BaseModel, name: str) -> Path:
        path = write_document(document, Path(self.config.out), name)
        self.written.append(path)
        return path

    def run(self) -> Any:
        """执行命令并记录耗时"""
        logger.info(f"开始执行 {self.command.value}", config_hash=self.config_hash[:12])
        with Timer() as timer:
            result = self.execute()
        logger.info(
            f"{self.command.value} 执行完成，耗时 {timer.elapsed_formatted}",
            outputs=[str(p) for p in self.written],
        )
        return result

    @abstractmethod
    def execute(self) -> Any:
        """命令主体，子类实现"""

    def _validate_config(self, config: ConfigType) -> None:
        """配置的业务校验钩子，子类可重写"""
        pass
