"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: __init__.py
@DateTime: 2025/06/20 00:00:00
@Docs: 服务层模块初始化和统一导出
"""

from .base_service import BaseService
from .check_service import CheckService, cmd_check
from .experiment_service import (
    DpbmService,
    SimulateService,
    TreeService,
    ValueService,
    cmd_dpbm,
    cmd_simulate,
    cmd_tree,
    cmd_value,
)

__all__ = [
    "BaseService",
    "SimulateService",
    "ValueService",
    "DpbmService",
    "TreeService",
    "CheckService",
    "cmd_simulate",
    "cmd_value",
    "cmd_dpbm",
    "cmd_tree",
    "cmd_check",
]

# 服务层使用说明：
# 1. 所有服务继承 BaseService，声明 command 与 config_type 并实现 execute
# 2. 配置来自 TOML 文件与命令行覆盖，经 pydantic 校验
# 3. 输出不含时间戳，同一配置与种子的重复运行逐字节一致
#
# 使用示例：
# from app.services import SimulateService
#
# config = SimulateService.load_config(Path("configs/simulate.toml"), {"paths": 1000})
# result = SimulateService(config).run()
