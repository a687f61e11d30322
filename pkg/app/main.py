"""
-*- coding: utf-8 -*-
@Author: li
@ProjectName: majority-switching
@Email: lijianqiao2906@live.com
@FileName: main.py
@DateTime: 2025/06/29 15:00:00
@Docs: 命令行入口 - simulate | value | dpbm | tree | check
"""

import argparse
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

from app.core.config import settings
from app.core.enums import CommandName, OutputFormat
from app.core.exceptions import EXIT_OK, EXIT_USAGE, handle_exception
from app.services.base_service import BaseService
from app.services.check_service import CheckService, cmd_check
from app.services.experiment_service import (
    DpbmService,
    SimulateService,
    TreeService,
    ValueService,
    cmd_dpbm,
    cmd_simulate,
    cmd_tree,
    cmd_value,
)
from app.utils.logger import logger

COMMANDS: dict[CommandName, tuple[type[BaseService], Callable[[Any], Any], str]] = {
    CommandName.SIMULATE: (SimulateService, cmd_simulate, "按策略运行受控仿真并比较决策时间"),
    CommandName.VALUE: (ValueService, cmd_value, "在网格上计算值函数及其校验量"),
    CommandName.DPBM: (DpbmService, cmd_dpbm, "扰动布朗运动与居中过程的出界时间 KS 检验"),
    CommandName.TREE: (TreeService, cmd_tree, "多数树最优查询代价表"),
    CommandName.CHECK: (CheckService, cmd_check, "运行全部验收判据"),
}


def build_parser() -> argparse.ArgumentParser:
    """创建命令行解析器，公共参数在每个子命令上均可使用"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="TOML 配置文件")
    common.add_argument("--seed", type=int, default=None, help="随机种子")
    common.add_argument("--paths", type=int, default=None, help="每个实验臂的路径数")
    common.add_argument("--step", type=float, default=None, help="时间步长")
    common.add_argument("--out", type=Path, default=None, help="输出目录")
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default=None, help="表格输出格式")
    common.add_argument("--threads", type=int, default=None, help="工作线程数")

    parser = argparse.ArgumentParser(prog=settings.APP_NAME, description=settings.APP_DESCRIPTION)
    parser.add_argument("--version", action="version", version=settings.APP_VERSION)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command, (_, _, help_text) in COMMANDS.items():
        subparsers.add_parser(command.value, parents=[common], help=help_text)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """解析参数并执行子命令

    Returns:
        int: 退出码，0 成功、1 用法错误、2 数值失败、3 验收失败
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse 用 2 表示用法错误
        return EXIT_OK if not e.code else EXIT_USAGE

    service_type, command, _ = COMMANDS[CommandName(args.command)]
    overrides = {key: getattr(args, key) for key in ("seed", "paths", "step", "out", "format", "threads")}
    try:
        config = service_type.load_config(args.config, overrides)
        command(config)
    except Exception as e:
        return handle_exception(e)
    logger.info(f"{args.command} 完成")
    return EXIT_OK
