"""
zlab 命令行入口

使用方法:
    python -m src.cli synth  --config configs/nw_default.toml
    python -m src.cli check  --config configs/conditions_nw.toml --workers 4
    python -m src.cli op     --config configs/operator_nw.toml
    python -m src.cli lp     --config configs/lp_pair.toml
    python -m src.cli lemmas --config configs/lemmas.toml --seed 7

退出码:
    0 成功
    2 配置错误或前置条件不满足
    3 strict 模式下积分未收敛
    4 不变量被破坏
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from src.cli.commands import COMMANDS
from src.cli.schemas import Report, load_config
from src.config.settings import OUTPUT_DIR, ZLAB_LOG_LEVEL, ZLAB_SEED, ZLAB_WORKERS
from src.services.report_writer import ReportWriter, to_plain
from src.services.sweep_runner import resolve_workers
from src.utils.errors import (
    ConfigError,
    InvariantViolation,
    LabError,
    NonConvergenceError,
    PreconditionError,
)
from src.utils.logger import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_INVARIANT = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zlab", description="Zygmund-dilation singular integral lab")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "synth": "写出核与 bump 描述文件",
        "check": "检验 (R) 与消去条件",
        "op": "截断算子的 Fourier 扫描与范数探针",
        "lp": "Littlewood-Paley 平方函数与近正交矩阵",
        "lemmas": "辅助不等式的数值验证",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, help="TOML run config")
        p.add_argument("--out", help="output directory (default: [output].dir or OUTPUT_DIR/<command>)")
        p.add_argument("--workers", type=int, default=None, help=f"parallel workers (default {ZLAB_WORKERS})")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--log-level", default=ZLAB_LOG_LEVEL, help="DEBUG / INFO / WARNING")
    return parser


def _out_dir(args: argparse.Namespace, configured: Optional[str]) -> Path:
    if args.out:
        return Path(args.out)
    if configured:
        return Path(configured)
    return OUTPUT_DIR / args.command


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        cfg, text = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.model_copy(update={"seed": args.seed})
        elif "seed" not in cfg.model_fields_set:
            cfg = cfg.model_copy(update={"seed": ZLAB_SEED})
        workers = resolve_workers(args.workers)
        writer = ReportWriter(_out_dir(args, cfg.output.dir), args.command, text, cfg.seed)

        logger.info(f"[{args.command}] config={args.config} seed={cfg.seed} workers={workers}")
        nonconverged = COMMANDS[args.command](cfg, writer, workers)

        try:
            Report.model_validate(to_plain(writer.report()))
        except ValidationError as exc:
            raise InvariantViolation(f"report does not match its schema: {exc}") from exc
        writer.write()
        if nonconverged:
            logger.warning(f"[{args.command}] {nonconverged} quadratures did not converge")
        return EXIT_OK
    except (ConfigError, PreconditionError) as exc:
        logger.error(f"[{args.command}] {exc}")
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        logger.error(f"[{args.command}] {exc}")
        return EXIT_NONCONVERGED
    except InvariantViolation as exc:
        logger.error(f"[{args.command}] {exc}")
        return EXIT_INVARIANT
    except LabError as exc:
        logger.error(f"[{args.command}] {exc}")
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
