#!/usr/bin/env python3
"""
导出 report.json 的 JSON Schema

使用方法:
    python scripts/export_report_schema.py [--out schemas/report.schema.json] [--check]

参数:
    --out: 输出路径，默认 schemas/report.schema.json
    --check: 只比较，不写入；与已提交文件不一致时返回 1
"""
import argparse
import json
import logging
import sys
from pathlib import Path

# 添加项目根目录到路径
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.cli.schemas import report_schema
from src.config.settings import REPORT_SCHEMA_PATH

logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


def main() -> int:
    parser = argparse.ArgumentParser(description='导出报告 schema')
    parser.add_argument('--out', type=str, default=str(REPORT_SCHEMA_PATH), help='输出路径')
    parser.add_argument('--check', action='store_true', help='只检查是否一致')
    args = parser.parse_args()

    text = json.dumps(report_schema(), sort_keys=True, indent=2) + "\n"
    out = Path(args.out)
    if args.check:
        current = out.read_text(encoding="utf-8") if out.is_file() else ""
        if current != text:
            logger.error(f"{out} is out of date; rerun without --check")
            return 1
        logger.info(f"{out} is up to date")
        return 0

    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    logger.info(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
