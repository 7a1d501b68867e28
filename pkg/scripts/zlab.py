#!/usr/bin/env python3
"""
zlab 命令行包装，等价于 python -m src.cli

使用方法:
    python scripts/zlab.py check --config configs/conditions_nw.toml --workers 4
"""
import sys
from pathlib import Path

# 添加项目根目录到路径
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.cli.main import main

if __name__ == "__main__":
    main()
