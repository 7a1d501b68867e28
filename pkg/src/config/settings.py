import os
from pathlib import Path
from dotenv import load_dotenv

# 确保 .env 在模块加载时被读取
load_dotenv()

# 项目根目录
PROJECT_ROOT = Path(__file__).parent.parent.parent

# ==================================
# 运行配置
# ==================================
# 参数扫描的并行 worker 数；结果与 worker 数无关（有序归并）
ZLAB_WORKERS = int(os.getenv("ZLAB_WORKERS", os.cpu_count() or 1))

# 日志级别名称，如 DEBUG / INFO / WARNING
ZLAB_LOG_LEVEL = os.getenv("ZLAB_LOG_LEVEL", "INFO").upper()

# 默认随机种子（配置文件和 --seed 会覆盖）
ZLAB_SEED = int(os.getenv("ZLAB_SEED", 0))

# 输出目录
OUTPUT_DIR = Path(os.getenv("ZLAB_OUTPUT_DIR", PROJECT_ROOT / "output"))

# 日志目录
LOG_DIR = Path(os.getenv("ZLAB_LOG_DIR", PROJECT_ROOT / "logs"))
LOG_DIR.mkdir(parents=True, exist_ok=True)

# 报告 schema
SCHEMA_DIR = PROJECT_ROOT / "schemas"
REPORT_SCHEMA_PATH = SCHEMA_DIR / "report.schema.json"

TOOL_VERSION = "0.3.0"
REPORT_SCHEMA_VERSION = "1"
