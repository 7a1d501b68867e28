"""
Pytest 配置和通用 fixtures

要点：
1. 核、bump 与网格用 session 级 fixtures，避免重复制表
2. 默认单 worker，保证日志顺序稳定
3. 根据文件名自动打标记
"""
import os
import sys
import gc

import numpy as np
import pytest

# 确保项目根目录在 sys.path
ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

os.environ.setdefault('ZLAB_WORKERS', '1')


@pytest.fixture(scope="session")
def fourier_bumps():
    """Fourier-exact bump pair，整个会话只制表一次"""
    from src.kernels.bumps import build_bumps
    return build_bumps("fourier_exact")


@pytest.fixture(scope="session")
def compact_bumps():
    from src.kernels.bumps import build_bumps
    return build_bumps("spatial_compact")


@pytest.fixture(scope="session")
def nw_kernel():
    from src.kernels.kernels import NagelWainger
    return NagelWainger()


@pytest.fixture(scope="session")
def rs_kernel(compact_bumps):
    """Small Ricci-Stein sum over j, k in [-2, 2]."""
    from src.kernels.kernels import synth_ricci_stein
    return synth_ricci_stein(compact_bumps, (-2, 2), (-2, 2))


@pytest.fixture(scope="session")
def small_grid():
    from src.grid.grid import Grid3
    return Grid3((4.0, 4.0, 4.0), (16, 16, 16))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def cleanup():
    """每个测试后清理"""
    yield
    gc.collect()


def pytest_collection_modifyitems(config, items):
    """修改测试收集，自动添加标记"""
    for item in items:
        if "test_cli" in item.nodeid:
            item.add_marker(pytest.mark.integration)
        else:
            item.add_marker(pytest.mark.unit)
