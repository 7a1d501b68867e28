"""
并行扫描执行器测试
"""
import threading
import time

import pytest

from src.services.sweep_runner import resolve_workers, run_sweep


def _slow_square(x):
    # 让先提交的任务晚完成
    time.sleep(0.001 * (10 - x))
    return x * x


class TestResolveWorkers:

    def test_floor_is_one(self):
        assert resolve_workers(0) == 1
        assert resolve_workers(-3) == 1

    def test_explicit(self):
        assert resolve_workers(4) == 4

    def test_default_from_env(self):
        # conftest 固定 ZLAB_WORKERS=1
        assert resolve_workers(None) >= 1


class TestRunSweep:

    def test_inline(self):
        assert run_sweep(lambda x: x + 1, [1, 2, 3], workers=1) == [2, 3, 4]

    def test_empty(self):
        assert run_sweep(lambda x: x, [], workers=4) == []

    def test_order_independent_of_pool(self):
        tasks = list(range(10))
        assert run_sweep(_slow_square, tasks, workers=4) == [x * x for x in tasks]

    def test_uses_threads(self):
        seen = set()

        def fn(x):
            seen.add(threading.get_ident())
            time.sleep(0.01)
            return x

        run_sweep(fn, list(range(8)), workers=4)
        assert len(seen) > 1

    def test_lowest_failing_index_is_raised(self):
        def fn(x):
            if x in (3, 7):
                time.sleep(0.01 if x == 3 else 0.0)
                raise ValueError(f"task {x}")
            return x

        with pytest.raises(ValueError, match="task 3"):
            run_sweep(fn, list(range(10)), workers=4)

    def test_inline_error_propagates(self):
        def fn(x):
            raise KeyError(x)

        with pytest.raises(KeyError):
            run_sweep(fn, [1], workers=4)
