"""
Report output: one report.json per command run, one CSV per tabular task
result and a separate timings.json.

report.json and the CSVs depend only on the config and seed; wall-times go
to timings.json so repeated runs produce byte-identical reports.
"""
from __future__ import annotations

import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Union

import numpy as np
import pandas as pd

from src.config.settings import REPORT_SCHEMA_VERSION, TOOL_VERSION
from src.utils.errors import PreconditionError
from src.utils.math_utils import json_float

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"
TIMINGS_FILE = "timings.json"
CSV_FLOAT_FORMAT = "%.17g"


def to_plain(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return json_float(obj)
    return obj


def dumps_report(data: Dict[str, Any]) -> str:
    return json.dumps(to_plain(data), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_frame(path: Union[str, Path], frame: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return path


@dataclass
class ReportWriter:
    """
    Collects task results for one command and writes them under ``out_dir``.

    Attributes
    ----------
    command : str
        Subcommand name recorded in the report
    config_text : str
        Raw config file text, echoed verbatim
    results : dict
        Task name -> JSON-ready result
    files : list of str
        CSV and field files written so far, relative to ``out_dir``
    """
    out_dir: Path
    command: str
    config_text: str = ""
    seed: Optional[int] = None
    results: Dict[str, Any] = field(default_factory=dict)
    files: List[str] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.out_dir = Path(self.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def add(self, name: str, result: Any, frame: Optional[pd.DataFrame] = None) -> None:
        """Record ``result`` (a dict or an object with to_dict) and optionally its rows as CSV."""
        if name in self.results:
            raise PreconditionError(f"duplicate report task name {name!r}")
        self.results[name] = result.to_dict() if hasattr(result, "to_dict") else result
        if frame is not None:
            self.add_csv(name, frame)

    def add_csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = write_frame(self.out_dir / f"{name}.csv", frame)
        self.files.append(path.name)
        logger.debug("wrote %s (%d rows)", path, len(frame))
        return path

    def add_file(self, path: Union[str, Path]) -> None:
        self.files.append(Path(path).name)

    @contextmanager
    def timed(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = time.perf_counter() - start

    def report(self) -> Dict[str, Any]:
        return {
            "tool_version": TOOL_VERSION,
            "schema_version": REPORT_SCHEMA_VERSION,
            "command": self.command,
            "seed": self.seed,
            "config": self.config_text,
            "results": self.results,
            "files": sorted(self.files),
        }

    def write(self) -> Path:
        path = self.out_dir / REPORT_FILE
        path.write_text(dumps_report(self.report()), encoding="utf-8")
        (self.out_dir / TIMINGS_FILE).write_text(
            json.dumps({k: round(v, 6) for k, v in self.timings.items()}, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
        logger.info(f"[{self.command}] report written to {path} ({len(self.results)} tasks)")
        return path
