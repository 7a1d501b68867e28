"""
Run configuration and report models.

A run config is a TOML file; each section below maps to one subcommand. The
report model is what ``report.json`` validates against and what
``scripts/export_report_schema.py`` publishes.
"""
from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.config.lab_defaults import (
    C3_FAMILIES,
    CANCELLATION_FAMILIES,
    DEFAULT_THETA1,
    DEFAULT_THETA2,
    FD_RATIOS,
    IMPROPER_SCHEDULE_DEPTH,
    LP_REPORT_P,
    PAIR_ENVELOPE_L,
    PAIR_ENVELOPE_M,
    PROBE_P_GRID,
)
from src.kernels.descriptors import BoxDescriptor, BumpDescriptor, KernelDescriptor, format_validation_error
from src.utils.errors import ConfigError

Triple = Tuple[float, float, float]
IntTriple = Tuple[int, int, int]

CONDITION_IDS = ("R",) + tuple(CANCELLATION_FAMILIES) + tuple(C3_FAMILIES)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ========== 网格 ==========

class GridConfig(_Section):
    half_extent: Triple = (4.0, 4.0, 4.0)
    points: IntTriple = (32, 32, 32)

    @model_validator(mode="after")
    def _check(self) -> "GridConfig":
        for i, (L, n) in enumerate(zip(self.half_extent, self.points)):
            if L <= 0:
                raise ValueError(f"half_extent[{i}] must be positive")
            if n < 4 or n % 2:
                raise ValueError(f"points[{i}] must be an even integer >= 4")
        return self


# ========== 条件检查 ==========

class ConditionConfig(_Section):
    """One condition check; fields not used by the chosen id are ignored."""
    id: str
    theta1: float = Field(DEFAULT_THETA1, gt=0, le=1)
    theta2: float = Field(DEFAULT_THETA2, gt=0, lt=1)
    # (R)
    log2_range: Tuple[float, float] = (-6.0, 6.0)
    base_points: int = Field(5, ge=2)
    fd_ratios: Tuple[float, ...] = FD_RATIOS
    refinement: Tuple[int, ...] = (1, 2)
    # 环形域族
    annulus_log2_range: Tuple[float, float] = (1.0, 3.0)
    annulus_points: int = Field(3, ge=2)
    fixed_log2_range: Tuple[float, float] = (-4.0, 4.0)
    fixed_points: int = Field(3, ge=2)
    plus_one_c2pb: bool = False
    improper_depth: int = Field(0, ge=0)
    # C3 族
    nbf_seeds: Tuple[int, ...] = (0, 1)
    scale_log2_range: Tuple[float, float] = (-4.0, 4.0)
    scale_points: int = Field(3, ge=2)
    box_depth: int = Field(8, ge=1)

    @model_validator(mode="after")
    def _known(self) -> "ConditionConfig":
        if self.id not in CONDITION_IDS:
            raise ValueError(f"unknown condition id {self.id!r}; expected one of {', '.join(CONDITION_IDS)}")
        return self


# ========== 算子 ==========

class ScanConfig(_Section):
    box: BoxDescriptor
    mode: Literal["reduced", "full"] = "reduced"
    xi_log2_range: Tuple[float, float] = (-6.0, 6.0)
    xi_points: int = Field(13, ge=1)
    frequencies: Optional[List[Triple]] = None


class ProbeConfig(_Section):
    box: BoxDescriptor
    p: Tuple[float, ...] = PROBE_P_GRID
    widths: Tuple[float, ...] = (0.5, 1.0)


class ConvergenceConfig(_Section):
    boxes: Optional[List[BoxDescriptor]] = None
    m_lo: int = 0
    m_hi: int = 1
    width: float = Field(0.5, gt=0)


class OperatorConfig(_Section):
    scans: List[ScanConfig] = Field(default_factory=list)
    probes: List[ProbeConfig] = Field(default_factory=list)
    convergence: Optional[ConvergenceConfig] = None


# ========== Littlewood–Paley ==========

class LPConfig(_Section):
    j_range: Tuple[int, int] = (0, 1)
    k_range: Tuple[int, int] = (0, 1)
    theta1: float = Field(DEFAULT_THETA1, gt=0, le=1)
    theta2: float = Field(DEFAULT_THETA2, gt=0, lt=1)
    test_frequency: Triple = (1.0, 1.0, 1.0)
    ps: Tuple[float, ...] = LP_REPORT_P
    modes: Tuple[Literal["pair", "sandwich"], ...] = ("pair",)
    L: float = Field(PAIR_ENVELOPE_L, gt=0)
    M: float = Field(PAIR_ENVELOPE_M, gt=0)
    sandwich_box: Optional[BoxDescriptor] = None
    # 给出时额外计算 K_box * (phi1 x phi2) 的加权上界
    bump_envelope: Optional[BoxDescriptor] = None
    fit: bool = False

    @model_validator(mode="after")
    def _ranges(self) -> "LPConfig":
        for name in ("j_range", "k_range"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name} is empty: [{lo}, {hi}]")
        return self


# ========== 不等式 ==========

class LemmaConfig(_Section):
    oscillation_count: int = Field(10, ge=0)
    oscillation_N: Tuple[float, ...] = (10.0, 50.0, 200.0)
    dyadic_count: int = Field(100, ge=0)
    epsilon: float = Field(0.25, gt=0, lt=1)
    decay_N: Tuple[float, ...] = (2.0, 3.0, 5.0)
    decay_r_points: int = Field(11, ge=2)
    decay_k_range: Tuple[int, int] = (-10, 10)
    refinement: Tuple[int, ...] = (1, 2)
    rs_estimates: bool = False
    rs_theta2: float = Field(DEFAULT_THETA2, gt=0, lt=1)


# ========== 输出 ==========

class OutputConfig(_Section):
    dir: Optional[str] = None
    strict: bool = False
    write_fields: bool = False


class RunConfig(_Section):
    """Top-level run configuration."""
    seed: int = 0
    kernel: KernelDescriptor = Field(default_factory=lambda: KernelDescriptor(variant="nagel_wainger"))
    bumps: BumpDescriptor = Field(default_factory=BumpDescriptor)
    grid: GridConfig = Field(default_factory=GridConfig)
    conditions: List[ConditionConfig] = Field(default_factory=list)
    operator: OperatorConfig = Field(default_factory=OperatorConfig)
    lp: LPConfig = Field(default_factory=LPConfig)
    lemmas: LemmaConfig = Field(default_factory=LemmaConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)


class Report(BaseModel):
    """Contents of report.json."""
    model_config = ConfigDict(extra="forbid")

    tool_version: str
    schema_version: str
    command: Literal["synth", "check", "op", "lp", "lemmas"]
    seed: Optional[int] = None
    config: str
    results: Dict[str, Any]
    files: List[str] = Field(default_factory=list)


# ========== 加载 ==========

def parse_config(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise format_validation_error(exc) from exc


def load_config(path: Union[str, Path]) -> Tuple[RunConfig, str]:
    """(validated config, raw text) for the TOML file at ``path``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", field="--config")
    text = path.read_text(encoding="utf-8")
    return parse_config(text), text


def report_schema() -> Dict[str, Any]:
    return Report.model_json_schema()
