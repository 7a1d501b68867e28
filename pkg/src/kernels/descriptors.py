"""JSON descriptors for bumps and kernels, validated with pydantic."""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.config.lab_defaults import DEFAULT_J_RANGE, DEFAULT_K_RANGE, FOURIER_BUMP_CUTOFF_RADIUS
from src.kernels.bumps import BUMP_CONSTRUCTIONS, BumpPair, build_bumps
from src.kernels.kernels import (
    Dilated,
    KernelSpec,
    KernelSum,
    NagelWainger,
    Truncated,
    TruncationBox,
    ZeroKernel,
    synth_ricci_stein,
)
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

KernelVariant = Literal["nagel_wainger", "ricci_stein", "dilated", "truncated", "sum", "zero"]


class BumpDescriptor(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["fourier_exact", "spatial_compact"] = "fourier_exact"
    support_radius: Optional[float] = Field(1.0, gt=0, le=1)
    table_radius: float = Field(FOURIER_BUMP_CUTOFF_RADIUS, gt=0)
    construction: Optional[str] = None

    @model_validator(mode="after")
    def _construction_matches(self) -> "BumpDescriptor":
        expected = BUMP_CONSTRUCTIONS[self.kind]
        if self.construction is not None and self.construction != expected:
            raise ValueError(f"{self.kind} bumps are built as {expected}, not {self.construction}")
        return self

    def build(self) -> BumpPair:
        return build_bumps(self.kind, self.support_radius or 1.0, self.table_radius)


class BoxDescriptor(BaseModel):
    model_config = ConfigDict(extra="forbid")

    eps: Tuple[float, float, float]
    cap: Tuple[float, float, float]

    @model_validator(mode="after")
    def _ordered(self) -> "BoxDescriptor":
        for i, (e, n) in enumerate(zip(self.eps, self.cap)):
            if not (0 < e <= n):
                raise ValueError(f"need 0 < eps[{i}] <= cap[{i}], got {e}, {n}")
        return self

    def build(self) -> TruncationBox:
        return TruncationBox(self.eps, self.cap)


class KernelDescriptor(BaseModel):
    model_config = ConfigDict(extra="forbid")

    variant: KernelVariant
    alpha: float = Field(1.0, gt=0)
    beta: float = Field(1.0, gt=0)
    bumps: Optional[BumpDescriptor] = None
    j_range: Tuple[int, int] = DEFAULT_J_RANGE
    k_range: Tuple[int, int] = DEFAULT_K_RANGE
    orientation: Literal["x1", "x2"] = "x1"
    base: Optional["KernelDescriptor"] = None
    s: float = Field(1.0, gt=0)
    t: float = Field(1.0, gt=0)
    a: float = Field(1.0, gt=0)
    b: float = Field(1.0, gt=0)
    box: Optional[BoxDescriptor] = None
    terms: Optional[List["KernelDescriptor"]] = None

    @model_validator(mode="after")
    def _variant_fields(self) -> "KernelDescriptor":
        if self.variant == "ricci_stein":
            for name in ("j_range", "k_range"):
                lo, hi = getattr(self, name)
                if hi < lo:
                    raise ValueError(f"{name} is empty: [{lo}, {hi}]")
        if self.variant in ("dilated", "truncated") and self.base is None:
            raise ValueError(f"variant {self.variant} needs a base kernel")
        if self.variant == "truncated" and self.box is None:
            raise ValueError("variant truncated needs a box")
        if self.variant == "sum" and not self.terms:
            raise ValueError("variant sum needs at least one term")
        return self

    def build(self) -> KernelSpec:
        v = self.variant
        if v == "zero":
            return ZeroKernel()
        if v == "nagel_wainger":
            return NagelWainger(self.alpha, self.beta)
        if v == "ricci_stein":
            bumps = (self.bumps or BumpDescriptor()).build()
            return synth_ricci_stein(bumps, self.j_range, self.k_range, self.orientation)
        if v == "dilated":
            return Dilated(self.base.build(), self.s, self.t, self.a, self.b)
        if v == "truncated":
            return Truncated(self.base.build(), self.box.build())
        return KernelSum(tuple(t.build() for t in self.terms))


KernelDescriptor.model_rebuild()


def format_validation_error(exc: ValidationError, prefix: str = "") -> ConfigError:
    """First pydantic error as a ConfigError naming the dotted field path."""
    err = exc.errors()[0]
    loc = ".".join(str(p) for p in err.get("loc", ()))
    path = ".".join(p for p in (prefix, loc) if p)
    return ConfigError(err.get("msg", "invalid value"), field=path or None)


def parse_kernel(data: Union[Dict[str, Any], KernelDescriptor], prefix: str = "kernel") -> KernelSpec:
    if isinstance(data, KernelDescriptor):
        return data.build()
    try:
        desc = KernelDescriptor.model_validate(data)
    except ValidationError as exc:
        raise format_validation_error(exc, prefix) from exc
    return desc.build()


def parse_bumps(data: Union[Dict[str, Any], BumpDescriptor, None], prefix: str = "bumps") -> BumpPair:
    if isinstance(data, BumpDescriptor):
        return data.build()
    try:
        desc = BumpDescriptor.model_validate(data or {})
    except ValidationError as exc:
        raise format_validation_error(exc, prefix) from exc
    return desc.build()


def dumps_descriptor(obj: Any) -> str:
    """Canonical JSON text for a kernel or bump pair."""
    return json.dumps(obj.to_dict(), sort_keys=True, indent=2) + "\n"


def save_descriptor(path: Union[str, Path], obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_descriptor(obj), encoding="utf-8")
    logger.info("wrote descriptor %s", path)
    return path


def load_kernel(path: Union[str, Path]) -> KernelSpec:
    return parse_kernel(json.loads(Path(path).read_text(encoding="utf-8")))
