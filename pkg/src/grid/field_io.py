"""ZFLD1 binary and CSV persistence for sampled fields."""
from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from src.grid.grid import Grid3, SampledField3
from src.utils.errors import PreconditionError

logger = logging.getLogger(__name__)

MAGIC = b"ZFLD1"
# magic padded to 8 bytes, 3 x u32 point counts, 3 x f64 extents, zero pad to 64
_HEADER = struct.Struct("<8s3I3d20x")
HEADER_SIZE = _HEADER.size  # 64

PathLike = Union[str, Path]


def encode_field(field: SampledField3) -> bytes:
    g = field.grid
    header = _HEADER.pack(MAGIC.ljust(8, b"\0"), *g.points, *g.half_extent)
    return header + field.values.astype("<f8").tobytes()


def decode_field(blob: bytes) -> SampledField3:
    if len(blob) < HEADER_SIZE:
        raise PreconditionError("truncated ZFLD1 header")
    magic, n1, n2, n3, L1, L2, L3 = _HEADER.unpack_from(blob, 0)
    if magic.rstrip(b"\0") != MAGIC:
        raise PreconditionError(f"bad magic {magic!r}, expected {MAGIC!r}")
    grid = Grid3((L1, L2, L3), (n1, n2, n3))
    payload = np.frombuffer(blob, dtype="<f8", offset=HEADER_SIZE)
    if payload.size != grid.size:
        raise PreconditionError(
            f"payload has {payload.size} values, header declares {grid.size}"
        )
    return SampledField3(grid, payload.astype(np.float64))


def write_field(path: PathLike, field: SampledField3) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_field(field))
    logger.debug("wrote field %s to %s", field.grid.points, path)
    return path


def read_field(path: PathLike) -> SampledField3:
    return decode_field(Path(path).read_bytes())


def field_to_frame(field: SampledField3) -> pd.DataFrame:
    x1, x2, x3 = np.meshgrid(*field.grid.axes(), indexing="ij")
    return pd.DataFrame({
        "x1": x1.ravel(),
        "x2": x2.ravel(),
        "x3": x3.ravel(),
        "value": field.values,
    })
