"""
Field dumps.

Binary layout (little-endian): magic b"NLHG", uint32 version, uint32 d,
uint32 m, d x uint64 shape, float64 h, d x float64 origin, uint8 exterior
flag, m x float64 exterior value, then every cell value as float64 in
row-major axis order with the m components innermost.
"""

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from ..errors import GridError
from .grid import GridDomain, GridFunction


logger = logging.getLogger(__name__)

MAGIC = b"NLHG"
VERSION = 1


def save_field(path: Union[str, Path], u: GridFunction) -> Path:
    """
    Write a binary field dump.

    Inactive cells are written as 0; the mask itself is not stored.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dom = u.domain
    exterior = u.exterior if u.exterior is not None else np.zeros(u.m)
    header = MAGIC + struct.pack(
        f"<III{dom.d}Qd{dom.d}dB{u.m}d",
        VERSION, dom.d, u.m, *dom.shape, dom.h, *dom.origin,
        1 if u.exterior is not None else 0, *exterior,
    )
    values = np.where(dom.active[..., None], u.values, 0.0).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(values.tobytes(order="C"))
    logger.debug(f"Field saved: {path} ({u.values.nbytes / 1024:.1f} KB)")
    return path


def load_field(path: Union[str, Path]) -> GridFunction:
    """
    Read a binary field dump written by save_field.

    Raises:
        GridError: Wrong magic, version or truncated payload
    """
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise GridError(f"{path}: not a field dump (magic {data[:4]!r})")
    version, d, m = struct.unpack_from("<III", data, 4)
    if version != VERSION:
        raise GridError(f"{path}: unsupported dump version {version}")
    body = f"<{d}Qd{d}dB{m}d"
    fields = struct.unpack_from(body, data, 16)
    shape = tuple(int(n) for n in fields[:d])
    h = fields[d]
    origin = tuple(fields[d + 1:2 * d + 1])
    has_exterior = fields[2 * d + 1]
    exterior = np.asarray(fields[2 * d + 2:], dtype=float) if has_exterior else None

    offset = 16 + struct.calcsize(body)
    count = int(np.prod(shape)) * m
    payload = np.frombuffer(data, dtype="<f8", count=-1, offset=offset)
    if payload.size != count:
        raise GridError(f"{path}: expected {count} values, found {payload.size}")
    values = payload.reshape(shape + (m,)).astype(float)
    return GridFunction(GridDomain(origin, h, shape), values, exterior)


def field_frame(u: GridFunction) -> pd.DataFrame:
    """One row per active cell: x1..xd, u1..um."""
    active = u.domain.active
    centers = u.domain.centers()[active]
    values = u.values[active]
    columns = {f"x{i + 1}": centers[:, i] for i in range(u.domain.d)}
    columns.update({f"u{j + 1}": values[:, j] for j in range(u.m)})
    return pd.DataFrame(columns)


def export_csv(path: Union[str, Path], u: GridFunction) -> Path:
    """CSV export of the active cells."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    field_frame(u).to_csv(path, index=False, float_format="%.17g")
    return path
