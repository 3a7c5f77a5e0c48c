"""Binary feature-matrix files.

Layout (all integers little-endian):
  magic   "FMAT" (4 bytes)
  u32     version (currently 1)
  u64     rows
  u64     cols
  u32     id-block length in bytes
  bytes   id block: JSON array of sample_id strings, UTF-8
  f32[]   rows * cols values, row-major

The format is the interop channel for feature vectors computed outside the
package (e.g. by a pretrained network); import(export(m)) is bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"FMAT"
VERSION = 1


class FmatFormatError(ValueError):
    """Malformed feature file."""


@dataclass
class FeatureMatrix:
    data: np.ndarray  # (rows, cols) float32
    ids: list[str]

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise ValueError("feature matrix must be 2-D")
        if len(self.ids) != self.data.shape[0]:
            raise ValueError("ids must align 1:1 with rows")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("duplicate sample ids")
        if self.data.size and not np.isfinite(self.data).all():
            raise ValueError("feature matrix contains NaN/Inf")

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def row_for(self, sample_id: str) -> np.ndarray:
        return self.data[self.ids.index(sample_id)]


def export_features(fm: FeatureMatrix, path: str | Path) -> None:
    id_block = json.dumps(fm.ids, ensure_ascii=False).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<QQ", fm.rows, fm.cols))
        f.write(struct.pack("<I", len(id_block)))
        f.write(id_block)
        f.write(fm.data.astype("<f4", copy=False).tobytes())


def import_features(path: str | Path) -> FeatureMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < 28 or raw[:4] != MAGIC:
        raise FmatFormatError(f"{path}: bad magic")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != VERSION:
        raise FmatFormatError(f"{path}: unsupported version {version}")
    rows, cols = struct.unpack_from("<QQ", raw, 8)
    (id_len,) = struct.unpack_from("<I", raw, 24)
    id_end = 28 + id_len
    payload_len = rows * cols * 4
    if len(raw) != id_end + payload_len:
        raise FmatFormatError(
            f"{path}: truncated payload (have {len(raw)}, want {id_end + payload_len})"
        )
    try:
        ids = json.loads(raw[28:id_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FmatFormatError(f"{path}: bad id block") from e
    if not isinstance(ids, list) or len(ids) != rows:
        raise FmatFormatError(f"{path}: id block does not match row count")
    data = np.frombuffer(raw[id_end:], dtype="<f4").reshape(rows, cols)
    return FeatureMatrix(data=data.copy(), ids=[str(s) for s in ids])
