"""Binary motion-dataset container.

Layout mirrors the model checkpoint: magic + format version, length-prefixed
JSON header (embodiment hash, record geometry, metadata), fixed-stride
little-endian float32 records, CRC32 trailer.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DatasetFormatError
from ..motion import TWIST_DIM

MAGIC = b"DMDS"
FORMAT_VERSION = 1


@dataclass
class MotionDataset:
    """Relative-format motion records plus provenance header."""

    embodiment_hash: str
    n_waypoints: int
    records: np.ndarray           # (count, N, TWIST_DIM)
    relative: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        rec = np.asarray(self.records, dtype=float)
        if rec.size == 0:
            rec = rec.reshape(0, self.n_waypoints, TWIST_DIM)
        if rec.ndim != 3 or rec.shape[1] != self.n_waypoints or rec.shape[2] != TWIST_DIM:
            raise DatasetFormatError(
                f"records must be (count, {self.n_waypoints}, {TWIST_DIM}), got {rec.shape}")
        self.records = rec

    @property
    def count(self) -> int:
        return self.records.shape[0]

    @property
    def dim(self) -> int:
        return TWIST_DIM


def save_dataset(ds: MotionDataset, path: str | Path) -> None:
    header = {
        "format_version": FORMAT_VERSION,
        "embodiment_hash": ds.embodiment_hash,
        "n_waypoints": int(ds.n_waypoints),
        "dim": TWIST_DIM,
        "count": int(ds.count),
        "relative": bool(ds.relative),
        "meta": ds.meta,
    }
    blob = json.dumps(header, sort_keys=True).encode()
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", FORMAT_VERSION)
    out += struct.pack("<I", len(blob))
    out += blob
    out += np.ascontiguousarray(ds.records, dtype="<f4").tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(out))


def load_dataset(path: str | Path) -> MotionDataset:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != MAGIC:
        raise DatasetFormatError(f"{path}: not a motion dataset (bad magic)")
    (stored_crc,) = struct.unpack("<I", raw[-4:])
    if zlib.crc32(raw[:-4]) & 0xFFFFFFFF != stored_crc:
        raise DatasetFormatError(f"{path}: checksum mismatch (corrupt file)")
    (version,) = struct.unpack("<I", raw[4:8])
    if version != FORMAT_VERSION:
        raise DatasetFormatError(f"{path}: unsupported dataset version {version}")
    (hlen,) = struct.unpack("<I", raw[8:12])
    try:
        header = json.loads(raw[12:12 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DatasetFormatError(f"{path}: malformed header: {exc}") from None
    count = int(header["count"])
    n = int(header["n_waypoints"])
    dim = int(header["dim"])
    if dim != TWIST_DIM:
        raise DatasetFormatError(f"{path}: unsupported record dim {dim}")
    expected_bytes = 4 * count * n * dim
    body = raw[12 + hlen:-4]
    if len(body) != expected_bytes:
        raise DatasetFormatError(
            f"{path}: record block is {len(body)} bytes, header implies {expected_bytes}")
    records = np.frombuffer(body, dtype="<f4").astype(float).reshape(count, n, dim)
    return MotionDataset(
        embodiment_hash=header["embodiment_hash"],
        n_waypoints=n,
        records=records,
        relative=bool(header["relative"]),
        meta=header.get("meta", {}),
    )
