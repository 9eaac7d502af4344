"""Versioned binary model checkpoints.

Layout: magic + format version, length-prefixed JSON descriptor block
(architecture, normalization stats, metadata, parameter manifest), then all
parameter arrays as little-endian float32 in manifest order, then a CRC32 of
everything before it.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from .transformer import DenoiserParams, Descriptor, parameter_shapes

MAGIC = b"DMCK"
FORMAT_VERSION = 1


def save_checkpoint(m: DenoiserParams, path: str | Path) -> None:
    manifest = [[name, list(m.store[name].shape)] for name in sorted(m.store)]
    header = {
        "format_version": FORMAT_VERSION,
        "descriptor": m.descriptor.to_dict(),
        "norm_mean": m.norm_mean.tolist(),
        "norm_std": m.norm_std.tolist(),
        "obs_mean": m.obs_mean.tolist(),
        "obs_std": m.obs_std.tolist(),
        "meta": m.meta,
        "manifest": manifest,
    }
    blob = json.dumps(header, sort_keys=True).encode()
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", FORMAT_VERSION)
    out += struct.pack("<I", len(blob))
    out += blob
    for name, _ in manifest:
        out += np.ascontiguousarray(m.store[name], dtype="<f4").tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(out))


def load_checkpoint(path: str | Path) -> DenoiserParams:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a model checkpoint (bad magic)")
    (stored_crc,) = struct.unpack("<I", raw[-4:])
    if zlib.crc32(raw[:-4]) & 0xFFFFFFFF != stored_crc:
        raise CheckpointError(f"{path}: checksum mismatch (corrupt file)")
    (version,) = struct.unpack("<I", raw[4:8])
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    (hlen,) = struct.unpack("<I", raw[8:12])
    try:
        header = json.loads(raw[12:12 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: malformed descriptor block: {exc}") from None
    descriptor = Descriptor.from_dict(header["descriptor"])
    expected = parameter_shapes(descriptor)
    store: dict[str, np.ndarray] = {}
    offset = 12 + hlen
    for name, shape in header["manifest"]:
        shape = tuple(int(v) for v in shape)
        if name not in expected or expected[name] != shape:
            raise CheckpointError(f"{path}: manifest entry {name} {shape} "
                                  f"inconsistent with descriptor")
        count = int(np.prod(shape))
        end = offset + 4 * count
        if end > len(raw) - 4:
            raise CheckpointError(f"{path}: truncated parameter block at {name}")
        store[name] = np.frombuffer(raw[offset:end], dtype="<f4").astype(float).reshape(shape)
        offset = end
    if offset != len(raw) - 4:
        raise CheckpointError(f"{path}: trailing bytes after parameter block")
    if set(store) != set(expected):
        raise CheckpointError(f"{path}: parameter set incomplete for descriptor")
    return DenoiserParams(
        descriptor=descriptor,
        store=store,
        norm_mean=np.asarray(header["norm_mean"], dtype=float),
        norm_std=np.asarray(header["norm_std"], dtype=float),
        obs_mean=np.asarray(header["obs_mean"], dtype=float),
        obs_std=np.asarray(header["obs_std"], dtype=float),
        meta=header.get("meta", {}),
    )
