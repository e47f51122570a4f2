"""On-disk formats: PNG frames, raw float32 grids with JSON sidecars, and
header+blob containers used for lookup tables and checkpoints.

Container layout::

    b"TAXL"  | uint32 LE header length | UTF-8 JSON header | float64 LE blob

The header's ``tensors`` entry lists ``name``, ``shape`` and ``offset``
(in float64 elements) into the blob.
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DomainError

MAGIC = b"TAXL"


def dumps_json(obj) -> str:
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps_json(obj))


def read_json(path):
    return json.loads(Path(path).read_text())


def write_png(path, pixels: np.ndarray):
    q = np.round(np.clip(pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
    # fixed encoder settings keep the bytes reproducible
    Image.fromarray(q, mode="RGB").save(path, format="PNG", optimize=False, compress_level=6)


def read_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=float) / 255.0


def write_raw(path, grid: np.ndarray, pitch: float, **meta):
    """Write one or more H x W float32 planes plus ``<path>.json``."""
    grid = np.asarray(grid, dtype="<f4")
    if grid.ndim == 2:
        channels, (h, w) = 1, grid.shape
    elif grid.ndim == 3:
        channels, h, w = grid.shape
    else:
        raise DomainError(f"raw grids must be 2-D or C x H x W, got shape {grid.shape}")
    Path(path).write_bytes(grid.tobytes(order="C"))
    sidecar = {"width": w, "height": h, "channels": channels, "pitch": pitch, "dtype": "float32-le", **meta}
    write_json(str(path) + ".json", sidecar)


def read_raw(path):
    """Returns ``(array, sidecar)``; the array is float64, C x H x W when channels > 1."""
    meta = read_json(str(path) + ".json")
    data = np.frombuffer(Path(path).read_bytes(), dtype="<f4").astype(float)
    shape = (meta["height"], meta["width"])
    if meta.get("channels", 1) > 1:
        shape = (meta["channels"],) + shape
    if data.size != int(np.prod(shape)):
        raise DomainError(f"{path}: {data.size} values do not match sidecar shape {shape}")
    return data.reshape(shape), meta


def write_container(path, header: dict, tensors: dict):
    """Serialise named float64 arrays after a JSON header."""
    registry, offset, chunks = [], 0, []
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        registry.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.size
        chunks.append(arr.tobytes())
    header = dict(header, tensors=registry)
    hbytes = json.dumps(header, sort_keys=True).encode()
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(hbytes)))
        f.write(hbytes)
        for c in chunks:
            f.write(c)
    os.replace(tmp, path)


def read_container(path):
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise DomainError(f"{path}: not a taxel container")
    (n,) = struct.unpack("<I", raw[4:8])
    header = json.loads(raw[8 : 8 + n])
    blob = np.frombuffer(raw[8 + n :], dtype="<f8")
    tensors = {}
    for entry in header["tensors"]:
        size = int(np.prod(entry["shape"])) if entry["shape"] else 1
        start = entry["offset"]
        tensors[entry["name"]] = blob[start : start + size].reshape(entry["shape"]).copy()
    return header, tensors


def save_lut(path, lut):
    write_container(path, lut.header(), {"table": lut.table, "counts": lut.counts.astype(float)})


def load_lut(path):
    from .optics.lut import LUT_VERSION, CalibrationLUT

    header, t = read_container(path)
    if header.get("version") != LUT_VERSION:
        raise DomainError(f"{path}: unsupported LUT version {header.get('version')!r}")
    return CalibrationLUT(
        bins=header["bins"],
        lo=np.array(header["lo"]),
        hi=np.array(header["hi"]),
        table=t["table"],
        counts=t["counts"].astype(np.int64),
    )
