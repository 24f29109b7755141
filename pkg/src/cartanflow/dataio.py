"""File formats: binary datasets, JSON manifests, model checkpoints, SVG.

Dataset files ("CFLW"): 4-byte magic, <u4 version, <u8 rows, <u8 cols, then
rows*cols little-endian float64 values row-major. Each dataset carries a JSON
sidecar manifest with the same basename; manifests hold a `stages` list that
pipeline commands append to, so a full run can be replayed from the manifest
alone.

Checkpoint files ("CFCK"): 4-byte magic, <u4 header length, UTF-8 JSON header
(architecture, dims, activation, seed, step, and optional pipeline context),
then the flat little-endian float64 parameter block.
"""

from __future__ import annotations

import datetime
import json
import struct
from pathlib import Path

import numpy as np

from .nn import VectorFieldModel

DATASET_MAGIC = b"CFLW"
DATASET_VERSION = 1
CHECKPOINT_MAGIC = b"CFCK"

SCHEMA_VERSION = 1


class FormatError(ValueError):
    """Corrupt or mismatched binary file."""


def write_dataset(path, array):
    """Write a 2-d float64 array in the CFLW layout."""
    array = np.ascontiguousarray(np.asarray(array, dtype="<f8"))
    if array.ndim != 2:
        raise ValueError("dataset payload must be 2-d")
    rows, cols = array.shape
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(struct.pack("<IQQ", DATASET_VERSION, rows, cols))
        fh.write(array.tobytes())
    return Path(path)


def read_dataset(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != DATASET_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        version, rows, cols = struct.unpack("<IQQ", fh.read(20))
        if version != DATASET_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        payload = fh.read()
    expected = rows * cols * 8
    if len(payload) != expected:
        raise FormatError(f"{path}: payload is {len(payload)} bytes, "
                          f"expected {expected}")
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy()


def sidecar_path(data_path):
    return Path(data_path).with_suffix(".json")


def new_manifest():
    return {"schema_version": SCHEMA_VERSION, "stages": []}


def append_stage(manifest, stage, **payload):
    """Append one pipeline stage record; manifests are append-only."""
    entry = {"stage": stage,
             "created": datetime.datetime.now(datetime.timezone.utc).isoformat()}
    entry.update(payload)
    manifest.setdefault("stages", []).append(entry)
    return manifest


def write_manifest(path, manifest):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return Path(path)


def read_manifest(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def manifest_stage(manifest, stage):
    """Most recent record of a given stage, or None."""
    for entry in reversed(manifest.get("stages", [])):
        if entry.get("stage") == stage:
            return entry
    return None


def write_csv(path, array, header=None):
    array = np.asarray(array, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row in np.atleast_2d(array):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return Path(path)


# ------------------------------------------------------------------ checkpoints

def save_checkpoint(path, model, step=0, extra=None):
    header = model.header()
    header["step"] = int(step)
    header["schema_version"] = SCHEMA_VERSION
    if extra:
        header.update(extra)
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(model.params, dtype="<f8").tobytes())
    return Path(path)


def load_checkpoint(path):
    """Returns (model, header)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        payload = fh.read()
    params = np.frombuffer(payload, dtype="<f8").copy()
    model = VectorFieldModel.from_header(header, params)
    if model.param_count != header.get("param_count", model.param_count):
        raise FormatError(f"{path}: parameter count mismatch")
    return model, header


# -------------------------------------------------------------------- plotting

def write_scatter_svg(path, points, size=800, view_half_width=None, radius=1.4):
    """Plain SVG scatter: fixed square viewport, one circle per point, no
    external assets. Points outside the view are clipped by the viewport."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if view_half_width is None:
        view_half_width = float(np.max(np.abs(points))) * 1.05 if points.size else 1.0
    scale = size / (2.0 * view_half_width)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for x, y in points:
        cx = (x + view_half_width) * scale
        cy = (view_half_width - y) * scale  # flip so +y points up
        lines.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{radius}" '
                     f'fill="#1f2937" fill-opacity="0.5"/>')
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return Path(path)
