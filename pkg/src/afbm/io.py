"""CSV and binary artifacts.

CSV files carry a header row and write floats with 17 significant digits so
that values round-trip exactly.  Sample paths are stored in a small binary
format:

* 8 bytes magic ``b"AFBMPATH"``, 1 byte format version;
* 8 little-endian doubles: n_samples, components, points, alpha,
  epsilon_shift, seed (low 32 bits), seed (high 32 bits), is_complex;
* ``points`` complex grid points as (re, im) pairs;
* values ``[sample, component, point]`` as (re, im) pairs (re only for real paths).
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .exceptions import AfbmError
from .kernels import HurstIndex
from .sampler import SamplePaths

__all__ = ["write_csv", "read_csv", "write_paths", "read_paths", "ArtifactError", "STRING_COLUMNS"]

MAGIC = b"AFBMPATH"
VERSION = 1
_HEADER_DOUBLES = 8

# columns kept as text when reading back
STRING_COLUMNS = frozenset(
    {"quantity", "process", "word", "case", "line", "order", "name", "verdict", "summary", "criterion", "kernel"}
)


class ArtifactError(AfbmError, OSError):
    """An input artifact is missing or malformed."""


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, rows, columns=None) -> Path:
    """Write ``rows`` (dicts) with a header; column order follows ``columns`` or the first row."""
    path = Path(path)
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
    return path


def _parse(column, text):
    if column in STRING_COLUMNS:
        return text
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path) -> list:
    path = Path(path)
    if not path.is_file():
        raise ArtifactError(f"missing artifact {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [{k: _parse(k, v) for k, v in row.items()} for row in reader]


def write_paths(path, paths: SamplePaths) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = np.asarray(paths.values)
    is_complex = np.iscomplexobj(values)
    seed = int(paths.seed)
    header = np.array(
        [values.shape[0], values.shape[1], values.shape[2], paths.hurst.alpha, paths.epsilon_shift,
         seed & 0xFFFFFFFF, seed >> 32, float(is_complex)],
        dtype="<f8",
    )
    pts = np.asarray(paths.points, dtype=complex)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([VERSION]))
        fh.write(header.tobytes())
        fh.write(np.stack([pts.real, pts.imag], axis=-1).astype("<f8").tobytes())
        if is_complex:
            fh.write(np.stack([values.real, values.imag], axis=-1).astype("<f8").tobytes())
        else:
            fh.write(values.astype("<f8").tobytes())
    return path


def read_paths(path) -> SamplePaths:
    path = Path(path)
    if not path.is_file():
        raise ArtifactError(f"missing artifact {path}")
    raw = path.read_bytes()
    if raw[:8] != MAGIC:
        raise ArtifactError(f"{path} is not a sample-path file")
    if raw[8] != VERSION:
        raise ArtifactError(f"unsupported sample-path format version {raw[8]}")
    off = 9
    header = np.frombuffer(raw, "<f8", _HEADER_DOUBLES, off)
    off += 8 * _HEADER_DOUBLES
    n, d, p = (int(x) for x in header[:3])
    alpha, eps = float(header[3]), float(header[4])
    seed = int(header[5]) | (int(header[6]) << 32)
    is_complex = bool(header[7])
    pts = np.frombuffer(raw, "<f8", 2 * p, off).reshape(p, 2)
    off += 16 * p
    count = n * d * p * (2 if is_complex else 1)
    expected = off + 8 * count
    if len(raw) != expected:
        raise ArtifactError(f"{path} has {len(raw)} bytes, expected {expected}")
    vals = np.frombuffer(raw, "<f8", count, off)
    if is_complex:
        vals = vals.reshape(n, d, p, 2)
        values = vals[..., 0] + 1j * vals[..., 1]
    else:
        values = vals.reshape(n, d, p).copy()
    if not math.isfinite(alpha):
        raise ArtifactError("corrupt header")
    return SamplePaths(pts[:, 0] + 1j * pts[:, 1], values, seed, HurstIndex(alpha), eps)
