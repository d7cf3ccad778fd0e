"""Deterministic file outputs: full-precision CSV, JSON, and binary snapshots.

Every file embeds the scenario hash and the package version; writes go through
a temp-file rename so partially written files never appear under the final name.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from . import __version__

SNAPSHOT_MAGIC = b"GKDVSNAP"
SNAPSHOT_VERSION = 1


def atomic_write_bytes(path, payload: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def write_csv(path, columns: list, rows, config_hash: str, footer: list | None = None):
    lines = [f"# gkdvlab {__version__} config_sha256={config_hash}",
             ",".join(columns)]
    for row in rows:
        lines.append(",".join("%.17g" % float(v) for v in row))
    if footer:
        lines.extend(footer)
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def write_json(path, payload: dict, config_hash: str):
    doc = {"artifact_version": __version__, "config_sha256": config_hash}
    doc.update(payload)
    atomic_write_bytes(path, (json.dumps(doc, sort_keys=True, indent=2,
                                         default=_json_default) + "\n").encode())


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_snapshot(path, n: int, x_min: float, x_max: float, t: float,
                   u: np.ndarray, config_hash: str):
    """Binary field snapshot: magic, versions, grid header, hash, little-endian f64 data."""
    header = SNAPSHOT_MAGIC + struct.pack("<II", SNAPSHOT_VERSION, n)
    header += struct.pack("<ddd", x_min, x_max, t)
    header += __version__.encode().ljust(16, b"\0")[:16]
    header += config_hash.encode().ljust(64, b"\0")[:64]
    data = np.asarray(u, dtype="<f8").tobytes()
    atomic_write_bytes(path, header + data)


def read_snapshot(path):
    raw = Path(path).read_bytes()
    if raw[:8] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a gkdvlab snapshot")
    version, n = struct.unpack("<II", raw[8:16])
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    x_min, x_max, t = struct.unpack("<ddd", raw[16:40])
    artifact_version = raw[40:56].rstrip(b"\0").decode()
    config_hash = raw[56:120].rstrip(b"\0").decode()
    u = np.frombuffer(raw[120:], dtype="<f8")
    if u.size != n:
        raise ValueError(f"{path}: truncated snapshot")
    return {"n": n, "x_min": x_min, "x_max": x_max, "t": t,
            "artifact_version": artifact_version,
            "config_sha256": config_hash, "u": u.copy()}
