"""Persistence: binary snapshots, moment CSV, manifests, and hashing.

Data artifacts are deterministic byte-for-byte given (config, seed, workers):
numbers are rendered with ``repr`` (shortest round-trip), CSV rows end in
CRLF, and JSON uses the canonical rendering from :mod:`kinetics.config`.
The manifest itself records wall-clock times, so it is excluded from the
byte-identical set; instead it carries the SHA-256 of every data artifact.
"""

from __future__ import annotations

import hashlib
import json
import struct
import time as _time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backend import ACTIVE_BACKEND
from .config import ExperimentSpec, canonical_json

SNAPSHOT_MAGIC = b"IBND"
SNAPSHOT_VERSION = 1
SNAPSHOT_HEADER = struct.Struct("<4sIQdQ")

TOOL_VERSION = "0.1.0"
MANIFEST_NAME = "manifest.json"


# ---------------------------------------------------------------------------
# velocity snapshots


def snapshot_bytes(velocities, time: float, seed: int) -> bytes:
    """Header {magic, version u32, N u64, time f64, seed u64} + 3N f64."""
    vel = np.ascontiguousarray(np.asarray(velocities, dtype="<f8"))
    if vel.ndim != 2 or vel.shape[1] != 3:
        raise ValueError("snapshot expects an (N, 3) velocity array")
    header = SNAPSHOT_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION,
                                  vel.shape[0], float(time), int(seed))
    return header + vel.tobytes()


def write_snapshot(path, velocities, time: float, seed: int) -> str:
    data = snapshot_bytes(velocities, time, seed)
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def read_snapshot(path):
    """Returns (velocities, time, seed); validates magic and version."""
    raw = Path(path).read_bytes()
    if len(raw) < SNAPSHOT_HEADER.size:
        raise ValueError(f"snapshot {path} is truncated")
    magic, version, count, time, seed = SNAPSHOT_HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"snapshot {path} has bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"snapshot {path} has unsupported version {version}")
    body = raw[SNAPSHOT_HEADER.size:]
    if len(body) != 24 * count:
        raise ValueError(f"snapshot {path} payload size mismatch")
    vel = np.frombuffer(body, dtype="<f8").reshape(count, 3).copy()
    return vel, time, seed


# ---------------------------------------------------------------------------
# CSV


def _moment_label(order: float) -> str:
    return f"M{order:g}"


def moments_csv_text(series) -> str:
    """Moment-series CSV: t,M0,M2,...,E,px,py,pz,collisions (CRLF rows)."""
    orders = [float(o) for o in series.orders]
    header = ["t", "M0"] + [_moment_label(o) for o in orders] + [
        "E", "px", "py", "pz", "collisions"]
    lines = [",".join(header)]
    for k, t in enumerate(series.times):
        row = [repr(float(t)), repr(1.0)]
        row += [repr(float(series.moments[o][k])) for o in orders]
        row.append(repr(float(series.energy[k])))
        row += [repr(float(c)) for c in series.momentum[k]]
        row.append(str(int(series.collisions[k])))
        lines.append(",".join(row))
    return "\r\n".join(lines) + "\r\n"


def table_csv_text(header, rows) -> str:
    """Generic RFC-4180 table: floats via repr, ints verbatim, CRLF rows."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, (bool, np.bool_)):
                cells.append(str(bool(cell)).lower())
            elif isinstance(cell, (int, np.integer)):
                cells.append(str(int(cell)))
            elif isinstance(cell, (float, np.floating)):
                cells.append(repr(float(cell)))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    return "\r\n".join(lines) + "\r\n"


# ---------------------------------------------------------------------------
# output directories and manifests


@dataclass
class ArtifactWriter:
    """Collects data artifacts of one run and their SHA-256 hashes."""

    out_dir: Path
    artifacts: dict = field(default_factory=dict)

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def write_bytes(self, name: str, data: bytes) -> Path:
        path = self.out_dir / name
        path.write_bytes(data)
        self.artifacts[name] = hashlib.sha256(data).hexdigest()
        return path

    def write_text(self, name: str, text: str) -> Path:
        return self.write_bytes(name, text.encode("utf-8"))

    def write_json(self, name: str, obj) -> Path:
        return self.write_text(name, canonical_json(obj))


def module_versions() -> dict:
    import numpy
    import scipy
    versions = {"numpy": numpy.__version__, "scipy": scipy.__version__,
                "backend": ACTIVE_BACKEND}
    try:
        import numba
        versions["numba"] = numba.__version__
    except ImportError:
        versions["numba"] = None
    return versions


def write_manifest(writer: ArtifactWriter, spec: ExperimentSpec,
                   started: float, finished: float) -> Path:
    manifest = {
        "config": spec.tree(),
        "config_hash": spec.config_hash,
        "kind": spec.kind,
        "seed": spec.seed,
        "workers": spec.workers,
        "tool_version": TOOL_VERSION,
        "module_versions": module_versions(),
        "started_unix": started,
        "finished_unix": finished,
        "outputs": dict(sorted(writer.artifacts.items())),
    }
    path = writer.out_dir / MANIFEST_NAME
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")
    return path


def read_manifest(out_dir) -> dict:
    path = Path(out_dir) / MANIFEST_NAME
    if not path.is_file():
        raise FileNotFoundError(f"no {MANIFEST_NAME} in {out_dir}")
    return json.loads(path.read_text(encoding="utf-8"))


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def wall_clock() -> float:
    return _time.time()
