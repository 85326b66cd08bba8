"""CSV emission, run manifests, and digest bookkeeping.

All numeric CSV output uses Python's shortest round-trip decimal (repr),
so files regenerate byte-identically from (spec, seed).
"""

from __future__ import annotations

import hashlib
import json
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["fmt", "write_csv", "write_matrix_csv", "write_eigenvalue_csv",
           "write_singular_csv", "ReportTable", "RunManifest"]


def fmt(value) -> str:
    """Round-trip decimal for floats; plain str for ints and strings."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_matrix_csv(path, M: np.ndarray) -> None:
    rows = ((i, j, M[i, j].real, M[i, j].imag)
            for i in range(M.shape[0]) for j in range(M.shape[1]))
    write_csv(path, ["row", "col", "re", "im"], rows)


def write_eigenvalue_csv(path, clouds: list[np.ndarray]) -> None:
    """Schema: trial, index, re, im."""
    rows = ((t, k, z.real, z.imag)
            for t, cloud in enumerate(clouds) for k, z in enumerate(cloud))
    write_csv(path, ["trial", "index", "re", "im"], rows)


def write_singular_csv(path, records) -> None:
    """Schema: trial, z_re, z_im, index, sigma.  records: (trial, z, sigmas)."""
    rows = ((t, z.real, z.imag, k, s)
            for t, z, sigmas in records for k, s in enumerate(sigmas))
    write_csv(path, ["trial", "z_re", "z_im", "index", "sigma"], rows)


class ReportTable:
    """Accumulates verify-style rows: metric, value, target, tolerance, pass."""

    header = ["metric", "value", "target", "tolerance", "pass"]

    def __init__(self) -> None:
        self.rows: list[tuple] = []

    def add(self, metric: str, value: float, target: float, tolerance: float,
            passed: bool) -> None:
        self.rows.append((metric, value, target, tolerance, bool(passed)))

    @property
    def all_passed(self) -> bool:
        return all(r[-1] for r in self.rows)

    def write(self, path) -> None:
        write_csv(path, self.header, self.rows)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Spec echo, stream inventory, timings, and output digests for one run."""

    spec: dict
    seed: int
    streams: list[int] = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    versions: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.versions:
            import matplotlib

            from .. import __version__

            self.versions = {
                "glbm": __version__,
                "numpy": np.__version__,
                "matplotlib": matplotlib.__version__,
                "python": platform.python_version(),
            }
        self._t0 = time.monotonic()

    def time_section(self, name: str) -> "_Timer":
        return _Timer(self, name)

    def register(self, path) -> None:
        p = Path(path)
        self.outputs[p.name] = _sha256(p)

    def write(self, path) -> None:
        self.timings["total_s"] = round(time.monotonic() - self._t0, 6)
        payload = {
            "spec": self.spec,
            "seed": self.seed,
            "streams": self.streams,
            "timings": self.timings,
            "versions": self.versions,
            "outputs": self.outputs,
            "failures": self.failures,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


class _Timer:
    def __init__(self, manifest: RunManifest, name: str):
        self.manifest, self.name = manifest, name

    def __enter__(self):
        self.start = time.monotonic()
        return self

    def __exit__(self, *exc):
        self.manifest.timings[self.name] = round(time.monotonic() - self.start, 6)
        return False
