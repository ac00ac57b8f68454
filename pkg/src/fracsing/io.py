"""Run directories, CSV/JSON writers and the hash manifest.

All numbers are written with 17 significant digits and every file uses LF
line endings, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import Grid

MANIFEST = "manifest.json"


def fmt(v) -> str:
    """Integers verbatim, everything else with 17 significant digits."""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.16e}"


def _csv_text(header: list[str], rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def solution_csv_text(grid: Grid | None, u) -> str:
    """``x,u`` (interval) or ``x,y,u`` (rectangle) rows in grid order.

    ``grid=None`` or an empty field gives the header alone (``x,u``).
    """
    if grid is None or np.size(u) == 0:
        header = ["x", "u"] if grid is None or grid.domain.dim == 1 else ["x", "y", "u"]
        return _csv_text(header, [])
    u = np.asarray(u, dtype=float)
    if u.shape != grid.shape:
        raise ValueError(f"field shape {u.shape} does not match grid shape {grid.shape}")
    coords = [c.ravel() for c in grid.coordinates()]
    header = ["x", "u"] if grid.domain.dim == 1 else ["x", "y", "u"]
    return _csv_text(header, zip(*coords, u.ravel()))


def columns_csv_text(columns: dict[str, np.ndarray]) -> str:
    """Plot data: one column per key, all of equal length."""
    lens = {len(np.atleast_1d(v)) for v in columns.values()}
    if len(lens) > 1:
        raise ValueError(f"columns have different lengths: {sorted(lens)}")
    return _csv_text(list(columns), zip(*(np.atleast_1d(v) for v in columns.values())))


def _plain(obj):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def json_text(doc: dict) -> str:
    return json.dumps(_plain(doc), indent=2, allow_nan=False) + "\n"


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunArtifacts:
    """A run directory and the files written into it, in write order."""

    root: Path
    files: list[str] = field(default_factory=list)

    @classmethod
    def create(cls, root) -> "RunArtifacts":
        root = Path(root)
        if root.exists():
            if not root.is_dir():
                raise FileExistsError(f"{root} exists and is not a directory")
            if any(root.iterdir()):
                raise FileExistsError(f"run directory {root} is not empty; choose a new --out")
        root.mkdir(parents=True, exist_ok=True)
        return cls(root)

    def write(self, name: str, text: str) -> Path:
        if name in self.files or name == MANIFEST:
            raise FileExistsError(f"{name} was already written in this run")
        path = self.root / name
        with open(path, "x", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        self.files.append(name)
        return path

    def write_solution(self, name: str, grid: Grid, u) -> Path:
        return self.write(name, solution_csv_text(grid, u))

    def write_columns(self, name: str, columns: dict) -> Path:
        return self.write(name, columns_csv_text(columns))

    def write_json(self, name: str, doc: dict) -> Path:
        return self.write(name, json_text(doc))

    def manifest(self) -> dict:
        return {"files": [{"name": n, "bytes": (self.root / n).stat().st_size, "sha256": sha256(self.root / n)}
                          for n in sorted(self.files)]}

    def finalize(self) -> Path:
        path = self.root / MANIFEST
        with open(path, "x", encoding="utf-8", newline="\n") as fh:
            fh.write(json_text(self.manifest()))
        return path


def verify_manifest(root) -> list[str]:
    """Names whose hash no longer matches the manifest (empty when intact)."""
    root = Path(root)
    doc = json.loads((root / MANIFEST).read_text(encoding="utf-8"))
    return [e["name"] for e in doc["files"] if sha256(root / e["name"]) != e["sha256"]]


def write_solution_csv(grid: Grid, u, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(solution_csv_text(grid, u))


def write_report_json(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json_text(report))
