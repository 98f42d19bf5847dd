"""Plain-text readers and writers.

Formats:
  * point set: one "x y z" line per node, whitespace separated
  * edge list: one "u v" line per edge, 0-indexed
  * trajectory: point-set frames, each preceded by "# step <k>"
  * csv: comma separated with a header row

Floats are written with 17 significant digits so a written value parses
back to the identical double and equal runs produce byte-identical
files. Parse errors report file and line number.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Sequence

import numpy as np

from .geometry import Graph


def format_float(x: float) -> str:
    return "%.17g" % float(x)


def _parse_error(path, lineno: int, msg: str) -> ValueError:
    return ValueError(f"{path}:{lineno}: {msg}")


def write_point_set(path, points: np.ndarray) -> None:
    pts = np.asarray(points, dtype=np.float64)
    with open(path, "w") as fh:
        for row in pts:
            fh.write(" ".join(format_float(v) for v in row) + "\n")


def read_point_set(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) != 3:
                raise _parse_error(path, lineno,
                                   f"expected 3 coordinates, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise _parse_error(path, lineno, f"bad float in {stripped!r}") from None
    if not rows:
        raise ValueError(f"{path}: no points found")
    return np.array(rows, dtype=np.float64)


def write_edge_list(path, graph: Graph) -> None:
    with open(path, "w") as fh:
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")


def read_edge_list(path, n: int | None = None) -> Graph:
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) != 2:
                raise _parse_error(path, lineno,
                                   f"expected 'u v', got {stripped!r}")
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise _parse_error(path, lineno, f"bad node index in {stripped!r}") from None
    if not edges:
        raise ValueError(f"{path}: no edges found")
    if n is None:
        n = max(max(u, v) for u, v in edges) + 1
    return Graph(n, edges)


def write_trajectory(path, trajectory: Sequence[tuple[int, np.ndarray]]) -> None:
    with open(path, "w") as fh:
        for step, pts in trajectory:
            fh.write(f"# step {int(step)}\n")
            for row in np.asarray(pts, dtype=np.float64):
                fh.write(" ".join(format_float(v) for v in row) + "\n")


def read_trajectory(path) -> list[tuple[int, np.ndarray]]:
    frames: list[tuple[int, np.ndarray]] = []
    step = None
    rows: list[list[float]] = []

    def flush():
        if step is not None:
            if not rows:
                raise ValueError(f"{path}: frame {step} has no points")
            frames.append((step, np.array(rows, dtype=np.float64)))

    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                parts = stripped[1:].split()
                if len(parts) != 2 or parts[0] != "step":
                    raise _parse_error(path, lineno, f"bad frame header {stripped!r}")
                flush()
                try:
                    step = int(parts[1])
                except ValueError:
                    raise _parse_error(path, lineno, f"bad step index {parts[1]!r}") from None
                rows = []
                continue
            if step is None:
                raise _parse_error(path, lineno, "point data before any '# step' header")
            parts = stripped.split()
            if len(parts) != 3:
                raise _parse_error(path, lineno,
                                   f"expected 3 coordinates, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise _parse_error(path, lineno, f"bad float in {stripped!r}") from None
    flush()
    if not frames:
        raise ValueError(f"{path}: no frames found")
    return frames


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write all rows at once; the file is complete or absent, never partial."""
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} cells, header has {len(header)}")
        lines.append(",".join(_format_cell(c) for c in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty csv")
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    for i, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise _parse_error(path, i, f"expected {len(header)} cells, got {len(row)}")
    return header, rows


def write_manifest(path, payload: dict) -> None:
    """Record a resolved run configuration. Deliberately no timestamps or
    host details, so identical runs write identical manifests."""
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def default_output_dir(explicit=None) -> str:
    """Resolve the output directory: explicit flag, then the SE3DIFF_OUT
    environment variable, then the current directory."""
    if explicit:
        return str(explicit)
    return os.environ.get("SE3DIFF_OUT", ".")
