"""JSON matrix schema and the trajectory CSV format.

Matrices (and vectors, as single columns) serialize to
``{"rows", "cols", "re", "im"}`` with row-major flat lists.

Trajectory CSV columns: ``t, segment_label, x0_re, x0_im, ..., y0_re,
y0_im, ...`` and, for non-uniform quadrature, a trailing ``weight`` column.
``t`` is global time, ``window_index * window_length + local time``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IngestError, ShapeError
from .hilbert import BipartiteShape
from .processes import TrajectoryPair


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise ShapeError(f"cannot serialize array of shape {m.shape}")
    flat = m.reshape(-1)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "re": [float(v) for v in flat.real],
        "im": [float(v) for v in flat.imag],
    }


def matrix_from_json(doc: dict) -> np.ndarray:
    try:
        rows, cols = int(doc["rows"]), int(doc["cols"])
        re = np.asarray(doc["re"], dtype=float)
        im = np.asarray(doc.get("im", [0.0] * len(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ShapeError(f"malformed matrix document: {exc}") from exc
    if re.size != rows * cols or im.size != rows * cols:
        raise ShapeError(f"matrix document declares {rows}x{cols} but carries {re.size} entries")
    return (re + 1j * im).reshape(rows, cols)


def vector_from_json(doc) -> np.ndarray:
    """Accepts the matrix schema (one column), ``{"re", "im"}`` or a list of reals."""
    if isinstance(doc, dict) and "rows" not in doc:
        re = np.asarray(doc.get("re", []), dtype=float)
        im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape or re.ndim != 1:
            raise ShapeError("vector document needs equal-length 're' and 'im' lists")
        return re + 1j * im
    if isinstance(doc, dict):
        m = matrix_from_json(doc)
        if m.shape[1] != 1:
            raise ShapeError(f"expected a column vector, got {m.shape}")
        return m[:, 0]
    return np.asarray(doc, dtype=complex)


def csv_header(shape: BipartiteShape, weighted: bool = False) -> list[str]:
    cols = ["t", "segment_label"]
    for side, dim in (("x", shape.dim_a), ("y", shape.dim_b)):
        for i in range(dim):
            cols += [f"{side}{i}_re", f"{side}{i}_im"]
    if weighted:
        cols.append("weight")
    return cols


def write_trajectories(path, trajs: list[TrajectoryPair]) -> None:
    shape = trajs[0].shape
    weighted = any(t.weights is not None for t in trajs)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_header(shape, weighted))
        for traj in trajs:
            offset = traj.window_index * traj.window_length
            quad = traj.quadrature()
            for i in range(traj.n_points):
                row = [repr(float(offset + traj.times[i])), str(int(traj.segment_labels[i]))]
                for v in np.concatenate([traj.x_path[i], traj.y_path[i]]):
                    row += [repr(float(v.real)), repr(float(v.imag))]
                if weighted:
                    row.append(repr(float(quad[i])))
                writer.writerow(row)


@dataclass
class TimeSeriesRecord:
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    labels: np.ndarray
    weights: np.ndarray | None = None

    @property
    def shape(self) -> BipartiteShape:
        return BipartiteShape(self.x.shape[1], self.y.shape[1])


def _dims_from_header(header: list[str]) -> tuple[int, int, bool]:
    weighted = bool(header) and header[-1] == "weight"
    body = header[2:-1] if weighted else header[2:]
    dim_a = sum(1 for c in body if c.startswith("x") and c.endswith("_re"))
    dim_b = sum(1 for c in body if c.startswith("y") and c.endswith("_re"))
    return dim_a, dim_b, weighted


def read_time_series(path, shape=None) -> TimeSeriesRecord:
    """Parse a trajectory CSV. Raises :class:`IngestError` with a line number."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise IngestError(f"{path}: empty file", line=1)
    header = [c.strip() for c in rows[0]]
    if header[:2] != ["t", "segment_label"]:
        raise IngestError(f"{path}:1: header must start with 't,segment_label'", line=1)
    dim_a, dim_b, weighted = _dims_from_header(header)
    if shape is not None:
        shape = BipartiteShape.of(shape)
        if (dim_a, dim_b) != (shape.dim_a, shape.dim_b):
            raise IngestError(
                f"{path}:1: header has dims ({dim_a}, {dim_b}) but shape ({shape.dim_a}, {shape.dim_b}) was requested",
                line=1,
            )
    if dim_a < 1 or dim_b < 1:
        raise IngestError(f"{path}:1: header declares no x or y components", line=1)
    width = 2 + 2 * (dim_a + dim_b) + int(weighted)
    times, labels, xs, ys, ws = [], [], [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            raise IngestError(f"{path}:{lineno}: expected {width} fields, got {len(row)}", line=lineno)
        try:
            t = float(row[0])
            label = int(row[1])
            vals = np.array([float(c) for c in row[2:2 + 2 * (dim_a + dim_b)]])
            w = float(row[-1]) if weighted else None
        except ValueError as exc:
            raise IngestError(f"{path}:{lineno}: {exc}", line=lineno) from exc
        if not np.isfinite(t) or not np.all(np.isfinite(vals)):
            raise IngestError(f"{path}:{lineno}: non-finite value", line=lineno)
        if times and t <= times[-1]:
            raise IngestError(f"{path}:{lineno}: time {t!r} is not strictly increasing", line=lineno)
        z = vals[0::2] + 1j * vals[1::2]
        times.append(t)
        labels.append(label)
        xs.append(z[:dim_a])
        ys.append(z[dim_a:])
        ws.append(w)
    if not times:
        raise IngestError(f"{path}: no data rows", line=2)
    return TimeSeriesRecord(
        times=np.array(times),
        x=np.array(xs, dtype=complex),
        y=np.array(ys, dtype=complex),
        labels=np.array(labels, dtype=int),
        weights=np.array(ws, dtype=float) if weighted else None,
    )


def split_windows(record: TimeSeriesRecord, window_length: float, n_windows=None) -> list[TrajectoryPair]:
    """Partition rows into windows ``[k W, (k+1) W)`` by their time stamp."""
    if not window_length > 0:
        raise ValueError("window_length must be positive")
    index = np.floor(record.times / window_length).astype(int)
    if index.min() < 0:
        raise IngestError("negative time stamps cannot be assigned to a window")
    count = int(index.max()) + 1 if n_windows is None else int(n_windows)
    if index.max() >= count:
        raise IngestError(f"data extends past the last of {count} windows")
    sizes = np.bincount(index, minlength=count)
    empty = [int(k) for k in np.flatnonzero(sizes == 0)]
    if empty:
        raise IngestError(f"windows without samples: {empty}", empty_windows=empty)
    trajs = []
    for k in range(count):
        rows = index == k
        trajs.append(TrajectoryPair(
            times=record.times[rows] - k * window_length,
            x_path=record.x[rows],
            y_path=record.y[rows],
            segment_labels=record.labels[rows],
            weights=None if record.weights is None else record.weights[rows],
            window_index=k,
            window_length=window_length,
        ))
    return trajs
