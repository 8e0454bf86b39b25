"""Trajectory export: binary snapshot files and per-step CSV summaries.

Snapshot file layout (little endian)::

    int64 n | float64 dt | int64 stride | int64 count | count * n float64 (row-major)
"""

import csv
import struct

import numpy as np

HEADER = struct.Struct("<qdqq")


def write_snapshots(path, trajectory):
    snaps = np.ascontiguousarray(trajectory.snapshots, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(trajectory.grid.n, trajectory.grid.dt, trajectory.stride, snaps.shape[0]))
        fh.write(snaps.tobytes(order="C"))


def read_snapshots(path):
    """Return ``(n, dt, stride, array of shape (count, n))``."""
    with open(path, "rb") as fh:
        n, dt, stride, count = HEADER.unpack(fh.read(HEADER.size))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != count * n:
        raise ValueError(f"{path}: expected {count * n} values, found {data.size}")
    return n, dt, stride, data.reshape(count, n)


def write_summary_csv(path, trajectory):
    """Columns ``t, min, max, mean, variance``, one row per step."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "min", "max", "mean", "variance"])
        for row in zip(trajectory.times, trajectory.running_min, trajectory.running_max,
                       trajectory.mean, trajectory.variance):
            w.writerow([repr(float(v)) for v in row])


def write_rows(path, header, rows):
    """Deterministic CSV: floats via ``repr``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
