"""CSV archives and forecast matrices."""

from __future__ import annotations

import csv
from datetime import datetime

import numpy as np

from .learn import Archive
from .matrix import ForecastMatrix


def to_step(text: str, origin: datetime | None, delta_t: float) -> int:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    if origin is None:
        raise ValueError(f"timestamp {text!r} needs an origin to convert into a step")
    hours = (datetime.fromisoformat(text) - origin).total_seconds() / 3600.0
    step = hours / delta_t
    if abs(step - round(step)) > 1e-6:
        raise ValueError(f"timestamp {text} is not on the {delta_t} h grid")
    return int(round(step))


def read_series(path, origin: datetime | None = None, delta_t: float = 1.0) -> np.ndarray:
    """Two-column CSV (timestamp or step, value) into a dense array; gaps become NaN."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for rec in reader:
            if rec:
                rows.append((to_step(rec[0], origin, delta_t), float(rec[1])))
    if not rows:
        return np.zeros(0)
    out = np.full(max(s for s, _ in rows) + 1, np.nan)
    for s, v in rows:
        out[s] = v
    return out


def read_archive(path, observations, origin: datetime | None = None, delta_t: float = 1.0,
                 start_day: float = 1.0) -> Archive:
    """CSV with columns ``execution_date, target_date, value``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"execution_date", "target_date", "value"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        records = [(to_step(r["execution_date"], origin, delta_t),
                    to_step(r["target_date"], origin, delta_t), float(r["value"]))
                   for r in reader]
    return Archive.from_records(records, observations, delta_t, start_day)


def write_archive(archive: Archive, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["execution_date", "target_date", "value"])
        for rec in archive.records():
            w.writerow(rec)


def write_matrix(matrix: ForecastMatrix, path) -> None:
    """Wide CSV: one row per target step, one column per execution step."""
    keys = matrix.execution_steps()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["target", "realization", *[f"exec_{k}" for k in keys]])
        for T, row in matrix.to_rows():
            w.writerow([T, repr(float(matrix.realization[T])), *[repr(row[k]) for k in keys]])


def read_matrix(path) -> ForecastMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        keys = [int(h.removeprefix("exec_")) for h in header[2:]]
        rows = [list(map(float, r[1:])) for r in reader if r]
    data = np.array(rows).reshape(len(rows), -1)
    return ForecastMatrix(data[:, 0].copy(), {k: data[:, j + 1].copy()
                                              for j, k in enumerate(keys)})

