"""Sweep CSV schema, SNR grids and dB-gap interpolation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

COLUMNS = ("snr_db", "method", "p_e", "p_e_raw", "std_err", "samples", "wall_time_s")


@dataclass(frozen=True)
class Row:
    snr_db: float
    method: str
    p_e: float
    p_e_raw: float
    std_err: float
    samples: int
    wall_time_s: float = 0.0


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def parse_snr_grid(text: str) -> list[float]:
    """'0:12:2' (inclusive range) or '0,3,6.5' (explicit list), values in dB."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ValidationError("SNR grid step must be positive")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            grid = [round(start + k * step, 10) for k in range(n)]
        else:
            grid = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse SNR grid {text!r}") from None
    check_grid(grid)
    return grid


def check_grid(grid) -> None:
    if not grid:
        raise ValidationError("SNR grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValidationError("SNR grid must be strictly increasing")


def _num(x) -> str:
    return repr(float(x))


def write_rows(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_num(r.snr_db), r.method, _num(r.p_e), _num(r.p_e_raw), _num(r.std_err), int(r.samples),
                    _num(r.wall_time_s)])


def rows_to_text(rows) -> str:
    buf = io.StringIO()
    write_rows(rows, buf)
    return buf.getvalue()


def read_rows(path) -> list[Row]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(COLUMNS) - set(reader.fieldnames):
            raise ValidationError(f"{path}: not a sweep CSV (expected columns {', '.join(COLUMNS)})")
        try:
            return [
                Row(float(d["snr_db"]), d["method"], float(d["p_e"]), float(d["p_e_raw"]), float(d["std_err"]),
                    int(d["samples"]), float(d["wall_time_s"]))
                for d in reader
            ]
        except ValueError as exc:
            raise ValidationError(f"{path}: bad value ({exc})") from None


def curve(rows, method: str):
    pts = sorted((r.snr_db, r.p_e) for r in rows if r.method == method)
    return np.array([p[0] for p in pts]), np.array([p[1] for p in pts])


def snr_at(snr_db, p_e, target: float) -> float:
    """SNR (dB) where the curve crosses ``target``, interpolating log10(p_e) linearly in dB.

    Returns NaN when the curve does not bracket the target.
    """
    x = np.asarray(snr_db, dtype=float)
    y = np.asarray(p_e, dtype=float)
    lt = math.log10(target)
    for k in range(len(x) - 1):
        a, b = y[k], y[k + 1]
        if a <= 0 or b <= 0:
            continue
        la, lb = math.log10(a), math.log10(b)
        if (la - lt) * (lb - lt) <= 0 and la != lb:
            return float(x[k] + (lt - la) / (lb - la) * (x[k + 1] - x[k]))
    return float("nan")


def db_gap(ref, test, target: float) -> float:
    """Horizontal distance test - ref (dB) at ``target``; each argument is (snr_db, p_e)."""
    return snr_at(*test, target) - snr_at(*ref, target)
