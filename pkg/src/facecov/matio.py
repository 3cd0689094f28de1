"""Reading and writing data matrices (J x I, one curve per column).

Two formats are supported:

* **csv** — header-free numeric CSV; missing cells may be empty or any of
  ``NA``, ``NaN``, ``nan``.  Written missing values are ``NA``.
* **packed** — little-endian binary: 8-byte magic ``FACE0001``, two uint64
  dimensions (rows, columns), then the float64 payload in column-major
  order.  Missing values are stored as IEEE NaN.

``read_matrix`` sniffs the format from the magic bytes unless told
otherwise.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import InputError

MAGIC = b"FACE0001"
_HEADER = struct.Struct("<QQ")
_NA_STRINGS = frozenset({"", "na", "nan"})


def read_csv_matrix(path, skip_header: bool = False) -> np.ndarray:
    rows: list = []
    width = None
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if skip_header:
                skip_header = False
                continue
            cells = [c.strip() for c in line.split(",")]
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise InputError(
                    f"{path}: line {lineno} has {len(cells)} cells, "
                    f"expected {width}")
            row = []
            for col, cell in enumerate(cells, start=1):
                if cell.lower() in _NA_STRINGS:
                    row.append(np.nan)
                    continue
                try:
                    row.append(float(cell))
                except ValueError:
                    raise InputError(
                        f"{path}: line {lineno}, column {col}: "
                        f"cannot parse {cell!r} as a number") from None
            rows.append(row)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)


def write_csv_matrix(path, y: np.ndarray) -> None:
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise InputError(f"expected a 2-d matrix, got shape {y.shape}")
    with open(path, "w", newline="") as fh:
        for row in y:
            fh.write(",".join("NA" if np.isnan(v) else repr(float(v))
                              for v in row))
            fh.write("\n")


def read_packed_matrix(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + _HEADER.size:
        raise InputError(f"{path}: truncated packed file")
    if data[:len(MAGIC)] != MAGIC:
        raise InputError(f"{path}: bad magic {data[:len(MAGIC)]!r}, "
                         f"expected {MAGIC!r}")
    n_rows, n_cols = _HEADER.unpack_from(data, len(MAGIC))
    offset = len(MAGIC) + _HEADER.size
    expected = n_rows * n_cols * 8
    if len(data) - offset != expected:
        raise InputError(
            f"{path}: payload is {len(data) - offset} bytes, expected "
            f"{expected} for a {n_rows} x {n_cols} matrix")
    flat = np.frombuffer(data, dtype="<f8", count=n_rows * n_cols,
                         offset=offset)
    return flat.reshape((n_rows, n_cols), order="F").copy()


def write_packed_matrix(path, y: np.ndarray) -> None:
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise InputError(f"expected a 2-d matrix, got shape {y.shape}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(*y.shape))
        fh.write(y.astype("<f8").tobytes(order="F"))


def sniff_format(path) -> str:
    """Return ``"packed"`` or ``"csv"`` by peeking at the file head."""
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    return "packed" if head == MAGIC else "csv"


def read_matrix(path, fmt: str = "auto", skip_header: bool = False) -> np.ndarray:
    if fmt == "auto":
        fmt = sniff_format(path)
    if fmt == "csv":
        return read_csv_matrix(path, skip_header=skip_header)
    if fmt == "packed":
        return read_packed_matrix(path)
    raise InputError(f"unknown format {fmt!r}; use 'csv', 'packed', or 'auto'")


def write_matrix(path, y: np.ndarray, fmt: str = "csv") -> None:
    if fmt == "csv":
        write_csv_matrix(path, y)
    elif fmt == "packed":
        write_packed_matrix(path, y)
    else:
        raise InputError(f"unknown format {fmt!r}; use 'csv' or 'packed'")
