"""CSV datasets and atomic file output."""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ParseError
from .expfam import FamilyId
from .pipeline import LabeledDataset, UnlabeledDataset

__all__ = ["parse_dataset", "read_matrix", "write_csv", "atomic_write_text"]


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to a temp file beside ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 2**53 else repr(v)


def write_csv(path, rows, header=None, run: dict | None = None) -> None:
    """Write a numeric matrix as CSV.

    ``run`` is embedded as a leading ``# run: {...}`` comment line, which
    ``parse_dataset`` skips.  Floats use the shortest round-tripping repr.
    """
    lines = []
    if run is not None:
        lines.append("# run: " + json.dumps(run, sort_keys=True))
    if header is not None:
        lines.append(",".join(header))
    for row in np.atleast_2d(np.asarray(rows, dtype=float)):
        lines.append(",".join(_fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_matrix(path, has_header: bool = False) -> tuple[np.ndarray, list[str] | None]:
    """Read a rectangular numeric CSV.  Blank lines and ``#`` lines are skipped."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as err:
        raise ParseError(f"cannot open {path}: {err.strerror}") from None
    rows: list[list[float]] = []
    header = None
    width = None
    with fh:
        for lineno, cells in enumerate(csv.reader(fh), start=1):
            if not cells or all(not c.strip() for c in cells) or cells[0].lstrip().startswith("#"):
                continue
            if has_header and header is None:
                header = [c.strip() for c in cells]
                width = len(header)
                continue
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ParseError(f"ragged row: {len(cells)} cells, expected {width}", lineno)
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                bad = next(c for c in cells if not _is_float(c))
                raise ParseError(f"non-numeric cell {bad!r}", lineno) from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return np.array(rows), header


def _is_float(c: str) -> bool:
    try:
        float(c)
    except ValueError:
        return False
    return True


def parse_dataset(
    path,
    has_header: bool = False,
    label_column: int | str | None = None,
    family: str | FamilyId = "gaussian",
    num_classes: int | None = None,
):
    """Load a CSV as an UnlabeledDataset, or a LabeledDataset when a label column is given.

    ``label_column`` is 1-based (``"last"`` selects the final column).  Labels
    must be integers >= 1.
    """
    M, _ = read_matrix(path, has_header)
    if label_column is None:
        return UnlabeledDataset(M, family)
    ncol = M.shape[1]
    col = ncol if label_column == "last" else int(label_column)
    if not 1 <= col <= ncol:
        raise ParseError(f"label column {label_column} out of range 1..{ncol}")
    if ncol < 2:
        raise ParseError("a labeled file needs at least one feature column")
    y = M[:, col - 1]
    X = np.delete(M, col - 1, axis=1)
    bad = np.flatnonzero((y != np.round(y)) | (y < 1))
    if bad.size:
        i = int(bad[0])
        raise ParseError(f"label {_fmt(y[i])} in data row {i + 1} is not an integer >= 1")
    return LabeledDataset(X, y.astype(int), num_classes)
