"""
CSV and text file helpers for the command-line front end.

Matrices are comma separated and row major, with an optional header row that
is detected by its first non-numeric cell. Floats are written with
settings.CSV_PRECISION significant digits.
"""
import csv
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Type

import numpy as np

from fvsggm.core.config import settings
from fvsggm.core.exceptions import CsvFormatError, DimensionMismatchError, InputError


def format_float(value: float) -> str:
    return f"{float(value):.{settings.CSV_PRECISION}g}"


def _cell(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    return value


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_text(path: str, error: Type[InputError] = InputError) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise error(f"cannot read {path}: {e.strerror or e}") from e
    except UnicodeDecodeError as e:
        raise error(f"cannot read {path}: not UTF-8 text (byte {e.start})") from e


def write_text(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")


def read_matrix_csv(path: str) -> Tuple[np.ndarray, Optional[List[str]]]:
    """
    Read a numeric matrix and its optional header.

    Raises:
        CsvFormatError: If the file is unreadable, empty, ragged or non-numeric
    """
    text = read_text(path, CsvFormatError)
    rows = [[cell.strip() for cell in row] for row in csv.reader(text.splitlines())]
    rows = [row for row in rows if row and any(row)]
    if not rows:
        raise CsvFormatError(f"{path} holds no data")

    header = None
    if not all(_is_number(cell) for cell in rows[0]):
        header, rows = rows[0], rows[1:]
        if not rows:
            raise CsvFormatError(f"{path} has a header but no data rows")

    width = len(header) if header is not None else len(rows[0])
    for line, row in enumerate(rows, start=2 if header is not None else 1):
        if len(row) != width:
            raise CsvFormatError(f"{path}: row {line} has {len(row)} fields, expected {width}")
    try:
        values = np.array([[float(cell) for cell in row] for row in rows], dtype=float)
    except ValueError as e:
        raise CsvFormatError(f"{path}: non-numeric entry ({e})") from e
    if not np.all(np.isfinite(values)):
        raise CsvFormatError(f"{path}: non-finite entry")
    return values, header


def read_vector_csv(path: str, length: int) -> np.ndarray:
    """A vector given as one row or one column."""
    values, _ = read_matrix_csv(path)
    if 1 not in values.shape or values.size != length:
        raise DimensionMismatchError(f"{path}: expected a vector of length {length}, got shape {values.shape}")
    return values.reshape(-1)


def write_matrix_csv(path: str, values: np.ndarray, header: Optional[Sequence[str]] = None) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for row in np.atleast_2d(values):
            writer.writerow([format_float(v) for v in row])


def write_rows_csv(path: str, fieldnames: Sequence[str], rows: Iterable[Dict[str, Any]]) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(fieldnames), extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _cell(value) for key, value in row.items()})


def sidecar_path(path: str, suffix: str) -> str:
    """out.json -> out<suffix>, e.g. '.trace.csv'."""
    target = Path(path)
    return str(target.with_name(target.stem + suffix))
