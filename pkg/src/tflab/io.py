"""CSV / JSON serialisation shared by the library and the CLI.

Floats are written with 17 significant digits, so every double survives a
write/read round trip exactly.  JSON is written with sorted keys and a fixed
indent, so identical inputs give identical bytes.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import DomainError
from .operator import OperatorMatrix, Spectrum


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([format_value(v) for v in r])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DomainError(f"{path}: empty CSV file")
    return [c.strip() for c in rows[0]], rows[1:]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")


SPECTRUM_COLUMNS = ("k", "lambda")
MATRIX_COLUMNS = ("m", "n", "re", "im")


def write_spectrum_csv(path, spec: Spectrum) -> None:
    write_csv(path, SPECTRUM_COLUMNS, ((k, float(v)) for k, v in enumerate(spec.values)))


def read_spectrum_csv(path) -> Spectrum:
    header, rows = read_csv(path)
    if header[:2] != list(SPECTRUM_COLUMNS):
        raise DomainError(f"{path}: expected header k,lambda")
    vals = np.array([float(r[1]) for r in rows])
    return Spectrum.from_values(vals, source="csv")


def write_matrix_csv(path, M: OperatorMatrix | np.ndarray) -> None:
    A = M.entries if isinstance(M, OperatorMatrix) else np.asarray(M)
    n = A.shape[0]
    write_csv(path, MATRIX_COLUMNS,
              ((i, j, float(A[i, j].real), float(A[i, j].imag)) for i in range(n) for j in range(n)))


def read_matrix_csv(path) -> np.ndarray:
    header, rows = read_csv(path)
    if header[:4] != list(MATRIX_COLUMNS):
        raise DomainError(f"{path}: expected header m,n,re,im")
    idx = np.array([[int(r[0]), int(r[1])] for r in rows])
    n = int(idx.max()) + 1 if idx.size else 0
    A = np.zeros((n, n), dtype=complex)
    for (i, j), r in zip(idx, rows):
        A[i, j] = float(r[2]) + 1j * float(r[3])
    return A
