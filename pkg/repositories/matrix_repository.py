"""Matrix repository: CSV text and BMAT binary files."""
import csv
from pathlib import Path
from typing import Union

import numpy as np

from core.config import settings
from core.errors import ConfigError
from models.matrix import Matrix, as_matrix

BMAT_MAGIC = b"BMAT"
_HEADER = np.dtype("<u8")
_DATA = np.dtype("<f8")


def format_float(value: float) -> str:
    """Shortest round-trip repr, falling back to CSV_FLOAT_DIGITS significant digits."""
    value = float(value)
    text = repr(value)
    if float(text) != value:
        text = f"{value:.{settings.CSV_FLOAT_DIGITS}g}"
    return text


class MatrixRepository:
    """
    Read and write dense matrices.

    BMAT layout: magic b"BMAT", rows and cols as little-endian u64, then
    rows·cols little-endian f64 entries in row-major order. CSV: one row
    per line, comma separated, no header.
    """

    @staticmethod
    def write_bmat(path: Union[str, Path], m: Matrix) -> None:
        m = as_matrix(m)
        with open(path, "wb") as f:
            f.write(BMAT_MAGIC)
            f.write(np.array(m.shape, dtype=_HEADER).tobytes())
            f.write(np.ascontiguousarray(m, dtype=_DATA).tobytes(order="C"))

    @staticmethod
    def read_bmat(path: Union[str, Path]) -> Matrix:
        """
        Raises:
            ConfigError: If the magic or the payload size is wrong
        """
        data = Path(path).read_bytes()
        if data[:4] != BMAT_MAGIC:
            raise ConfigError(f"{path}: not a BMAT file")
        if len(data) < 20:
            raise ConfigError(f"{path}: truncated BMAT header")
        rows, cols = (int(v) for v in np.frombuffer(data[4:20], dtype=_HEADER))
        payload = data[20:]
        if len(payload) != rows * cols * _DATA.itemsize:
            raise ConfigError(f"{path}: expected {rows}x{cols} entries, payload has {len(payload)} bytes")
        values = np.frombuffer(payload, dtype=_DATA).astype(np.float64).reshape(rows, cols)
        return as_matrix(values, str(path))

    @staticmethod
    def write_csv(path: Union[str, Path], m: Matrix) -> None:
        m = as_matrix(m)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            for row in m:
                writer.writerow([format_float(v) for v in row])

    @staticmethod
    def read_csv(path: Union[str, Path]) -> Matrix:
        """
        Raises:
            ConfigError: With the offending line number on a malformed entry or ragged row
        """
        rows = []
        with open(path, newline="") as f:
            for lineno, row in enumerate(csv.reader(f), start=1):
                if not row or all(not cell.strip() for cell in row):
                    continue
                try:
                    values = [float(cell) for cell in row]
                except ValueError as e:
                    raise ConfigError(f"{path}: {e}", line=lineno) from e
                if rows and len(values) != len(rows[0]):
                    raise ConfigError(f"{path}: expected {len(rows[0])} columns, got {len(values)}", line=lineno)
                rows.append(values)
        if not rows:
            raise ConfigError(f"{path}: empty matrix file")
        return as_matrix(np.array(rows), str(path))

    @staticmethod
    def read(path: Union[str, Path]) -> Matrix:
        """Dispatch on extension: .csv is text, anything else BMAT."""
        if str(path).lower().endswith(".csv"):
            return MatrixRepository.read_csv(path)
        return MatrixRepository.read_bmat(path)

    @staticmethod
    def write(path: Union[str, Path], m: Matrix) -> None:
        if str(path).lower().endswith(".csv"):
            MatrixRepository.write_csv(path, m)
        else:
            MatrixRepository.write_bmat(path, m)
