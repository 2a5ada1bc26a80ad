"""Trace repository: CSV and JSON-lines trace files."""
import csv
import io
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from core.errors import ConfigError
from models.trace import StepRecord, Trace
from repositories.matrix_repository import format_float

LEADING_COLUMNS = ["iter", "alpha", "objective", "lagrangian", "lhat", "relChg"]
RESIDUAL_COLUMNS = ["primal_res", "stationarity_res"]
MULTIPLIER_COLUMNS = ["multiplier_step", "multiplier_norm", "multiplier_identity"]


def csv_columns(block_names: Sequence[str]) -> List[str]:
    """
    Fixed column order: iter, alpha, objective, lagrangian, lhat, relChg,
    relErr_<block>..., primal_res, stationarity_res, then the multiplier and
    per-block step columns used by diagnostics.
    """
    return (
        LEADING_COLUMNS
        + [f"relErr_{n}" for n in block_names]
        + RESIDUAL_COLUMNS
        + MULTIPLIER_COLUMNS
        + [f"step_{n}" for n in block_names]
    )


def _row(record: StepRecord, block_names: Sequence[str]) -> Dict[str, Any]:
    row: Dict[str, Any] = {
        "iter": record.iteration,
        "alpha": record.alpha,
        "objective": record.objective,
        "lagrangian": record.lagrangian,
        "lhat": record.lhat,
        "relChg": record.relchg,
    }
    for n in block_names:
        row[f"relErr_{n}"] = record.rel_err.get(n)
    row["primal_res"] = record.primal_res
    row["stationarity_res"] = record.stationarity_res
    row["multiplier_step"] = record.multiplier_step
    row["multiplier_norm"] = record.multiplier_norm
    row["multiplier_identity"] = record.multiplier_identity
    return row


def _record(row: Dict[str, Any], block_names: Sequence[str], steps: List[float]) -> StepRecord:
    return StepRecord(
        iteration=int(row["iter"]),
        alpha=row["alpha"],
        objective=row["objective"],
        lagrangian=row["lagrangian"],
        lhat=row.get("lhat"),
        relchg=row["relChg"],
        rel_err={n: row.get(f"relErr_{n}") for n in block_names},
        primal_res=row["primal_res"],
        stationarity_res=row.get("stationarity_res"),
        multiplier_step=row.get("multiplier_step") or 0.0,
        multiplier_norm=row.get("multiplier_norm") or 0.0,
        multiplier_identity=row.get("multiplier_identity") or 0.0,
        block_steps=steps,
    )


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    return format_float(value)


def _parse_cell(text: str) -> Optional[float]:
    text = text.strip()
    if not text:
        return None
    return float(text)


class TraceRepository:
    """Read and write traces. Header metadata is kept in both formats."""

    @staticmethod
    def to_csv(trace: Trace) -> str:
        buffer = io.StringIO()
        for key, value in trace.header.items():
            buffer.write(f"# {key}={json.dumps(value, sort_keys=True)}\n")
        columns = csv_columns(trace.block_names)
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for record in trace.records:
            row = _row(record, trace.block_names)
            for n, step in zip(trace.block_names, record.block_steps):
                row[f"step_{n}"] = step
            writer.writerow([_cell(row.get(c)) for c in columns])
        return buffer.getvalue()

    @staticmethod
    def write_csv(path: Union[str, Path], trace: Trace) -> None:
        Path(path).write_text(TraceRepository.to_csv(trace))

    @staticmethod
    def read_csv(path: Union[str, Path]) -> Trace:
        """
        Raises:
            ConfigError: With the line number of a malformed header or row
        """
        header: Dict[str, Any] = {}
        columns: Optional[List[str]] = None
        records: List[StepRecord] = []
        block_names: List[str] = []
        with open(path, newline="") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                if line.startswith("#"):
                    key, sep, value = line[1:].strip().partition("=")
                    if not sep:
                        raise ConfigError(f"{path}: header line must read '# key=value'", line=lineno)
                    try:
                        header[key.strip()] = json.loads(value)
                    except json.JSONDecodeError:
                        header[key.strip()] = value
                    continue
                cells = next(csv.reader([line]))
                if columns is None:
                    columns = cells
                    if "iter" not in columns:
                        raise ConfigError(f"{path}: missing 'iter' column", line=lineno)
                    block_names = [c[len("step_"):] for c in columns if c.startswith("step_")]
                    continue
                if len(cells) != len(columns):
                    raise ConfigError(f"{path}: expected {len(columns)} cells, got {len(cells)}", line=lineno)
                try:
                    row = {c: _parse_cell(v) for c, v in zip(columns, cells)}
                    steps = [row[f"step_{n}"] or 0.0 for n in block_names]
                    records.append(_record(row, block_names, steps))
                except (ValueError, KeyError, TypeError) as e:
                    raise ConfigError(f"{path}: malformed trace row: {e}", line=lineno) from e
        trace = Trace(block_names=block_names, header=header)
        for record in records:
            trace.append(record)
        return trace

    @staticmethod
    def to_jsonl(trace: Trace) -> str:
        header = dict(trace.header)
        header["block_names"] = list(trace.block_names)
        lines = [json.dumps({"header": header}, sort_keys=True)]
        for record in trace.records:
            row = _row(record, trace.block_names)
            row["block_steps"] = list(record.block_steps)
            lines.append(json.dumps(row))
        return "\n".join(lines) + "\n"

    @staticmethod
    def write_jsonl(path: Union[str, Path], trace: Trace) -> None:
        Path(path).write_text(TraceRepository.to_jsonl(trace))

    @staticmethod
    def read_jsonl(path: Union[str, Path]) -> Trace:
        """
        Raises:
            ConfigError: With the line number of a malformed object
        """
        header: Dict[str, Any] = {}
        block_names: List[str] = []
        records: List[StepRecord] = []
        with open(path) as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as e:
                    raise ConfigError(f"{path}: {e.msg}", line=lineno) from e
                if "header" in obj:
                    header = dict(obj["header"])
                    block_names = list(header.pop("block_names", []))
                    continue
                try:
                    records.append(_record(obj, block_names, list(obj.get("block_steps", []))))
                except (ValueError, KeyError, TypeError) as e:
                    raise ConfigError(f"{path}: malformed trace record: {e}", line=lineno) from e
        trace = Trace(block_names=block_names, header=header)
        for record in records:
            trace.append(record)
        return trace

    @staticmethod
    def read(path: Union[str, Path]) -> Trace:
        """Dispatch on extension: .jsonl is JSON lines, anything else CSV."""
        if str(path).lower().endswith(".jsonl"):
            return TraceRepository.read_jsonl(path)
        return TraceRepository.read_csv(path)

    @staticmethod
    def write(path: Union[str, Path], trace: Trace) -> None:
        if str(path).lower().endswith(".jsonl"):
            TraceRepository.write_jsonl(path, trace)
        else:
            TraceRepository.write_csv(path, trace)
