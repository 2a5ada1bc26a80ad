import json

import numpy as np
import pytest

from core.errors import ConfigError, FrameFormatError
from models.rpca import RpcaConfig
from models.trace import StepRecord, Trace
from repositories.config_repository import ConfigRepository
from repositories.frame_repository import FrameRepository
from repositories.matrix_repository import MatrixRepository, format_float
from repositories.report_repository import ReportRepository
from repositories.trace_repository import TraceRepository, csv_columns
from services.diagnostics_service import DiagnosticsService


def _trace():
    trace = Trace(block_names=("L", "S", "T"), header={"rows": 20, "gamma1": "alpha", "lambda": 0.3})
    for k in range(1, 4):
        trace.append(StepRecord(
            iteration=k,
            alpha=0.1 * 1.1 ** k,
            objective=1.0 / k,
            lagrangian=1.0 / k + 1e-3,
            lhat=1.0 / k + 2e-3,
            relchg=10.0 ** -k,
            rel_err={"L": 0.5 / k, "S": None, "T": 1.0 / 3.0},
            primal_res=1e-3 / k,
            stationarity_res=2e-3 / k,
            multiplier_step=0.25,
            multiplier_norm=float(k),
            multiplier_identity=1e-17,
            block_steps=[0.1, 0.2 / k, np.pi],
        ))
    return trace


def test_format_float_round_trips():
    for value in (0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0):
        assert float(format_float(value)) == value


def test_bmat_is_bit_exact(tmp_path, rng):
    m = rng.standard_normal((7, 3)) * 1e5
    path = tmp_path / "m.bmat"
    MatrixRepository.write(path, m)
    data = path.read_bytes()
    assert data[:4] == b"BMAT"
    assert len(data) == 4 + 16 + 21 * 8
    np.testing.assert_array_equal(MatrixRepository.read(path), m)


def test_bmat_errors(tmp_path):
    bad = tmp_path / "bad.bmat"
    bad.write_bytes(b"NOPE" + b"\0" * 16)
    with pytest.raises(ConfigError):
        MatrixRepository.read_bmat(bad)
    short = tmp_path / "short.bmat"
    short.write_bytes(b"BMAT" + np.array([2, 2], dtype="<u8").tobytes() + b"\0" * 8)
    with pytest.raises(ConfigError):
        MatrixRepository.read_bmat(short)


def test_csv_matrix_round_trip(tmp_path, rng):
    m = rng.standard_normal((4, 5))
    path = tmp_path / "m.csv"
    MatrixRepository.write(path, m)
    np.testing.assert_array_equal(MatrixRepository.read(path), m)


def test_csv_matrix_reports_line(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1,2\n3,x\n")
    with pytest.raises(ConfigError) as excinfo:
        MatrixRepository.read_csv(path)
    assert excinfo.value.line == 2
    path.write_text("1,2\n3\n")
    with pytest.raises(ConfigError) as excinfo:
        MatrixRepository.read_csv(path)
    assert excinfo.value.line == 2


def test_trace_csv_layout():
    text = TraceRepository.to_csv(_trace())
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    column_line = next(line for line in lines if not line.startswith("#"))
    assert column_line.split(",")[:11] == [
        "iter", "alpha", "objective", "lagrangian", "lhat", "relChg",
        "relErr_L", "relErr_S", "relErr_T", "primal_res", "stationarity_res",
    ]
    assert column_line.split(",") == csv_columns(["L", "S", "T"])


@pytest.mark.parametrize("suffix", ["csv", "jsonl"])
def test_trace_round_trip(tmp_path, suffix):
    trace = _trace()
    path = tmp_path / f"trace.{suffix}"
    TraceRepository.write(path, trace)
    loaded = TraceRepository.read(path)
    assert list(loaded.block_names) == ["L", "S", "T"]
    assert loaded.header == trace.header
    assert loaded.records == trace.records


def test_trace_csv_errors(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text("# rows=3\niter,alpha\n1,abc\n")
    with pytest.raises(ConfigError) as excinfo:
        TraceRepository.read_csv(path)
    assert excinfo.value.line == 3
    path.write_text("# broken header\n")
    with pytest.raises(ConfigError) as excinfo:
        TraceRepository.read_csv(path)
    assert excinfo.value.line == 1


def test_trace_jsonl_errors(tmp_path):
    path = tmp_path / "trace.jsonl"
    path.write_text(json.dumps({"header": {"block_names": ["x1"]}}) + "\n{not json\n")
    with pytest.raises(ConfigError) as excinfo:
        TraceRepository.read_jsonl(path)
    assert excinfo.value.line == 2


def test_empty_trace_round_trip(tmp_path):
    path = tmp_path / "trace.csv"
    TraceRepository.write(path, Trace(block_names=("L", "S", "T")))
    loaded = TraceRepository.read(path)
    assert len(loaded) == 0
    assert list(loaded.block_names) == ["L", "S", "T"]


def test_config_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{\n  "mu": 1.0,\n  "lambda": oops\n}\n')
    with pytest.raises(ConfigError) as excinfo:
        ConfigRepository.load_json(path)
    assert excinfo.value.line == 3

    path.write_text('{\n  "mu": 1.0,\n  "alpha_growth": 0.5\n}\n')
    with pytest.raises(ConfigError) as excinfo:
        ConfigRepository.load_model(path, RpcaConfig)
    assert excinfo.value.line == 3
    assert "alpha_growth" in str(excinfo.value)

    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        ConfigRepository.load_json(path)
    with pytest.raises(ConfigError):
        ConfigRepository.load_json(tmp_path / "missing.json")


def test_config_model_from_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"lambda": 0.2, "mu": 5.0, "schedule": False}))
    cfg = ConfigRepository.load_model(path, RpcaConfig)
    assert cfg.lambda_ == 0.2
    assert cfg.mu == 5.0
    assert not cfg.schedule


def test_pgm_round_trip(tmp_path, rng):
    frame = rng.integers(0, 256, size=(6, 9), dtype=np.uint8)
    path = tmp_path / "f.pgm"
    FrameRepository.write_pgm(path, frame)
    np.testing.assert_array_equal(FrameRepository.read_pgm(path), frame)


def test_pgm_header_with_comment(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# made by hand\n2 1\n255\n" + bytes([7, 200]))
    np.testing.assert_array_equal(FrameRepository.read_pgm(path), np.array([[7, 200]], dtype=np.uint8))


def test_pgm_errors(tmp_path):
    ascii_pgm = tmp_path / "a.pgm"
    ascii_pgm.write_bytes(b"P2\n1 1\n255\n0\n")
    with pytest.raises(FrameFormatError):
        FrameRepository.read_pgm(ascii_pgm)
    deep = tmp_path / "d.pgm"
    deep.write_bytes(b"P5\n1 1\n65535\n\0\0")
    with pytest.raises(FrameFormatError):
        FrameRepository.read_pgm(deep)
    short = tmp_path / "s.pgm"
    short.write_bytes(b"P5\n4 4\n255\n\0\0")
    with pytest.raises(FrameFormatError):
        FrameRepository.read_pgm(short)


def test_frame_directory(tmp_path):
    frames = [np.full((3, 4), i, dtype=np.uint8) for i in range(3)]
    paths = FrameRepository.write_directory(tmp_path / "frames", frames)
    assert [p.name for p in paths] == ["frame_0000.pgm", "frame_0001.pgm", "frame_0002.pgm"]
    loaded = FrameRepository.read_directory(tmp_path / "frames")
    for a, b in zip(loaded, frames):
        np.testing.assert_array_equal(a, b)

    FrameRepository.write_pgm(tmp_path / "frames" / "frame_0003.pgm", np.zeros((2, 2), dtype=np.uint8))
    with pytest.raises(FrameFormatError):
        FrameRepository.read_directory(tmp_path / "frames")
    (tmp_path / "empty").mkdir()
    with pytest.raises(FrameFormatError):
        FrameRepository.read_directory(tmp_path / "empty")


def test_report_files(tmp_path):
    report = DiagnosticsService.run_diagnostics(_trace())
    ReportRepository.write_json(tmp_path / "report.json", report)
    assert json.loads((tmp_path / "report.json").read_text())["verdict"] == report.verdict
    ReportRepository.write_margins_csv(tmp_path / "margins.csv", report)
    lines = (tmp_path / "margins.csv").read_text().splitlines()
    assert lines[0] == "check,iter,margin"
    assert len(lines) == 1 + sum(len(c.margins) for c in report.checks)
    ReportRepository.write_manifest(tmp_path / "manifest.json", {"seed": 3})
    assert ReportRepository.read_manifest(tmp_path / "manifest.json") == {"seed": 3}
