import json

import numpy as np
import pytest

from core.errors import EXIT_DIAGNOSTIC_VIOLATION, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE
from main import main
from models.trace import StepRecord, Trace
from repositories.frame_repository import FrameRepository
from repositories.matrix_repository import MatrixRepository
from repositories.trace_repository import TraceRepository
from services.frame_service import FrameService


def _record(iteration, lhat):
    return StepRecord(
        iteration=iteration,
        alpha=10.0,
        objective=0.0,
        lagrangian=lhat,
        lhat=lhat,
        relchg=0.1,
        primal_res=0.0,
        multiplier_step=0.0,
        multiplier_norm=0.0,
        multiplier_identity=0.0,
        block_steps=[0.5, 0.5],
    )


def _write_trace(path, lhats):
    trace = Trace(block_names=("x1", "x2"))
    for k, value in enumerate(lhats, start=1):
        trace.append(_record(k, value))
    TraceRepository.write(path, trace)


def _write_constants(path):
    path.write_text(json.dumps({
        "constants": {"sigma_c": 1.0, "ell_h": 0.0, "ell_phi": 1.0, "block_moduli": [1.0, 1.0], "alpha": 10.0},
    }))


def test_simulate_with_zero_iterations(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["simulate", "--m", "12", "--rank", "2", "--seed", "3", "--max-iter", "0", "--out", str(out)])
    assert code == EXIT_OK
    trace = TraceRepository.read(out / "trace.csv")
    assert len(trace) == 0
    assert trace.header["rows"] == 12
    m = MatrixRepository.read(out / "M.bmat")
    assert m.shape == (12, 12)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["instance"]["seed"] == 3
    assert manifest["rpca"]["lambda"] == pytest.approx(5.0)
    assert "iterations: 0" in capsys.readouterr().out


def test_simulate_from_config_file(tmp_path):
    out = tmp_path / "run"
    config = tmp_path / "sim.json"
    config.write_text(json.dumps({
        "m": 15,
        "rank": 1,
        "sparsity": 0.05,
        "seed": 4,
        "trace_format": "jsonl",
        "rpca": {"max_iterations": 5},
    }))
    code = main(["simulate", "--config", str(config), "--out", str(out), "--max-iter", "3"])
    assert code == EXIT_OK
    trace = TraceRepository.read(out / "trace.jsonl")
    assert len(trace) == 3
    assert set(trace.block_names) == {"L", "S", "T"}
    assert trace.last.rel_err["L"] is not None


def test_bad_config_is_a_usage_error(tmp_path):
    config = tmp_path / "bad.json"
    config.write_text('{\n  "m": 10,\n  "rank": "many"\n}\n')
    assert main(["simulate", "--config", str(config), "--out", str(tmp_path / "o")]) == EXIT_USAGE
    config.write_text("{ not json")
    assert main(["simulate", "--config", str(config)]) == EXIT_USAGE


def test_rank_above_dimension_is_a_usage_error(tmp_path):
    assert main(["simulate", "--m", "3", "--rank", "4", "--out", str(tmp_path)]) == EXIT_USAGE


def test_unknown_subcommand_exits_with_usage():
    with pytest.raises(SystemExit) as excinfo:
        main(["unknown"])
    assert excinfo.value.code == 2


def test_diagnose_empty_trace(tmp_path, capsys):
    path = tmp_path / "trace.csv"
    _write_trace(path, [])
    assert main(["diagnose", str(path)]) == EXIT_OK
    assert "verdict: no iterations" in capsys.readouterr().out


def test_diagnose_passing_trace(tmp_path):
    path = tmp_path / "trace.csv"
    _write_trace(path, [10.0, 9.0, 8.0])
    spec = tmp_path / "spec.json"
    _write_constants(spec)
    report = tmp_path / "report.json"
    margins = tmp_path / "margins.csv"
    code = main(["diagnose", str(path), str(spec), "--report", str(report), "--margins", str(margins)])
    assert code == EXIT_OK
    assert json.loads(report.read_text())["verdict"] == "pass"
    assert margins.read_text().startswith("check,iter,margin")


def test_diagnose_violating_trace(tmp_path, capsys):
    path = tmp_path / "trace.jsonl"
    _write_trace(path, [10.0, 12.0, 8.0])
    spec = tmp_path / "spec.json"
    _write_constants(spec)
    assert main(["diagnose", str(path), str(spec)]) == EXIT_DIAGNOSTIC_VIOLATION
    assert "violated: merit descent" in capsys.readouterr().out


def test_diagnose_spec_from_blocks(tmp_path):
    MatrixRepository.write_csv(tmp_path / "a1.csv", np.eye(2))
    MatrixRepository.write_csv(tmp_path / "a2.csv", 2.0 * np.eye(2))
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({
        "blocks": [{"matrix": "a1.csv", "gamma": 1.0}, {"matrix": "a2.csv", "gamma": 1.0}],
        "alpha": 10.0,
    }))
    path = tmp_path / "trace.csv"
    _write_trace(path, [3.0, 2.0, 1.0])
    assert main(["diagnose", str(path), str(spec)]) == EXIT_OK


def test_diagnose_missing_trace_is_a_usage_error(tmp_path):
    assert main(["diagnose", str(tmp_path / "nope.csv")]) == EXIT_USAGE


def test_solve_linear(tmp_path, capsys):
    rng = np.random.default_rng(0)
    MatrixRepository.write(tmp_path / "a1.bmat", rng.standard_normal((3, 4)))
    MatrixRepository.write(tmp_path / "a2.csv", 2.0 * np.eye(3) + 0.1 * rng.standard_normal((3, 3)))
    out = tmp_path / "out"
    code = main([
        "solve-linear",
        "--block", str(tmp_path / "a1.bmat"),
        "--block", f"{tmp_path / 'a2.csv'}:1.0",
        "--relchg", "1e-12",
        "--out", str(out),
    ])
    assert code == EXIT_OK
    trace = TraceRepository.read(out / "trace.csv")
    assert trace.last.primal_res <= 1e-6
    assert MatrixRepository.read(out / "x1.bmat").shape == (4, 1)
    assert "||sum A_i x_i||" in capsys.readouterr().out


def test_solve_linear_singular_block(tmp_path):
    MatrixRepository.write_csv(tmp_path / "a1.csv", np.eye(2))
    MatrixRepository.write_csv(tmp_path / "a2.csv", np.array([[1.0, 2.0], [2.0, 4.0]]))
    code = main(["solve-linear", "--block", str(tmp_path / "a1.csv"), "--block", str(tmp_path / "a2.csv")])
    assert code == EXIT_NUMERIC


def test_solve_linear_from_config(tmp_path):
    MatrixRepository.write_csv(tmp_path / "a1.csv", np.eye(2))
    MatrixRepository.write_csv(tmp_path / "a2.csv", np.eye(2))
    config = tmp_path / "linear.json"
    config.write_text(json.dumps({
        "blocks": [{"matrix": "a1.csv"}, {"matrix": "a2.csv", "gamma": 2.0}],
        "alpha": 20.0,
        "max_iterations": 50,
    }))
    assert main(["solve-linear", "--config", str(config)]) == EXIT_OK


def test_solve_linear_with_mahalanobis_block(tmp_path, capsys):
    rng = np.random.default_rng(6)
    MatrixRepository.write_csv(tmp_path / "a1.csv", rng.standard_normal((3, 2)))
    MatrixRepository.write_csv(tmp_path / "a2.csv", 2.0 * np.eye(3) + 0.1 * rng.standard_normal((3, 3)))
    MatrixRepository.write_csv(tmp_path / "q.csv", np.array([[2.0, 0.5], [0.5, 1.0]]))
    out = tmp_path / "out"
    code = main([
        "solve-linear",
        "--block", f"{tmp_path / 'a1.csv'}:mahalanobis:{tmp_path / 'q.csv'}",
        "--block", f"{tmp_path / 'a2.csv'}:1.0",
        "--relchg", "1e-12",
        "--out", str(out),
    ])
    assert code == EXIT_OK
    assert TraceRepository.read(out / "trace.csv").last.primal_res <= 1e-6
    printed = capsys.readouterr().out
    assert "penalty threshold:" in printed
    assert "||sum A_i x_i||" in printed


def test_solve_linear_config_resolves_generator_names(tmp_path):
    MatrixRepository.write_csv(tmp_path / "a1.csv", np.eye(2))
    MatrixRepository.write_csv(tmp_path / "a2.csv", np.eye(2))
    MatrixRepository.write_csv(tmp_path / "q.csv", np.array([[3.0, 0.0], [0.0, 1.0]]))
    config = tmp_path / "linear.json"
    config.write_text(json.dumps({
        "blocks": [{"matrix": "a1.csv", "bregman": "mahalanobis:q.csv"}, {"matrix": "a2.csv", "bregman": "sq_euclid:2"}],
        "alpha": 20.0,
        "max_iterations": 50,
    }))
    assert main(["solve-linear", "--config", str(config)]) == EXIT_OK

    config.write_text(json.dumps({
        "blocks": [{"matrix": "a1.csv", "bregman": "cosine"}, {"matrix": "a2.csv"}],
    }))
    assert main(["solve-linear", "--config", str(config)]) == EXIT_USAGE


def test_bgsub_empty_directory(tmp_path):
    (tmp_path / "frames").mkdir()
    assert main(["bgsub", "--frames", str(tmp_path / "frames"), "--out", str(tmp_path / "out")]) == EXIT_USAGE


def test_bgsub_writes_backgrounds(tmp_path, capsys):
    frames, _ = FrameService.moving_square_sequence(height=16, width=16, frames=6, size=3, seed=2)
    FrameRepository.write_directory(tmp_path / "frames", frames)
    out = tmp_path / "out"
    code = main([
        "bgsub", "--frames", str(tmp_path / "frames"), "--out", str(out),
        "--max-frames", "5", "--max-iter", "20",
    ])
    assert code == EXIT_OK
    assert len(FrameRepository.read_directory(out / "background")) == 5
    assert len(FrameRepository.read_directory(out / "foreground")) == 5
    trace = TraceRepository.read(out / "trace.csv")
    assert trace.header["frames"] == 5
    assert "||S||_F/||M||_F" in capsys.readouterr().out


def test_sweep_mu(tmp_path, capsys):
    out = tmp_path / "sweep"
    code = main([
        "sweep-mu", "--m", "12", "--rank", "1", "--seed", "5",
        "--mus", "1", "100", "--max-iter", "20", "--out", str(out),
    ])
    assert code == EXIT_OK
    result = json.loads((out / "sweep.json").read_text())
    assert [p["mu"] for p in result["points"]] == [1.0, 100.0]
    assert result["best_mu"] in (1.0, 100.0)
    assert "best mu" in capsys.readouterr().out
