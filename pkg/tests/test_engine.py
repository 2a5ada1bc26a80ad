from dataclasses import replace

import numpy as np
import pytest

from core.errors import DomainError, SolverError
from models.problem import BlockSpec, EngineMode, IterateState, ProblemSpec, StoppingRule
from services.diagnostics_service import DiagnosticsService
from services.engine_service import EngineService
from services.linear_system_service import LinearSystemService
from services.parameter_service import ParameterService
from utils.bregman import squared_euclidean


def _two_block_spec(alpha=2.0):
    return LinearSystemService.linear_system_spec([np.eye(2), -np.eye(2)], [1.0, 1.0], alpha=alpha)


def _state(xs, p=None, alpha=1.0):
    xs = tuple(np.asarray(x, dtype=np.float64) for x in xs)
    p = np.zeros((xs[0].shape[0], xs[0].shape[1])) if p is None else np.asarray(p, dtype=np.float64)
    return IterateState(x=xs, p=p, prev_last_block=xs[-1].copy(), iteration=0, alpha_current=alpha)


def _custom_block(name, solver, matrix=None, objective=None, gamma=1.0, lipschitz=None):
    return BlockSpec(
        name=name,
        constraint_matrix=np.eye(2) if matrix is None else matrix,
        objective_value=objective or (lambda x: 0.0),
        subproblem_solver=solver,
        bregman=squared_euclidean(gamma),
        objective_smooth_lipschitz=lipschitz,
    )


def test_augmented_lagrangian_examples():
    spec = _two_block_spec(alpha=2.0)
    a = np.array([[1.0], [2.0]])
    b = np.array([[0.5], [-1.0]])
    p = np.array([[3.0], [-1.0]])
    state = IterateState.initial(spec, [a, b], p)
    r = a - b
    expected = float(np.vdot(p, r)) + 0.5 * 2.0 * float(np.vdot(r, r))
    assert EngineService.augmented_lagrangian(spec, state) == pytest.approx(expected)

    feasible = IterateState.initial(spec, [a, a], p)
    assert EngineService.augmented_lagrangian(spec, feasible) == 0.0

    zero = IterateState.initial(spec, [np.zeros((2, 1)), np.zeros((2, 1))])
    assert EngineService.augmented_lagrangian(spec, zero) == 0.0


def test_merit_equals_lagrangian_without_last_block_gap():
    spec = _two_block_spec(alpha=2.0)
    state = IterateState.initial(spec, [np.ones((2, 1)), np.zeros((2, 1))])
    assert EngineService.merit_lhat(spec, state) == pytest.approx(EngineService.augmented_lagrangian(spec, state))

    moved = replace(state, prev_last_block=np.array([[1.0], [0.0]]))
    sigma0, _ = ParameterService.sigma_constants(spec)
    expected = EngineService.augmented_lagrangian(spec, moved) + sigma0 * 1.0
    assert EngineService.merit_lhat(spec, moved) == pytest.approx(expected)


def test_relchg_examples():
    a = _state([np.ones((1, 1)), np.ones((1, 1))])
    assert EngineService.relchg(a, a) == 0.0
    zero = _state([np.zeros((1, 1)), np.zeros((1, 1))])
    three = _state([np.full((1, 1), 3.0), np.zeros((1, 1))])
    assert EngineService.relchg(zero, three) == pytest.approx(3.0)


def test_blocks_are_updated_in_gauss_seidel_order():
    seen = []

    def make_solver(value):
        def solve(ctx):
            seen.append((ctx.index, [x.copy() for x in ctx.iterates], ctx.rest.copy()))
            return np.full_like(ctx.x_prev, value)
        return solve

    blocks = tuple(_custom_block(f"b{i}", make_solver(float(i + 1))) for i in range(3))
    spec = ProblemSpec(blocks=blocks, alpha=1.0, checked=False)
    init = IterateState.initial(spec, [np.zeros((2, 1))] * 3)
    EngineService.step(spec, init)

    assert [s[0] for s in seen] == [0, 1, 2]
    # block 1 sees the fresh block 0 and the old block 2
    _, iterates, rest = seen[1]
    np.testing.assert_array_equal(iterates[0], np.full((2, 1), 1.0))
    np.testing.assert_array_equal(iterates[2], np.zeros((2, 1)))
    np.testing.assert_array_equal(rest, np.full((2, 1), 1.0))
    _, _, rest_last = seen[2]
    np.testing.assert_array_equal(rest_last, np.full((2, 1), 3.0))


def test_fixed_point_is_preserved():
    spec = LinearSystemService.linear_system_spec([np.eye(3), np.eye(3)], [1.0, 1.0], alpha=5.0)
    init = IterateState.initial(spec, [np.zeros((3, 1)), np.zeros((3, 1))])
    state, record = EngineService.step(spec, init)
    for x in state.x:
        np.testing.assert_array_equal(x, np.zeros((3, 1)))
    assert record.relchg == 0.0
    assert record.primal_res == 0.0


def test_zero_iteration_cap_returns_init():
    spec = _two_block_spec()
    init = IterateState.initial(spec, [np.ones((2, 1)), np.zeros((2, 1))])
    state, trace = EngineService.run(spec, init, StoppingRule(max_iterations=0))
    assert state is init
    assert len(trace) == 0


def test_multiplier_identity_holds_every_step():
    rng = np.random.default_rng(3)
    a1 = rng.standard_normal((4, 6))
    a2 = 2.0 * np.eye(4) + 0.1 * rng.standard_normal((4, 4))
    spec = LinearSystemService.linear_system_spec([a1, a2], [1.0, 1.0], alpha=10.0)
    init = LinearSystemService.random_init(spec, seed=5)
    _, trace = EngineService.run(spec, init, StoppingRule(max_iterations=50, relchg_threshold=0.0))
    assert len(trace) == 50
    for r in trace.records:
        assert r.multiplier_identity <= 1e-12 * (1.0 + r.multiplier_norm)
    assert DiagnosticsService.check_multiplier_identity(trace).violation_count == 0


def test_two_blocks_match_hand_written_recursion():
    rng = np.random.default_rng(9)
    a1 = rng.standard_normal((3, 5))
    a2 = 2.0 * np.eye(3) + 0.1 * rng.standard_normal((3, 3))
    gamma, alpha = 1.0, 10.0
    spec = LinearSystemService.linear_system_spec([a1, a2], [gamma, gamma], alpha=alpha, checked=False)
    init = LinearSystemService.random_init(spec, seed=2)

    x1, x2, p = init.x[0].copy(), init.x[1].copy(), init.p.copy()
    state = init
    for _ in range(10):
        x1 = np.linalg.solve(alpha * a1.T @ a1 + gamma * np.eye(5), gamma * x1 - alpha * a1.T @ (a2 @ x2 + p / alpha))
        x2 = np.linalg.solve(alpha * a2.T @ a2 + gamma * np.eye(3), gamma * x2 - alpha * a2.T @ (a1 @ x1 + p / alpha))
        p = p + alpha * (a1 @ x1 + a2 @ x2)
        state, _ = EngineService.step(spec, state)
        np.testing.assert_allclose(state.x[0], x1, rtol=1e-9, atol=1e-10)
        np.testing.assert_allclose(state.x[1], x2, rtol=1e-9, atol=1e-10)
        np.testing.assert_allclose(state.p, p, rtol=1e-9, atol=1e-10)


def test_zero_block_does_not_change_other_iterates():
    rng = np.random.default_rng(4)
    a1 = rng.standard_normal((3, 4))
    a2 = 2.0 * np.eye(3) + 0.1 * rng.standard_normal((3, 3))
    plain = LinearSystemService.linear_system_spec([a1, a2], [1.0, 1.0], alpha=10.0, checked=False)
    padded = LinearSystemService.linear_system_spec([a1, np.zeros((3, 2)), a2], [1.0, 1.0, 1.0], alpha=10.0, checked=False)
    x1 = rng.standard_normal((4, 1))
    x2 = rng.standard_normal((3, 1))
    s_plain = IterateState.initial(plain, [x1, x2])
    s_padded = IterateState.initial(padded, [x1, np.zeros((2, 1)), x2])
    for _ in range(20):
        s_plain, _ = EngineService.step(plain, s_plain)
        s_padded, _ = EngineService.step(padded, s_padded)
    np.testing.assert_allclose(s_padded.x[0], s_plain.x[0], rtol=0, atol=1e-12)
    np.testing.assert_allclose(s_padded.x[2], s_plain.x[1], rtol=0, atol=1e-12)
    np.testing.assert_allclose(s_padded.p, s_plain.p, rtol=0, atol=1e-12)
    np.testing.assert_array_equal(s_padded.x[1], np.zeros((2, 1)))


def test_solver_failure_carries_block_name_and_partial_trace():
    calls = {"n": 0}

    def flaky(ctx):
        calls["n"] += 1
        if calls["n"] == 3:
            raise ValueError("no convergence")
        return ctx.x_prev * 0.5

    blocks = (
        _custom_block("good", lambda ctx: ctx.x_prev * 0.5),
        _custom_block("flaky", flaky),
    )
    spec = ProblemSpec(blocks=blocks, alpha=1.0, checked=False)
    init = IterateState.initial(spec, [np.ones((2, 1)), np.ones((2, 1))])
    with pytest.raises(SolverError) as excinfo:
        EngineService.run(spec, init, StoppingRule(max_iterations=10, relchg_threshold=0.0))
    assert excinfo.value.block_name == "flaky"
    assert len(excinfo.value.trace) == 2


def test_non_finite_solver_output_is_rejected():
    blocks = (
        _custom_block("x", lambda ctx: np.full_like(ctx.x_prev, np.nan)),
        _custom_block("z", lambda ctx: ctx.x_prev),
    )
    spec = ProblemSpec(blocks=blocks, alpha=1.0, checked=False)
    init = IterateState.initial(spec, [np.ones((2, 1)), np.ones((2, 1))])
    with pytest.raises(SolverError, match="non-finite"):
        EngineService.step(spec, init)


def test_unconstrained_mode_ignores_coupling():
    target = np.array([[2.0], [-4.0]])
    gamma = 1.0
    contexts = []

    def solve(ctx):
        contexts.append(ctx)
        return (target + gamma * ctx.x_prev) / (1.0 + gamma)

    blocks = (
        _custom_block("a", solve, objective=lambda x: 0.5 * float(np.vdot(x - target, x - target))),
        _custom_block("b", solve, objective=lambda x: 0.5 * float(np.vdot(x - target, x - target))),
    )
    spec = ProblemSpec(blocks=blocks, alpha=3.0, mode=EngineMode.UNCONSTRAINED_BADM, checked=False)
    p0 = np.array([[1.0], [1.0]])
    init = IterateState.initial(spec, [np.zeros((2, 1)), np.zeros((2, 1))], p0)
    state, record = EngineService.step(spec, init, audit=True)

    assert all(c.alpha == 0.0 for c in contexts)
    assert all(not np.any(c.p) for c in contexts)
    np.testing.assert_array_equal(state.p, p0)
    np.testing.assert_allclose(state.x[0], target / 2.0)
    assert record.primal_res == 0.0
    assert record.multiplier_step == 0.0
    assert EngineService.augmented_lagrangian(spec, state) == pytest.approx(EngineService.objective(spec, state))


def test_audit_rejects_a_non_minimizer():
    blocks = (
        _custom_block("bad", lambda ctx: ctx.x_prev + 1.0, objective=lambda x: 0.5 * float(np.vdot(x, x))),
        _custom_block("z", lambda ctx: ctx.x_prev),
    )
    spec = ProblemSpec(blocks=blocks, alpha=1.0, checked=False)
    init = IterateState.initial(spec, [np.zeros((2, 1)), np.zeros((2, 1))])
    with pytest.raises(SolverError) as excinfo:
        EngineService.step(spec, init, audit=True)
    assert excinfo.value.block_name == "bad"


def test_audit_accepts_exact_block_solvers():
    rng = np.random.default_rng(8)
    a1 = rng.standard_normal((3, 4))
    a2 = 2.0 * np.eye(3) + 0.1 * rng.standard_normal((3, 3))
    spec = LinearSystemService.linear_system_spec([a1, a2], [1.0, 1.0], alpha=10.0)
    init = LinearSystemService.random_init(spec, seed=1)
    _, trace = EngineService.run(spec, init, StoppingRule(max_iterations=5, relchg_threshold=0.0), audit=True)
    assert len(trace) == 5


def test_checked_mode_requires_strong_convexity():
    spec = LinearSystemService.linear_system_spec([np.eye(2), np.eye(2)], [0.0, 1.0], alpha=10.0, checked=True)
    init = IterateState.initial(spec, [np.ones((2, 1)), np.ones((2, 1))])
    with pytest.raises(DomainError):
        EngineService.run(spec, init)


def test_schedule_grows_penalty_between_steps():
    from models.problem import AlphaSchedule

    rng = np.random.default_rng(12)
    a1 = rng.standard_normal((3, 4))
    spec = LinearSystemService.linear_system_spec(
        [a1, 2.0 * np.eye(3)],
        [1.0, 1.0],
        alpha=1.0,
        alpha_schedule=AlphaSchedule(growth_factor=2.0, alpha_max=4.0),
        checked=False,
    )
    init = LinearSystemService.random_init(spec, seed=0)
    _, trace = EngineService.run(spec, init, StoppingRule(max_iterations=5, relchg_threshold=0.0))
    assert trace.column("alpha") == [1.0, 2.0, 4.0, 4.0, 4.0]


def test_records_carry_lhat_in_checked_mode():
    spec = _two_block_spec(alpha=20.0)
    init = IterateState.initial(spec, [np.ones((2, 1)), np.zeros((2, 1))])
    _, trace = EngineService.run(spec, init, StoppingRule(max_iterations=3, relchg_threshold=0.0))
    assert all(r.lhat is not None for r in trace.records)
    assert [r.iteration for r in trace.records] == [1, 2, 3]
