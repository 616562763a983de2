"""Solver updates against exact hand values, state invariants, and run() behavior.

Hand values all live on the n=2 desk quadratic (see conftest): components
(1/2)(w-1)^2 and (1/2)(w+1)^2, so s = L = 1 and every update is a dyadic
rational that floats represent exactly.
"""

import numpy as np
import pytest

from finito import (
    PERMUTED,
    UNIFORM,
    DivergenceError,
    FiniteSumProblem,
    QuadraticProblem,
    SamplingScheme,
    SolverConfig,
    SQUARED,
    finito_first_pass_step,
    finito_init,
    finito_step,
    miso_init,
    miso_step,
    prox_finito_step,
    reference_solve,
    run,
    run_with_state,
    sag_default_step,
    sag_init,
    sag_step,
    synth_problem,
    SynthSpec,
)


# -- exact hand values ---------------------------------------------------------


def test_finito_init_hand_value(desk):
    st = finito_init(desk, alpha=2.0, w0=np.ones(1))
    assert np.array_equal(st.p_table, [[-2.0], [0.0]])
    assert st.w[0] == 0.5


def test_finito_step_hand_value_second_component(desk):
    st = finito_init(desk, alpha=2.0, w0=np.ones(1))
    finito_step(st, desk, 1)
    assert st.w[0] == 0.375


def test_finito_step_hand_value_first_component(desk):
    st = finito_init(desk, alpha=2.0, w0=np.ones(1))
    finito_step(st, desk, 0)
    assert st.w[0] == 0.375


def test_first_pass_hand_value(desk):
    st = finito_init(desk, alpha=2.0, w0=np.ones(1), first_pass=True)
    assert st.seen == 0 and st.w[0] == 1.0
    finito_first_pass_step(st, desk, 0)
    # only the first component is admitted; its gradient at 1 is zero
    assert st.seen == 1 and st.w[0] == 1.0
    finito_first_pass_step(st, desk, 1)
    assert st.seen == 2
    assert st.w[0] == 0.5  # both rows at 1 now, same as the eager init


def test_sag_step_hand_value(desk):
    step = sag_default_step(desk)
    assert step == 1.0 / 32.0
    st = sag_init(desk, w0=np.ones(1))
    assert np.array_equal(st.grad_table, [[0.0], [2.0]])
    sag_step(st, desk, 0)
    assert st.w[0] == 15.0 / 16.0


def test_sag_default_steps(desk):
    assert sag_default_step(desk) == 1.0 / 32.0
    assert sag_default_step(desk, practical=True) == 0.5


def test_miso_init_hand_value(desk):
    # L = s here, so the effective alpha is 1 and the init lands on the mean
    st = miso_init(desk, w0=np.ones(1))
    assert st.alpha == 1.0
    assert st.w[0] == 0.0


def test_miso_matches_finito_at_matching_alpha(synth_tiny):
    problem, _ = synth_tiny
    alpha = problem.lipschitz_constant() / problem.s
    a = miso_init(problem, w0=np.zeros(problem.d))
    b = finito_init(problem, alpha=alpha, w0=np.zeros(problem.d))
    for j in [3, 0, 7, 3, 11]:
        miso_step(a, problem, j)
        finito_step(b, problem, j)
    assert np.array_equal(a.w, b.w)


# -- state invariants ------------------------------------------------------------


def test_audit_rows_decompose_compact_rows(synth_tiny, rng):
    problem, _ = synth_tiny
    st = finito_init(problem, alpha=2.0, w0=np.zeros(problem.d), audit=True)
    for j in rng.integers(problem.n, size=60):
        finito_step(st, problem, int(j))
    want = st.grad_table - st.alpha * problem.s * st.phi_table
    assert np.max(np.abs(st.p_table - want)) <= 1e-12


def test_compact_w_identity(synth_tiny, rng):
    problem, _ = synth_tiny
    st = finito_init(problem, alpha=2.0, w0=np.zeros(problem.d))
    denom = st.alpha * problem.s * problem.n
    for j in rng.integers(problem.n, size=60):
        finito_step(st, problem, int(j))
        assert np.allclose(st.w, -st.p_sum / denom, atol=1e-13)


def test_audit_and_compact_agree(synth_tiny, rng):
    problem, _ = synth_tiny
    a = finito_init(problem, alpha=2.0, w0=np.zeros(problem.d), audit=True)
    b = finito_init(problem, alpha=2.0, w0=np.zeros(problem.d))
    for j in rng.integers(problem.n, size=100):
        finito_step(a, problem, int(j))
        finito_step(b, problem, int(j))
        assert np.linalg.norm(a.w - b.w) <= 1e-10


def test_sag_sum_tracks_table(synth_tiny, rng):
    problem, _ = synth_tiny
    st = sag_init(problem, w0=np.zeros(problem.d), practical=True)
    for j in rng.integers(problem.n, size=150):
        sag_step(st, problem, int(j))
    assert np.linalg.norm(st.grad_sum - st.grad_table.sum(axis=0)) <= 1e-10


def test_fixed_point_no_drift(desk):
    # start every row at the minimizer; a hundred steps must not move w
    st = finito_init(desk, alpha=2.0, w0=np.zeros(1))
    for j in [0, 1] * 50:
        finito_step(st, desk, j)
        assert abs(st.w[0]) <= 1e-12


def test_first_pass_requires_completion(desk):
    st = finito_init(desk, alpha=2.0, w0=np.ones(1), first_pass=True)
    with pytest.raises(ValueError):
        finito_step(st, desk, 0)
    st2 = sag_init(desk, w0=np.ones(1), first_pass=True)
    with pytest.raises(ValueError):
        sag_step(st2, desk, 0)


def test_prox_step_with_zero_weight_is_plain_finito(synth_tiny, rng):
    problem, _ = synth_tiny
    a = finito_init(problem, alpha=2.0, w0=np.zeros(problem.d), audit=True,
                    proximal=True, solver_tag="prox-finito")
    b = finito_init(problem, alpha=2.0, w0=np.zeros(problem.d), audit=True)
    for j in rng.integers(problem.n, size=40):
        prox_finito_step(a, problem, int(j))
        finito_step(b, problem, int(j))
    assert np.array_equal(a.w, b.w)


# -- convergence ------------------------------------------------------------------


def test_desk_problem_converges_tightly(desk):
    config = SolverConfig(solver="finito", alpha=2.0, w0=np.ones(1))
    records = run(desk, config, SamplingScheme(UNIFORM, seed=0), epochs=50,
                  reference=reference_solve(desk))
    assert records[-1].suboptimality <= 1e-10


def test_lasso_toy_collapses_to_zero(rng):
    feats = rng.normal(size=(4, 2))
    targets = rng.normal(size=4) * 0.1
    lam = 2.0 * np.max(np.abs(feats.T @ targets)) / 4 + 1.0
    problem = FiniteSumProblem(feats, targets, SQUARED, s=0.5, l1_weight=lam)
    ref = reference_solve(problem)
    assert ref.method_tag == "proximal-gradient"
    assert np.allclose(ref.w_star, 0.0, atol=1e-10)
    config = SolverConfig(solver="prox-finito", alpha=2.0, w0=np.ones(2))
    _, state, _ = run_with_state(problem, config,
                                 SamplingScheme(UNIFORM, seed=0), epochs=60,
                                 reference=ref)
    assert np.allclose(state.w, 0.0, atol=1e-10)


def test_suboptimality_contracts_on_synth(synth_small):
    problem, ref = synth_small
    config = SolverConfig(solver="finito", alpha=2.0, w0=np.zeros(problem.d))
    records = run(problem, config, SamplingScheme(PERMUTED, seed=0), epochs=10,
                  reference=ref)
    assert records[-1].suboptimality <= records[0].suboptimality / 100
    assert all(r.suboptimality >= -1e-9 for r in records)


# -- run() mechanics ---------------------------------------------------------------


def test_run_record_grid(synth_tiny):
    problem, ref = synth_tiny
    config = SolverConfig(solver="sag", w0=np.zeros(problem.d))
    records = run(problem, config, SamplingScheme(UNIFORM, seed=0), epochs=4,
                  reference=ref)
    assert [r.epoch for r in records] == [0.0, 1.0, 2.0, 3.0, 4.0]
    half = run(problem, config, SamplingScheme(UNIFORM, seed=0), epochs=2,
               reference=ref, record_every=0.5)
    assert [r.epoch for r in half] == [0.0, 0.5, 1.0, 1.5, 2.0]


def test_run_trace_fields(synth_tiny):
    problem, ref = synth_tiny
    config = SolverConfig(solver="miso", w0=np.zeros(problem.d))
    records = run(problem, config, SamplingScheme(PERMUTED, seed=3), epochs=2,
                  reference=ref)
    assert all(r.solver == "miso" and r.sampling == "permuted" and r.seed == 3
               for r in records)
    assert all(b.wall_ms >= a.wall_ms for a, b in zip(records, records[1:]))


def test_full_gradient_reference_solver(synth_tiny):
    problem, ref = synth_tiny
    config = SolverConfig(solver="full-gradient", w0=np.zeros(problem.d))
    records = run(problem, config, SamplingScheme(UNIFORM), epochs=200,
                  reference=ref)
    # one gradient evaluation per epoch; linear rate at step 1/L
    assert records[-1].suboptimality <= 1e-8


def test_divergence_attaches_partial_records(synth_tiny):
    problem, ref = synth_tiny
    config = SolverConfig(solver="full-gradient", step=1e9,
                          w0=np.zeros(problem.d))
    with pytest.raises(DivergenceError) as info:
        run(problem, config, SamplingScheme(UNIFORM), epochs=10, reference=ref)
    assert len(info.value.records) >= 1
    assert info.value.records[0].epoch == 0.0


def test_unknown_solver_rejected(synth_tiny):
    problem, _ = synth_tiny
    with pytest.raises(ValueError):
        run(problem, SolverConfig(solver="sparkle", w0=np.zeros(problem.d)),
            SamplingScheme(UNIFORM), epochs=1)


def test_table_mean_monitor_reports_phi_mean(synth_tiny):
    problem, ref = synth_tiny
    config = SolverConfig(solver="finito", alpha=2.0, monitor="table-mean",
                          w0=np.zeros(problem.d))
    records, state, _ = run_with_state(problem, config,
                                       SamplingScheme(UNIFORM, seed=1),
                                       epochs=3, reference=ref)
    want = problem.full_objective(state.phi_table.mean(axis=0))
    assert records[-1].objective == want


def test_resume_matches_uninterrupted(synth_tiny):
    problem, ref = synth_tiny
    config = SolverConfig(solver="finito", alpha=2.0, w0=np.zeros(problem.d))
    scheme = SamplingScheme(PERMUTED, seed=6)
    full = run(problem, config, scheme, epochs=6, reference=ref)
    head, state, sampler = run_with_state(problem, config, scheme, epochs=3,
                                          reference=ref)
    tail = run(problem, config, scheme, epochs=6, reference=ref,
               resume=(state, sampler))
    stitched = [(r.epoch, r.objective, r.suboptimality, r.grad_norm)
                for r in head + tail]
    want = [(r.epoch, r.objective, r.suboptimality, r.grad_norm) for r in full]
    assert stitched == want


# -- reference solver ----------------------------------------------------------------


def test_reference_solve_desk(desk):
    ref = reference_solve(desk)
    assert ref.method_tag == "full-gradient-backtracking"
    assert abs(ref.w_star[0]) <= 1e-9
    assert ref.f_star == pytest.approx(0.5, abs=1e-12)
    assert ref.grad_norm_at_solution <= 1e-12


def test_reference_solve_synth_tolerance(synth_small):
    problem, ref = synth_small
    assert ref.grad_norm_at_solution <= 1e-12
    assert np.linalg.norm(problem.full_gradient(ref.w_star)) <= 1e-11
