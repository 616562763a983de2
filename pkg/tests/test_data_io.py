"""Parsers, generators, traces, checkpoints: formats and their failure modes."""

import io
import math

import numpy as np
import pytest

from finito import (
    CheckpointFormatError,
    LibsvmFormatError,
    LOGISTIC,
    SQUARED,
    SamplingScheme,
    SolverConfig,
    SynthSpec,
    TraceFormatError,
    TraceRecord,
    TRACE_HEADER,
    checkpoint_load,
    checkpoint_save,
    parse_libsvm,
    read_trace,
    run_with_state,
    synth_problem,
    write_trace,
)

SAMPLE = "1 1:0.5 3:2\n-1 2:1\n"


# -- LIBSVM parsing -------------------------------------------------------------


def test_parse_libsvm_dense_layout():
    feats, labels = parse_libsvm(SAMPLE)
    assert feats.shape == (2, 3)
    assert np.array_equal(feats, [[0.5, 0.0, 2.0], [0.0, 1.0, 0.0]])
    assert np.array_equal(labels, [1.0, -1.0])


def test_parse_libsvm_d_hint_pads():
    feats, _ = parse_libsvm(SAMPLE, d_hint=5)
    assert feats.shape == (2, 5)
    assert np.array_equal(feats[:, 3:], np.zeros((2, 2)))


def test_parse_libsvm_from_path_and_stream(tmp_path):
    path = tmp_path / "toy.libsvm"
    path.write_text(SAMPLE)
    from_path = parse_libsvm(path)[0]
    from_stream = parse_libsvm(io.StringIO(SAMPLE))[0]
    assert np.array_equal(from_path, from_stream)


def test_parse_libsvm_error_positions():
    with pytest.raises(LibsvmFormatError, match=r"line 1, column 1: bad label"):
        parse_libsvm("abc 1:2\n")
    with pytest.raises(LibsvmFormatError, match=r"line 2, column 4: indices are 1-based"):
        parse_libsvm("1 1:2\n-1 0:3\n")
    with pytest.raises(LibsvmFormatError, match=r"line 1, column 7: index 2 not ascending"):
        parse_libsvm("1 3:1 2:5\n")
    with pytest.raises(LibsvmFormatError, match=r"malformed token '1::'"):
        parse_libsvm("1 1::\n")
    with pytest.raises(LibsvmFormatError, match=r"malformed token 'novalue'"):
        parse_libsvm("1 novalue\n")
    with pytest.raises(LibsvmFormatError, match="no data lines"):
        parse_libsvm("")


def test_parse_libsvm_memory_warning():
    with pytest.warns(ResourceWarning, match="dense LIBSVM materialization"):
        parse_libsvm(SAMPLE, mem_warn_bytes=8)


def test_parse_libsvm_concatenation():
    a = "1 1:1 2:2\n"
    b = "-1 1:3\n1 2:4\n"
    fa, la = parse_libsvm(a, d_hint=2)
    fb, lb = parse_libsvm(b, d_hint=2)
    fab, lab = parse_libsvm(a + b, d_hint=2)
    assert np.array_equal(fab, np.vstack([fa, fb]))
    assert np.array_equal(lab, np.concatenate([la, lb]))


# -- synthetic generator ---------------------------------------------------------


def test_synth_meets_size_condition_exactly_at_target():
    problem, ref = synth_problem(SynthSpec(n=30, d=4, target_beta=2.0, seed=5))
    report = problem.big_data_check(2.0)
    assert report.verdict
    # scaled to sit just inside the condition, not far inside
    assert report.beta_achieved == pytest.approx(2.0, rel=1e-6)
    assert ref.grad_norm_at_solution <= 1e-12


def test_synth_is_deterministic():
    a, _ = synth_problem(SynthSpec(n=25, d=3, seed=11))
    b, _ = synth_problem(SynthSpec(n=25, d=3, seed=11))
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.targets, b.targets)
    c, _ = synth_problem(SynthSpec(n=25, d=3, seed=12))
    assert not np.array_equal(a.features, c.features)


def test_synth_logistic_labels_are_signs():
    problem, _ = synth_problem(SynthSpec(n=25, d=3, loss=LOGISTIC, seed=2))
    assert set(np.unique(problem.targets)) <= {-1.0, 1.0}


def test_synth_squared_noise_changes_targets():
    quiet, _ = synth_problem(SynthSpec(n=25, d=3, loss=SQUARED, seed=2))
    noisy, _ = synth_problem(SynthSpec(n=25, d=3, loss=SQUARED, seed=2, noise=0.5))
    assert np.array_equal(quiet.features, noisy.features)
    assert not np.array_equal(quiet.targets, noisy.targets)


def test_synth_requires_room_for_beta():
    with pytest.raises(ValueError):
        synth_problem(SynthSpec(n=2, d=2, target_beta=2.0))


def test_synth_l1_passthrough():
    problem, ref = synth_problem(SynthSpec(n=25, d=3, loss=SQUARED, seed=2,
                                           l1_weight=0.3))
    assert problem.l1_weight == 0.3
    assert ref.method_tag == "proximal-gradient"


# -- trace round-trip --------------------------------------------------------------


def make_records():
    return [
        TraceRecord(0.0, math.pi, 0.25, 1e-300, 0.125, "finito", "uniform", 3),
        TraceRecord(1.0, 0.1 + 0.2, float("nan"), 5e-324, 17.0, "sag", "cyclic", 0),
    ]


def test_trace_round_trip_exact():
    records = make_records()
    sink = io.StringIO()
    write_trace(records, sink)
    text = sink.getvalue()
    assert text.splitlines()[0] == TRACE_HEADER
    back = read_trace(io.StringIO(text))
    assert len(back) == 2
    for a, b in zip(records, back):
        assert a.epoch == b.epoch and a.objective == b.objective
        assert a.grad_norm == b.grad_norm and a.wall_ms == b.wall_ms
        assert (a.solver, a.sampling, a.seed) == (b.solver, b.sampling, b.seed)
    assert back[0].suboptimality == 0.25
    assert math.isnan(back[1].suboptimality)


def test_trace_header_and_field_errors():
    with pytest.raises(TraceFormatError, match="header mismatch"):
        read_trace(io.StringIO("epoch,loss\n"))
    good = TRACE_HEADER + "\n0.0,1.0,0.5\n"
    with pytest.raises(TraceFormatError, match="line 2: expected 8 fields"):
        read_trace(io.StringIO(good))
    bad_field = TRACE_HEADER + "\n0.0,1.0,x,0.1,0.2,finito,uniform,0\n"
    with pytest.raises(TraceFormatError, match="line 2: non-numeric"):
        read_trace(io.StringIO(bad_field))


# -- checkpoint round-trip -----------------------------------------------------------


def run_and_checkpoint(problem, ref, solver, tmp_path, audit=False):
    config = SolverConfig(solver=solver, alpha=2.0, audit=audit,
                          w0=np.zeros(problem.d))
    _, state, sampler = run_with_state(problem, config,
                                       SamplingScheme("permuted", seed=2),
                                       epochs=2, reference=ref)
    path = tmp_path / f"{solver}.ckpt"
    checkpoint_save(state, path, sampler)
    return path, state


@pytest.mark.parametrize("solver,audit", [("finito", False), ("finito", True),
                                          ("prox-finito", False), ("sag", False),
                                          ("miso", False), ("full-gradient", False)])
def test_checkpoint_save_load_save_identity(synth_tiny, tmp_path, solver, audit):
    problem, ref = synth_tiny
    path, _ = run_and_checkpoint(problem, ref, solver, tmp_path, audit)
    first = path.read_text()
    state, sampler = checkpoint_load(path, problem)
    sink = io.StringIO()
    checkpoint_save(state, sink, sampler)
    assert sink.getvalue() == first


def test_checkpoint_full_gradient_has_no_sampler(synth_tiny, tmp_path):
    problem, ref = synth_tiny
    path, _ = run_and_checkpoint(problem, ref, "full-gradient", tmp_path)
    _, sampler = checkpoint_load(path, problem)
    assert sampler is None


def test_checkpoint_restores_exact_state(synth_tiny, tmp_path):
    problem, ref = synth_tiny
    path, state = run_and_checkpoint(problem, ref, "finito", tmp_path)
    back, sampler = checkpoint_load(path, problem)
    assert np.array_equal(back.w, state.w)
    assert np.array_equal(back.p_table, state.p_table)
    assert back.k == state.k and back.seen == state.seen
    # the first of the two epochs is the in-order first pass; only the
    # second consumed sampler draws
    assert sampler.draws == problem.n


def test_checkpoint_corruption_detected(synth_tiny, tmp_path):
    problem, ref = synth_tiny
    path, _ = run_and_checkpoint(problem, ref, "finito", tmp_path)
    lines = path.read_text().splitlines()

    bad = list(lines)
    for i, line in enumerate(bad):
        if "0x" in line:
            bad[i] = line.replace("0x", "0z", 1)
            break
    with pytest.raises(CheckpointFormatError, match="bad float literal"):
        checkpoint_load(io.StringIO("\n".join(bad) + "\n"), problem)

    truncated = "\n".join(lines[:-1]) + "\n"
    with pytest.raises(CheckpointFormatError, match="missing END"):
        checkpoint_load(io.StringIO(truncated), problem)

    with pytest.raises(CheckpointFormatError):
        checkpoint_load(io.StringIO("not a checkpoint\n"), problem)


def test_checkpoint_problem_shape_guard(synth_tiny, tmp_path):
    problem, ref = synth_tiny
    path, _ = run_and_checkpoint(problem, ref, "finito", tmp_path)
    other, _ = synth_problem(SynthSpec(n=10, d=2, seed=0))
    with pytest.raises(CheckpointFormatError):
        checkpoint_load(path, other)
