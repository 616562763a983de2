"""Problem ingestion and run persistence: LIBSVM text, synthetic generators,
trace CSV, and bit-exact solver checkpoints.

Path arguments accept str/Path or open file objects.  parse_libsvm treats a
plain str as the file *content* (the format is line-oriented text); everything
else here treats str/Path as a filesystem path.
"""

from __future__ import annotations

import re
import warnings
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .problems import (FiniteSumProblem, ReferenceSolution, LOGISTIC, SQUARED,
                       _MARGIN_CURVATURE)
from .samplers import IndexSampler, SamplingScheme
from .solvers import (FinitoState, FullGradientState, SagState, TraceRecord,
                      reference_solve)

TRACE_HEADER = "epoch,objective,suboptimality,grad_norm,wall_ms,solver,sampling,seed"
CHECKPOINT_MAGIC = "FINITOCKPT 1"

# dense materialization above this many bytes draws a warning
DENSE_WARN_BYTES = 1 << 30


class LibsvmFormatError(ValueError):
    pass


class TraceFormatError(ValueError):
    pass


class CheckpointFormatError(ValueError):
    pass


@contextmanager
def _open_text(source, mode: str):
    if isinstance(source, (str, Path)):
        with open(source, mode, encoding="ascii", newline="") as handle:
            yield handle
    else:
        yield source


# ---------------------------------------------------------------------------
# LIBSVM


def parse_libsvm(source, d_hint: int | None = None,
                 mem_warn_bytes: int = DENSE_WARN_BYTES):
    """Parse `<label> <idx>:<val> ...` lines into dense (features, targets).

    Indices are 1-based and must be strictly ascending within a line; blank
    lines are skipped, so concatenating valid files yields a valid file.  The
    width is the largest index seen, or d_hint if that is larger.

    `source` may be an open text stream or the content itself as a str.
    """
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, Path):
        text = source.read_text(encoding="ascii")
    else:
        text = source
    labels: list[float] = []
    rows: list[list[tuple[int, float]]] = []
    width = int(d_hint) if d_hint else 0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        tokens = list(re.finditer(r"\S+", raw))
        head = tokens[0]
        try:
            label = float(head.group())
        except ValueError:
            raise LibsvmFormatError(
                f"line {line_no}, column {head.start() + 1}: "
                f"bad label {head.group()!r}") from None
        entries: list[tuple[int, float]] = []
        prev = 0
        for tok in tokens[1:]:
            col = tok.start() + 1
            idx_text, sep, val_text = tok.group().partition(":")
            if not sep:
                raise LibsvmFormatError(
                    f"line {line_no}, column {col}: malformed token "
                    f"{tok.group()!r} (expected idx:value)")
            try:
                idx = int(idx_text)
                val = float(val_text)
            except ValueError:
                raise LibsvmFormatError(
                    f"line {line_no}, column {col}: malformed token "
                    f"{tok.group()!r}") from None
            if idx == 0:
                raise LibsvmFormatError(
                    f"line {line_no}, column {col}: indices are 1-based, got 0")
            if idx <= prev:
                raise LibsvmFormatError(
                    f"line {line_no}, column {col}: index {idx} not ascending "
                    f"(previous {prev})")
            entries.append((idx, val))
            prev = idx
        labels.append(label)
        rows.append(entries)
        width = max(width, prev)
    if not rows:
        raise LibsvmFormatError("no data lines found")
    n = len(rows)
    need = n * width * 8
    if need > mem_warn_bytes:
        warnings.warn(
            f"dense LIBSVM materialization needs {need / 2**20:.0f} MiB "
            f"({n} rows x {width} columns)", ResourceWarning)
    features = np.zeros((n, width))
    for r, entries in enumerate(rows):
        for idx, val in entries:
            features[r, idx - 1] = val
    return features, np.asarray(labels)


# ---------------------------------------------------------------------------
# synthetic problems


@dataclass
class SynthSpec:
    """Recipe for a generated problem that meets the big-data condition.

    Feature rows are drawn standard normal, then rescaled globally so that
    n >= target_beta * L / s holds with a hair of slack.  Targets come from a
    planted weight vector plus noise (squared) or its sign (logistic).
    """

    n: int
    d: int
    loss: str = LOGISTIC
    s: float = 0.01
    target_beta: float = 2.0
    noise: float = 0.0
    seed: int = 0
    l1_weight: float = 0.0


def synth_problem(spec: SynthSpec, reference_tol: float = 1e-12):
    """Generate (FiniteSumProblem, ReferenceSolution) from a SynthSpec."""
    if spec.n < 2 or spec.d < 1:
        raise ValueError(f"need n >= 2 and d >= 1, got n={spec.n}, d={spec.d}")
    if spec.s <= 0:
        raise ValueError("synthetic problems need s > 0")
    if spec.n <= spec.target_beta:
        raise ValueError(
            f"n={spec.n} cannot satisfy the big-data condition at "
            f"beta={spec.target_beta} for any feature scale")
    rng = np.random.default_rng([spec.seed])
    features = rng.standard_normal((spec.n, spec.d))
    planted = rng.standard_normal(spec.d)
    noise = spec.noise * rng.standard_normal(spec.n)

    q = _MARGIN_CURVATURE[spec.loss]
    max_norm2 = float(np.einsum("ij,ij->i", features, features).max())
    L_target = spec.n * spec.s / spec.target_beta
    scale2 = (L_target - spec.s) * (1.0 - 1e-9) / (q * max_norm2)
    for _ in range(64):
        scaled = features * np.sqrt(scale2)
        margins = scaled @ planted + noise
        if spec.loss == LOGISTIC:
            targets = np.where(margins >= 0, 1.0, -1.0)
        else:
            targets = margins
        problem = FiniteSumProblem(scaled, targets, spec.loss, s=spec.s,
                                   l1_weight=spec.l1_weight)
        if problem.big_data_check(spec.target_beta).verdict:
            break
        scale2 *= 1.0 - 1e-9  # shave another ulp-scale sliver off L
    else:
        raise RuntimeError("feature rescaling failed to reach the target beta")
    return problem, reference_solve(problem, tol=reference_tol)


# ---------------------------------------------------------------------------
# trace CSV


def _format_float(x: float) -> str:
    return repr(float(x))


def write_trace(records, sink) -> None:
    """Write records as CSV; floats use shortest round-trip decimals."""
    lines = [TRACE_HEADER]
    for r in records:
        lines.append(",".join((
            _format_float(r.epoch), _format_float(r.objective),
            _format_float(r.suboptimality), _format_float(r.grad_norm),
            _format_float(r.wall_ms), r.solver, r.sampling, str(int(r.seed)),
        )))
    payload = "\n".join(lines) + "\n"
    with _open_text(sink, "w") as handle:
        handle.write(payload)


def read_trace(source) -> list[TraceRecord]:
    with _open_text(source, "r") as handle:
        text = handle.read()
    lines = text.splitlines()
    if not lines or lines[0] != TRACE_HEADER:
        found = lines[0] if lines else ""
        raise TraceFormatError(
            f"header mismatch: expected {TRACE_HEADER!r}, found {found!r}")
    records = []
    names = TRACE_HEADER.split(",")
    for line_no, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != len(names):
            raise TraceFormatError(
                f"line {line_no}: expected {len(names)} fields, found {len(fields)}")
        try:
            records.append(TraceRecord(
                epoch=float(fields[0]), objective=float(fields[1]),
                suboptimality=float(fields[2]), grad_norm=float(fields[3]),
                wall_ms=float(fields[4]), solver=fields[5], sampling=fields[6],
                seed=int(fields[7]),
            ))
        except ValueError as exc:
            raise TraceFormatError(f"line {line_no}: non-numeric field ({exc})") from None
    return records


# ---------------------------------------------------------------------------
# checkpoints


def _hex_vector(v: np.ndarray) -> str:
    return " ".join(float(x).hex() for x in v)


def _parse_hex_vector(line: str, line_no: int, d: int) -> np.ndarray:
    tokens = line.split()
    if len(tokens) != d:
        raise CheckpointFormatError(
            f"line {line_no}: expected {d} entries, found {len(tokens)}")
    out = np.empty(d)
    for i, tok in enumerate(tokens):
        try:
            out[i] = float.fromhex(tok)
        except ValueError:
            raise CheckpointFormatError(
                f"line {line_no}: bad float literal {tok!r}") from None
    return out


def checkpoint_save(state, sink, sampler: IndexSampler | None = None) -> None:
    """Serialize solver state (and optionally the sampler position).

    Table rows and vectors are written as hexadecimal float literals, so
    save -> load -> save is byte-identical and resumed runs replay the exact
    arithmetic of an uninterrupted one.
    """
    lines = [CHECKPOINT_MAGIC, f"solver {state.solver_tag}"]
    vectors: list[tuple[str, np.ndarray]] = []
    tables: list[tuple[str, np.ndarray]] = []
    if isinstance(state, FinitoState):
        n, d = state.p_table.shape
        lines += [f"n {n}", f"d {d}", f"k {state.k}", f"seen {state.seen}",
                  f"alpha {_format_float(state.alpha)}",
                  f"proximal {int(state.proximal)}",
                  f"audit {int(state.audit)}"]
        vectors.append(("w", state.w))
        vectors.append(("p_sum", state.p_sum))
        tables.append(("p", state.p_table))
        if state.audit:
            vectors.append(("phi_sum", state.phi_sum))
            vectors.append(("grad_sum", state.grad_sum))
            tables.append(("phi", state.phi_table))
            tables.append(("grad", state.grad_table))
    elif isinstance(state, SagState):
        n, d = state.grad_table.shape
        lines += [f"n {n}", f"d {d}", f"k {state.k}", f"seen {state.seen}",
                  f"step {_format_float(state.step)}"]
        vectors.append(("w", state.w))
        vectors.append(("grad_sum", state.grad_sum))
        tables.append(("grad", state.grad_table))
    elif isinstance(state, FullGradientState):
        lines += [f"d {state.w.shape[0]}", f"k {state.k}"]
        vectors.append(("w", state.w))
    else:
        raise TypeError(f"cannot checkpoint {type(state).__name__}")
    if sampler is not None:
        lines += [f"sampling {sampler.scheme.tag}",
                  f"sampling_seed {sampler.scheme.seed}",
                  f"draws {sampler.draws}"]
    else:
        lines.append("sampling none")
    for name, vec in vectors:
        lines.append(f"vec {name} {_hex_vector(vec)}")
    for name, table in tables:
        lines.append(f"table {name} {table.shape[0]}")
        lines.extend(_hex_vector(row) for row in table)
    lines.append("END")
    with _open_text(sink, "w") as handle:
        handle.write("\n".join(lines) + "\n")


def checkpoint_load(source, problem):
    """Rebuild (state, sampler) from a checkpoint, verifying problem shape."""
    with _open_text(source, "r") as handle:
        text = handle.read()
    lines = text.splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        found = lines[0] if lines else ""
        raise CheckpointFormatError(
            f"unsupported checkpoint header {found!r} (expected {CHECKPOINT_MAGIC!r})")
    kv: dict[str, str] = {}
    vectors: dict[str, np.ndarray] = {}
    tables: dict[str, np.ndarray] = {}
    saw_end = False
    pos = 1
    while pos < len(lines):
        line = lines[pos]
        line_no = pos + 1
        pos += 1
        if not line.strip():
            continue
        if line == "END":
            saw_end = True
            break
        key, _, rest = line.partition(" ")
        if key == "vec":
            name, _, payload = rest.partition(" ")
            vectors[name] = _parse_hex_vector(payload, line_no,
                                              len(payload.split()))
        elif key == "table":
            name, _, count_text = rest.partition(" ")
            try:
                count = int(count_text)
            except ValueError:
                raise CheckpointFormatError(
                    f"line {line_no}: bad table row count {count_text!r}") from None
            d = int(kv.get("d", problem.d))
            rows = np.empty((count, d))
            for r in range(count):
                if pos >= len(lines) or lines[pos] == "END":
                    raise CheckpointFormatError(
                        f"truncated checkpoint: table {name!r} needs {count} rows, "
                        f"got {r} (line {pos + 1})")
                rows[r] = _parse_hex_vector(lines[pos], pos + 1, d)
                pos += 1
            tables[name] = rows
        else:
            kv[key] = rest
    if not saw_end:
        raise CheckpointFormatError("truncated checkpoint: missing END marker")

    def _need(key: str) -> str:
        if key not in kv:
            raise CheckpointFormatError(f"missing {key!r} entry")
        return kv[key]

    solver = _need("solver")
    d = int(_need("d"))
    if d != problem.d:
        raise CheckpointFormatError(
            f"dimension mismatch: checkpoint d={d}, problem d={problem.d}")
    if "n" in kv and int(kv["n"]) != problem.n:
        raise CheckpointFormatError(
            f"dimension mismatch: checkpoint n={kv['n']}, problem n={problem.n}")
    if solver in ("finito", "prox-finito", "miso"):
        state = FinitoState(
            alpha=float(_need("alpha")), k=int(_need("k")),
            seen=int(_need("seen")), w=vectors["w"],
            p_table=tables["p"], p_sum=vectors["p_sum"],
            proximal=bool(int(_need("proximal"))), solver_tag=solver,
        )
        if bool(int(_need("audit"))):
            state.phi_table = tables["phi"]
            state.grad_table = tables["grad"]
            state.phi_sum = vectors["phi_sum"]
            state.grad_sum = vectors["grad_sum"]
    elif solver == "sag":
        state = SagState(step=float(_need("step")), k=int(_need("k")),
                         seen=int(_need("seen")), w=vectors["w"],
                         grad_table=tables["grad"], grad_sum=vectors["grad_sum"])
    elif solver == "full-gradient":
        state = FullGradientState(w=vectors["w"], k=int(_need("k")))
    else:
        raise CheckpointFormatError(f"unknown solver tag {solver!r}")
    sampler = None
    sampling = _need("sampling")
    if sampling != "none":
        scheme = SamplingScheme.from_name(sampling, int(_need("sampling_seed")))
        sampler = IndexSampler(scheme, problem.n).skip_to(int(_need("draws")))
    return state, sampler
