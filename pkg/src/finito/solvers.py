"""Incremental solvers over gradient tables, plus the shared run driver.

The central update keeps a table row per component and moves the iterate to

    w = phi_bar - (1/(alpha * s * n)) * sum_i f_i'(phi_i)

after replacing one table row per step.  Compact storage keeps only
p_i = f_i'(phi_i) - alpha*s*phi_i, which halves memory and recovers w as
-(1/(alpha*s*n)) * sum_i p_i.  Audit mode keeps the explicit phi/gradient
tables as well, which the verification suites and the proximal variant need.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .problems import prox_operator, StrongConvexityRequired
from .samplers import IndexSampler, SamplingScheme
from .problems import ReferenceSolution

SOLVER_TAGS = ("finito", "prox-finito", "sag", "miso", "full-gradient")

# run() aborts when suboptimality exceeds this multiple of its start value
DIVERGENCE_RATIO = 1e6


class DivergenceError(RuntimeError):
    """A run blew up: non-finite numbers or runaway suboptimality.

    Carries the offending component j and step k when known, and whatever
    trace records were produced before the abort.
    """

    def __init__(self, message, j=None, k=None, records=None):
        super().__init__(message)
        self.j = j
        self.k = k
        self.records = records if records is not None else []


@dataclass
class TraceRecord:
    """One telemetry row; wall_ms is the only nondeterministic field."""

    epoch: float
    objective: float
    suboptimality: float
    grad_norm: float
    wall_ms: float
    solver: str
    sampling: str
    seed: int


@dataclass
class FinitoState:
    """Mutable single-owner state for the table-based solvers.

    Compact mode stores p_table/p_sum only.  Audit mode additionally keeps
    phi_table/grad_table (with running sums) and still maintains p_table so
    the two storage forms can be cross-checked.
    """

    alpha: float
    k: int
    seen: int
    w: np.ndarray
    p_table: np.ndarray
    p_sum: np.ndarray
    phi_table: np.ndarray | None = None
    grad_table: np.ndarray | None = None
    phi_sum: np.ndarray | None = None
    grad_sum: np.ndarray | None = None
    proximal: bool = False
    solver_tag: str = "finito"

    @property
    def audit(self) -> bool:
        return self.phi_table is not None


@dataclass
class SagState:
    """State for the stored-gradient averaging baseline."""

    step: float
    k: int
    seen: int
    w: np.ndarray
    grad_table: np.ndarray
    grad_sum: np.ndarray
    solver_tag: str = "sag"


@dataclass
class FullGradientState:
    """Deterministic full-gradient baseline; one step costs a whole pass."""

    w: np.ndarray
    k: int = 0
    solver_tag: str = "full-gradient"


@dataclass
class SolverConfig:
    """Flat run configuration; sampling and seed live in SamplingScheme."""

    solver: str = "finito"
    alpha: float = 2.0
    step: float | None = None
    sag_practical: bool = False
    audit: bool = False
    first_pass: bool = True
    monitor: str = "iterate"  # "iterate" or "table-mean" (audit only)
    w0: np.ndarray | None = None


def _guarded_gradient(problem, j: int, w: np.ndarray, k: int) -> np.ndarray:
    try:
        g = problem.component_gradient(j, w)
    except ValueError as exc:
        raise DivergenceError(f"iterate no longer finite at step {k}: {exc}",
                              j=j, k=k) from exc
    if not np.all(np.isfinite(g)):
        raise DivergenceError(f"non-finite gradient for component {j} at step {k}",
                              j=j, k=k)
    return g


def _check_component(problem, j: int) -> int:
    j = int(j)
    if not 0 <= j < problem.n:
        raise IndexError(f"component index {j} out of range [0, {problem.n})")
    return j


def _recompute_sums(state: FinitoState) -> None:
    # periodic full recompute bounds incremental-sum drift
    state.p_sum = state.p_table.sum(axis=0)
    if state.audit:
        state.phi_sum = state.phi_table.sum(axis=0)
        state.grad_sum = state.grad_table.sum(axis=0)


def _refresh_w(state: FinitoState, problem) -> None:
    if state.seen == 0:
        return
    denom = state.alpha * problem.s * state.seen
    if state.audit:
        z = state.phi_sum / state.seen - state.grad_sum / denom
    else:
        z = -state.p_sum / denom
    if state.proximal:
        z = prox_operator(problem.l1_weight, z, 1.0 / (state.alpha * problem.s))
    state.w = z


def finito_init(problem, alpha: float, w0=None, audit: bool = False,
                first_pass: bool = False, proximal: bool = False,
                solver_tag: str = "finito") -> FinitoState:
    """Build the table state.

    The default fills every row at w0 and sets w to the resulting map.  With
    first_pass=True the tables start empty and rows are admitted one at a
    time in index order by finito_first_pass_step, so a pass costs exactly n
    gradient evaluations.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if problem.s == 0.0:
        raise StrongConvexityRequired("the table update divides by alpha*s*n")
    if proximal:
        audit = True
    n, d = problem.n, problem.d
    if w0 is None:
        w0 = np.zeros(d)
    w0 = problem._check_point(w0)
    state = FinitoState(
        alpha=float(alpha), k=0, seen=0, w=w0.copy(),
        p_table=np.zeros((n, d)), p_sum=np.zeros(d),
        proximal=proximal, solver_tag=solver_tag,
    )
    if audit:
        state.phi_table = np.zeros((n, d))
        state.grad_table = np.zeros((n, d))
        state.phi_sum = np.zeros(d)
        state.grad_sum = np.zeros(d)
    if first_pass:
        return state
    grads = problem.table_gradients(np.broadcast_to(w0, (n, d)))
    state.p_table = grads - alpha * problem.s * w0[None, :]
    if audit:
        state.phi_table = np.tile(w0, (n, 1))
        state.grad_table = grads.copy()
    state.seen = n
    _recompute_sums(state)
    _refresh_w(state, problem)
    return state


def finito_step(state: FinitoState, problem, j: int) -> FinitoState:
    """Fold the current w into table row j, then recompute w from the tables."""
    if state.seen < problem.n:
        raise ValueError("first pass incomplete; step with finito_first_pass_step")
    j = _check_component(problem, j)
    g = _guarded_gradient(problem, j, state.w, state.k)
    asw = state.alpha * problem.s * state.w
    p_new = g - asw
    state.p_sum = state.p_sum + (p_new - state.p_table[j])
    state.p_table[j] = p_new
    if state.audit:
        state.phi_sum = state.phi_sum + (state.w - state.phi_table[j])
        state.grad_sum = state.grad_sum + (g - state.grad_table[j])
        state.phi_table[j] = state.w
        state.grad_table[j] = g
    state.k += 1
    if state.k % problem.n == 0:
        _recompute_sums(state)
    _refresh_w(state, problem)
    if not np.all(np.isfinite(state.w)):
        raise DivergenceError(f"iterate diverged at step {state.k}", j=j, k=state.k)
    return state


def finito_first_pass_step(state: FinitoState, problem, k: int) -> FinitoState:
    """Admit component k during the first pass.

    Components are visited in index order; with k rows already seen the
    iterate is the map over the seen prefix only,

        w = (1/k) sum_{i<k} phi_i - (1/(alpha*s*k)) sum_{i<k} f_i'(phi_i),

    so no unseen gradient is ever touched.
    """
    if state.seen >= problem.n:
        raise ValueError(f"first pass is over (k >= n = {problem.n})")
    k = int(k)
    if k != state.seen:
        raise ValueError(
            f"first pass visits components in index order; expected k={state.seen}, got {k}"
        )
    g = _guarded_gradient(problem, k, state.w, state.k)
    p_new = g - state.alpha * problem.s * state.w
    state.p_sum = state.p_sum + p_new
    state.p_table[k] = p_new
    if state.audit:
        state.phi_sum = state.phi_sum + state.w
        state.grad_sum = state.grad_sum + g
        state.phi_table[k] = state.w
        state.grad_table[k] = g
    state.seen += 1
    state.k += 1
    if state.k % problem.n == 0:
        _recompute_sums(state)
    _refresh_w(state, problem)
    if not np.all(np.isfinite(state.w)):
        raise DivergenceError(f"iterate diverged at step {state.k}", j=k, k=state.k)
    return state


def prox_finito_step(state: FinitoState, problem, j: int) -> FinitoState:
    """Table step whose w passes through the L1 prox with step 1/(alpha*s).

    Needs audit storage: once the iterate is no longer a linear image of the
    p rows, phi_bar and the gradient sum must stay recoverable explicitly.
    """
    if not state.proximal:
        raise ValueError("state was not built for the proximal variant")
    if not state.audit:
        raise ValueError("the proximal variant requires audit-mode tables")
    return finito_step(state, problem, j)


def miso_init(problem, w0=None, audit: bool = False,
              first_pass: bool = False) -> FinitoState:
    """Same tables with alpha pinned to L/s, so the divisor becomes L*n."""
    alpha = problem.lipschitz_constant() / problem.s
    return finito_init(problem, alpha, w0=w0, audit=audit,
                       first_pass=first_pass, solver_tag="miso")


def miso_step(state: FinitoState, problem, j: int) -> FinitoState:
    """Parameter aliasing only: identical to finito_step at alpha = L/s."""
    return finito_step(state, problem, j)


def sag_default_step(problem, practical: bool = False) -> float:
    """Stored-gradient step: 1/(16Ln) from the analysis, 1/(Ln) in practice."""
    L = problem.lipschitz_constant()
    return 1.0 / (L * problem.n) if practical else 1.0 / (16.0 * L * problem.n)


def sag_init(problem, w0=None, step: float | None = None,
             practical: bool = False, first_pass: bool = False) -> SagState:
    if step is None:
        step = sag_default_step(problem, practical=practical)
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    n, d = problem.n, problem.d
    if w0 is None:
        w0 = np.zeros(d)
    w0 = problem._check_point(w0)
    state = SagState(step=float(step), k=0, seen=0, w=w0.copy(),
                     grad_table=np.zeros((n, d)), grad_sum=np.zeros(d))
    if not first_pass:
        state.grad_table = problem.table_gradients(np.broadcast_to(w0, (n, d)))
        state.grad_sum = state.grad_table.sum(axis=0)
        state.seen = n
    return state


def sag_step(state: SagState, problem, j: int) -> SagState:
    """Refresh stored row j at the current w, then move along the table sum."""
    if state.seen < problem.n:
        raise ValueError("first pass incomplete; step with sag_first_pass_step")
    j = _check_component(problem, j)
    g = _guarded_gradient(problem, j, state.w, state.k)
    state.grad_sum = state.grad_sum + (g - state.grad_table[j])
    state.grad_table[j] = g
    state.k += 1
    if state.k % problem.n == 0:
        state.grad_sum = state.grad_table.sum(axis=0)
    state.w = state.w - state.step * state.grad_sum
    if not np.all(np.isfinite(state.w)):
        raise DivergenceError(f"iterate diverged at step {state.k}", j=j, k=state.k)
    return state


def sag_first_pass_step(state: SagState, problem, k: int) -> SagState:
    """Admit component k; the sum is divided by the number seen, not n."""
    if state.seen >= problem.n:
        raise ValueError(f"first pass is over (k >= n = {problem.n})")
    k = int(k)
    if k != state.seen:
        raise ValueError(
            f"first pass visits components in index order; expected k={state.seen}, got {k}"
        )
    g = _guarded_gradient(problem, k, state.w, state.k)
    state.grad_sum = state.grad_sum + g
    state.grad_table[k] = g
    state.seen += 1
    state.k += 1
    if state.k % problem.n == 0:
        state.grad_sum = state.grad_table.sum(axis=0)
    state.w = state.w - (state.step * problem.n / state.seen) * state.grad_sum
    if not np.all(np.isfinite(state.w)):
        raise DivergenceError(f"iterate diverged at step {state.k}", j=k, k=state.k)
    return state


# ---------------------------------------------------------------------------
# run driver


def _monitor_point(state, config: SolverConfig) -> np.ndarray:
    if config.monitor == "table-mean":
        if not isinstance(state, FinitoState) or not state.audit:
            raise ValueError("table-mean monitoring needs an audit-mode table solver")
        if state.seen == 0:
            return state.w
        return state.phi_sum / state.seen
    return state.w


def _build_state(problem, config: SolverConfig):
    w0 = config.w0
    audit = config.audit or config.monitor == "table-mean"
    solver = config.solver
    if solver == "finito":
        return finito_init(problem, config.alpha, w0=w0, audit=audit,
                           first_pass=config.first_pass)
    if solver == "prox-finito":
        return finito_init(problem, config.alpha, w0=w0, audit=True,
                           first_pass=config.first_pass, proximal=True,
                           solver_tag="prox-finito")
    if solver == "miso":
        return miso_init(problem, w0=w0, audit=audit,
                         first_pass=config.first_pass)
    if solver == "sag":
        return sag_init(problem, w0=w0, step=config.step,
                        practical=config.sag_practical,
                        first_pass=config.first_pass)
    if solver == "full-gradient":
        w0 = np.zeros(problem.d) if w0 is None else problem._check_point(w0)
        return FullGradientState(w=w0.copy(), k=0)
    raise ValueError(f"unknown solver {solver!r}")


def run_with_state(problem, config: SolverConfig, scheme: SamplingScheme,
                   epochs: int, reference: ReferenceSolution | None = None,
                   record_every: float = 1.0, resume: tuple | None = None):
    """Like run(), but returns (records, state, sampler) so the caller can
    checkpoint where the run stopped."""
    if config.solver not in SOLVER_TAGS:
        raise ValueError(f"unknown solver {config.solver!r}")
    if epochs < 0:
        raise ValueError(f"epochs must be >= 0, got {epochs}")
    if record_every <= 0:
        raise ValueError(f"record_every must be > 0, got {record_every}")
    n = problem.n
    f_star = reference.f_star if reference is not None else None
    t0 = time.perf_counter()
    records: list[TraceRecord] = []

    full_grad = config.solver == "full-gradient"
    steps_per_epoch = 1 if full_grad else n
    total_steps = epochs * steps_per_epoch
    interval = max(1, int(round(record_every * steps_per_epoch)))

    if resume is not None:
        state, sampler = resume
        if getattr(state, "solver_tag", None) != config.solver:
            raise ValueError(
                f"resume state is for {getattr(state, 'solver_tag', None)!r}, "
                f"config says {config.solver!r}"
            )
        if sampler is None and not full_grad:
            sampler = IndexSampler(scheme, n)
    else:
        state = _build_state(problem, config)
        sampler = None if full_grad else IndexSampler(scheme, n)

    # a restored sampler keeps its original scheme; report that one
    active = sampler.scheme if sampler is not None else scheme

    def emit():
        point = _monitor_point(state, config)
        objective = problem.full_objective(point)
        sub = objective - f_star if f_star is not None else float("nan")
        gnorm = float(np.linalg.norm(problem.full_gradient(point)))
        records.append(TraceRecord(
            epoch=state.k / steps_per_epoch, objective=objective,
            suboptimality=sub, grad_norm=gnorm,
            wall_ms=(time.perf_counter() - t0) * 1e3,
            solver=config.solver, sampling=active.tag, seed=active.seed,
        ))
        return sub

    start_obj = problem.full_objective(_monitor_point(state, config))
    baseline = start_obj - f_star if f_star is not None else None
    if resume is None:
        emit()

    if full_grad:
        L = problem.lipschitz_constant()
        gd_step = config.step if config.step is not None else 1.0 / L

    while state.k < total_steps:
        try:
            if full_grad:
                g = problem.full_gradient(state.w)
                state.w = prox_operator(problem.l1_weight,
                                        state.w - gd_step * g, gd_step)
                state.k += 1
                if not np.all(np.isfinite(state.w)):
                    raise DivergenceError("iterate diverged", k=state.k)
            elif isinstance(state, SagState):
                if state.seen < n:
                    sag_first_pass_step(state, problem, state.seen)
                else:
                    sag_step(state, problem, sampler.next_index())
            else:
                if state.seen < n:
                    finito_first_pass_step(state, problem, state.seen)
                else:
                    finito_step(state, problem, sampler.next_index())
        except DivergenceError as err:
            err.records = records
            raise
        if state.k % interval == 0 or state.k == total_steps:
            sub = emit()
            if (baseline is not None and baseline > 1e-9
                    and sub > DIVERGENCE_RATIO * baseline):
                raise DivergenceError(
                    f"suboptimality exceeded {DIVERGENCE_RATIO:g} times its "
                    f"starting value at step {state.k}",
                    k=state.k, records=records)
    return records, state, sampler


def run(problem, config: SolverConfig, scheme: SamplingScheme, epochs: int,
        reference: ReferenceSolution | None = None, record_every: float = 1.0,
        resume: tuple | None = None) -> list[TraceRecord]:
    """Drive a solver for `epochs` passes and return its trace.

    Executes the first-pass rule (when the state was initialized for it),
    then scheme-driven steps, one TraceRecord per `record_every` passes.

    Parameters
    ----------
    reference : ReferenceSolution, optional
        Enables the suboptimality column and the divergence ratio guard.
    record_every : float
        Record interval in passes (default one row per pass).
    resume : (state, sampler), optional
        Continue a checkpointed run; records are emitted only for new steps.

    Raises DivergenceError (with the partial trace attached) when the iterate
    goes non-finite or suboptimality exceeds 1e6 times its starting value.
    """
    records, _, _ = run_with_state(problem, config, scheme, epochs,
                                   reference=reference,
                                   record_every=record_every, resume=resume)
    return records


# ---------------------------------------------------------------------------
# full-gradient reference solver


def reference_solve(problem, tol: float = 1e-12,
                    max_iter: int = 500_000) -> ReferenceSolution:
    """High-accuracy minimizer for the suboptimality reference.

    Smooth problems: gradient descent with a backtracked, regrowing step until
    the gradient norm is at most tol.  With an L1 term: proximal gradient at
    step 1/L until the fixed-point residual is at most tol.
    """
    L = problem.lipschitz_constant()
    w = np.zeros(problem.d)
    if problem.l1_weight == 0.0:
        step = 1.0 / L
        fw = problem.full_objective(w)
        g = problem.full_gradient(w)
        for _ in range(max_iter):
            gnorm2 = float(g @ g)
            if np.sqrt(gnorm2) <= tol:
                break
            # near the floor the Armijo decrement is smaller than the
            # objective's own rounding noise; plain 1/L steps still descend
            if 0.5 * gnorm2 / L <= 8 * np.finfo(float).eps * (1.0 + abs(fw)):
                w = w - g / L
                fw = problem.full_objective(w)
                g = problem.full_gradient(w)
                continue
            while True:
                w_try = w - step * g
                f_try = problem.full_objective(w_try)
                if f_try <= fw - 0.5 * step * gnorm2 or step < 1e-18 / L:
                    break
                step *= 0.5
            w, fw = w_try, f_try
            g = problem.full_gradient(w)
            step = min(step * 1.5, 1e6 / L)
        gnorm = float(np.linalg.norm(g))
        if gnorm > tol:
            raise RuntimeError(f"reference solve stalled at gradient norm {gnorm:g}")
        return ReferenceSolution(w_star=w, f_star=problem.full_objective(w),
                                 grad_norm_at_solution=gnorm,
                                 method_tag="full-gradient-backtracking")
    step = 1.0 / L
    resid = np.inf
    for _ in range(max_iter):
        w_next = prox_operator(problem.l1_weight,
                               w - step * problem.full_gradient(w), step)
        resid = float(np.linalg.norm(w_next - w))
        w = w_next
        if resid <= tol:
            break
    if resid > tol:
        raise RuntimeError(f"proximal reference stalled at residual {resid:g}")
    return ReferenceSolution(w_star=w, f_star=problem.full_objective(w),
                             grad_norm_at_solution=resid,
                             method_tag="proximal-gradient")
