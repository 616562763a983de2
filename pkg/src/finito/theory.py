"""Numerical verification of the convergence analysis behind the finito
update.

Everything here works on *audit* quantities: an explicit point table phi
(one row per component) and an iterate w.  The central object is a
four-term potential

    T1 = f(phi_bar)
    T2 = -(1/n) sum_i [ f_i(phi_i) + <f_i'(phi_i), w - phi_i> ]
    T3 = -(s/2n) sum_i ||w - phi_i||^2
    T4 = +(s/2n) sum_i ||phi_bar - phi_i||^2

whose expected one-step decrease (under uniform sampling, with w equal to
the table map) certifies geometric convergence, and whose value bounds the
suboptimality of the table mean.  The checks below evaluate both sides of
each claimed inequality with exact enumeration over the n equally likely
updates, never with sampled estimates, so a failure is a real
counterexample and not noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .problems import ReferenceSolution, StrongConvexityRequired
from .solvers import TraceRecord, reference_solve


@dataclass
class LyapunovTerms:
    t1: float
    t2: float
    t3: float
    t4: float

    @property
    def total(self) -> float:
        return self.t1 + self.t2 + self.t3 + self.t4


@dataclass
class CheckReport:
    """One verified inequality: satisfied iff lhs <= rhs + tol.

    slack = rhs - lhs, so negative slack beyond tolerance means violation.
    """

    name: str
    lhs: float
    rhs: float
    satisfied: bool
    slack: float
    context: str = ""


def _require_smooth(problem) -> None:
    if getattr(problem, "l1_weight", 0.0) != 0.0:
        raise ValueError(
            "analysis checks cover the smooth objective only; "
            "drop the l1 term (l1_weight=0)")


def _require_strongly_convex(problem) -> None:
    if problem.s <= 0:
        raise StrongConvexityRequired(
            "the potential and map need s > 0")


def _objective_at(problem, point: np.ndarray) -> float:
    return float(problem.objective_batch(point[np.newaxis, :])[0])


def _gradients_at_point(problem, point: np.ndarray) -> np.ndarray:
    """All n component gradients evaluated at one point, as rows."""
    table = np.broadcast_to(point, (problem.n, problem.d))
    return problem.table_gradients(table)


def finito_map(problem, phi_table: np.ndarray, alpha: float,
               grads: np.ndarray | None = None) -> np.ndarray:
    """w(phi) = mean(phi) - (1/(alpha*s*n)) * sum of table gradients."""
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    _require_strongly_convex(problem)
    phi_table = problem._check_table(phi_table)
    if grads is None:
        grads = problem.table_gradients(phi_table)
    denom = alpha * problem.s * problem.n
    return phi_table.mean(axis=0) - grads.sum(axis=0) / denom


def lyapunov_evaluate(problem, phi_table: np.ndarray,
                      w: np.ndarray) -> LyapunovTerms:
    """Evaluate the four potential terms at an arbitrary (phi, w) pair."""
    _require_smooth(problem)
    _require_strongly_convex(problem)
    phi_table = problem._check_table(phi_table)
    w = problem._check_point(w)
    phi_bar = phi_table.mean(axis=0)
    values = problem.table_values(phi_table)
    grads = problem.table_gradients(phi_table)
    gaps = w[np.newaxis, :] - phi_table
    t1 = _objective_at(problem, phi_bar)
    t2 = -float(values.mean()) - float(np.einsum("ij,ij->i", grads, gaps).mean())
    t3 = -0.5 * problem.s * float(np.einsum("ij,ij->i", gaps, gaps).mean())
    spread = phi_bar[np.newaxis, :] - phi_table
    t4 = 0.5 * problem.s * float(np.einsum("ij,ij->i", spread, spread).mean())
    return LyapunovTerms(t1, t2, t3, t4)


def initial_lyapunov(problem, phi0: np.ndarray, alpha: float) -> float:
    """Potential value when every table row equals phi0 and w is the map.

    Closed form: (1 - 1/(2*alpha)) * ||f'(phi0)||^2 / (alpha * s).
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    _require_smooth(problem)
    _require_strongly_convex(problem)
    phi0 = problem._check_point(phi0)
    g = problem.full_gradient(phi0)
    return (1.0 - 0.5 / alpha) * float(g @ g) / (alpha * problem.s)


def admissible_parameters(alpha: float, beta: float) -> bool:
    """Parameter region where the expected-decrease certificate applies:

        2/alpha - 1/alpha^2 - beta + beta/alpha <= 0,  alpha >= 2, beta >= 2.
    """
    if alpha <= 0 or beta <= 0:
        return False
    margin = 2.0 / alpha - 1.0 / alpha**2 - beta + beta / alpha
    return bool(margin <= 0.0 and alpha >= 2.0 and beta >= 2.0)


def _branch_maps(problem, phi_table: np.ndarray, w: np.ndarray, alpha: float):
    """All n successor (phi', w') pairs of one update from (phi, w).

    Branch j overwrites table row j with w and recomputes the map; each is
    equally likely under uniform sampling.  Gradients of f_j at w come from
    a single batched evaluation.
    """
    grads = problem.table_gradients(phi_table)
    grads_at_w = _gradients_at_point(problem, w)
    phi_sum = phi_table.sum(axis=0)
    grad_sum = grads.sum(axis=0)
    denom = alpha * problem.s * problem.n
    branches = []
    for j in range(problem.n):
        phi_j = phi_table.copy()
        phi_j[j] = w
        new_phi_sum = phi_sum + (w - phi_table[j])
        new_grad_sum = grad_sum + (grads_at_w[j] - grads[j])
        w_j = new_phi_sum / problem.n - new_grad_sum / denom
        branches.append((phi_j, w_j))
    return branches


def expected_decrease_check(problem, phi_table: np.ndarray, w: np.ndarray,
                            alpha: float, beta: float,
                            tol: float = 1e-10) -> CheckReport:
    """E[T'] <= (1 - 1/(alpha*n)) T, the expectation taken by enumerating
    all n equally likely updates exactly.

    Preconditions: admissible (alpha, beta) and the big-data condition at
    beta; both raise ValueError when unmet rather than report a failure,
    because outside them the claim is simply not made.
    """
    if not admissible_parameters(alpha, beta):
        raise ValueError(
            f"(alpha={alpha}, beta={beta}) is outside the admissible region")
    report = problem.big_data_check(beta)
    if not report.verdict:
        raise ValueError(
            f"big-data condition fails at beta={beta}: "
            f"n*s = {report.n * report.s:g} < beta*L = {beta * report.L:g}")
    base = lyapunov_evaluate(problem, phi_table, w)
    totals = [lyapunov_evaluate(problem, phi_j, w_j).total
              for phi_j, w_j in _branch_maps(problem, phi_table, w, alpha)]
    lhs = float(np.mean(totals))
    rhs = (1.0 - 1.0 / (alpha * problem.n)) * base.total
    scaled = tol * (1.0 + abs(base.total))
    return CheckReport(
        name="expected-decrease", lhs=lhs, rhs=rhs,
        satisfied=bool(lhs <= rhs + scaled), slack=rhs - lhs,
        context=f"alpha={alpha:g} beta={beta:g} n={problem.n} T={base.total:.6g}")


def bound_gap_check(problem, phi_table: np.ndarray, w: np.ndarray,
                    alpha: float, reference: ReferenceSolution,
                    tol: float = 1e-9) -> CheckReport:
    """f(phi_bar) - f* <= alpha * T, valid when w is the table map."""
    _require_smooth(problem)
    phi_table = problem._check_table(phi_table)
    w = problem._check_point(w)
    mapped = finito_map(problem, phi_table, alpha)
    scale = 1.0 + float(np.linalg.norm(mapped))
    if float(np.linalg.norm(w - mapped)) > 1e-9 * scale:
        raise ValueError("w is not the table map; the bound only covers "
                         "map-consistent states")
    terms = lyapunov_evaluate(problem, phi_table, w)
    phi_bar = phi_table.mean(axis=0)
    lhs = _objective_at(problem, phi_bar) - reference.f_star
    rhs = alpha * terms.total
    return CheckReport(
        name="suboptimality-bound", lhs=lhs, rhs=rhs,
        satisfied=bool(lhs <= rhs + tol), slack=rhs - lhs,
        context=f"alpha={alpha:g} n={problem.n}")


# ---------------------------------------------------------------------------
# per-term diagnostics


def expected_term_shifts(problem, phi_table: np.ndarray, w: np.ndarray,
                         alpha: float) -> LyapunovTerms:
    """E[T_m'] - T_m for each potential term, by exact enumeration."""
    base = lyapunov_evaluate(problem, phi_table, w)
    branches = [lyapunov_evaluate(problem, phi_j, w_j)
                for phi_j, w_j in _branch_maps(problem, phi_table, w, alpha)]
    return LyapunovTerms(
        t1=float(np.mean([b.t1 for b in branches])) - base.t1,
        t2=float(np.mean([b.t2 for b in branches])) - base.t2,
        t3=float(np.mean([b.t3 for b in branches])) - base.t3,
        t4=float(np.mean([b.t4 for b in branches])) - base.t4,
    )


def t3_shift_closed_form(problem, phi_table: np.ndarray, w: np.ndarray,
                         alpha: float) -> float:
    """Exact value of E[T3'] - T3 when w is the table map:

        -(1/n + 1/n^2) T3 + (1/(alpha n)) <f'(w), w - phi_bar>
        - (1/(2 alpha^2 s n^3)) sum_j ||f_j'(phi_j) - f_j'(w)||^2
    """
    _require_smooth(problem)
    _require_strongly_convex(problem)
    phi_table = problem._check_table(phi_table)
    w = problem._check_point(w)
    n, s = problem.n, problem.s
    gaps = w[np.newaxis, :] - phi_table
    t3 = -0.5 * s * float(np.einsum("ij,ij->i", gaps, gaps).mean())
    g_w = problem.full_gradient(w)
    phi_bar = phi_table.mean(axis=0)
    diff = problem.table_gradients(phi_table) - _gradients_at_point(problem, w)
    return (-(1.0 / n + 1.0 / n**2) * t3
            + float(g_w @ (w - phi_bar)) / (alpha * n)
            - float(np.einsum("ij,ij->", diff, diff))
            / (2.0 * alpha**2 * s * n**3))


def t4_shift_closed_form(problem, phi_table: np.ndarray,
                         w: np.ndarray) -> float:
    """Exact value of E[T4'] - T4 (holds for any w, no map needed):

        -(1/n) T4 + (s/(2n)) ||phi_bar - w||^2 - (s/(2n^3)) sum_j ||w - phi_j||^2
    """
    _require_strongly_convex(problem)
    phi_table = problem._check_table(phi_table)
    w = problem._check_point(w)
    n, s = problem.n, problem.s
    phi_bar = phi_table.mean(axis=0)
    spread = phi_bar[np.newaxis, :] - phi_table
    t4 = 0.5 * s * float(np.einsum("ij,ij->i", spread, spread).mean())
    gaps = w[np.newaxis, :] - phi_table
    u = phi_bar - w
    return (-t4 / n + 0.5 * s * float(u @ u) / n
            - 0.5 * s * float(np.einsum("ij,ij->", gaps, gaps)) / n**3)


def expected_step_gap(problem, phi_table: np.ndarray, w: np.ndarray,
                      alpha: float) -> float:
    """|| E[w'] - (w - (1/(alpha s n)) f'(w)) ||: the mean update equals a
    damped gradient step at w.  Zero up to roundoff when w is the map."""
    branches = _branch_maps(problem, phi_table, w, alpha)
    mean_next = np.mean([w_j for _, w_j in branches], axis=0)
    damped = w - problem.full_gradient(w) / (alpha * problem.s * problem.n)
    return float(np.linalg.norm(mean_next - damped))


def update_displacement_gap(problem, phi_table: np.ndarray, w: np.ndarray,
                            alpha: float) -> float:
    """Worst-case residual of the single-update displacement identity

        w_j' - w = (w - phi_j)/n + (f_j'(phi_j) - f_j'(w)) / (alpha s n),

    which holds exactly when w is the table map."""
    _require_strongly_convex(problem)
    phi_table = problem._check_table(phi_table)
    w = problem._check_point(w)
    grads = problem.table_gradients(phi_table)
    grads_at_w = _gradients_at_point(problem, w)
    denom = alpha * problem.s * problem.n
    worst = 0.0
    for j, (_, w_j) in enumerate(_branch_maps(problem, phi_table, w, alpha)):
        predicted = (w - phi_table[j]) / problem.n + \
            (grads[j] - grads_at_w[j]) / denom
        worst = max(worst, float(np.linalg.norm((w_j - w) - predicted)))
    return worst


def variance_decomposition_gap(phi_table: np.ndarray, w: np.ndarray) -> float:
    """| mean_i ||w - phi_i||^2 - ||w - phi_bar||^2 - mean_i ||phi_bar - phi_i||^2 |."""
    phi_table = np.asarray(phi_table, dtype=float)
    w = np.asarray(w, dtype=float)
    phi_bar = phi_table.mean(axis=0)
    gaps = w[np.newaxis, :] - phi_table
    spread = phi_bar[np.newaxis, :] - phi_table
    lhs = float(np.einsum("ij,ij->i", gaps, gaps).mean())
    u = w - phi_bar
    rhs = float(u @ u) + float(np.einsum("ij,ij->i", spread, spread).mean())
    return abs(lhs - rhs)


def table_mean_descent_check(problem, phi_table: np.ndarray, w: np.ndarray,
                             tol: float = 1e-9) -> CheckReport:
    """E[T1'] - T1 <= (1/n) <f'(phi_bar), w - phi_bar>
                      + (L/(2 n^3)) sum_j ||w - phi_j||^2."""
    _require_smooth(problem)
    phi_table = problem._check_table(phi_table)
    w = problem._check_point(w)
    n = problem.n
    phi_bar = phi_table.mean(axis=0)
    t1 = _objective_at(problem, phi_bar)
    gaps = w[np.newaxis, :] - phi_table
    nxt = phi_bar[np.newaxis, :] + gaps / n   # branch-j table means
    lhs = float(problem.objective_batch(nxt).mean()) - t1
    L = problem.lipschitz_constant()
    rhs = (float(problem.full_gradient(phi_bar) @ (w - phi_bar)) / n
           + 0.5 * L * float(np.einsum("ij,ij->", gaps, gaps)) / n**3)
    scaled = tol * (1.0 + abs(t1))
    return CheckReport(
        name="table-mean-descent", lhs=lhs, rhs=rhs,
        satisfied=bool(lhs <= rhs + scaled), slack=rhs - lhs,
        context=f"n={n}")


# ---------------------------------------------------------------------------
# convexity / smoothness inequality suite


def random_ball_point(rng: np.random.Generator, center: np.ndarray,
                radius: float) -> np.ndarray:
    """Uniform direction, length uniform in [0, radius]."""
    raw = rng.standard_normal(center.shape[0])
    norm = float(np.linalg.norm(raw))
    if norm == 0.0:
        return center.copy()
    return center + raw * (radius * rng.uniform() / norm)


def random_audit_state(problem, w_star: np.ndarray, alpha: float,
                       rng: np.random.Generator, radius: float = 2.0):
    """Random table with rows in a ball around w_star, w set to the map."""
    phi = np.stack([random_ball_point(rng, w_star, radius)
                    for _ in range(problem.n)])
    return phi, finito_map(problem, phi, alpha)


def _le_report(name: str, lhs: float, rhs: float, tol: float,
               ctx: str) -> CheckReport:
    scaled = tol * (1.0 + abs(rhs))
    return CheckReport(name=name, lhs=lhs, rhs=rhs,
                       satisfied=bool(lhs <= rhs + scaled),
                       slack=rhs - lhs, context=ctx)


def pair_checks(problem, x: np.ndarray, y: np.ndarray, tol: float = 1e-9,
                context: str = "") -> list[CheckReport]:
    """The five classical two-point inequalities on the full objective:
    smoothness-upper, smoothness-lower, strong-convexity-lower,
    cocoercivity, strong-monotonicity."""
    _require_smooth(problem)
    x = problem._check_point(x)
    y = problem._check_point(y)
    L = problem.lipschitz_constant()
    s = problem.s
    fx, fy = (float(v) for v in problem.objective_batch(np.stack([x, y])))
    gx = problem.full_gradient(x)
    gy = problem.full_gradient(y)
    dxy = x - y
    dg = gx - gy
    linear = fx + float(gx @ (y - x))
    return [
        _le_report("smoothness-upper",
                   fy, linear + 0.5 * L * float(dxy @ dxy), tol, context),
        _le_report("smoothness-lower",
                   linear + 0.5 * float(dg @ dg) / L, fy, tol, context),
        _le_report("strong-convexity-lower",
                   linear + 0.5 * s * float(dxy @ dxy), fy, tol, context),
        _le_report("cocoercivity",
                   float(dg @ dg) / L, float(dg @ dxy), tol, context),
        _le_report("strong-monotonicity",
                   s * float(dxy @ dxy), float(dg @ dxy), tol, context),
    ]


def table_checks(problem, phi_table: np.ndarray, w: np.ndarray,
                 tol: float = 1e-9, context: str = "") -> list[CheckReport]:
    """Summed table forms bounding the T2 term: table-strong-convexity
    (-f(w) - T2 <= -(s/2n) sum ||w - phi_i||^2) and table-smoothness-lower
    (<= -(1/(2Ln)) sum ||f_i'(w) - f_i'(phi_i)||^2)."""
    _require_smooth(problem)
    phi_table = problem._check_table(phi_table)
    w = problem._check_point(w)
    L = problem.lipschitz_constant()
    s = problem.s
    n = problem.n
    values = problem.table_values(phi_table)
    grads = problem.table_gradients(phi_table)
    gaps = w[np.newaxis, :] - phi_table
    fw = _objective_at(problem, w)
    t2 = -float(values.mean()) \
        - float(np.einsum("ij,ij->i", grads, gaps).mean())
    diff = _gradients_at_point(problem, w) - grads
    return [
        _le_report("table-strong-convexity", -fw - t2,
                   -0.5 * s * float(np.einsum("ij,ij->", gaps, gaps)) / n,
                   tol, context),
        _le_report("table-smoothness-lower", -fw - t2,
                   -0.5 * float(np.einsum("ij,ij->", diff, diff)) / (L * n),
                   tol, context),
    ]


def convexity_suite(problem, draws: int = 100, tol: float = 1e-9,
                    alpha: float = 2.0, seed: int = 0,
                    reference: ReferenceSolution | None = None,
                    radius: float = 2.0) -> list[CheckReport]:
    """Pointwise checks of the smooth/strongly-convex inequalities the
    analysis consumes: per draw, the five pair_checks at a random (x, y)
    and the two table_checks at a random map-consistent table state, seven
    reports per draw.
    """
    _require_smooth(problem)
    if draws < 1:
        raise ValueError(f"draws must be >= 1, got {draws}")
    if reference is None:
        reference = reference_solve(problem)
    w_star = reference.w_star
    rng = np.random.default_rng([seed])
    reports: list[CheckReport] = []
    for t in range(draws):
        ctx = f"draw={t}"
        x = random_ball_point(rng, w_star, radius)
        y = random_ball_point(rng, w_star, radius)
        reports.extend(pair_checks(problem, x, y, tol, ctx))
        phi, w = random_audit_state(problem, w_star, alpha, rng, radius)
        reports.extend(table_checks(problem, phi, w, tol, ctx))
    return reports


def strong_lb_check(problem, i: int, x: np.ndarray, y: np.ndarray,
                    tol: float = 1e-9) -> CheckReport:
    """Component lower bound that mixes curvature s and smoothness L:

        f_i(x) >= f_i(y) + <f_i'(y), x - y>
                  + ||f_i'(x) - f_i'(y)||^2 / (2(L - s))
                  + s L ||y - x||^2 / (2(L - s))
                  + s <f_i'(x) - f_i'(y), y - x> / (L - s).

    Requires L > s (at L = s the objective is exactly quadratic and the
    bound degenerates); raising keeps that precondition loud.
    """
    _require_smooth(problem)
    L = problem.lipschitz_constant()
    s = problem.s
    if L <= s:
        raise ValueError(
            f"needs L > s, got L={L:g}, s={s:g}")
    x = problem._check_point(x)
    y = problem._check_point(y)
    fx = problem.component_value(i, x)
    fy = problem.component_value(i, y)
    gx = problem.component_gradient(i, x)
    gy = problem.component_gradient(i, y)
    dg = gx - gy
    dyx = y - x
    gap = L - s
    lhs = (fy + float(gy @ (x - y))
           + 0.5 * float(dg @ dg) / gap
           + 0.5 * s * L * float(dyx @ dyx) / gap
           + s * float(dg @ dyx) / gap)
    scaled = tol * (1.0 + abs(fx))
    return CheckReport(
        name="strong-smooth-lower", lhs=lhs, rhs=fx,
        satisfied=bool(lhs <= fx + scaled), slack=fx - lhs,
        context=f"i={i}")


def big_data_lb_check(problem, phi_table: np.ndarray, x: np.ndarray,
                      beta: float, tol: float = 1e-9) -> CheckReport:
    """Averaged lower bound on f(x) from a point table, with constants
    beta/(2 s n^2), beta L/(2 n^2), beta/n^2; valid under the big-data
    condition at beta (checked, raises otherwise):

        f(x) >= (1/n) sum_i [ f_i(phi_i) + <f_i'(phi_i), x - phi_i> ]
                + beta/(2 s n^2) sum_i ||f_i'(x) - f_i'(phi_i)||^2
                + beta L/(2 n^2) sum_i ||x - phi_i||^2
                + beta/n^2 sum_i <f_i'(x) - f_i'(phi_i), phi_i - x>.
    """
    _require_smooth(problem)
    _require_strongly_convex(problem)
    report = problem.big_data_check(beta)
    if not report.verdict:
        raise ValueError(
            f"big-data condition fails at beta={beta}: "
            f"n*s = {report.n * report.s:g} < beta*L = {beta * report.L:g}")
    phi_table = problem._check_table(phi_table)
    x = problem._check_point(x)
    n = problem.n
    L = problem.lipschitz_constant()
    s = problem.s
    values = problem.table_values(phi_table)
    grads = problem.table_gradients(phi_table)
    grads_at_x = _gradients_at_point(problem, x)
    dx = x[np.newaxis, :] - phi_table
    dg = grads_at_x - grads
    fx = _objective_at(problem, x)
    lhs = (float(values.mean())
           + float(np.einsum("ij,ij->i", grads, dx).mean())
           + 0.5 * beta * float(np.einsum("ij,ij->", dg, dg)) / (s * n**2)
           + 0.5 * beta * L * float(np.einsum("ij,ij->", dx, dx)) / n**2
           - beta * float(np.einsum("ij,ij->", dg, dx)) / n**2)
    scaled = tol * (1.0 + abs(fx))
    return CheckReport(
        name="averaged-strong-smooth-lower", lhs=lhs, rhs=fx,
        satisfied=bool(lhs <= fx + scaled), slack=fx - lhs,
        context=f"beta={beta:g} n={n}")


# ---------------------------------------------------------------------------
# rate certificates


def rate_bound(problem, alpha: float, phi0: np.ndarray, k: int) -> float:
    """Certified suboptimality of the table mean after k updates:

        (c/s) (1 - 1/(alpha n))^k ||f'(phi0)||^2,   c = 1 - 1/(2 alpha).

    At alpha = 2 this is (3/(4s)) (1 - 1/(2n))^k ||f'(phi0)||^2.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    _require_smooth(problem)
    _require_strongly_convex(problem)
    phi0 = problem._check_point(phi0)
    g = problem.full_gradient(phi0)
    c = 1.0 - 0.5 / alpha
    decay = (1.0 - 1.0 / (alpha * problem.n)) ** k
    return (c / problem.s) * decay * float(g @ g)


def _mean_curve(traces: list[list[TraceRecord]]):
    """Common epoch grid and per-epoch mean suboptimality across traces."""
    if not traces:
        raise ValueError("need at least one trace")
    epochs = [r.epoch for r in traces[0]]
    for t, trace in enumerate(traces):
        if [r.epoch for r in trace] != epochs:
            raise ValueError(f"trace {t} is on a different epoch grid")
        for r in trace:
            if not math.isfinite(r.suboptimality):
                raise ValueError(
                    "traces must carry a finite suboptimality column "
                    "(run against a reference solution)")
    means = [float(np.mean([trace[i].suboptimality for trace in traces]))
             for i in range(len(epochs))]
    return epochs, means


def rate_curve(traces: list[list[TraceRecord]], problem, alpha: float,
               phi0: np.ndarray):
    """Rows (k, mean suboptimality, certified bound) on the traces' grid.

    Traces must monitor the table mean of runs started with every row at
    phi0; epochs convert to update counts via k = epoch * n.
    """
    epochs, means = _mean_curve(traces)
    rows = []
    for epoch, mean in zip(epochs, means):
        k = round(epoch * problem.n)
        rows.append((k, mean, rate_bound(problem, alpha, phi0, k)))
    return rows


def rate_certificate(traces: list[list[TraceRecord]], problem, alpha: float,
                     phi0: np.ndarray, tol: float = 1e-9) -> CheckReport:
    """Seed-averaged measured curve lies under the certified bound at every
    recorded k."""
    rows = rate_curve(traces, problem, alpha, phi0)
    worst = min(rows, key=lambda row: row[2] - row[1])
    k, mean, bound = worst
    ok = all(m <= b + tol * (1.0 + abs(b)) for _, m, b in rows)
    return CheckReport(
        name="rate-bound", lhs=mean, rhs=bound, satisfied=bool(ok),
        slack=bound - mean,
        context=f"checkpoints={len(rows)} seeds={len(traces)} worst_k={k}")
