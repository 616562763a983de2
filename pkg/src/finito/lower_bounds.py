"""Hardness floor for incremental-gradient methods on separable problems.

The worst case is a finite sum whose component i is the only place any
information about coordinate i exists:

    f_i(w) = (n/2) (w_i - 1)^2 + (1/2) ||w||^2,

built from n scaled one-hot feature rows with squared loss and a unit
ridge, in dimension equal to n.  A method whose iterate lives in the span
of the gradients it has queried keeps w_i = 0 for every index i it has not
touched, and each such coordinate costs exactly 1/4 in suboptimality.
Under uniform sampling the number of untouched indices after k draws has
mean n (1 - 1/n)^k, so no such method beats that decay here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import FiniteSumProblem, ReferenceSolution, SQUARED
from .solvers import (finito_first_pass_step, finito_init,
                      sag_first_pass_step, sag_init)
from .theory import CheckReport


@dataclass
class CoupledWorstCase:
    """The hard instance with its canonical start and exact solution.

    f(w) = (1/2)||w - 1||^2 + (1/2)||w||^2: minimized at w = 1/2 with
    f* = n/4; the all-zeros start is n/4 suboptimal, 1/4 per coordinate.
    """

    n: int
    problem: FiniteSumProblem
    w_start: np.ndarray
    reference: ReferenceSolution


def make_worst_case(n: int) -> CoupledWorstCase:
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    root = float(np.sqrt(n))
    features = root * np.eye(n)
    targets = np.full(n, root)
    problem = FiniteSumProblem(features, targets, SQUARED, s=1.0)
    reference = ReferenceSolution(
        w_star=np.full(n, 0.5), f_star=n / 4.0,
        grad_norm_at_solution=0.0, method_tag="closed-form")
    return CoupledWorstCase(n=n, problem=problem, w_start=np.zeros(n),
                            reference=reference)


def expected_unseen(n: int, k: int) -> float:
    """E[# indices never drawn in k uniform draws] = n (1 - 1/n)^k."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if k < 0:
        raise ValueError(f"need k >= 0, got {k}")
    return n * (1.0 - 1.0 / n) ** k


def oracle_limited_suboptimality(n: int, seen_mask) -> float:
    """Suboptimality of the best iterate supported on the seen coordinates.

    With w = 1/2 on seen coordinates and 0 elsewhere, f(w) - f* is exactly
    v/4 where v counts the unseen flags; no point supported on the seen
    set does better.
    """
    mask = np.asarray(seen_mask, dtype=bool)
    if mask.shape != (n,):
        raise ValueError(f"seen_mask must have shape ({n},), got {mask.shape}")
    return float(n - np.count_nonzero(mask)) / 4.0


@dataclass
class UnseenTrace:
    """One trajectory's unseen count at draw k, with its martingale lift
    scaled = (1 - 1/n)^(-k) * unseen (constant-mean across k)."""

    k: int
    unseen: int
    scaled: float
    seed: int


def unseen_trajectory(n: int, k_max: int, seed: int = 0) -> list[UnseenTrace]:
    """Exact unseen counts along a single uniform draw sequence."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if k_max < 0:
        raise ValueError(f"need k_max >= 0, got {k_max}")
    rng = np.random.default_rng([seed])
    seen = np.zeros(n, dtype=bool)
    out = [UnseenTrace(k=0, unseen=n, scaled=float(n), seed=seed)]
    lift = 1.0
    base = 1.0 / (1.0 - 1.0 / n) if n > 1 else np.inf
    for k in range(1, k_max + 1):
        seen[int(rng.integers(n))] = True
        v = int(n - np.count_nonzero(seen))
        lift = lift * base if n > 1 else (np.inf if v else 0.0)
        out.append(UnseenTrace(k=k, unseen=v, scaled=v * lift, seed=seed))
    return out


@dataclass
class UnseenPoint:
    k: int
    expected: float
    mc_mean: float
    mc_stderr: float
    martingale_mean: float
    martingale_stderr: float


@dataclass
class UnseenSummary:
    n: int
    trials: int
    seed: int
    points: list[UnseenPoint]


def simulate_unseen(n: int, k, trials: int = 100_000, seed: int = 0,
                    chunk: int = 16_384) -> UnseenSummary:
    """Monte-Carlo check of the unseen-count law under uniform sampling.

    `k` may be a single draw count or a list; all requested counts share
    trajectories (one length-max(k) draw sequence per trial), so the
    rescaled counts (1 - 1/n)^(-k) v_k are one martingale observed at
    several times and every martingale_mean should sit near n within a few
    standard errors.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    ks = sorted({int(k)} if isinstance(k, (int, np.integer))
                else {int(x) for x in k})
    if not ks:
        raise ValueError("need at least one k")
    if ks[0] < 0:
        raise ValueError(f"need k >= 0, got {ks[0]}")
    if trials < 2:
        raise ValueError(f"need trials >= 2, got {trials}")
    k_max = ks[-1]
    rng = np.random.default_rng([seed])
    sums = dict.fromkeys(ks, 0.0)
    sq_sums = dict.fromkeys(ks, 0.0)
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        draws = rng.integers(0, n, size=(m, k_max)) if k_max else \
            np.empty((m, 0), dtype=np.int64)
        for kk in ks:
            if kk == 0:
                v = np.full(m, float(n))
            else:
                prefix = np.sort(draws[:, :kk], axis=1)
                distinct = 1 + np.count_nonzero(np.diff(prefix, axis=1), axis=1)
                v = (n - distinct).astype(float)
            sums[kk] += float(v.sum())
            sq_sums[kk] += float((v * v).sum())
        done += m
    points = []
    for kk in ks:
        mean = sums[kk] / trials
        var = max(0.0, (sq_sums[kk] - trials * mean * mean) / (trials - 1))
        stderr = float(np.sqrt(var / trials))
        lift = (1.0 - 1.0 / n) ** (-kk) if n > 1 else (np.inf if kk else 1.0)
        points.append(UnseenPoint(
            k=kk, expected=expected_unseen(n, kk), mc_mean=mean,
            mc_stderr=stderr, martingale_mean=mean * lift,
            martingale_stderr=stderr * lift))
    return UnseenSummary(n=n, trials=trials, seed=seed, points=points)


def first_pass_floor_trace(n: int, solver: str = "finito",
                           alpha: float = 2.0):
    """Drive a solver through its first pass on the hard instance and
    tabulate (k, floor, measured suboptimality).

    The first pass admits indices in order, so after k steps the iterate
    is supported on coordinates 0..k-1 and can never dip under the floor
    (n - k)/4; equality holds at k = 0.
    """
    case = make_worst_case(n)
    problem = case.problem
    if solver == "finito":
        state = finito_init(problem, alpha, w0=case.w_start, first_pass=True)
        step_fn = finito_first_pass_step
    elif solver == "sag":
        state = sag_init(problem, w0=case.w_start, first_pass=True)
        step_fn = sag_first_pass_step
    else:
        raise ValueError(f"unknown solver {solver!r} (use finito or sag)")

    def measure(k: int):
        f_w = float(problem.objective_batch(state.w[np.newaxis, :])[0])
        floor = oracle_limited_suboptimality(n, np.arange(n) < k)
        return (k, floor, f_w - case.reference.f_star)

    rows = [measure(0)]
    for k in range(n):
        step_fn(state, problem, k)
        rows.append(measure(k + 1))
    return rows


def floor_check(n: int, solver: str = "finito", alpha: float = 2.0,
                tol: float = 1e-9) -> CheckReport:
    """Every first-pass iterate respects the oracle-access floor."""
    rows = first_pass_floor_trace(n, solver, alpha)
    worst = min(rows, key=lambda row: row[2] - row[1])
    k, floor, measured = worst
    ok = all(m >= fl - tol * (1.0 + abs(fl)) for _, fl, m in rows)
    return CheckReport(
        name="oracle-floor", lhs=floor, rhs=measured,
        satisfied=bool(ok), slack=measured - floor,
        context=f"solver={solver} n={n} worst_k={k}")
