"""Command-line front end: run solvers, compare configurations, verify the
convergence analysis, and reproduce the sampling lower bound.

Exit codes: 0 success, 1 usage or input errors, 2 divergence, 3 one or more
verification checks unsatisfied.  Every command is deterministic given its
flags; the wall_ms trace column is the single exception.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .data_io import (SynthSpec, checkpoint_load, checkpoint_save,
                      parse_libsvm, synth_problem, write_trace)
from .lower_bounds import floor_check, simulate_unseen
from .problems import (FiniteSumProblem, LOGISTIC, LOSS_KINDS,
                       ReferenceSolution)
from .samplers import (IndexSampler, SAMPLING_NAMES, SamplingScheme,
                       UNIFORM)
from .solvers import (DivergenceError, SOLVER_TAGS, SolverConfig,
                      finito_init, finito_step, reference_solve, run,
                      run_with_state)
from .theory import (CheckReport, big_data_lb_check, bound_gap_check,
                     convexity_suite, expected_decrease_check,
                     expected_step_gap, expected_term_shifts,
                     initial_lyapunov, lyapunov_evaluate, random_audit_state,
                     random_ball_point, rate_certificate, rate_curve,
                     strong_lb_check, t3_shift_closed_form,
                     t4_shift_closed_form, table_mean_descent_check,
                     update_displacement_gap, variance_decomposition_gap)

SUITES = ("inequalities", "lyapunov", "rate", "lowerbound", "all")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return repr(float(x))


def _sink(path: str):
    return sys.stdout if path == "-" else path


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="ascii")


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ValueError(f"bad integer list {text!r}") from None


def _parse_seeds(text: str) -> list[int]:
    """'11' means seeds 0..10; '3,5,7' is an explicit list."""
    if "," in text:
        return _parse_int_list(text)
    return list(range(int(text)))


_SYNTH_KEYS = {
    "n": ("n", int), "d": ("d", int), "beta": ("target_beta", float),
    "loss": ("loss", str), "s": ("s", float), "noise": ("noise", float),
    "seed": ("seed", int), "l1": ("l1_weight", float),
}


def _parse_synth_spec(text: str, l1_default: float) -> SynthSpec:
    """'n=200,d=10,beta=2' with optional loss=, s=, noise=, seed=, l1=."""
    fields: dict = {"l1_weight": l1_default}
    for token in text.split(","):
        key, eq, val = token.partition("=")
        key = key.strip()
        if not eq or key not in _SYNTH_KEYS:
            raise ValueError(f"bad synth field {token!r} "
                             f"(known keys: {', '.join(_SYNTH_KEYS)})")
        name, cast = _SYNTH_KEYS[key]
        fields[name] = cast(val.strip())
    if "n" not in fields or "d" not in fields:
        raise ValueError("synth spec needs at least n= and d=")
    return SynthSpec(**fields)


def _build_problem(args):
    """(problem, reference-or-None) from --data or --synth flags."""
    if args.data is not None:
        features, targets = parse_libsvm(Path(args.data))
        problem = FiniteSumProblem(features, targets, args.loss, s=args.s,
                                   l1_weight=args.l1)
        return problem, None
    spec = _parse_synth_spec(args.synth, args.l1)
    return synth_problem(spec)


def _resolve_reference(fstar: str, problem, synth_ref):
    if fstar == "none":
        return None
    if fstar == "auto":
        return synth_ref if synth_ref is not None else reference_solve(problem)
    try:
        value = float(fstar)
    except ValueError:
        value = float(Path(fstar).read_text(encoding="ascii").strip())
    return ReferenceSolution(w_star=np.full(problem.d, np.nan), f_star=value,
                             grad_norm_at_solution=float("nan"),
                             method_tag="external")


def _add_problem_flags(sub) -> None:
    src = sub.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="LIBSVM text file")
    src.add_argument("--synth", help="synthetic spec, e.g. n=200,d=10,beta=2")
    sub.add_argument("--loss", choices=LOSS_KINDS, default=LOGISTIC,
                     help="loss for --data problems (default logistic)")
    sub.add_argument("--s", type=float, default=0.01,
                     help="strong convexity weight for --data (default 0.01)")
    sub.add_argument("--l1", type=float, default=0.0,
                     help="l1 weight (default 0)")
    sub.add_argument("--fstar", default="auto",
                     help="auto | none | <value> | <path to value> "
                          "(default auto: full-gradient solve to 1e-12)")
    sub.add_argument("--out", default="-",
                     help="output CSV path, - for stdout (default -)")


# ---------------------------------------------------------------------------
# run


def cmd_run(args) -> int:
    problem, synth_ref = _build_problem(args)
    reference = _resolve_reference(args.fstar, problem, synth_ref)
    config = SolverConfig(
        solver=args.solver, alpha=args.alpha, step=args.step,
        sag_practical=args.sag_practical, audit=args.audit,
        first_pass=not args.no_first_pass, monitor=args.monitor,
        w0=np.zeros(problem.d))
    scheme = SamplingScheme.from_name(args.sampling, args.seed)
    resume = None
    if args.resume is not None:
        resume = checkpoint_load(args.resume, problem)
    try:
        records, state, sampler = run_with_state(
            problem, config, scheme, args.epochs, reference=reference,
            record_every=args.record_every, resume=resume)
    except DivergenceError as err:
        write_trace(err.records or [], _sink(args.out))
        print(f"diverged: {err}", file=sys.stderr)
        return 2
    write_trace(records, _sink(args.out))
    if args.save_state is not None:
        checkpoint_save(state, args.save_state, sampler)
    return 0


# ---------------------------------------------------------------------------
# compare


def _parse_config_token(token: str, default_alpha: float):
    """'solver[:sampling[:key=val]...]'; keys alpha and step."""
    parts = token.split(":")
    solver = parts[0]
    if solver not in SOLVER_TAGS:
        raise ValueError(f"unknown solver {solver!r} in config {token!r}")
    sampling = parts[1] if len(parts) > 1 and parts[1] else "uniform"
    if sampling not in SAMPLING_NAMES:
        raise ValueError(f"unknown sampling {sampling!r} in config {token!r}")
    alpha, step = default_alpha, None
    for extra in parts[2:]:
        key, eq, val = extra.partition("=")
        if not eq:
            raise ValueError(f"bad override {extra!r} in config {token!r}")
        if key == "alpha":
            alpha = float(val)
        elif key == "step":
            step = float(val)
        else:
            raise ValueError(f"unknown override key {key!r} in {token!r}")
    label = token.replace(":", "-")
    return label, solver, sampling, alpha, step


def cmd_compare(args) -> int:
    problem, synth_ref = _build_problem(args)
    reference = _resolve_reference(args.fstar, problem, synth_ref)
    configs = [_parse_config_token(tok, args.alpha)
               for tok in args.configs.split(",") if tok]
    if not configs:
        raise ValueError("no configs given")
    seeds = _parse_seeds(args.seeds)
    if not seeds:
        raise ValueError("no seeds given")
    grid = list(range(args.epochs + 1))
    columns: dict[str, np.ndarray] = {}
    if args.out_dir is not None:
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    for label, solver, sampling, alpha, step in configs:
        per_seed = np.full((len(seeds), len(grid)), np.inf)
        for row, seed in enumerate(seeds):
            config = SolverConfig(solver=solver, alpha=alpha, step=step,
                                  w0=np.zeros(problem.d))
            scheme = SamplingScheme.from_name(sampling, seed)
            try:
                records = run(problem, config, scheme, args.epochs,
                              reference=reference)
            except DivergenceError as err:
                records = err.records or []
                print(f"{label} seed {seed} diverged: {err}", file=sys.stderr)
            by_epoch = {r.epoch: r.suboptimality for r in records}
            per_seed[row] = [by_epoch.get(float(e), np.inf) for e in grid]
            if args.out_dir is not None:
                write_trace(records,
                            Path(args.out_dir) / f"{label}-seed{seed}.csv")
        columns[label] = np.median(per_seed, axis=0)
    lines = ["epoch," + ",".join(label for label, *_ in configs)]
    for i, e in enumerate(grid):
        cells = ",".join(_fmt(columns[label][i]) for label, *_ in configs)
        lines.append(f"{_fmt(float(e))},{cells}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# verify


def _eq_report(name: str, lhs: float, rhs: float, tol: float, scale: float,
               context: str = "") -> CheckReport:
    bound = tol * (1.0 + abs(scale))
    return CheckReport(name=name, lhs=lhs, rhs=rhs,
                       satisfied=bool(abs(rhs - lhs) <= bound),
                       slack=rhs - lhs, context=context)


def _suite_inequalities(n: int, d: int, beta: float, draws: int, seed: int,
                        alpha: float) -> list[CheckReport]:
    problem, reference = synth_problem(
        SynthSpec(n=n, d=d, loss=LOGISTIC, target_beta=beta, seed=seed))
    reports = convexity_suite(problem, draws=draws, alpha=alpha, seed=seed,
                              reference=reference)
    rng = np.random.default_rng([seed, 1])
    for t in range(draws):
        i = int(rng.integers(problem.n))
        x = random_ball_point(rng, reference.w_star, 2.0)
        y = random_ball_point(rng, reference.w_star, 2.0)
        report = strong_lb_check(problem, i, x, y)
        report.context = f"draw={t} {report.context}"
        reports.append(report)
    for t in range(draws):
        phi, _ = random_audit_state(problem, reference.w_star, alpha, rng)
        x = random_ball_point(rng, reference.w_star, 2.0)
        report = big_data_lb_check(problem, phi, x, beta)
        report.context = f"draw={t} {report.context}"
        reports.append(report)
    return reports


def _suite_lyapunov(n: int, d: int, beta: float, states: int, seed: int,
                    alpha: float) -> list[CheckReport]:
    problem, reference = synth_problem(
        SynthSpec(n=n, d=d, loss=LOGISTIC, target_beta=beta, seed=seed))
    w0 = np.zeros(d)
    state = finito_init(problem, alpha, w0=w0, audit=True)
    sampler = IndexSampler(SamplingScheme(UNIFORM, seed), problem.n)
    terms0 = lyapunov_evaluate(problem, state.phi_table, state.w)
    closed = initial_lyapunov(problem, w0, alpha)
    reports = [_eq_report("initial-potential", terms0.total, closed,
                          1e-12, closed, "all rows at w0")]
    for t in range(states):
        phi = state.phi_table.copy()
        w = state.w.copy()
        ctx = f"step={t}"
        for report in (
            expected_decrease_check(problem, phi, w, alpha, beta),
            bound_gap_check(problem, phi, w, alpha, reference),
            table_mean_descent_check(problem, phi, w),
        ):
            report.context = f"{ctx} {report.context}"
            reports.append(report)
        scale = float(np.linalg.norm(w))
        reports.append(_eq_report(
            "expected-step-identity",
            expected_step_gap(problem, phi, w, alpha), 0.0, 1e-12, scale, ctx))
        reports.append(_eq_report(
            "update-displacement-identity",
            update_displacement_gap(problem, phi, w, alpha), 0.0, 1e-12,
            scale, ctx))
        reports.append(_eq_report(
            "variance-decomposition",
            variance_decomposition_gap(phi, w), 0.0, 1e-12,
            float(np.einsum("ij,ij->", phi, phi)), ctx))
        shifts = expected_term_shifts(problem, phi, w, alpha)
        total = lyapunov_evaluate(problem, phi, w).total
        reports.append(_eq_report(
            "t3-shift-closed-form", shifts.t3,
            t3_shift_closed_form(problem, phi, w, alpha), 1e-12, total, ctx))
        reports.append(_eq_report(
            "t4-shift-closed-form", shifts.t4,
            t4_shift_closed_form(problem, phi, w), 1e-12, total, ctx))
        finito_step(state, problem, sampler.next_index())
    return reports


def _suite_rate(n: int, seed: int, alpha: float, seeds: int = 5,
                epochs: int = 10) -> list[CheckReport]:
    problem, reference = synth_problem(
        SynthSpec(n=n, d=10, loss=LOGISTIC, target_beta=2.0, seed=seed))
    w0 = np.zeros(problem.d)
    config = SolverConfig(solver="finito", alpha=alpha, audit=True,
                          first_pass=False, monitor="table-mean", w0=w0)
    traces = [run(problem, config, SamplingScheme(UNIFORM, seed=s), epochs,
                  reference=reference) for s in range(seeds)]
    rows = rate_curve(traces, problem, alpha, w0)
    reports = []
    for k, mean, bound in rows:
        reports.append(CheckReport(
            name=f"rate-k-{k}", lhs=mean, rhs=bound,
            satisfied=bool(mean <= bound + 1e-9 * (1.0 + abs(bound))),
            slack=bound - mean, context=f"seeds={seeds}"))
    reports.append(rate_certificate(traces, problem, alpha, w0))
    return reports


def _suite_lowerbound(seed: int, n: int = 10,
                      trials: int = 100_000) -> list[CheckReport]:
    summary = simulate_unseen(n, [1, 5, 10, 20], trials=trials, seed=seed)
    reports = []
    for p in summary.points:
        reports.append(CheckReport(
            name=f"unseen-mean-k{p.k}",
            lhs=abs(p.mc_mean - p.expected), rhs=4.0 * p.mc_stderr,
            satisfied=bool(abs(p.mc_mean - p.expected) <= 4.0 * p.mc_stderr),
            slack=4.0 * p.mc_stderr - abs(p.mc_mean - p.expected),
            context=f"trials={summary.trials}"))
        reports.append(CheckReport(
            name=f"martingale-mean-k{p.k}",
            lhs=abs(p.martingale_mean - n), rhs=4.0 * p.martingale_stderr,
            satisfied=bool(abs(p.martingale_mean - n)
                           <= 4.0 * p.martingale_stderr),
            slack=4.0 * p.martingale_stderr - abs(p.martingale_mean - n),
            context=f"trials={summary.trials}"))
    reports.append(floor_check(n, "finito"))
    reports.append(floor_check(n, "sag"))
    return reports


def _reports_csv(reports: list[CheckReport]) -> str:
    lines = ["name,lhs,rhs,slack,satisfied"]
    for r in reports:
        flag = "true" if r.satisfied else "false"
        lines.append(f"{r.name},{_fmt(r.lhs)},{_fmt(r.rhs)},"
                     f"{_fmt(r.slack)},{flag}")
    return "\n".join(lines) + "\n"


def cmd_verify(args) -> int:
    def pick(value, fallback):
        return fallback if value is None else value

    seed = pick(args.seed, 0)
    alpha = args.alpha
    beta = pick(args.beta, 2.0)
    reports: list[CheckReport] = []
    if args.suite in ("inequalities", "all"):
        reports += _suite_inequalities(
            n=pick(args.n, 40), d=pick(args.d, 5), beta=beta,
            draws=pick(args.draws, 100), seed=seed, alpha=alpha)
    if args.suite in ("lyapunov", "all"):
        reports += _suite_lyapunov(
            n=pick(args.n, 40), d=pick(args.d, 5), beta=beta,
            states=pick(args.draws, 200), seed=seed, alpha=alpha)
    if args.suite in ("rate", "all"):
        reports += _suite_rate(n=pick(args.n, 200), seed=seed, alpha=alpha)
    if args.suite in ("lowerbound", "all"):
        reports += _suite_lowerbound(seed=seed, n=pick(args.n, 10))
    _write_text(args.out, _reports_csv(reports))
    return 0 if all(r.satisfied for r in reports) else 3


# ---------------------------------------------------------------------------
# lowerbound


def cmd_lowerbound(args) -> int:
    ks = _parse_int_list(args.k_list)
    summary = simulate_unseen(args.n, ks, trials=args.trials, seed=args.seed)
    lines = ["k,formula,mc_mean,mc_stderr,martingale_mean"]
    for p in summary.points:
        lines.append(f"{p.k},{_fmt(p.expected)},{_fmt(p.mc_mean)},"
                     f"{_fmt(p.mc_stderr)},{_fmt(p.martingale_mean)}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# wiring


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="finito",
                     description="incremental gradient solvers and the "
                                 "numerical checks behind their guarantees")
    subs = parser.add_subparsers(dest="command", required=True,
                                 parser_class=_Parser)

    p_run = subs.add_parser("run", help="run one solver, write a trace CSV")
    _add_problem_flags(p_run)
    p_run.add_argument("--solver", choices=SOLVER_TAGS, default="finito")
    p_run.add_argument("--alpha", type=float, default=2.0)
    p_run.add_argument("--step", type=float, default=None,
                       help="sag / full-gradient step override")
    p_run.add_argument("--sag-practical", action="store_true",
                       help="sag step 1/(Ln) instead of 1/(16Ln)")
    p_run.add_argument("--sampling", choices=SAMPLING_NAMES,
                       default="uniform")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--epochs", type=int, default=10)
    p_run.add_argument("--record-every", type=float, default=1.0,
                       help="record interval in passes (default 1)")
    p_run.add_argument("--audit", action="store_true",
                       help="keep explicit phi / gradient tables")
    p_run.add_argument("--monitor", choices=("iterate", "table-mean"),
                       default="iterate")
    p_run.add_argument("--no-first-pass", action="store_true",
                       help="initialize every table row at w0 instead of "
                            "running the first-pass rule")
    p_run.add_argument("--resume", default=None, help="checkpoint to resume")
    p_run.add_argument("--save-state", default=None,
                       help="write a checkpoint at run end")
    p_run.set_defaults(func=cmd_run)

    p_cmp = subs.add_parser("compare",
                            help="median suboptimality per epoch across "
                                 "configs and seeds")
    _add_problem_flags(p_cmp)
    p_cmp.add_argument("--configs", required=True,
                       help="comma list of solver[:sampling[:key=val]...], "
                            "e.g. finito:uniform,finito:permuted")
    p_cmp.add_argument("--seeds", default="11",
                       help="seed count (0..n-1) or comma list (default 11)")
    p_cmp.add_argument("--epochs", type=int, default=10)
    p_cmp.add_argument("--alpha", type=float, default=2.0)
    p_cmp.add_argument("--out-dir", default=None,
                       help="also write one trace CSV per (config, seed)")
    p_cmp.set_defaults(func=cmd_compare)

    p_ver = subs.add_parser("verify",
                            help="run analysis check suites, emit CheckReport "
                                 "CSV, exit 3 on any violation")
    p_ver.add_argument("--suite", choices=SUITES, required=True)
    p_ver.add_argument("--n", type=int, default=None)
    p_ver.add_argument("--d", type=int, default=None)
    p_ver.add_argument("--beta", type=float, default=None)
    p_ver.add_argument("--draws", type=int, default=None)
    p_ver.add_argument("--seed", type=int, default=None)
    p_ver.add_argument("--alpha", type=float, default=2.0)
    p_ver.add_argument("--out", default="-")
    p_ver.set_defaults(func=cmd_verify)

    p_low = subs.add_parser("lowerbound",
                            help="Monte-Carlo unseen-count law on the "
                                 "worst-case problem")
    p_low.add_argument("--n", type=int, default=10)
    p_low.add_argument("--k-list", default="1,5,10,20")
    p_low.add_argument("--trials", type=int, default=1_000_000)
    p_low.add_argument("--seed", type=int, default=0)
    p_low.add_argument("--out", default="-")
    p_low.set_defaults(func=cmd_lowerbound)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as err:
        print(f"diverged: {err}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def console_entry() -> None:
    sys.exit(main())
