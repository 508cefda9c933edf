"""Command-line entry point: solve, scan, oracle, verify, generate.

Exit codes: 0 success, 2 non-convergence or failed verification, 3 bad input,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings

import numpy as np

from .deflation import solve_excited
from .errors import InputError, IoError, NumericalError, ParseError
from .io import KINDS, ProblemFileSet, RunConfig, gen_random, write_matrix
from .iteration import EigenProblem
from .linalg import inner
from .oracle import eig_all_small, eigvec, residual_norm
from .perturbation import solve_real_ground
from .resolvent import apply_green_v, make_resolvent
from .search import scan_magnitude, scan_phase, solve_ground

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_INPUT = 3
EXIT_NUMERICAL = 4

SCAN_HEADER = ["abs_eps", "phase_eps", "abs_lambda", "phase_lambda", "inner_iters", "converged"]
ORACLE_HEADER = ["eps_re", "eps_im", "residual"]

# relative agreement between the recomputed lambda and lambda_ex that verify demands
LAMBDA_RTOL = 1e-6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _problem_args(p):
    p.add_argument("--t", required=True, help="Matrix Market file for T")
    p.add_argument("--v", required=True, help="Matrix Market file for V")
    p.add_argument("--lambda", dest="lambda_ex", type=float, required=True,
                   help="target coupling lambda_ex > 0")
    p.add_argument("--r", default="ones", help="reference vector: ones or seeded(<int>)")


def _config_args(p):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one configuration entry (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="waxman", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="find the ground state (or more) of T - lambda V")
    _problem_args(p)
    _config_args(p)
    p.add_argument("--u0", default="seeded(0)", help="start vector: ones or seeded(<int>)")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--perturb", action="store_true",
                      help="solve with V + i delta I and shift the eigenvalue back")
    mode.add_argument("--excited", type=int, metavar="K", help="also find K deflated states")
    p.add_argument("--out", required=True, help="JSON report path")

    for name, fixed, swept in (("scan-magnitude", "phase", "magnitude"),
                               ("scan-phase", "mag", "phase")):
        p = sub.add_parser(name, help=f"sample lambda along a {swept} sweep")
        _problem_args(p)
        _config_args(p)
        p.add_argument("--u0", default="seeded(0)")
        p.add_argument(f"--{fixed}", type=float, required=True)
        p.add_argument("--from", dest="lo", type=float, required=True)
        p.add_argument("--to", dest="hi", type=float, required=True)
        p.add_argument("--step", type=float, required=True)
        p.add_argument("--out", required=True, help="CSV path")

    p = sub.add_parser("oracle", help="all eigenvalues of T - lambda V by brute force")
    _problem_args(p)
    _config_args(p)
    p.add_argument("--out", required=True, help="CSV path")

    p = sub.add_parser("verify", help="recheck a report against T and V")
    p.add_argument("--report", required=True)
    _problem_args(p)

    p = sub.add_parser("generate", help="write a seeded random (T, V) pair")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--kind", choices=KINDS, default="complex-general")
    p.add_argument("--out-t", required=True)
    p.add_argument("--out-v", required=True)
    return parser


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    for item in args.set:
        key, sep, raw = item.partition("=")
        section, dot, name = key.partition(".")
        if not (sep and dot):
            raise InputError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        cfg = cfg.override(section, name, value)
    return cfg


def _load_problem(args, u0_spec="seeded(0)"):
    files = ProblemFileSet(args.t, args.v, args.lambda_ex, args.r, u0_spec)
    return files.load()


def _pair(z):
    return [float(z.real), float(z.imag)]


def report_to_dict(rep, r_spec="ones") -> dict:
    d = {
        "epsilon_re": float(rep.epsilon.real),
        "epsilon_im": float(rep.epsilon.imag),
        "lambda_re": float(rep.lambda_achieved.real),
        "lambda_im": float(rep.lambda_achieved.imag),
        "residual": float(rep.residual),
        "outer_cycles": int(rep.outer_cycles),
        "converged": bool(rep.converged),
        "eigenvector": [_pair(z) for z in rep.u],
        "lambda_ex": float(rep.lambda_ex),
        "reference": r_spec,
        "tol_mag": float(rep.tol_mag),
        "tol_phase": float(rep.tol_phase),
        "residual_tol": float(rep.residual_tol),
        "lambda_rtol": LAMBDA_RTOL,
        "inner_iterations": int(rep.inner_iterations),
    }
    if rep.perturbed_epsilon is not None:
        d["perturbed_epsilon_re"] = float(rep.perturbed_epsilon.real)
        d["perturbed_epsilon_im"] = float(rep.perturbed_epsilon.imag)
    if rep.warnings:
        d["warnings"] = list(rep.warnings)
    return d


def _write_json(path, doc):
    text = json.dumps(doc, indent=2, allow_nan=True) + "\n"
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _write_csv(path, header, rows):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _cmd_solve(args) -> int:
    cfg = _load_config(args)
    problem, u0 = _load_problem(args, args.u0)
    if args.excited is not None:
        reports = solve_excited(problem, args.excited, cfg.search, cfg.inner)
        _write_json(args.out, {"states": [report_to_dict(r, args.r) for r in reports]})
        ok = len(reports) == args.excited + 1 and all(r.converged for r in reports)
    else:
        if args.perturb:
            rep = solve_real_ground(problem, cfg.perturbation, cfg.search, cfg.inner, u0=u0)
        else:
            rep = solve_ground(problem, cfg.search, cfg.inner, u0=u0)
        _write_json(args.out, report_to_dict(rep, args.r))
        ok = rep.converged
        for w in rep.warnings:
            print(f"warning: {w}", file=sys.stderr)
    if not ok:
        print("search did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _scan_rows(curve):
    rows = []
    for s in curve:
        rows.append([repr(float(s.eps.magnitude)), repr(float(s.eps.phase)),
                     repr(float(s.lam.magnitude)), repr(float(s.lam.phase)),
                     s.inner_iterations, "true" if s.converged else "false"])
    return rows


def _cmd_scan(args) -> int:
    cfg = _load_config(args)
    problem, u0 = _load_problem(args, args.u0)
    if args.command == "scan-magnitude":
        curve = scan_magnitude(problem, args.phase, (args.lo, args.hi), args.step, cfg.inner,
                               u0=u0, singular_nudge=cfg.search.singular_nudge)
    else:
        curve = scan_phase(problem, args.mag, (args.lo, args.hi), args.step, cfg.inner,
                           u0=u0, singular_nudge=cfg.search.singular_nudge)
    _write_csv(args.out, SCAN_HEADER, _scan_rows(curve))
    return EXIT_OK


def _cmd_oracle(args) -> int:
    cfg = _load_config(args)
    problem, _ = _load_problem(args)
    H = problem.hamiltonian()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        roots = eig_all_small(H, cfg.oracle)
    rows = []
    for eps in roots:
        _, res = eigvec(H, eps)
        rows.append([repr(eps.real), repr(eps.imag), repr(float(res))])
    _write_csv(args.out, ORACLE_HEADER, rows)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return EXIT_NOT_CONVERGED if len(roots) < problem.n else EXIT_OK


def check_state(problem: EigenProblem, state: dict):
    """Recompute the residual and lambda = <r|u> / <r|G V u> for one report entry.

    Returns ``(ok, residual, lambda_recomputed)``.
    """
    try:
        eps = complex(state["epsilon_re"], state["epsilon_im"])
        u = np.array([complex(re, im) for re, im in state["eigenvector"]], dtype=np.complex128)
        residual_tol = float(state["residual_tol"])
        lambda_rtol = float(state.get("lambda_rtol", LAMBDA_RTOL))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed report entry: {exc}") from None
    if u.shape != (problem.n,):
        raise InputError(f"report eigenvector has length {u.size}, problem is {problem.n}")
    if not (np.all(np.isfinite(u)) and math.isfinite(eps.real) and math.isfinite(eps.imag)):
        return False, math.inf, complex(math.nan, math.nan)
    residual = residual_norm(problem.T, problem.V, problem.lambda_ex, eps, u)
    w = apply_green_v(make_resolvent(problem.T, eps), problem.V, u)
    lam = inner(problem.r, u) / inner(problem.r, w)
    ok = (residual <= residual_tol
          and abs(lam - problem.lambda_ex) <= lambda_rtol * problem.lambda_ex)
    return ok, residual, lam


def _cmd_verify(args) -> int:
    try:
        with open(args.report, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {args.report}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON report: {exc.msg}", exc.lineno) from None
    states = doc["states"] if isinstance(doc, dict) and "states" in doc else [doc]
    if not states or not all(isinstance(s, dict) for s in states):
        raise InputError("report holds no states")
    r_spec = states[0].get("reference", args.r)
    args.r = r_spec
    problem, _ = _load_problem(args)
    all_ok = True
    for i, state in enumerate(states):
        ok, residual, lam = check_state(problem, state)
        print(f"state {i}: residual {residual:.3e} lambda {lam.real:.12g}{lam.imag:+.3e}i "
              f"{'ok' if ok else 'FAILED'}", file=sys.stderr)
        all_ok &= ok
    return EXIT_OK if all_ok else EXIT_NOT_CONVERGED


def _cmd_generate(args) -> int:
    T, V = gen_random(args.n, args.seed, args.kind)
    write_matrix(args.out_t, T)
    write_matrix(args.out_v, V)
    return EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "scan-magnitude": _cmd_scan,
    "scan-phase": _cmd_scan,
    "oracle": _cmd_oracle,
    "verify": _cmd_verify,
    "generate": _cmd_generate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
