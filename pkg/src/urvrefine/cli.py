"""Command line interface: ``urvrefine {refine,check,svd,rrurv,verify}``.

Exit codes: 0 success/converged, 1 input or usage error, 2 iteration limit
reached, 3 a monitor check failed (``verify``), 64 unknown flag.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .diagnostics import run_monitors
from .io import MatrixParseError, fmt15, fmt17, parse_matrix, write_trace
from .matrix import MatrixError, UpperTriangular
from .oracle import check_preconditions, svd
from .refinement import RefineOptions, rank_revealing_urv, refine

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_MAX_ITER = 2
EXIT_CHECK_FAILED = 3
EXIT_UNKNOWN_FLAG = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _input_args(p):
    p.add_argument("--input", "-i", required=True, metavar="PATH",
                   help="CSV or MatrixMarket array file")
    p.add_argument("--format", choices=("auto", "matrixmarket", "csv"), default="auto")
    p.add_argument("--json", action="store_true", help="machine-readable output")


def _refine_args(p):
    p.add_argument("--tol-h", type=float, default=1e-14,
                   help="stop when ||h|| <= TOL_H * ||R0||_F (0 disables)")
    p.add_argument("--tol-e", type=float, default=1e-15,
                   help="stop when the corner moves by <= TOL_E * e (0 disables)")
    p.add_argument("--max-iter", type=int, default=1000, help="maximum double sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="urvrefine", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("refine", help="run URV refinement on an upper triangular matrix")
    _input_args(p)
    _refine_args(p)
    p.add_argument("--trace", metavar="PATH", help="write one JSON line per half-sweep")
    p.add_argument("--rho", action="store_true", help="record rho per half-sweep (costly)")
    p.add_argument("--no-factors", action="store_true",
                   help="do not accumulate the orthogonal factors")

    p = sub.add_parser("check", help="report which convergence hypotheses hold")
    _input_args(p)

    p = sub.add_parser("svd", help="oracle singular value decomposition")
    _input_args(p)
    p.add_argument("--vectors", action="store_true", help="also print U and V")

    p = sub.add_parser("rrurv", help="rank-revealing URV by refine-and-deflate")
    _input_args(p)
    _refine_args(p)
    p.add_argument("--rank-tol", type=float, default=1e-8,
                   help="relative threshold against max |diag(R0)|")

    p = sub.add_parser("verify", help="refine and evaluate every invariant monitor")
    _input_args(p)
    _refine_args(p)
    return parser


def _options(args, **extra) -> RefineOptions:
    return RefineOptions(tol_h=args.tol_h, tol_e_stagnation=args.tol_e,
                         max_double_sweeps=args.max_iter, **extra)


def _load(args, triangular: bool):
    m = parse_matrix(args.input, args.format, require_square=True)
    return UpperTriangular(m) if triangular else m


def _emit(obj):
    print(json.dumps(obj, indent=2))


def _cmd_refine(args) -> int:
    R0 = _load(args, triangular=True)
    opts = _options(args, record_rho=args.rho, accumulate_factors=not args.no_factors)
    rep = refine(R0, opts)
    if args.trace:
        write_trace(args.trace, rep.history)
    if args.json:
        _emit({
            "converged": rep.converged,
            "reason": rep.reason.value,
            "double_sweeps": rep.double_sweeps,
            "half_sweeps": rep.final_state.l,
            "final_e": fmt17(rep.final_e),
            "final_h_norm": fmt17(rep.history[-1].h_norm),
            "n": R0.n,
        })
    else:
        print(f"final e:        {fmt15(rep.final_e)}")
        print(f"double sweeps:  {rep.double_sweeps}")
        print(f"termination:    {rep.reason.value}")
    return EXIT_OK if rep.converged else EXIT_MAX_ITER


def _cmd_check(args) -> int:
    report = check_preconditions(_load(args, triangular=True))
    if args.json:
        _emit(report.to_dict())
        return EXIT_OK
    print(f"verdict:            {report.verdict.value}")
    print(f"rho^(0):            {fmt15(report.rho)}  (< 1: {report.rho_lt_one})")
    print(f"sigma_min(S):       {fmt15(report.sigma_min_S)}")
    print(f"sigma_min(R):       {fmt15(report.sigma_min_R)}  "
          f"(sigma_min(S) > sigma_min(R): {report.smin_S_gt_smin_R})")
    print(f"v_nn^(0):           {fmt15(report.vnn)}  "
          f"(nonzero beyond {report.vnn_threshold:g}: {report.vnn_nonzero})")
    print(f"sigma_n simple:     {report.sigma_gap_simple}")
    return EXIT_OK


def _cmd_svd(args) -> int:
    res = svd(_load(args, triangular=False))
    if args.json:
        out = {"sigma": [fmt17(x) for x in res.sigma], "sweeps": res.sweeps,
               "converged": res.converged}
        if args.vectors:
            out["U"] = [[fmt17(x) for x in row] for row in res.U]
            out["V"] = [[fmt17(x) for x in row] for row in res.V]
        _emit(out)
        return EXIT_OK
    print("sigma = " + ", ".join(fmt15(x) for x in res.sigma))
    if args.vectors:
        with np.printoptions(precision=15, suppress=False):
            print("U =")
            print(res.U)
            print("V =")
            print(res.V)
    return EXIT_OK


def _cmd_rrurv(args) -> int:
    R0 = _load(args, triangular=True)
    res = rank_revealing_urv(R0, args.rank_tol, _options(args))
    diag = np.diag(res.R)
    if args.json:
        _emit({"numerical_rank": res.numerical_rank, "threshold": fmt17(res.threshold),
               "deflations": res.deflations, "diag": [fmt17(x) for x in diag]})
    else:
        print(f"numerical rank: {res.numerical_rank}")
        print(f"threshold:      {fmt15(res.threshold)}")
        print("diag(R):        " + ", ".join(fmt15(x) for x in diag))
    return EXIT_OK


def _cmd_verify(args) -> int:
    R0 = _load(args, triangular=True)
    rep = refine(R0, _options(args, record_rho=True, keep_iterates=True))
    monitors = run_monitors(rep.final_state, svd(R0.array))
    if args.json:
        out = monitors.to_dict()
        out.update(reason=rep.reason.value, double_sweeps=rep.double_sweeps,
                   final_e=fmt17(rep.final_e))
        _emit(out)
    else:
        print(f"refine: {rep.reason.value} after {rep.double_sweeps} double sweeps, "
              f"final e = {fmt15(rep.final_e)}")
        for r in monitors.results:
            print(r.line())
    return EXIT_OK if monitors.all_hold else EXIT_CHECK_FAILED


COMMANDS = {
    "refine": _cmd_refine,
    "check": _cmd_check,
    "svd": _cmd_svd,
    "rrurv": _cmd_rrurv,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if extra:
        parser.print_usage(sys.stderr)
        print(f"urvrefine: error: unrecognized arguments: {' '.join(extra)}", file=sys.stderr)
        return EXIT_UNKNOWN_FLAG
    try:
        return COMMANDS[args.command](args)
    except (MatrixParseError, MatrixError) as exc:
        print(f"urvrefine: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"urvrefine: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
