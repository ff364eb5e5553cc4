"""Command-line interface: ``fide <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from dataclasses import asdict

import numpy as np

from fide import __version__
from fide.corrections import CorrectionPlan
from fide.errors import FideError
from fide.fastsolve import picard_solve
from fide.harness.registry import get_problem, problem_names
from fide.harness.studies import run_convergence, run_timing, write_sidecar
from fide.problem import SolverParams
from fide.stability import StabilityQuery, boundary_locus

__all__ = ["main", "parse_powers", "build_parser"]

_NUM = r"[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?"
_TERM = re.compile(rf"^(?:(?P<c>{_NUM})\s*(?P<op>[+-])\s*)?(?:(?P<k>{_NUM})\s*\*?\s*)?(?P<a>a|alpha)$")


def _power(token: str, alpha: float) -> float:
    tok = token.strip()
    if re.fullmatch(_NUM, tok):
        return float(tok)
    m = _TERM.match(tok)
    if m is None:
        raise argparse.ArgumentTypeError(f"cannot parse correction power {token!r}")
    k = float(m.group("k")) if m.group("k") else 1.0
    val = k * alpha
    if m.group("c"):
        c = float(m.group("c"))
        val = c + val if m.group("op") == "+" else c - val
    return val


def parse_powers(spec: str, alpha: float) -> CorrectionPlan:
    """Parse ``"s1,s2,...;d1,d2,..."`` into a plan.

    Entries are numbers or affine forms in the fractional order such as
    ``a``, ``2a``, ``1+a`` or ``1-a``.  The ``sigma`` list feeds both
    ``u`` families and ``delta`` both ``f`` families; a missing ``;delta``
    part reuses ``sigma``.
    """
    spec = spec.strip()
    if not spec:
        return CorrectionPlan()
    if ";" in spec:
        s_part, d_part = spec.split(";", 1)
    else:
        s_part, d_part = spec, spec
    sig = [_power(t, alpha) for t in s_part.split(",") if t.strip()]
    dl = [_power(t, alpha) for t in d_part.split(",") if t.strip()]
    return CorrectionPlan.from_sets(sorted(sig), sorted(dl))


def _common(sp, *, need_h=True):
    sp.add_argument("--problem", required=True, choices=problem_names())
    sp.add_argument("--scheme", choices=("famm", "imex"), default="imex")
    sp.add_argument("--p", type=int, choices=(0, 1), default=0)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--T", type=float, default=None, help="final time (registry default)")
    sp.add_argument("--corrections", default=None,
                    help='correction powers "s1,s2;d1,d2" (registry default when omitted)')
    sp.add_argument("--picard-tol", type=float, default=None)
    sp.add_argument("--eps", type=float, default=5e-9)
    sp.add_argument("--Q", type=int, default=None, help="Gauss-Jacobi points")
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fide", description="Caputo FDE solvers and studies")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve one problem and write the trajectory")
    _common(sp)
    sp.add_argument("--h", type=float, required=True)

    sp = sub.add_parser("converge", help="error/order table over h = 2^-e")
    _common(sp)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--h", type=float, nargs="+")
    g.add_argument("--h-min-exp", type=int)
    sp.add_argument("--h-max-exp", type=int)
    sp.add_argument("--benchmark", action="store_true",
                    help="compare with a fine benchmark run instead of the exact solution")

    sp = sub.add_parser("stability", help="boundary locus of IMEX(p)")
    sp.add_argument("--p", type=int, choices=(0, 1), default=0)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--kappa", type=float, default=0.0)
    sp.add_argument("--k-trunc", type=int, default=100_000)
    sp.add_argument("--n-samples", type=int, default=4096)
    sp.add_argument("--Q", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("bench", help="wall time of fast vs reference paths")
    sp.add_argument("--problem", default="example1", choices=problem_names())
    sp.add_argument("--scheme", choices=("famm", "imex"), default="famm")
    sp.add_argument("--p", type=int, choices=(0, 1), default=0)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--n-min-exp", type=int, default=10)
    sp.add_argument("--n-max-exp", type=int, default=14)
    sp.add_argument("--repeats", type=int, default=3)
    sp.add_argument("--ref-cutoff", type=int, default=2**13)
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sub.add_parser("list-problems", help="print the registry keys")
    return ap


def _emit(text: str, out, payload: dict, fmt: str) -> None:
    """Write CSV (plus a JSON sidecar when writing a file) or JSON."""
    if fmt == "json":
        body = json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n"
        if out:
            with open(out, "w") as fh:
                fh.write(body)
        else:
            sys.stdout.write(body)
        return
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
        write_sidecar(out + ".json", payload)
    else:
        sys.stdout.write(text)


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(type(x).__name__)


def _plan(args, rp):
    if args.corrections is None:
        return rp.default_plan(args.alpha, args.p)
    return parse_powers(args.corrections, args.alpha)


def _solve(args) -> int:
    rp = get_problem(args.problem)
    T = rp.domain_T if args.T is None else args.T
    extra = {} if args.Q is None else {"quad_points": args.Q}
    par = SolverParams.over(T, args.h, alpha=args.alpha, p=args.p, plan=_plan(args, rp),
                            picard_tol=rp.picard_tol if args.picard_tol is None else args.picard_tol,
                            eps_circulant=args.eps, **extra)
    tr = picard_solve(rp.problem(args.alpha, args.p), par, args.scheme)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"u_{i + 1}" for i in range(tr.states.shape[1])])
    for t, u in zip(tr.times, tr.states):
        w.writerow([f"{t:.10e}"] + [f"{x:.16e}" for x in u])
    diag = {k: v for k, v in tr.diagnostics.items() if k != "residuals"}
    payload = {"config": {**vars(args), "T": T, "plan": asdict(par.plan)}, "diagnostics": diag,
               "version": __version__}
    if args.format == "json":
        payload.update(times=tr.times, states=tr.states)
    _emit(buf.getvalue(), args.out, payload, args.format)
    return 0


def _converge(args) -> int:
    rp = get_problem(args.problem)
    if args.h is not None:
        h_list = args.h
    else:
        if args.h_max_exp is None or args.h_max_exp < args.h_min_exp:
            raise argparse.ArgumentTypeError("--h-max-exp must be given and >= --h-min-exp")
        h_list = [2.0**-e for e in range(args.h_min_exp, args.h_max_exp + 1)]
    rep = run_convergence(args.problem, args.scheme, args.p, args.alpha, h_list,
                          plan=_plan(args, rp), T=args.T, picard_tol=args.picard_tol,
                          eps=args.eps, quad_points=args.Q,
                          benchmark=True if args.benchmark else None)
    _emit(rep.to_csv(), args.out, rep.to_dict(), args.format)
    return 0


def _stability(args) -> int:
    extra = {} if args.Q is None else {"quad_points": args.Q}
    q = StabilityQuery(args.p, args.alpha, args.kappa, args.k_trunc, args.n_samples, **extra)
    loc = boundary_locus(q)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "re_hhat", "im_hhat"])
    for th, z in zip(loc.xi_angles, loc.h_hat):
        w.writerow([f"{th:.12e}", f"{z.real:.12e}", f"{z.imag:.12e}"])
    payload = {"config": vars(args), "version": __version__}
    if args.format == "json":
        payload.update(theta=loc.xi_angles, re_hhat=loc.h_hat.real, im_hhat=loc.h_hat.imag)
    _emit(buf.getvalue(), args.out, payload, args.format)
    return 0


def _bench(args) -> int:
    n_list = [2**e for e in range(args.n_min_exp, args.n_max_exp + 1)]
    rep = run_timing(args.problem, args.scheme, args.p, n_list, args.repeats, args.alpha,
                     ref_cutoff=args.ref_cutoff)
    _emit(rep.to_csv(), args.out, rep.to_dict(), args.format)
    return 0


_COMMANDS = {"solve": _solve, "converge": _converge, "stability": _stability, "bench": _bench}


def main(argv=None) -> int:
    """Entry point; returns the process exit code."""
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:  # argparse already printed usage
        return int(e.code) if e.code is not None else 2
    if args.command == "list-problems":
        for name in problem_names():
            print(name)
        return 0
    try:
        return _COMMANDS[args.command](args)
    except argparse.ArgumentTypeError as e:
        ap.print_usage(sys.stderr)
        print(f"fide: error: {e}", file=sys.stderr)
        return 2
    except FideError as e:
        print(f"fide: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"fide: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
