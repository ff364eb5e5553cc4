"""Convergence and timing studies over the registry problems."""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from fide import __version__
from fide._accel import USE_NUMBA, worker_count
from fide.corrections import CorrectionPlan
from fide.errors import DomainError, FideError, NotApplicableError
from fide.fastsolve import picard_solve
from fide.harness.registry import get_problem
from fide.problem import SolverParams
from fide.stepper import error_metrics, solve_reference

__all__ = [
    "ConvergenceReport",
    "TimingReport",
    "run_convergence",
    "run_timing",
    "CONVERGENCE_COLUMNS",
    "TIMING_COLUMNS",
    "REFERENCE_CUTOFF",
]

CONVERGENCE_COLUMNS = (
    "h", "err_endpoint", "err_global", "order_endpoint", "order_global", "picard_iters", "wall_s",
)
TIMING_COLUMNS = ("n", "fast_s", "ref_s")
REFERENCE_CUTOFF = 2**13


def _orders(errs) -> list:
    e = np.asarray(errs, dtype=float)
    out = [None]
    for a, b in zip(e[:-1], e[1:]):
        out.append(float(np.log2(a / b)) if a > 0 and b > 0 else None)
    return out


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.10e}"


@dataclass
class ConvergenceReport:
    """Errors and observed orders of one scheme over a list of step sizes.

    ``order_*[i]`` compares ``h_list[i-1]`` with ``h_list[i]`` (``None``
    for the first entry), in the ``log2`` form used for halved steps.
    """

    problem: str
    scheme: str
    p: int
    alpha: float
    h_list: list
    err_endpoint: list
    err_global: list
    picard_iterations: list
    wall_time: list
    config: dict = field(default_factory=dict)

    @property
    def order_endpoint(self) -> list:
        return _orders(self.err_endpoint)

    @property
    def order_global(self) -> list:
        return _orders(self.err_global)

    def rows(self) -> list:
        oe, og = self.order_endpoint, self.order_global
        return [
            (h, ee, eg, a, b, it, w)
            for h, ee, eg, a, b, it, w in zip(
                self.h_list, self.err_endpoint, self.err_global, oe, og,
                self.picard_iterations, self.wall_time,
            )
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CONVERGENCE_COLUMNS)
        for row in self.rows():
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["order_endpoint"] = self.order_endpoint
        d["order_global"] = self.order_global
        return d


@dataclass
class TimingReport:
    """Median wall times of the fast and reference paths per ``N``."""

    problem: str
    scheme: str
    p: int
    alpha: float
    n_list: list
    fast_s: list
    ref_s: list
    repeats: int

    def ratios(self, which: str = "fast") -> list:
        """``t(N_{i+1}) / t(N_i)`` for adjacent sizes, ``None`` where skipped."""
        t = self.fast_s if which == "fast" else self.ref_s
        return [None if a is None or b is None else b / a for a, b in zip(t[:-1], t[1:])]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TIMING_COLUMNS)
        for row in zip(self.n_list, self.fast_s, self.ref_s):
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fast_ratios"] = self.ratios("fast")
        d["ref_ratios"] = self.ratios("ref")
        return d


def _annotate(err: Exception, problem: str, h: float) -> Exception:
    """Prefix the message with the study context, keeping the exception type."""
    msg = f"{problem}, h={h:g}: {err.args[0] if err.args else err}"
    err.args = (msg, *err.args[1:])
    err.problem = problem
    err.h = h
    return err


def _errors_against(traj, ref_times, ref_states):
    """Endpoint and global relative errors against a finer benchmark run."""
    h_ref = ref_times[1] - ref_times[0]
    stride = int(round((traj.times[1] - traj.times[0]) / h_ref))
    ref = ref_states[::stride][: traj.states.shape[0]]
    if ref.shape != traj.states.shape:
        raise DomainError("benchmark grid does not contain the coarse grid")
    diff = np.abs(ref - traj.states).max(axis=1)
    mag = np.abs(ref).max(axis=1)
    return float(diff[-1] / mag[-1]), float(diff.max() / mag.max())


def run_convergence(problem_name: str, scheme: str, p: int, alpha: float,
                    h_list: Sequence[float], plan: Optional[CorrectionPlan] = None,
                    T: Optional[float] = None, picard_tol: Optional[float] = None,
                    eps: float = 5e-9, quad_points: Optional[int] = None,
                    benchmark: Optional[bool] = None, workers: Optional[int] = None,
                    ) -> ConvergenceReport:
    """Solve with the fast solver at each ``h`` and tabulate errors.

    Problems without an exact solution are compared with a benchmark run at
    the registry's ``benchmark_h`` using ``benchmark_m`` corrections
    (IMEX(1)); ``benchmark=True`` forces this mode.

    Errors raised by a solve are re-raised with ``(problem, h)`` prepended.
    """
    rp = get_problem(problem_name)
    T = rp.domain_T if T is None else float(T)
    plan = rp.default_plan(alpha, p) if plan is None else plan
    tol = rp.picard_tol if picard_tol is None else picard_tol
    extra = {} if quad_points is None else {"quad_points": quad_points}
    problem = rp.problem(alpha, p)
    h_list = [float(h) for h in h_list]
    use_bench = (not rp.has_exact) if benchmark is None else benchmark
    ref = None
    if use_bench:
        hb = rp.extra.get("benchmark_h")
        mb = rp.extra.get("benchmark_m", 3)
        if hb is None:
            raise NotApplicableError(f"{problem_name} has no benchmark configuration")
        bplan = rp.default_plan(alpha, 1, mb)
        bprob = rp.problem(alpha, 1)
        bpar = SolverParams.over(T, hb, alpha=alpha, p=1, plan=bplan, picard_tol=tol,
                                 eps_circulant=eps, **extra)
        try:
            bt = picard_solve(bprob, bpar, "imex")
        except FideError as e:
            raise _annotate(e, problem_name, hb)
        ref = (bt.times, bt.states)
    exact = rp.exact(alpha, p)

    def one(h):
        try:
            par = SolverParams.over(T, h, alpha=alpha, p=p, plan=plan, picard_tol=tol,
                                    eps_circulant=eps, **extra)
            t0 = time.perf_counter()
            tr = picard_solve(problem, par, scheme)
            wall = time.perf_counter() - t0
            if ref is not None:
                ee, eg = _errors_against(tr, *ref)
            else:
                ee, eg = error_metrics(tr, exact)
        except FideError as e:
            raise _annotate(e, problem_name, h)
        return ee, eg, tr.diagnostics["picard_iterations"], wall

    n_workers = max(1, min(workers or worker_count(), len(h_list)))
    if n_workers == 1:
        results = [one(h) for h in h_list]
    else:
        with ThreadPoolExecutor(n_workers) as ex:
            results = list(ex.map(one, h_list))
    config = {
        "problem": problem_name, "scheme": scheme, "p": p, "alpha": alpha, "T": T,
        "h_list": h_list, "plan": asdict(plan), "picard_tol": tol, "eps": eps,
        "quad_points": quad_points, "benchmark": bool(use_bench), "version": __version__,
        "numba": USE_NUMBA,
    }
    return ConvergenceReport(
        problem_name, scheme, p, alpha, h_list,
        [r[0] for r in results], [r[1] for r in results],
        [r[2] for r in results], [r[3] for r in results], config,
    )


def _median_time(fn, repeats: int) -> float:
    fn()  # warm-up: JIT compilation and caches
    ts = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return float(np.median(ts))


def run_timing(problem_name: str, scheme: str, p: int, n_list: Sequence[int],
               repeats: int = 3, alpha: float = 0.5, T: Optional[float] = None,
               ref_cutoff: int = REFERENCE_CUTOFF) -> TimingReport:
    """Median-of-``repeats`` wall times of the fast and reference paths.

    The reference path is skipped (``None``) for ``N > ref_cutoff``.
    """
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list[:-1], n_list[1:])):
        raise DomainError("n_list must be increasing")
    rp = get_problem(problem_name)
    T = rp.domain_T if T is None else float(T)
    problem = rp.problem(alpha, p)
    plan = rp.default_plan(alpha, p)
    fast, refs = [], []
    for n in n_list:
        par = SolverParams(alpha=alpha, p=p, h=T / n, n_steps=n, plan=plan,
                           picard_tol=rp.picard_tol)
        fast.append(_median_time(lambda: picard_solve(problem, par, scheme), repeats))
        if n <= ref_cutoff:
            refs.append(_median_time(lambda: solve_reference(problem, par, scheme), repeats))
        else:
            refs.append(None)
    return TimingReport(problem_name, scheme, p, alpha, n_list, fast, refs, repeats)


def write_sidecar(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)


def _json_default(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"not JSON serialisable: {type(x).__name__}")
