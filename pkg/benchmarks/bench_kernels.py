"""Compare the numba kernels with their pure-numpy twins.

Each backend runs in its own interpreter because ``FIDE_NUMBA`` is read at
import time.  Usage::

    python benchmarks/bench_kernels.py [--sizes 512 1024 2048] [--repeats 3]

The convolution column uses length 16 n.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import json, sys, time
import numpy as np
from fide import SolverParams, solve_famm, solve_imex
from fide._accel import USE_NUMBA
from fide.coeffs import causal_toeplitz_apply
from fide.harness.registry import get_problem

sizes, repeats = json.loads(sys.argv[1]), int(sys.argv[2])

def med(fn):
    fn()
    ts = []
    for _ in range(repeats):
        t0 = time.perf_counter(); fn(); ts.append(time.perf_counter() - t0)
    return float(np.median(ts))

out = {"numba": USE_NUMBA, "rows": []}
ex1 = get_problem("example1").problem(0.5, 1)
c2 = get_problem("case2")
for n in sizes:
    par = SolverParams(alpha=0.5, p=1, h=1.0 / n, n_steps=n)
    par2 = SolverParams(alpha=0.5, p=1, h=1.0 / n, n_steps=n, plan=c2.default_plan(0.5, 1),
                        picard_tol=1e-7)
    rng = np.random.default_rng(0)
    g, x = rng.standard_normal(16 * n + 1), rng.standard_normal(16 * n + 1)
    out["rows"].append({
        "n": n,
        "linear_march_s": med(lambda: solve_famm(ex1, par)),
        "stepping_s": med(lambda: solve_imex(c2.problem(0.5, 1), par2)),
        "causal_conv_s": med(lambda: causal_toeplitz_apply(g, x, 1)),
    })
print(json.dumps(out))
"""


def run_backend(flag: str, sizes, repeats: int) -> dict:
    env = dict(os.environ, FIDE_NUMBA=flag)
    res = subprocess.run(
        [sys.executable, "-c", _WORKER, json.dumps(list(sizes)), str(repeats)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[512, 1024, 2048])
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)
    nb = run_backend("1", args.sizes, args.repeats)
    py = run_backend("0", args.sizes, args.repeats)
    if not nb["numba"]:
        print("numba unavailable; both columns use numpy", file=sys.stderr)
    keys = ("linear_march_s", "stepping_s", "causal_conv_s")
    print(f"{'n':>6} " + " ".join(f"{k:>28}" for k in keys))
    for a, b in zip(nb["rows"], py["rows"]):
        cells = [f"{a[k]:9.4f} / {b[k]:9.4f} ({b[k] / a[k]:5.1f}x)" for k in keys]
        print(f"{a['n']:>6} " + " ".join(f"{c:>28}" for c in cells))
    print("columns: numba / numpy (speed-up)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
