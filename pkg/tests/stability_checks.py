"""Sampling checks of the stability classifier shared by several test modules."""

import numpy as np

from fide.stability import StabilityQuery, boundary_locus, classify, simulate_test_equation

MARGIN = 1e-2


def _near_locus(z, locus):
    pts = locus.h_hat[locus.finite]
    return np.min(np.abs(pts - z)) < MARGIN


def simulation_agreement(p, alpha, kappa, n_each, seed=0, n_steps=10_000,
                         box=(-3.0, 3.0, -2.0, 2.0)):
    """Fraction of sampled points whose classification matches a simulation.

    ``n_each`` stable and ``n_each`` unstable points are drawn uniformly from
    ``box`` away from the locus.  A stable point agrees when ``|u_k| <= 10``
    for all steps, an unstable one when ``|u_k|`` exceeds ``1e3``.
    """
    locus = boundary_locus(StabilityQuery(p, alpha, kappa))
    rng = np.random.default_rng(seed)
    want = {True: n_each, False: n_each}
    agree = total = 0
    x0, x1, y0, y1 = box
    for _ in range(200 * n_each):
        if not any(want.values()):
            break
        z = complex(rng.uniform(x0, x1), rng.uniform(y0, y1))
        if _near_locus(z, locus):
            continue
        cls = classify(z, locus)
        if cls is None or want[cls] == 0:
            continue
        want[cls] -= 1
        u = simulate_test_equation(z, p, alpha, kappa, n_steps)
        ok = bool(u.max() <= 10.0) if cls else bool(u.max() > 1e3)
        agree += ok
        total += 1
    return agree / total, total


def inclusion_exceptions(p=0, kappa=0.5, a_small=0.2, a_large=0.8, nx=40, ny=25):
    """Grid points unstable for ``a_small`` but not unstable for ``a_large``."""
    lo = boundary_locus(StabilityQuery(p, a_small, kappa))
    hi = boundary_locus(StabilityQuery(p, a_large, kappa))
    bad = 0
    for x in np.linspace(-3.0, 1.0, nx):
        for y in np.linspace(-2.0, 2.0, ny):
            c_lo = classify(complex(x, y), lo)
            if c_lo is None:
                bad += 1
            elif not c_lo and classify(complex(x, y), hi) is not False:
                bad += 1
    return bad, nx * ny
