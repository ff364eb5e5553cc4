"""Linear stability of IMEX(p) on ``D^a u = lambda u + rho u``, ``rho = kappa lambda``.

With ``h_hat = lambda h^a`` the characteristic function of the scheme on the
unit disk is ``G(xi) = Num(xi) - h_hat * Den(xi)`` with::

    Num(xi) = 1 - xi + xi * gamma(xi) / (Gamma(a) Gamma(2 - a))
    Den(xi) = b0 + b1 xi + kappa xi E(xi)

where ``gamma(xi)`` is the generating polynomial of a (truncated) history row
and ``E`` the extrapolation symbol (``b0`` for p=0, ``(b1 + 2 b0) - b0 xi`` for
p=1).  The unstable set is ``{Num/Den : |xi| <= 1}``; its boundary locus is the
image of ``|xi| = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fide._accel import USE_NUMBA, njit
from fide.coeffs import adams_moulton, history_prefactor, history_stencil, kernel_table
from fide.errors import DomainError
from fide.specfun import DEFAULT_QUAD_POINTS

__all__ = [
    "StabilityQuery",
    "BoundaryLocus",
    "boundary_locus",
    "is_stable",
    "classify",
    "simulate_test_equation",
    "INDETERMINATE_TOL",
]

INDETERMINATE_TOL = 1e-9


@dataclass(frozen=True)
class StabilityQuery:
    """Parameters of a stability-locus computation.

    Parameters
    ----------
    p : {0, 1}
    alpha : float in (0, 1]
    kappa : float
        Ratio ``rho / lambda`` of the explicit to the implicit coefficient.
    k_trunc : int
        History row used to truncate the generating series.
    n_samples : int
        Number of uniform points on ``|xi| = 1``.
    """

    p: int
    alpha: float
    kappa: float = 0.0
    k_trunc: int = 100_000
    n_samples: int = 4096
    quad_points: int = DEFAULT_QUAD_POINTS

    def __post_init__(self):
        if self.p not in (0, 1):
            raise DomainError(f"p must be 0 or 1, got {self.p}")
        if not (0.0 < self.alpha <= 1.0):
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if int(self.k_trunc) != self.k_trunc or self.k_trunc < 1:
            raise DomainError("k_trunc must be a positive integer")
        if int(self.n_samples) != self.n_samples or self.n_samples < 16:
            raise DomainError("n_samples must be an integer >= 16")
        if not np.isfinite(self.kappa):
            raise DomainError("kappa must be finite")


@dataclass(frozen=True)
class BoundaryLocus:
    """Samples of the boundary map on the unit circle.

    ``num`` and ``den`` hold ``Num(xi)`` and ``Den(xi)`` so membership tests
    can use the analytic characteristic function instead of the curve.
    """

    query: StabilityQuery
    xi_angles: np.ndarray
    h_hat: np.ndarray
    num: np.ndarray
    den: np.ndarray

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.h_hat)

    @property
    def diameter(self) -> float:
        z = self.h_hat[self.finite]
        if z.size == 0:
            return 0.0
        return float(max(np.ptp(z.real), np.ptp(z.imag)))


def _row_coefficients(q: StabilityQuery) -> np.ndarray:
    """``c[l] = gamma[k, k - l]``, the history row of step ``k`` by lag."""
    k = int(q.k_trunc)
    table = kernel_table(q.alpha, 1.0, k + 2, q.quad_points)
    stencil = history_stencil(table, q.p, k + 1)
    return stencil.row(k)[::-1].copy()


def _den(xi: np.ndarray, q: StabilityQuery) -> np.ndarray:
    beta = np.zeros(2)
    beta[: q.p + 1] = adams_moulton(q.alpha, q.p).beta
    b0, b1 = beta
    if q.p == 0:
        ext = b0
    else:
        ext = (b1 + 2.0 * b0) - b0 * xi
    return b0 + b1 * xi + q.kappa * xi * ext


def boundary_locus(q: StabilityQuery) -> BoundaryLocus:
    """Image of ``|xi| = 1`` under ``h_hat = Num(xi) / Den(xi)``.

    The history polynomial is evaluated at all sample points with one FFT of
    its coefficients folded modulo ``n_samples``.  Samples where ``Den``
    vanishes are returned as non-finite.
    """
    n = int(q.n_samples)
    c = _row_coefficients(q)
    pad = (-c.size) % n
    folded = np.concatenate([c, np.zeros(pad)]).reshape(-1, n).sum(axis=0)
    gam = n * np.fft.ifft(folded)
    theta = 2.0 * np.pi * np.arange(n) / n
    xi = np.exp(1j * theta)
    xi[0] = 1.0
    pref = history_prefactor(q.alpha)
    num = 1.0 - xi + pref * xi * gam
    den = _den(xi, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        hh = np.where(np.abs(den) > 1e-14 * max(1.0, np.abs(num).max()), num / den, np.nan + 0j)
    for arr in (theta, hh, num, den):
        arr.setflags(write=False)
    return BoundaryLocus(q, theta, hh, num, den)


def _winding(g: np.ndarray) -> int:
    ang = np.angle(np.concatenate([g, g[:1]]))
    d = np.diff(ang)
    d = (d + np.pi) % (2.0 * np.pi) - np.pi
    return int(round(d.sum() / (2.0 * np.pi)))


def classify(h_hat: complex, locus: BoundaryLocus):
    """Return ``True`` (stable), ``False`` (unstable) or ``None`` (on the locus).

    The number of roots of ``G = Num - h_hat Den`` in the unit disk equals the
    winding number of ``G`` around the origin along the sampled circle.  This
    holds whether or not the locus curve is simple.
    """
    h_hat = complex(h_hat)
    z = locus.h_hat
    fin = np.isfinite(z)
    if fin.any() and np.min(np.abs(z[fin] - h_hat)) <= INDETERMINATE_TOL:
        return None
    g = locus.num - h_hat * locus.den
    if np.min(np.abs(g)) <= INDETERMINATE_TOL * max(1.0, abs(h_hat)):
        return None
    return _winding(g) == 0


def is_stable(h_hat: complex, locus: BoundaryLocus) -> bool:
    """Whether ``h_hat`` lies in the stability region.

    Raises
    ------
    DomainError
        If ``h_hat`` is within ``INDETERMINATE_TOL`` of the locus.
    """
    out = classify(h_hat, locus)
    if out is None:
        raise DomainError(f"h_hat={complex(h_hat)} lies on the boundary locus (indeterminate)")
    return out


@njit
def _simulate_nb(cols, lag, j_first, pref, b0, b1, p, hh, kappa, n, u):
    denom = 1.0 - hh * b0
    for k in range(n):
        acc = 0.0j
        top = min(j_first, k + 1)
        for j in range(top):
            acc += cols[j, k] * u[j]
        for j in range(j_first, k + 1):
            acc += lag[k - j] * u[j]
        rhs = u[k] - pref * acc
        if p == 1:
            rhs += hh * b1 * u[k]
            if k == 0:
                rhs += kappa * hh * (b0 + b1) * u[0]
            else:
                rhs += kappa * hh * ((b1 + 2.0 * b0) * u[k] - b0 * u[k - 1])
        else:
            rhs += kappa * hh * b0 * u[k]
        u[k + 1] = rhs / denom
        if not (abs(u[k + 1]) < 1e300):
            return k + 1
    return n


def _simulate_np(cols, lag, j_first, pref, b0, b1, p, hh, kappa, n, u):
    denom = 1.0 - hh * b0
    for k in range(n):
        top = min(j_first, k + 1)
        acc = cols[:top, k] @ u[:top]
        if k >= j_first:
            acc += lag[k - j_first :: -1] @ u[j_first : k + 1]
        rhs = u[k] - pref * acc
        if p == 1:
            rhs += hh * b1 * u[k]
            if k == 0:
                rhs += kappa * hh * (b0 + b1) * u[0]
            else:
                rhs += kappa * hh * ((b1 + 2.0 * b0) * u[k] - b0 * u[k - 1])
        else:
            rhs += kappa * hh * b0 * u[k]
        u[k + 1] = rhs / denom
        if not (abs(u[k + 1]) < 1e300):
            return k + 1
    return n


_simulate = _simulate_nb if USE_NUMBA else _simulate_np


def simulate_test_equation(h_hat: complex, p: int, alpha: float, kappa: float = 0.0,
                           n_steps: int = 10_000, quad_points: int = DEFAULT_QUAD_POINTS):
    """Run uncorrected IMEX(p) on the scalar test equation with ``u0 = 1``.

    Returns
    -------
    numpy.ndarray
        ``|u_k|`` for the computed steps (stops early on overflow).
    """
    if n_steps < 2:
        raise DomainError("n_steps must be >= 2")
    table = kernel_table(alpha, 1.0, n_steps + 2, quad_points)
    st = history_stencil(table, p, n_steps)
    cols = np.zeros((2, n_steps))
    for j, c in enumerate(st.cols):
        cols[j] = c
    beta = np.zeros(2)
    beta[: p + 1] = adams_moulton(alpha, p).beta
    u = np.zeros(n_steps + 1, dtype=np.complex128)
    u[0] = 1.0
    last = _simulate(cols, np.asarray(st.lag), st.j_first, st.prefactor, beta[0],
                     beta[1], p, complex(h_hat), float(kappa), n_steps, u)
    return np.abs(u[: last + 1])
