"""Scheme coefficients: Adams-Moulton weights, kernel integrals, history rows.

The kernel integrals depend on ``(k, j)`` only through the lag ``l = k - j``
and scale as ``h`` (resp. ``h**2``), so a :class:`KernelTable` stores the
dimensionless lag sequences once.  A :class:`HistoryStencil` repackages the
history coefficients ``gamma[k, j]`` as a lag-Toeplitz sequence plus a few
explicit leading columns; :func:`gamma_row` is the literal row-by-row form
and is what the stencil is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from fide._accel import USE_NUMBA, njit
from fide.errors import DomainError
from fide.specfun import DEFAULT_QUAD_POINTS, gamma_fn, gauss_jacobi_rule, hyp2f1

__all__ = [
    "AdamsMoultonCoeffs",
    "adams_moulton",
    "KernelTable",
    "kernel_table",
    "GammaRow",
    "gamma_row",
    "HistoryStencil",
    "history_stencil",
    "history_load",
    "history_prefactor",
    "gamma_power_sums",
    "lag_tail",
    "kernel_difference",
]

# lags at or above this use the difference-free integral form
LAG_SWITCH = 32


def _check_alpha_p(alpha: float, p: int) -> None:
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"fractional order must lie in (0, 1], got {alpha}")
    if p not in (0, 1):
        raise DomainError(f"scheme order p must be 0 or 1, got {p}")


@dataclass(frozen=True)
class AdamsMoultonCoeffs:
    p: int
    alpha: float
    beta: tuple


def adams_moulton(alpha: float, p: int) -> AdamsMoultonCoeffs:
    """Fractional Adams-Moulton weights ``beta_0 .. beta_p``."""
    _check_alpha_p(alpha, p)
    if p == 0:
        beta = (1.0 / gamma_fn(alpha + 1.0),)
    else:
        g = gamma_fn(alpha + 2.0)
        beta = (1.0 / g, alpha / g)
    return AdamsMoultonCoeffs(p, float(alpha), beta)


def history_prefactor(alpha: float) -> float:
    """``1 / (Gamma(alpha) * Gamma(2 - alpha))``."""
    return 1.0 / (gamma_fn(alpha) * gamma_fn(2.0 - alpha))


@dataclass(frozen=True)
class KernelTable:
    """Lag-indexed kernel integrals with the ``h`` powers factored out.

    ``a_vals[l] = A[k, k-l] / h`` and ``b_vals[l] = B[k, k-l] / h**2``.
    """

    alpha: float
    h: float
    max_lag: int
    a_vals: np.ndarray
    b_vals: np.ndarray


def kernel_table(alpha: float, h: float, max_lag: int, q: int = DEFAULT_QUAD_POINTS) -> KernelTable:
    """Evaluate the two kernel integrals for lags ``0 .. max_lag``.

    Lag 0 uses the gamma-product closed forms; lags ``l >= 1`` use

    ``a[l] = l**(1-alpha)/alpha * 2F1(alpha-1, 1; alpha+1; -1/l)``
    ``b[l] = l**(2-alpha)/alpha * 2F1(alpha-2, 1; alpha+1; -1/l)``.
    """
    if max_lag < 0:
        raise DomainError(f"max_lag must be non-negative, got {max_lag}")
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"fractional order must lie in (0, 1], got {alpha}")
    a = np.empty(max_lag + 1)
    b = np.empty(max_lag + 1)
    ga = gamma_fn(alpha)
    a[0] = ga * gamma_fn(2.0 - alpha)
    b[0] = 0.5 * ga * gamma_fn(3.0 - alpha)
    lags = np.arange(1, max_lag + 1, dtype=float)
    z = -1.0 / lags
    a[1:] = lags ** (1.0 - alpha) / alpha * hyp2f1(alpha - 1.0, 1.0, alpha + 1.0, z, q)
    b[1:] = lags ** (2.0 - alpha) / alpha * hyp2f1(alpha - 2.0, 1.0, alpha + 1.0, z, q)
    a.setflags(write=False)
    b.setflags(write=False)
    return KernelTable(float(alpha), float(h), int(max_lag), a, b)


@dataclass(frozen=True)
class GammaRow:
    k: int
    p: int
    values: np.ndarray


def gamma_row(k: int, p: int, table: KernelTable) -> GammaRow:
    """Row ``k`` of the history coefficients, ``gamma[k, 0..k]``.

    Direct transcription of the boundary/interior case split, written in
    lag variables (``A[k, j] / h = a[k - j]`` and likewise for ``B``).
    """
    if p not in (0, 1):
        raise DomainError(f"scheme order p must be 0 or 1, got {p}")
    if k < 0:
        raise DomainError(f"row index must be non-negative, got {k}")
    if table.max_lag < k:
        raise DomainError(f"kernel table depth {table.max_lag} too small for row {k}")
    A = lambda j: table.a_vals[k - j]  # noqa: E731
    B = lambda j: table.b_vals[k - j]  # noqa: E731
    s = 2.0 - table.alpha
    g = np.zeros(k + 1)
    if k == 0:
        return GammaRow(k, p, g)
    if p == 0 or k == 1:
        g[0] = A(1) - A(0)
        if k > 1:
            j = np.arange(1, k)
            g[1:k] = table.a_vals[k - j + 1] - 2.0 * table.a_vals[k - j] + table.a_vals[k - j - 1]
        g[k] = A(k - 1) - A(k)
        return GammaRow(k, p, g)
    if k == 2:
        g[0] = (-2.0 * A(0) + A(1) - A(2)) / 2.0 + (B(1) - B(2)) / s
        g[1] = (A(0) - A(1) + 2.0 * A(2)) - (2.0 * B(1) - 2.0 * B(2)) / s
        g[2] = (A(1) - 3.0 * A(2)) / 2.0 + (B(1) - B(2)) / s
        return GammaRow(k, p, g)
    g[0] = (-2.0 * A(0) + A(1) - A(2)) / 2.0 + (B(1) - B(2)) / s
    g[1] = (2.0 * A(0) - 2.0 * A(1) + 3.0 * A(2) - A(3)) / 2.0 + (
        -2.0 * B(1) + 3.0 * B(2) - B(3)
    ) / s
    if k > 3:
        j = np.arange(2, k - 1)
        av, bv = table.a_vals, table.b_vals
        g[2 : k - 1] = (
            av[k - j + 1] - 3.0 * av[k - j] + 3.0 * av[k - j - 1] - av[k - j - 2]
        ) / 2.0 + (bv[k - j + 1] - 3.0 * bv[k - j] + 3.0 * bv[k - j - 1] - bv[k - j - 2]) / s
    g[k - 1] = (A(k - 2) - 3.0 * A(k - 1) + 4.0 * A(k)) / 2.0 + (
        B(k - 2) - 3.0 * B(k - 1) + 2.0 * B(k)
    ) / s
    g[k] = (A(k - 1) - 3.0 * A(k)) / 2.0 + (B(k - 1) - B(k)) / s
    return GammaRow(k, p, g)


@dataclass(frozen=True)
class HistoryStencil:
    """History coefficients as lag sequence plus explicit leading columns.

    For ``k >= 1``::

        gamma[k, j] = cols[j][k]          for j < j_first
        gamma[k, j] = lag[k - j]          for j_first <= j <= k

    and row 0 is identically zero.  ``j_first`` is 1 for ``p = 0`` and 2
    for ``p = 1``.
    """

    p: int
    alpha: float
    n_rows: int
    lag: np.ndarray
    cols: tuple
    j_first: int
    prefactor: float = field(default=0.0)

    def row(self, k: int) -> np.ndarray:
        out = np.zeros(k + 1)
        if k == 0:
            return out
        for j in range(min(self.j_first, k + 1)):
            out[j] = self.cols[j][k]
        if k >= self.j_first:
            out[self.j_first :] = self.lag[k - self.j_first :: -1]
        return out


def history_stencil(table: KernelTable, p: int, n_rows: int) -> HistoryStencil:
    """Build rows ``0 .. n_rows - 1`` of the history coefficients in stencil form."""
    if p not in (0, 1):
        raise DomainError(f"scheme order p must be 0 or 1, got {p}")
    if table.max_lag < n_rows + 1:
        raise DomainError(f"kernel table depth {table.max_lag} too small for {n_rows} rows")
    a, b = table.a_vals, table.b_vals
    L = n_rows + 1
    s = 2.0 - table.alpha
    col0 = np.zeros(n_rows)
    k = np.arange(1, n_rows)
    if p == 0:
        lag = np.empty(L)
        lag[0] = a[1] - a[0]
        lag[1:] = a[2 : L + 1] - 2.0 * a[1:L] + a[0 : L - 1]
        col0[1:] = a[k - 1] - a[k]
        cols = (col0,)
        j_first = 1
    else:
        lag = np.empty(L)
        lag[0] = (a[1] - 3.0 * a[0]) / 2.0 + (b[1] - b[0]) / s
        lag[1] = (a[2] - 3.0 * a[1] + 4.0 * a[0]) / 2.0 + (b[2] - 3.0 * b[1] + 2.0 * b[0]) / s
        l = np.arange(2, L)
        lag[2:] = (a[l + 1] - 3.0 * a[l] + 3.0 * a[l - 1] - a[l - 2]) / 2.0 + (
            b[l + 1] - 3.0 * b[l] + 3.0 * b[l - 1] - b[l - 2]
        ) / s
        col1 = np.zeros(n_rows)
        if n_rows > 1:
            col0[1] = a[0] - a[1]
            col1[1] = a[1] - a[0]
        if n_rows > 2:
            kk = np.arange(2, n_rows)
            col0[2:] = (-2.0 * a[kk] + a[kk - 1] - a[kk - 2]) / 2.0 + (b[kk - 1] - b[kk - 2]) / s
            col1[2] = (a[2] - a[1] + 2.0 * a[0]) - 2.0 * (b[1] - b[0]) / s
        if n_rows > 3:
            kk = np.arange(3, n_rows)
            col1[3:] = (2.0 * a[kk] - 2.0 * a[kk - 1] + 3.0 * a[kk - 2] - a[kk - 3]) / 2.0 + (
                -2.0 * b[kk - 1] + 3.0 * b[kk - 2] - b[kk - 3]
            ) / s
        cols = (col0, col1)
        j_first = 2
    if L > LAG_SWITCH:
        lag[LAG_SWITCH:] = lag_tail(table.alpha, p, np.arange(LAG_SWITCH, L))
    if n_rows > LAG_SWITCH:
        # zero-sum combinations of the large tables, evaluated without cancellation
        kk = np.arange(LAG_SWITCH, n_rows, dtype=float)
        if p == 0:
            col0[LAG_SWITCH:] = -kernel_difference(table.alpha, 1.0 - table.alpha, 1, kk - 1.0)
        else:
            db2 = kernel_difference(table.alpha, s, 1, kk - 2.0)
            db3 = kernel_difference(table.alpha, s, 1, kk - 3.0)
            col0[LAG_SWITCH:] = (-2.0 * a[LAG_SWITCH:n_rows] + a[LAG_SWITCH - 1 : n_rows - 1]
                                 - a[LAG_SWITCH - 2 : n_rows - 2]) / 2.0 + db2 / s
            col1[LAG_SWITCH:] = (2.0 * a[LAG_SWITCH:n_rows] - 2.0 * a[LAG_SWITCH - 1 : n_rows - 1]
                                 + 3.0 * a[LAG_SWITCH - 2 : n_rows - 2]
                                 - a[LAG_SWITCH - 3 : n_rows - 3]) / 2.0 + (-2.0 * db2 + db3) / s
    for arr in (lag, *cols):
        arr.setflags(write=False)
    return HistoryStencil(
        p, table.alpha, n_rows, lag, cols, j_first, history_prefactor(table.alpha)
    )


def history_load(rows, states, alpha: float) -> np.ndarray:
    """Discrete history load ``sum_j gamma[k, j] u_j / (Gamma(alpha) Gamma(2-alpha))``.

    Parameters
    ----------
    rows : GammaRow or array_like
        Row ``k`` (length ``k + 1``).
    states : array_like, shape (k + 1,) or (k + 1, d)
    """
    values = rows.values if isinstance(rows, GammaRow) else np.asarray(rows, float)
    u = np.asarray(states, dtype=float)
    if u.shape[0] != values.size:
        raise DomainError(f"history row has {values.size} entries but {u.shape[0]} states were given")
    return history_prefactor(alpha) * (values @ u)


# --------------------------------------------------------------------------
# sum_j gamma[k, j] * j**sigma for every k (needed by the history corrections)
# --------------------------------------------------------------------------

_DIRECT_BLOCK = 64


@njit
def _causal_conv_direct(g, x, j0, j1, out):
    # out[k] += sum_{j0 <= j < min(j1, k+1)} g[k - j] x[j]
    n = out.size
    for k in range(j0, n):
        top = min(j1, k + 1)
        acc = 0.0
        for j in range(j0, top):
            acc += g[k - j] * x[j]
        out[k] += acc


def _causal_conv_direct_numpy(g, x, j0, j1, out):
    n = out.size
    for j in range(j0, min(j1, n)):
        out[j:] += g[: n - j] * x[j]


def _fft_conv_block(g, xb, j0, out):
    n = out.size
    m = n - j0
    size = 1 << int(np.ceil(np.log2(m + xb.size)))
    full = np.fft.irfft(np.fft.rfft(g[:m], size) * np.fft.rfft(xb, size), size)
    out[j0:] += full[:m]


def causal_toeplitz_apply(g, x, j_first: int) -> np.ndarray:
    """``out[k] = sum_{j_first <= j <= k} g[k - j] x[j]`` for ``k < len(x)``.

    Small ``j`` are summed directly and larger ``j`` in dyadic blocks by FFT
    so the rounding error at row ``k`` scales with ``max_{j <= k} |x_j|``
    rather than with the global maximum.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    out = np.zeros(n)
    j1 = min(n, max(_DIRECT_BLOCK, j_first))
    if USE_NUMBA:
        _causal_conv_direct(np.ascontiguousarray(g, float), x, j_first, j1, out)
    else:
        _causal_conv_direct_numpy(g, x, j_first, j1, out)
    j0 = j1
    while j0 < n:
        jb = min(n, 2 * j0)
        _fft_conv_block(g, x[j0:jb], j0, out)
        j0 = jb
    return out


def gamma_power_sums(stencil: HistoryStencil, sigma: float) -> np.ndarray:
    """``S[k] = sum_{j=0}^{k} gamma[k, j] * j**sigma`` for ``k < stencil.n_rows``."""
    n = stencil.n_rows
    x = np.arange(n, dtype=float) ** sigma
    x[0] = 0.0 if sigma > 0 else 1.0
    out = causal_toeplitz_apply(stencil.lag, x, stencil.j_first)
    for j, col in enumerate(stencil.cols):
        if j < n:
            part = col * x[j]
            part[:j] = 0.0
            out += part
    out[0] = 0.0
    return out


# cardinal B-splines B_n on [0, n], one polynomial per unit piece
_BSPLINES = {
    1: (lambda s: np.ones_like(s),),
    2: (lambda s: s, lambda s: 2.0 - s),
    3: (
        lambda s: 0.5 * s * s,
        lambda s: 0.5 * (-2.0 * s * s + 6.0 * s - 3.0),
        lambda s: 0.5 * (3.0 - s) ** 2,
    ),
}


def kernel_difference(alpha: float, expo: float, order: int, x, n_t: int = 12,
                      n_s: int = 8, chunk: int = 4096) -> np.ndarray:
    """Forward difference ``D^order F(x)`` of ``F(x) = int_0^1 (1-t)^(alpha-1) (x+t)^expo dt``.

    ``F`` is the kernel table (``expo = 1 - alpha`` for ``a``, ``2 - alpha``
    for ``b``).  Uses ``D^n F(x) = int B_n(s) F^(n)(x + s) ds`` with the
    cardinal B-spline ``B_n``, so no cancellation occurs; differencing the
    table instead loses about ``x**(expo - order)`` relative to ``F(x)``.
    Intended for ``x >= 2``.
    """
    x = np.asarray(x, dtype=float)
    if x.size and x.min() < 2:
        raise DomainError("kernel_difference needs x >= 2")
    coef = float(np.prod([expo - i for i in range(order)]))
    e = expo - order
    ts, ww, cm = _difference_rule(float(alpha), float(e), int(order), int(n_t), int(n_s))
    out = np.empty(x.size)
    far = x >= _SERIES_X
    if far.any():
        xf = x[far]
        r = 1.0 / xf
        acc = np.full(xf.size, cm[-1])
        for c in cm[-2::-1]:
            acc = acc * r + c
        out[far] = coef * xf**e * acc
    near = np.flatnonzero(~far)
    for i in range(0, near.size, chunk):
        sel = near[i : i + chunk]
        xx = x[sel, None] + ts[None, :]
        out[sel] = coef * (xx**e @ ww)
    return out


@lru_cache(maxsize=64)
def _difference_rule(alpha, e, order, n_t, n_s):
    """Product rule for ``y = t + s`` and the binomial series coefficients."""
    rule = gauss_jacobi_rule(n_t, alpha - 1.0, 0.0)
    t = 0.5 * (1.0 + rule.nodes)
    wt = rule.weights * 2.0 ** (-alpha)
    g, w = np.polynomial.legendre.leggauss(n_s)
    u = 0.5 * (1.0 + g)
    s_nodes = np.concatenate([u + k for k in range(order)])
    s_w = 0.5 * np.concatenate([w * f(u + k) for k, f in enumerate(_BSPLINES[order])])
    ts = (t[:, None] + s_nodes[None, :]).ravel()
    ww = (wt[:, None] * s_w[None, :]).ravel()
    # (x + y)^e = x^e sum_m binom(e, m) (y / x)^m, with moments of y
    m = np.arange(_SERIES_TERMS)
    mom = (ts[None, :] ** m[:, None]) @ ww
    binom = np.cumprod(np.concatenate([[1.0], (e - m[:-1]) / (m[:-1] + 1.0)]))
    for arr in (ts, ww, mom):
        arr.setflags(write=False)
    cm = binom * mom
    cm.setflags(write=False)
    return ts, ww, cm


# y = t + s <= 4, so y / x <= 1/64 on the series branch
_SERIES_X = 256.0
_SERIES_TERMS = 24


def lag_tail(alpha: float, p: int, lags) -> np.ndarray:
    """History lag coefficients for lags ``>= 3`` via :func:`kernel_difference`."""
    lags = np.asarray(lags, dtype=float)
    if lags.size and lags.min() < 3:
        raise DomainError("lag_tail needs lags >= 3")
    if p == 0:
        return kernel_difference(alpha, 1.0 - alpha, 2, lags - 1.0)
    s = 2.0 - alpha
    return 0.5 * kernel_difference(alpha, 1.0 - alpha, 3, lags - 2.0) + kernel_difference(
        alpha, s, 3, lags - 2.0
    ) / s
