"""Independent mpmath oracles shared by the test modules.

Everything is in step units (``h = 1``, ``t_j = j``).
"""

import mpmath as mp

mp.mp.dps = 30


def local_integral(s, alpha, k):
    """``(1/Gamma(a)) int_k^{k+1} (k+1-v)^(a-1) v^s dv``.

    Substituting ``k + 1 - v = w^(1/a)`` removes the kernel singularity.
    """
    s, a = mp.mpf(s), mp.mpf(alpha)
    f = lambda w: (k + 1 - w ** (1 / a)) ** s  # noqa: E731
    return float(mp.quad(f, [0, 1]) / (a * mp.gamma(a)))


def history_target(s, alpha, k):
    """``k^s - (1/Gamma(a)) int_0^k (k+1-v)^(a-1) D^a[v^s] dv``."""
    s, a = mp.mpf(s), mp.mpf(alpha)
    c = mp.gamma(s + 1) / (mp.gamma(s - a + 1) * mp.gamma(a))
    pts = [0, k] if k <= 1 else [0, 1, k]
    val = mp.quad(lambda v: (k + 1 - v) ** (a - 1) * v ** (s - a), pts)
    return float(mp.mpf(k) ** s - c * val)
