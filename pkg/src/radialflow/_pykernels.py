"""Pure-Python/NumPy versions of the hot radial kernels.

These are the reference implementations; ``_ckernels.pyx`` mirrors them
loop-for-loop and the test suite checks that both agree.
"""
import numpy as np


def reverse_cumulative_quad(f, h):
    """Return ``Q[i] = integral of f from t_i to t_last`` on a uniform grid.

    Interval integrals use the four-point cubic Lagrange rule, one-sided at
    both ends, so the composite error is O(h**4).
    """
    f = np.asarray(f, dtype=float)
    n = f.size
    if n < 4:
        raise ValueError("need at least 4 samples")
    seg = np.empty(n - 1)
    seg[1:-1] = (-f[:-3] + 13.0 * f[1:-2] + 13.0 * f[2:-1] - f[3:]) * (h / 24.0)
    seg[0] = (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) * (h / 24.0)
    seg[-1] = (f[-4] - 5.0 * f[-3] + 19.0 * f[-2] + 9.0 * f[-1]) * (h / 24.0)
    out = np.zeros(n)
    out[:-1] = np.cumsum(seg[::-1])[::-1]
    return out


def flow_update(u, resistance, resistance_rho, amplitude, eps):
    """Add ``eps * v`` to ``u`` in place and return ``(v, min u, min v)``.

    ``v = -amplitude * max(0, 1 - I/I_rho)`` is the radial potential that
    vanishes inside the enclosure and tends to ``-amplitude`` at infinity.
    """
    ratio = np.asarray(resistance) / resistance_rho
    v = -amplitude * np.maximum(0.0, 1.0 - ratio)
    u += eps * v
    return v, float(u.min()), float(v.min())


def local_minima(values):
    """Indices of sampled local minima; plateaus report their right end."""
    a = np.asarray(values, dtype=float)
    n = a.size
    out = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and a[j + 1] == a[i]:
            j += 1
        left_ok = i == 0 or a[i - 1] > a[i]
        right_ok = j == n - 1 or a[j + 1] > a[j]
        if left_ok and right_ok:
            out.append(j)
        i = j + 1
    return np.asarray(out, dtype=np.intp)
