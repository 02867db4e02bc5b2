# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def reverse_cumulative_quad(f_in, double h):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] f = np.ascontiguousarray(f_in, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0]
    if n < 4:
        raise ValueError("need at least 4 samples")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n, dtype=np.float64)
    cdef double acc = 0.0
    cdef double c = h / 24.0
    cdef Py_ssize_t i
    for i in range(n - 2, -1, -1):
        if i == n - 2:
            acc += (f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1]) * c
        elif i == 0:
            acc += (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) * c
        else:
            acc += (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]) * c
        out[i] = acc
    return out


def flow_update(cnp.ndarray[cnp.float64_t, ndim=1] u, resistance_in,
                double resistance_rho, double amplitude, double eps):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] res = np.ascontiguousarray(resistance_in, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v = np.empty(n, dtype=np.float64)
    cdef double umin = 1e300, vmin = 1e300, w
    cdef Py_ssize_t i
    for i in range(n):
        w = 1.0 - res[i] / resistance_rho
        if w < 0.0:
            w = 0.0
        v[i] = -amplitude * w
        u[i] += eps * v[i]
        if u[i] < umin:
            umin = u[i]
        if v[i] < vmin:
            vmin = v[i]
    return v, umin, vmin


def local_minima(values_in):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a = np.ascontiguousarray(values_in, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i = 0, j
    cdef bint left_ok, right_ok
    out = []
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
