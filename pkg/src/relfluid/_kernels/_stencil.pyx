# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled stencil kernels.

Each point is computed with the same floating-point expression tree as the
numpy backend in ``numpy_backend.py`` so the two produce bit-identical
results; do not reorder the arithmetic in one without the other.

Row parallelism uses OpenMP with a static schedule. There are no
reductions, so output does not depend on the thread count.
"""

import numpy as np

cimport cython
from cython.parallel cimport prange
from libc.math cimport sqrt


def arakawa_jacobian(double[:, ::1] f, double[:, ::1] g,
                     double dx, double dy, int num_threads=1):
    """Nine-point conserving Jacobian [f, g] on a periodic grid."""
    cdef Py_ssize_t nx = f.shape[0]
    cdef Py_ssize_t ny = f.shape[1]
    if g.shape[0] != nx or g.shape[1] != ny:
        raise ValueError("field shapes differ")

    out_arr = np.empty((nx, ny), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double inv = 1.0 / (12.0 * dx * dy)
    cdef Py_ssize_t i, j, ip, im, jp, jm
    cdef double t1, t2, t3
    cdef int nt = num_threads if num_threads > 0 else 1

    for i in prange(nx, nogil=True, schedule='static', num_threads=nt):
        ip = i + 1 if i + 1 < nx else 0
        im = i - 1 if i > 0 else nx - 1
        for j in range(ny):
            jp = j + 1 if j + 1 < ny else 0
            jm = j - 1 if j > 0 else ny - 1
            t1 = (f[ip, j] - f[im, j]) * (g[i, jp] - g[i, jm]) \
               - (f[i, jp] - f[i, jm]) * (g[ip, j] - g[im, j])
            t2 = f[ip, j] * (g[ip, jp] - g[ip, jm]) \
               - f[im, j] * (g[im, jp] - g[im, jm]) \
               - f[i, jp] * (g[ip, jp] - g[im, jp]) \
               + f[i, jm] * (g[ip, jm] - g[im, jm])
            t3 = -(g[ip, j] * (f[ip, jp] - f[ip, jm])
                   - g[im, j] * (f[im, jp] - f[im, jm])
                   - g[i, jp] * (f[ip, jp] - f[im, jp])
                   + g[i, jm] * (f[ip, jm] - f[im, jm]))
            out[i, j] = (t1 + t2 + t3) * inv
    return out_arr


def lorentz_gamma_2d(double[:, ::1] px, double[:, ::1] py,
                     double inv_c2, int num_threads=1):
    """Lorentz factor 1/sqrt(1 - |p|^2/c^2) from velocity components."""
    cdef Py_ssize_t nx = px.shape[0]
    cdef Py_ssize_t ny = px.shape[1]
    if py.shape[0] != nx or py.shape[1] != ny:
        raise ValueError("field shapes differ")

    out_arr = np.empty((nx, ny), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef int nt = num_threads if num_threads > 0 else 1

    for i in prange(nx, nogil=True, schedule='static', num_threads=nt):
        for j in range(ny):
            out[i, j] = 1.0 / sqrt(1.0 - (px[i, j] * px[i, j]
                                          + py[i, j] * py[i, j]) * inv_c2)
    return out_arr
