# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled band kernels: LU with partial pivoting, triangular solves, matvec.

Band storage follows LAPACK: ``ab[ku + i - j, j] = A[i, j]``. The factor
carries ``kl`` extra leading rows for pivoting fill-in.
"""
import numpy as np
cimport numpy as cnp

ctypedef double complex cplx

cdef inline double cabs2(cplx z) nogil:
    return z.real * z.real + z.imag * z.imag


def band_lu_factor(cplx[:, :] ab, int kl, int ku):
    """Factor a band matrix; returns ``(lu, piv, info)``."""
    cdef Py_ssize_t n = ab.shape[1]
    cdef int kv = kl + ku
    lu_arr = np.zeros((2 * kl + ku + 1, n), dtype=np.complex128, order="F")
    cdef cplx[::1, :] lu = lu_arr
    piv_arr = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t[::1] piv = piv_arr
    cdef Py_ssize_t i, j, c, jp, km, ju, top
    cdef double best, val
    cdef cplx tmp, inv, factor
    cdef int info = 0
    lu_arr[kl:, :] = np.asarray(ab)
    with nogil:
        ju = 0
        for j in range(n):
            km = kl if kl < n - 1 - j else n - 1 - j
            jp = 0
            best = cabs2(lu[kv, j])
            for i in range(1, km + 1):
                val = cabs2(lu[kv + i, j])
                if val > best:
                    best = val
                    jp = i
            piv[j] = j + jp
            if best == 0.0:
                if info == 0:
                    info = j + 1
                continue
            top = j + ku + jp
            if top > n - 1:
                top = n - 1
            if top > ju:
                ju = top
            if jp != 0:
                for c in range(j, ju + 1):
                    tmp = lu[kv + jp + j - c, c]
                    lu[kv + jp + j - c, c] = lu[kv + j - c, c]
                    lu[kv + j - c, c] = tmp
            inv = 1.0 / lu[kv, j]
            for i in range(1, km + 1):
                lu[kv + i, j] = lu[kv + i, j] * inv
            for c in range(j + 1, ju + 1):
                factor = lu[kv + j - c, c]
                if factor.real != 0.0 or factor.imag != 0.0:
                    for i in range(1, km + 1):
                        lu[kv + i + j - c, c] = lu[kv + i + j - c, c] - lu[kv + i, j] * factor
    return lu_arr, piv_arr, info


def band_lu_solve(cplx[::1, :] lu, Py_ssize_t[::1] piv, int kl, int ku, b):
    """Solve with a factor from :func:`band_lu_factor`; ``b`` is 1-D or 2-D."""
    rhs_arr = np.array(b, dtype=np.complex128, order="F", copy=True)
    squeeze = rhs_arr.ndim == 1
    if squeeze:
        rhs_arr = rhs_arr[:, None]
    rhs_arr = np.asfortranarray(rhs_arr)
    cdef cplx[::1, :] x = rhs_arr
    cdef Py_ssize_t n = lu.shape[1]
    cdef Py_ssize_t nrhs = x.shape[1]
    cdef int kv = kl + ku
    cdef Py_ssize_t j, i, r, l, lm, um
    cdef cplx tmp, xj
    with nogil:
        for r in range(nrhs):
            for j in range(n - 1):
                lm = kl if kl < n - 1 - j else n - 1 - j
                l = piv[j]
                if l != j:
                    tmp = x[l, r]
                    x[l, r] = x[j, r]
                    x[j, r] = tmp
                xj = x[j, r]
                for i in range(1, lm + 1):
                    x[j + i, r] = x[j + i, r] - lu[kv + i, j] * xj
            for j in range(n - 1, -1, -1):
                x[j, r] = x[j, r] / lu[kv, j]
                xj = x[j, r]
                um = kv if kv < j else j
                for i in range(1, um + 1):
                    x[j - i, r] = x[j - i, r] - lu[kv - i, j] * xj
    if squeeze:
        return rhs_arr[:, 0]
    return rhs_arr


def band_matvec(cplx[:, ::1] ab, int kl, int ku, cplx[::1] v):
    """``A @ v`` for a band matrix in LAPACK storage (one write per output)."""
    cdef Py_ssize_t n = ab.shape[1]
    out_arr = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] out = out_arr
    cdef Py_ssize_t i, k, lo, hi
    cdef cplx acc
    with nogil:
        for i in range(n):
            lo = -kl if i - kl >= 0 else -i
            hi = ku if i + ku < n else n - 1 - i
            acc = 0
            for k in range(lo, hi + 1):
                acc = acc + ab[ku - k, i + k] * v[i + k]
            out[i] = acc
    return out_arr


def shell_sums(double[::1] weights, cplx[::1] values, long[::1] shell, Py_ssize_t nshell):
    """Per-shell sums of ``weights * |values|^2`` (index -1 is skipped)."""
    out_arr = np.zeros(nshell, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, s
    cdef Py_ssize_t n = values.shape[0]
    with nogil:
        for i in range(n):
            s = shell[i]
            if s >= 0 and s < nshell:
                out[s] = out[s] + weights[i] * cabs2(values[i])
    return out_arr
