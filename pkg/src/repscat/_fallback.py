"""Pure-Python implementations of the band kernels (LAPACK through SciPy)."""
from __future__ import annotations

import numpy as np
from scipy.linalg import lapack


def band_lu_factor(ab, kl, ku):
    n = ab.shape[1]
    work = np.zeros((2 * kl + ku + 1, n), dtype=np.complex128)
    work[kl:] = ab
    lu, piv, info = lapack.zgbtrf(work, kl, ku)
    return lu, piv, info


def band_lu_solve(lu, piv, kl, ku, b):
    b = np.asarray(b, dtype=np.complex128)
    x, info = lapack.zgbtrs(lu, kl, ku, b, piv)
    if info != 0:
        raise np.linalg.LinAlgError(f"zgbtrs failed with info={info}")
    return x


def band_matvec(ab, kl, ku, v):
    n = ab.shape[1]
    out = np.zeros(n, dtype=np.result_type(ab, v))
    for k in range(max(-kl, 1 - n), min(ku, n - 1) + 1):
        row = ku - k
        if k >= 0:
            out[: n - k] += ab[row, k:] * v[k:]
        else:
            out[-k:] += ab[row, : n + k] * v[: n + k]
    return out


def shell_sums(weights, values, shell, nshell):
    keep = (shell >= 0) & (shell < nshell)
    return np.bincount(shell[keep], weights=weights[keep] * np.abs(values[keep]) ** 2,
                       minlength=nshell).astype(float)[:nshell]
