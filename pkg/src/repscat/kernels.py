"""Kernel selection: compiled extension when importable, SciPy fallback otherwise.

Set ``REPSCAT_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback
if os.environ.get("REPSCAT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    else:
        _impl = _compiled
        BACKEND = "cython"


def band_lu_factor(ab, kl, ku):
    return _impl.band_lu_factor(ab, kl, ku)


def band_lu_solve(lu, piv, kl, ku, b):
    return _impl.band_lu_solve(lu, piv, kl, ku, b)


def band_matvec(ab, kl, ku, v):
    return _impl.band_matvec(ab, kl, ku, v)


def shell_sums(weights, values, shell, nshell):
    return _impl.shell_sums(weights, values, shell, nshell)


def implementations():
    """Mapping of backend name to module, for benchmarks and parity tests."""
    out = {"python": _fallback}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out
