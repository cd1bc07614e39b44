import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repscat import kernels

BACKENDS = kernels.implementations()


def _band(n, kl, ku, seed):
    rng = np.random.default_rng(seed)
    ab = rng.normal(size=(kl + ku + 1, n)) + 1j * rng.normal(size=(kl + ku + 1, n))
    ab[ku] += 4 * (kl + ku + 1)           # diagonally dominant
    return ab


def _dense(ab, kl, ku):
    n = ab.shape[1]
    A = np.zeros((n, n), complex)
    for i in range(n):
        for j in range(max(0, i - kl), min(n, i + ku + 1)):
            A[i, j] = ab[ku + i - j, j]
    return A


@pytest.mark.parametrize("name", sorted(BACKENDS))
@given(st.integers(min_value=1, max_value=40), st.integers(0, 4), st.integers(0, 4),
       st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_backend_matches_dense(name, n, kl, ku, seed):
    mod = BACKENDS[name]
    ab = _band(n, kl, ku, seed)
    A = _dense(ab, kl, ku)
    v = np.random.default_rng(seed + 1).normal(size=n) + 0j
    assert np.allclose(mod.band_matvec(ab, kl, ku, v), A @ v)
    lu, piv, info = mod.band_lu_factor(ab, kl, ku)
    assert info == 0
    x = mod.band_lu_solve(lu, piv, kl, ku, v)
    assert np.allclose(A @ x, v)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
def test_backends_agree_with_pivoting():
    n, kl, ku = 500, 3, 3
    rng = np.random.default_rng(7)
    ab = rng.normal(size=(kl + ku + 1, n)) + 1j * rng.normal(size=(kl + ku + 1, n))
    b = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
    out = []
    for mod in BACKENDS.values():
        lu, piv, _ = mod.band_lu_factor(ab, kl, ku)
        out.append(mod.band_lu_solve(lu, piv, kl, ku, b))
    assert np.allclose(out[0], out[1], rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_shell_sums(name):
    w = np.array([1.0, 2.0, 3.0, 4.0])
    v = np.array([1, 1j, 2, 0.5], complex)
    idx = np.array([0, 1, 1, -1], dtype=np.int64)
    assert np.allclose(BACKENDS[name].shell_sums(w, v, idx, 2), [1.0, 14.0])


def test_environment_forces_fallback():
    env = dict(os.environ, REPSCAT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import repscat.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
