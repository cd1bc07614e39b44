"""Compiled versus fallback band kernels on a representative Hamiltonian.

Usage: ``python benchmarks/bench_kernels.py [--nodes N] [--repeat R]``.
Prints wall-clock medians for each backend and kernel, and the maximum
difference between the backends' results.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from repscat.grid import assemble_hamiltonian, build_grid
from repscat.kernels import implementations
from repscat.potential import free


def hamiltonian(nodes: float):
    spec = free(1.0)
    L = 40.0
    ppw = 48.0
    grid = build_grid(spec, 2.0, L, ppw=ppw)
    ppw *= nodes / grid.n
    grid = build_grid(spec, 2.0, L, ppw=ppw)
    return assemble_hamiltonian(grid, z=1.0, sign=1)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nodes", type=float, default=2e5)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    op = hamiltonian(args.nodes)
    ab, kl, ku = op.ab, op.kl, op.ku
    rng = np.random.default_rng(0)
    v = rng.normal(size=ab.shape[1]) + 1j * rng.normal(size=ab.shape[1])
    print(f"n = {ab.shape[1]}, kl = {kl}, ku = {ku}")
    results = {}
    for name, mod in implementations().items():
        lu, piv, info = mod.band_lu_factor(ab, kl, ku)
        cases = {
            "factor": lambda: mod.band_lu_factor(ab, kl, ku),
            "solve": lambda: mod.band_lu_solve(lu, piv, kl, ku, v),
            "matvec": lambda: mod.band_matvec(ab, kl, ku, v),
        }
        for kernel, fn in cases.items():
            t = np.median(timeit.repeat(fn, number=1, repeat=args.repeat))
            print(f"{name:>7s} {kernel:>7s} {1e3 * t:9.2f} ms")
        results[name] = (mod.band_lu_solve(lu, piv, kl, ku, v), mod.band_matvec(ab, kl, ku, v))
    if len(results) == 2:
        (xs, ms), (xc, mc) = results["python"], results["cython"]
        rel = lambda a, b: np.max(np.abs(a - b)) / np.max(np.abs(a))  # noqa: E731
        print(f"relative solve difference  = {rel(xs, xc):.2e}")
        print(f"relative matvec difference = {rel(ms, mc):.2e}")


if __name__ == "__main__":
    main()
