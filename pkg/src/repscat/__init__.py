"""Stationary scattering for repulsive Hamiltonians ``H = p^2/2 - |x|^alpha/2 + q``.

Main entry points
-----------------
``PotentialSpec``, ``free``, ``power_law``
    Potentials and their validation.
``build_grid``, ``Resolvent``, ``limiting_resolvent``
    Discretization and the limiting resolvent ``R(lambda +- i0)``.
``scattering_matrix``, ``smatrix_sweep``, ``wave_matrix_adjoint``
    Stationary wave matrices, ``S(lambda)`` and generalized eigenfunctions.
``airy_smatrix``, ``ode_smatrix``
    Independent reference values.
"""
from .grid import WaveField, build_grid
from .kernels import BACKEND
from .oracle import airy_smatrix, ode_smatrix
from .potential import PotentialSpec, SpecError, free, power_law, rho_one_power
from .resolvent import Resolvent, SpectralPoint, lap_diagnostic, limiting_resolvent
from .scattering import (extract_asymptotic_xi, parseval_check, scattering_grid,
                         scattering_matrix, smatrix_sweep, wave_matrix_adjoint)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "PotentialSpec", "SpecError", "free", "power_law", "rho_one_power",
    "WaveField", "build_grid", "Resolvent", "SpectralPoint", "limiting_resolvent",
    "lap_diagnostic", "scattering_grid", "scattering_matrix", "smatrix_sweep",
    "wave_matrix_adjoint", "extract_asymptotic_xi", "parseval_check", "airy_smatrix",
    "ode_smatrix",
]
