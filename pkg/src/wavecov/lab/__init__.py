"""Spectral wave laboratory: exact per-mode evolution and numerical checks."""
from .grid import Grid1D, PhysicalParams, WaveState, gaussian, gaussian_exact
from .evolve import EQUATIONS, branch_omegas, evolve, particle_branch_state, propagate

__all__ = ["Grid1D", "PhysicalParams", "WaveState", "gaussian", "gaussian_exact", "EQUATIONS",
           "branch_omegas", "evolve", "particle_branch_state", "propagate"]
