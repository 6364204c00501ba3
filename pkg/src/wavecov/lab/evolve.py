"""Exact per-mode evolution for the Schrodinger, Klein-Gordon and LCSE equations.

Every Fourier mode exp(i(kx - wt)) is propagated with its exact frequency, so
there is no time-stepping error.  Equations second order in time carry two
frequencies per mode; the state (Psi, d_t Psi) is split onto both.
"""
from __future__ import annotations

from dataclasses import replace
from typing import Tuple

import numpy as np

from .grid import PhysicalParams, WaveState

EQUATIONS = ("schrodinger", "klein_gordon", "lcse")


def _check_eq(eq: str) -> None:
    if eq not in EQUATIONS:
        raise ValueError(f"unknown equation {eq!r}; expected one of {EQUATIONS}")


def schrodinger_omega(k, p: PhysicalParams):
    return p.hbar * np.asarray(k) ** 2 / (2 * p.m) + p.V / p.hbar


def klein_gordon_omegas(k, p: PhysicalParams) -> Tuple[np.ndarray, np.ndarray]:
    if p.V != 0:
        raise ValueError("the Klein-Gordon evolver has no potential term; set V = 0")
    w = np.sqrt(p.c ** 2 * np.asarray(k, dtype=float) ** 2 + (p.m * p.c ** 2 / p.hbar) ** 2)
    return w, -w


def lcse_omegas(k, p: PhysicalParams) -> Tuple[np.ndarray, np.ndarray]:
    """Roots of (hbar^2/2mc^2) w^2 + hbar w - (hbar^2 k^2/2m + V) = 0.

    Particle branch first.  The particle root is written as
    (mc^2/hbar) * eps / (sqrt(1+eps) + 1) to avoid cancellation for large c.
    """
    if p.m == 0:
        raise ValueError("the LCSE characteristic needs m > 0")
    rest = p.m * p.c ** 2 / p.hbar
    eps = 2 * (p.hbar ** 2 * np.asarray(k, dtype=float) ** 2 / (2 * p.m) + p.V) / (p.m * p.c ** 2)
    disc = 1 + eps
    if np.any(disc <= 0):
        raise ValueError("LCSE branch degeneracy: discriminant <= 0 (V too negative)")
    root = np.sqrt(disc)
    return rest * eps / (root + 1), -rest * (root + 1)


def branch_omegas(eq: str, k, p: PhysicalParams):
    _check_eq(eq)
    if eq == "schrodinger":
        return (schrodinger_omega(k, p),)
    if eq == "klein_gordon":
        return klein_gordon_omegas(k, p)
    return lcse_omegas(k, p)


def split_branches(psi_hat, dpsi_hat, w1, w2):
    """Amplitudes (a, b) with psi = a + b and d_t psi = -i (w1 a + w2 b)."""
    a = (1j * dpsi_hat - w2 * psi_hat) / (w1 - w2)
    return a, psi_hat - a


def particle_branch_state(eq: str, s: WaveState, p: PhysicalParams) -> WaveState:
    """Attach d_t Psi so that every mode sits on the particle branch."""
    w = branch_omegas(eq, s.grid.k, p)[0]
    d = np.fft.ifft(-1j * w * np.fft.fft(s.values))
    return replace(s, dvalues=d, norms=())


def propagate(eq: str, s: WaveState, p: PhysicalParams, dt: float) -> WaveState:
    """Advance by a signed time step ``dt``."""
    _check_eq(eq)
    k = s.grid.k
    psi = np.fft.fft(s.values)
    if eq == "schrodinger":
        out = np.fft.ifft(psi * np.exp(-1j * schrodinger_omega(k, p) * dt))
        return WaveState(s.grid, out, s.t + dt, None, s.norms + (s.grid.l2(out),))
    if s.dvalues is None:
        raise ValueError(f"{eq} needs the time derivative d_t Psi in the state")
    w1, w2 = branch_omegas(eq, k, p)
    a, b = split_branches(psi, np.fft.fft(s.dvalues), w1, w2)
    e1, e2 = np.exp(-1j * w1 * dt), np.exp(-1j * w2 * dt)
    out = np.fft.ifft(a * e1 + b * e2)
    dout = np.fft.ifft(-1j * (w1 * a * e1 + w2 * b * e2))
    return WaveState(s.grid, out, s.t + dt, dout, s.norms + (s.grid.l2(out),))


def evolve(eq: str, s: WaveState, p: PhysicalParams, t_final: float) -> WaveState:
    """Evolve ``s`` from s.t to ``t_final`` (>= s.t)."""
    if t_final < s.t:
        raise ValueError("t_final must not precede the state time")
    return propagate(eq, s, p, t_final - s.t)
