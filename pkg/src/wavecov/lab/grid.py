"""Periodic 1D grids, wave states and physical parameters."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class Grid1D:
    """Periodic grid on [-L/2, L/2) with N points (N a power of two)."""

    length: float
    points: int

    def __post_init__(self):
        n = self.points
        if n < 2 or n & (n - 1):
            raise ValueError(f"point count must be a power of two, got {n}")
        if not self.length > 0:
            raise ValueError("grid length must be positive")

    @property
    def dx(self) -> float:
        return self.length / self.points

    @property
    def x(self) -> np.ndarray:
        return -self.length / 2 + self.dx * np.arange(self.points)

    @property
    def k(self) -> np.ndarray:
        """Wave numbers in FFT order: 2*pi*n/L for n in [-N/2, N/2)."""
        return 2 * np.pi * np.fft.fftfreq(self.points, d=self.dx)

    def lattice_index(self, k: float, tol: float = 1e-9) -> int:
        """n with k = 2*pi*n/L; raises for wave numbers off the lattice."""
        n = k * self.length / (2 * np.pi)
        r = int(round(n))
        if abs(n - r) > tol or not -self.points // 2 <= r < self.points // 2:
            raise ValueError(f"k = {k!r} is not on the lattice of this grid")
        return r

    def mode(self, k: float) -> np.ndarray:
        self.lattice_index(k)
        return np.exp(1j * k * self.x)

    def l2(self, values: np.ndarray) -> float:
        return float(np.sqrt(np.sum(np.abs(values) ** 2) * self.dx))

    def dx_spectral(self, values: np.ndarray, order: int = 1) -> np.ndarray:
        return np.fft.ifft((1j * self.k) ** order * np.fft.fft(values))


@dataclass(frozen=True)
class PhysicalParams:
    """m, hbar, c, constant V and boost speed v (dimensionless, m = hbar = 1 by default)."""

    m: float = 1.0
    hbar: float = 1.0
    c: float = 10.0
    V: float = 0.0
    v: float = 0.0
    allow_massless: bool = False

    def __post_init__(self):
        for name in ("m", "hbar", "c", "V", "v"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.hbar <= 0 or self.c <= 0:
            raise ValueError("hbar and c must be positive")
        if self.m < 0 or (self.m == 0 and not self.allow_massless):
            raise ValueError("m must be positive (set allow_massless for m = 0)")

    @property
    def beta(self) -> float:
        return self.v / self.c

    @property
    def gamma(self) -> float:
        if abs(self.v) >= self.c:
            raise ValueError("|v| must be below c for Lorentz boosts")
        return 1.0 / np.sqrt(1.0 - self.beta ** 2)

    def with_(self, **kw) -> "PhysicalParams":
        return replace(self, **kw)

    def as_symbols(self) -> dict:
        return {"m": self.m, "hbar": self.hbar, "c": self.c, "V": self.V, "v": self.v}


@dataclass(frozen=True)
class WaveState:
    """Samples of Psi (and of d_t Psi for second-order equations) at time t."""

    grid: Grid1D
    values: np.ndarray
    t: float = 0.0
    dvalues: Optional[np.ndarray] = None
    norms: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.points,):
            raise ValueError("values must have one sample per grid point")
        if not np.all(np.isfinite(vals)):
            raise ValueError("wave state contains non-finite values")
        object.__setattr__(self, "values", vals)
        if self.dvalues is not None:
            dv = np.asarray(self.dvalues, dtype=complex)
            if dv.shape != vals.shape or not np.all(np.isfinite(dv)):
                raise ValueError("bad time-derivative samples")
            object.__setattr__(self, "dvalues", dv)
        if not self.norms:
            object.__setattr__(self, "norms", (self.grid.l2(vals),))

    @property
    def norm(self) -> float:
        return self.grid.l2(self.values)


def gaussian(grid: Grid1D, sigma0: float, k0: float = 0.0, x0: float = 0.0) -> WaveState:
    """exp(-(x-x0)^2 / (2 sigma0^2) + i k0 (x - x0)) at t = 0."""
    x = grid.x
    return WaveState(grid, np.exp(-(x - x0) ** 2 / (2 * sigma0 ** 2) + 1j * k0 * (x - x0)))


def gaussian_exact(x, t, sigma0: float, p: PhysicalParams, k0: float = 0.0, x0: float = 0.0):
    """Free spreading Gaussian (times the constant-V phase) solving the Schrodinger equation."""
    tau = p.hbar * t / (p.m * sigma0 ** 2)
    u = np.asarray(x) - x0
    arg = (-u ** 2 / (2 * sigma0 ** 2) + 1j * k0 * u - 0.5j * k0 ** 2 * sigma0 ** 2 * tau) / (1 + 1j * tau)
    return (1 + 1j * tau) ** -0.5 * np.exp(arg) * np.exp(-1j * p.V * t / p.hbar)
