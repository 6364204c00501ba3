"""Numerical checks of the symbolic results.

Time derivatives of constructed fields use fourth-order central differences;
space derivatives are spectral.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence

import numpy as np

from ..solver import DispersionTarget
from .evolve import schrodinger_omega, branch_omegas, evolve, particle_branch_state, propagate
from .grid import Grid1D, PhysicalParams, WaveState, gaussian, gaussian_exact

DEFAULT_GRID = Grid1D(32 * np.pi, 1024)


def fd_first(f: Callable[[float], np.ndarray], t: float, h: float) -> np.ndarray:
    return (f(t - 2 * h) - 8 * f(t - h) + 8 * f(t + h) - f(t + 2 * h)) / (12 * h)


def fd_second(f: Callable[[float], np.ndarray], t: float, h: float) -> np.ndarray:
    return (-f(t - 2 * h) + 16 * f(t - h) - 30 * f(t) + 16 * f(t + h) - f(t + 2 * h)) / (12 * h * h)


def _terms_schrodinger(grid, field_at, t, p, h):
    psi = field_at(t)
    return [1j * p.hbar * fd_first(field_at, t, h), p.hbar ** 2 / (2 * p.m) * grid.dx_spectral(psi, 2),
            -p.V * psi]


def _terms_lcse(grid, field_at, t, p, h):
    return [-p.hbar ** 2 / (2 * p.m * p.c ** 2) * fd_second(field_at, t, h)] + \
        _terms_schrodinger(grid, field_at, t, p, h)


def _terms_klein_gordon(grid, field_at, t, p, h):
    psi = field_at(t)
    return [fd_second(field_at, t, h) / p.c ** 2, -grid.dx_spectral(psi, 2), (p.m * p.c / p.hbar) ** 2 * psi]


TERMS = {"schrodinger": _terms_schrodinger, "lcse": _terms_lcse, "klein_gordon": _terms_klein_gordon}


def relative_residual(eq: str, grid: Grid1D, field_at, t: float, p: PhysicalParams, h: float) -> float:
    """max |sum of terms| divided by the largest single term (or by |Psi|)."""
    terms = TERMS[eq](grid, field_at, t, p, h)
    scale = max([np.abs(u).max() for u in terms] + [np.abs(field_at(t)).max()])
    return float(np.abs(sum(terms)).max() / scale)


# boosts -----------------------------------------------------------------------

@dataclass
class BoostReport:
    eq: str
    boost: str
    t: float
    residual: float
    l2_discrepancy: float = 0.0
    omega: float = float("nan")
    k: float = float("nan")
    omega_expected: float = float("nan")
    k_expected: float = float("nan")

    @property
    def omega_error(self) -> float:
        return _rel(self.omega, self.omega_expected)

    @property
    def k_error(self) -> float:
        return _rel(self.k, self.k_expected)

    def as_row(self) -> dict:
        return {"eq": self.eq, "boost": self.boost, "t": self.t, "residual": self.residual,
                "l2_discrepancy": self.l2_discrepancy, "omega": self.omega, "omega_expected": self.omega_expected,
                "omega_error": self.omega_error, "k": self.k, "k_expected": self.k_expected,
                "k_error": self.k_error}


def _rel(a: float, b: float) -> float:
    if np.isnan(a) or np.isnan(b):
        return float("nan")
    return abs(a - b) / abs(b) if b != 0 else abs(a)


def galilean_multiplier(x_p, t_p, p: PhysicalParams):
    """exp[(i/hbar)(m v^2 t'/2 + m v x')]."""
    return np.exp(1j / p.hbar * (p.m * p.v ** 2 * t_p / 2 + p.m * p.v * x_p))


def lorentz_multiplier(x_p, t_p, p: PhysicalParams):
    """exp{(i/hbar)[(gamma - 1) m c^2 t' + gamma m v x']}."""
    g = p.gamma
    return np.exp(1j / p.hbar * ((g - 1) * p.m * p.c ** 2 * t_p + g * p.m * p.v * x_p))


def boost_check(eq: str, packet: WaveState, p: PhysicalParams, boost: str, t: float = 1.0,
                sigma0: float = 1.0, h: float = 1e-3) -> BoostReport:
    """Boost a known S' solution into S and test it there.

    Galilean (Schrodinger): ``packet`` is the t' = 0 Gaussian of width ``sigma0``
    centred at 0; Psi = g Psi' is compared with the S-frame equation and with a
    direct spectral evolution of Psi(x, 0).
    Lorentz (LCSE, Klein-Gordon): ``packet`` is the constant rest-frame
    amplitude; the boosted plane wave is tested against the S-frame equation
    and its (omega, k) are measured.
    """
    grid = packet.grid
    x = grid.x
    if boost == "galilean":
        if eq != "schrodinger":
            raise ValueError("Galilean boost checks apply to the Schrodinger equation")
        edge = np.abs(gaussian_exact(np.array([x[0], x[-1]]) - p.v * t, t, sigma0, p)).max()
        if edge > 1e-12 or np.abs(packet.values[[0, -1]]).max() > 1e-12:
            raise ValueError("packet leaves the periodic window; enlarge the grid")

        def field_at(tt):
            xp = x - p.v * tt
            return galilean_multiplier(xp, tt, p) * gaussian_exact(xp, tt, sigma0, p)

        psi0 = galilean_multiplier(x, 0.0, p) * packet.values
        direct = evolve("schrodinger", WaveState(grid, psi0), p, t).values
        built = field_at(t)
        res = relative_residual("schrodinger", grid, field_at, t, p, h)
        l2 = grid.l2(direct - built) / grid.l2(built)
        return BoostReport(eq, boost, t, float(res), float(l2))
    if boost != "lorentz":
        raise ValueError(f"unknown boost {boost!r}")
    if eq not in ("lcse", "klein_gordon"):
        raise ValueError("Lorentz boost checks apply to the LCSE and Klein-Gordon equations")
    g, v, c = p.gamma, p.v, p.c
    amp = packet.values[0]
    if not np.allclose(packet.values, amp, rtol=0, atol=1e-14 * max(1.0, abs(amp))):
        raise ValueError("the Lorentz check expects a constant rest-frame amplitude")
    w_rest = float(branch_omegas(eq, 0.0, p)[0])
    mult = lorentz_multiplier if eq == "lcse" else (lambda xp, tp, pp: 1.0)

    def field_at(tt):
        tp = g * (tt - v * x / c ** 2)
        xp = g * (x - v * tt)
        return amp * mult(xp, tp, p) * np.exp(-1j * w_rest * tp)

    # phase a t' + b x' seen in S as k x - w t
    a = ((g - 1) * p.m * c ** 2 / p.hbar if eq == "lcse" else 0.0) - w_rest
    b = g * p.m * v / p.hbar if eq == "lcse" else 0.0
    k_exp, w_exp = b * g - a * g * v / c ** 2, b * g * v - a * g
    grid.lattice_index(k_exp)
    psi = field_at(t)
    # keep omega*h near 1e-2: truncation and round-off both stay far below 1e-8
    w_max = max(abs(w_exp), abs(w_rest) * g, 1.0)
    res = relative_residual(eq, grid, field_at, t, p, min(h, 1e-2 / w_max))
    k_meas = float(np.mean(np.real(-1j * grid.dx_spectral(psi) / psi)))
    tau = 0.1 / max(abs(w_exp), 1.0)
    w_meas = float(np.mean(-np.angle(field_at(t + tau) / psi) / tau))
    return BoostReport(eq, boost, t, float(res), 0.0, w_meas, k_meas, float(w_exp), float(k_exp))


def lorentz_window(p: PhysicalParams, eq: str = "lcse", min_length: float = 32 * np.pi,
                   points: int = 1024) -> Grid1D:
    """A grid on which the boosted rest-frame plane wave is periodic."""
    if eq == "lcse":
        k = p.gamma ** 2 * p.m * p.v / p.hbar - p.gamma * ((p.gamma - 1) * p.m * p.c ** 2 / p.hbar) * p.v / p.c ** 2
    else:
        k = p.gamma * p.m * p.c ** 2 / p.hbar * p.v / p.c ** 2
    if k == 0:
        return Grid1D(min_length, points)
    n = max(1, int(np.ceil(abs(k) * min_length / (2 * np.pi))))
    return Grid1D(2 * np.pi * n / abs(k), points)


# dispersion -----------------------------------------------------------------------

@dataclass
class DispersionRow:
    eq: str
    branch: str
    k: float
    omega_measured: float
    omega_analytic: float

    @property
    def error(self) -> float:
        return _rel(self.omega_measured, self.omega_analytic)

    def as_row(self) -> dict:
        return {"eq": self.eq, "branch": self.branch, "k": self.k, "omega_measured": self.omega_measured,
                "omega_analytic": self.omega_analytic, "error": self.error}


def analytic_target(eq: str) -> DispersionTarget:
    if eq == "schrodinger":
        return DispersionTarget.constant_potential()
    if eq == "klein_gordon":
        return DispersionTarget.relativistic()
    if eq == "lcse":
        return DispersionTarget.lcse()
    raise ValueError(f"unknown equation {eq!r}")


def measure_dispersion(eq: str, p: PhysicalParams, k_list: Sequence[float], grid: Grid1D = DEFAULT_GRID,
                       samples: int = 8) -> List[DispersionRow]:
    """Evolve single-mode states and read omega off the unwrapped phase slope."""
    if samples < 3:
        raise ValueError("need at least three sample times")
    target = analytic_target(eq)
    rows = []
    for k in k_list:
        n = grid.lattice_index(k)
        mode = grid.mode(k)
        branches = branch_omegas(eq, grid.k[n % grid.points], p)
        analytic = target.omega(k, p.as_symbols())
        names = ("particle",) if eq == "schrodinger" else ("particle", "antiparticle")
        # ascending roots: antiparticle first for the two-branch equations
        table = {"particle": analytic[-1], "antiparticle": analytic[0]}
        for name, w in zip(names, branches):
            w = float(w)
            s = WaveState(grid, mode, 0.0, None if eq == "schrodinger" else -1j * w * mode)
            dt = 0.5 / max(abs(w), 1.0)
            times = dt * np.arange(samples)
            phases = []
            for tt in times:
                amp = np.mean(evolve(eq, s, p, tt).values * np.conj(mode))
                phases.append(np.angle(amp))
            slope = np.polyfit(times, np.unwrap(phases), 1)[0]
            rows.append(DispersionRow(eq, name, float(k), float(-slope), float(table[name])))
    return rows


# non-relativistic limit ----------------------------------------------------------

@dataclass
class ConvergenceTable:
    rows: List[Dict[str, float]] = field(default_factory=list)
    slope: float = float("nan")


def nr_limit_study(c_list: Sequence[float], packet: WaveState, p: PhysicalParams,
                   t_final: float = 1.0) -> ConvergenceTable:
    """L2 distance between LCSE and Schrodinger evolutions of the same packet."""
    schr = evolve("schrodinger", packet, p, t_final).values
    table = ConvergenceTable()
    for c in c_list:
        pc = p.with_(c=float(c))
        lcse = evolve("lcse", particle_branch_state("lcse", packet, pc), pc, t_final).values
        table.rows.append({"c": float(c), "error": packet.grid.l2(lcse - schr)})
    if len({r["c"] for r in table.rows}) >= 2:
        lc = np.log([r["c"] for r in table.rows])
        le = np.log([r["error"] for r in table.rows])
        table.slope = float(np.polyfit(lc, le, 1)[0])
    return table


def multiplier_phase_difference(beta: float, p: PhysicalParams, x: np.ndarray, t: float) -> Dict[str, float]:
    """Largest gap between the LCSE and Galilean multiplier phases at speed beta*c."""
    v = beta * p.c
    g = 1.0 / np.sqrt(1.0 - beta ** 2)
    lcse = ((g - 1) * p.m * p.c ** 2 * t + g * p.m * v * x) / p.hbar
    gal = (p.m * v ** 2 * t / 2 + p.m * v * x) / p.hbar
    gap = float(np.abs(lcse - gal).max())
    return {"beta": beta, "max_phase_difference": gap, "relative": gap / float(np.abs(gal).max())}


# fourth-order residuals ------------------------------------------------------------

def apply_square_constant_v(grid: Grid1D, field_at, t: float, p: PhysicalParams, h: float = 2e-3,
                            time_derivatives=None) -> np.ndarray:
    """S^2 Psi with S = (hbar^2/2m) d_x^2 + i hbar d_t - V, constant V."""

    def spatial(u):
        return p.hbar ** 2 / (2 * p.m) * grid.dx_spectral(u, 2) - p.V * u

    psi = field_at(t)
    if time_derivatives is None:
        d1, d2 = fd_first(field_at, t, h), fd_second(field_at, t, h)
    else:
        d1, d2 = time_derivatives
    return spatial(spatial(psi)) + 2j * p.hbar * spatial(d1) - p.hbar ** 2 * d2


def fourth_order_residual(packet: WaveState, p: PhysicalParams, times: Sequence[float],
                          h: float = 2e-3, time_derivative: str = "fd") -> List[Dict[str, float]]:
    """max |S^2 Psi| / ||Psi|| along a Schrodinger evolution of ``packet``.

    ``time_derivative`` is "fd" (fourth-order differences of the evolved
    field, step ``h``) or "spectral" (d_t = -i w(k) per mode, exact).
    """
    grid = packet.grid

    def field_at(tt):
        return propagate("schrodinger", packet, p, tt - packet.t).values

    if time_derivative == "spectral":
        w = schrodinger_omega(grid.k, p)

        def dt(u, n):
            return np.fft.ifft((-1j * w) ** n * np.fft.fft(u))
    elif time_derivative != "fd":
        raise ValueError("time_derivative must be 'fd' or 'spectral'")

    rows = []
    for t in times:
        if time_derivative == "fd":
            sq = apply_square_constant_v(grid, field_at, t, p, h)
        else:
            psi = field_at(t)
            sq = apply_square_constant_v(grid, field_at, t, p, h, (dt(psi, 1), dt(psi, 2)))
        rows.append({"t": float(t), "residual": float(np.abs(sq).max() / grid.l2(field_at(t)))})
    return rows


def square_mismatch_position_v(p: PhysicalParams, grid: Grid1D = DEFAULT_GRID, omega: float = 0.7,
                               sigma0: float = 2.0, k0: float = 1.0) -> Dict[str, float]:
    """S^2 Psi minus the fourth-order family with V promoted to V(x) = cos x.

    Psi = phi(x) exp(-i omega t) so time derivatives are exact.  The difference
    must equal -(hbar^2/m) V' Psi' - (hbar^2/2m) V'' Psi; the first (gradient)
    term is the part no choice of f can absorb.
    """
    x = grid.x
    V = np.cos(x)
    dV, d2V = -np.sin(x), -np.cos(x)
    phi = np.exp(-x ** 2 / (2 * sigma0 ** 2) + 1j * k0 * x)
    hb, m = p.hbar, p.m
    dt = -1j * omega

    def s_op(u):
        return hb ** 2 / (2 * m) * grid.dx_spectral(u, 2) + 1j * hb * dt * u - V * u

    square = s_op(s_op(phi))
    lap = grid.dx_spectral(phi, 2)
    family = (hb ** 4 / (4 * m ** 2) * grid.dx_spectral(phi, 4) + 1j * hb ** 3 / m * dt * lap
              - hb ** 2 * dt ** 2 * phi - V * hb ** 2 / m * lap - 2j * V * hb * dt * phi + V ** 2 * phi)
    cross = -hb ** 2 / m * dV * grid.dx_spectral(phi)
    absorbed = -hb ** 2 / (2 * m) * d2V * phi
    diff = square - family
    scale = np.abs(square).max()
    return {"max_mismatch": float(np.abs(diff).max() / scale),
            "max_cross_term": float(np.abs(cross).max() / scale),
            "max_unexplained": float(np.abs(diff - cross - absorbed).max() / scale)}


def default_packet(grid: Grid1D = DEFAULT_GRID, sigma0: float = 1.0, k0: float = 0.0) -> WaveState:
    return gaussian(grid, sigma0, k0)
