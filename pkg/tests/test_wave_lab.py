import numpy as np
import pytest
from hypothesis import given, strategies as st

from wavecov.lab import checks
from wavecov.lab.evolve import (branch_omegas, evolve, lcse_omegas, particle_branch_state, propagate,
                                split_branches)
from wavecov.lab.grid import Grid1D, PhysicalParams, WaveState, gaussian, gaussian_exact
from wavecov.lab.tables import csv_text, fmt

GRID = Grid1D(32 * np.pi, 1024)
P = PhysicalParams()


def mode_state(eq, k, p=P, branch=0, grid=GRID):
    m = grid.mode(k)
    if eq == "schrodinger":
        return WaveState(grid, m)
    w = float(branch_omegas(eq, k, p)[branch])
    return WaveState(grid, m, 0.0, -1j * w * m)


# grid and params ---------------------------------------------------------------------

def test_grid_validation():
    with pytest.raises(ValueError):
        Grid1D(10.0, 1000)
    with pytest.raises(ValueError):
        Grid1D(-1.0, 64)
    g = Grid1D(2 * np.pi, 8)
    assert g.dx == pytest.approx(np.pi / 4)
    assert sorted(g.k) == pytest.approx(list(range(-4, 4)))


def test_non_lattice_k_rejected():
    with pytest.raises(ValueError):
        GRID.mode(0.3)
    with pytest.raises(ValueError):
        checks.measure_dispersion("schrodinger", P, [0.3])


def test_params_validation():
    with pytest.raises(ValueError):
        PhysicalParams(m=0)
    PhysicalParams(m=0, allow_massless=True)
    with pytest.raises(ValueError):
        PhysicalParams(v=10.0).gamma
    with pytest.raises(ValueError):
        PhysicalParams(c=float("nan"))


def test_non_finite_state_rejected():
    vals = np.ones(GRID.points, complex)
    vals[3] = np.nan
    with pytest.raises(ValueError):
        WaveState(GRID, vals)


# evolution -----------------------------------------------------------------------

def test_schrodinger_mode_phase():
    out = evolve("schrodinger", mode_state("schrodinger", 2.0), P, 1.0)
    assert np.allclose(out.values, GRID.mode(2.0) * np.exp(-2j), atol=1e-13)


def test_lcse_particle_frequency():
    assert lcse_omegas(1.0, P)[0] == pytest.approx(100 * (np.sqrt(1.01) - 1), rel=1e-14)
    assert lcse_omegas(1.0, P)[0] == pytest.approx(0.4987562112089, rel=1e-12)


def test_klein_gordon_frequency():
    assert branch_omegas("klein_gordon", 1.0, P)[0] == pytest.approx(np.sqrt(10100), rel=1e-15)


def test_lcse_degeneracy_reported():
    with pytest.raises(ValueError, match="discriminant"):
        lcse_omegas(0.0, P.with_(V=-60.0))


def test_klein_gordon_rejects_potential():
    with pytest.raises(ValueError):
        branch_omegas("klein_gordon", 1.0, P.with_(V=1.0))


def test_second_order_needs_derivative():
    with pytest.raises(ValueError):
        evolve("lcse", WaveState(GRID, GRID.mode(1.0)), P, 1.0)


def test_backwards_final_time_rejected():
    s = WaveState(GRID, GRID.mode(1.0), t=2.0)
    with pytest.raises(ValueError):
        evolve("schrodinger", s, P, 1.0)


def test_unknown_equation():
    with pytest.raises(ValueError):
        evolve("dirac", WaveState(GRID, GRID.mode(1.0)), P, 1.0)


@pytest.mark.parametrize("eq", ["schrodinger", "klein_gordon", "lcse"])
@pytest.mark.parametrize("branch", [0, 1])
def test_mode_exactness(eq, branch):
    if eq == "schrodinger" and branch:
        return
    k, t = 3.0, 0.37
    w = float(branch_omegas(eq, k, P)[branch])
    out = evolve(eq, mode_state(eq, k, branch=branch), P, t)
    assert np.abs(out.values - GRID.mode(k) * np.exp(-1j * w * t)).max() < 1e-12


@given(st.floats(-50, 50), st.floats(0.1, 3.0), st.floats(-2, 2))
def test_schrodinger_norm_conservation(dt, sigma, k0):
    s = gaussian(GRID, sigma, k0)
    out = propagate("schrodinger", s, P, dt)
    assert abs(out.norm - s.norm) / s.norm <= 1e-12


@pytest.mark.parametrize("eq", ["schrodinger", "klein_gordon", "lcse"])
@given(dt=st.floats(0.01, 5.0))
def test_time_reversal(eq, dt):
    s = gaussian(GRID, 1.5, 0.5)
    if eq != "schrodinger":
        s = particle_branch_state(eq, s, P)
        s = WaveState(GRID, s.values, 0.0, s.dvalues + 0.1 * s.values)  # mix in the other branch
    back = propagate(eq, propagate(eq, s, P, dt), P, -dt)
    assert np.abs(back.values - s.values).max() <= 1e-12 * np.abs(s.values).max() * 10
    if eq != "schrodinger":
        assert np.abs(back.dvalues - s.dvalues).max() <= 1e-12 * np.abs(s.dvalues).max() * 10


def test_branch_completeness():
    rng = np.random.default_rng(0)
    psi = rng.normal(size=64) + 1j * rng.normal(size=64)
    dpsi = rng.normal(size=64) + 1j * rng.normal(size=64)
    w1, w2 = lcse_omegas(np.arange(64.0), P)
    a, b = split_branches(psi, dpsi, w1, w2)
    assert np.allclose(a + b, psi, rtol=0, atol=1e-12)
    assert np.allclose(-1j * (w1 * a + w2 * b), dpsi, rtol=0, atol=1e-10)


def test_norms_tracked():
    out = evolve("lcse", particle_branch_state("lcse", gaussian(GRID, 1.0), P), P, 1.0)
    assert len(out.norms) == 2


def test_gaussian_oracle_matches_evolution():
    s = gaussian(GRID, 1.0, 0.7)
    for t in (0.5, 1.0, 3.0):
        out = evolve("schrodinger", s, P.with_(V=0.4), t)
        exact = gaussian_exact(GRID.x, t, 1.0, P.with_(V=0.4), 0.7)
        assert GRID.l2(out.values - exact) / GRID.l2(exact) < 1e-12


# finite differences ----------------------------------------------------------------

def test_fd_convergence_order():
    def field(t):
        return gaussian_exact(GRID.x, t, 1.0, P)

    exact = -1j * (-0.5 * GRID.dx_spectral(field(0.4), 2))  # d_t psi from the equation
    errs = [np.abs(checks.fd_first(field, 0.4, h) - exact).max() for h in (0.04, 0.02)]
    assert 2 ** 3.8 < errs[0] / errs[1] < 2 ** 4.2


# checks ---------------------------------------------------------------------------

def test_galilean_boost_check():
    r = checks.boost_check("schrodinger", gaussian(GRID, 1.0), P.with_(v=1.0), "galilean")
    assert r.l2_discrepancy < 1e-6 and r.residual < 1e-8


def test_boost_rest_is_identity():
    r = checks.boost_check("schrodinger", gaussian(GRID, 1.0), P, "galilean")
    assert r.residual < 1e-10
    g = checks.lorentz_window(P)
    r = checks.boost_check("lcse", WaveState(g, np.ones(g.points)), P, "lorentz")
    assert r.residual == 0 and r.omega == 0 and r.k == 0


def test_boost_window_error():
    small = Grid1D(8.0, 256)
    with pytest.raises(ValueError, match="window"):
        checks.boost_check("schrodinger", gaussian(small, 1.0), P.with_(v=3.0), "galilean")


def test_lorentz_boost_needs_periodic_window():
    p = P.with_(v=3.0)
    with pytest.raises(ValueError):
        checks.boost_check("lcse", WaveState(GRID, np.ones(GRID.points)), p, "lorentz")


@pytest.mark.parametrize("eq", ["lcse", "klein_gordon"])
def test_lorentz_boost_check(eq):
    p = P.with_(v=3.0)
    g = checks.lorentz_window(p, eq)
    r = checks.boost_check(eq, WaveState(g, np.ones(g.points)), p, "lorentz")
    assert r.residual < 1e-8 and r.omega_error < 1e-10 and r.k_error < 1e-10


def test_dispersion_examples():
    rows = checks.measure_dispersion("schrodinger", P, [1, 2, 4])
    assert [r.omega_measured for r in rows] == pytest.approx([0.5, 2, 8], rel=1e-12)
    kg = checks.measure_dispersion("klein_gordon", P, [0])
    assert [r.omega_measured for r in kg] == pytest.approx([100, -100], rel=1e-12)


def test_dispersion_needs_three_samples():
    with pytest.raises(ValueError):
        checks.measure_dispersion("schrodinger", P, [1], samples=2)


def test_nr_limit_determinism():
    s = gaussian(GRID, 2.0, 1.0)
    t = checks.nr_limit_study([20, 20], s, P)
    assert t.rows[0]["error"] == t.rows[1]["error"]


def test_multiplier_phase_difference_scaling():
    a = checks.multiplier_phase_difference(0.05, P, GRID.x, 1.0)["relative"]
    b = checks.multiplier_phase_difference(0.025, P, GRID.x, 1.0)["relative"]
    assert a / b == pytest.approx(4, rel=0.05)
    assert a < 0.05 ** 2


def test_plane_wave_square_residual():
    rows = checks.fourth_order_residual(WaveState(GRID, GRID.mode(1.0)), P.with_(V=0.3), [0, 1],
                                        time_derivative="spectral")
    assert max(r["residual"] for r in rows) < 1e-13


def test_cos_potential_mismatch():
    mm = checks.square_mismatch_position_v(P)
    assert mm["max_unexplained"] < 1e-10
    assert mm["max_cross_term"] > 0.1


# tables ---------------------------------------------------------------------------

def test_csv_format():
    text = csv_text(["a", "b", "ok"], [{"a": 0.1, "b": "x", "ok": True}], ["note"])
    assert text == "# note\na,b,ok\n0.10000000000000001,x,true\n"
    assert fmt(np.float64(1 / 3)) == "0.33333333333333331"
    with pytest.raises(KeyError):
        csv_text(["a"], [{"b": 1}])
