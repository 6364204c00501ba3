"""Acceptance criteria 1-9, one test each, at the stated tolerances."""
import math
import shutil
import subprocess
import sys
import time

import numpy as np

from wavecov import derivations as dv
from wavecov.boost import FrameTransform, boost_operator, covariance_constraints, normalize_equation, \
    rotation_constraints
from wavecov.lab import checks
from wavecov.lab.grid import Grid1D, PhysicalParams, WaveState, gaussian
from wavecov.symbolic.operators import DerivativeMonomial, ExpLinearMultiplier, LinearPDE
from wavecov.symbolic.scalar import S

d = DerivativeMonomial.of


def test_criterion_1_galilean_golden():
    start = time.perf_counter()
    rep = dv.derive_galilean()
    assert time.perf_counter() - start < 10.0
    assert rep.reproduced
    assert set(rep.forced_zero) == {"Abar"}
    last = "galilean.g.r2"
    assert rep.systems[last].contains(normalize_equation(S("2*Bbar*lam1 - Cbar*v")))
    assert rep.systems[last].subs({"lam2": 0, "lam3": 0}).contains(
        normalize_equation(S("Bbar*lam1**2 + Cbar*lam0 - Cbar*v*lam1")))
    assert rep.generic_multiplier == ExpLinearMultiplier([S("Cbar*v**2/(4*Bbar)"), S("Cbar*v/(2*Bbar)"), 0, 0])
    assert rep.ratios["Cbar/Bbar"] == S("2*I*m/hbar")
    assert rep.relations["f"] == S("-D*V")
    expected = LinearPDE({d(0): "I*hbar", d(1, 1): "hbar**2/(2*m)", d(2, 2): "hbar**2/(2*m)",
                          d(3, 3): "hbar**2/(2*m)"}, "-V")
    assert rep.final_equation == expected
    assert rep.final_text == "iħ∂_tΨ = −(ħ²/2m)∇²Ψ + VΨ"


def test_criterion_2_lorentz():
    kg, lcse = dv.derive_lorentz()
    op = LinearPDE({d(0, 0): "A", d(1, 1): "B", d(2, 2): "B", d(3, 3): "B"})
    assert boost_operator(op, FrameTransform.lorentz()).coefficient(d(0, 1)) == S("-2*gamma**2*beta*(A + B)")
    for rep in (kg, lcse):
        assert rep.reproduced and rep.relations["A"] == S("-B")
    assert kg.relations["C"].is_zero
    assert kg.relations["f"] == S("-m**2*c**2*B/hbar**2")
    assert kg.multiplier.is_constant
    # exp{(i/hbar)[(gamma-1) m c^2 t' + gamma m v x']} with x0 = c t and v = beta c
    assert lcse.multiplier == ExpLinearMultiplier([S("I*(gamma - 1)*m*c/hbar"), S("I*gamma*m*beta*c/hbar"), 0, 0])
    assert lcse.ratios["C/B"] == S("2*I*m*c/hbar")


def test_criterion_3_appendix():
    a3 = dv.derive_appendix(3)
    spatial = {f"a{i}{j}{k}" for i in "123" for j in "123" for k in "123" if i <= j <= k}
    assert spatial | {"a000", "a011"} <= set(a3.forced_zero)
    assert a3.final_equation.order == 2 and a3.verdict == "collapses to order 2"

    rot4 = rotation_constraints(4).operator
    a = rot4.coefficient(d(1, 1, 1, 1))
    assert rot4.coefficient(d(1, 1, 2, 2)) == 2 * a
    lap = LinearPDE.laplacian()
    assert LinearPDE({m: c for m, c in rot4.terms.items() if m.order == 4 and m.alpha[0] == 0}) == \
        lap.compose(lap).scale(a)

    a4 = dv.derive_appendix(4)
    assert a4.reproduced
    assert a4.relations["Btil"] == S("Abar*B**2/Cbar**2")
    assert a4.relations["bbar"] == S("2*Abar*B/Cbar")

    sq = dv.schrodinger_square("constant")
    hb, m, V = "hbar", "m", "V"
    assert sq["table"] == {"Lap^2": S(f"{hb}**4/(4*{m}**2)"), "Lap d_t": S(f"I*{hb}**3/{m}"),
                           "d_t^2": S(f"-{hb}**2"), "Lap": S(f"-{V}*{hb}**2/{m}"),
                           "d_t": S(f"-2*I*{V}*{hb}"), "1": S(f"{V}**2")}
    # covariant family with the derived relations, then Abar = hbar^2, B = V hbar^2/m, f = -V^2
    family = dv.fourth_order_family().subs({"Btil": a4.relations["Btil"], "bbar": a4.relations["bbar"]})
    family = family.subs({"Cbar": a4.ratios["Cbar/B"] * S("B")})
    family = family.subs({"Abar": S("hbar**2"), "B": S("V*hbar**2/m"), "f": S("-V**2")})
    assert family == sq["family"] == sq["operator"].scale(-1)
    assert sq["verdict"] == "equivalent"
    pos = dv.schrodinger_square("position")
    assert pos["cross_term_matches"] and pos["verdict"] == "inequivalent"


def test_criterion_4_closure():
    g_rep = dv.derive_galilean()
    kg, lcse = dv.derive_lorentz()
    cases = [(g_rep.final_equation, FrameTransform.galilean("v"), g_rep.multiplier),
             (kg.final_equation, FrameTransform.lorentz("beta"), kg.multiplier),
             (lcse.final_equation, FrameTransform.lorentz("beta"), lcse.multiplier)]
    for op, t, g in cases:
        assert covariance_constraints(op, boost_operator(op, t, g)).is_empty
    a4 = dv.derive_appendix(4)
    assert a4.systems["galilean.closure"].is_empty


def test_criterion_5_dispersion():
    start = time.perf_counter()
    p = PhysicalParams(m=1.0, hbar=1.0, c=10.0)
    grid = Grid1D(32 * np.pi, 1024)
    ks = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0]
    for eq in ("schrodinger", "klein_gordon", "lcse"):
        rows = checks.measure_dispersion(eq, p, ks, grid)
        assert len(rows) == len(ks) * (1 if eq == "schrodinger" else 2)
        for r in rows:
            assert r.error < 1e-8, r
    lcse0 = {r.branch: r.omega_measured for r in checks.measure_dispersion("lcse", p, [0.0], grid)}
    assert abs(lcse0["particle"]) < 1e-10
    assert abs(lcse0["antiparticle"] + 2 * 1.0 * 10.0 ** 2 / 1.0) / 200.0 < 1e-10
    assert time.perf_counter() - start < 30.0


def test_criterion_6_boost_covariance():
    p = PhysicalParams(v=1.0)
    grid = Grid1D(32 * np.pi, 1024)
    for t in (0.25, 0.5, 1.0):
        r = checks.boost_check("schrodinger", gaussian(grid, 1.0), p, "galilean", t=t)
        assert r.l2_discrepancy < 1e-6
    pl = PhysicalParams(c=10.0, v=3.0)
    gamma = 1.0 / math.sqrt(1.0 - 0.09)
    w_exp, k_exp = (gamma - 1.0) * 100.0, gamma * 3.0
    g = checks.lorentz_window(pl, "lcse")
    r = checks.boost_check("lcse", WaveState(g, np.ones(g.points)), pl, "lorentz")
    assert r.residual < 1e-8
    assert abs(r.omega - w_exp) / w_exp < 1e-10
    assert abs(r.k - k_exp) / k_exp < 1e-10


def test_criterion_7_nr_limit():
    grid = Grid1D(32 * np.pi, 1024)
    table = checks.nr_limit_study([10, 20, 40, 80], gaussian(grid, 2.0, 1.0), PhysicalParams(), 1.0)
    errs = [r["error"] for r in table.rows]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert abs(table.slope + 2.0) <= 0.2


def test_criterion_8_fourth_order_residual():
    grid = Grid1D(32 * np.pi, 1024)
    rows = checks.fourth_order_residual(gaussian(grid, 1.0), PhysicalParams(), [0.0, 0.5, 1.0, 1.5, 2.0])
    assert len(rows) == 5
    assert max(r["residual"] for r in rows) < 1e-8


def test_criterion_9_headless_verify(tmp_path):
    exe = shutil.which("wavecov")
    base = [exe] if exe else [sys.executable, "-m", "wavecov"]
    start = time.perf_counter()
    for check in ("boost", "dispersion", "nr-limit", "squared-op"):
        r = subprocess.run(base + ["verify", check, "--out", str(tmp_path)], capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
    fail = subprocess.run(base + ["verify", "nr-limit", "--out", str(tmp_path), "--tolerance", "0"],
                          capture_output=True, text=True)
    assert fail.returncode == 1 and "FAIL" in fail.stderr
    bad = tmp_path / "bad.cfg"
    bad.write_text("c = 10\nnope\n")
    usage = subprocess.run(base + ["verify", "nr-limit", str(bad)], capture_output=True, text=True)
    assert usage.returncode == 2 and "line 2" in usage.stderr
    assert time.perf_counter() - start < 120.0
