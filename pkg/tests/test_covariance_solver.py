import numpy as np
import pytest

from wavecov import derivations as dv
from wavecov.boost import FrameTransform, boost_operator, covariance_constraints, make_system
from wavecov.solver import (DispersionTarget, PlaneWave, dispersion_match, is_pure_imaginary, pull_back,
                            solve_multiplier, solve_sequential)
from wavecov.symbolic.operators import DerivativeMonomial, ExpLinearMultiplier, LinearPDE
from wavecov.symbolic.scalar import ONE, S

d = DerivativeMonomial.of
UNKNOWN = ExpLinearMultiplier.unknown()


def galilean_op():
    return LinearPDE({d(1, 1): "Bbar", d(2, 2): "Bbar", d(3, 3): "Bbar", d(0): "Cbar"}, "f")


def lorentz_op(C="C"):
    return LinearPDE({d(0, 0): "-B", d(1, 1): "B", d(2, 2): "B", d(3, 3): "B", d(0): C}, "f")


def system(op, t):
    return covariance_constraints(op, boost_operator(op, t, UNKNOWN))


# multiplier solving -----------------------------------------------------------------

def test_galilean_multiplier():
    ms = solve_multiplier(system(galilean_op(), FrameTransform.galilean("v")))
    assert ms.status == "solved"
    assert ms.multiplier == ExpLinearMultiplier([S("Cbar*v**2/(4*Bbar)"), S("Cbar*v/(2*Bbar)"), 0, 0])
    assert ms.multiplier.prefactor == ONE
    assert [a.to_text() for a in ms.assumptions] == ["Cbar"]


def test_lorentz_multiplier():
    ms = solve_multiplier(system(lorentz_op(), FrameTransform.lorentz("beta")))
    assert ms.status == "solved"
    assert ms.multiplier == ExpLinearMultiplier([S("C*(gamma - 1)/(2*B)"), S("C*gamma*beta/(2*B)"), 0, 0])


def test_lorentz_multiplier_without_C_is_constant():
    ms = solve_multiplier(system(lorentz_op(0), FrameTransform.lorentz("beta")))
    assert ms.satisfiable and ms.multiplier.is_constant


def test_unsatisfiable_is_a_value():
    cs = system(galilean_op(), FrameTransform.galilean("v")).subs({n: 0 for n in ("lam0", "lam1", "lam2", "lam3")})
    ms = solve_multiplier(cs, [])
    assert ms.status == "unsatisfiable" and not ms.satisfiable
    assert [r.to_text() for r in ms.residuals] == ["Cbar"]


def test_underdetermined_reports_free():
    ms = solve_multiplier(make_system([("x", "lam1 - v")]))
    assert ms.status == "underdetermined"
    assert set(ms.free) == {"lam0", "lam2", "lam3"}


def test_degree_above_two_rejected():
    with pytest.raises(ValueError):
        solve_multiplier(make_system([("x", "lam1**3 - v")]))


def test_sequential_records_assumptions():
    el = solve_sequential([S("a*x - b")], ["x"])
    assert el.ok and el.solution["x"] == S("b/a")
    assert [a.to_text() for a in el.assumptions] == ["a"]


def test_pull_back_inverts_boost():
    t = FrameTransform.galilean("v")
    g = ExpLinearMultiplier(["p", "q", 0, 0])
    back = pull_back(pull_back(g, t), FrameTransform.galilean("-v"))
    assert back == g


def test_plane_wave_round_trip():
    pw = PlaneWave(S("Psi0"), (S("k"), S(0), S(0)), S("omega"))
    g = pw.as_multiplier(S("c"))
    assert g.exponent[0] == S("-I*omega/c") and g.exponent[1] == S("I*k")
    assert PlaneWave.from_multiplier(g, S("c")).omega == S("omega")


# dispersion -------------------------------------------------------------------------

def test_free_dispersion():
    dm = dispersion_match(galilean_op(), DispersionTarget.free_particle(), ["Cbar", "f"])
    assert dm.satisfiable
    assert dm.bindings["Cbar"] / S("Bbar") == S("2*I*m/hbar")
    assert dm.bindings["f"].is_zero


def test_constant_potential_dispersion():
    op = galilean_op().subs({"Bbar": S("hbar**2*D/(2*m)"), "Cbar": S("I*hbar*D")})
    dm = dispersion_match(op, DispersionTarget.constant_potential(), ["f"])
    assert dm.bindings["f"] == S("-D*V")


def test_relativistic_dispersion():
    op = LinearPDE({d(0, 0): "B", d(1, 1): "-B", d(2, 2): "-B", d(3, 3): "-B", d(0): "-C"}, "-f")
    dm = dispersion_match(op, DispersionTarget.relativistic(), ["C", "f"], time_scale=S("c"))
    assert dm.satisfiable
    assert dm.bindings["C"].is_zero
    assert dm.bindings["f"] == S("-m**2*c**2*B/hbar**2")


def test_dispersion_unsatisfiable():
    # a first-order operator cannot reproduce a quadratic-in-k relation
    op = LinearPDE({d(0): "Cbar", d(1): "E"}, "f")
    dm = dispersion_match(op, DispersionTarget.free_particle(), ["Cbar", "E", "f"])
    assert not dm.satisfiable


def test_target_numeric_branches():
    vals = {"m": 1, "hbar": 1, "c": 10, "V": 0}
    assert np.allclose(DispersionTarget.relativistic().omega(1, vals), [-np.sqrt(10100), np.sqrt(10100)],
                       rtol=1e-15)
    lo, hi = DispersionTarget.lcse().omega(0, vals)
    assert hi == 0 and lo == -200
    assert DispersionTarget.lcse().omega(1, vals)[1] == pytest.approx(100 * (np.sqrt(1.01) - 1), rel=1e-14)


def test_pure_imaginary():
    assert is_pure_imaginary(S("2*I*m/hbar"))
    assert not is_pure_imaginary(S("2*m/hbar"))
    assert not is_pure_imaginary(S("1 + I"))


# pipelines --------------------------------------------------------------------------

def _all(galilean_report, lorentz_reports, appendix3_report, appendix4_report):
    return [galilean_report, *lorentz_reports, appendix3_report, appendix4_report]


def test_reports_reproduce_and_cite(galilean_report, lorentz_reports, appendix3_report, appendix4_report):
    for rep in _all(galilean_report, lorentz_reports, appendix3_report, appendix4_report):
        assert rep.reproduced, rep.pipeline
        assert rep.dangling_evidence() == []
        assert all(c.evidence for c in rep.claims)
        assert not any(line.startswith("MISMATCH") for line in rep.trace)


def test_galilean_flags(galilean_report):
    flags = galilean_report.theorem_flags
    assert all(flags[k].holds for k in ("no_second_time_derivative", "strict_scalar_not_a_wave", "complex_wave_function"))


def test_galilean_multiplier_trivial_at_rest(galilean_report):
    assert galilean_report.multiplier.subs({"v": 0}).is_constant


def test_lorentz_flags(lorentz_reports):
    kg, _ = lorentz_reports
    assert kg.theorem_flags["strict_scalar_gives_kg"].holds and kg.theorem_flags["kg_multiplier_constant"].holds


def test_lcse_massless_multiplier_trivial(lorentz_reports):
    _, lcse = lorentz_reports
    assert lcse.multiplier.subs({"m": 0}).is_constant
    assert any(c.key == "m=0" for c in lcse.claims)


def test_lcse_boosted_plane_wave(lorentz_reports):
    _, lcse = lorentz_reports
    pw = PlaneWave.from_multiplier(lcse.multiplier.subs({"beta": S("v/c")}), S("c"))
    assert S("hbar") * pw.omega == S("-(gamma - 1)*m*c**2")  # primed-frame exponent, t' sign
    assert S("hbar") * pw.k[0] == S("gamma*m*v")


def test_lcse_nr_expansion(lorentz_reports):
    _, lcse = lorentz_reports
    lam0, lam1 = lcse.multiplier.exponent[:2]
    # gamma - 1 ~ beta^2/2, gamma*beta ~ beta: first-order exponents match the Galilean ones
    g_series = dv.gamma_series(2)
    lam0s = dv.truncate(lam0.subs({"gamma": g_series, "beta": S("v/c")}), "v", 2)
    lam1s = dv.truncate(lam1.subs({"gamma": g_series, "beta": S("v/c")}), "v", 2)
    assert lam0s * S("c") == S("I*m*v**2/(2*hbar)")
    assert lam1s == S("I*m*v/hbar")


@pytest.mark.parametrize("order", [2, 3, 4])
def test_rotation_pipeline(order):
    rep = dv.derive_rotation(order)
    assert rep.reproduced and rep.dangling_evidence() == []


def test_dispatch_errors():
    with pytest.raises(ValueError):
        dv.derive("lorentz", 3)
    with pytest.raises(ValueError):
        dv.derive("galilean", 5)
    with pytest.raises(ValueError):
        dv.derive("spin", 2)


def test_determinism(galilean_report, appendix3_report):
    assert dv.derive_galilean().to_json() == galilean_report.to_json()
    assert dv.derive_appendix(3).to_json() == appendix3_report.to_json()
    assert dv.derive_galilean().to_text() == galilean_report.to_text()


def _essence(rep):
    return (sorted(rep.forced_zero), {k: v for k, v in rep.ratios.items()},
            {k: v for k, v in rep.relations.items()}, rep.multiplier, rep.final_equation, rep.verdict)


@pytest.mark.parametrize("scale", ["3", "-2*I", "m/7"])
def test_scale_invariance_galilean(galilean_report, scale):
    assert _essence(dv.derive_galilean(scale=S(scale))) == _essence(galilean_report)


def test_scale_invariance_lorentz(lorentz_reports):
    for a, b in zip(dv.derive_lorentz(scale=S("5/3")), lorentz_reports):
        assert _essence(a) == _essence(b)


def test_scale_invariance_appendix3(appendix3_report):
    assert _essence(dv.derive_appendix(3, scale=S(-4))) == _essence(appendix3_report)


def test_square_constant_v():
    sq = dv.schrodinger_square("constant")
    assert sq["table_matches"] and sq["verdict"] == "equivalent"
    assert sq["table"] == dv.SQUARE_TABLE
    assert sq["family"] == sq["operator"].scale(sq["factor"])
    assert sq["schrodinger_solutions_solve_square"]


def test_square_position_v():
    sq = dv.schrodinger_square("position")
    assert sq["verdict"] == "inequivalent" and sq["cross_term_matches"]
