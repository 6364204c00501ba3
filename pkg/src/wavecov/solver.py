"""Solving constraint systems.

Constraint equations produced by the boost engine are polynomial in the
multiplier exponents and the operator coefficients.  Everything here works by
sequential elimination: pick an equation that is linear in one unknown, solve
for it, substitute, repeat.  Divisions by coefficients that are not known to be
nonzero are recorded as assumptions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

from .boost import ConstraintSystem, make_system, normalize_equation
from .symbolic.operators import ExpLinearMultiplier, LinearPDE
from .symbolic.scalar import I, ONE, ZERO, S, Scalar
from .symbolic.symbols import is_nonzero

LAMBDAS = ("lam0", "lam1", "lam2", "lam3")


@dataclass
class Elimination:
    """Outcome of :func:`solve_sequential`.

    ``status`` is ``solved`` (all residuals vanish), ``unsatisfiable`` (a
    residual free of unknowns is left over) or ``nonlinear`` (residuals still
    contain unknowns that no step could isolate).
    """

    solution: Dict[str, Scalar]
    residuals: List[Scalar]
    assumptions: List[Scalar]
    free: List[str]
    status: str
    steps: List[Tuple[int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == "solved"


def _coefficient_class(coeff: Scalar, unknowns, nonzero=()) -> int:
    if normalize_equation(coeff, nonzero) == ONE:
        return 0
    if not coeff.has(*unknowns):
        return 1
    return 2


def _linear_split(eq: Scalar, name: str) -> Optional[Tuple[Scalar, Scalar]]:
    """(c1, c0) with eq = c1*name + c0, or None when eq is not linear in name."""
    if not eq.has(name) or eq.denominator.has(name):
        return None
    coeffs = eq.poly_coeffs(name)
    if len(coeffs) != 2:
        return None
    return coeffs[1], coeffs[0]


def solve_sequential(equations: Sequence[Scalar], unknowns: Sequence[str],
                     nonzero: Sequence[str] = ()) -> Elimination:
    """Solve polynomial equations (each = 0) for ``unknowns`` by elimination.

    At every step the candidate with the simplest pivot coefficient wins:
    first known-nonzero coefficients, then coefficients free of unknowns,
    then the rest; ties go to the earlier equation and the earlier unknown.
    Symbols in ``nonzero`` count as known nonzero.
    """
    unknowns = list(unknowns)
    solution: Dict[str, Scalar] = {}
    assumptions: List[Scalar] = []
    steps: List[Tuple[int, str]] = []
    nonzero = tuple(nonzero)
    eqs = [normalize_equation(S(e), nonzero) for e in equations]
    while True:
        open_ = [u for u in unknowns if u not in solution]
        best = None
        for idx, eq in enumerate(eqs):
            if eq.is_zero:
                continue
            for rank, u in enumerate(open_):
                split = _linear_split(eq, u)
                if split is None:
                    continue
                key = (_coefficient_class(split[0], open_, nonzero), idx, rank)
                if best is None or key < best[0]:
                    best = (key, idx, u, split)
        if best is None:
            break
        _, idx, u, (c1, c0) = best
        value = -c0 / c1
        if normalize_equation(c1, nonzero) != ONE:
            assumptions.append(c1)
        solution = {k: v.subs({u: value}) for k, v in solution.items()}
        solution[u] = value
        steps.append((idx, u))
        eqs = [normalize_equation(e.subs({u: value}), nonzero) if e.has(u) else e for e in eqs]

    residuals = [e for e in eqs if not e.is_zero]
    final_assumptions: List[Scalar] = []
    for a in assumptions:
        a = normalize_equation(a.subs(solution), nonzero)
        if a.is_zero:
            raise ZeroDivisionError("elimination divided by a coefficient that vanishes on the solution")
        if a != ONE and a not in final_assumptions:
            final_assumptions.append(a)
    left = [u for u in unknowns if u not in solution]
    if not residuals:
        status = "solved"
    elif any(not r.has(*left) for r in residuals) or not left:
        status = "unsatisfiable"
    else:
        status = "nonlinear"
    free = [u for u in left if not any(r.has(u) for r in residuals)]
    return Elimination(solution, residuals, final_assumptions, free, status, steps)


# multipliers -----------------------------------------------------------------

@dataclass
class MultiplierSolution:
    multiplier: Optional[ExpLinearMultiplier]
    status: str
    values: Dict[str, Scalar]
    residuals: List[Scalar]
    assumptions: List[Scalar]
    free: List[str]
    steps: List[Tuple[str, str]]

    @property
    def satisfiable(self) -> bool:
        return self.status in ("solved", "underdetermined")


def solve_multiplier(cs: ConstraintSystem, unknowns: Sequence[str] = LAMBDAS) -> MultiplierSolution:
    """Exponent coefficients lam_mu satisfying every equation of ``cs``.

    The prefactor is fixed to 1: composing two boosts forces it.  Unknowns that
    no equation touches are left symbolic and reported as free.
    """
    for eq in cs.equations:
        for u in unknowns:
            if eq.has(u) and eq.numerator.degree(u) > 2:
                raise ValueError(f"constraint {eq} is not of degree <= 2 in {u}")
    el = solve_sequential(cs.equations, unknowns)
    ids = [c.id for c in cs.constraints]
    steps = [(ids[i], u) for i, u in el.steps]
    if el.status != "solved":
        return MultiplierSolution(None, "unsatisfiable" if el.status == "unsatisfiable" else "nonlinear",
                                  el.solution, el.residuals, el.assumptions, el.free, steps)
    lam = [el.solution.get(u, Scalar.symbol(u)) for u in unknowns]
    status = "underdetermined" if el.free else "solved"
    return MultiplierSolution(ExpLinearMultiplier(lam), status, el.solution, [],
                              el.assumptions, el.free, steps)


def pull_back(g: ExpLinearMultiplier, t) -> ExpLinearMultiplier:
    """The same multiplier written in unprimed coordinates.

    Derivative rules d_mu = sum_nu M[mu][nu] d'_nu mean x'_nu = sum_mu M[mu][nu] x_mu,
    so the exponent coefficients transform with M itself.
    """
    lam = g.exponent
    return ExpLinearMultiplier([sum((t.matrix[mu][nu] * lam[nu] for nu in range(4)), ZERO)
                                for mu in range(4)], g.prefactor)


# plane waves and dispersion ----------------------------------------------------

@dataclass(frozen=True)
class PlaneWave:
    """Psi0 * exp(i(k.r - omega t))."""

    amplitude: Scalar
    k: Tuple[Scalar, Scalar, Scalar]
    omega: Scalar

    def as_multiplier(self, time_scale=ONE) -> ExpLinearMultiplier:
        """Exponent coefficients in x0 = time_scale * t, x1..x3."""
        lam0 = -I * self.omega / S(time_scale)
        return ExpLinearMultiplier([lam0] + [I * kj for kj in self.k], self.amplitude)

    @classmethod
    def from_multiplier(cls, g: ExpLinearMultiplier, time_scale=ONE) -> "PlaneWave":
        lam = g.exponent
        return cls(g.prefactor, tuple(-I * x for x in lam[1:]), I * lam[0] * S(time_scale))

    @classmethod
    def symbolic(cls, amplitude="Psi0") -> "PlaneWave":
        k = Scalar.symbol("k")
        return cls(S(amplitude), (k, ZERO, ZERO), Scalar.symbol("omega"))


@dataclass(frozen=True)
class DispersionTarget:
    """Relation R(omega, k) = 0 required of plane-wave solutions.

    ``relation`` is polynomial in ``omega`` and ``k``.  ``explicit`` holds
    omega(k) when that is rational; the relativistic target has two branches
    and stays implicit.
    """

    relation: Scalar
    provenance: str
    explicit: Optional[Scalar] = None

    @classmethod
    def from_omega(cls, omega, provenance: str) -> "DispersionTarget":
        w = S(omega)
        return cls(Scalar.symbol("omega") - w, provenance, w)

    @classmethod
    def free_particle(cls) -> "DispersionTarget":
        return cls.from_omega("hbar*k**2/(2*m)", "de Broglie, free particle")

    @classmethod
    def constant_potential(cls) -> "DispersionTarget":
        return cls.from_omega("hbar*k**2/(2*m) + V/hbar", "de Broglie, constant potential")

    @classmethod
    def relativistic(cls) -> "DispersionTarget":
        rel = S("hbar**2*omega**2 - m**2*c**4 - c**2*hbar**2*k**2")
        return cls(rel, "de Broglie with the Einstein energy-momentum relation")

    @classmethod
    def lcse(cls) -> "DispersionTarget":
        rel = S("hbar**2*omega**2/(2*m*c**2) + hbar*omega - hbar**2*k**2/(2*m) - V")
        return cls(rel, "LCSE characteristic polynomial")

    @property
    def degree(self) -> int:
        return self.relation.numerator.degree("omega")

    def omega(self, k, values: Mapping[str, float]) -> np.ndarray:
        """Numerical branches omega(k), sorted ascending (one per root)."""
        if self.explicit is not None:
            w = self.explicit.subs({n: S(sp.nsimplify(v)) for n, v in values.items()})
            return np.array([w.to_complex({"k": sp.nsimplify(k)}).real])
        env = {n: sp.nsimplify(v) for n, v in values.items()}
        env["k"] = sp.nsimplify(k)
        expr = self.relation.numerator.subs({n: S(v) for n, v in env.items()})._expr
        w = next(s_ for s_ in expr.free_symbols if s_.name == "omega")
        # exact coefficients, roots to 30 digits: no cancellation in the small root
        roots = sp.Poly(expr, w).nroots(n=30)
        return np.sort(np.array([complex(r).real for r in roots]))

    def residual(self, omega, k, values: Mapping[str, float]) -> complex:
        env = {n: sp.nsimplify(v) for n, v in values.items()}
        env.update(omega=sp.nsimplify(omega), k=sp.nsimplify(k))
        return self.relation.to_complex(env)


@dataclass
class DispersionMatch:
    bindings: Dict[str, Scalar]
    status: str
    system: ConstraintSystem
    free: List[str]
    assumptions: List[Scalar]

    @property
    def satisfiable(self) -> bool:
        return self.status == "solved"


def plane_wave_symbol(op: LinearPDE, time_scale=ONE) -> Scalar:
    """Op applied to a plane wave along x1, divided by the plane wave."""
    g = PlaneWave.symbolic(ONE).as_multiplier(time_scale)
    return op.symbol(g.exponent)


def _reduce_mod(poly_w: List[Scalar], relation: List[Scalar]) -> List[Scalar]:
    """Remainder of sum poly_w[j] w^j modulo the relation polynomial in w."""
    d = len(relation) - 1
    lead = relation[-1]
    coeffs = list(poly_w)
    for j in range(len(coeffs) - 1, d - 1, -1):
        c = coeffs[j]
        if c.is_zero:
            continue
        coeffs[j] = ZERO
        # w^j = w^(j-d) * w^d and w^d = -(sum_{i<d} r_i w^i) / lead
        for i in range(d):
            coeffs[j - d + i] = coeffs[j - d + i] - c * relation[i] / lead
    return coeffs[:d] + [ZERO] * max(0, d - len(coeffs))


def default_unknowns(op: LinearPDE, target: DispersionTarget) -> List[str]:
    target_syms = target.relation.free_symbols
    names = [n for n in sorted(op.free_symbols) if not is_nonzero(n) and n not in target_syms]
    return sorted(names, key=lambda n: (n == "f", n))


def dispersion_match(op: LinearPDE, target: DispersionTarget, unknowns: Sequence[str] = None,
                     time_scale=ONE, nonzero: Sequence[str] = ()) -> DispersionMatch:
    """Coefficient bindings making every plane wave on ``target`` solve ``op``.

    ``time_scale`` is s in x0 = s*t (1 for Galilean work, c for Lorentz).
    ``nonzero`` lists coefficients already assumed nonzero upstream.
    The plane-wave symbol is reduced modulo the target relation in omega and the
    remainder is required to vanish identically in k.
    """
    if unknowns is None:
        unknowns = default_unknowns(op, target)
    sym_ = plane_wave_symbol(op, time_scale)
    num = sym_.numerator
    rel = target.relation.numerator
    rem = _reduce_mod(num.poly_coeffs("omega"), rel.poly_coeffs("omega"))
    pairs = []
    for j, a in enumerate(rem):
        if a.is_zero:
            continue
        a_num = a.numerator
        for n, ck in enumerate(a_num.poly_coeffs("k")):
            if not ck.is_zero:
                pairs.append((f"omega^{j} k^{n}", ck))
    system = make_system(pairs, None, None, nonzero)
    el = solve_sequential(system.equations, unknowns, nonzero)
    status = el.status
    if status == "solved" and op.subs(el.solution).order == 0:
        # every derivative term removed: no wave equation is left
        status = "unsatisfiable"
    return DispersionMatch(el.solution, status, system, el.free, el.assumptions)


def is_pure_imaginary(x: Scalar) -> bool:
    """True when x is i times a real expression (all symbols taken real)."""
    conj = Scalar(x.expr.subs(sp.I, -sp.I))
    return not x.is_zero and conj == -x
