"""Frame transformations of linear operators and covariance constraints.

A frame change x -> x' acts on the operator through the chain rule on first
derivatives; the multiplier Psi = g Psi' then shifts every primed derivative
by d_mu g / g.  Comparing the result with the original operator, monomial by
monomial and up to one overall factor, yields a :class:`ConstraintSystem`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import sympy as sp
from sympy.polys.matrices import DomainMatrix

from .symbolic.operators import (NDIM, ZERO_INDEX, DerivativeMonomial, ExpLinearMultiplier,
                                 LinearPDE, RawPoly, monomials, raw_add, raw_mul, raw_pow,
                                 shift_raw)
from .symbolic.scalar import FIELD, ONE, SQRT2, ZERO, S, Scalar, canonical, field_poly, to_field
from .symbolic.symbols import is_nonzero

# cos, sin of k*pi/4
_COS = [ONE, SQRT2 / 2, ZERO, -SQRT2 / 2, -ONE, -SQRT2 / 2, ZERO, SQRT2 / 2]
_SIN = [ZERO, SQRT2 / 2, ONE, SQRT2 / 2, ZERO, -SQRT2 / 2, -ONE, -SQRT2 / 2]
_PLANE = {1: (2, 3), 2: (3, 1), 3: (1, 2)}


@dataclass(frozen=True)
class FrameTransform:
    """Rotation, Galilean boost or Lorentz boost.

    ``matrix`` holds the derivative substitution rules: d_mu -> sum_nu M[mu][nu] d'_nu.
    """

    kind: str
    matrix: Tuple[Tuple[Scalar, ...], ...]
    label: str = ""
    speed: Optional[Scalar] = None
    axis: Optional[int] = None
    gamma: Optional[Scalar] = None

    # constructors ------------------------------------------------------
    @classmethod
    def identity(cls) -> "FrameTransform":
        return cls("identity", _eye(), "identity")

    @classmethod
    def rotation(cls, axis: int, eighths: int) -> "FrameTransform":
        """Counterclockwise rotation by ``eighths`` * pi/4 about spatial axis 1..3."""
        if axis not in _PLANE:
            raise ValueError("rotation axis must be 1, 2 or 3")
        k = eighths % 8
        p, q = _PLANE[axis]
        m = [list(r) for r in _eye()]
        m[p][p], m[p][q] = _COS[k], _SIN[k]
        m[q][p], m[q][q] = -_SIN[k], _COS[k]
        label = f"rotation({eighths}*pi/4 about x{axis})"
        return cls("rotation", _freeze(m), label, axis=axis)

    @classmethod
    def signed_permutation(cls, perm: Sequence[int], signs: Sequence[int]) -> "FrameTransform":
        """d_j -> signs[j-1] * d'_{perm[j-1]} for j = 1..3; must have determinant +1."""
        m = [list(r) for r in _eye()]
        for j in range(3):
            for k in range(1, 4):
                m[j + 1][k] = ZERO
        for j, (p, s) in enumerate(zip(perm, signs)):
            m[j + 1][p] = S(s)
        t = cls("rotation", _freeze(m), f"signed_permutation({list(perm)}, {list(signs)})")
        if not t.is_orthogonal() or _det3(t.matrix) != ONE:
            raise ValueError("not a proper rotation")
        return t

    @classmethod
    def galilean(cls, v="v", axis: int = 1) -> "FrameTransform":
        v = S(Scalar.symbol(v) if isinstance(v, str) and v.isidentifier() else v)
        m = [list(r) for r in _eye()]
        m[0][axis] = -v
        return cls("galilean", _freeze(m), f"galilean(v={v}, x{axis})", speed=v, axis=axis)

    @classmethod
    def lorentz(cls, beta="beta", axis: int = 1) -> "FrameTransform":
        if isinstance(beta, str) and beta == "beta":
            b = Scalar.symbol("beta")
            g = Scalar.symbol("gamma")
        else:
            b = S(beta)
            g = _exact_gamma(b)
        m = [list(r) for r in _eye()]
        m[0][0], m[0][axis] = g, -g * b
        m[axis][axis], m[axis][0] = g, -g * b
        return cls("lorentz", _freeze(m), f"lorentz(beta={b}, x{axis})", speed=b, axis=axis, gamma=g)

    # structure ---------------------------------------------------------
    def is_orthogonal(self) -> bool:
        """Spatial block exactly orthogonal and time untouched."""
        m = self.matrix
        for i in range(1, 4):
            for j in range(1, 4):
                dot = sum((m[i][k] * m[j][k] for k in range(1, 4)), ZERO)
                if dot != (ONE if i == j else ZERO):
                    return False
        return m[0][0] == ONE and all(m[0][k].is_zero and m[k][0].is_zero for k in range(1, 4))

    def compose(self, first: "FrameTransform") -> "FrameTransform":
        """self o first: apply ``first`` then ``self`` (collinear Galilean boosts add)."""
        if self.kind == first.kind == "galilean" and self.axis == first.axis:
            return FrameTransform.galilean(self.speed + first.speed, self.axis)
        # generic chain rule: d -> M1 d' -> M1 M2 d''
        m = [[sum((first.matrix[i][k] * self.matrix[k][j] for k in range(NDIM)), ZERO)
              for j in range(NDIM)] for i in range(NDIM)]
        return FrameTransform("composite", _freeze(m), f"{self.label} o {first.label}")


def _eye():
    return tuple(tuple(ONE if i == j else ZERO for j in range(NDIM)) for i in range(NDIM))


def _freeze(m):
    return tuple(tuple(S(x) for x in row) for row in m)


def _det3(m) -> Scalar:
    a = [[m[i][j] for j in range(1, 4)] for i in range(1, 4)]
    return (a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]))


def _exact_gamma(beta: Scalar) -> Scalar:
    from .symbolic.scalar import _lorentz_gamma
    g = _lorentz_gamma(beta.expr)
    if g is None:
        raise ValueError(f"Lorentz factor for beta={beta} is not in Q(i, sqrt 2)")
    return Scalar._raw(g)


def transform_derivatives(t: FrameTransform) -> Dict[int, LinearPDE]:
    """First-order substitution rules d_mu -> sum_nu M[mu][nu] d'_nu."""
    rules = {}
    for mu in range(NDIM):
        rules[mu] = LinearPDE({DerivativeMonomial.of(nu): t.matrix[mu][nu] for nu in range(NDIM)})
    return rules


def _raw_rules(t: FrameTransform) -> List[RawPoly]:
    out = []
    for mu in range(NDIM):
        out.append({DerivativeMonomial.of(nu).alpha: t.matrix[mu][nu].expr
                    for nu in range(NDIM) if not t.matrix[mu][nu].is_zero})
    return out


def boost_operator(op: LinearPDE, t: FrameTransform,
                   g: ExpLinearMultiplier = None) -> LinearPDE:
    """Primed-frame operator after the frame change and factoring out g."""
    rules = _raw_rules(t)
    raw: RawPoly = {}
    for alpha, c in op.to_raw().items():
        term: RawPoly = {ZERO_INDEX: c}
        for mu, a in enumerate(alpha):
            if a:
                term = raw_mul(term, raw_pow(rules[mu], a))
        raw = raw_add(raw, term)
    if g is not None and not g.is_constant:
        raw = shift_raw(raw, g.exponent)
    return LinearPDE.from_raw(raw)


# constraint systems ----------------------------------------------------------

def normalize_equation(eq: Scalar, nonzero=()) -> Scalar:
    """Numerator of ``eq`` with known-nonzero monomial factors and
    multiplicities removed, scaled to a monic leading term.

    ``nonzero`` names extra symbols that may be divided out.
    """
    num = sp.fraction(eq.expr)[0]
    if num == 0:
        return ZERO
    gens = sorted(num.free_symbols, key=lambda s: s.name)
    if not gens:
        return ONE
    fast = _normalize_linear(num, gens)
    if fast is not None:
        return fast
    poly = field_poly(sp.expand(num), gens)
    content, rest = poly.terms_gcd()
    keep = 1
    for sym_, e in zip(gens, content):
        if e and not (is_nonzero(sym_.name) or sym_.name in nonzero):
            keep *= sym_
    expr = sp.expand(rest.as_expr() * keep)
    p = field_poly(expr, gens)
    lc = p.LC(order="grlex")
    return Scalar(canonical(sp.expand(p.quo_ground(lc).as_expr())))


def _normalize_linear(num: sp.Expr, gens) -> Optional[Scalar]:
    """Fast path for sums c_i * x_i with constant c_i and at least two terms."""
    terms = sp.Add.make_args(num)
    if len(terms) < 2:
        return None
    lead = None
    for term in terms:
        coeff, var = term.as_independent(*gens, as_Add=False)
        if not var.is_Symbol:
            return None
        if var == gens[0]:
            lead = coeff
    if lead is None:
        return None
    return Scalar(sp.expand(num * FIELD.to_sympy(FIELD.quo(FIELD.one, to_field(lead)))))


@dataclass(frozen=True)
class Constraint:
    id: str
    equation: Scalar
    source: str

    def to_text(self) -> str:
        return f"{self.id}: {self.equation.to_text()} = 0    # {self.source}"


@dataclass(frozen=True)
class ConstraintSystem:
    """Equations (each = 0) plus the pivot fixing the overall proportionality factor."""

    constraints: Tuple[Constraint, ...] = ()
    pivot: Optional[str] = None
    proportionality: Optional[Scalar] = None

    @property
    def equations(self) -> List[Scalar]:
        return [c.equation for c in self.constraints]

    def __len__(self):
        return len(self.constraints)

    def __iter__(self):
        return iter(self.constraints)

    @property
    def is_empty(self) -> bool:
        return not self.constraints

    @property
    def is_inconsistent(self) -> bool:
        return any(eq == ONE for eq in self.equations)

    def subs(self, bindings) -> "ConstraintSystem":
        return make_system(((c.source, c.equation.subs(bindings)) for c in self.constraints),
                           self.pivot,
                           self.proportionality.subs(bindings) if self.proportionality is not None else None)

    def contains(self, eq) -> bool:
        return normalize_equation(S(eq)) in self.equations

    def by_source(self, source: str) -> List[Scalar]:
        return [c.equation for c in self.constraints if c.source == source]

    def to_text(self) -> str:
        head = []
        if self.pivot is not None:
            head.append(f"# pivot {self.pivot}, factor {self.proportionality}")
        return "\n".join(head + [c.to_text() for c in self.constraints])

    def to_dict(self) -> dict:
        return {"pivot": self.pivot,
                "proportionality": None if self.proportionality is None else self.proportionality.to_text(),
                "constraints": [{"id": c.id, "equation": c.equation.to_text(), "source": c.source}
                                for c in self.constraints]}


def make_system(pairs, pivot=None, proportionality=None, nonzero=()) -> ConstraintSystem:
    seen = set()
    out = []
    for source, eq in pairs:
        n = normalize_equation(S(eq), nonzero)
        if n.is_zero or n in seen:
            continue
        seen.add(n)
        out.append(Constraint(f"c{len(out) + 1}", n, source))
    return ConstraintSystem(tuple(out), pivot, proportionality)


def _split_f(eq: sp.Expr) -> List[sp.Expr]:
    """Equations holding for an arbitrary function f split by powers of f."""
    fsym = sp.Symbol("f")
    if not eq.has(fsym):
        return [eq]
    num = sp.expand(sp.fraction(sp.together(eq))[0])
    parts = {}
    for term in sp.Add.make_args(num):
        coeff, fpart = term.as_independent(fsym, as_Add=False)
        parts[fpart] = parts.get(fpart, 0) + coeff
    return [parts[k] for k in sorted(parts, key=sp.default_sort_key)]


def _complexity(s: Scalar):
    t = s.to_text()
    return (0 if not s.free_symbols else 1, len(t), t)


def _ratio(a: Scalar, b: Scalar) -> Scalar:
    if a == b:
        return ONE
    if a == -b:
        return -ONE
    return a / b


def _pivot_rank(coeff: Scalar) -> int:
    # a pivot must be nonzero: prefer coefficients built from nonzero symbols or f itself
    fs = coeff.free_symbols
    if all(is_nonzero(n) for n in fs) or coeff in (Scalar.symbol("f"), -Scalar.symbol("f")):
        return 0
    return 1


def covariance_constraints(original: LinearPDE, transformed: LinearPDE) -> ConstraintSystem:
    """Equations making ``transformed`` proportional to ``original``."""
    if transformed.is_zero:
        raise ValueError("transformed operator vanishes identically")
    orig = dict(original.items())
    trans = dict(transformed.items())
    keys = sorted(set(orig) | set(trans))
    shared = [k for k in keys if k in orig and k in trans]
    if not shared:
        # lam * original = transformed with no common monomial forces both to vanish
        return make_system([(k.to_text(), c) for k, c in trans.items()]
                           + [(k.to_text(), c) for k, c in orig.items()])
    unit = [k for k in shared if trans[k] == orig[k] and _pivot_rank(orig[k]) == 0]
    if unit:
        pivot, ratio = min(unit, key=lambda k: k.sort_key()), ONE
    else:
        ratios = {k: _ratio(trans[k], orig[k]) for k in shared}
        pivot = min(shared, key=lambda k: (_complexity(ratios[k]), _pivot_rank(orig[k]), k.sort_key()))
        ratio = ratios[pivot]
    pairs = []
    for k in keys:
        if k == pivot:
            continue
        t_k = trans.get(k, ZERO)
        if k in orig:
            eq = t_k.expr * orig[pivot].expr - orig[k].expr * trans[pivot].expr
        else:
            eq = t_k.expr
        for part in _split_f(eq):
            pairs.append((k.to_text(), part))
    return make_system(pairs, pivot.to_text(), ratio)


# rotations -------------------------------------------------------------------

def standard_rotations(extra: bool = False) -> List[FrameTransform]:
    """pi and pi/2 about each axis plus pi/4 about x3 (``extra`` adds pi/4 about x1, x2)."""
    rots = [FrameTransform.rotation(a, 4) for a in (1, 2, 3)]
    rots += [FrameTransform.rotation(a, 2) for a in (1, 2, 3)]
    rots.append(FrameTransform.rotation(3, 1))
    if extra:
        rots += [FrameTransform.rotation(1, 1), FrameTransform.rotation(2, 1)]
    return rots


def _tensor_name(indices) -> str:
    return ("b" if len(indices) == 1 else "a") + "".join(map(str, indices))


def general_operator(order: int, ordered_indices: bool = None) -> Tuple[LinearPDE, List[str]]:
    """Most general operator up to ``order`` with one tensor symbol per index tuple.

    Order 2 keeps the non-symmetric a^{mu nu}; higher orders use the ordered
    (mu <= nu <= ...) convention.  The potential is the opaque strict scalar f.
    """
    from itertools import product as iproduct
    if ordered_indices is None:
        ordered_indices = order > 2
    raw: RawPoly = {ZERO_INDEX: sp.Symbol("f")}
    names = []
    for n in range(1, order + 1):
        for idx in iproduct(range(NDIM), repeat=n):
            if (ordered_indices or n == 1) and list(idx) != sorted(idx):
                continue
            name = _tensor_name(idx)
            names.append(name)
            alpha = DerivativeMonomial.of(*idx).alpha
            raw[alpha] = raw.get(alpha, 0) + sp.Symbol(name)
    return LinearPDE.from_raw(raw), names


@dataclass
class LinearSolution:
    """Solved linear system: pivot unknowns expressed through the free ones."""

    solution: Dict[str, Scalar]
    free: List[str]
    equations: List[Scalar] = field(default_factory=list)

    def apply(self, op: LinearPDE) -> LinearPDE:
        return op.subs(self.solution)


def solve_linear(equations: Sequence[Scalar], unknowns: Sequence[str]) -> LinearSolution:
    """Homogeneous linear system with constant coefficients, via exact RREF.

    Columns are ordered so that unknowns listed last are preferred as free
    parameters.
    """
    syms = [sp.Symbol(u) for u in unknowns]
    col = {x: j for j, x in enumerate(syms)}
    rows = []
    for eq in equations:
        num = sp.expand(sp.fraction(eq.expr)[0])
        if num == 0:
            continue
        row = [sp.Integer(0)] * len(syms)
        for term in sp.Add.make_args(num):
            coeff, var = term.as_independent(*syms, as_Add=False)
            if var not in col:
                raise ValueError(f"equation is not linear homogeneous: {eq}")
            row[col[var]] += coeff
        rows.append([to_field(c) for c in row])
    if not rows:
        return LinearSolution({}, list(unknowns), [])
    M = DomainMatrix(rows, (len(rows), len(syms)), FIELD)
    R, pivots = M.rref()
    dense = R.to_Matrix()
    solution = {}
    eqs = []
    for r, pc in enumerate(pivots):
        expr = sp.Integer(0)
        for j in range(len(syms)):
            if j != pc and dense[r, j] != 0:
                expr -= dense[r, j] * syms[j]
        solution[unknowns[pc]] = Scalar(expr)
        eqs.append(Scalar(syms[pc] - expr))
    free = [u for j, u in enumerate(unknowns) if j not in pivots]
    return LinearSolution(solution, free, eqs)


@dataclass
class RotationResult:
    order: int
    solution: LinearSolution
    operator: LinearPDE
    systems: List[ConstraintSystem]

    @property
    def equations(self) -> List[Scalar]:
        return self.solution.equations

    def describe(self) -> List[str]:
        lines = []
        for name, val in self.solution.solution.items():
            lines.append(f"{name} = {val}")
        lines.append("free: " + ", ".join(self.solution.free))
        return lines

    def to_dict(self) -> dict:
        return {"order": self.order,
                "solution": {k: v.to_text() for k, v in self.solution.solution.items()},
                "free": list(self.solution.free),
                "operator": self.operator.to_text()}


def rotation_constraints(order: int, rotations: Sequence[FrameTransform] = None) -> RotationResult:
    """Constraints on the general order-``order`` operator from the sampled rotations."""
    if order not in (2, 3, 4):
        raise ValueError("order must be 2, 3 or 4")
    op, names = general_operator(order)
    rotations = standard_rotations() if rotations is None else rotations
    systems = []
    equations = []
    for rot in rotations:
        cs = covariance_constraints(op, boost_operator(op, rot))
        systems.append(cs)
        equations.extend(cs.equations)
    # later columns become free parameters: put the conventional representatives last
    unknowns = sorted(names, key=lambda n: (len(n), n), reverse=True)
    sol = solve_linear(equations, unknowns)
    return RotationResult(order, sol, sol.apply(op), systems)
