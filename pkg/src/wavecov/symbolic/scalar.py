"""Exact scalars: rational functions over Q(i, sqrt 2).

A :class:`Scalar` wraps a sympy expression that has been brought to a
canonical form: numerator and denominator are polynomials in the free
symbols with coefficients in Q(i, sqrt 2), reduced by their gcd, with a monic
denominator.  Two scalars are equal iff their canonical expressions are
structurally equal.

The Lorentz factor is handled inside the canonical form: whenever the symbol
``beta`` occurs, powers beta**2 are rewritten as 1 - 1/gamma**2 and
denominators are rationalized, so the identity (1 - beta**2) gamma**2 = 1
holds syntactically.
"""
from __future__ import annotations

import re
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Mapping, Union

import sympy as sp

EXTENSION = (sp.sqrt(2), sp.I)
FIELD = sp.QQ.algebraic_field(*EXTENSION)

BETA = sp.Symbol("beta")
GAMMA = sp.Symbol("gamma")

_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_RESERVED = {"I": sp.I, "sqrt": sp.sqrt}


class InexactError(TypeError):
    """Raised when a floating point value reaches the exact layer."""


def _check_exact(expr: sp.Expr) -> None:
    if expr.has(sp.Float):
        raise InexactError(f"floating point value in exact expression: {expr}")
    for atom in expr.atoms(sp.Pow):
        if atom.exp.is_Rational and not atom.exp.is_Integer and atom.base != 2:
            raise InexactError(f"radical outside Q(i, sqrt 2): {atom}")
    bad = expr.atoms(sp.Function, sp.NumberSymbol)
    if bad:
        raise InexactError(f"non-algebraic atoms {bad} in {expr}")


_SQRT2_F = FIELD.from_sympy(sp.sqrt(2))
_I_F = FIELD.from_sympy(sp.I)
_UNITS = {(0, 0): FIELD.one, (1, 0): _SQRT2_F, (0, 1): _I_F, (1, 1): _SQRT2_F * _I_F}


def field_poly(expr: sp.Expr, gens) -> sp.Poly:
    """Poly over Q(i, sqrt 2) without sympy's generic number-field conversion."""
    gens = list(gens)
    aux = sp.Poly(expr, *gens, sp.sqrt(2), sp.I, domain=sp.QQ)
    rep = {}
    for monom, c in aux.terms():
        key = monom[:-2]
        unit = _UNITS[monom[-2:]]
        rep[key] = rep.get(key, FIELD.zero) + FIELD.convert(c, sp.QQ) * unit
    rep = {k: v for k, v in rep.items() if v}
    if not gens:
        return rep.get((), FIELD.zero)
    return sp.Poly.from_dict(rep, *gens, domain=FIELD) if rep else sp.Poly(0, *gens, domain=FIELD)


_UNIT_EXPR = {sp.Integer(1): (0, 0), sp.sqrt(2): (1, 0), sp.I: (0, 1), sp.sqrt(2) * sp.I: (1, 1)}


def to_field(expr: sp.Expr):
    """Field element for a constant expression in Q(i, sqrt 2)."""
    if expr.is_Rational:
        return FIELD.convert(expr, sp.QQ)
    expr = sp.expand(expr)
    out = FIELD.zero
    for term in sp.Add.make_args(expr):
        q, unit = term.as_coeff_Mul()
        key = _UNIT_EXPR.get(unit)
        if key is None or not q.is_Rational:
            return field_poly(expr, [])
        out += FIELD.convert(q, sp.QQ) * _UNITS[key]
    return out


def _is_field_constant(expr: sp.Expr) -> bool:
    return not expr.free_symbols


def _const_inverse(c: sp.Expr) -> sp.Expr:
    if c.is_Rational:
        return 1 / c
    return FIELD.to_sympy(FIELD.quo(FIELD.one, to_field(c)))


def _beta_reduce_poly(p: sp.Expr):
    """Write polynomial p as (a0, a1) with p = a0 + a1*beta modulo the gamma relation."""
    p = sp.expand(p)
    if not p.has(BETA):
        return p, sp.Integer(0)
    r = 1 - 1 / GAMMA**2
    a0 = sp.Integer(0)
    a1 = sp.Integer(0)
    for (k,), coeff in sp.Poly(p, BETA).terms():
        if k % 2:
            a1 += coeff * r ** (k // 2)
        else:
            a0 += coeff * r ** (k // 2)
    return a0, a1


def _reduce_lorentz(expr: sp.Expr) -> sp.Expr:
    num, den = sp.fraction(sp.together(expr))
    a0, a1 = _beta_reduce_poly(num)
    b0, b1 = _beta_reduce_poly(den)
    if b1 == 0:
        return (a0 + a1 * BETA) / b0
    r = 1 - 1 / GAMMA**2
    new_num = a0 * b0 - a1 * b1 * r + (a1 * b0 - a0 * b1) * BETA
    new_den = b0**2 - b1**2 * r
    return new_num / new_den


@lru_cache(maxsize=200_000)
def canonical(expr: sp.Expr) -> sp.Expr:
    """Canonical representative of ``expr`` in Q(i, sqrt 2)(symbols)."""
    if expr.has(BETA):
        expr = _reduce_lorentz(expr)
    num, den = sp.fraction(sp.together(expr))
    den = sp.expand(den)
    if den == 0:
        raise ZeroDivisionError(f"zero denominator in {expr}")
    if _is_field_constant(den):
        return sp.expand(sp.expand(num) * _const_inverse(den))
    num = sp.expand(num)
    if num == 0:
        return sp.Integer(0)
    gens = sorted(num.free_symbols | den.free_symbols, key=lambda s: s.name)
    P = field_poly(num, gens)
    Q = field_poly(den, gens)
    g = P.gcd(Q)
    if not g.is_ground:
        P = P.quo(g)
        Q = Q.quo(g)
    lc = Q.LC()
    P = P.quo_ground(lc)
    Q = Q.quo_ground(lc)
    q = sp.expand(Q.as_expr())
    p = sp.expand(P.as_expr())
    if q == 1:
        return p
    return p / q


def parse_expr(text: str) -> sp.Expr:
    """Parse the canonical text form; every identifier except I/sqrt is a symbol."""
    local = {}
    for name in _IDENT.findall(text):
        local[name] = _RESERVED.get(name) or sp.Symbol(name)
    return sp.parse_expr(text, local_dict=local, evaluate=True)


ScalarLike = Union["Scalar", int, Fraction, sp.Expr, str]


class Scalar:
    """Immutable exact scalar.  Construct from ints, Fractions, text or sympy."""

    __slots__ = ("_expr", "_hash")

    def __init__(self, value: ScalarLike = 0):
        if isinstance(value, Scalar):
            expr = value._expr
        else:
            expr = canonical(_to_sympy(value))
        object.__setattr__(self, "_expr", expr)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, key, value):
        raise AttributeError("Scalar is immutable")

    @classmethod
    def _raw(cls, expr: sp.Expr) -> "Scalar":
        s = object.__new__(cls)
        object.__setattr__(s, "_expr", expr)
        object.__setattr__(s, "_hash", None)
        return s

    @classmethod
    def symbol(cls, name) -> "Scalar":
        return cls._raw(sp.Symbol(str(name)))

    @classmethod
    def sqrt2(cls) -> "Scalar":
        return cls._raw(sp.sqrt(2))

    @classmethod
    def i(cls) -> "Scalar":
        return cls._raw(sp.I)

    @property
    def expr(self) -> sp.Expr:
        return self._expr

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        return Scalar(self._expr + _coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Scalar(self._expr - _coerce(other))

    def __rsub__(self, other):
        return Scalar(_coerce(other) - self._expr)

    def __mul__(self, other):
        return Scalar(self._expr * _coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Scalar(other)
        if o.is_zero:
            raise ZeroDivisionError(f"division of {self} by zero")
        return Scalar(self._expr / o._expr)

    def __rtruediv__(self, other):
        return Scalar(other) / self

    def __neg__(self):
        return Scalar(-self._expr)

    def __pos__(self):
        return self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers are exact")
        if n < 0:
            return Scalar(1) / Scalar(self._expr**-n)
        return Scalar(self._expr**n)

    # comparison -----------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Scalar):
            return self._expr == other._expr
        try:
            return self._expr == Scalar(other)._expr
        except (TypeError, sp.SympifyError):
            return NotImplemented

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash(self._expr)
            object.__setattr__(self, "_hash", h)
        return h

    @property
    def is_zero(self) -> bool:
        return self._expr == 0

    def __bool__(self):
        return not self.is_zero

    # structure ------------------------------------------------------------
    @property
    def free_symbols(self) -> frozenset:
        return frozenset(s.name for s in self._expr.free_symbols)

    def has(self, *names) -> bool:
        fs = self.free_symbols
        return any(str(n) in fs for n in names)

    @property
    def numerator(self) -> "Scalar":
        return Scalar._raw(sp.fraction(self._expr)[0])

    @property
    def denominator(self) -> "Scalar":
        return Scalar._raw(sp.fraction(self._expr)[1])

    def poly_coeffs(self, name) -> list:
        """Coefficients [c0, c1, ...] of a *polynomial* scalar in symbol ``name``."""
        num, den = sp.fraction(self._expr)
        x = sp.Symbol(str(name))
        if den.has(x):
            raise ValueError(f"{self} is not polynomial in {name}")
        p = sp.Poly(num, x)
        coeffs = list(reversed(p.all_coeffs()))
        return [Scalar(c / den) for c in coeffs]

    def degree(self, name) -> int:
        num, den = sp.fraction(self._expr)
        x = sp.Symbol(str(name))
        if den.has(x):
            raise ValueError(f"{self} is not polynomial in {name}")
        return sp.degree(num, x) if num.has(x) else 0

    def subs(self, bindings: Mapping) -> "Scalar":
        return substitute(self, bindings)

    def to_complex(self, values: Mapping = None) -> complex:
        e = self._expr
        if values:
            e = e.xreplace({sp.Symbol(str(k)): sp.nsimplify(v) if isinstance(v, Fraction) else v
                            for k, v in values.items()})
        return complex(sp.N(e, 30))

    # text -----------------------------------------------------------------
    def to_text(self) -> str:
        return sp.sstr(self._expr, order="grlex")

    @classmethod
    def parse(cls, text: str) -> "Scalar":
        return cls(parse_expr(text))

    def __str__(self):
        return self.to_text()

    def __repr__(self):
        return f"Scalar({self.to_text()!r})"


def _to_sympy(value) -> sp.Expr:
    if isinstance(value, Scalar):
        return value.expr
    if isinstance(value, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(value, int):
        return sp.Integer(value)
    if isinstance(value, (Fraction, Rational)):
        return sp.Rational(value.numerator, value.denominator)
    if isinstance(value, float):
        raise InexactError(f"float {value!r} is not exact; use Fraction or text")
    if isinstance(value, complex):
        raise InexactError(f"complex float {value!r} is not exact")
    if isinstance(value, str):
        expr = parse_expr(value)
    elif isinstance(value, sp.Basic):
        expr = value
    else:
        raise TypeError(f"cannot make a Scalar from {type(value).__name__}")
    _check_exact(expr)
    return expr


def _coerce(value) -> sp.Expr:
    if isinstance(value, Scalar):
        return value.expr
    return Scalar(value).expr


ZERO = Scalar(0)
ONE = Scalar(1)
I = Scalar.i()
SQRT2 = Scalar.sqrt2()


def S(value: ScalarLike) -> Scalar:
    return value if isinstance(value, Scalar) else Scalar(value)


def scalar_arith(a: ScalarLike, b: ScalarLike, op: str) -> Scalar:
    a, b = S(a), S(b)
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    if op == "sub":
        return a - b
    raise ValueError(f"unknown op {op!r}")


def _lorentz_gamma(beta_value: sp.Expr):
    """Exact gamma for a numeric beta when it stays inside the field, else None."""
    if beta_value.free_symbols:
        return None
    one_minus = sp.nsimplify(1 - beta_value**2)
    if one_minus == 0:
        raise ZeroDivisionError("beta = 1 has no Lorentz factor")
    root = sp.sqrt(one_minus)
    try:
        _check_exact(root)
    except InexactError:
        return None
    return canonical(1 / root)


def substitute(s: ScalarLike, bindings: Mapping) -> Scalar:
    """Simultaneous substitution followed by renormalization.

    Binding ``beta`` to a number also binds ``gamma`` when the Lorentz factor is
    exact in Q(i, sqrt 2) (e.g. beta = 0, 3/5).
    """
    s = S(s)
    table = {sp.Symbol(str(k)): _coerce(v) for k, v in bindings.items()}
    if BETA in table and GAMMA not in table:
        g = _lorentz_gamma(table[BETA])
        if g is not None:
            table[GAMMA] = g
    num, den = sp.fraction(s.expr)
    den2 = canonical(den.xreplace(table))
    if den2 == 0:
        raise ZeroDivisionError(f"substitution {bindings} makes the denominator of {s} vanish")
    num2 = num.xreplace(table)
    return Scalar(num2 / den2)


def symbols(names: Iterable[str]):
    return [Scalar.symbol(n) for n in names]
