"""Constant-coefficient linear differential operators on (x0, x1, x2, x3).

Operators are polynomials in the commuting symbols d0..d3.  A
:class:`LinearPDE` stores the nonzero-order part as a map from
:class:`DerivativeMonomial` to :class:`Scalar` and keeps the zero-order slot
in ``potential``.  The potential may contain the opaque symbol ``f`` standing
for a strict scalar function; it is never differentiated.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import comb
from typing import Dict, Iterable, Iterator, Mapping, Tuple

import sympy as sp

from .scalar import ONE, ZERO, S, Scalar, canonical

NDIM = 4
MAX_ORDER = 4
ZERO_INDEX = (0, 0, 0, 0)

RawPoly = Dict[Tuple[int, ...], sp.Expr]


@dataclass(frozen=True, order=False)
class DerivativeMonomial:
    """Multi-index alpha over (d0, d1, d2, d3); order-free by construction."""

    alpha: Tuple[int, int, int, int]

    def __post_init__(self):
        a = tuple(int(x) for x in self.alpha)
        if len(a) != NDIM or any(x < 0 for x in a):
            raise ValueError(f"bad multi-index {self.alpha}")
        if sum(a) > MAX_ORDER:
            raise ValueError(f"derivative order {sum(a)} exceeds {MAX_ORDER}")
        object.__setattr__(self, "alpha", a)

    @classmethod
    def of(cls, *indices: int) -> "DerivativeMonomial":
        """Monomial from a list of derivative indices, e.g. ``of(0, 1)`` = d0 d1."""
        a = [0] * NDIM
        for mu in indices:
            a[mu] += 1
        return cls(tuple(a))

    @property
    def order(self) -> int:
        return sum(self.alpha)

    def sort_key(self):
        # graded lex, highest order first, then d0 before d1 ...
        return (-self.order, tuple(-x for x in self.alpha))

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def to_text(self) -> str:
        return "D(" + ",".join(map(str, self.alpha)) + ")"

    def pretty(self) -> str:
        if self.order == 0:
            return "1"
        parts = []
        for mu, a in enumerate(self.alpha):
            if a == 1:
                parts.append(f"d{mu}")
            elif a > 1:
                parts.append(f"d{mu}^{a}")
        return " ".join(parts)

    def __str__(self):
        return self.pretty()


def monomials(order: int) -> list:
    """All monomials of exactly ``order``, graded-lex sorted."""
    out = [DerivativeMonomial(a) for a in product(range(order + 1), repeat=NDIM) if sum(a) == order]
    return sorted(out)


# raw polynomial algebra over sympy coefficients --------------------------------

def raw_add(p: RawPoly, q: RawPoly, scale=1) -> RawPoly:
    out = dict(p)
    for k, c in q.items():
        out[k] = out.get(k, 0) + scale * c
    return out


def raw_mul(p: RawPoly, q: RawPoly) -> RawPoly:
    out: RawPoly = {}
    for ka, ca in p.items():
        for kb, cb in q.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            out[k] = out.get(k, 0) + ca * cb
    return out


def raw_pow(p: RawPoly, n: int) -> RawPoly:
    out: RawPoly = {ZERO_INDEX: sp.Integer(1)}
    for _ in range(n):
        out = raw_mul(out, p)
    return out


def raw_canonical(p: RawPoly) -> Dict[Tuple[int, ...], Scalar]:
    out = {}
    for k, c in p.items():
        s = Scalar._raw(canonical(sp.sympify(c)))
        if not s.is_zero:
            out[k] = s
    return out


class LinearPDE:
    """Linear differential operator sum_alpha c_alpha d^alpha + potential."""

    __slots__ = ("_terms", "_potential")

    def __init__(self, terms: Mapping = None, potential=ZERO):
        clean: Dict[DerivativeMonomial, Scalar] = {}
        pot = S(potential)
        for key, coeff in (terms or {}).items():
            mono = key if isinstance(key, DerivativeMonomial) else DerivativeMonomial(tuple(key))
            c = S(coeff)
            if mono.order == 0:
                pot = pot + c
                continue
            if mono in clean:
                c = clean[mono] + c
            if c.is_zero:
                clean.pop(mono, None)
            else:
                clean[mono] = c
        self._terms = dict(sorted(clean.items()))
        self._potential = pot

    # constructors ------------------------------------------------------
    @classmethod
    def from_raw(cls, raw: RawPoly) -> "LinearPDE":
        coeffs = raw_canonical(raw)
        pot = coeffs.pop(ZERO_INDEX, ZERO)
        return cls({DerivativeMonomial(k): v for k, v in coeffs.items()}, pot)

    def to_raw(self) -> RawPoly:
        raw: RawPoly = {m.alpha: c.expr for m, c in self._terms.items()}
        if not self._potential.is_zero:
            raw[ZERO_INDEX] = self._potential.expr
        return raw

    @classmethod
    def laplacian(cls, coeff=ONE, dims=(1, 2, 3)) -> "LinearPDE":
        c = S(coeff)
        return cls({DerivativeMonomial.of(j, j): c for j in dims})

    # access --------------------------------------------------------------
    @property
    def terms(self) -> Dict[DerivativeMonomial, Scalar]:
        return dict(self._terms)

    @property
    def potential(self) -> Scalar:
        return self._potential

    @property
    def potential_kind(self) -> str:
        p = self._potential
        if p.is_zero:
            return "zero"
        if p.has("f"):
            return "opaque"
        return "constant"

    def coefficient(self, mono) -> Scalar:
        if not isinstance(mono, DerivativeMonomial):
            mono = DerivativeMonomial(tuple(mono))
        if mono.order == 0:
            return self._potential
        return self._terms.get(mono, ZERO)

    def monomials(self) -> list:
        return list(self._terms)

    @property
    def order(self) -> int:
        return max((m.order for m in self._terms), default=0)

    @property
    def is_zero(self) -> bool:
        return not self._terms and self._potential.is_zero

    def items(self) -> Iterator:
        yield from self._terms.items()
        if not self._potential.is_zero:
            yield DerivativeMonomial(ZERO_INDEX), self._potential

    @property
    def free_symbols(self) -> frozenset:
        out = set(self._potential.free_symbols)
        for c in self._terms.values():
            out |= c.free_symbols
        return frozenset(out)

    # algebra -------------------------------------------------------------
    def __add__(self, other: "LinearPDE") -> "LinearPDE":
        return LinearPDE.from_raw(raw_add(self.to_raw(), other.to_raw()))

    def __sub__(self, other: "LinearPDE") -> "LinearPDE":
        return LinearPDE.from_raw(raw_add(self.to_raw(), other.to_raw(), -1))

    def __neg__(self):
        return self.scale(-1)

    def scale(self, factor) -> "LinearPDE":
        f = S(factor).expr
        return LinearPDE.from_raw({k: f * c for k, c in self.to_raw().items()})

    def compose(self, other: "LinearPDE") -> "LinearPDE":
        """Operator product self o other (constant coefficients commute)."""
        return LinearPDE.from_raw(raw_mul(self.to_raw(), other.to_raw()))

    def map_coefficients(self, fn) -> "LinearPDE":
        return LinearPDE({m: fn(c) for m, c in self._terms.items()}, fn(self._potential))

    def subs(self, bindings: Mapping) -> "LinearPDE":
        return self.map_coefficients(lambda c: c.subs(bindings))

    def symbol(self, k) -> Scalar:
        """Fourier symbol: the scalar obtained by replacing d_mu with k[mu]."""
        total = self._potential.expr
        for m, c in self._terms.items():
            term = c.expr
            for mu, a in enumerate(m.alpha):
                term = term * S(k[mu]).expr ** a
            total = total + term
        return Scalar(total)

    def __eq__(self, other):
        if not isinstance(other, LinearPDE):
            return NotImplemented
        return self._terms == other._terms and self._potential == other._potential

    def __hash__(self):
        return hash((tuple(self._terms.items()), self._potential))

    # text ----------------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"{m.to_text()}: {c.to_text()}" for m, c in self._terms.items()]
        lines.append(f"{DerivativeMonomial(ZERO_INDEX).to_text()}: {self._potential.to_text()}")
        return "\n".join(lines)

    @classmethod
    def parse(cls, text: str) -> "LinearPDE":
        terms = {}
        pot = ZERO
        for lineno, line in enumerate(text.strip().splitlines(), 1):
            head, sep, body = line.partition(":")
            head = head.strip()
            if not sep or not head.startswith("D(") or not head.endswith(")"):
                raise ValueError(f"line {lineno}: expected 'D(a,b,c,d): coeff', got {line!r}")
            alpha = tuple(int(x) for x in head[2:-1].split(","))
            coeff = Scalar.parse(body.strip())
            if sum(alpha) == 0:
                pot = pot + coeff
            else:
                terms[DerivativeMonomial(alpha)] = coeff
        return cls(terms, pot)

    def pretty(self) -> str:
        parts = [f"({c}) {m.pretty()}" for m, c in self._terms.items()]
        if not self._potential.is_zero:
            parts.append(f"({self._potential})")
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"LinearPDE({self.pretty()})"


class ExpLinearMultiplier:
    """g(x) = g0 * exp(sum_mu lam_mu x^mu)."""

    __slots__ = ("_g0", "_lam")

    def __init__(self, exponent: Iterable = (0, 0, 0, 0), prefactor=ONE):
        lam = tuple(S(x) for x in exponent)
        if len(lam) != NDIM:
            raise ValueError("exponent needs one coefficient per coordinate")
        g0 = S(prefactor)
        if g0.is_zero:
            raise ValueError("multiplier prefactor must be nonzero")
        self._g0 = g0
        self._lam = lam

    @classmethod
    def identity(cls) -> "ExpLinearMultiplier":
        return cls()

    @classmethod
    def unknown(cls, names=("lam0", "lam1", "lam2", "lam3")) -> "ExpLinearMultiplier":
        return cls([Scalar.symbol(n) for n in names])

    @property
    def prefactor(self) -> Scalar:
        return self._g0

    @property
    def exponent(self) -> Tuple[Scalar, ...]:
        return self._lam

    @property
    def is_constant(self) -> bool:
        return all(x.is_zero for x in self._lam)

    def derivative_factor(self, mono: DerivativeMonomial) -> Scalar:
        """d^alpha g / g, exact because d_mu g = lam_mu g."""
        out = ONE
        for mu, a in enumerate(mono.alpha):
            if a:
                out = out * self._lam[mu] ** a
        return out

    def __mul__(self, other: "ExpLinearMultiplier") -> "ExpLinearMultiplier":
        return ExpLinearMultiplier([a + b for a, b in zip(self._lam, other._lam)],
                                   self._g0 * other._g0)

    def subs(self, bindings: Mapping) -> "ExpLinearMultiplier":
        return ExpLinearMultiplier([x.subs(bindings) for x in self._lam], self._g0.subs(bindings))

    def exponent_form(self) -> Scalar:
        """The exponent as a scalar linear form in x0..x3."""
        return Scalar(sum((lam.expr * sp.Symbol(f"x{mu}") for mu, lam in enumerate(self._lam)),
                          sp.Integer(0)))

    def __eq__(self, other):
        if not isinstance(other, ExpLinearMultiplier):
            return NotImplemented
        return self._g0 == other._g0 and self._lam == other._lam

    def __hash__(self):
        return hash((self._g0, self._lam))

    def to_dict(self) -> dict:
        return {"prefactor": self._g0.to_text(),
                "exponent": [x.to_text() for x in self._lam]}

    def __repr__(self):
        return f"ExpLinearMultiplier(g0={self._g0}, exponent={self.exponent_form()})"


def shift_raw(raw: RawPoly, lam) -> RawPoly:
    """Substitute d_mu -> d_mu + lam_mu in a raw operator polynomial."""
    lam = [S(x).expr for x in lam]
    out: RawPoly = {}
    for alpha, c in raw.items():
        # product over mu of sum_j C(a, j) lam^(a-j) d^j
        partial: RawPoly = {ZERO_INDEX: c}
        for mu, a in enumerate(alpha):
            if a == 0:
                continue
            factor: RawPoly = {}
            for j in range(a + 1):
                key = tuple(j if nu == mu else 0 for nu in range(NDIM))
                factor[key] = comb(a, j) * lam[mu] ** (a - j)
            partial = raw_mul(partial, factor)
        out = raw_add(out, partial)
    return out


def apply_operator(op: LinearPDE, g: ExpLinearMultiplier) -> LinearPDE:
    """Operator O' with O(g Psi) = g (O' Psi)."""
    if g.is_constant:
        return op
    return LinearPDE.from_raw(shift_raw(op.to_raw(), g.exponent))
