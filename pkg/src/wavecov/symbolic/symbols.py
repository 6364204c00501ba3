"""Named symbols shared by every derivation.

Symbols are looked up by name.  Each carries a ``kind`` and a flag saying
whether the derivations may treat it as nonzero (masses, boost speeds,
Planck's constant, ...).  Nonzero symbols are the ones a constraint equation
may be divided by.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable

import sympy as sp

KINDS = ("parameter", "coordinate", "mass-like", "velocity-like")


@dataclass(frozen=True)
class Symbol:
    name: str
    kind: str = "parameter"
    nonzero: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if not self.name.isidentifier():
            raise ValueError(f"symbol name must be an identifier: {self.name!r}")

    @property
    def sym(self) -> sp.Symbol:
        return sp.Symbol(self.name)

    def __str__(self):
        return self.name


class SymbolTable:
    """Name-unique registry of :class:`Symbol`."""

    def __init__(self, symbols: Iterable[Symbol] = ()):
        self._by_name: Dict[str, Symbol] = {}
        for s in symbols:
            self.add(s)

    def add(self, symbol: Symbol) -> Symbol:
        old = self._by_name.get(symbol.name)
        if old is not None and old != symbol:
            raise ValueError(f"symbol {symbol.name!r} already registered as {old}")
        self._by_name[symbol.name] = symbol
        return symbol

    def declare(self, name: str, kind: str = "parameter", nonzero: bool = False) -> Symbol:
        return self.add(Symbol(name, kind, nonzero))

    def __getitem__(self, name: str) -> Symbol:
        return self._by_name[name]

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def get(self, name: str, default=None):
        return self._by_name.get(name, default)

    def is_nonzero(self, name: str) -> bool:
        s = self._by_name.get(name)
        return bool(s and s.nonzero)

    def names(self):
        return sorted(self._by_name)


COORDINATES = tuple(Symbol(f"x{mu}", "coordinate") for mu in range(4))

SYMBOLS = SymbolTable(COORDINATES)

for _name, _kind, _nz in [
    ("m", "mass-like", True),
    ("hbar", "mass-like", True),
    ("c", "velocity-like", True),
    ("v", "velocity-like", True),
    ("beta", "velocity-like", True),
    ("gamma", "parameter", True),
    ("V", "parameter", False),
    ("D", "parameter", True),
    ("g0", "parameter", True),
    ("f", "parameter", False),
    ("Psi0", "parameter", True),
    ("k", "parameter", False),
    ("omega", "parameter", False),
    # rotation-reduced second order equation, time coordinate t
    ("Abar", "parameter", False),
    ("Bbar", "parameter", True),
    ("Cbar", "parameter", False),
    # same equation with x0 = c t
    ("A", "parameter", False),
    ("B", "parameter", True),
    ("C", "parameter", False),
    # fourth order family
    ("Atil", "parameter", False),
    ("Btil", "parameter", False),
    ("Ctil", "parameter", False),
    ("atil", "parameter", False),
    ("btil", "parameter", False),
    ("bbar", "parameter", False),
]:
    SYMBOLS.declare(_name, _kind, _nz)

for _mu in range(4):
    SYMBOLS.declare(f"lam{_mu}", "parameter", False)


def sym(name: str) -> sp.Symbol:
    """sympy symbol for a registered (or ad hoc) name."""
    return sp.Symbol(name)


def is_nonzero(name: str) -> bool:
    return SYMBOLS.is_nonzero(name)
