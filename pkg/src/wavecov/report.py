"""Derivation reports.

A report is a list of claims, each citing the constraint equations it rests
on as ``<system>.<constraint id>``, plus the structured results the claims
describe.  Reports serialize deterministically to JSON and to a text trace.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .boost import ConstraintSystem
from .symbolic.operators import ExpLinearMultiplier, LinearPDE
from .symbolic.scalar import Scalar


@dataclass(frozen=True)
class Claim:
    key: str
    statement: str
    evidence: Tuple[str, ...]


@dataclass(frozen=True)
class TheoremFlag:
    name: str
    holds: bool
    statement: str
    evidence: Tuple[str, ...]


@dataclass
class DerivationReport:
    pipeline: str
    forced_zero: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    relations: Dict[str, Scalar] = field(default_factory=dict)
    ratios: Dict[str, Scalar] = field(default_factory=dict)
    generic_multiplier: Optional[ExpLinearMultiplier] = None
    multiplier: Optional[ExpLinearMultiplier] = None
    multiplier_text: str = ""
    final_equation: Optional[LinearPDE] = None
    final_text: str = ""
    theorem_flags: Dict[str, TheoremFlag] = field(default_factory=dict)
    systems: Dict[str, ConstraintSystem] = field(default_factory=dict)
    claims: List[Claim] = field(default_factory=list)
    trace: List[str] = field(default_factory=list)
    assumptions: List[Scalar] = field(default_factory=list)
    verdict: str = ""
    reproduced: bool = True

    # building ------------------------------------------------------------
    def add_system(self, name: str, cs: ConstraintSystem) -> ConstraintSystem:
        if name in self.systems:
            raise ValueError(f"duplicate system name {name!r}")
        self.systems[name] = cs
        self.trace.append(f"[{name}] {len(cs)} constraint(s)"
                          + (f", pivot {cs.pivot}" if cs.pivot else ""))
        for c in cs:
            self.trace.append(f"  {name}.{c.to_text()}")
        return cs

    def cite(self, system: str, eq: Scalar = None, source: str = None) -> str:
        """Id of the constraint in ``system`` matching ``eq`` and/or ``source``."""
        for c in self.systems[system]:
            if (eq is None or c.equation == eq) and (source is None or c.source == source):
                return f"{system}.{c.id}"
        raise KeyError(f"no constraint {eq} ({source}) in system {system!r}")

    def claim(self, key: str, statement: str, evidence: Sequence[str]) -> Claim:
        ev = tuple(evidence)
        if not ev:
            raise ValueError(f"claim {key!r} has no evidence")
        c = Claim(key, statement, ev)
        self.claims.append(c)
        self.trace.append(f"{statement}    <= {', '.join(ev)}")
        return c

    def flag(self, name: str, holds: bool, statement: str, evidence: Sequence[str]) -> TheoremFlag:
        f = TheoremFlag(name, bool(holds), statement, tuple(evidence))
        self.theorem_flags[name] = f
        self.claim(f"theorem:{name}", f"{name}: {statement} [{'holds' if holds else 'FAILS'}]", evidence)
        if not holds:
            self.reproduced = False
        return f

    def check(self, ok: bool, what: str) -> bool:
        if not ok:
            self.reproduced = False
            self.trace.append(f"MISMATCH: {what}")
        return ok

    def note(self, line: str) -> None:
        self.trace.append(line)

    # validation ------------------------------------------------------------
    def dangling_evidence(self) -> List[str]:
        """Evidence ids that do not name an existing constraint."""
        known = {f"{n}.{c.id}" for n, cs in self.systems.items() for c in cs}
        known |= {n for n, cs in self.systems.items() if cs.is_empty}
        bad = []
        for c in self.claims:
            bad.extend(e for e in c.evidence if e not in known)
        return bad

    # serialization ---------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "reproduced": self.reproduced,
            "verdict": self.verdict,
            "forced_zero": {k: list(v) for k, v in self.forced_zero.items()},
            "relations": {k: v.to_text() for k, v in self.relations.items()},
            "ratios": {k: v.to_text() for k, v in self.ratios.items()},
            "generic_multiplier": None if self.generic_multiplier is None else self.generic_multiplier.to_dict(),
            "multiplier": None if self.multiplier is None else self.multiplier.to_dict(),
            "multiplier_text": self.multiplier_text,
            "final_equation": None if self.final_equation is None else self.final_equation.to_text(),
            "final_text": self.final_text,
            "assumptions": [f"{a.to_text()} != 0" for a in self.assumptions],
            "theorem_flags": {k: {"holds": f.holds, "statement": f.statement, "evidence": list(f.evidence)}
                              for k, f in self.theorem_flags.items()},
            "claims": [{"key": c.key, "statement": c.statement, "evidence": list(c.evidence)}
                       for c in self.claims],
            "systems": {k: cs.to_dict() for k, cs in self.systems.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False)

    def to_text(self) -> str:
        head = [f"pipeline: {self.pipeline}", f"reproduced: {self.reproduced}"]
        if self.verdict:
            head.append(f"verdict: {self.verdict}")
        tail = [self.final_text] if self.final_text else []
        return "\n".join(head + self.trace + tail) + "\n"
