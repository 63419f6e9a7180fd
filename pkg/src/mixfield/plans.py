"""Claim plans for the constructed fields and their evaluation."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .coefficients import CoefficientKind, CoefficientReport, windowed_coefficient
from .errors import TooManyAtoms
from .exact import as_rational, format_rational
from .field import FieldModel, parse_rates
from .lattice import Point, sorted_points

A, R, RP, RS = (CoefficientKind.ALPHA, CoefficientKind.RHO,
                CoefficientKind.RHO_PRIME, CoefficientKind.RHO_STAR)


@dataclass(frozen=True)
class Claim:
    kind: CoefficientKind
    n: int
    expected: Fraction
    comparison: str = "equality"
    window: str | tuple[Point, ...] = "auto"

    def __post_init__(self):
        object.__setattr__(self, "kind", CoefficientKind(self.kind))
        object.__setattr__(self, "expected", as_rational(self.expected))
        if self.n < 1:
            raise ValueError("claims need n >= 1")
        if not 0 <= self.expected <= 1:
            raise ValueError("expected values lie in [0, 1]")
        if self.comparison not in ("equality", "lower-bound"):
            raise ValueError(f"unknown comparison {self.comparison!r}")
        if self.window != "auto":
            object.__setattr__(self, "window", sorted_points(tuple(p) for p in self.window))

    def label(self) -> str:
        op = "=" if self.comparison == "equality" else ">="
        return f"{self.kind.value}({self.n}) {op} {format_rational(self.expected)}"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "n": self.n,
            "expected": format_rational(self.expected),
            "comparison": self.comparison,
            "window": self.window if self.window == "auto" else [list(p) for p in self.window],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Claim":
        return cls(data["kind"], int(data["n"]), as_rational(str(data["expected"])),
                   data.get("comparison", "equality"), data.get("window", "auto"))


@dataclass(frozen=True)
class VerifyPlan:
    construction: str
    claims: tuple[Claim, ...]

    def to_json(self) -> str:
        body = {"construction": self.construction, "claims": [c.to_dict() for c in self.claims]}
        return json.dumps(body, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "VerifyPlan":
        data = json.loads(text)
        return cls(data["construction"], tuple(Claim.from_dict(c) for c in data["claims"]))


def default_plan(model: FieldModel) -> VerifyPlan:
    """The equalities stated for the construction that produced ``model``."""
    p = model.params
    tag = model.construction
    claims: list[Claim] = []
    if tag == "lemma31":
        n, theta = int(p["n"]), as_rational(p["theta"])
        claims = [Claim(A, n, theta / 4), Claim(RS, 1, theta), Claim(RS, n + 1, 0)]
    elif tag == "lemma41":
        claims = [Claim(RS, int(p["n"]), 1), Claim(R, 1, 1), Claim(R, 2, 0)]
    elif tag == "lemma42":
        L = int(p["L"])
        claims = [Claim(RS, n, 1) for n in range(1, L + 1)]
        claims += [Claim(R, 1, 1), Claim(R, 2, 0), Claim(RP, 2, 0)]
    elif tag == "thm14":
        for n, c in enumerate(parse_rates(p["rates"]), start=1):
            claims += [Claim(A, n, c / 4), Claim(R, n, c), Claim(RP, n, c), Claim(RS, n, c)]
    elif tag == "thm15":
        rates, L = parse_rates(p["rates"]), int(p["L"])
        claims = [Claim(RS, n, 1) for n in range(1, L + 1)]
        claims += [Claim(R, 1, 1), Claim(RP, 1, 1)]
        for n in range(2, min(L, len(rates)) + 1):
            claims += [Claim(R, n, rates[n - 1]), Claim(RP, n, rates[n - 1])]
    else:
        raise ValueError(f"no default plan for construction {tag!r}; pass --plan PATH")
    return VerifyPlan(tag, tuple(claims))


@dataclass
class ClaimResult:
    claim: Claim
    structural: CoefficientReport
    numeric: CoefficientReport | None
    note: str
    passed: bool

    def to_dict(self) -> dict:
        return {
            "claim": self.claim.to_dict(),
            "label": self.claim.label(),
            "structural": self.structural.to_dict(),
            "numeric": None if self.numeric is None else self.numeric.to_dict(),
            "note": self.note,
            "passed": self.passed,
        }


def _matches(value, expected: Fraction, comparison: str, tol: float) -> bool:
    if value is None:
        return False
    if isinstance(value, Fraction):
        return value == expected if comparison == "equality" else value >= expected
    if comparison == "equality":
        return abs(value - float(expected)) <= tol
    return value >= float(expected) - tol


def evaluate_claim(model: FieldModel, claim: Claim, *, tol: float = 1e-8, numeric: bool = True,
                   threads: int = 1) -> ClaimResult:
    window = None if claim.window == "auto" else claim.window
    rep = windowed_coefficient(model, claim.kind, claim.n, window, "structural")
    passed = rep.tight and _matches(rep.value, claim.expected, claim.comparison, tol)
    num_rep, note = None, ""
    if numeric:
        try:
            num_rep = windowed_coefficient(model, claim.kind, claim.n, window, "numeric",
                                           threads=threads)
        except TooManyAtoms as exc:
            note = f"numeric skipped: {exc}"
        else:
            if claim.kind is CoefficientKind.ALPHA:
                lower, upper = num_rep.bracket
                agree = lower == rep.bracket[0] and abs(upper - float(rep.bracket[1])) <= tol
            else:
                agree = abs(num_rep.value - float(rep.value)) <= tol
            note = "numeric agrees" if agree else "numeric DISAGREES"
            passed = passed and agree
    return ClaimResult(claim, rep, num_rep, note, passed)


def run_plan(model: FieldModel, plan: VerifyPlan | None = None, **kwargs) -> list[ClaimResult]:
    plan = default_plan(model) if plan is None else plan
    return [evaluate_claim(model, c, **kwargs) for c in plan.claims]
