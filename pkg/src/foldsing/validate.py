"""Built-in normal-form suite: each row of the three classification tables,
checked against the classifier that should recognise it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

from .clairaut import classify_family, dara_check, is_clairaut_type, is_reduced
from .classify import classify_equilibrium, classify_implicit_point, k_from_lambda
from .config import DEFAULT, Config
from .errors import FoldsingError
from .report import clairaut_equation_report, family_report, point_report, umbrella_report
from .surface import EquationSurface
from .umbrella import UmbrellaInput, reduce_and_integrate


@dataclass(frozen=True)
class Case:
    name: str
    table: str
    expected: str
    run: Callable[[Config], dict[str, Any]]
    check: Callable[[dict[str, Any]], bool] = lambda rep: True


def _field(f1: str, f2: str):
    def run(config):
        return point_report(classify_equilibrium([f1, f2], (0.0, 0.0), config), "field", f"{f1},{f2}", config)
    return run


def _equation(G: str, at=(0.0, 0.0, 0.0)):
    def run(config):
        s = EquationSurface.implicit(G)
        return point_report(classify_implicit_point(s, at, config), "equation", G, config)
    return run


def _umbrella(h: str):
    def run(config):
        return umbrella_report(reduce_and_integrate(UmbrellaInput.parse(h, config.jet_order), config),
                               f"v^2,u,{h}", config)
    return run


def _family(F: str):
    def run(config):
        return family_report(classify_family(F, config), F, config)
    return run


def _clairaut_equation(G: str):
    def run(config):
        s = EquationSurface.implicit(G)
        return clairaut_equation_report(G, (0, 0, 0), is_clairaut_type(s, config=config),
                                        is_reduced(s, config=config), dara_check(s, config=config), config)
    return run


def _near(key: str, value: float, tol: float = 1e-8):
    return lambda rep: rep[key] is not None and abs(rep[key] - value) <= tol


def _inv(expected: dict[str, Any]):
    return lambda rep: all(rep["invariants"].get(k) == v for k, v in expected.items())


def _k_eq(lam: float):
    return f"p^2 - y + ({k_from_lambda('saddle' if lam < 0 else 'node', lam)!r})*x^2"


CASES: tuple[Case, ...] = (
    Case("nonsingular point", "1", "NonsingularPoint", _field("1", "0")),
    Case("nonresonance saddle", "1", "NonresonanceSaddle", _field("x", "-sqrt(2)*y"),
         _near("lambda", -math.sqrt(2), 1e-9)),
    Case("resonance saddle -2/1", "1", "ResonanceSaddle", _field("x*(1 + x^2*y)", "-2*y"),
         lambda rep: rep["resonance"] == {"p": 2, "q": 1}),
    Case("nonresonance node", "1", "NonresonanceNode", _field("x", "pi*y"), _near("lambda", math.pi, 1e-9)),
    Case("focus", "1", "Focus", _field("x + 2*y", "-2*x + y"), _near("lambda", 2.0, 1e-9)),
    Case("folded regular point", "2", "FoldedRegular", _equation("p^2 - x")),
    Case("folded nonresonance saddle k=-1", "2", "FoldedNonresonanceSaddle", _equation("p^2 - y + x^2*(-1)"),
         _near("lambda", -(9 + math.sqrt(17)) / 8)),
    Case("folded resonance saddle -2/1", "2", "FoldedResonanceSaddle",
         _equation("p^2 - y - x^2/2 - x*x^3"), lambda rep: rep["resonance"] == {"p": 2, "q": 1}),
    Case("folded node k=1/20", "2", "FoldedNode", _equation("p^2 - y + x^2/20"),
         _near("lambda", (3 + math.sqrt(5)) / 2)),
    Case("folded node lambda=2.5", "2", "FoldedNode", _equation(_k_eq(2.5)), _near("lambda", 2.5, 1e-6)),
    Case("folded focus k=1", "2", "FoldedFocus", _equation("p^2 - y + x^2"), _near("lambda", 1 / math.sqrt(15))),
    Case("whitney umbrella point", "2", "WhitneyUmbrellaPoint", _umbrella("v*(v^2 - u)"),
         lambda rep: abs(rep["invariants"]["a0p"] - 2 / 3) <= 1e-10 and abs(rep["invariants"]["b0"] + 0.4) <= 1e-10),
    Case("pleated singular point", "2", "PleatedSingularPoint", _equation("x - p*(y + p^2)")),
    Case("regular family", "3", "Regular", _family("t + x"), _inv({"diagram": 1})),
    Case("clairaut fold", "3", "ClairautFold", _family("t^2 + t*x"), _inv({"diagram": 2})),
    Case("clairaut cusp", "3", "ClairautCusp", _family("t^3 + t*x"), _inv({"diagram": 3})),
    Case("clairaut cross cap", "3", "ClairautCrossCap", _family("t^2 + t*x^2"), _inv({"diagram": 4})),
    Case("non-reduced clairaut y - 2p^3", "clairaut", "clairaut_type, not reduced, not Dara",
         _clairaut_equation("y - 2*p^3"),
         _inv({"clairaut_type": True, "reduced": False, "dara": False})),
    Case("classical clairaut y = xp + p^2", "clairaut", "clairaut_type, reduced, Dara",
         _clairaut_equation("y - x*p - p^2"), _inv({"clairaut_type": True, "reduced": True, "dara": True})),
)


def run_suite(config: Config = DEFAULT) -> dict[str, Any]:
    rows = []
    for case in CASES:
        try:
            rep = case.run(config)
        except FoldsingError as exc:
            rows.append({"name": case.name, "table": case.table, "expected": case.expected,
                         "passed": False, "error": f"{type(exc).__name__}: {exc}", "report": None})
            continue
        kind_ok = rep["kind"] == case.expected if rep["kind"] is not None else True
        rows.append({"name": case.name, "table": case.table, "expected": case.expected,
                     "passed": bool(kind_ok and case.check(rep)), "error": None, "report": rep})
    passed = sum(r["passed"] for r in rows)
    return {"cases": rows, "passed": passed, "failed": len(rows) - passed, "config_digest": config.digest()}
