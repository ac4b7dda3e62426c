"""Clairaut-type tests for implicit equations and the fold/cusp/cross-cap
classification of generating families F(t, x).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import expr as ex
from .classify import tangent_basis
from .config import DEFAULT, Config
from .errors import InputError, NotOnSurface
from .jets import Jet, _basis, evaluate_jet
from .surface import XYP, Box, CriminantCurve, EquationSurface, trace_criminant

TX = ("t", "x")

FAMILY_KINDS = ("Regular", "ClairautFold", "ClairautCusp", "ClairautCrossCap", "NonGeneric")

# integral-diagram normal forms (mu, g), numbered as in the classification theorem
DIAGRAMS = {
    "Regular": (1, "mu = v, g = (u, v)"),
    "ClairautFold": (2, "mu = v - u/2, g = (u, v^2)"),
    "ClairautCusp": (3, "mu = v + alpha(g), g = (u, v^3 + uv)"),
    "ClairautCrossCap": (4, "mu = v - u^2/2, g = (u, v^2/4)"),
}

# equation normal forms of each row
EQUATIONS = {
    "Regular": "p = 0",
    "ClairautFold": "p^2 = y",
    "ClairautCusp": "y = p*phi(x, p)",
    "ClairautCrossCap": "p^2 = x^2*y",
}


@dataclass(frozen=True)
class GeneratingFamily:
    """Germ F(t, x) at `base`; the induced equation is y = F, p = F_x."""

    F: ex.Expression
    base: tuple[float, float] = (0.0, 0.0)
    source: str = ""
    tol: float = 1e-9

    def __post_init__(self):
        value = self.jet.constant_term
        if abs(value) > self.tol:
            raise InputError(f"family must vanish at the base point, F = {value:.3g}")

    @classmethod
    def parse(cls, src: str, base=(0.0, 0.0), tol: float = 1e-9) -> "GeneratingFamily":
        return cls(ex.parse_expression(src, TX), tuple(map(float, base)), src, tol)

    @cached_property
    def jet(self) -> Jet:
        return evaluate_jet(self.F, self.base, 4, TX)

    def induced_equation(self) -> tuple[ex.Expression, ex.Expression]:
        """(y, p) as expressions in (t, x)."""
        return self.F, ex.diff(self.F, "x")


@dataclass
class ClairautReport:
    kind: str
    values: dict[str, float]
    reason: str | None = None

    @property
    def diagram(self) -> int | None:
        return DIAGRAMS[self.kind][0] if self.kind in DIAGRAMS else None

    @property
    def diagram_form(self) -> str | None:
        return DIAGRAMS[self.kind][1] if self.kind in DIAGRAMS else None

    @property
    def equation(self) -> str | None:
        return EQUATIONS.get(self.kind)

    @property
    def label(self) -> str:
        return f"NonGeneric({self.reason})" if self.kind == "NonGeneric" else self.kind


def classify_family(F: GeneratingFamily | str, config: Config = DEFAULT) -> ClairautReport:
    if isinstance(F, str):
        F = GeneratingFamily.parse(F, tol=config.tol_on_surface)
    j = F.jet
    vals = {
        "F_t": j.d("t"), "F_tt": j.d("t", "t"), "F_tx": j.d("t", "x"),
        "F_ttt": j.d("t", "t", "t"), "F_txx": j.d("t", "x", "x"),
    }
    nz = {k: abs(v) > config.tol_zero for k, v in vals.items()}
    if nz["F_t"]:
        kind = "Regular"
    elif nz["F_tt"] and nz["F_tx"]:
        kind = "ClairautFold"
    elif not nz["F_tt"] and nz["F_tx"] and nz["F_ttt"]:
        kind = "ClairautCusp"
    elif not nz["F_tx"] and nz["F_txx"] and nz["F_tt"]:
        kind = "ClairautCrossCap"
    else:
        return ClairautReport("NonGeneric", vals, "jet in the codimension >= 3 stratum")
    return ClairautReport(kind, vals)


# -- implicit Clairaut tests -------------------------------------------------

@dataclass
class Verdict:
    holds: bool
    worst: float = 0.0
    witness: tuple[float, ...] | None = None
    samples: int = 0
    detail: dict[str, object] = field(default_factory=dict)


def _criminant_samples(s: EquationSurface, box: Box | None, config: Config,
                       min_per_component: int = 64) -> list[CriminantCurve]:
    box = box or s.box
    step = min(0.05, box.diameter / 100)
    curves = trace_criminant(s, box, step, config)
    short = [c for c in curves if len(c) < min_per_component and c.arclength[-1] > 0]
    if short:
        finer = min(c.arclength[-1] for c in short) / (2 * min_per_component)
        curves = trace_criminant(s, box, max(finer, 1e-4), config)
    return curves


def _worst(values: np.ndarray, points: np.ndarray, larger_is_worse: bool):
    i = int(np.argmax(values) if larger_is_worse else np.argmin(values))
    return float(values[i]), tuple(float(c) for c in points[i])


def is_clairaut_type(s: EquationSurface, box: Box | None = None, config: Config = DEFAULT,
                     tol: float = 1e-8) -> Verdict:
    """Every criminant sample is contact-singular, |G_x + p G_y| <= tol."""
    curves = _criminant_samples(s, box, config)
    pts = np.vstack([c.points for c in curves]) if curves else np.zeros((0, 3))
    if len(pts) == 0:
        return Verdict(True, detail={"components": 0})
    C = ex.compile_expressions([s.derivatives["C"]], XYP, vectorized=True)
    vals = np.abs(np.broadcast_to(C(pts[:, 0], pts[:, 1], pts[:, 2])[0], (len(pts),)))
    worst, witness = _worst(vals, pts, True)
    return Verdict(bool(worst <= tol), worst, witness, len(pts), {"components": len(curves)})


def is_reduced(s: EquationSurface, box: Box | None = None, config: Config = DEFAULT,
               tol: float = 1e-6) -> Verdict:
    """G_p vanishes to first order on the surface at every criminant sample."""
    curves = _criminant_samples(s, box, config)
    pts = np.vstack([c.points for c in curves]) if curves else np.zeros((0, 3))
    if len(pts) == 0:
        return Verdict(True, detail={"components": 0})
    d = s.derivatives
    fn = ex.compile_expressions([d[n] for n in ("Gx", "Gy", "Gp", "Gpx", "Gpy", "Gpp")], XYP)
    norms = np.empty(len(pts))
    for i, q in enumerate(pts):
        v = fn(*q)
        n = np.array(v[:3])
        gq = np.array(v[3:])
        norms[i] = np.linalg.norm(tangent_basis(n) @ gq) if np.linalg.norm(n) > 0 else 0.0
    worst, witness = _worst(norms, pts, False)
    return Verdict(bool(worst > tol), worst, witness, len(pts), {"components": len(curves)})


def _product_matrix(factor: Jet, order_a: int) -> np.ndarray:
    """Columns: coefficients of (monomial * factor) truncated to factor.order."""
    basis = _basis(factor.nvars, order_a)
    cols = []
    for m in basis.monomials:
        mono = Jet.from_dict({m: 1.0}, factor.vars, factor.order, factor.point)
        cols.append((mono * factor).coeffs)
    return np.column_stack(cols)


@dataclass
class DaraResult:
    holds: bool
    order: int
    residual: float
    A: Jet
    B: Jet


def dara_check(s: EquationSurface, point=(0.0, 0.0, 0.0), order: int = 4,
               config: Config = DEFAULT, tol: float = 1e-8) -> DaraResult:
    """Jet-level test of G_x + p G_y = A G + B G_p at `point`, at order N."""
    point = tuple(float(c) for c in point)
    d = s.derivatives
    G = evaluate_jet(d["G"], point, order, XYP)
    if abs(G.constant_term) > config.tol_on_surface:
        raise NotOnSurface(f"|G| = {abs(G.constant_term):.3g} at base point {point}")
    Gp = evaluate_jet(d["Gp"], point, order, XYP)
    C = evaluate_jet(d["C"], point, order, XYP)
    M = np.hstack([_product_matrix(G, order - 1), _product_matrix(Gp, order - 1)])
    sol, *_ = np.linalg.lstsq(M, C.coeffs, rcond=None)
    residual = float(np.max(np.abs(M @ sol - C.coeffs))) if len(sol) else float(np.max(np.abs(C.coeffs)))
    n = len(sol) // 2
    A = Jet(XYP, order - 1, sol[:n], point)
    B = Jet(XYP, order - 1, sol[n:], point)
    return DaraResult(residual <= tol, order, residual, A, B)
