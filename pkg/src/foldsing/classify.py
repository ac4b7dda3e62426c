"""Point-singularity classification for explicit plane fields and implicit
equations, by low-order jets at the point.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import expr as ex
from .config import DEFAULT, Config
from .errors import NotOnSurface, OutOfRange
from .jets import evaluate_jet
from .surface import (XYP, Box, EquationSurface, criminant_jacobian_rank, dedupe,
                      sign_change_cells, vector_newton)

KINDS = (
    "NonsingularPoint",
    "NonresonanceSaddle",
    "ResonanceSaddle",
    "NonresonanceNode",
    "Focus",
    "FoldedRegular",
    "FoldedNonresonanceSaddle",
    "FoldedResonanceSaddle",
    "FoldedNode",
    "FoldedFocus",
    "PleatedSingularPoint",
    "WhitneyUmbrellaPoint",
    "NonGeneric",
)

_EXPONENT_KINDS = {"NonresonanceSaddle", "ResonanceSaddle", "NonresonanceNode", "Focus",
                   "FoldedNonresonanceSaddle", "FoldedResonanceSaddle", "FoldedNode", "FoldedFocus"}


@dataclass
class SingularPointReport:
    location: tuple[float, ...]
    kind: str
    reason: str | None = None
    exponent: float | None = None
    k: float | None = None
    resonance: tuple[int, int] | None = None
    eigenvalues: tuple[complex, complex] | None = None
    residuals: dict[str, float] = field(default_factory=dict)
    invariants: dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        # plain Python scalars; sub-normal Newton leftovers read as zero
        self.location = tuple(0.0 if abs(c) < 1e-300 else float(c) for c in self.location)
        if self.exponent is not None:
            self.exponent = float(self.exponent)
        if self.k is not None:
            self.k = float(self.k)
        if self.eigenvalues is not None:
            self.eigenvalues = tuple(complex(m) for m in self.eigenvalues)

    @property
    def is_generic(self) -> bool:
        return self.kind != "NonGeneric"

    @property
    def label(self) -> str:
        return f"NonGeneric({self.reason})" if self.kind == "NonGeneric" else self.kind


# -- exponent / coefficient helpers ------------------------------------------

def resonance_detect(lam: float, max_den: int = 12, tol: float = 1e-6) -> tuple[int, int] | None:
    """Best rational approximation p/q of -lam with q <= max_den, if within tol."""
    if not math.isfinite(lam) or lam >= 0:
        return None
    frac = Fraction(-lam).limit_denominator(max_den)
    if frac.numerator <= 0 or abs(lam + float(frac)) > tol:
        return None
    return frac.numerator, frac.denominator


def k_from_lambda(kind: str, lam: float) -> float:
    if kind in ("saddle", "node"):
        if lam == -1.0:
            raise OutOfRange("lambda = -1 makes k undefined")
        return lam / (2 * lam + 2) ** 2
    if kind == "focus":
        if not lam > 0:
            raise OutOfRange("focus exponent must be positive")
        return (1 + lam ** -2) / 16
    raise ValueError(f"unknown kind {kind!r}")


def lambda_from_k(kind: str, k: float) -> float:
    if kind == "saddle":
        if not k < 0:
            raise OutOfRange("saddle needs k < 0")
    elif kind == "node":
        if not 0 < k < 1 / 16:
            raise OutOfRange("node needs 0 < k < 1/16")
    elif kind == "focus":
        if not k > 1 / 16:
            raise OutOfRange("focus needs k > 1/16")
        return 1 / math.sqrt(16 * k - 1)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    # 4k lam^2 + (8k - 1) lam + 4k = 0; the two roots are reciprocal
    disc = math.sqrt(1 - 16 * k)
    roots = ((1 - 8 * k + disc) / (8 * k), (1 - 8 * k - disc) / (8 * k))
    return max(roots, key=abs)


def k_lambda_convert(kind: str, value: float, direction: str = "lambda_to_k") -> float:
    if direction == "lambda_to_k":
        return k_from_lambda(kind, value)
    if direction == "k_to_lambda":
        return lambda_from_k(kind, value)
    raise ValueError("direction must be 'lambda_to_k' or 'k_to_lambda'")


def eigenvalues_2x2(A) -> tuple[complex, complex]:
    """Closed-form eigenvalues, larger real part first."""
    (a, b), (c, d) = A
    tr, det = a + d, a * d - b * c
    disc = tr * tr - 4 * det
    r = cmath.sqrt(disc)
    m1, m2 = (tr + r) / 2, (tr - r) / 2
    if disc >= 0:
        m1, m2 = complex(m1.real, 0.0), complex(m2.real, 0.0)
    return (m1, m2) if (m1.real, m1.imag) >= (m2.real, m2.imag) else (m2, m1)


def _is_real_pair(mu, scale: float, tol: float) -> bool:
    return abs(mu[0].imag) <= tol * scale and abs(mu[1].imag) <= tol * scale


def _ratio_ge_one(m1: float, m2: float) -> float:
    lam = m2 / m1
    return lam if abs(lam) >= 1 else 1 / lam


# -- explicit plane fields ---------------------------------------------------

def classify_equilibrium(f: Sequence, q=(0.0, 0.0), config: Config = DEFAULT) -> SingularPointReport:
    """Classify the point `q` of the plane field (f1, f2) over x, y."""
    f = [ex.parse_expression(e, ("x", "y")) if isinstance(e, str) else e for e in f]
    q = tuple(float(c) for c in q)
    tol = config.tol_zero
    j1 = evaluate_jet(f[0], q, 1, ("x", "y"))
    j2 = evaluate_jet(f[1], q, 1, ("x", "y"))
    value = math.hypot(j1.constant_term, j2.constant_term)
    if value > tol:
        return SingularPointReport(q, "NonsingularPoint", residuals={"field_norm": value})
    A = ((j1.d("x"), j1.d("y")), (j2.d("x"), j2.d("y")))
    mu = eigenvalues_2x2(A)
    scale = max(abs(mu[0]), abs(mu[1]), 1e-300)
    res = {"field_norm": value}
    if abs(mu[0]) <= tol or abs(mu[1]) <= tol:
        return SingularPointReport(q, "NonGeneric", "zero eigenvalue", eigenvalues=mu, residuals=res)
    if _is_real_pair(mu, scale, tol):
        m1, m2 = mu[0].real, mu[1].real
        if m1 * m2 < 0:
            lam = _ratio_ge_one(m1, m2)
            pq = resonance_detect(lam, config.resonance_max_den, config.resonance_tol)
            kind = "ResonanceSaddle" if pq else "NonresonanceSaddle"
            return SingularPointReport(q, kind, exponent=lam, resonance=pq, eigenvalues=mu, residuals=res)
        lam = _ratio_ge_one(m1, m2)
        eps = 1 if m1 > 0 else -1
        if abs(lam - round(lam)) <= config.resonance_tol:
            return SingularPointReport(q, "NonGeneric", "resonance node", exponent=None, eigenvalues=mu,
                                       residuals=res, invariants={"lambda": lam})
        return SingularPointReport(q, "NonresonanceNode", exponent=lam, eigenvalues=mu, residuals=res,
                                   invariants={"epsilon": eps})
    re, im = mu[0].real, abs(mu[0].imag)
    if abs(re) <= tol * scale:
        return SingularPointReport(q, "NonGeneric", "center (purely imaginary eigenvalues)",
                                   eigenvalues=mu, residuals=res)
    return SingularPointReport(q, "Focus", exponent=im / abs(re), eigenvalues=mu, residuals=res,
                               invariants={"epsilon": 1 if re > 0 else -1})


# -- implicit equations ------------------------------------------------------

def tangent_basis(normal) -> np.ndarray:
    """Orthonormal basis (2 rows) of the plane orthogonal to `normal`, by Gram-Schmidt."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    out = []
    for e in np.eye(3)[np.argsort(np.abs(n))]:
        w = e - (e @ n) * n
        for b in out:
            w = w - (w @ b) * b
        nw = np.linalg.norm(w)
        if nw > 1e-8:
            out.append(w / nw)
        if len(out) == 2:
            break
    return np.array(out)


def field_jacobian(s: EquationSurface, q) -> np.ndarray:
    """3x3 Jacobian of the characteristic field at q, from a 2-jet of G."""
    j = s.jet(q, 2)
    d = lambda *a: j.d(*a)  # noqa: E731
    p = q[2]
    Gx, Gy, Gp = d("x"), d("y"), d("p")
    # V = (G_p, p G_p, -(G_x + p G_y))
    dGp = np.array([d("p", "x"), d("p", "y"), d("p", "p")])
    dGx = np.array([d("x", "x"), d("x", "y"), d("x", "p")])
    dGy = np.array([d("y", "x"), d("y", "y"), d("y", "p")])
    row_x = dGp
    row_y = p * dGp + np.array([0.0, 0.0, Gp])
    row_p = -(dGx + p * dGy + np.array([0.0, 0.0, Gy]))
    return np.array([row_x, row_y, row_p])


def restricted_linearization(s: EquationSurface, q) -> np.ndarray:
    grad = s.jet(q, 1)
    normal = np.array([grad.d("x"), grad.d("y"), grad.d("p")])
    B = tangent_basis(normal)
    return B @ field_jacobian(s, q) @ B.T


def _folded_equilibrium(q, A, config: Config, res: dict) -> SingularPointReport:
    tol = config.tol_zero
    mu = eigenvalues_2x2(A)
    scale = max(abs(mu[0]), abs(mu[1]), 1e-300)
    if abs(mu[0]) <= tol or abs(mu[1]) <= tol:
        return SingularPointReport(q, "NonGeneric", "zero eigenvalue at folded equilibrium",
                                   eigenvalues=mu, residuals=res)
    if _is_real_pair(mu, scale, tol):
        m1, m2 = mu[0].real, mu[1].real
        if abs(m1 - m2) <= tol * scale:
            return SingularPointReport(q, "NonGeneric", "equal eigenvalues", eigenvalues=mu, residuals=res)
        lam = _ratio_ge_one(m1, m2)
        if m1 * m2 < 0:
            if abs(lam + 1) <= config.resonance_tol:
                return SingularPointReport(q, "NonGeneric", "folded saddle with exponent -1",
                                           eigenvalues=mu, residuals=res)
            k = k_from_lambda("saddle", lam)
            pq = resonance_detect(lam, config.resonance_max_den, config.resonance_tol)
            if pq:
                return SingularPointReport(q, "FoldedResonanceSaddle", exponent=lam, k=k, resonance=pq,
                                           eigenvalues=mu, residuals=res)
            return SingularPointReport(q, "FoldedNonresonanceSaddle", exponent=lam, k=k,
                                       eigenvalues=mu, residuals=res)
        if abs(lam - round(lam)) <= config.resonance_tol:
            return SingularPointReport(q, "NonGeneric", "resonance folded node", eigenvalues=mu,
                                       residuals=res, invariants={"lambda": lam})
        return SingularPointReport(q, "FoldedNode", exponent=lam, k=k_from_lambda("node", lam),
                                   eigenvalues=mu, residuals=res,
                                   invariants={"epsilon": 1 if m1 > 0 else -1})
    re, im = mu[0].real, abs(mu[0].imag)
    if abs(re) <= tol * scale:
        return SingularPointReport(q, "NonGeneric", "purely imaginary eigenvalues at folded equilibrium",
                                   eigenvalues=mu, residuals=res)
    lam = abs(re) / im
    return SingularPointReport(q, "FoldedFocus", exponent=lam, k=k_from_lambda("focus", lam),
                               eigenvalues=mu, residuals=res, invariants={"epsilon": 1 if re > 0 else -1})


def classify_implicit_point(s: EquationSurface, q, config: Config = DEFAULT) -> SingularPointReport:
    """Decision tree on the 3-jet of G at a point of the surface."""
    q = tuple(float(c) for c in q)
    j = s.jet(q, 3)
    tol = config.tol_zero
    G = j.constant_term
    if abs(G) > config.tol_on_surface:
        raise NotOnSurface(f"|G| = {abs(G):.3g} at {q} exceeds {config.tol_on_surface}")
    Gx, Gy, Gp = j.d("x"), j.d("y"), j.d("p")
    Gpp, Gppp = j.d("p", "p"), j.d("p", "p", "p")
    C = Gx + q[2] * Gy
    res = {"G": abs(G), "G_p": abs(Gp), "contact": abs(C)}
    if max(abs(Gx), abs(Gy), abs(Gp)) <= tol:
        return SingularPointReport(q, "NonGeneric", "surface not regular; use parametric umbrella analysis",
                                   residuals=res)
    if abs(Gp) > tol:
        return SingularPointReport(q, "NonsingularPoint", residuals=res)
    if abs(C) > tol:
        if abs(Gpp) > tol:
            return SingularPointReport(q, "FoldedRegular", residuals=res)
        if abs(Gppp) > tol:
            if criminant_jacobian_rank(s, q, tol) == 2:
                return SingularPointReport(q, "PleatedSingularPoint", residuals=res,
                                           invariants={"G_ppp": Gppp})
            return SingularPointReport(q, "NonGeneric", "criminant singular at pleat", residuals=res)
        return SingularPointReport(q, "NonGeneric", "G_pp = G_ppp = 0", residuals=res)
    if abs(Gpp) <= tol:
        return SingularPointReport(q, "NonGeneric", "G_pp = 0 at contact-singular point", residuals=res)
    return _folded_equilibrium(q, restricted_linearization(s, q), config, res)


# -- locating singular points ------------------------------------------------

def _batched_system(rows):
    """Residuals and Jacobians for rows of (function, (d/dx, d/dy, d/dp)) expressions."""
    exprs = [e for f, grad in rows for e in (f, *grad)]
    fn = ex.compile_expressions(exprs, XYP, vectorized=True)
    m = len(rows)

    def system(X):
        with np.errstate(all="ignore"):
            vals = fn(X[:, 0], X[:, 1], X[:, 2])
        vals = [np.broadcast_to(np.asarray(v, dtype=float), (len(X),)) for v in vals]
        F = np.column_stack([vals[4 * i] for i in range(m)])
        J = np.stack([np.column_stack(vals[4 * i + 1: 4 * i + 4]) for i in range(m)], axis=1)
        return F, J

    return system


def _solve_points(s: EquationSurface, box: Box, rows, config: Config, tol: float = 1e-10) -> list[tuple]:
    seeds = sign_change_cells(s, box, config.seed_grid)
    if len(seeds) == 0:
        return []
    X, res = vector_newton(_batched_system(rows), seeds, iters=40)
    ok = [x for x, r in zip(X, res) if r <= tol and box.contains(x)]
    return [tuple(0.0 if abs(c) < 1e-300 else float(c) for c in q) for q in dedupe(ok, 1e-6)]


def _row(e):
    return e, tuple(ex.diff(e, a) for a in XYP)


def find_folded_equilibria(s: EquationSurface, box: Box | None = None, config: Config = DEFAULT) -> list[tuple]:
    """All solutions of G = G_p = G_x + p G_y = 0 in the box."""
    d = s.derivatives
    return _solve_points(s, box or s.box, [_row(d["G"]), _row(d["Gp"]), _row(d["C"])], config)


def find_pleats(s: EquationSurface, box: Box | None = None, config: Config = DEFAULT) -> list[tuple]:
    """Criminant points with G_pp = 0 (candidate pleated points)."""
    d = s.derivatives
    return _solve_points(s, box or s.box, [_row(d["G"]), _row(d["Gp"]), _row(d["Gpp"])], config)


def scan_implicit(s: EquationSurface, box: Box | None = None, config: Config = DEFAULT) -> list[SingularPointReport]:
    points = find_folded_equilibria(s, box, config) + find_pleats(s, box, config)
    points = [tuple(q) for q in dedupe(points, 1e-6)] if points else []
    return [classify_implicit_point(s, q, config) for q in points]


def find_field_equilibria(f: Sequence, box: Box, config: Config = DEFAULT) -> list[tuple]:
    f = [ex.parse_expression(e, ("x", "y")) if isinstance(e, str) else e for e in f]
    exprs = [f[0], ex.diff(f[0], "x"), ex.diff(f[0], "y"), f[1], ex.diff(f[1], "x"), ex.diff(f[1], "y")]
    fn = ex.compile_expressions(exprs, ("x", "y"), vectorized=True)
    n = config.seed_grid
    xs = np.linspace(box.x_min, box.x_max, n)
    ys = np.linspace(box.y_min, box.y_max, n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    Z = np.column_stack([X.ravel(), Y.ravel()])
    with np.errstate(all="ignore"):
        for _ in range(40):
            v = [np.broadcast_to(np.asarray(a, dtype=float), (len(Z),)) for a in fn(Z[:, 0], Z[:, 1])]
            det = v[1] * v[5] - v[2] * v[4]
            det = np.where(np.abs(det) < 1e-300, 1e-300, det)
            dx = (v[0] * v[5] - v[3] * v[2]) / det
            dy = (v[1] * v[3] - v[4] * v[0]) / det
            Z = Z - np.column_stack([dx, dy])
        v = [np.broadcast_to(np.asarray(a, dtype=float), (len(Z),)) for a in fn(Z[:, 0], Z[:, 1])]
    res = np.abs(v[0]) + np.abs(v[3])
    inside = (Z[:, 0] >= box.x_min) & (Z[:, 0] <= box.x_max) & (Z[:, 1] >= box.y_min) & (Z[:, 1] <= box.y_max)
    ok = Z[np.isfinite(res) & (res <= 1e-10) & inside]
    return [tuple(float(c) for c in q) for q in dedupe(list(ok), 1e-6)] if len(ok) else []
