"""Equation surfaces G(x, y, p) = 0 (or parametric charts) in the space of
contact elements, with the characteristic field and the criminant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import expr as ex
from .config import DEFAULT, Config
from .errors import InputError, NoConvergence, SingularJacobian
from .jets import Jet, evaluate_jet

XYP = ("x", "y", "p")
UV = ("u", "v")


@dataclass(frozen=True)
class Box:
    x_min: float = -1.0
    x_max: float = 1.0
    y_min: float = -1.0
    y_max: float = 1.0
    p_min: float = -1.0
    p_max: float = 1.0

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max and self.p_min < self.p_max):
            raise InputError(f"degenerate box {self.as_tuple()}")

    @classmethod
    def parse(cls, text: str) -> "Box":
        try:
            vals = [float(s) for s in text.split(",")]
        except ValueError as exc:
            raise InputError(f"box must be six numbers, got {text!r}") from exc
        if len(vals) != 6:
            raise InputError(f"box must be x_min,x_max,y_min,y_max,p_min,p_max; got {text!r}")
        return cls(*vals)

    def as_tuple(self) -> tuple[float, ...]:
        return (self.x_min, self.x_max, self.y_min, self.y_max, self.p_min, self.p_max)

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.x_min, self.y_min, self.p_min])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.x_max, self.y_max, self.p_max])

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, q, margin: float = 0.0) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.lower - margin) and np.all(q <= self.upper + margin))


@dataclass(frozen=True)
class CharacteristicField:
    """The lift (G_p, p G_p, -(G_x + p G_y)) of the direction field."""

    Vx: ex.Expression
    Vy: ex.Expression
    Vp: ex.Expression

    @cached_property
    def _fn(self):
        return ex.compile_expressions([self.Vx, self.Vy, self.Vp], XYP)

    def __call__(self, x: float, y: float, p: float) -> tuple[float, float, float]:
        return self._fn(x, y, p)


@dataclass(frozen=True)
class EquationSurface:
    """Implicit surface ``G(x, y, p) = 0`` or parametric chart ``(u, v) -> (x, y, p)``."""

    form: str
    G: ex.Expression | None = None
    chart: tuple[ex.Expression, ex.Expression, ex.Expression] | None = None
    box: Box = field(default_factory=Box)
    source: str = ""

    @classmethod
    def implicit(cls, G, box: Box | None = None, aliases=None) -> "EquationSurface":
        source = G if isinstance(G, str) else ex.to_string(G)
        if isinstance(G, str):
            G = _parse_equation(G, aliases)
        return cls("implicit", G=G, box=box or Box(), source=source)

    @classmethod
    def parametric(cls, x, y, p, box: Box | None = None) -> "EquationSurface":
        parts = [ex.parse_expression(s, UV) if isinstance(s, str) else s for s in (x, y, p)]
        source = ",".join(s if isinstance(s, str) else ex.to_string(s) for s in (x, y, p))
        return cls("parametric", chart=tuple(parts), box=box or Box(), source=source)

    def _require_implicit(self):
        if self.form != "implicit":
            raise InputError("operation needs an implicit surface G(x,y,p)=0")

    # -- derived expressions -----------------------------------------------

    @cached_property
    def derivatives(self) -> dict[str, ex.Expression]:
        self._require_implicit()
        G = self.G
        d = {"G": G}
        for a in XYP:
            d["G" + a] = ex.diff(G, a)
        C = ex.add(d["Gx"], ex.mul(ex.Var("p"), d["Gy"]))
        d["C"] = C
        for a in XYP:
            d["Gp" + a] = ex.diff(d["Gp"], a)
            d["C" + a] = ex.diff(C, a)
        return d

    def _compiled(self, names: Sequence[str], vectorized: bool):
        d = self.derivatives
        return ex.compile_expressions([d[n] for n in names], XYP, vectorized)

    @cached_property
    def _grad(self):
        return self._compiled(["G", "Gx", "Gy", "Gp"], False)

    @cached_property
    def _crim(self):
        return self._compiled(["G", "Gp", "Gx", "Gy", "Gp", "Gpx", "Gpy", "Gpp"], False)

    @cached_property
    def _crim_vec(self):
        return self._compiled(["G", "Gp", "Gx", "Gy", "Gp", "Gpx", "Gpy", "Gpp"], True)

    @cached_property
    def _G_vec(self):
        return self._compiled(["G"], True)

    @cached_property
    def _flow(self):
        # G, grad G and V in one call
        d = self.derivatives
        p = ex.Var("p")
        exprs = [d["G"], d["Gx"], d["Gy"], d["Gp"], ex.mul(p, d["Gp"]), ex.neg(d["C"])]
        return ex.compile_expressions(exprs, XYP)

    def value(self, q) -> float:
        return self._grad(*map(float, q))[0]

    def gradient(self, q) -> np.ndarray:
        return np.array(self._grad(*map(float, q))[1:])

    def jet(self, q, order: int = 3) -> Jet:
        self._require_implicit()
        return evaluate_jet(self.G, q, order, XYP)

    def G_vectorized(self, x, y, p) -> np.ndarray:
        with np.errstate(all="ignore"):
            return np.broadcast_to(self._G_vec(x, y, p)[0], np.broadcast(x, y, p).shape)


def _parse_equation(src: str, aliases=None) -> ex.Expression:
    """Parse ``G`` or ``lhs = rhs`` (read as lhs - rhs) over x, y, p."""
    aliases = {"ydot": ex.Var("p"), **(aliases or {})}
    if src.count("=") > 1:
        raise InputError("at most one '=' allowed in an equation")
    if "=" in src:
        lhs, rhs = src.split("=")
        return ex.sub(ex.parse_expression(lhs, XYP, aliases), ex.parse_expression(rhs, XYP, aliases))
    return ex.parse_expression(src, XYP, aliases)


def characteristic_field(s: EquationSurface) -> CharacteristicField:
    d = s.derivatives
    p = ex.Var("p")
    return CharacteristicField(d["Gp"], ex.mul(p, d["Gp"]), ex.neg(d["C"]))


def on_surface_project(s: EquationSurface, q, tol: float = 1e-12, max_iter: int = 25) -> np.ndarray:
    """Newton along grad G onto the surface."""
    q = np.array(q, dtype=float)
    for _ in range(max_iter + 1):
        try:
            g, gx, gy, gp = s._grad(*q)
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise NoConvergence(f"surface not evaluable at {q.tolist()}: {exc}") from exc
        if abs(g) <= tol:
            return q
        n2 = gx * gx + gy * gy + gp * gp
        if not math.isfinite(n2) or n2 <= 1e-24:
            raise NoConvergence(f"grad G vanishes near {q.tolist()}")
        q = q - (g / n2) * np.array([gx, gy, gp])
    raise NoConvergence(f"projection did not reach |G| <= {tol} from {q.tolist()}")


def parametric_pullback(s: EquationSurface, order: int = 7, at=(0.0, 0.0)) -> tuple[Jet, Jet, Jet]:
    if s.form != "parametric":
        raise InputError("parametric_pullback needs a parametric surface")
    return tuple(evaluate_jet(e, at, order, UV) for e in s.chart)


# -- grid seeding ------------------------------------------------------------

def grid_axes(box: Box, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (np.linspace(box.x_min, box.x_max, n), np.linspace(box.y_min, box.y_max, n),
            np.linspace(box.p_min, box.p_max, n))


def sign_change_cells(s: EquationSurface, box: Box, n: int) -> np.ndarray:
    """Centres of grid cells across which G changes sign (or vanishes)."""
    xs, ys, ps = grid_axes(box, n)
    X, Y, P = np.meshgrid(xs, ys, ps, indexing="ij")
    g = s.G_vectorized(X, Y, P)
    g = np.where(np.isfinite(g), g, np.nan)
    corners = [g[i:n - 1 + i, j:n - 1 + j, k:n - 1 + k] for i in (0, 1) for j in (0, 1) for k in (0, 1)]
    stack = np.stack(corners)
    with np.errstate(invalid="ignore"):
        lo, hi = np.nanmin(stack, axis=0), np.nanmax(stack, axis=0)
    mask = (lo <= 0) & (hi >= 0)
    idx = np.argwhere(mask)
    cx = 0.5 * (xs[:-1] + xs[1:])
    cy = 0.5 * (ys[:-1] + ys[1:])
    cp = 0.5 * (ps[:-1] + ps[1:])
    return np.column_stack([cx[idx[:, 0]], cy[idx[:, 1]], cp[idx[:, 2]]]) if len(idx) else np.zeros((0, 3))


def vector_newton(fun, seeds: np.ndarray, iters: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Batched Gauss-Newton with minimum-norm steps.

    `fun(X)` returns residuals (M, m) and Jacobians (M, m, 3) for the rows of
    X. Returns the final points and their residual sup-norms.
    """
    X = np.array(seeds, dtype=float)
    if len(X) == 0:
        return X, np.zeros(0)
    with np.errstate(all="ignore"):
        for _ in range(iters):
            F, J = fun(X)
            JJt = J @ np.swapaxes(J, 1, 2)
            m = JJt.shape[1]
            lam = 1e-14 * np.trace(JJt, axis1=1, axis2=2)[:, None, None] + 1e-300
            y = np.linalg.solve(JJt + lam * np.eye(m)[None], F[..., None])
            step = (np.swapaxes(J, 1, 2) @ y)[..., 0]
            step = np.where(np.isfinite(step), step, 0.0)
            X = X - step
        F, _ = fun(X)
    res = np.max(np.abs(F), axis=1)
    res = np.where(np.isfinite(res), res, np.inf)
    return X, res


def dedupe(points: Sequence, radius: float) -> list[np.ndarray]:
    """Deterministic greedy deduplication in lexicographic order."""
    pts = sorted((np.asarray(q, dtype=float) for q in points), key=lambda a: tuple(np.round(a, 9)))
    out: list[np.ndarray] = []
    acc = np.zeros((0, pts[0].shape[0] if pts else 3))
    for q in pts:
        if len(acc) == 0 or np.min(np.sum((acc - q) ** 2, axis=1)) > radius * radius:
            out.append(q)
            acc = np.vstack([acc, q])
    return out


# -- criminant ---------------------------------------------------------------

@dataclass
class CriminantCurve:
    """Ordered samples of {G = 0, G_p = 0}; `discriminant` is the (x, y) shadow."""

    points: np.ndarray
    arclength: np.ndarray
    closed: bool = False
    rank_deficient: np.ndarray | None = None

    @property
    def discriminant(self) -> np.ndarray:
        return self.points[:, :2]

    def __len__(self) -> int:
        return len(self.points)

    @property
    def singular_points(self) -> np.ndarray:
        if self.rank_deficient is None:
            return np.zeros((0, 3))
        return self.points[self.rank_deficient]


class _CriminantSystem:
    def __init__(self, s: EquationSurface):
        self.s = s

    def __call__(self, q):
        G, Gp, Gx, Gy, Gp2, Gpx, Gpy, Gpp = self.s._crim(*q)
        return (np.array([G, Gp]), np.array([[Gx, Gy, Gp2], [Gpx, Gpy, Gpp]]))

    def batched(self, X):
        vals = self.s._crim_vec(X[:, 0], X[:, 1], X[:, 2])
        vals = [np.broadcast_to(np.asarray(v, dtype=float), (len(X),)) for v in vals]
        G, Gp, Gx, Gy, Gp2, Gpx, Gpy, Gpp = vals
        F = np.column_stack([G, Gp])
        J = np.stack([np.column_stack([Gx, Gy, Gp2]), np.column_stack([Gpx, Gpy, Gpp])], axis=1)
        return F, J

    def correct(self, pred: np.ndarray, t: np.ndarray, tol: float, max_iter: int = 100):
        """Newton on (G, G_p) inside the plane through `pred` normal to `t`."""
        q = pred.copy()
        for it in range(max_iter):
            try:
                F, J = self(q)
            except (ValueError, ZeroDivisionError, OverflowError):
                return q, False, it
            A = np.vstack([J, t])
            b = np.concatenate([F, [t @ (q - pred)]])
            if not np.all(np.isfinite(A)) or not np.all(np.isfinite(b)):
                return q, False, it
            step = np.linalg.lstsq(A, b, rcond=None)[0]
            q = q - step
            if np.linalg.norm(step) <= 1e-15 * (1.0 + np.linalg.norm(q)):
                break
        F, _ = self(q)
        return q, bool(np.sum(np.abs(F)) <= tol), it

    def tangent(self, q) -> tuple[np.ndarray | None, bool]:
        _, J = self(q)
        c = np.cross(J[0], J[1])
        scale = np.linalg.norm(J[0]) * max(np.linalg.norm(J[1]), 1.0)
        nc = np.linalg.norm(c)
        if scale == 0.0 or nc <= 1e-7 * scale:
            return None, True
        return c / nc, False

    def probe_tangent(self, q, h, tol) -> np.ndarray | None:
        # rank-deficient start: search the null space of the Jacobian for the
        # direction along which the predictor needs the least correction
        _, J = self(q)
        _, sv, Vt = np.linalg.svd(J)
        sv = np.concatenate([sv, np.zeros(3 - len(sv))])
        null = Vt[sv <= 1e-6 * max(sv[0], 1e-300)]
        if len(null) == 0:
            return None
        if len(null) == 1:
            return null[0]
        best, best_d = None, math.inf
        for th in np.linspace(0.0, math.pi, 24, endpoint=False):
            d = math.cos(th) * null[0] + math.sin(th) * null[1]
            r, ok, _ = self.correct(q + h * d, d, tol)
            if ok:
                off = float(np.linalg.norm(r - q - h * d))
                if off < best_d:
                    best, best_d = d, off
        return best


def _trace_branch(system: _CriminantSystem, q0, t0, box: Box, h_min, h_max, tol, max_points):
    pts = [q0]
    flags = [False]
    t = t0
    h = h_max / 4
    length = 0.0
    closed = False
    while len(pts) < max_points:
        q = pts[-1]
        pred = q + h * t
        r, ok, iters = system.correct(pred, t, tol)
        dist = float(np.linalg.norm(r - q))
        if not ok or dist > min(2 * h, h_max) or dist < 0.1 * h:
            h *= 0.5
            if h < h_min:
                break
            continue
        if not box.contains(r):
            break
        t_new, degenerate = system.tangent(r)
        secant = (r - q) / dist
        if degenerate:
            t_new = secant
        elif t_new @ secant < 0:
            t_new = -t_new
        if t_new @ t < 0.5:
            h *= 0.5
            if h < h_min:
                break
            continue
        pts.append(r)
        flags.append(degenerate)
        length += dist
        t = t_new
        if length > 3 * h_max and np.linalg.norm(r - q0) < h:
            closed = True
            break
        if iters <= 4:
            h = min(h * 1.5, h_max)
    return pts, flags, closed


def trace_criminant(s: EquationSurface, box: Box | None = None, step: float = 0.05,
                    config: Config = DEFAULT, max_points: int = 20000) -> list[CriminantCurve]:
    """Trace every component of {G = G_p = 0} inside `box`.

    Seeds come from a grid scan for sign changes of G followed by batched
    Gauss-Newton; each seed not already covered is continued in both
    directions with a secant predictor and a corrector normal to the tangent.
    Sample spacing never exceeds `step`.
    """
    s._require_implicit()
    box = box or s.box
    h_max = min(step, config.step_max)
    h_min = min(1e-4, h_max / 8)
    tol = 1e-10
    system = _CriminantSystem(s)
    seeds = sign_change_cells(s, box, config.seed_grid)
    refined, res = vector_newton(system.batched, seeds)
    keep = [q for q, r in zip(refined, res) if r <= tol and box.contains(q)]
    keep = dedupe(keep, 1e-6)
    curves: list[CriminantCurve] = []
    covered: list[np.ndarray] = []
    for seed in keep:
        if covered and np.min(np.sum((np.vstack(covered) - seed) ** 2, axis=1)) <= (1.5 * h_max) ** 2:
            continue
        q0, ok, _ = system.correct(seed, np.zeros(3), tol)
        if not ok:
            continue
        t0, degenerate = system.tangent(q0)
        if degenerate:
            t0 = system.probe_tangent(q0, h_max / 4, tol)
            if t0 is None:
                curves.append(CriminantCurve(q0[None, :], np.zeros(1), False, np.array([True])))
                covered.append(q0[None, :])
                continue
        fwd, ffl, closed = _trace_branch(system, q0, t0, box, h_min, h_max, tol, max_points)
        if closed:
            pts, fl = fwd + [q0], ffl + [ffl[0]]
        else:
            bwd, bfl, _ = _trace_branch(system, q0, -t0, box, h_min, h_max, tol, max_points)
            pts = bwd[::-1] + fwd[1:]
            fl = bfl[::-1] + ffl[1:]
        arr = np.array(pts)
        seg = np.linalg.norm(np.diff(arr, axis=0), axis=1)
        arc = np.concatenate([[0.0], np.cumsum(seg)])
        curves.append(CriminantCurve(arr, arc, closed, np.array(fl, dtype=bool)))
        covered.append(arr)
    return curves


def criminant_jacobian_rank(s: EquationSurface, q, tol: float = 1e-9) -> int:
    _, J = _CriminantSystem(s)(np.asarray(q, dtype=float))
    sv = np.linalg.svd(J, compute_uv=False)
    return int(np.sum(sv > tol * max(1.0, sv[0])))


def check_regular(s: EquationSurface, q, tol: float = 1e-9) -> None:
    if criminant_jacobian_rank(s, q, tol) < 2:
        raise SingularJacobian(f"Jacobian of (G, G_p) drops rank at {list(q)}", q)
