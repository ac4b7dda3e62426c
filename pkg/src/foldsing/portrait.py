"""Deterministic SVG phase portraits: projected phase curves, dashed
discriminant, and one glyph per classified singular point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence
from xml.sax.saxutils import quoteattr

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import expr as ex
from .classify import (SingularPointReport, classify_equilibrium, find_field_equilibria, restricted_linearization,
                       scan_implicit, tangent_basis)
from .clairaut import TX, GeneratingFamily, classify_family
from .config import DEFAULT, Config
from .errors import FoldsingError, InputError, NumericError
from .flow import FlowLimits, PhaseCurve, integrate
from .surface import Box, EquationSurface, on_surface_project, trace_criminant

SEED_STRATEGIES = ("grid", "list", "criminant", "eigen")

GLYPH_COLORS = {
    "NonresonanceSaddle": "#c0392b", "ResonanceSaddle": "#c0392b",
    "FoldedNonresonanceSaddle": "#c0392b", "FoldedResonanceSaddle": "#c0392b",
    "NonresonanceNode": "#27ae60", "FoldedNode": "#27ae60",
    "Focus": "#8e44ad", "FoldedFocus": "#8e44ad",
    "PleatedSingularPoint": "#d35400", "WhitneyUmbrellaPoint": "#2c3e50",
}


@dataclass(frozen=True)
class Viewport:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InputError("viewport must be nondegenerate")

    @classmethod
    def of(cls, box: Box) -> "Viewport":
        return cls(box.x_min, box.x_max, box.y_min, box.y_max)

    def contains(self, x: float, y: float, slack: float = 0.0) -> bool:
        sx = slack * (self.x_max - self.x_min)
        sy = slack * (self.y_max - self.y_min)
        return self.x_min - sx <= x <= self.x_max + sx and self.y_min - sy <= y <= self.y_max + sy


@dataclass(frozen=True)
class Style:
    curve: str = "#1f4e79"
    curve_width: float = 1.0
    discriminant: str = "#b03a2e"
    dash: str = "5 3"
    glyph_radius: float = 4.0
    background: str = "#ffffff"


@dataclass
class PortraitSpec:
    surface: EquationSurface | None = None
    vector_field: tuple[ex.Expression, ex.Expression] | None = None
    viewport: Viewport | None = None
    box: Box | None = None
    seeds: str = "grid"
    grid: int = 8
    points: Sequence[Sequence[float]] = ()
    style: Style = Style()
    width: int = 480
    height: int = 480
    limits: FlowLimits = field(default_factory=lambda: FlowLimits(max_length=4.0, max_steps=4000))

    def __post_init__(self):
        if (self.surface is None) == (self.vector_field is None):
            raise InputError("portrait needs exactly one of a surface or a plane field")
        if self.seeds not in SEED_STRATEGIES:
            raise InputError(f"seed strategy must be one of {SEED_STRATEGIES}")
        if self.grid < 1 or self.width < 16 or self.height < 16:
            raise InputError("grid must be >= 1 and the picture at least 16 px")
        if self.box is None:
            self.box = self.surface.box if self.surface is not None else Box()
        if self.viewport is None:
            self.viewport = Viewport.of(self.box)


@dataclass
class Portrait:
    spec: PortraitSpec
    curves: list[np.ndarray]
    discriminant: list[np.ndarray]
    glyphs: list[SingularPointReport]
    seed_count: int = 0
    equilibrium_seeds: int = 0
    events: dict[str, int] = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "curve_count": len(self.curves),
            "seed_count": self.seed_count,
            "equilibrium_seeds": self.equilibrium_seeds,
            "discriminant_components": len(self.discriminant),
            "events": dict(sorted(self.events.items())),
            "singular_points": [
                {"kind": g.kind, "point": list(g.location), "lambda": g.exponent} for g in self.glyphs
            ],
        }


# -- seeds -------------------------------------------------------------------

def p_roots(s: EquationSurface, x: float, y: float, p_min: float, p_max: float, samples: int = 64) -> list[float]:
    """Roots of G(x, y, .) on [p_min, p_max] by bracketing then Brent."""
    ps = np.linspace(p_min, p_max, samples)
    g = s.G_vectorized(np.full_like(ps, x), np.full_like(ps, y), ps)
    roots = []
    for i in range(samples - 1):
        a, b = g[i], g[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0.0:
            roots.append(float(ps[i]))
        elif a * b < 0:
            roots.append(brentq(lambda p: s.value((x, y, p)), ps[i], ps[i + 1], xtol=1e-14))
    if g[-1] == 0.0:
        roots.append(float(ps[-1]))
    return roots


def grid_seeds(s: EquationSurface, vp: Viewport, box: Box, n: int) -> list[tuple[float, float, float]]:
    # cell centres keep seeds off the viewport edges
    xs = vp.x_min + (np.arange(n) + 0.5) * (vp.x_max - vp.x_min) / n
    ys = vp.y_min + (np.arange(n) + 0.5) * (vp.y_max - vp.y_min) / n
    out = []
    for x in xs:
        for y in ys:
            for p in p_roots(s, float(x), float(y), box.p_min, box.p_max):
                out.append((float(x), float(y), p))
    return out


def criminant_seeds(s: EquationSurface, box: Box, n: int, offset: float = 0.05) -> list[tuple[float, float, float]]:
    """Points just off the criminant on both sheets, spread along each component."""
    out = []
    for c in trace_criminant(s, box):
        idx = np.unique(np.linspace(0, len(c) - 1, min(n, len(c))).astype(int))
        for i in idx:
            q = c.points[i]
            for dp in (-offset, offset):
                try:
                    r = on_surface_project(s, q + np.array([0.0, 0.0, dp]))
                except NumericError:
                    continue
                if box.contains(r):
                    out.append(tuple(float(v) for v in r))
    return out


def eigen_seeds(s: EquationSurface, q, delta: float = 1e-3):
    """Per real eigendirection at a folded equilibrium: (+seed, -seed, flow direction away from q)."""
    q = np.asarray(q, dtype=float)
    A = restricted_linearization(s, q)
    w, vecs = np.linalg.eig(A)
    if np.any(np.abs(np.imag(w)) > 1e-12):
        return []
    normal = s.gradient(q)
    B = tangent_basis(normal)
    out = []
    for mu, v in sorted(zip(np.real(w), np.real(vecs.T)), key=lambda t: -t[0]):
        e = B.T @ v
        e /= np.linalg.norm(e)
        pair = []
        for sign in (1.0, -1.0):
            pair.append(on_surface_project(s, q + sign * delta * e))
        out.append((pair[0], pair[1], 1 if mu > 0 else -1))
    return out


# -- curve assembly ----------------------------------------------------------

def _curve_xy(c: PhaseCurve) -> np.ndarray:
    return c.projection


def _join(back: np.ndarray, fwd: np.ndarray) -> np.ndarray:
    if len(back) == 0:
        return fwd
    return np.vstack([back[::-1], fwd[1:]]) if len(fwd) else back[::-1]


def _count(events: dict, curve: PhaseCurve):
    for _, e in curve.events:
        events[e] = events.get(e, 0) + 1


def _surface_curves(spec: PortraitSpec, glyphs, config: Config):
    s, box, vp = spec.surface, spec.box, spec.viewport
    curves, events = [], {}
    eq_seeds = 0
    if spec.seeds == "eigen":
        seeds_used = 0
        for g in glyphs:
            if not g.kind.startswith("Folded") or g.kind in ("FoldedRegular",):
                continue
            for plus, minus, direction in eigen_seeds(s, g.location):
                seeds_used += 1
                a = integrate(s, plus, direction, spec.limits, box, config)
                b = integrate(s, minus, direction, spec.limits, box, config)
                _count(events, a)
                _count(events, b)
                mid = np.array([g.location[:2]])
                curves.append(np.vstack([_curve_xy(b)[::-1], mid, _curve_xy(a)]))
        return curves, events, seeds_used, 0
    if spec.seeds == "grid":
        seeds = grid_seeds(s, vp, box, spec.grid)
    elif spec.seeds == "criminant":
        seeds = criminant_seeds(s, box, spec.grid)
    else:
        seeds = [tuple(map(float, q)) for q in spec.points]
    for q in seeds:
        halves = []
        for direction in (-1, 1):
            try:
                c = integrate(s, q, direction, spec.limits, box, config)
            except FoldsingError:
                # a half that cannot be integrated keeps only its seed point
                halves.append(np.array([q[:2]], dtype=float))
                continue
            _count(events, c)
            halves.append(_curve_xy(c) if c.length > 0.0 else None)
        if halves[0] is None and halves[1] is None:
            eq_seeds += 1
            continue
        back, fwd = (h if h is not None else np.array([q[:2]], dtype=float) for h in halves)
        curves.append(_join(back, fwd))
    return curves, events, len(seeds), eq_seeds


def _field_curves(spec: PortraitSpec, config: Config):
    f = ex.compile_expressions(list(spec.vector_field), ("x", "y"))
    vp = spec.viewport
    scale = max(vp.x_max - vp.x_min, vp.y_max - vp.y_min)

    def rhs(_t, z, sign):
        a, b = f(z[0], z[1])
        n = np.hypot(a, b)
        return [sign * a / np.sqrt(n * n + 1e-6), sign * b / np.sqrt(n * n + 1e-6)]

    def leave(_t, z, _sign):
        return min(z[0] - vp.x_min, vp.x_max - z[0], z[1] - vp.y_min, vp.y_max - z[1])

    leave.terminal = True
    n = spec.grid
    if spec.seeds == "list":
        seeds = [tuple(map(float, q[:2])) for q in spec.points]
    else:
        xs = vp.x_min + (np.arange(n) + 0.5) * (vp.x_max - vp.x_min) / n
        ys = vp.y_min + (np.arange(n) + 0.5) * (vp.y_max - vp.y_min) / n
        seeds = [(float(x), float(y)) for x in xs for y in ys]
    curves, eq = [], 0
    for q in seeds:
        if np.hypot(*f(*q)) < 1e-12:
            eq += 1
            continue
        halves = []
        for sign in (1.0, -1.0):
            sol = solve_ivp(rhs, (0.0, spec.limits.max_length * scale), list(q), args=(sign,),
                            events=leave, max_step=scale / 100, rtol=1e-8, atol=1e-10)
            halves.append(sol.y.T)
        curves.append(_join(halves[1], halves[0]))
    return curves, {}, len(seeds), eq


def _field_glyphs(spec: PortraitSpec, config: Config) -> list[SingularPointReport]:
    b = spec.box
    vp = spec.viewport
    box = Box(vp.x_min, vp.x_max, vp.y_min, vp.y_max, b.p_min, b.p_max)
    return [classify_equilibrium(spec.vector_field, q, config) for q in find_field_equilibria(spec.vector_field, box, config)]


def build(spec: PortraitSpec, config: Config = DEFAULT) -> Portrait:
    if spec.surface is not None:
        s = spec.surface
        glyphs = [g for g in scan_implicit(s, spec.box, config)
                  if g.kind != "NonsingularPoint" and spec.viewport.contains(*g.location[:2])]
        discriminant = [c.discriminant for c in trace_criminant(s, spec.box, config=config)]
        curves, events, seeds, eq = _surface_curves(spec, glyphs, config)
    else:
        glyphs = [g for g in _field_glyphs(spec, config) if g.kind != "NonsingularPoint"]
        discriminant = []
        curves, events, seeds, eq = _field_curves(spec, config)
    return Portrait(spec, curves, discriminant, glyphs, seeds, eq, events)


# -- SVG ---------------------------------------------------------------------

class _Canvas:
    margin = 20.0

    def __init__(self, vp: Viewport, width: int, height: int):
        self.vp, self.w, self.h = vp, width, height

    def px(self, x: float, y: float) -> tuple[float, float]:
        m = self.margin
        sx = (x - self.vp.x_min) / (self.vp.x_max - self.vp.x_min)
        sy = (y - self.vp.y_min) / (self.vp.y_max - self.vp.y_min)
        return m + sx * (self.w - 2 * m), self.h - m - sy * (self.h - 2 * m)

    def segments(self, xy: np.ndarray, slack: float = 0.02) -> list[str]:
        """Path data for the parts of a polyline inside the (slightly enlarged) viewport."""
        out, cur = [], []
        for x, y in xy:
            if np.isfinite(x) and np.isfinite(y) and self.vp.contains(x, y, slack):
                X, Y = self.px(x, y)
                pt = f"{X:.2f} {Y:.2f}"
                if not cur or cur[-1] != pt:
                    cur.append(pt)
            else:
                if len(cur) > 1:
                    out.append(cur)
                cur = []
        if len(cur) > 1:
            out.append(cur)
        return ["M " + " L ".join(seg) for seg in out]


def _fmt_lambda(v) -> str:
    return "" if v is None else f"{v:.6g}"


def _svg(vp: Viewport, width: int, height: int, style: Style, curve_paths, disc_paths, glyphs, title: str) -> str:
    cv = _Canvas(vp, width, height)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<title>{_esc(title)}</title>",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="{style.background}"/>',
        '<g class="axes" stroke="#999999" stroke-width="0.5">',
    ]
    x0, y0 = cv.px(vp.x_min, vp.y_min)
    x1, y1 = cv.px(vp.x_max, vp.y_max)
    lines.append(f'<rect x="{x0:.2f}" y="{y1:.2f}" width="{x1 - x0:.2f}" height="{y0 - y1:.2f}" fill="none"/>')
    if vp.x_min < 0 < vp.x_max:
        ax, _ = cv.px(0.0, 0.0)
        lines.append(f'<line x1="{ax:.2f}" y1="{y1:.2f}" x2="{ax:.2f}" y2="{y0:.2f}"/>')
    if vp.y_min < 0 < vp.y_max:
        _, ay = cv.px(0.0, 0.0)
        lines.append(f'<line x1="{x0:.2f}" y1="{ay:.2f}" x2="{x1:.2f}" y2="{ay:.2f}"/>')
    lines.append("</g>")
    lines.append(f'<g class="curves" fill="none" stroke="{style.curve}" stroke-width="{style.curve_width}">')
    for xy in curve_paths:
        d = " ".join(cv.segments(np.asarray(xy)))
        if d:
            lines.append(f'<path class="phase-curve" d="{d}"/>')
    lines.append("</g>")
    lines.append(f'<g class="discriminant" fill="none" stroke="{style.discriminant}" stroke-width="1.5" '
                 f'stroke-dasharray="{style.dash}">')
    for xy in disc_paths:
        d = " ".join(cv.segments(np.asarray(xy)))
        if d:
            lines.append(f'<path class="discriminant" d="{d}"/>')
    lines.append("</g>")
    lines.append('<g class="glyphs">')
    for g in glyphs:
        X, Y = cv.px(*g.location[:2])
        color = GLYPH_COLORS.get(g.kind, "#7f8c8d")
        lines.append(f'<circle cx="{X:.2f}" cy="{Y:.2f}" r="{style.glyph_radius}" fill="{color}" '
                     f'data-kind={quoteattr(g.kind)} data-lambda={quoteattr(_fmt_lambda(g.exponent))}>'
                     f"<title>{_esc(g.label)}</title></circle>")
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def to_svg(portrait: Portrait) -> str:
    spec = portrait.spec
    title = spec.surface.source if spec.surface is not None else ",".join(ex.to_string(e) for e in spec.vector_field)
    return _svg(spec.viewport, spec.width, spec.height, spec.style, portrait.curves, portrait.discriminant,
                portrait.glyphs, title)


def render(spec: PortraitSpec, config: Config = DEFAULT) -> str:
    return to_svg(build(spec, config))


# -- generating families -----------------------------------------------------

def envelope_branches(F: GeneratingFamily, ts: np.ndarray, vp: Viewport, samples: int = 400) -> list[np.ndarray]:
    """Locus F_t = 0 projected to (x, F); one array per continuous root branch."""
    Ft = ex.compile_expressions([ex.diff(F.F, "t"), F.F], TX)
    xs = np.linspace(vp.x_min, vp.x_max, samples)
    branches: list[list] = []
    active: list[list] = []
    for t in ts:
        vals = np.array([Ft(float(t), float(x))[0] for x in xs])
        roots = []
        for i in range(samples - 1):
            a, b = vals[i], vals[i + 1]
            if a == 0.0:
                roots.append(float(xs[i]))
            elif a * b < 0:
                roots.append(brentq(lambda x: Ft(float(t), x)[0], xs[i], xs[i + 1], xtol=1e-14))
        pts = [(x, Ft(float(t), x)[1]) for x in roots]
        if len(pts) != len(active):
            branches.extend(active)
            active = [[p] for p in pts]
        else:
            for branch, p in zip(active, pts):
                branch.append(p)
    branches.extend(active)
    return [np.array(b) for b in branches if len(b) > 1]


def render_family(F: GeneratingFamily | str, t_range: tuple[float, float] = (-1.0, 1.0), count: int = 17,
                  viewport: Viewport | None = None, width: int = 480, height: int = 480, style: Style = Style(),
                  config: Config = DEFAULT) -> str:
    """Solution graphs y = F(t, x) for sampled t, with the dashed envelope."""
    if isinstance(F, str):
        F = GeneratingFamily.parse(F)
    vp = viewport or Viewport(-1.0, 1.0, -1.0, 1.0)
    report = classify_family(F, config)
    fn = ex.compile_expressions([F.F], TX, vectorized=True)
    xs = np.linspace(vp.x_min, vp.x_max, 241)
    ts = np.linspace(t_range[0], t_range[1], count)
    graphs = []
    for t in ts:
        ys = np.broadcast_to(np.asarray(fn(float(t), xs)[0], dtype=float), xs.shape)
        graphs.append(np.column_stack([xs, ys]))
    env = envelope_branches(F, np.linspace(t_range[0], t_range[1], 801), vp)
    title = f"{F.source or ex.to_string(F.F)} ({report.label})"
    return _svg(vp, width, height, style, graphs, env, [], title)
