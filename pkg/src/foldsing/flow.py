"""Phase curves: integration of the characteristic field on the equation
surface, with projection back to G = 0 after every step.

The field is normalised as W = V / sqrt(|V|^2 + eps^2), so away from
contact-singular points the parameter is (nearly) arclength while orbits
slow down, rather than jump, where V vanishes. The true arclength is
integrated alongside and reported as ``t``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .config import DEFAULT, Config
from .errors import NoConvergence, OutOfRange, ProjectionFailure
from .expr import compile_expressions
from .surface import XYP, Box, EquationSurface, on_surface_project

EVENTS = ("CriminantCrossing", "EquilibriumApproach", "BoxExit", "StepLimit")
REGULARIZATION = 1e-3
EQUILIBRIUM_NORM = 1e-8

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_A_MAT = np.zeros((7, 7))
for _i, _row in enumerate(_A):
    _A_MAT[_i, : len(_row)] = _row
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


@dataclass
class FlowLimits:
    max_length: float = 10.0
    max_steps: int = 20000
    max_step: float | None = None


@dataclass
class PhaseCurve:
    """Samples (t, x, y, p) with t the arclength from the seed."""

    samples: np.ndarray
    events: list[tuple[int, str]] = field(default_factory=list)
    seed: tuple[float, float, float] = (0.0, 0.0, 0.0)
    direction: int = 1

    @property
    def t(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def points(self) -> np.ndarray:
        return self.samples[:, 1:4]

    @property
    def projection(self) -> np.ndarray:
        return self.samples[:, 1:3]

    @property
    def length(self) -> float:
        return float(self.samples[-1, 0]) if len(self.samples) else 0.0

    def __len__(self) -> int:
        return len(self.samples)

    def marks(self, label: str) -> list[int]:
        return [i for i, e in self.events if e == label]

    def event_at(self, i: int) -> str:
        return ";".join(e for j, e in self.events if j == i)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("t,x,y,p,event\n")
        for i, row in enumerate(self.samples):
            out.write(",".join(format(float(v), ".12g") for v in row) + "," + self.event_at(i) + "\n")
        return out.getvalue()


class _Stepper:
    """W-field on the surface plus one Dormand-Prince step; state (x, y, p, s)."""

    def __init__(self, s: EquationSurface, direction: int):
        self.surface = s
        self.flow = s._flow
        self.sign = 1.0 if direction >= 0 else -1.0

    def V(self, q) -> np.ndarray:
        vals = self.flow(*q[:3])
        return np.array(vals[3:])

    def rhs(self, z) -> np.ndarray:
        _, _, _, a, b, c = self.flow(z[0], z[1], z[2])
        n2 = a * a + b * b + c * c
        scale = self.sign / math.sqrt(n2 + REGULARIZATION ** 2)
        return np.array((a * scale, b * scale, c * scale, math.sqrt(n2) * abs(scale)))

    def step(self, z, h):
        K = np.empty((7, 4))
        K[0] = self.rhs(z)
        for i in range(1, 7):
            K[i] = self.rhs(z + h * (_A_MAT[i, :i] @ K[:i]))
        z5 = z + h * (_B5 @ K)
        err = h * ((_B5 - _B4) @ K)
        return z5, float(np.max(np.abs(err[:3])))

    def project(self, z) -> np.ndarray:
        try:
            q = on_surface_project(self.surface, z[:3])
        except NoConvergence as exc:
            raise ProjectionFailure(f"left the surface tube near {z[:3].tolist()}: {exc}") from exc
        return np.append(q, z[3])


def _box_margin(box: Box, q) -> float:
    return float(min(np.min(q[:3] - box.lower), np.min(box.upper - q[:3])))


def _fraction_root(fun, lo: float = 0.0, hi: float = 1.0) -> float:
    return brentq(fun, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)


def integrate(s: EquationSurface, seed, direction: int = 1, limits: FlowLimits | None = None,
              box: Box | None = None, config: Config = DEFAULT) -> PhaseCurve:
    """Follow the characteristic field from `seed` until an event stops it."""
    limits = limits or FlowLimits()
    box = box or s.box
    st = _Stepper(s, direction)
    z = st.project(np.append(np.asarray(seed, dtype=float), 0.0))
    seed_q = tuple(float(c) for c in z[:3])
    if not box.contains(z[:3]):
        raise OutOfRange(f"seed {seed_q} lies outside the box")
    rows = [z.copy()]
    events: list[tuple[int, str]] = []
    if np.linalg.norm(st.V(z)) < EQUILIBRIUM_NORM:
        events.append((0, "EquilibriumApproach"))
        return _finish(rows, events, seed_q, direction, s)
    h_max = min(config.step_max, limits.max_step or config.step_max)
    h_min = min(config.step_min, h_max)
    h = h_max / 4
    tol = config.integrator_tol
    for _ in range(limits.max_steps):
        z_new, err = st.step(z, h)
        if err > tol and h > h_min:
            h = max(h_min, h * max(0.2, 0.9 * (tol / err) ** 0.2))
            continue
        z_new = st.project(z_new)
        if not box.contains(z_new[:3]):
            theta = _fraction_root(lambda th: _box_margin(box, st.project(st.step(z, th * h)[0])))
            rows.append(st.project(st.step(z, theta * h)[0]))
            events.append((len(rows) - 1, "BoxExit"))
            break
        if z_new[3] >= limits.max_length:
            theta = _fraction_root(lambda th: st.step(z, th * h)[0][3] - limits.max_length)
            rows.append(st.project(st.step(z, theta * h)[0]))
            events.append((len(rows) - 1, "StepLimit"))
            break
        rows.append(z_new)
        z = z_new
        if np.linalg.norm(st.V(z)) < EQUILIBRIUM_NORM:
            events.append((len(rows) - 1, "EquilibriumApproach"))
            break
        growth = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * (tol / err) ** 0.2))
        h = min(h_max, max(h_min, h * growth))
    else:
        events.append((len(rows) - 1, "StepLimit"))
    return _finish(rows, events, seed_q, direction, s)


def _finish(rows, events, seed, direction, s) -> PhaseCurve:
    samples = np.array([[z[3], z[0], z[1], z[2]] for z in rows])
    curve = PhaseCurve(samples, events, seed, direction)
    return detect_events(curve, s)


def detect_events(curve: PhaseCurve, s: EquationSurface) -> PhaseCurve:
    """Insert CriminantCrossing rows where G_p changes sign between samples."""
    if len(curve) < 2:
        return curve
    st = _Stepper(s, curve.direction)
    Gp = compile_expressions([s.derivatives["Gp"]], XYP)
    z_rows = [np.array([r[1], r[2], r[3], r[0]]) for r in curve.samples]
    gp = [Gp(*z[:3])[0] for z in z_rows]
    if any(e == "CriminantCrossing" for _, e in curve.events):
        return curve
    new_rows = [z_rows[0]]
    index_map = {0: 0}
    crossings = []
    for i in range(1, len(z_rows)):
        a, b = gp[i - 1], gp[i]
        if a * b < 0:
            z0 = z_rows[i - 1]
            h = _tau_between(st, z0, z_rows[i])
            try:
                theta = _fraction_root(lambda th: Gp(*st.project(st.step(z0, th * h)[0])[:3])[0])
                zc = st.project(st.step(z0, theta * h)[0])
            except (ValueError, RuntimeError):
                zc = None
            if zc is not None:
                new_rows.append(zc)
                crossings.append(len(new_rows) - 1)
        new_rows.append(z_rows[i])
        index_map[i] = len(new_rows) - 1
    if not crossings:
        return curve
    events = [(index_map[i], e) for i, e in curve.events] + [(j, "CriminantCrossing") for j in crossings]
    events.sort()
    samples = np.array([[z[3], z[0], z[1], z[2]] for z in new_rows])
    return PhaseCurve(samples, events, curve.seed, curve.direction)


def _tau_between(st: _Stepper, z0, z1) -> float:
    """Field-parameter increment carrying z0 to z1: solve s(tau) = s1 by secant steps."""
    target = z1[3] - z0[3]
    speed = st.rhs(z0)[3]
    h = target / speed if speed > 0 else target
    for _ in range(30):
        got = st.step(z0, h)[0][3] - z0[3]
        if abs(got - target) <= 1e-15 * max(1.0, target):
            break
        rate = st.rhs(st.step(z0, h)[0])[3]
        if rate <= 0:
            break
        h += (target - got) / rate
    return h


def integrate_both(s: EquationSurface, seed, limits: FlowLimits | None = None, box: Box | None = None,
                   config: Config = DEFAULT) -> tuple[PhaseCurve, PhaseCurve]:
    return (integrate(s, seed, 1, limits, box, config), integrate(s, seed, -1, limits, box, config))


def tangency_defect(curve: PhaseCurve) -> float:
    """max |dy - p dx| / ds over consecutive samples, with p averaged (trapezoid)."""
    if len(curve) < 2:
        return 0.0
    S = curve.samples
    ds = np.diff(S[:, 0])
    dx, dy = np.diff(S[:, 1]), np.diff(S[:, 2])
    pm = 0.5 * (S[1:, 3] + S[:-1, 3])
    ok = ds > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(np.abs(dy[ok] - pm[ok] * dx[ok]) / ds[ok]))


def surface_residual(curve: PhaseCurve, s: EquationSurface) -> float:
    if len(curve) == 0:
        return 0.0
    P = curve.points
    return float(np.max(np.abs(s.G_vectorized(P[:, 0], P[:, 1], P[:, 2]))))
