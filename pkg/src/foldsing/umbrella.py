"""Whitney-umbrella analysis for 1-foldings (u, v) -> (v^2, u, h(u, v)).

The reduction normalises the handle (double-point curve) to u = v^2, factors
h = v (u - v^2) H, lifts the direction field to du/dv = 2 v^2 (u - v^2) H and
reads the invariants a(0), a'(0), b(0) off the symmetrised first integral
I = u + v^3 a(u) + v^5 b(u) + ...
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .config import DEFAULT, Config
from .errors import DegenerateH, InputError, NoHandle
from .jets import Jet, _basis, evaluate_jet, hadamard_factor, sqrt, truncated_ode_integral, univariate
from .surface import UV

Y_X = ("y", "x")


@dataclass(frozen=True)
class UmbrellaInput:
    h: ex.Expression
    order: int = 7
    source: str = ""
    tol: float = 1e-9

    def __post_init__(self):
        if self.order < 7:
            raise InputError("umbrella analysis needs jet order >= 7")
        if abs(self.jet_at(1).constant_term) > self.tol:
            raise InputError("h(0, 0) must vanish")

    @classmethod
    def parse(cls, src: str, order: int = 7, tol: float = 1e-9) -> "UmbrellaInput":
        return cls(ex.parse_expression(src, UV), order, src, tol)

    def jet_at(self, order: int) -> Jet:
        return evaluate_jet(self.h, (0.0, 0.0), order, UV)

    @property
    def jet(self) -> Jet:
        return self.jet_at(self.order)

    @property
    def working_order(self) -> int:
        # handle data are series in w = v^2, so the handle needs twice the v-degree
        return 2 * self.order + 1


@dataclass
class HandleCurve:
    """Handle u = w X(w), w = v^2."""

    X: Jet
    flipped: bool = False

    @property
    def X0(self) -> float:
        return self.X.constant_term

    @property
    def degenerate(self) -> bool:
        return abs(self.X0) <= 1e-9


@dataclass
class UmbrellaCertificate:
    detected: bool
    handle: HandleCurve
    H: Jet
    integral: Jet
    a0: float
    a0p: float
    b0: float
    nondegenerate: bool
    flipped: bool = False
    normalized: bool = False
    notes: list[str] = field(default_factory=list)
    lifted_integral: Jet | None = None  # I in the (u, v) chart before symmetrization

    @property
    def kind(self) -> str:
        return "WhitneyUmbrellaPoint" if self.nondegenerate else "NonGeneric"

    @property
    def invariants(self) -> tuple[float, float, float]:
        return (self.a0, self.a0p, self.b0)


# -- jet helpers -------------------------------------------------------------

def pad(j: Jet, order: int) -> Jet:
    """Embed in a higher order with zero coefficients above the original order."""
    if order <= j.order:
        return j.truncate(order)
    src, dst = _basis(j.nvars, j.order), _basis(j.nvars, order)
    out = np.zeros(len(dst.monomials))
    for m, c in zip(src.monomials, j.coeffs):
        out[dst.index[m]] = c
    return Jet(j.vars, order, out, j.point)


def _parity(j: Jet, var: str, odd: bool) -> Jet:
    k = j.vars.index(var)
    keep = np.array([(m[k] % 2 == 1) == odd for m in j.monomials])
    return Jet(j.vars, j.order, np.where(keep, j.coeffs, 0.0), j.point)


def even_part(j: Jet, var: str = "v") -> Jet:
    return _parity(j, var, False)


def odd_part(j: Jet, var: str = "v") -> Jet:
    return _parity(j, var, True)


def _even_to_w(j: Jet, var: str = "v", order: int | None = None) -> Jet:
    """Rewrite a jet even in `var` as a jet in w = var^2 (u^a v^(2b) -> u^a w^b)."""
    k = j.vars.index(var)
    if order is None:
        order = j.order // 2
    names = tuple("w" if i == k else n for i, n in enumerate(j.vars))
    terms = {}
    for m, c in zip(j.monomials, j.coeffs):
        if c != 0.0 and m[k] % 2 == 0:
            w = list(m)
            w[k] //= 2
            if sum(w) <= order:
                terms[tuple(w)] = c
    return Jet.from_dict(terms, names, order)


def _var(name: str, vars, order: int) -> Jet:
    return Jet.variable(name, vars, order)


def _lift_univariate(f: Jet, vars, slot: str) -> Jet:
    """Univariate jet f(z) seen as a jet in `vars` depending on `slot` only."""
    return f.compose([_var(slot, vars, f.order)])


def _of_square(f: Jet, v: Jet) -> Jet:
    """f(v^2) for a series f in w = v^2, kept at the order of v."""
    return pad(f, v.order).compose([v * v])


def _fixed_point(step, start: Jet, iterations: int) -> Jet:
    cur = start
    for _ in range(iterations):
        cur = step(cur)
    return cur


# -- handle ------------------------------------------------------------------

def detect_umbrella(inp: UmbrellaInput, config: Config = DEFAULT) -> bool:
    j = inp.jet_at(2)
    return abs(j.d("v")) <= config.tol_zero and abs(j.d("u", "v")) > config.tol_zero


def _handle_from_jet(h: Jet, tol: float) -> Jet:
    g = hadamard_factor(odd_part(h), "v", tol)
    gw = _even_to_w(g)
    gu = gw.d("u")
    if abs(gu) <= tol:
        raise NoHandle("odd part of h has vanishing u-coefficient at the origin")
    if abs(gw.constant_term) > tol:
        raise NoHandle("h_v(0, 0) does not vanish; no double-point curve through the origin")
    M = gw.order
    w = univariate([0.0, 1.0], "w", M)
    phi = _fixed_point(lambda f: f - gw.compose([f, w]) / gu, Jet.zero(("w",), M), M + 2)
    return hadamard_factor(phi, "w", max(tol, 1e-12))


def handle_curve(inp: UmbrellaInput, config: Config = DEFAULT) -> HandleCurve:
    """Double-point curve u = v^2 X(v^2) of the 1-folding."""
    return HandleCurve(_handle_from_jet(inp.jet_at(inp.working_order), config.tol_zero))


# -- reduction ---------------------------------------------------------------

def _on_axis(h: Jet) -> Jet:
    """h(y, 0) as a univariate jet in y."""
    terms = {(m[0],): c for m, c in zip(h.monomials, h.coeffs) if m[1] == 0}
    return Jet.from_dict(terms, ("y",), h.order)


def _on_handle(h: Jet, X: Jet) -> Jet:
    """h(w X(w), sqrt w) as a jet in w (h is even on the handle)."""
    v = univariate([0.0, 1.0], "v", h.order)
    u = v * v * _of_square(X, v)
    along = h.compose([u, v])
    return _even_to_w(along, "v")


def _invert_handle(X: Jet) -> Jet:
    """xi(y) with xi X(xi) = y."""
    n = X.order + 1
    y = univariate([0.0, 1.0], "y", n)
    Xinv = X.reciprocal()
    return _fixed_point(lambda xi: y * Xinv.compose([xi]), Jet.zero(("y",), n), n + 2)


def _invert_near_identity(U: Jet) -> Jet:
    """psi(U, v) with U(psi, v) = U, for U = u + higher-order terms."""
    vars, n = U.vars, U.order
    u, v = _var(vars[0], vars, n), _var(vars[1], vars, n)
    r = U - u
    return _fixed_point(lambda psi: u - r.compose([psi, v]), u, n + 1)


def _normalize_boundary(h: Jet, X: Jet, tol: float) -> Jet:
    """Coordinate change making h vanish on v = 0 and on the handle.

    Extends the two boundary direction fields to dy/dx = F(x, y), takes its
    first integral Phi = y + x I1 and uses Phi as the new y (and u).
    """
    f1t = hadamard_factor(_on_axis(h), "y", tol)
    f2x = _on_handle(h, X)
    xi = _invert_handle(X)
    f2t = hadamard_factor(f2x.compose([xi]), "y", tol)
    n = min(f1t.order, f2t.order, X.order + 1)
    y, x = _var("y", Y_X, n), _var("x", Y_X, n)
    xX = x * _lift_univariate(pad(X, n), Y_X, "x")
    F = (y - xX) * _lift_univariate(f1t.truncate(n), Y_X, "y") + xX * _lift_univariate(f2t.truncate(n), Y_X, "y")
    Phi = truncated_ode_integral(F, n + 1)
    # back on the surface: x = v^2, y = u
    m = min(Phi.order, h.order)
    u, v = _var("u", UV, m), _var("v", UV, m)
    sub = [u, v * v]
    U = Phi.compose(sub)
    P = Phi.partial("x").compose(sub) + Phi.partial("y").compose(sub) * h.truncate(m)
    psi = _invert_near_identity(U.truncate(P.order))
    return P.compose([psi, _var("v", UV, P.order)])


def _rescale(h: Jet, X: Jet) -> Jet:
    """Apply v~ = v sqrt(X(v^2)), x~ = x X(x); the handle becomes u = v~^2."""
    # X is known through w^K; the stretch factor then fixes h through degree 2K + 3
    n = min(h.order, 2 * X.order + 3)
    h = h.truncate(n)
    sigma_inv = sqrt(X).reciprocal()
    vt = univariate([0.0, 1.0], "v", n)
    v_of_vt = _fixed_point(lambda v: vt * _of_square(sigma_inv, v), Jet.zero(("v",), n), n + 2)
    # D = d(x X(x))/dx, the x-stretch factor dividing dy/dx
    D = X + univariate([0.0, 1.0], "w", X.order) * pad(X.partial("w"), X.order)
    vsub = _lift_univariate(v_of_vt, UV, "v")
    moved = h.compose([_var("u", UV, n), vsub])
    Dsub = _lift_univariate(_of_square(D, v_of_vt), UV, "v")
    return moved / Dsub


def _flip(h: Jet) -> Jet:
    """Chart u -> -u, y -> -y (so p -> -p)."""
    n = h.order
    return -h.compose([-_var("u", UV, n), _var("v", UV, n)])


def factor_H(h: Jet, tol: float) -> Jet:
    """H with h = v (u - v^2) H."""
    g = hadamard_factor(h, "v", tol)
    n = g.order
    s, v = _var("u", UV, n), _var("v", UV, n)
    on_s = hadamard_factor(g.compose([s + v * v, v]), "u", tol)
    m = on_s.order
    s, v = _var("u", UV, m), _var("v", UV, m)
    return on_s.compose([s - v * v, v])


def lifted_rhs(H: Jet, order: int) -> Jet:
    """Right side 2 v^2 (u - v^2) H of the lifted field du/dv, at `order`."""
    u, v = _var("u", UV, order), _var("v", UV, order)
    # the prefactor has degree >= 3, so padding H loses nothing through `order`
    return 2 * v * v * (u - v * v) * pad(H, order)


def symmetrize(I: Jet) -> Jet:
    """Re-express I in the coordinate u~ = (I(u, v) + I(u, -v)) / 2."""
    psi = _invert_near_identity(even_part(I))
    return I.compose([psi, _var("v", UV, I.order)])


def reduce_and_integrate(inp: UmbrellaInput, config: Config = DEFAULT) -> UmbrellaCertificate:
    tol = config.tol_zero
    if not detect_umbrella(inp, config):
        raise InputError("no Whitney umbrella at the origin (needs h_v = 0 and h_uv != 0)")
    N = inp.order
    h = inp.jet_at(inp.working_order)
    X = _handle_from_jet(h, tol)
    notes = []
    if abs(X.constant_term) <= tol:
        raise NoHandle("handle degenerates: X(0) = 0")
    normalized = False
    if max(np.max(np.abs(_on_axis(h).coeffs)), np.max(np.abs(_on_handle(h, X).coeffs))) > tol:
        # the boundary fields are series in x = v^2, so give them more room
        h = inp.jet_at(3 * N)
        h = _normalize_boundary(h, _handle_from_jet(h, tol), tol)
        X = _handle_from_jet(h, tol)
        normalized = True
        notes.append("boundary fields straightened by a first-integral coordinate change")
    flipped = X.constant_term < 0
    if flipped:
        h = _flip(h)
        X = -X
        notes.append("X(0) < 0: chart flipped by u -> -u")
    handle = HandleCurve(X, flipped)
    h = _rescale(h, X)
    H = factor_H(h, 1e-8)
    if abs(H.constant_term) <= tol:
        raise DegenerateH(f"|H(0,0)| = {abs(H.constant_term):.3g}")
    rhs = lifted_rhs(H, N)
    raw = truncated_ode_integral(rhs, N)
    I = symmetrize(raw)
    a0, a0p, b0 = I.coeff((0, 3)), I.coeff((1, 3)), I.coeff((0, 5))
    flag = abs(a0) <= tol and abs(a0p * b0) > tol
    return UmbrellaCertificate(True, handle, H, I, a0, a0p, b0, flag, flipped, normalized, notes, raw)
