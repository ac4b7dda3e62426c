"""Truncated multivariate Taylor series ("jets") in up to three variables.

A `Jet` stores the Taylor coefficients of a function at an expansion point,
densely, for all monomials of total degree <= order. Products and function
applications discard every term above the order exactly, so a jet computed
by forward evaluation of an expression agrees with the true Taylor
polynomial through that order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import JetDomainError, NoFormalSolution, NotDivisible
from .expr import BinOp, Call, Expression, Neg, Num, Pow, Var

DEFAULT_ORDER = 7


@dataclass(frozen=True)
class _Basis:
    nvars: int
    order: int
    monomials: tuple[tuple[int, ...], ...]
    index: Mapping[tuple[int, ...], int]
    degrees: np.ndarray
    multi_factorial: np.ndarray
    mul_i: np.ndarray
    mul_j: np.ndarray
    mul_k: np.ndarray


def _monomials(nvars: int, order: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], remaining: int, slots: int):
        if slots == 1:
            out.append(prefix + (remaining,))
            return
        for a in range(remaining, -1, -1):
            rec(prefix + (a,), remaining - a, slots - 1)

    for d in range(order + 1):
        rec((), d, nvars)
    return out


@lru_cache(maxsize=None)
def _basis(nvars: int, order: int) -> _Basis:
    # graded ordering: basis(n, N-1) is a prefix of basis(n, N)
    mons = _monomials(nvars, order)
    index = {m: i for i, m in enumerate(mons)}
    degrees = np.array([sum(m) for m in mons], dtype=int)
    mfact = np.array([math.prod(math.factorial(a) for a in m) for m in mons], dtype=float)
    ii, jj, kk = [], [], []
    for i, a in enumerate(mons):
        for j, b in enumerate(mons):
            if degrees[i] + degrees[j] <= order:
                ii.append(i)
                jj.append(j)
                kk.append(index[tuple(x + y for x, y in zip(a, b))])
    return _Basis(nvars, order, tuple(mons), index, degrees, mfact,
                  np.array(ii, dtype=int), np.array(jj, dtype=int), np.array(kk, dtype=int))


def basis_size(nvars: int, order: int) -> int:
    return math.comb(order + nvars, nvars)


class Jet:
    """Truncated Taylor series of a function of `vars` at `point`."""

    __slots__ = ("vars", "order", "coeffs", "point")

    def __init__(self, vars: Sequence[str], order: int, coeffs, point: Sequence[float] | None = None):
        vars = tuple(vars)
        if not 1 <= len(vars) <= 3:
            raise ValueError("jets support 1 to 3 variables")
        if order < 0:
            raise ValueError("order must be >= 0")
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (basis_size(len(vars), order),):
            raise ValueError(f"expected {basis_size(len(vars), order)} coefficients, got {coeffs.shape}")
        self.vars = vars
        self.order = int(order)
        self.coeffs = coeffs
        self.coeffs.setflags(write=False)
        self.point = tuple(float(c) for c in point) if point is not None else (0.0,) * len(vars)

    # -- construction ------------------------------------------------------

    @classmethod
    def zero(cls, vars, order, point=None) -> "Jet":
        return cls(vars, order, np.zeros(basis_size(len(tuple(vars)), order)), point)

    @classmethod
    def constant(cls, c: float, vars, order, point=None) -> "Jet":
        out = np.zeros(basis_size(len(tuple(vars)), order))
        out[0] = c
        return cls(vars, order, out, point)

    @classmethod
    def variable(cls, name: str, vars, order, point=None) -> "Jet":
        vars = tuple(vars)
        k = vars.index(name)
        pt = tuple(point) if point is not None else (0.0,) * len(vars)
        out = np.zeros(basis_size(len(vars), order))
        out[0] = pt[k]
        if order >= 1:
            e = [0] * len(vars)
            e[k] = 1
            out[_basis(len(vars), order).index[tuple(e)]] = 1.0
        return cls(vars, order, out, pt)

    @classmethod
    def from_dict(cls, terms: Mapping[tuple[int, ...], float], vars, order, point=None) -> "Jet":
        vars = tuple(vars)
        b = _basis(len(vars), order)
        out = np.zeros(len(b.monomials))
        for m, c in terms.items():
            if sum(m) <= order:
                out[b.index[tuple(m)]] += c
        return cls(vars, order, out, point)

    def _like(self, coeffs, order: int | None = None) -> "Jet":
        return Jet(self.vars, self.order if order is None else order, coeffs, self.point)

    # -- inspection --------------------------------------------------------

    @property
    def nvars(self) -> int:
        return len(self.vars)

    @property
    def monomials(self) -> tuple[tuple[int, ...], ...]:
        return _basis(self.nvars, self.order).monomials

    @property
    def constant_term(self) -> float:
        return float(self.coeffs[0])

    def _mono(self, m) -> tuple[int, ...]:
        if isinstance(m, str):
            e = [0] * self.nvars
            e[self.vars.index(m)] = 1
            return tuple(e)
        if isinstance(m, Mapping):
            return tuple(int(m.get(v, 0)) for v in self.vars)
        return tuple(m)

    def coeff(self, m) -> float:
        """Coefficient of a monomial (exponent tuple, var name, or {var: exp})."""
        m = self._mono(m)
        if sum(m) > self.order:
            raise ValueError(f"monomial {m} beyond jet order {self.order}")
        return float(self.coeffs[_basis(self.nvars, self.order).index[m]])

    __getitem__ = coeff

    def derivative_value(self, m) -> float:
        """Value of the partial derivative d^m f at the expansion point."""
        m = self._mono(m)
        return self.coeff(m) * math.prod(math.factorial(a) for a in m)

    def d(self, *names: str) -> float:
        """``j.d('p', 'p')`` is the second p-derivative at the expansion point."""
        e = [0] * self.nvars
        for n in names:
            e[self.vars.index(n)] += 1
        return self.derivative_value(tuple(e))

    def to_dict(self, tol: float = 0.0) -> dict[tuple[int, ...], float]:
        return {m: float(c) for m, c in zip(self.monomials, self.coeffs) if abs(c) > tol}

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def homogeneous(self, degree: int) -> dict[tuple[int, ...], float]:
        return {m: float(c) for m, c in zip(self.monomials, self.coeffs) if sum(m) == degree}

    def __call__(self, *offset: float) -> float:
        """Evaluate the Taylor polynomial at ``point + offset``."""
        h = np.asarray(offset, dtype=float)
        mons = np.array(self.monomials, dtype=float)
        return float(np.sum(self.coeffs * np.prod(h[None, :] ** mons, axis=1)))

    def allclose(self, other: "Jet", tol: float = 1e-12) -> bool:
        n = min(self.order, other.order)
        return bool(np.all(np.abs(self.truncate(n).coeffs - other.truncate(n).coeffs) <= tol))

    def __repr__(self) -> str:
        terms = self.to_dict()
        if not terms:
            return f"Jet(0, vars={self.vars}, order={self.order})"
        parts = []
        for m, c in terms.items():
            mono = "*".join(f"{v}^{a}" if a > 1 else v for v, a in zip(self.vars, m) if a)
            parts.append(f"{c:+.6g}" + (f"*{mono}" if mono else ""))
        return f"Jet({' '.join(parts)}, order={self.order})"

    # -- structure ---------------------------------------------------------

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        return self._like(self.coeffs[: basis_size(self.nvars, order)].copy(), order)

    def _check(self, other: "Jet"):
        if other.vars != self.vars:
            raise ValueError(f"jet variable mismatch: {self.vars} vs {other.vars}")

    def _coerce(self, other) -> tuple[np.ndarray, np.ndarray, int]:
        if isinstance(other, Jet):
            self._check(other)
            n = min(self.order, other.order)
            a, b = self.truncate(n).coeffs, other.truncate(n).coeffs
            return a, b, n
        b = np.zeros_like(self.coeffs)
        b[0] = float(other)
        return self.coeffs, b, self.order

    # -- ring operations ---------------------------------------------------

    def __add__(self, other) -> "Jet":
        a, b, n = self._coerce(other)
        return self._like(a + b, n)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        a, b, n = self._coerce(other)
        return self._like(a - b, n)

    def __rsub__(self, other) -> "Jet":
        a, b, n = self._coerce(other)
        return self._like(b - a, n)

    def __neg__(self) -> "Jet":
        return self._like(-self.coeffs)

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return self._like(self.coeffs * float(other))
        a, b, n = self._coerce(other)
        bs = _basis(self.nvars, n)
        out = np.bincount(bs.mul_k, weights=a[bs.mul_i] * b[bs.mul_j], minlength=len(bs.monomials))
        return self._like(out, n)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        c = self.constant_term
        if c == 0.0:
            raise JetDomainError("division by a jet with zero constant term")
        coeffs = [(-1.0) ** k / c ** (k + 1) for k in range(self.order + 1)]
        return self._apply_series(coeffs)

    def __truediv__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            other = float(other)
            if other == 0.0:
                raise JetDomainError("division by zero")
            return self._like(self.coeffs / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other) -> "Jet":
        return self.reciprocal() * float(other)

    def __pow__(self, n: int) -> "Jet":
        if int(n) != n:
            raise ValueError("jets support integer powers only")
        n = int(n)
        if n < 0:
            return self.reciprocal() ** (-n)
        result = Jet.constant(1.0, self.vars, self.order, self.point)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- calculus ----------------------------------------------------------

    def partial(self, var) -> "Jet":
        """Partial derivative; the result has order one less."""
        k = self.vars.index(var) if isinstance(var, str) else int(var)
        if self.order == 0:
            return self._like(np.zeros(1), 0)
        src = _basis(self.nvars, self.order)
        dst = _basis(self.nvars, self.order - 1)
        out = np.empty(len(dst.monomials))
        for i, m in enumerate(dst.monomials):
            up = list(m)
            up[k] += 1
            out[i] = (m[k] + 1) * self.coeffs[src.index[tuple(up)]]
        return self._like(out, self.order - 1)

    def compose(self, subs: Sequence["Jet"]) -> "Jet":
        """Substitute displacement jets, one per variable: f(point + s).

        Every substitute must have zero constant term so that truncation stays
        exact; the result lives in the substitutes' variables.
        """
        if len(subs) != self.nvars:
            raise ValueError("one substitute per variable required")
        first = subs[0]
        for s in subs:
            first._check(s)
            if abs(s.constant_term) != 0.0:
                raise ValueError("substitutes must have zero constant term")
        n = min([self.order] + [s.order for s in subs])
        subs = [s.truncate(n) for s in subs]
        powers = []
        for s in subs:
            pw = [Jet.constant(1.0, s.vars, n, s.point)]
            for _ in range(n):
                pw.append(pw[-1] * s)
            powers.append(pw)
        total = np.zeros(basis_size(first.nvars, n))
        for m, c in zip(self.truncate(n).monomials, self.truncate(n).coeffs):
            if c == 0.0:
                continue
            term = powers[0][m[0]]
            for k in range(1, self.nvars):
                if m[k]:
                    term = term * powers[k][m[k]]
            total = total + c * term.coeffs
        return Jet(first.vars, n, total, first.point)

    def _apply_series(self, a: Sequence[float]) -> "Jet":
        # f(c + h) = sum_k a_k h^k with h the non-constant part
        h = self - self.constant_term
        result = Jet.constant(a[self.order], self.vars, self.order, self.point)
        for k in range(self.order - 1, -1, -1):
            result = result * h + a[k]
        return result


# -- elementary functions ----------------------------------------------------

def _series_coefficients(func: str, c: float, n: int) -> list[float]:
    if func == "exp":
        ec = math.exp(c)
        return [ec / math.factorial(k) for k in range(n + 1)]
    if func == "log":
        if c <= 0.0:
            raise JetDomainError(f"log of jet with non-positive constant term {c}")
        return [math.log(c)] + [(-1.0) ** (k + 1) / (k * c ** k) for k in range(1, n + 1)]
    if func in ("sin", "cos"):
        s, co = math.sin(c), math.cos(c)
        cycle = [s, co, -s, -co] if func == "sin" else [co, -s, -co, s]
        return [cycle[k % 4] / math.factorial(k) for k in range(n + 1)]
    if func == "sqrt":
        if c <= 0.0:
            raise JetDomainError(f"sqrt of jet with non-positive constant term {c}")
        r = math.sqrt(c)
        out, binom = [], 1.0
        for k in range(n + 1):
            out.append(r * binom / c ** k)
            binom *= (0.5 - k) / (k + 1)
        return out
    if func == "atan":
        # derivative 1/(q0 + q1 s + s^2) expanded by recurrence
        q0, q1 = 1.0 + c * c, 2.0 * c
        d = []
        for k in range(n):
            v = 1.0 if k == 0 else 0.0
            if k >= 1:
                v -= q1 * d[k - 1]
            if k >= 2:
                v -= d[k - 2]
            d.append(v / q0)
        return [math.atan(c)] + [d[k - 1] / k for k in range(1, n + 1)]
    raise ValueError(f"unknown function {func!r}")


def jet_function(func: str, j: Jet) -> Jet:
    return j._apply_series(_series_coefficients(func, j.constant_term, j.order))


def sqrt(j: Jet) -> Jet:
    return jet_function("sqrt", j)


# -- expression evaluation ---------------------------------------------------

def evaluate_jet(e: Expression, point: Sequence[float], order: int = DEFAULT_ORDER,
                 vars: Sequence[str] | None = None) -> Jet:
    """Forward-evaluate an expression in jet arithmetic at `point`."""
    if vars is None:
        raise ValueError("vars must be given (the declared variable order)")
    vars = tuple(vars)
    point = tuple(float(c) for c in point)
    if len(point) != len(vars):
        raise ValueError(f"point has dimension {len(point)}, expected {len(vars)}")
    cache: dict[int, Jet] = {}

    def ev(node: Expression) -> Jet:
        key = id(node)
        if key in cache:
            return cache[key]
        if isinstance(node, Num):
            out = Jet.constant(node.value, vars, order, point)
        elif isinstance(node, Var):
            out = Jet.variable(node.name, vars, order, point)
        elif isinstance(node, Neg):
            out = -ev(node.arg)
        elif isinstance(node, BinOp):
            a, b = ev(node.left), ev(node.right)
            if node.op == "+":
                out = a + b
            elif node.op == "-":
                out = a - b
            elif node.op == "*":
                out = a * b
            else:
                out = a / b
        elif isinstance(node, Pow):
            out = ev(node.base) ** node.exponent
        elif isinstance(node, Call):
            out = jet_function(node.func, ev(node.arg))
        else:
            raise TypeError(f"not an expression node: {node!r}")
        cache[key] = out
        return out

    # keep nodes alive so id() keys stay unique during the walk
    _keep = [e]
    result = ev(e)
    del _keep
    return result


def partial_derivative(j: Jet, var) -> Jet:
    return j.partial(var)


def hadamard_factor(j: Jet, var, tol: float = 1e-9) -> Jet:
    """Divide by a variable: returns `q` with ``var * q == j`` through order N.

    Raises `NotDivisible` when a monomial free of `var` has a coefficient
    above `tol`.
    """
    k = j.vars.index(var) if isinstance(var, str) else int(var)
    for m, c in zip(j.monomials, j.coeffs):
        if m[k] == 0 and abs(c) > tol:
            raise NotDivisible(f"monomial {m} has coefficient {c:.3g} but lacks {j.vars[k]}", m)
    if j.order == 0:
        return j._like(np.zeros(1), 0)
    src = _basis(j.nvars, j.order)
    dst = _basis(j.nvars, j.order - 1)
    out = np.empty(len(dst.monomials))
    for i, m in enumerate(dst.monomials):
        up = list(m)
        up[k] += 1
        out[i] = j.coeffs[src.index[tuple(up)]]
    return j._like(out, j.order - 1)


def truncated_ode_integral(rhs: Jet, order: int | None = None, tol: float = 1e-12) -> Jet:
    """Formal first integral of du/dv = rhs(u, v) normalised by I(u, 0) = u.

    `rhs` is a jet in two variables ordered (u, v) with rhs(0, 0) = 0. The
    result satisfies dI/dv + dI/du * rhs = 0 through total degree order-1.
    """
    if rhs.nvars != 2:
        raise ValueError("rhs must be a jet in (u, v)")
    n = rhs.order if order is None else order
    if abs(rhs.constant_term) > tol:
        raise NoFormalSolution(f"rhs(0,0) = {rhs.constant_term:.3g} is not zero; recursion is not triangular")
    rhs = rhs.truncate(n) if rhs.order >= n else rhs
    n = min(n, rhs.order + 1)
    vars = rhs.vars
    b = _basis(2, n)
    coeffs = np.zeros(len(b.monomials))
    if n >= 1:
        coeffs[b.index[(1, 0)]] = 1.0
    for deg in range(1, n):
        current = Jet(vars, n, coeffs.copy(), rhs.point)
        flux = current.partial(0) * rhs
        for m, c in flux.homogeneous(deg).items():
            i, jv = m
            coeffs[b.index[(i, jv + 1)]] = -c / (jv + 1)
    integral = Jet(vars, n, coeffs, rhs.point)
    resid = integral.partial(1) + integral.partial(0) * rhs
    bad = max((abs(c) for m, c in zip(resid.monomials, resid.coeffs) if sum(m) <= n - 1), default=0.0)
    if bad > tol * max(1.0, rhs.max_abs()):
        raise NoFormalSolution(f"formal solve residual {bad:.3g} exceeds tolerance")
    return integral


def univariate(coeffs: Iterable[float], var: str = "w", order: int | None = None) -> Jet:
    coeffs = list(coeffs)
    order = len(coeffs) - 1 if order is None else order
    out = np.zeros(order + 1)
    out[: min(len(coeffs), order + 1)] = coeffs[: order + 1]
    return Jet((var,), order, out)
