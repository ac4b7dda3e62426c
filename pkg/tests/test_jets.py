import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from foldsing import expr as ex
from foldsing.errors import NoFormalSolution, NotDivisible
from foldsing.jets import Jet, evaluate_jet, hadamard_factor, sqrt, truncated_ode_integral

from conftest import U, V, to_sympy

UVV = ("u", "v")


def jet_of(src, vars=UVV, order=7, point=None):
    point = point or (0.0,) * len(vars)
    return evaluate_jet(ex.parse_expression(src, vars), point, order, vars)


def sympy_integral(rhs_src, n):
    """Independent triangular solve: unknown coefficients, linear equations degree by degree."""
    cs = {(i, j): sp.Symbol(f"c_{i}_{j}") for i in range(n + 1) for j in range(1, n + 1 - i)}
    I = U + sum(c * U ** i * V ** j for (i, j), c in cs.items())
    resid = sp.expand(sp.diff(I, V) + sp.diff(I, U) * to_sympy(rhs_src))
    poly = sp.Poly(resid, U, V)
    eqs = [c for (i, j), c in zip(poly.monoms(), poly.coeffs()) if i + j <= n - 1]
    sol = sp.solve(eqs, list(cs.values()), dict=True)[0]
    return sp.Poly(sp.expand(I.subs(sol)).subs({c: 0 for c in cs.values()}), U, V)


# -- arithmetic ---------------------------------------------------------------

def test_product_and_truncation():
    j = jet_of("(1 + u)*(1 - v)", order=2)
    assert j.to_dict() == {(0, 0): 1.0, (1, 0): 1.0, (0, 1): -1.0, (1, 1): -1.0}


def test_reciprocal_geometric_series():
    j = (1 - Jet.variable("u", ("u",), 6)).reciprocal()
    assert np.allclose(j.coeffs, np.ones(7))


def test_sqrt_series():
    j = sqrt(Jet.constant(1.0, ("u",), 4) + Jet.variable("u", ("u",), 4))
    ref = sp.Poly(sp.series(sp.sqrt(1 + U), U, 0, 5).removeO(), U).all_coeffs()[::-1]
    assert np.allclose(j.coeffs, [float(c) for c in ref], atol=1e-15)


@given(st.lists(st.integers(-3, 3), min_size=10, max_size=10),
       st.lists(st.integers(-3, 3), min_size=10, max_size=10),
       st.lists(st.integers(-3, 3), min_size=10, max_size=10))
def test_ring_axioms_exact(a, b, c):
    A, B, C = (Jet(("x", "y"), 3, np.array(z, dtype=float)) for z in (a, b, c))
    assert np.array_equal(((A * B) * C).coeffs, (A * (B * C)).coeffs)
    assert np.array_equal((A * (B + C)).coeffs, (A * B + A * C).coeffs)
    assert np.array_equal((A * B).coeffs, (B * A).coeffs)


# -- evaluate_jet against symbolic differentiation ---------------------------

_polys = st.lists(st.tuples(st.integers(-4, 4), st.integers(0, 3), st.integers(0, 3), st.integers(0, 2)),
                  min_size=1, max_size=5)


@given(_polys, st.tuples(*[st.floats(-1, 1)] * 3))
def test_evaluate_jet_matches_sympy(terms, point):
    src = " + ".join(f"({c})*x^{i}*y^{j}*p^{k}" for c, i, j, k in terms) + " + exp(x)*sin(p)"
    j = evaluate_jet(ex.parse_expression(src, ("x", "y", "p")), point, 4, ("x", "y", "p"))
    f = to_sympy(src)
    env = dict(zip(sp.symbols("x y p"), point))
    for m in [(1, 0, 0), (0, 2, 1), (2, 1, 0), (1, 1, 1), (0, 0, 4)]:
        ref = float(sp.diff(f, *[s for s, k in zip(sp.symbols("x y p"), m) for _ in range(k)]).subs(env))
        assert j.derivative_value(m) == pytest.approx(ref, rel=1e-10, abs=1e-10)


def test_transcendental_jet_matches_sympy():
    j = jet_of("log(1 + u) * atan(v) + cos(u*v)", order=6)
    ref = sp.Poly(sp.series(sp.series(sp.log(1 + U) * sp.atan(V) + sp.cos(U * V), U, 0, 7).removeO(),
                            V, 0, 7).removeO(), U, V)
    for (i, k), c in zip(ref.monoms(), ref.coeffs()):
        if i + k <= 6:
            assert j.coeff((i, k)) == pytest.approx(float(c), abs=1e-14)


# -- hadamard_factor ----------------------------------------------------------

def test_hadamard_examples():
    q = hadamard_factor(jet_of("y + y^2", ("y",), 4), "y")
    assert q.to_dict(1e-15) == {(0,): 1.0, (1,): 1.0}
    q = hadamard_factor(jet_of("u*v - v^3"), "v")
    assert q.to_dict(1e-15) == {(1, 0): 1.0, (0, 2): -1.0}
    with pytest.raises(NotDivisible) as info:
        hadamard_factor(jet_of("1 + v"), "v")
    assert info.value.monomial == (0, 0)


@given(st.lists(st.floats(-5, 5), min_size=36, max_size=36), st.sampled_from([0, 1]))
def test_hadamard_roundtrip(coeffs, k):
    base = Jet(UVV, 7, np.array(coeffs))
    j = Jet(UVV, 7, np.array([c if m[k] > 0 else 0.0 for m, c in zip(base.monomials, base.coeffs)]))
    q = hadamard_factor(j, UVV[k])
    assert q.order == 6
    back = Jet.variable(UVV[k], UVV, 7) * Jet(UVV, 7, np.array([q.coeff(m) if sum(m) <= 6 else 0.0
                                                                   for m in j.monomials]))
    assert np.allclose(back.coeffs, j.coeffs, atol=1e-12)


# -- truncated_ode_integral ---------------------------------------------------

def test_integral_normal_form_example():
    I = truncated_ode_integral(jet_of("2*v^2*(u - v^2)"), 7)
    assert I.coeff((1, 0)) == 1.0
    assert I.coeff((1, 3)) == pytest.approx(-2 / 3, abs=1e-14)
    assert I.coeff((0, 5)) == pytest.approx(2 / 5, abs=1e-14)
    assert I.coeff((1, 6)) == pytest.approx(2 / 9, abs=1e-14)


@pytest.mark.parametrize("rhs", ["0*u", "v", "2*v^2*(u - v^2)", "u*v + v^3 - u^2", "sin(v)*(1+u)"])
def test_integral_matches_sympy_solve(rhs):
    n = 7
    I = truncated_ode_integral(jet_of(rhs, order=n), n)
    ref = sympy_integral(rhs if "sin" not in rhs else "(v - v^3/6 + v^5/120)*(1+u)", n)
    got = {m: c for m, c in I.to_dict(1e-14).items()}
    want = {m: float(c) for m, c in zip(ref.monoms(), ref.coeffs())}
    assert set(got) == set(want)
    for m in want:
        assert got[m] == pytest.approx(want[m], rel=1e-12, abs=1e-14)


def test_integral_trivial_cases():
    assert truncated_ode_integral(Jet.zero(UVV, 5), 5).to_dict() == {(1, 0): 1.0}
    I = truncated_ode_integral(jet_of("v"), 7)
    assert I.to_dict(1e-15) == {(1, 0): 1.0, (0, 2): -0.5}


def test_integral_rejects_nonzero_constant():
    with pytest.raises(NoFormalSolution):
        truncated_ode_integral(jet_of("1 + v"), 5)


@given(st.floats(-0.05, 0.05), st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
def test_integral_constant_along_solutions(u0, a, b):
    src = f"2*v^2*(u - v^2)*(1 + ({a})*u + ({b})*v)"
    n = 13
    I = truncated_ode_integral(jet_of(src, order=n), n)
    f = ex.compile_expressions([ex.parse_expression(src, UVV)], UVV)
    sol = solve_ivp(lambda v, y: [f(y[0], v)[0]], (0.0, 0.07), [u0], rtol=1e-12, atol=1e-14, dense_output=True)
    vs = np.linspace(0.0, 0.07, 8)
    vals = [I(sol.sol(v)[0], v) for v in vs]
    assert max(vals) - min(vals) <= 1e-6
    assert math.hypot(sol.y[0, -1], 0.07) <= 0.1
