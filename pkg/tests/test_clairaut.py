import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from foldsing.clairaut import (GeneratingFamily, classify_family, dara_check, is_clairaut_type,
                               is_reduced)
from foldsing.errors import InputError, NotOnSurface
from foldsing.surface import Box, EquationSurface

from conftest import P, T, X, Y, to_sympy

BOX = Box(-1, 1, -1, 1, -1, 1)

FAMILIES = {"t + x": "Regular", "t^2 + t*x": "ClairautFold", "t^3 + t*x": "ClairautCusp",
            "t^2 + t*x^2": "ClairautCrossCap"}


@pytest.mark.parametrize("F,kind", FAMILIES.items())
def test_family_kinds(F, kind):
    r = classify_family(F)
    assert r.kind == kind
    assert r.diagram == {"Regular": 1, "ClairautFold": 2, "ClairautCusp": 3, "ClairautCrossCap": 4}[kind]


def test_cusp_diagram_form():
    assert "v^3 + uv" in classify_family("t^3 + t*x").diagram_form


def test_fold_induces_classical_clairaut():
    y, p = GeneratingFamily.parse("t^2 + t*x").induced_equation()
    # eliminate t symbolically: y - x p - p^2 must vanish identically
    ys, ps = (to_sympy(s) for s in ("t^2 + t*x", "t"))
    assert sp.simplify(ys - X * ps - ps ** 2) == 0
    assert ps == sp.diff(ys, X)


def test_nongeneric_family():
    r = classify_family("t^3 + x^2*t^2")
    assert r.kind == "NonGeneric" and r.label.startswith("NonGeneric(")


def test_family_must_vanish():
    with pytest.raises(InputError):
        GeneratingFamily.parse("1 + t")


_pert = st.lists(st.tuples(st.integers(-3, 3), st.integers(0, 5), st.integers(0, 5))
                 .filter(lambda c: c[1] + c[2] >= 4), min_size=1, max_size=4)


@pytest.mark.parametrize("F,kind", FAMILIES.items())
@given(terms=_pert)
def test_kind_invariant_under_high_order_terms(F, kind, terms):
    h = " + ".join(f"({c})*t^{i}*x^{j}" for c, i, j in terms)
    assert classify_family(f"{F} + {h}").kind == kind


@given(st.lists(st.integers(-2, 2), min_size=9, max_size=9))
def test_conditions_exclusive_and_exhaustive(c):
    mons = [(1, 0), (2, 0), (1, 1), (0, 1), (3, 0), (1, 2), (0, 2), (2, 1), (0, 3)]
    src = " + ".join(f"({a})*t^{i}*x^{j}" for a, (i, j) in zip(c, mons))
    F = to_sympy(src)
    at = {T: 0, X: 0}
    v = {name: sp.diff(F, *spec).subs(at) != 0 for name, spec in
         {"t": (T,), "tt": (T, T), "tx": (T, X), "ttt": (T, T, T), "txx": (T, X, X)}.items()}
    holds = {
        "Regular": v["t"],
        "ClairautFold": not v["t"] and v["tt"] and v["tx"],
        "ClairautCusp": not v["t"] and not v["tt"] and v["tx"] and v["ttt"],
        "ClairautCrossCap": not v["t"] and not v["tx"] and v["tt"] and v["txx"],
    }
    assert sum(holds.values()) <= 1
    expected = next((k for k, h in holds.items() if h), "NonGeneric")
    assert classify_family(src).kind == expected


# -- implicit Clairaut tests --------------------------------------------------

def test_clairaut_type_examples():
    assert is_clairaut_type(EquationSurface.implicit("p^2 - y", BOX)).holds
    assert is_clairaut_type(EquationSurface.implicit("y - 2*p^3", BOX)).holds
    v = is_clairaut_type(EquationSurface.implicit("p^2 - y + x^2", BOX))
    assert not v.holds and abs(v.witness[0]) > 0.1


def test_clairaut_sampling_density():
    v = is_clairaut_type(EquationSurface.implicit("p^2 - y", BOX))
    assert v.samples >= 64


def test_reduced_examples():
    assert is_reduced(EquationSurface.implicit("p^2 - y", BOX)).holds
    assert not is_reduced(EquationSurface.implicit("y - 2*p^3", BOX)).holds
    assert is_reduced(EquationSurface.implicit("p - 1", BOX)).holds


def sympy_dara(src, order=4):
    """Oracle: undetermined polynomial A, B of degree order-1; solve jet equations exactly."""
    G = to_sympy(src)
    C = sp.diff(G, X) + P * sp.diff(G, Y)
    mons = [X ** i * Y ** j * P ** k for i in range(order) for j in range(order) for k in range(order)
            if i + j + k <= order - 1]
    a = sp.symbols(f"a0:{len(mons)}")
    b = sp.symbols(f"b0:{len(mons)}")
    expr = sp.expand(C - sum(ai * m for ai, m in zip(a, mons)) * G - sum(bi * m for bi, m in zip(b, mons))
                     * sp.diff(G, P))
    poly = sp.Poly(expr, X, Y, P)
    eqs = [c for m, c in zip(poly.monoms(), poly.coeffs()) if sum(m) <= order]
    return bool(sp.solve(eqs, a + b, dict=True)) or not eqs


@pytest.mark.parametrize("src,expected", [("y - x*p - p^2", True), ("y - 2*p^3", False), ("p^2 - y", True),
                                          ("p^2 - y + x^2", False)])
def test_dara_check_matches_sympy(src, expected):
    got = dara_check(EquationSurface.implicit(src))
    assert got.holds is expected
    assert sympy_dara(src) is expected


def test_dara_multipliers_for_fold():
    r = dara_check(EquationSurface.implicit("p^2 - y"))
    assert r.B.constant_term == pytest.approx(-0.5, abs=1e-10)


def test_dara_implies_clairaut_type():
    for src in ("y - x*p - p^2", "p^2 - y", "p^2 - y*(1 + x^2)"):
        s = EquationSurface.implicit(src, BOX)
        if dara_check(s).holds:
            assert is_clairaut_type(s).holds


def test_dara_off_surface():
    with pytest.raises(NotOnSurface):
        dara_check(EquationSurface.implicit("p - 1"))
