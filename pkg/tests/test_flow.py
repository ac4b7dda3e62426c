import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from foldsing.errors import OutOfRange
from foldsing.flow import FlowLimits, integrate, integrate_both, surface_residual, tangency_defect
from foldsing.surface import Box, EquationSurface

BOX = Box(-1, 1, -1, 1, -1, 1)
FINE = FlowLimits(max_length=1.5, max_step=1e-3)


def fold():
    return EquationSurface.implicit("p^2 - x", Box(-1, 2, -2, 2, -2, 2))


def test_fold_crossing_and_quadrature_oracle():
    c = integrate(fold(), (1, 0, 1), -1)
    marks = c.marks("CriminantCrossing")
    assert len(marks) == 1
    x, y, p = c.points[marks[0]]
    assert abs(x) <= 1e-8 and abs(p) <= 1e-4
    # exact solutions of p^2 = x through (1, 0): y = s(2/3) x^{3/2} - 2/3, sign s = sign(p)
    X, Y, Pp = c.points.T
    ref = np.sign(Pp) * (2 / 3) * np.abs(X) ** 1.5 - 2 / 3
    assert np.max(np.abs(Y - ref)) <= 1e-7
    assert c.event_at(len(c) - 1) == "BoxExit"


def test_line_solution():
    c = integrate(EquationSurface.implicit("p - 1", Box(-1, 1, -1, 1, -2, 2)), (0, 0, 1), 1)
    assert np.allclose(c.projection[:, 0], c.projection[:, 1], atol=1e-12)
    assert [e for _, e in c.events] == ["BoxExit"]
    assert c.projection[-1] == pytest.approx([1.0, 1.0], abs=1e-9)


def test_seed_at_equilibrium():
    c = integrate(EquationSurface.implicit("p^2 - y - x^2", BOX), (0, 0, 0), 1)
    assert len(c) == 1 and c.events == [(0, "EquilibriumApproach")] and c.length == 0.0


def test_seed_outside_box():
    with pytest.raises(OutOfRange):
        integrate(EquationSurface.implicit("p - 1", BOX), (5, 0, 1), 1)


def test_step_limit():
    c = integrate(EquationSurface.implicit("p - 1", Box(-9, 9, -9, 9, -9, 9)), (0, 0, 1), 1,
                  FlowLimits(max_length=2.0))
    assert c.events[-1][1] == "StepLimit" and c.length == pytest.approx(2.0, abs=1e-9)


# (surface, y-independent p^2 given (x, y)) for seeding on the surface
SURFACES = {
    "p^2 - x": lambda x, y: x,
    "p^2 - y": lambda x, y: y,
    "p^2 - y - x^2": lambda x, y: y + x * x,
    "p^2 - y + x^2/20": lambda x, y: y - x * x / 20,
    "p^2 - y + x^2": lambda x, y: y - x * x,
}
SEEDS = [(0.5, 0.3), (-0.4, 0.6), (0.2, 0.7)]


@pytest.mark.parametrize("src", SURFACES)
def test_surface_and_tangency_contracts(src):
    s = EquationSurface.implicit(src, BOX)
    for x, y in SEEDS:
        p2 = SURFACES[src](x, y)
        if not 0 < p2 < 1:
            continue
        for p in (np.sqrt(p2), -np.sqrt(p2)):
            for c in integrate_both(s, (x, y, p), FINE, BOX):
                assert surface_residual(c, s) <= 1e-8
                assert tangency_defect(c) <= 1e-4


def test_envelope_of_clairaut_fold():
    s = EquationSurface.implicit("p^2 - y", Box(-2, 2, -0.1, 2, -2, 2))
    rng = np.random.default_rng(11)
    # seeds chosen so the tangency point x0 + 2 sqrt(y0) stays inside the box
    for x0, y0 in zip(rng.uniform(-0.8, 0.8, 10), rng.uniform(0.05, 0.2, 10)):
        curves = integrate_both(s, (x0, y0, -np.sqrt(y0)), FlowLimits(max_length=6))
        c = min(curves, key=lambda c: np.min(np.abs(c.projection[:, 1])))
        i = int(np.argmin(np.abs(c.projection[:, 1])))
        assert abs(c.points[i, 2]) <= 1e-4
        # solutions y = (x - c)^2 / 4 reach y = 0 tangentially with x monotone
        dx = np.diff(c.projection[:, 0])
        assert np.all(dx < 0) or np.all(dx > 0)


@settings(max_examples=10)
@given(st.floats(-0.5, 0.5), st.floats(0.1, 0.5))
def test_reversibility(x0, y0):
    s = EquationSurface.implicit("p^2 - y + x^2/20", Box(-3, 3, -3, 3, -3, 3))
    p0 = np.sqrt(y0 - x0 * x0 / 20)
    fwd = integrate(s, (x0, y0, p0), 1, FlowLimits(max_length=0.5))
    assert fwd.events[-1][1] == "StepLimit"
    back = integrate(s, fwd.points[-1], -1, FlowLimits(max_length=fwd.length))
    assert np.allclose(back.points[-1], (x0, y0, p0), atol=1e-6)


def test_csv_export():
    c = integrate(fold(), (1, 0, 1), -1)
    lines = c.to_csv().splitlines()
    assert lines[0] == "t,x,y,p,event"
    assert len(lines) == len(c) + 1
    assert sum(line.endswith(",CriminantCrossing") for line in lines) == 1
