import sympy as sp
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

X, Y, P, U, V, T = sp.symbols("x y p u v t")
SYMS = {"x": X, "y": Y, "p": P, "u": U, "v": V, "t": T}


def to_sympy(src: str):
    """Independent reading of an expression string (caret is power)."""
    return sp.sympify(src.replace("^", "**"), locals=SYMS)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
