from __future__ import annotations

from fractions import Fraction

from hypothesis import HealthCheck, settings, strategies as st

from p2h2.symfield import RatFunc, V

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SMALL_VARS = ("x", "y", "z", "t")

coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=4)


@st.composite
def polys(draw, vars_=SMALL_VARS, max_terms=4, max_deg=3):
    out = RatFunc.const(0)
    for _ in range(draw(st.integers(0, max_terms))):
        term = RatFunc.const(draw(coeffs))
        for v in vars_:
            term = term * V(v) ** draw(st.integers(0, max_deg))
        out = out + term
    return out


@st.composite
def nonzero_polys(draw, vars_=SMALL_VARS):
    p = draw(polys(vars_))
    return p if not p.is_zero() else p + RatFunc.const(draw(st.integers(1, 3)))


@st.composite
def ratfuncs(draw, vars_=SMALL_VARS):
    return draw(polys(vars_)) / draw(nonzero_polys(vars_))


def fracs(lo=-3, hi=3):
    return st.fractions(min_value=lo, max_value=hi, max_denominator=5).map(Fraction)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line[1])
