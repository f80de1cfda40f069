from __future__ import annotations

import pytest
from hypothesis import assume, given, settings, strategies as st

from conftest import polys
from p2h2.catalog import chart
from p2h2.ladder import LadderError, RationalSolution, apply_generator
from p2h2.symfield import ONE, V, ZeroDivision, evaluate, parse, substitute
from p2h2.weyl import (
    ALPHA0, ALPHA1, CANONICAL, F1, PRINTED_PAIRS, Generator, WeylError, backlund_series, compose,
    conjugate_by_chart, errata_report, generator, generator_names, identity, poisson_bracket, power,
    root_action, verify_generator,
)

Q = ("q1", "p1", "q2", "p2")
qp_polys = polys(Q, max_terms=3, max_deg=2)


@given(qp_polys, qp_polys)
def test_bracket_antisymmetric(f, g):
    assert poisson_bracket(f, g) == -poisson_bracket(g, f)


@given(qp_polys, qp_polys, qp_polys)
def test_bracket_jacobi(f, g, h):
    pb = poisson_bracket
    assert pb(f, pb(g, h)) + pb(g, pb(h, f)) + pb(h, pb(f, g)) == 0 * f


def test_bracket_on_generators():
    assert poisson_bracket("p1", "q1") == ONE
    assert poisson_bracket("q1", "q2") == 0 * ONE


@pytest.mark.parametrize("v", Q)
def test_series_reproduces_s0(v):
    assert backlund_series("p1", ALPHA0, v) == generator("s0", "eq3").images[v]


@pytest.mark.parametrize("v", Q)
def test_series_reproduces_s1(v):
    assert backlund_series(F1, ALPHA1, v) == generator("s1", "eq3").images[v]


def test_series_cap():
    # {q1^2 p1, .} never terminates on q1
    with pytest.raises(WeylError):
        backlund_series("q1^2*p1", ALPHA0, "q1", cap=3)


@pytest.mark.parametrize("sys_id", sorted(CANONICAL))
def test_canonical_generators_are_symmetries(sys_id):
    for name in CANONICAL[sys_id]:
        rep = verify_generator(generator(name, sys_id))
        assert rep.ok, (name, rep.residuals)


@pytest.mark.parametrize("sys_id,name", [(s, n) for s in CANONICAL for n in CANONICAL[s]])
def test_involutions(sys_id, name):
    g = generator(name, sys_id)
    assert compose([g, g]).is_identity()


@pytest.mark.parametrize("sys_id", ["eq3", "eq6"])
def test_translations(sys_id):
    t1, t2 = generator("T1", sys_id), generator("T2", sys_id)
    assert compose([t1, t2]).is_identity()
    assert compose([t2, t1]).is_identity()
    assert t1.param_action["a2"] == V("a2") + 1
    assert t2.param_action["a2"] == V("a2") - 1
    for n in (1, 2, 3):
        assert power(t1, n).param_action["a2"] == V("a2") + n


def test_compose_convention_first_listed_acts_first():
    s0, pi = generator("s0", "eq3"), generator("pi", "eq3")
    # the first generator listed acts first
    assert compose([pi, s0]).param_action["a2"] == V("a2") + 1
    assert compose([s0, pi]).param_action["a2"] == V("a2") - 1


def test_compose_rejects_mixed_systems():
    with pytest.raises(WeylError):
        compose([generator("s0", "eq3"), generator("s0", "eq10")])
    with pytest.raises(WeylError):
        compose([])


def test_identity_generator():
    assert identity("eq3").is_identity()
    assert power(generator("s0", "eq3"), 0).is_identity()


@pytest.mark.parametrize("sys_id", sorted(CANONICAL))
def test_root_actions_preserve_sum(sys_id):
    for name in CANONICAL[sys_id]:
        assert root_action(generator(name, sys_id)).preserves_sum()


def test_root_action_values():
    ra = root_action(generator("s0", "eq3"))
    # s0: alpha0 -> -alpha0, alpha1 -> alpha1 + 2 alpha0
    assert ra.alpha0 == (-1, 0)
    assert ra.alpha1 == (2, 1)
    assert root_action(generator("pi", "eq3")).alpha0 == (0, 1)


@given(st.fractions(min_value=-3, max_value=3, max_denominator=6))
def test_root_action_applied(a2):
    a0, a1 = ALPHA0, ALPHA1
    ra = root_action(generator("s1", "eq3"))
    new = substitute(generator("s1", "eq3").param_action["a2"], {"a2": a2}).constant_value()
    b0, b1 = ra(substitute(a0, {"a2": a2}).constant_value(), substitute(a1, {"a2": a2}).constant_value())
    assert b0 == substitute(a0, {"a2": new}).constant_value()
    assert b1 == substitute(a1, {"a2": new}).constant_value()


RENAME_A = dict(zip(("x1", "y1", "z1", "w1"), Q))


def test_conjugation_by_chart_a_gives_eq10_s0():
    got = conjugate_by_chart(generator("s0", "eq3"), chart("holo_A"), RENAME_A, "eq10")
    assert got.images == generator("s0", "eq10").images


def test_conjugated_s1_is_another_eq10_symmetry():
    # the transported eq3 reflection is a symmetry of eq10 but not the catalogued s1;
    # the two differ by a translation of a2
    got = conjugate_by_chart(generator("s1", "eq3"), chart("holo_A"), RENAME_A, "eq10")
    assert verify_generator(got).ok
    assert got.param_action["a2"] == -V("a2") - 1
    assert generator("s1", "eq10").param_action["a2"] == -V("a2")


@given(st.tuples(*[st.fractions(min_value=-5, max_value=5, max_denominator=9)] * 6))
@settings(max_examples=10)
def test_conjugated_s1_is_an_involution_pointwise(pt):
    # the composite is too large to expand symbolically, so square it at exact rational points
    got = conjugate_by_chart(generator("s1", "eq3"), chart("holo_A"), RENAME_A, "eq10")
    point = dict(zip(Q + ("t", "a2"), pt))
    try:
        once = {v: evaluate(got.images[v], point) for v in Q}
        once["a2"] = evaluate(got.param_action["a2"], point)
        once["t"] = point["t"]
        twice = {v: evaluate(got.images[v], once) for v in Q}
    except ZeroDivision:
        assume(False)
    assert twice == {v: point[v] for v in Q}


def test_generator_on_pole_divisor_is_an_error():
    # s0 divides by p1; a solution with p1 = 0 sits on the divisor
    sol = RationalSolution("eq3", {"q1": "0", "p1": "0", "q2": "0", "p2": "0"}, 0)
    with pytest.raises(LadderError):
        apply_generator(sol, generator("s0", "eq3"), check=False)


def test_poles_listed():
    assert "p1" in generator("s0", "eq3").poles()
    assert generator("pi", "eq3").poles() == set()


def test_unknown_generator():
    with pytest.raises(WeylError):
        generator("s7", "eq3")
    assert "T1" in generator_names("eq3")


def test_errata_have_nonzero_residuals():
    items = errata_report()
    assert items
    for e in items:
        d = e.as_dict()
        assert set(d) >= {"generator", "component", "printed_expression", "canonical_expression", "residual"}
        assert d["residual"] not in ("", "0")


def test_errata_itemize_the_known_printed_formulas():
    names = {(e.system, e.generator) for e in errata_report()}
    for pair in [("eq3", "s1_printed"), ("eq3", "T1_printed"), ("eq10", "s0_printed"),
                 ("eq10", "s1_printed"), ("eq10", "tilde_A_printed"), ("eq10", "tilde_B_printed")]:
        assert pair in names


def test_printed_formulas_that_agree_are_not_reported():
    names = {(e.system, e.generator) for e in errata_report()}
    assert ("eq3", "T2_printed") not in names
    assert ("eq6", "s1_printed") not in names


@pytest.mark.parametrize("sys_id,printed,canon", PRINTED_PAIRS)
def test_canonical_replacements_pass(sys_id, printed, canon):
    assert verify_generator(generator(canon, sys_id)).ok
