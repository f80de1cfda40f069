from __future__ import annotations

import pytest
from hypothesis import assume, given

from conftest import polys
from p2h2.catalog import HOLOMORPHY, chart, hamiltonian, system
from p2h2.dynsys import (
    BirationalMap, DynsysError, HamiltonianSpec, VectorField, fifth_order_expression,
    fifth_order_identity, hamiltonian_field, invert_triangular, is_polynomial, iterated_derivatives,
    pushforward, pushforward_function, recover_hamiltonian, riccati_correspondence, total_derivative,
)
from p2h2.symfield import ONE, ZERO, V, ZeroDivision, differentiate, parse, substitute

q1, p1, q2, p2, t = V("q1", "p1", "q2", "p2", "t")


def test_hamiltonian_field_signs():
    Vf = hamiltonian_field(HamiltonianSpec(parse("p^2/2 + q^3"), (("q", "p"),)))
    assert Vf["q"] == V("p")
    assert Vf["p"] == -3 * V("q") ** 2


def test_overlapping_pairs_rejected():
    with pytest.raises(DynsysError):
        hamiltonian_field(HamiltonianSpec(parse("q*p"), (("q", "p"), ("p", "q2"))))


def test_rhs_keys_must_match_vars():
    with pytest.raises(DynsysError):
        VectorField(("x",), {"y": ONE})


def test_eq3_field_from_hamiltonian():
    Vf = system("eq3")
    assert Vf["q1"] == parse("q1^2 + p2")
    assert Vf["p1"] == parse("-2*q1*p1 - 1/2 + a2")
    assert Vf["q2"] == parse("p1 - 3*p2^2 + t/2")
    assert Vf["p2"] == parse("q2")


@given(polys(("q1", "p1", "q2", "p2", "t")), polys(("q1", "p1", "q2", "p2")))
def test_total_derivative_is_a_derivation(f, g):
    Vf = system("eq3")
    lhs = total_derivative(f * g, Vf)
    assert lhs == total_derivative(f, Vf) * g + f * total_derivative(g, Vf)


def test_energy_identity_exact():
    # dH/dt along the flow equals the explicit t-derivative
    H = hamiltonian("eq3").H
    assert total_derivative(H, system("eq3")) == differentiate(H, "t") == p2 / 2


def test_iterated_derivatives_length():
    ds = iterated_derivatives(q1, system("eq3"), 3)
    assert len(ds) == 4 and ds[1] == system("eq3")["q1"]


def test_pushforward_eq1_gives_eq3():
    got = pushforward(system("eq1"), chart("eq1_to_eq3"))
    assert got.equals(system("eq3"))


def test_pushforward_eq3_chart_a_gives_eq10():
    got = pushforward(system("eq3"), chart("holo_A"))
    got = got.rename(dict(zip(got.vars, system("eq10").vars)))
    assert got.equals(system("eq10"))


def test_pushforward_of_functions_respects_flow():
    # D(f o m^-1) computed either side of the chart agrees
    m = chart("holo_A")
    H = hamiltonian("eq3").H
    W = pushforward(system("eq3"), m)
    lhs = total_derivative(pushforward_function(H, m), W)
    rhs = pushforward_function(total_derivative(H, system("eq3")), m)
    assert lhs == rhs


@pytest.mark.parametrize("name", ["eq1_to_eq3", "holo_A", "holo_B", "tilde_A", "tilde_B",
                                  "eq6_r1", "eq6_r2", "eq6_r3", "eq5_to_eq6"])
def test_chart_inverses_round_trip(name):
    assert chart(name).check_inverse() == {}


def test_invert_triangular_simple():
    m = BirationalMap.from_strings(("x", "y"), ("x1", "y1"), {"x1": "1/x", "y1": "y/x^2"})
    inv = invert_triangular(m)
    assert inv.inverse["x"] == ONE / V("x1")
    assert inv.inverse["y"] == V("y1") / V("x1") ** 2


def test_invert_triangular_rejects_coupled_map():
    m = BirationalMap.from_strings(("x", "y"), ("u", "w"), {"u": "x + y^2 + x^2*y", "w": "x*y + y^3"})
    with pytest.raises(DynsysError):
        invert_triangular(m)


def test_map_composition_order():
    a = BirationalMap.from_strings(("x",), ("y",), {"y": "x + 1"}, inverse={"x": "y - 1"})
    b = BirationalMap.from_strings(("y",), ("z",), {"z": "2*y"}, inverse={"y": "z/2"})
    ab = a.then(b)
    assert ab.forward["z"] == 2 * V("x") + 2
    assert ab.check_inverse() == {}


@pytest.mark.parametrize("sys_id", sorted(HOLOMORPHY))
def test_holomorphy_charts_polynomial(sys_id):
    for name, shift in HOLOMORPHY[sys_id]:
        assert is_polynomial(pushforward(system(sys_id), chart(name))).ok, name
        if shift is not None:
            H = hamiltonian(sys_id).H - parse(shift)
            assert is_polynomial(pushforward_function(H, chart(name))).ok, name


def test_printed_tilde_charts_are_not_polynomial():
    H = hamiltonian("eq10").H
    assert not is_polynomial(pushforward_function(H, chart("tilde_A_printed"))).ok


def test_is_polynomial_allows_coefficient_denominators():
    assert is_polynomial(parse("q1/t + a2/(t - 1)")).ok
    rep = is_polynomial(parse("1/q1"))
    assert not rep.ok and rep.offending


def test_fifth_order_identity():
    rep = fifth_order_identity()
    assert rep.ok, rep.residuals
    assert parse(rep.details["denominator"]) == 4 * p1


def test_fifth_order_identity_specialized():
    assert fifth_order_identity({"a2": parse("1/3")}).ok


def test_fifth_order_negative_control():
    # flipping one sign in the numerator must leave a nonzero residual
    Vf, H = system("eq3"), hamiltonian("eq3").H
    ds = iterated_derivatives(H, Vf, 5)
    num_s, den_s = fifth_order_expression()
    env = {"y": ds[1], "z": ds[2], "w": ds[3], "q": ds[4]}
    bad = parse(num_s.replace("2*q - 1", "2*q + 1"), env)
    assert not (ds[5] * parse(den_s, env) - bad).is_zero()


def test_riccati_correspondence():
    rep = riccati_correspondence()
    assert rep.ok and rep.details["x_decoupled"]


def test_rational_chart_sends_rational_system_to_eq6():
    got = pushforward(system("eq5raw"), chart("eq5_to_eq6"))
    assert got.equals(system("eq6"))


def test_recover_hamiltonian_eq3():
    res = recover_hamiltonian([chart("holo_A"), chart("holo_B")], shifts={"holo_B": "q1"})
    assert res.contains(hamiltonian("eq3").H)
    # only constants are left free
    assert res.basis == [ONE]
    assert not res.contains(hamiltonian("eq3").H + q1 * p1)
