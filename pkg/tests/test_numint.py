from __future__ import annotations

import json
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from p2h2.ladder import seed, table_solution
from p2h2.numint import (
    IntegrationError, IntegratorConfig, backlund_defect, crosscheck_eq1_eq3, endpoint_error,
    energy_defect, exact_values, integrate, numeric_fifth_order, observed_order, rhs_function,
    sup_error,
)

GRID = list(np.linspace(0.0, 1.0, 401))


def test_seed_example():
    traj = integrate("eq3", 0, [0, -0.5, 0, 0], 1, 2)
    assert traj.ts[0] == 1 and traj.ts[-1] == 2
    assert sup_error(traj, seed("eq3").components) <= 1e-9


def test_ladder_row_one():
    row = table_solution(1).components
    y0 = exact_values(row, ("q1", "p1", "q2", "p2"), [1.0])[0]
    traj = integrate("eq3", 1, y0, 1, 2)
    assert sup_error(traj, row) <= 1e-9
    assert endpoint_error(traj, row) <= 1e-9


def test_zero_length_interval():
    traj = integrate("eq3", 0, [0.1, 0.2, 0.3, 0.4], 0.5, 0.5)
    assert traj.ts == [0.5]
    assert list(traj.states[0]) == [0.1, 0.2, 0.3, 0.4]


def test_samples_strictly_increasing():
    traj = integrate("eq3", Fraction(1, 3), [0.1, 0.2, 0.3, 0.4], 0, 1)
    assert all(b > a for a, b in zip(traj.ts, traj.ts[1:]))


def test_backwards_integration():
    row = table_solution(2).components
    y0 = exact_values(row, ("q1", "p1", "q2", "p2"), [2.0])[0]
    traj = integrate("eq3", 2, y0, 2, 1)
    assert traj.ts[-1] == 1 and endpoint_error(traj, row) <= 1e-9


def test_t_eval_hit_exactly():
    traj = integrate("eq3", 0, [0.1, 0.2, 0.3, 0.4], 0, 1, t_eval=[0.25, 0.5, 1.0])
    assert traj.ts == [0.0, 0.25, 0.5, 1.0]


def test_deterministic():
    a = integrate("eq1", 0, [0.1, 0.2, 0.3, 0.4], 0, 1)
    b = integrate("eq1", 0, [0.1, 0.2, 0.3, 0.4], 0, 1)
    assert a.to_jsonl() == b.to_jsonl()


def test_pole_guard():
    # q1' = q1^2 + ... blows up in finite time from a large start
    traj = integrate("eq3", 0, [5.0, 0, 0, 0], 0, 2)
    assert traj.pole_hit
    assert all(np.max(np.abs(s)) <= 1e8 for s in traj.states)
    assert traj.ts[-1] < 2


def test_bad_initial_vector():
    with pytest.raises(IntegrationError):
        integrate("eq3", 0, [0, 0, 0], 0, 1)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rtol=0)
    with pytest.raises(ValueError):
        IntegratorConfig(fixed_step=-0.1)


def test_step_limit():
    with pytest.raises(IntegrationError):
        integrate("eq3", 0, [0.1, 0.2, 0.3, 0.4], 0, 1, IntegratorConfig(max_steps=3))


def test_rhs_matches_symbolic_field():
    f = rhs_function("eq3", 0)
    # q1' = q1^2 + p2, p1' = -2 q1 p1 - 1/2 + a2, q2' = p1 - 3 p2^2 + t/2, p2' = q2
    assert np.allclose(f(1.0, np.array([1.0, 2.0, 3.0, 4.0])), [5.0, -4.5, -45.5, 3.0])


# cross-checks -----------------------------------------------------------

def test_crosscheck_example():
    rep = crosscheck_eq1_eq3([0.1, 0.2, 0.3, 0.4], 0, 1, 0)
    assert rep.ok(1e-7) and rep.sup_error <= 1e-7
    assert rep.roundtrip_error <= 1e-10


@given(st.lists(st.floats(min_value=-0.5, max_value=0.5), min_size=4, max_size=4),
       st.sampled_from([0, Fraction(1, 3), 1]))
@settings(max_examples=8)
def test_crosscheck_random(u0, a2):
    rep = crosscheck_eq1_eq3(u0, 0, 1, a2)
    assume(not rep.pole_hit)
    assert rep.sup_error <= 1e-7
    assert rep.roundtrip_error <= 1e-10


def test_crosscheck_seed_is_pointwise():
    # the eq1 preimage of the eq3 seed is u = 0 at a2 = 0
    rep = crosscheck_eq1_eq3([0, 0, 0, 0], 0, 1, 0)
    assert rep.sup_error <= 1e-12


def test_fifth_order_on_seed():
    traj = integrate("eq3", 0, [0, -0.5, 0, 0], 1, 2)
    rep = numeric_fifth_order(traj)
    assert rep.checked > 0 and rep.max_residual <= 1e-8


def test_fifth_order_random():
    traj = integrate("eq3", Fraction(1, 3), [0.1, 0.2, 0.3, 0.4], 0, 1, t_eval=GRID)
    rep = numeric_fifth_order(traj)
    assert rep.checked > 300 and rep.max_residual <= 1e-6


def test_fifth_order_needs_eq3():
    with pytest.raises(IntegrationError):
        numeric_fifth_order(integrate("eq1", 0, [0.1, 0.2, 0.3, 0.4], 0, 1))


def test_energy_bookkeeping():
    traj = integrate("eq3", Fraction(1, 3), [0.1, 0.2, 0.3, 0.4], 0, 1, t_eval=GRID)
    assert energy_defect(traj) <= 1e-8


def test_energy_needs_uniform_grid():
    traj = integrate("eq3", 0, [0.1, 0.2, 0.3, 0.4], 0, 1)
    with pytest.raises(IntegrationError):
        energy_defect(traj)


def test_backlund_numeric():
    # p1 stays away from the pole divisor of s0 on this window
    traj = integrate("eq3", Fraction(1, 3), [0.1, 1.5, 0.3, 0.4], 0, 1, t_eval=GRID)
    assert backlund_defect(traj, "s0") <= 1e-5


def test_backlund_detects_wrong_target():
    # a trajectory of the wrong parameter does not map to a solution
    traj = integrate("eq3", Fraction(1, 3), [0.1, 1.5, 0.3, 0.4], 0, 1, t_eval=GRID)
    traj.param = Fraction(1, 2)
    assert backlund_defect(traj, "s0") > 1e-3


def test_observed_order():
    orders = observed_order()
    assert orders and min(orders) >= 4


def test_runs_are_fast():
    t = time.perf_counter()
    crosscheck_eq1_eq3([0.1, 0.2, 0.3, 0.4], 0, 1, 0)
    assert time.perf_counter() - t < 5


# export -----------------------------------------------------------------

def test_jsonl_and_tsv_export():
    traj = integrate("eq3", 0, [0, -0.5, 0, 0], 1, 2, t_eval=[1.5, 2.0])
    lines = [json.loads(x) for x in traj.to_jsonl().splitlines()]
    assert [d["t"] for d in lines] == [1.0, 1.5, 2.0]
    assert lines[-1]["state"][1] == pytest.approx(-1.0, abs=1e-12)
    tsv = traj.to_tsv().splitlines()
    assert tsv[0] == "t\tq1\tp1\tq2\tp2" and len(tsv) == 4
