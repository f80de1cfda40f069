"""Named systems, Hamiltonians and coordinate charts."""
from __future__ import annotations

from functools import lru_cache

from .dynsys import BirationalMap, HamiltonianSpec, VectorField, hamiltonian_field
from .symfield import parse

SYSTEM_IDS = ("eq1", "pii_raw", "pii", "eq3", "eq10", "eq5raw", "eq6")

PAIRS4 = (("q1", "p1"), ("q2", "p2"))

HAMILTONIANS = {
    "eq3": "q1^2*p1 + (1/2 - a2)*q1 - p2^3 + (t/2)*p2 - q2^2/2 + p1*p2",
    "eq10": "-p1 - q2^2/2 - p2^3 + (t/2)*p2 - (q1*p1 + (1 - 2*a2)/2)*q1*p2",
    # second Painleve system, parameter stored in a2
    "pii": "q^2*p + p^2/2 + (t/2)*p - (a2 - 1/2)*q",
}
HAMILTONIAN_PAIRS = {"eq3": PAIRS4, "eq10": PAIRS4, "pii": (("q", "p"),)}

# pieces of the eq3 Hamiltonian: K(q1,p1) + H_I(q2,p2) + p1*p2
K_PART = "q1^2*p1 + (1/2 - a2)*q1"
HI_PART = "-p2^3 + (t/2)*p2 - q2^2/2"
COUPLING = "p1*p2"

FIFTH = (
    "((1-a2)*a2 - 2*y*(24*y^2-t)^2 - 24*z*(y - t*z)"
    " + 8*w*(5*y*(t-24*y^2) - 12*z^2 - 16*y*w) + 2*q*(48*y*z + 2*q - 1))"
    "/(48*y^2 + 8*w - 2*t)"
)

_RAW_SYSTEMS = {
    "eq1": (("x", "y", "z", "w"),
            {"x": "y", "y": "z", "z": "w",
             "w": "10*x*y^2 + 10*x^2*z - 6*x^5 + t*x + a2"}),
    "pii_raw": (("x", "y"), {"x": "y", "y": "2*x^3 + t*x + a2"}),
    "eq5raw": (("x", "y", "z", "w", "q"),
               {"x": "y", "y": "z", "z": "w", "w": "q", "q": FIFTH}),
    "eq6": (("x", "y", "z", "w", "q"),
            {"x": "y", "y": "z", "z": "-6*y^2 + w + t/4",
             "w": "w*q + (2*a2 - 1)/4", "q": "-q^2/2 - 4*y"}),
}


@lru_cache(maxsize=None)
def hamiltonian(system_id: str) -> HamiltonianSpec:
    if system_id not in HAMILTONIANS:
        raise KeyError(f"no Hamiltonian catalogued for {system_id!r}")
    return HamiltonianSpec(parse(HAMILTONIANS[system_id]), HAMILTONIAN_PAIRS[system_id])


@lru_cache(maxsize=None)
def system(system_id: str) -> VectorField:
    if system_id in HAMILTONIANS:
        return hamiltonian_field(hamiltonian(system_id), name=system_id)
    if system_id in _RAW_SYSTEMS:
        vars_, rhs = _RAW_SYSTEMS[system_id]
        return VectorField(vars_, {k: parse(v) for k, v in rhs.items()}, name=system_id)
    raise KeyError(f"unknown system {system_id!r}")


# coordinate charts -----------------------------------------------------

Q4 = ("q1", "p1", "q2", "p2")
C1 = ("x1", "y1", "z1", "w1")
E6 = ("x", "y", "z", "w", "q")
R5 = ("x1", "y1", "z1", "w1", "v1")

_F1 = "(p1 + t - 2*p2^2 + 4*q1*(q2 + q1*p2))"

_MAPS = {
    # fourth-order equation -> Hamiltonian coordinates
    "eq1_to_eq3": (("x", "y", "z", "w"), Q4, {
        "q1": "x",
        "p1": "w + y^2 - t/2 + (3*x^3 - 6*x*y - 2*z)*x",
        "q2": "z - 2*x*y",
        "p2": "y - x^2",
    }),
    # holomorphy charts of the eq3 Hamiltonian
    "holo_A": (Q4, C1, {
        "x1": "1/q1", "y1": "-(q1*p1 + 1/2 - a2)*q1", "z1": "q2", "w1": "p2",
    }),
    "holo_B": (Q4, C1, {
        "x1": "1/q1",
        "y1": "-((p1 - 2*p2^2 + t + 4*q1*(q1*p2 + q2))*q1 + 1/2 + a2)*q1",
        "z1": "q2 + 4*q1*(q1^2 + p2)",
        "w1": "p2 + 2*q1^2",
    }),
    # holomorphy charts of the eq10 Hamiltonian (verified forms)
    "tilde_A": (Q4, C1, {
        "x1": "1/q1", "y1": "-(q1*p1 + 1/2 - a2)*q1", "z1": "q2", "w1": "p2",
    }),
    "tilde_B": (Q4, C1, {
        "x1": "q1",
        "y1": "p1 - 2*a2/q1 + (2*p2^2 - t)/q1^2 - 4*q2/q1^3 - 4*p2/q1^4",
        "z1": "q2 + 4*p2/q1 + 4/q1^3",
        "w1": "p2 + 2/q1^2",
    }),
    # the same charts as typeset, kept for the errata comparison
    "tilde_A_printed": (Q4, C1, {
        "x1": "1/q1", "y1": "-(q1*p1 - 1/2 + a2)*q1", "z1": "q2", "w1": "p2",
    }),
    "tilde_B_printed": (Q4, C1, {
        "x1": "q1",
        "y1": "p1 + 2*a2/q1 + (2*p2^2 - t)/q1^2 - 4*q2/q1^3 - 4*p2/q1^4",
        "z1": "q2 + 4*p2/q1 + 4/q1^3",
        "w1": "p2 + 2/q1^2",
    }),
    # holomorphy charts of the five-dimensional system
    "eq6_r1": (E6, R5, {
        "x1": "x", "y1": "y", "z1": "z", "w1": "-(w*q + (2*a2 - 1)/2)*q", "v1": "1/q",
    }),
    "eq6_r2": (E6, R5, {
        "x1": "x + q/2", "y1": "y + q^2/4", "z1": "z - q*(q^2 + 8*y)/4",
        "w1": "-((w + t/2 - 4*y^2 + q*(y*q - 2*z))*q - 1/2 - a2)*q", "v1": "1/q",
    }),
    "eq6_r3": (E6, R5, {
        "x1": "1/x",
        "y1": "y/x + x",
        "z1": ("-x^3*z - y*(4*t + 5*w - 35*y^2)/64 - x*(4*w*q + 2*a2 + 1)/16"
               " + 3*y*(y^2 - w)^2/(128*x^4) - 105*x^4*y/128 - 7*x^6/128"
               " - 3*x^2*(4*t + 15*w - 35*y^2)/64 + (w - 21*y^2)*(w - y^2)/(128*x^2)"),
        "w1": "w/x^2",
        "v1": "q*x^2 + 3*x*(x^2 - 2*y)/4 + (w - y^2)/(4*x)",
    }),
    # rational fifth-order system -> polynomial five-dimensional system
    "eq5_to_eq6": (E6, E6, {
        "x": "x", "y": "y", "z": "z",
        "w": "w - (t - 24*y^2)/4",
        "q": "(q - (a2 - 24*y*z)/2)/(w - (t - 24*y^2)/4)",
    }),
}

CHART_ALIASES = {"r0": "holo_A", "r1": "holo_B"}


@lru_cache(maxsize=None)
def chart(name: str) -> BirationalMap:
    name = CHART_ALIASES.get(name, name)
    if name not in _MAPS:
        raise KeyError(f"unknown chart {name!r}")
    src, dst, fw = _MAPS[name]
    return BirationalMap.from_strings(src, dst, fw, name=name).with_inverse()


def chart_names():
    return tuple(_MAPS)


# which chart set belongs to which system, and the function required to be polynomial
HOLOMORPHY = {
    "eq3": (("holo_A", "0"), ("holo_B", "q1")),
    "eq10": (("tilde_A", "0"), ("tilde_B", "1/q1")),
    "eq6": (("eq6_r1", None), ("eq6_r2", None), ("eq6_r3", None)),
}
