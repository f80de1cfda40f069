"""Seed solutions and the rational-solution ladder generated by translations."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .catalog import system
from .dynsys import VectorField
from .symfield import RatFunc, SymfieldError, V, coerce, differentiate, parse, substitute
from .weyl import Generator, generator


class LadderError(ValueError):
    pass


@dataclass(frozen=True)
class RationalSolution:
    system_id: str
    components: Mapping[str, RatFunc]
    param: Fraction

    def __post_init__(self):
        object.__setattr__(self, "components", {k: coerce(v) for k, v in self.components.items()})
        object.__setattr__(self, "param", Fraction(self.param))
        for k, v in self.components.items():
            extra = v.variables() - {"t"}
            if extra:
                raise LadderError(f"component {k} depends on {sorted(extra)}, not only on t")

    def bindings(self) -> dict:
        return {**self.components, "a2": RatFunc.const(self.param)}

    def row(self) -> dict:
        vars_ = system(self.system_id).vars
        return {"a2": str(self.param), **{v: str(self.components[v]) for v in vars_}}

    def same_as(self, other: "RationalSolution") -> bool:
        return (self.system_id == other.system_id and self.param == other.param
                and all(self.components[v] == other.components[v] for v in self.components))


SEEDS = {
    "eq3": ({"q1": "0", "p1": "-t/2", "q2": "0", "p2": "0"}, 0),
    "eq6": ({"x": "0", "y": "0", "z": "0", "w": "-t/4", "q": "0"}, 0),
}


def seed(system_id: str, c=0) -> RationalSolution:
    """Symmetry-fixed seed; for eq6 the x component is an arbitrary constant c."""
    if system_id not in SEEDS:
        raise LadderError(f"no seed catalogued for {system_id!r}")
    comps, a2 = SEEDS[system_id]
    out = {k: parse(v) for k, v in comps.items()}
    if system_id == "eq6":
        out["x"] = RatFunc.const(Fraction(c))
    return RationalSolution(system_id, out, Fraction(a2))


@dataclass
class SolutionReport:
    residuals: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.residuals

    def __bool__(self):
        return self.ok


def verify_solution(sol: RationalSolution, Vf: VectorField | None = None) -> SolutionReport:
    Vf = Vf or system(sol.system_id)
    b = sol.bindings()
    res = {}
    for v in Vf.vars:
        r = differentiate(sol.components[v], "t") - substitute(Vf.rhs[v], b)
        if not r.is_zero():
            res[v] = str(r)
    return SolutionReport(res)


def _apply_primitive(sol: RationalSolution, gen: Generator) -> RationalSolution:
    b = sol.bindings()
    try:
        comps = {v: substitute(gen.images[v], b) for v in gen.images}
    except SymfieldError as exc:
        raise LadderError(f"solution lies on the pole divisor of {gen.name}") from exc
    new_a2 = substitute(gen.param_action["a2"], {"a2": RatFunc.const(sol.param)}).constant_value()
    return RationalSolution(sol.system_id, comps, new_a2)


def apply_generator(sol: RationalSolution, gen: Generator, check: bool = True) -> RationalSolution:
    if gen.system_id != sol.system_id:
        raise LadderError(f"generator for {gen.system_id} applied to a {sol.system_id} solution")
    out = sol
    for g in gen.word or (gen,):
        out = _apply_primitive(out, g)
    if check:
        rep = verify_solution(out)
        if not rep.ok:
            raise LadderError(f"{gen.name} produced a non-solution: {rep.residuals}")
    return out


def ladder(system_id: str, frm: int, to: int, check: bool = True) -> list:
    """Rows a2 = frm..to obtained from the seed by T1 (upwards) and T2 (downwards)."""
    if not frm <= 0 <= to:
        raise LadderError("need from <= 0 <= to")
    s = seed(system_id)
    if check and not verify_solution(s).ok:
        raise LadderError("seed does not verify")
    t1, t2 = generator("T1", system_id), generator("T2", system_id)
    up, down = [s], []
    cur = s
    for _ in range(to):
        cur = apply_generator(cur, t1, check)
        up.append(cur)
    cur = s
    for _ in range(-frm):
        cur = apply_generator(cur, t2, check)
        down.append(cur)
    return list(reversed(down)) + up


# expected rows for a2 = -3..3
TABLE = {
    -3: ("3*(t^5+96)/(t*(t^5-144))", "-t*(t^10-1008*t^5-48384)/(2*(t^5-144)^2)",
         "24*(t^15+2088*t^10+114048*t^5-497664)/(t^3*(t^5-144)^3)",
         "-12*(t^10+432*t^5+3456)/(t^2*(t^5-144)^2)"),
    -2: ("2/t", "72/t^4 - t/2", "12/t^3", "-6/t^2"),
    -1: ("1/t", "-t/2", "4/t^3", "-2/t^2"),
    0: ("0", "-t/2", "0", "0"),
    1: ("-1/t", "-t/2", "0", "0"),
    2: ("-2/t", "-t/2", "4/t^3", "-2/t^2"),
    3: ("-3*(t^5+96)/(t*(t^5-144))", "-(t^5-144)/(2*t^4)", "12/t^3", "-6/t^2"),
}


def table_solution(a2: int) -> RationalSolution:
    comps = dict(zip(("q1", "p1", "q2", "p2"), (parse(s) for s in TABLE[a2])))
    return RationalSolution("eq3", comps, Fraction(a2))


def compare_with_table(rows) -> dict:
    """Map a2 -> list of mismatching components (empty list when the row agrees)."""
    out = {}
    for r in rows:
        k = int(r.param)
        if k not in TABLE:
            continue
        ref = table_solution(k)
        out[k] = [v for v in ref.components if ref.components[v] != r.components[v]]
    return out


# Painleve I loci ---------------------------------------------------------

_LOCI = {
    "eq3": {"fix": {"p1": "0", "a2": "1/2"}, "var": "p1",
            "reduced": {"q1": "q1^2 + p2", "q2": "-3*p2^2 + t/2", "p2": "q2"}},
    "eq6": {"fix": {"w": "0", "a2": "1/2"}, "var": "w",
            "reduced": {"x": "y", "y": "z", "z": "-6*y^2 + t/4", "q": "-q^2/2 - 4*y"}},
}


@dataclass
class LocusReport:
    invariant: bool
    reduced_matches: bool
    reduced: dict
    mismatches: dict

    @property
    def ok(self) -> bool:
        return self.invariant and self.reduced_matches


def painleve_one_locus(system_id: str) -> LocusReport:
    if system_id not in _LOCI:
        raise LadderError(f"no Painleve I locus catalogued for {system_id!r}")
    spec = _LOCI[system_id]
    Vf = system(system_id)
    fix = {k: parse(v) for k, v in spec["fix"].items()}
    var = spec["var"]
    invariant = substitute(Vf.rhs[var], fix).is_zero()
    reduced = {v: substitute(Vf.rhs[v], fix) for v in Vf.vars if v != var}
    mism = {}
    for v, e in spec["reduced"].items():
        if reduced[v] != parse(e):
            mism[v] = str(reduced[v] - parse(e))
    return LocusReport(invariant, not mism, {k: str(v) for k, v in reduced.items()}, mism)
