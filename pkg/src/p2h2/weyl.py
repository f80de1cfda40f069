"""Backlund transformations: generators, composition, Poisson-bracket series, errata."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

from .catalog import chart, system
from .dynsys import BirationalMap, VectorField, total_derivative
from .symfield import RatFunc, ZERO, ONE, V, coerce, differentiate, parse, substitute

PAIRS = (("q1", "p1"), ("q2", "p2"))
ALPHA0 = parse("1/2 - a2")
ALPHA1 = parse("1/2 + a2")
F1 = parse("p1 + t - 2*p2^2 + 4*q1*(q2 + q1*p2)")


class WeylError(ValueError):
    pass


@dataclass(frozen=True)
class Generator:
    """Images of the coordinates (and of a2) under one Backlund transformation."""

    name: str
    system_id: str
    images: Mapping[str, RatFunc]
    param_action: Mapping[str, RatFunc] = field(default_factory=lambda: {"a2": V("a2")})
    # primitive factors, first acting first; empty for a primitive generator
    word: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "images", {k: coerce(v) for k, v in self.images.items()})
        pa = {"a2": V("a2")}
        pa.update({k: coerce(v) for k, v in self.param_action.items()})
        object.__setattr__(self, "param_action", pa)

    @property
    def vars(self):
        return tuple(self.images)

    @property
    def map(self) -> BirationalMap:
        return BirationalMap(self.vars, self.vars, self.images, None, self.param_action, self.name)

    def all_images(self) -> dict:
        return {**self.images, **self.param_action}

    def act(self, f) -> RatFunc:
        """The transformed function g(f)."""
        return substitute(f, self.all_images())

    def is_identity(self) -> bool:
        return all(e == V(v) for v, e in self.all_images().items())

    def poles(self) -> set:
        """Denominator factors of the images (the pole divisor is their union)."""
        out = set()
        for e in self.images.values():
            if not e.is_polynomial():
                out.add(str(RatFunc(e._d)))
        return out


def poisson_bracket(f, g, pairs=PAIRS) -> RatFunc:
    f, g = coerce(f), coerce(g)
    out = ZERO
    for q, p in pairs:
        out = out + differentiate(f, p) * differentiate(g, q) - differentiate(f, q) * differentiate(g, p)
    return out


def backlund_series(f_root, alpha_root, g, cap: int = 10) -> RatFunc:
    """sum_k (alpha/f)^k / k! ad_f^k(g), stopped when the bracket vanishes."""
    f_root, alpha_root, g = coerce(f_root), coerce(alpha_root), coerce(g)
    total = g
    term = g
    coef = ONE
    ratio = alpha_root / f_root
    for k in range(1, cap + 1):
        term = poisson_bracket(f_root, term)
        if term.is_zero():
            return total
        coef = coef * ratio / k
        total = total + coef * term
    raise WeylError(f"series did not terminate within {cap} brackets; last term {term}")


def compose(word: Sequence[Generator], name: str = "") -> Generator:
    """First listed acts first: compose([g, h])(v) = g(h(v))."""
    if not word:
        raise WeylError("empty word")
    sys_ids = {g.system_id for g in word}
    if len(sys_ids) != 1:
        raise WeylError(f"mixed systems {sorted(sys_ids)}")
    # expand to primitive factors; substituting simple images one at a time
    # avoids the swell of plugging large composites into each other
    prims = []
    for g in word:
        prims.extend(g.word or (g,))
    acc = dict(prims[-1].all_images())
    for g in reversed(prims[:-1]):
        sub = g.all_images()
        acc = {k: substitute(v, sub) for k, v in acc.items()}
    vars_ = word[0].vars
    imgs = {v: acc[v] for v in vars_}
    pa = {k: v for k, v in acc.items() if k not in imgs}
    return Generator(name or "".join(g.name for g in word), word[0].system_id, imgs, pa, tuple(prims))


def power(g: Generator, n: int) -> Generator:
    if n == 0:
        return identity(g.system_id)
    return compose([g] * n, name=f"{g.name}^{n}")


def identity(system_id: str) -> Generator:
    vars_ = system(system_id).vars
    return Generator("id", system_id, {v: V(v) for v in vars_})


@dataclass
class SymmetryReport:
    generator: str
    system_id: str
    residuals: dict

    @property
    def ok(self) -> bool:
        return not self.residuals

    def __bool__(self):
        return self.ok


def verify_generator(gen: Generator, Vf: VectorField | None = None) -> SymmetryReport:
    Vf = Vf or system(gen.system_id)
    sub = gen.all_images()
    res = {}
    for v in Vf.vars:
        r = total_derivative(gen.images[v], Vf) - substitute(Vf.rhs[v], sub)
        if not r.is_zero():
            res[v] = r
    return SymmetryReport(gen.name, gen.system_id, res)


# root variables -------------------------------------------------------

@dataclass(frozen=True)
class RootAction:
    """Images of (alpha0, alpha1) as homogeneous linear forms A*alpha0 + B*alpha1."""

    alpha0: tuple
    alpha1: tuple
    shift: Mapping[str, RatFunc]

    def __call__(self, a0, a1):
        return (self.alpha0[0] * a0 + self.alpha0[1] * a1,
                self.alpha1[0] * a0 + self.alpha1[1] * a1)

    def preserves_sum(self) -> bool:
        s0 = self.alpha0[0] + self.alpha1[0]
        s1 = self.alpha0[1] + self.alpha1[1]
        return s0 == 1 and s1 == 1


def _linear_form(expr: RatFunc) -> tuple:
    # expr = c + m*a2 equals A*alpha0 + B*alpha1 once alpha0 + alpha1 = 1
    m = differentiate(expr, "a2")
    c = substitute(expr, {"a2": 0})
    if not (m.is_constant() and c.is_constant()):
        raise WeylError(f"parameter action is not affine: {expr}")
    m, c = m.constant_value(), c.constant_value()
    return (c - m / 2, c + m / 2)


def root_action(gen: Generator) -> RootAction:
    new_a2 = gen.param_action["a2"]
    a0 = substitute(ALPHA0, {"a2": new_a2})
    a1 = substitute(ALPHA1, {"a2": new_a2})
    return RootAction(_linear_form(a0), _linear_form(a1), {"alpha0": a0, "alpha1": a1})


# catalogue -------------------------------------------------------------

_A = "(2*a2 + 1)"
_F = "(p1 + t - 2*p2^2 + 4*q1*(q2 + q1*p2))"
_F6 = "(t + 2*w + 2*y*q^2 - 8*y^2 - 4*z*q)"
_B = "(2*q1*p1 + 1 - 2*a2)"

_PRINTED = {
    ("eq3", "s0"): ({"q1": "q1 + (1/2 - a2)/p1", "p1": "p1", "q2": "q2", "p2": "p2"}, "1 - a2"),
    ("eq3", "pi"): ({"q1": "-q1", "p1": f"-{_F}", "q2": "-(q2 + 4*q1*(q1^2 + p2))",
                     "p2": "-(p2 + 2*q1^2)"}, "-a2"),
    ("eq3", "s1_printed"): ({
        "q1": f"q1 + {_A}/(2*{_F})",
        "p1": f"p1 - 2*{_A}*(q2 + 2*q1*p2)/{_F} + {_A}^2*(p2 + 2*q1^2)/{_F}^2",
        "q2": f"q2 - 2*{_A}*(p2 - q1^2)/{_F} + 3*{_A}^2*q1/{_F}^2 + {_A}^3/(2*{_F}^3)",
        "p2": f"p2 - 2*{_A}*q1/{_F} - {_A}^2/{_F}^2",
    }, "-1 - a2"),
    ("eq3", "T1_printed"): ({
        "q1": f"-q1 - {_A}/(2*{_F}^2)",
        "p1": "-p1 - t + 2*p2^2 - 4*q1*(q2 + q1*p2)",
        "q2": "-q2 - 4*q1*(q1^2 + p2)",
        "p2": "-p2 - 2*q1^2",
    }, "a2 + 1"),
    ("eq3", "T2_printed"): ({
        "q1": "-q1 + (2*a2 - 1)/(2*p1)",
        "p1": f"-p1 - t + 2*p2^2 - {_B}*(p2 + 2*q1*p1*p2 + 2*p1*q2 - 2*a2*p2)/p1^2",
        "q2": f"-q2 - 2*{_B}*p2/p1 - {_B}^3/(2*p1^3)",
        "p2": f"-p2 - {_B}^2/(2*p1^2)",
    }, "a2 - 1"),
    ("eq10", "s0_printed"): ({"q1": "q1 + (a2 - 1/2)/p1", "p1": "p1", "q2": "q2", "p2": "p2"}, "1 - a2"),
    ("eq10", "s1_printed"): ({
        "q1": "-q1",
        "p1": "-p1 - 2*a2/q1 - (2*p2^2 - t)/q1^2 + 4*q2/q1^3 + 4*p2/q1^4",
        "q2": "-q2 - 4*p2/q1 - 4/q1^3",
        "p2": "-p2 - 2/q1^2",
    }, "-a2"),
    # forms that pass the symmetry check: s0 is the holo_A conjugate of the eq3 s0,
    # s1 is the printed map with the sign of the 2*a2/q1 term corrected
    ("eq10", "s0"): ({"q1": "q1 + (1/2 - a2)/p1", "p1": "p1", "q2": "q2", "p2": "p2"}, "1 - a2"),
    ("eq10", "s1"): ({
        "q1": "-q1",
        "p1": "-p1 + 2*a2/q1 - (2*p2^2 - t)/q1^2 + 4*q2/q1^3 + 4*p2/q1^4",
        "q2": "-q2 - 4*p2/q1 - 4/q1^3",
        "p2": "-p2 - 2/q1^2",
    }, "-a2"),
    ("eq6", "s0"): ({"x": "x", "y": "y", "z": "z", "w": "w", "q": "q + (a2 - 1/2)/w"}, "1 - a2"),
    ("eq6", "pi"): ({"x": "x + q/2", "y": "-(y + q^2/4)", "z": "-(z - q*(q^2 + 8*y)/4)",
                     "w": "-(w + y*q^2 - 4*y^2 - 2*z*q + t/2)", "q": "-q"}, "-a2"),
    ("eq6", "s1_printed"): ({
        "x": f"x + {_A}/(2*{_F6})",
        "y": f"y + {_A}*q/(2*{_F6}) - {_A}^2/(4*{_F6}^2)",
        "z": f"z + {_A}*(q^2 - 8*y)/(4*{_F6}) - 3*{_A}^2*q/(4*{_F6}^2) + {_A}^3/(4*{_F6}^3)",
        "w": f"w + 2*{_A}*(y*q - z)/{_F6} + {_A}^2*(q^2 + 4*y)/(4*{_F6}^2)",
        "q": f"q - {_A}/{_F6}",
    }, "-1 - a2"),
}

# derived by composition; pi s0 pi is the reflection s1, pi s0 and s0 pi the translations
_DERIVED = {
    "s1": ("pi", "s0", "pi"),
    "T1": ("pi", "s0"),
    "T2": ("s0", "pi"),
}

CANONICAL = {
    "eq3": ("s0", "s1", "pi"),
    "eq10": ("s0", "s1"),
    "eq6": ("s0", "s1", "pi"),
}

# printed formula -> canonical counterpart
PRINTED_PAIRS = (
    ("eq3", "s1_printed", "s1"),
    ("eq3", "T1_printed", "T1"),
    ("eq3", "T2_printed", "T2"),
    ("eq10", "s0_printed", "s0"),
    ("eq10", "s1_printed", "s1"),
    ("eq6", "s1_printed", "s1"),
)


def generator_names(system_id: str) -> list:
    names = [n for (s, n) in _PRINTED if s == system_id]
    if (system_id, "pi") in _PRINTED:
        names += [n for n in _DERIVED if n not in names]
    return names


@lru_cache(maxsize=None)
def generator(name: str, system_id: str) -> Generator:
    key = (system_id, name)
    if key in _PRINTED:
        imgs, pa = _PRINTED[key]
        return Generator(name, system_id, {k: parse(v) for k, v in imgs.items()}, {"a2": parse(pa)})
    if name in _DERIVED and (system_id, "pi") in _PRINTED:
        word = [generator(n, system_id) for n in _DERIVED[name]]
        return compose(word, name=name)
    raise WeylError(f"unknown generator {name!r} for system {system_id!r}")


def conjugate_by_chart(gen: Generator, m: BirationalMap, rename: Mapping[str, str], system_id: str) -> Generator:
    """Transport gen through the chart m, then rename chart coordinates."""
    m = m.with_inverse()
    sub = gen.all_images()
    imgs = {}
    for u in m.dst_vars:
        # u o g expressed in chart coordinates
        e = substitute(m.forward[u], sub)
        imgs[u] = m.to_dst(e)
    ren = {k: V(v) for k, v in rename.items()}
    out = {rename[u]: substitute(e, ren) for u, e in imgs.items()}
    return Generator(gen.name, system_id, out, gen.param_action)


# errata ----------------------------------------------------------------

@dataclass
class Erratum:
    generator: str
    component: str
    printed_expression: str
    canonical_expression: str
    residual: str
    system: str = ""
    note: str = ""

    def as_dict(self) -> dict:
        d = {
            "generator": self.generator,
            "component": self.component,
            "printed_expression": self.printed_expression,
            "canonical_expression": self.canonical_expression,
            "residual": self.residual,
        }
        if self.system:
            d["system"] = self.system
        if self.note:
            d["note"] = self.note
        return d


def compare_generators(printed: Generator, canonical: Generator) -> list:
    out = []
    for comp in list(printed.images) + ["a2"]:
        p = printed.all_images()[comp]
        c = canonical.all_images()[comp]
        r = p - c
        if not r.is_zero():
            out.append(Erratum(printed.name, comp, str(p), str(c), str(r), printed.system_id))
    # symmetry residuals of the printed map itself
    rep = verify_generator(printed)
    for v, r in rep.residuals.items():
        out.append(Erratum(printed.name, f"symmetry:{v}", str(printed.images[v]),
                           str(canonical.images[v]), str(r), printed.system_id,
                           "printed map violates the flow equation for this component"))
    return out


def _chart_errata() -> list:
    from .dynsys import is_polynomial
    from .catalog import hamiltonian
    out = []
    Ht = hamiltonian("eq10").H
    for printed, canon, shift in (("tilde_A_printed", "tilde_A", ZERO),
                                  ("tilde_B_printed", "tilde_B", 1 / V("q1"))):
        pm, cm = chart(printed), chart(canon)
        for u in pm.dst_vars:
            r = pm.forward[u] - cm.forward[u]
            if not r.is_zero():
                rep = is_polynomial(pm.to_dst(Ht - shift))
                out.append(Erratum(printed, u, str(pm.forward[u]), str(cm.forward[u]), str(r), "eq10",
                                   "transformed Hamiltonian polynomial: " + str(rep.ok).lower()))
    return out


def errata_report() -> list:
    """Every printed formula that differs from the machine-verified form."""
    out = []
    for sys_id, printed, canon in PRINTED_PAIRS:
        out += compare_generators(generator(printed, sys_id), generator(canon, sys_id))
    out += _chart_errata()
    out.append(Erratum(
        "eq5_to_eq6_map", "q",
        "(u4 - (a2 - 24*u1*u2)/2)/(u3 - (t - 24*(dH_III/dt)^2)/4)",
        "(q - (a2 - 24*y*z)/2)/(w - (t - 24*y^2)/4)",
        "undefined symbol dH_III/dt", "eq6",
        "read as du/dt; with that reading the map sends the rational system to eq6 exactly"))
    return out
