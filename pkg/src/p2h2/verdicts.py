"""Named pass/fail checks shared by the command line and the acceptance suite."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

from .catalog import HOLOMORPHY, chart, hamiltonian, system
from .dynsys import (
    fifth_order_identity, is_polynomial, pushforward, pushforward_function, riccati_correspondence,
)
from .symfield import ZERO, RatFunc, V, parse, substitute


@dataclass
class Verdict:
    name: str
    passed: bool
    payload: dict = field(default_factory=dict)
    seconds: float = 0.0

    def as_dict(self, timing: bool = False) -> dict:
        d = {"name": self.name, "pass": self.passed, "payload": self.payload}
        if timing:
            d["seconds"] = round(self.seconds, 4)
        return d


def _timed(name, fn) -> Verdict:
    t0 = time.perf_counter()
    passed, payload = fn()
    if not passed and not payload:
        payload = {"mismatch": "check failed without detail"}
    return Verdict(name, bool(passed), payload, time.perf_counter() - t0)


def _strs(d) -> dict:
    return {k: str(v) for k, v in d.items()}


# individual checks ------------------------------------------------------

def symmetry(system_id: str) -> list:
    from .weyl import CANONICAL, generator, verify_generator

    out = []
    for name in CANONICAL[system_id]:
        def run(name=name):
            rep = verify_generator(generator(name, system_id))
            return rep.ok, {"residuals": _strs(rep.residuals)}
        out.append(_timed(f"symmetry {system_id} {name}", run))
    return out


def relations(system_id: str) -> list:
    from .weyl import CANONICAL, compose, generator, power, root_action

    out = []
    for name in CANONICAL[system_id]:
        def inv(name=name):
            g = generator(name, system_id)
            sq = compose([g, g])
            return sq.is_identity(), {"square": _strs(sq.all_images())} if not sq.is_identity() else {}
        out.append(_timed(f"relation {system_id} {name}^2 = id", inv))
        def roots(name=name):
            ra = root_action(generator(name, system_id))
            return ra.preserves_sum(), {"alpha0": _strs(ra.shift)}
        out.append(_timed(f"relation {system_id} {name} preserves alpha0+alpha1", roots))
    if "pi" not in CANONICAL[system_id]:
        return out
    t1, t2 = generator("T1", system_id), generator("T2", system_id)

    def inverse():
        c = compose([t1, t2])
        return c.is_identity(), {} if c.is_identity() else {"composite": _strs(c.all_images())}
    out.append(_timed(f"relation {system_id} T1 T2 = id", inverse))
    for n in range(1, 6):
        def shift(n=n):
            # parameter action of T1^n, composed on a2 alone
            a2 = V("a2")
            for _ in range(n):
                a2 = substitute(t1.param_action["a2"], {"a2": a2})
            ok = a2 == V("a2") + n
            info = {"a2": str(a2)}
            if n <= 3:
                # full composite for small n, so the map itself is checked as well
                full = power(t1, n)
                ok = ok and full.param_action["a2"] == a2
            return ok, info
        out.append(_timed(f"relation {system_id} T1^{n} shifts a2 by {n}", shift))
    return out


def _chart_fn(system_id, shift):
    H = hamiltonian(system_id).H
    return H - parse(shift) if shift != "0" else H


def holomorphy(system_id: str) -> list:
    out = []
    Vf = system(system_id)
    for name, shift in HOLOMORPHY[system_id]:
        def field_(name=name):
            rep = is_polynomial(pushforward(Vf, chart(name)))
            return rep.ok, {"offending": _strs(rep.offending)}
        out.append(_timed(f"holomorphy {system_id} {name} field", field_))
        if shift is None:
            continue
        def ham(name=name, shift=shift):
            f = pushforward_function(_chart_fn(system_id, shift), chart(name))
            rep = is_polynomial(f)
            return rep.ok, {} if rep.ok else {"transformed": str(f)}
        label = "H" if shift == "0" else f"H - ({shift})"
        out.append(_timed(f"holomorphy {system_id} {name} {label}", ham))
    return out


def fifth_order() -> list:
    def run():
        rep = fifth_order_identity()
        return rep.ok, {"residuals": _strs(rep.residuals), **_strs(rep.details)}
    return [_timed("fifth-order identity", run)]


def riccati() -> list:
    def run():
        rep = riccati_correspondence()
        return rep.ok, {"residuals": _strs(rep.residuals), **_strs(rep.details)}
    return [_timed("riccati correspondence eq6 -> eq3", run)]


def _renamed_equal(Vf, target):
    got = Vf.rename(dict(zip(Vf.vars, target.vars))) if tuple(Vf.vars) != target.vars else Vf
    return got.diff_report(target)


def correspondences() -> list:
    def eq1_eq3():
        d = _renamed_equal(pushforward(system("eq1"), chart("eq1_to_eq3")), system("eq3"))
        return not d, {"residuals": _strs(d)}

    def eq3_eq10():
        d = _renamed_equal(pushforward(system("eq3"), chart("holo_A")), system("eq10"))
        return not d, {"residuals": _strs(d)}

    def eq5_eq6():
        d = _renamed_equal(pushforward(system("eq5raw"), chart("eq5_to_eq6")), system("eq6"))
        return not d, {"residuals": _strs(d)}

    return [_timed("pushforward eq1 -> eq3", eq1_eq3),
            _timed("pushforward eq3 -> eq10 (chart A)", eq3_eq10),
            _timed("pushforward eq5raw -> eq6", eq5_eq6)]


def loci() -> list:
    from .ladder import painleve_one_locus, seed, verify_solution

    out = []
    for sid in ("eq3", "eq6"):
        def locus(sid=sid):
            rep = painleve_one_locus(sid)
            return rep.ok, {"reduced": rep.reduced, "mismatches": rep.mismatches}
        out.append(_timed(f"Painleve I locus {sid}", locus))
        def sd(sid=sid):
            rep = verify_solution(seed(sid))
            return rep.ok, {"residuals": rep.residuals}
        out.append(_timed(f"seed {sid}", sd))
    return out


def pipelines(pid: str | None = None) -> list:
    from .resolve import PIPELINE_IDS, run_pipeline

    out = []
    for p in ([pid] if pid else PIPELINE_IDS):
        def run(p=p):
            rep = run_pipeline(p)
            return rep.ok, rep.as_dict()
        out.append(_timed(f"pipeline {p}", run))
    return out


def errata() -> list:
    """Printed-formula mismatches plus pipeline-level diagnostics, as plain dicts."""
    from .resolve import run_pipeline
    from .weyl import errata_report

    out = [e.as_dict() for e in errata_report()]
    rep = run_pipeline("p2h2_s5")
    for e in rep.errata():
        out.append({"generator": "pipeline p2h2_s5", "component": e["check"],
                    "printed_expression": "", "canonical_expression": "",
                    "residual": "; ".join(f"{k}: {v}" for k, v in e["residuals"].items()),
                    "note": e["note"]})
    return out


# target dispatch --------------------------------------------------------

SYMMETRIC_SYSTEMS = ("eq3", "eq10", "eq6")
TARGETS = ("symmetry", "relations", "holomorphy", "fifth-order", "riccati",
           "correspondence", "loci", "pipeline", "all")


class UnknownTarget(ValueError):
    pass


def plan(target: str, system_id: str | None = None) -> list:
    """Independent (target, system) work units, in output order."""
    if target not in TARGETS:
        raise UnknownTarget(target)
    if target == "all":
        units = []
        for t in TARGETS[:-1]:
            units += plan(t, None)
        return units
    if target in ("symmetry", "relations", "holomorphy"):
        pool = SYMMETRIC_SYSTEMS
        if system_id:
            if system_id not in pool:
                raise UnknownTarget(f"{target} is not catalogued for {system_id}")
            pool = (system_id,)
        return [(target, s) for s in pool]
    if target == "pipeline":
        from .resolve import PIPELINE_IDS
        if system_id and system_id not in PIPELINE_IDS:
            raise UnknownTarget(f"unknown pipeline {system_id}")
        return [(target, s) for s in ([system_id] if system_id else PIPELINE_IDS)]
    return [(target, None)]


def run_unit(unit) -> list:
    target, sid = unit
    if target == "symmetry":
        return symmetry(sid)
    if target == "relations":
        return relations(sid)
    if target == "holomorphy":
        return holomorphy(sid)
    if target == "fifth-order":
        return fifth_order()
    if target == "riccati":
        return riccati()
    if target == "correspondence":
        return correspondences()
    if target == "loci":
        return loci()
    if target == "pipeline":
        return pipelines(sid)
    raise UnknownTarget(target)
