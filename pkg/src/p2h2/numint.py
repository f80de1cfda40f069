"""Embedded Runge-Kutta integration of the catalogued systems and numeric cross-checks."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .catalog import chart, hamiltonian, system
from .dynsys import fifth_order_expression, iterated_derivatives
from .symfield import RatFunc, coerce, compile_float, compile_float_vector, parse, substitute


class IntegrationError(RuntimeError):
    pass


# Dormand-Prince 5(4), first-same-as-last
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-12
    atol: float = 1e-12
    max_step: float = 0.05
    pole_guard: float = 1e8
    min_step: float = 1e-14
    max_steps: int = 200_000
    # when set, take fixed steps of this size with no error control
    fixed_step: float | None = None

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.fixed_step is not None and self.fixed_step <= 0:
            raise ValueError("fixed step must be positive")


@dataclass
class Trajectory:
    system_id: str
    param: Fraction
    vars: tuple
    ts: list = field(default_factory=list)
    states: list = field(default_factory=list)
    rtol: float = 0.0
    atol: float = 0.0
    pole_hit: bool = False
    steps: int = 0

    @property
    def samples(self):
        return list(zip(self.ts, self.states))

    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_jsonl(self) -> str:
        return "".join(json.dumps({"t": t, "state": [float(x) for x in y]}) + "\n"
                       for t, y in zip(self.ts, self.states))

    def to_tsv(self) -> str:
        lines = ["\t".join(("t",) + tuple(self.vars))]
        for t, y in zip(self.ts, self.states):
            lines.append("\t".join(repr(float(v)) for v in (t, *y)))
        return "\n".join(lines) + "\n"


@lru_cache(maxsize=None)
def _compiled(system_id: str, a2: Fraction):
    Vf = system(system_id).specialize({"a2": RatFunc.const(a2)})
    names = ["t", *Vf.vars]
    vec = compile_float_vector([Vf.rhs[v] for v in Vf.vars], names)

    def f(t, y):
        return np.array(vec([t, *y]), dtype=float)

    return f, Vf.vars


def rhs_function(system_id: str, a2):
    return _compiled(system_id, Fraction(a2))[0]


def _dp_step(f, t, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(f(t + _C[i] * h, yi))
    y5 = y + h * sum(b * k for b, k in zip(_B5, ks))
    err = h * sum(e * k for e, k in zip(_E, ks))
    return y5, err, ks[-1]


def integrate(system_id: str, a2, y0: Sequence[float], t0: float, t1: float,
              cfg: IntegratorConfig | None = None, t_eval: Iterable[float] | None = None) -> Trajectory:
    """Integrate from t0 to t1.  Samples are every accepted step, or exactly the points of t_eval."""
    cfg = cfg or IntegratorConfig()
    a2 = Fraction(a2)
    f, vars_ = _compiled(system_id, a2)
    y = np.array(y0, dtype=float)
    if y.shape != (len(vars_),):
        raise IntegrationError(f"{system_id} expects {len(vars_)} initial values")
    t0, t1 = float(t0), float(t1)
    traj = Trajectory(system_id, a2, tuple(vars_), [t0], [y.copy()], cfg.rtol, cfg.atol)
    k1 = f(t0, y)
    if not np.all(np.isfinite(k1)):
        raise IntegrationError("right-hand side is not finite at the initial point")
    if t1 == t0:
        return traj
    direction = 1.0 if t1 > t0 else -1.0
    stops = sorted({float(s) for s in t_eval} if t_eval is not None else set(), reverse=direction < 0)
    stops = [s for s in stops if (s - t0) * direction > 0 and (t1 - s) * direction >= 0]
    if not stops or stops[-1] != t1:
        stops.append(t1)
    record_all = t_eval is None
    t = t0
    if cfg.fixed_step is not None:
        h = cfg.fixed_step
    else:
        scale = cfg.atol + cfg.rtol * np.abs(y)
        d0, d1 = np.linalg.norm(y / scale) / math.sqrt(len(y)), np.linalg.norm(k1 / scale) / math.sqrt(len(y))
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h = min(h, cfg.max_step, abs(t1 - t0))
    for target in stops:
        while (target - t) * direction > 0:
            if traj.steps >= cfg.max_steps:
                raise IntegrationError("maximum number of steps exceeded")
            step = min(h, abs(target - t))
            landing = step >= abs(target - t) * (1 - 1e-13)
            hh = direction * step
            y_new, err, k_last = _dp_step(f, t, y, hh, k1)
            if cfg.fixed_step is not None:
                accept, fac = True, 1.0
            else:
                sc = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
                en = float(np.sqrt(np.mean((err / sc) ** 2)))
                if not math.isfinite(en):
                    en = 1e10
                accept = en <= 1.0
                fac = 0.9 * en ** -0.2 if en > 0 else 5.0
                fac = min(5.0, max(0.2, fac))
            if not accept:
                h = step * fac
                if h < cfg.min_step:
                    raise IntegrationError(f"step size underflow at t={t}")
                continue
            traj.steps += 1
            t = target if landing else t + hh
            y, k1 = y_new, k_last
            if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > cfg.pole_guard:
                traj.pole_hit = True
                return traj
            if record_all or t == target:
                traj.ts.append(t)
                traj.states.append(y.copy())
            if cfg.fixed_step is None:
                h = min(step * fac, cfg.max_step)
    return traj


# exact references -------------------------------------------------------

def exact_values(components: dict, vars_: Sequence[str], ts: Iterable[float]) -> np.ndarray:
    fs = [compile_float(components[v], ["t"]) for v in vars_]
    return np.array([[g([t]) for g in fs] for t in ts])


def sup_error(traj: Trajectory, components: dict) -> float:
    ref = exact_values(components, traj.vars, traj.ts)
    return float(np.max(np.abs(np.array(traj.states) - ref)))


def endpoint_error(traj: Trajectory, components: dict) -> float:
    ref = exact_values(components, traj.vars, [traj.ts[-1]])[0]
    return float(np.max(np.abs(traj.final() - ref)))


def observed_order(system_id="eq3", a2=1, components=None, t0=1.0, t1=2.0, steps=(20, 40, 80)) -> list:
    """Log2 ratios of endpoint errors of fixed-step runs against an exact solution."""
    if components is None:
        from .ladder import ladder
        components = ladder(system_id, 0, int(a2))[-1].components
    vars_ = system(system_id).vars
    y0 = exact_values(components, vars_, [t0])[0]
    errs = []
    for n in steps:
        cfg = IntegratorConfig(fixed_step=(t1 - t0) / n)
        errs.append(endpoint_error(integrate(system_id, a2, y0, t0, t1, cfg), components))
    return [math.log2(a / b) for a, b in zip(errs, errs[1:]) if a > 0 and b > 0]


# cross-checks -----------------------------------------------------------

@dataclass
class CrosscheckReport:
    sup_error: float
    samples: int
    roundtrip_error: float
    pole_hit: bool

    def ok(self, tol=1e-7) -> bool:
        return not self.pole_hit and self.sup_error <= tol


def _map_float(name: str, a2: Fraction):
    m = chart(name)
    fw = [substitute(m.forward[v], {"a2": RatFunc.const(a2)}) for v in m.dst_vars]
    inv = [substitute(m.inverse[v], {"a2": RatFunc.const(a2)}) for v in m.src_vars]
    return (compile_float_vector(fw, ["t", *m.src_vars]),
            compile_float_vector(inv, ["t", *m.dst_vars]))


def crosscheck_eq1_eq3(u0: Sequence[float], t0=0.0, t1=1.0, a2=0, cfg=None, n_out=21) -> CrosscheckReport:
    a2 = Fraction(a2)
    fw, inv = _map_float("eq1_to_eq3", a2)
    grid = list(np.linspace(t0, t1, n_out))
    A = integrate("eq1", a2, u0, t0, t1, cfg, t_eval=grid)
    y0 = fw([t0, *u0])
    back = inv([t0, *y0])
    rt = float(np.max(np.abs(np.array(back) - np.array(u0, dtype=float))))
    B = integrate("eq3", a2, y0, t0, t1, cfg, t_eval=grid)
    if A.pole_hit or B.pole_hit:
        return CrosscheckReport(math.inf, 0, rt, True)
    mapped = np.array([fw([t, *s]) for t, s in zip(A.ts, A.states)])
    err = float(np.max(np.abs(mapped - np.array(B.states))))
    return CrosscheckReport(err, len(A.ts), rt, False)


@dataclass
class FifthOrderReport:
    max_residual: float
    checked: int
    skipped: list


@lru_cache(maxsize=None)
def _fifth_parts(a2: Fraction):
    Vf = system("eq3").specialize({"a2": RatFunc.const(a2)})
    H = substitute(hamiltonian("eq3").H, {"a2": RatFunc.const(a2)})
    ds = iterated_derivatives(H, Vf, 5)
    names = ["t", *Vf.vars]
    num_s, den_s = fifth_order_expression()
    env = {"y": ds[1], "z": ds[2], "w": ds[3], "q": ds[4]}
    num = substitute(parse(num_s, env), {"a2": RatFunc.const(a2)})
    den = substitute(parse(den_s, env), {"a2": RatFunc.const(a2)})
    return compile_float(ds[5], names), compile_float(num, names), compile_float(den, names)


def numeric_fifth_order(traj: Trajectory, den_tol=1e-6) -> FifthOrderReport:
    if traj.system_id != "eq3":
        raise IntegrationError("fifth-order check needs an eq3 trajectory")
    d5, num, den = _fifth_parts(traj.param)
    worst, skipped, n = 0.0, [], 0
    for t, y in zip(traj.ts, traj.states):
        args = [t, *y]
        dv = den(args)
        if abs(dv) < den_tol:
            skipped.append(t)
            continue
        r = abs(d5(args) - num(args) / dv)
        worst = max(worst, r)
        n += 1
    return FifthOrderReport(worst, n, skipped)


def _five_point(vals, ts):
    """Fourth-order central derivative on a uniform grid, interior points only."""
    h = (ts[-1] - ts[0]) / (len(ts) - 1)
    if not np.allclose(np.diff(ts), h, rtol=1e-9, atol=0):
        raise IntegrationError("finite differences need a uniform sample grid (use t_eval)")
    v = np.asarray(vals)
    return (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)


def energy_defect(traj: Trajectory) -> float:
    """max |dH/dt - partial_t H| along the samples, dH/dt by finite differences."""
    Hs = substitute(hamiltonian(traj.system_id).H, {"a2": RatFunc.const(traj.param)})
    names = ["t", *traj.vars]
    Hf, Ht = compile_float(Hs, names), compile_float(Hs.diff("t"), names)
    vals = [Hf([t, *y]) for t, y in zip(traj.ts, traj.states)]
    fd = _five_point(vals, traj.ts)
    ref = [Ht([t, *y]) for t, y in zip(traj.ts[2:-2], traj.states[2:-2])]
    return float(np.max(np.abs(fd - np.array(ref))))


def backlund_defect(traj: Trajectory, generator_name: str = "s0") -> float:
    """Map samples through a generator and measure how well the images solve the target system."""
    from .weyl import generator

    g = generator(generator_name, traj.system_id)
    a2 = RatFunc.const(traj.param)
    names = ["t", *traj.vars]
    img = compile_float_vector([substitute(g.all_images()[v], {"a2": a2}) for v in traj.vars], names)
    new_a2 = substitute(g.param_action["a2"], {"a2": a2}).constant_value()
    f = rhs_function(traj.system_id, new_a2)
    pts = np.array([img([t, *y]) for t, y in zip(traj.ts, traj.states)])
    fd = _five_point(pts, traj.ts)
    ref = np.array([f(t, y) for t, y in zip(traj.ts[2:-2], pts[2:-2])])
    return float(np.max(np.abs(fd - ref)))
