"""Vector fields, Hamiltonian systems and birational coordinate changes."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .symfield import (
    RatFunc, ZERO, ONE, SymfieldError, V, coerce, differentiate, substitute, parse,
)

COEFF_VARS = frozenset({"t", "a2"})


class DynsysError(ValueError):
    pass


@dataclass(frozen=True)
class VectorField:
    vars: tuple
    rhs: Mapping[str, RatFunc]
    time: str = "t"
    params: tuple = ("a2",)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        rhs = {k: coerce(v) for k, v in self.rhs.items()}
        if set(rhs) != set(self.vars):
            raise DynsysError(f"rhs keys {sorted(rhs)} do not match vars {list(self.vars)}")
        object.__setattr__(self, "rhs", rhs)

    def __getitem__(self, v: str) -> RatFunc:
        return self.rhs[v]

    def components(self):
        return [self.rhs[v] for v in self.vars]

    def specialize(self, bindings: Mapping[str, object]) -> "VectorField":
        return VectorField(self.vars, {v: substitute(e, bindings) for v, e in self.rhs.items()},
                           self.time, self.params, self.name)

    def rename(self, mapping: Mapping[str, str]) -> "VectorField":
        subs = {a: V(b) for a, b in mapping.items()}
        vars_ = tuple(mapping.get(v, v) for v in self.vars)
        rhs = {mapping.get(v, v): substitute(e, subs) for v, e in self.rhs.items()}
        return VectorField(vars_, rhs, self.time, self.params, self.name)

    def diff_report(self, other: "VectorField") -> dict:
        """Per-variable residual self - other (empty when the systems agree)."""
        if set(self.vars) != set(other.vars):
            return {"vars": f"{list(self.vars)} != {list(other.vars)}"}
        out = {}
        for v in self.vars:
            r = self.rhs[v] - other.rhs[v]
            if not r.is_zero():
                out[v] = r
        return out

    def equals(self, other: "VectorField") -> bool:
        return not self.diff_report(other)

    def __str__(self):
        return "\n".join(f"d{v}/d{self.time} = {self.rhs[v]}" for v in self.vars)


@dataclass(frozen=True)
class HamiltonianSpec:
    H: RatFunc
    pairs: tuple

    def __post_init__(self):
        object.__setattr__(self, "H", coerce(self.H))
        object.__setattr__(self, "pairs", tuple(tuple(p) for p in self.pairs))


def hamiltonian_field(spec: HamiltonianSpec, name: str = "") -> VectorField:
    seen = set()
    for q, p in spec.pairs:
        for v in (q, p):
            if v in seen:
                raise DynsysError(f"variable {v} appears in two canonical pairs")
            seen.add(v)
    rhs = {}
    order = []
    for q, p in spec.pairs:
        rhs[q] = differentiate(spec.H, p)
        rhs[p] = -differentiate(spec.H, q)
        order += [q, p]
    return VectorField(tuple(order), rhs, name=name)


def total_derivative(f, Vf: VectorField) -> RatFunc:
    f = coerce(f)
    present = f.variables()
    out = differentiate(f, Vf.time) if Vf.time in present else ZERO
    for v in Vf.vars:
        if v in present:
            out = out + Vf.rhs[v] * differentiate(f, v)
    return out


def iterated_derivatives(f, Vf: VectorField, n: int) -> list:
    out = [coerce(f)]
    for _ in range(n):
        out.append(total_derivative(out[-1], Vf))
    return out


# birational maps -------------------------------------------------------

@dataclass(frozen=True)
class BirationalMap:
    """dst coordinates as rational functions of src coordinates."""

    src_vars: tuple
    dst_vars: tuple
    forward: Mapping[str, RatFunc]
    inverse: Mapping[str, RatFunc] | None = None
    param_action: Mapping[str, RatFunc] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "src_vars", tuple(self.src_vars))
        object.__setattr__(self, "dst_vars", tuple(self.dst_vars))
        fw = {k: coerce(v) for k, v in self.forward.items()}
        if set(fw) != set(self.dst_vars):
            raise DynsysError(f"forward keys {sorted(fw)} do not match dst vars")
        object.__setattr__(self, "forward", fw)
        if self.inverse is not None:
            inv = {k: coerce(v) for k, v in self.inverse.items()}
            if set(inv) != set(self.src_vars):
                raise DynsysError("inverse keys do not match src vars")
            object.__setattr__(self, "inverse", inv)
        object.__setattr__(self, "param_action", {k: coerce(v) for k, v in self.param_action.items()})

    @classmethod
    def from_strings(cls, src, dst, forward: Mapping[str, str], inverse=None, name="", param_action=None):
        fw = {k: parse(v) for k, v in forward.items()}
        inv = None if inverse is None else {k: parse(v) for k, v in inverse.items()}
        pa = {k: parse(v) for k, v in (param_action or {}).items()}
        return cls(tuple(src), tuple(dst), fw, inv, pa, name)

    @classmethod
    def identity(cls, vars_: Sequence[str], name="id"):
        ids = {v: V(v) for v in vars_}
        return cls(tuple(vars_), tuple(vars_), ids, dict(ids), {}, name)

    def images(self) -> dict:
        return {**self.forward, **self.param_action}

    def pullback(self, f) -> RatFunc:
        """Express a function of dst coordinates in src coordinates."""
        return substitute(f, self.images())

    def to_dst(self, f) -> RatFunc:
        """Express a function of src coordinates in dst coordinates."""
        if self.inverse is None:
            raise DynsysError(f"map {self.name or '?'} has no inverse")
        return substitute(f, self.inverse)

    def then(self, other: "BirationalMap", name: str = "") -> "BirationalMap":
        """Composite chart change: first self, then other."""
        if set(other.src_vars) != set(self.dst_vars):
            raise DynsysError("maps are not composable")
        sub = self.images()
        fw = {k: substitute(v, sub) for k, v in other.forward.items()}
        inv = None
        if self.inverse is not None and other.inverse is not None:
            inv = {k: substitute(v, other.inverse) for k, v in self.inverse.items()}
        pa = {k: substitute(v, self.param_action) for k, v in other.param_action.items()}
        for k, v in self.param_action.items():
            pa.setdefault(k, v)
        return BirationalMap(self.src_vars, other.dst_vars, fw, inv, pa, name or f"{self.name}.{other.name}")

    def check_inverse(self) -> dict:
        """Residuals of forward(inverse) - id and inverse(forward) - id."""
        if self.inverse is None:
            raise DynsysError("no inverse to check")
        bad = {}
        for u in self.dst_vars:
            r = substitute(self.forward[u], self.inverse) - V(u)
            if not r.is_zero():
                bad[f"dst:{u}"] = r
        for s in self.src_vars:
            r = substitute(self.inverse[s], self.forward) - V(s)
            if not r.is_zero():
                bad[f"src:{s}"] = r
        return bad

    def with_inverse(self) -> "BirationalMap":
        return self if self.inverse is not None else invert_triangular(self)


_SCRATCH = tuple(f"v{i}" for i in range(9, 0, -1))


def invert_triangular(m: BirationalMap) -> BirationalMap:
    """Solve dst = forward(src) for src one variable at a time."""
    src = list(m.src_vars)
    # keep unknowns and targets apart when the two coordinate lists share names
    clash = set(src) & set(m.dst_vars)
    used = set(src) | set(m.dst_vars) | {"t", "a2"}
    for f in m.forward.values():
        used |= f.variables()
    scratch = [s for s in _SCRATCH if s not in used]
    if len(scratch) < len(clash):
        raise DynsysError("not enough scratch names to invert map")
    ren = {}
    for u, s in zip(sorted(clash), scratch):
        ren[u] = s
    tgt = {u: V(ren.get(u, u)) for u in m.dst_vars}

    solved: dict[str, RatFunc] = {}
    pending = dict(m.forward)
    while len(solved) < len(src):
        progress = False
        for u in list(pending):
            e = substitute(pending[u], solved) if solved else pending[u]
            unknown = [s for s in src if s not in solved and s in e.variables()]
            if not unknown:
                pending.pop(u)
                continue
            if len(unknown) != 1:
                continue
            s = unknown[0]
            # tgt*den - num == 0 must be linear in s
            poly = tgt[u] * RatFunc(e._d) - RatFunc(e._n)
            if poly._n.degrees()[_idx(s)] != 1:
                continue
            c1 = differentiate(poly, s)
            c0 = substitute(poly, {s: ZERO})
            sol = -c0 / c1
            solved = {k: substitute(v, {s: sol}) for k, v in solved.items()}
            solved[s] = sol
            pending.pop(u)
            progress = True
            break
        if not progress:
            missing = [s for s in src if s not in solved]
            raise DynsysError(f"map {m.name or '?'} is not triangular; cannot solve for {missing}")
    back = {s: V(u) for u, s in ren.items()}
    inv = {s: substitute(e, back) if back else e for s, e in solved.items()}
    out = BirationalMap(m.src_vars, m.dst_vars, m.forward, inv, m.param_action, m.name)
    bad = out.check_inverse()
    if bad:
        raise DynsysError(f"inverse of {m.name or '?'} fails round trip on {sorted(bad)}")
    return out


def _idx(name: str) -> int:
    from .symfield import INDEX
    return INDEX[name]


def pushforward(Vf: VectorField, m: BirationalMap, name: str = "") -> VectorField:
    """Rewrite the system in the dst coordinates of m."""
    if set(m.src_vars) != set(Vf.vars):
        raise DynsysError(f"map source {list(m.src_vars)} does not match system vars {list(Vf.vars)}")
    m = m.with_inverse()
    rhs = {}
    for u in m.dst_vars:
        d = total_derivative(m.forward[u], Vf)
        try:
            rhs[u] = substitute(d, m.inverse)
        except SymfieldError as exc:
            raise DynsysError(f"denominator vanishes on the image for {u}") from exc
    return VectorField(m.dst_vars, rhs, Vf.time, Vf.params, name or Vf.name)


def pushforward_function(f, m: BirationalMap) -> RatFunc:
    """A function of src coordinates, rewritten in dst coordinates."""
    return m.with_inverse().to_dst(f)


# polynomiality --------------------------------------------------------

@dataclass
class PolynomialReport:
    ok: bool
    offending: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def _state_den_vars(f: RatFunc) -> set:
    return f.den_variables() - COEFF_VARS


def is_polynomial(obj) -> PolynomialReport:
    """Polynomial in the state variables; coefficients may be rational in t and a2."""
    if isinstance(obj, VectorField):
        bad = {v: str(obj.rhs[v]) for v in obj.vars if _state_den_vars(obj.rhs[v])}
        return PolynomialReport(not bad, bad)
    f = coerce(obj)
    bad = _state_den_vars(f)
    return PolynomialReport(not bad, {"f": str(f)} if bad else {})


# identities ------------------------------------------------------------

@dataclass
class IdentityReport:
    ok: bool
    residuals: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def fifth_order_expression():
    """(numerator, denominator) of the fifth-order equation in u1..u4 placeholders."""
    num = ("(1-a2)*a2 - 2*y*(24*y^2-t)^2 - 24*z*(y - t*z)"
           " + 8*w*(5*y*(t-24*y^2) - 12*z^2 - 16*y*w) + 2*q*(48*y*z + 2*q - 1)")
    den = "48*y^2 + 8*w - 2*t"
    return num, den


def fifth_order_identity(specialize: Mapping[str, object] | None = None) -> IdentityReport:
    from .catalog import system, hamiltonian

    field_ = system("eq3")
    H = hamiltonian("eq3").H
    if specialize:
        field_ = field_.specialize(specialize)
        H = substitute(H, specialize)
    ds = iterated_derivatives(H, field_, 5)
    num_s, den_s = fifth_order_expression()
    env = {"y": ds[1], "z": ds[2], "w": ds[3], "q": ds[4]}
    num = parse(num_s, env)
    den = parse(den_s, env)
    if specialize:
        num = substitute(num, specialize)
    residual = ds[5] * den - num
    det = {"D1H": str(ds[1]), "denominator": str(den)}
    return IdentityReport(residual.is_zero(), {} if residual.is_zero() else {"u5": str(residual)}, det)


RICCATI_MAP = {"q1": "-q/2", "p1": "2*w", "q2": "2*z", "p2": "2*y"}


def riccati_correspondence() -> IdentityReport:
    from .catalog import system

    e6 = system("eq6")
    e3 = system("eq3")
    imgs = {k: parse(v) for k, v in RICCATI_MAP.items()}
    res = {}
    for v in e3.vars:
        lhs = total_derivative(imgs[v], e6)
        rhs = substitute(e3.rhs[v], imgs)
        r = lhs - rhs
        if not r.is_zero():
            res[v] = str(r)
    others = [e6.rhs[v] for v in e6.vars if v != "x"]
    decoupled = all("x" not in f.variables() for f in others) and e6.rhs["x"] == V("y")
    return IdentityReport(not res and decoupled, res, {"x_decoupled": decoupled})


# Hamiltonian recovery from holomorphy charts (coefficient ansatz) -------

def _monomials(vars_: Sequence[str], maxdeg: int):
    out = [()]
    for _ in range(maxdeg):
        nxt = []
        for m in out:
            start = vars_.index(m[-1]) if m else 0
            for v in vars_[start:]:
                nxt.append(m + (v,))
        out += [m for m in nxt if m not in out]
    seen, uniq = set(), []
    for m in out:
        key = tuple(sorted(m))
        if key not in seen:
            seen.add(key)
            uniq.append(m)
    return uniq


def _monomial_value(m) -> RatFunc:
    r = ONE
    for v in m:
        r = r * V(v)
    return r


def _linear_solve_nullspace(rows, ncols):
    """Reduced row echelon form over Q(a2, t) represented by RatFunc; returns (pivots, rref)."""
    rows = [list(r) for r in rows if any(not c.is_zero() for c in r)]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, len(rows)):
            if not rows[i][c].is_zero():
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = rows[r][c].inverse()
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and not rows[i][c].is_zero():
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return pivots, rows[:r]


@dataclass
class RecoveryResult:
    particular: RatFunc | None
    basis: list
    unknowns: list

    def contains(self, f) -> bool:
        """True when f lies in particular + span(basis) (an affine solution set)."""
        if self.particular is None:
            return False
        diff = coerce(f) - self.particular
        return _in_span(diff, self.basis)


def _in_span(f: RatFunc, basis: list) -> bool:
    if f.is_zero():
        return True
    if not basis:
        return False
    # a vanishing combination f - sum c_i b_i, with c_i in Q(t, a2), is found by
    # matching coefficients of state monomials
    state = sorted(set().union(*(b.variables() for b in basis), f.variables()) - COEFF_VARS)
    cols = basis + [f]
    terms = {}
    for j, b in enumerate(cols):
        for mono, coef in _split_state(b, state).items():
            terms.setdefault(mono, [ZERO] * len(cols))[j] = coef
    rows = list(terms.values())
    pivots, _ = _linear_solve_nullspace(rows, len(cols))
    return len(basis) not in pivots


def _split_state(f: RatFunc, state) -> dict:
    """Group a polynomial-in-state RatFunc by state monomials."""
    from .symfield import INDEX, CTX, _frac
    if _state_den_vars(f):
        raise DynsysError("not polynomial in the state variables")
    idx = [INDEX[s] for s in state]
    groups = {}
    for mono, c in f._n.terms():
        key = tuple(mono[i] for i in idx)
        rest = list(mono)
        for i in idx:
            rest[i] = 0
        groups.setdefault(key, []).append((tuple(rest), c))
    return {k: RatFunc(CTX.from_dict(dict(v)), f._d) for k, v in groups.items()}


def recover_hamiltonian(charts: Iterable[BirationalMap], vars_=("q1", "p1", "q2", "p2"),
                        max_degree: int = 5, shifts: Mapping[str, object] | None = None) -> RecoveryResult:
    """Solve for a polynomial Hamiltonian ansatz that stays polynomial in every chart.

    Each chart must map (q1,p1,q2,p2) to new coordinates; polynomiality of the
    transformed Hamiltonian (after subtracting the optional shift for that chart)
    is imposed coefficient-wise.  The conditions are linear in the unknowns,
    which are solved over Q(t, a2); multiplying a monomial by powers of t adds
    nothing new, so the ansatz only enumerates state monomials.
    """
    charts = [c.with_inverse() for c in charts]
    shifts = shifts or {}
    monos = _monomials(list(vars_), max_degree)
    basis_fns = [_monomial_value(m) for m in monos]
    n = len(basis_fns)
    rows = []
    for ch in charts:
        shift = coerce(shifts.get(ch.name, ZERO))
        images = [ch.to_dst(b) for b in basis_fns]
        rhs_img = ch.to_dst(shift) if not shift.is_zero() else ZERO
        # singular part: write each image over a common state denominator and
        # require the non-polynomial remainder to vanish
        rows += _pole_conditions(images, rhs_img, ch)
    pivots, rref = _linear_solve_nullspace(rows, n + 1)
    if n in pivots:
        return RecoveryResult(None, [], basis_fns)
    free = [c for c in range(n) if c not in pivots]
    part = ZERO
    for r, c in zip(rref, pivots):
        part = part + r[n] * basis_fns[c]
    basis = []
    for fcol in free:
        vec = basis_fns[fcol]
        for r, c in zip(rref, pivots):
            vec = vec - r[fcol] * basis_fns[c]
        basis.append(vec)
    return RecoveryResult(part, basis, basis_fns)


def _pole_conditions(images, shift_img, chart: BirationalMap):
    """Linear conditions: sum c_j images_j - shift_img has no state poles."""
    from .symfield import INDEX
    # all chart images share denominators built from a distinguished coordinate;
    # bring everything to a common denominator and take the remainder modulo it
    dvars = set()
    for f in list(images) + [shift_img]:
        dvars |= _state_den_vars(f)
    if not dvars:
        return []
    common = ONE
    for f in list(images) + [shift_img]:
        d = RatFunc(f._d)
        g = _poly_lcm(common, d)
        common = g
    state = sorted((set().union(*(f.variables() for f in images)) | shift_img.variables()) - COEFF_VARS)
    cols = []
    for f in list(images) + [shift_img]:
        num = f * common
        cols.append(_split_state(num, state))
    # the sum is polynomial iff its numerator is divisible by `common`; for the
    # monomial denominators used by the charts this means discarding the
    # monomials that are multiples of common
    cvars = {s: d for s, d in zip(state, _den_exponents(common, state))}
    keys = set()
    for c in cols:
        keys |= set(c)
    rows = []
    for key in sorted(keys):
        if all(key[i] >= cvars[s] for i, s in enumerate(state)):
            continue
        rows.append([c.get(key, ZERO) for c in cols])
    return rows


def _poly_lcm(a: RatFunc, b: RatFunc) -> RatFunc:
    g = a._n.gcd(b._n)
    return RatFunc(a._n * b._n / g)


def _den_exponents(common: RatFunc, state):
    from .symfield import INDEX
    terms = list(common._n.terms())
    if len(terms) != 1:
        raise DynsysError("chart denominators must be monomials in the state variables")
    mono = terms[0][0]
    return [mono[INDEX[s]] for s in state]
