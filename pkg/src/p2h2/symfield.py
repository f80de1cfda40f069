"""Exact multivariate polynomials and rational functions over Q.

Everything lives in one global polynomial ring whose generators are the
fixed alphabet ``VARIABLES``.  Arithmetic is delegated to FLINT's
``fmpq_mpoly`` (via python-flint); this module adds canonical forms, a
small expression grammar, rendering and rational substitution.
"""
from __future__ import annotations

import operator
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

import flint

_BASE = ("q1", "p1", "q2", "p2", "x", "y", "z", "w", "q", "t", "a2", "p", "u")
_CHART = tuple(f"{c}{i}" for c in "xyzwv" for i in range(1, 10))
# linearised chart coordinates and the spectral variable
_EXTRA = ("X2", "Y2", "Z2", "W2", "lam")

VARIABLES: tuple[str, ...] = _BASE + _CHART + _EXTRA
INDEX = {name: i for i, name in enumerate(VARIABLES)}
NVARS = len(VARIABLES)

# graded lexicographic order over the alphabet order above
CTX = flint.fmpq_mpoly_ctx.get(VARIABLES, "deglex")
_ZERO_EXP = (0,) * NVARS

Number = Union[int, Fraction, flint.fmpq]


class SymfieldError(ValueError):
    pass


class ParseError(SymfieldError):
    def __init__(self, msg: str, pos: int, text: str = ""):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos
        self.text = text


class ZeroDivision(SymfieldError):
    pass


def _fmpq(c: Number) -> flint.fmpq:
    if isinstance(c, flint.fmpq):
        return c
    if isinstance(c, int):
        return flint.fmpq(c)
    c = Fraction(c)
    return flint.fmpq(c.numerator, c.denominator)


def _const(c: Number):
    return CTX.constant(_fmpq(c))


_ONE = CTX.constant(1)
_POLY_ZERO = CTX.from_dict({})


def _frac(c: flint.fmpq) -> Fraction:
    return Fraction(int(c.p), int(c.q))


@dataclass(frozen=True, eq=False)
class Poly:
    """Read-only view of a polynomial; ``terms`` maps exponent vectors to coefficients."""

    raw: object

    @property
    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return {tuple(m): _frac(c) for m, c in self.raw.terms()}

    def normalize(self) -> "Poly":
        # flint never stores zero terms and keeps them sorted already
        return Poly(CTX.from_dict(self.raw.to_dict()))

    def is_zero(self) -> bool:
        return self.raw.is_zero()

    def __eq__(self, other):
        return isinstance(other, Poly) and self.raw == other.raw

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items())))

    def variables(self) -> set[str]:
        degs = self.raw.degrees()
        return {VARIABLES[i] for i, d in enumerate(degs) if d > 0}

    def __str__(self):
        return _render_poly(self.raw)


class RatFunc:
    """Canonical quotient num/den: gcd-reduced with a monic denominator."""

    __slots__ = ("_n", "_d", "_hash")

    def __init__(self, num=None, den=None, *, _canonical=False):
        n = _POLY_ZERO if num is None else num
        d = _ONE if den is None else den
        if not _canonical:
            if d.is_zero():
                raise ZeroDivision("zero denominator")
            if n.is_zero():
                d = _ONE
            elif not d.is_constant():
                g = n.gcd(d)
                if not g.is_one():
                    n = n / g
                    d = d / g
            lc = d.leading_coefficient()
            if lc != 1:
                n = n / lc
                d = d / lc
        self._n = n
        self._d = d
        self._hash = None

    # construction -----------------------------------------------------
    @classmethod
    def const(cls, c: Number) -> "RatFunc":
        return cls(_const(c), _ONE, _canonical=True)

    @classmethod
    def var(cls, name: str) -> "RatFunc":
        if name not in INDEX:
            raise SymfieldError(f"unknown variable {name!r}")
        return cls(CTX.gens()[INDEX[name]], _ONE, _canonical=True)

    @property
    def num(self) -> Poly:
        return Poly(self._n)

    @property
    def den(self) -> Poly:
        return Poly(self._d)

    # predicates -------------------------------------------------------
    def is_zero(self) -> bool:
        return self._n.is_zero()

    def is_polynomial(self) -> bool:
        return self._d.is_constant()

    def is_constant(self) -> bool:
        return self._n.is_constant() and self._d.is_constant()

    def variables(self) -> set[str]:
        degs = [a + b for a, b in zip(self._n.degrees(), self._d.degrees())]
        return {VARIABLES[i] for i, d in enumerate(degs) if d > 0}

    def den_variables(self) -> set[str]:
        return {VARIABLES[i] for i, d in enumerate(self._d.degrees()) if d > 0}

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise SymfieldError(f"not a constant: {self}")
        return _frac(self._n.leading_coefficient() if not self._n.is_zero() else flint.fmpq(0))

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        o = coerce(other)
        if self._d == o._d:
            return RatFunc(self._n + o._n, self._d)
        if o._d.is_one():
            return RatFunc(self._n + o._n * self._d, self._d, _canonical=True)
        if self._d.is_one():
            return RatFunc(self._n * o._d + o._n, o._d, _canonical=True)
        g = self._d.gcd(o._d)
        if g.is_one():
            return RatFunc(self._n * o._d + o._n * self._d, self._d * o._d)
        a, b = self._d / g, o._d / g
        return RatFunc(self._n * b + o._n * a, self._d * b)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self._n, self._d, _canonical=True)

    def __sub__(self, other):
        return self + (-coerce(other))

    def __rsub__(self, other):
        return coerce(other) - self

    def __mul__(self, other):
        o = coerce(other)
        if self._n.is_zero() or o._n.is_zero():
            return ZERO
        g1 = self._n.gcd(o._d) if not o._d.is_one() else _ONE
        g2 = o._n.gcd(self._d) if not self._d.is_one() else _ONE
        n1 = self._n if g1.is_one() else self._n / g1
        d2 = o._d if g1.is_one() else o._d / g1
        n2 = o._n if g2.is_one() else o._n / g2
        d1 = self._d if g2.is_one() else self._d / g2
        # cross-cancelled and monic times monic: already canonical
        return RatFunc(n1 * n2, d1 * d2, _canonical=True)

    __rmul__ = __mul__

    def inverse(self) -> "RatFunc":
        if self._n.is_zero():
            raise ZeroDivision("division by zero value")
        return RatFunc(self._d, self._n)

    def __truediv__(self, other):
        return self * coerce(other).inverse()

    def __rtruediv__(self, other):
        return coerce(other) * self.inverse()

    def __pow__(self, k: int):
        try:
            k = operator.index(k)
        except TypeError:
            raise SymfieldError("only integer exponents") from None
        if k < 0:
            return self.inverse() ** (-k)
        return RatFunc(self._n ** k, self._d ** k, _canonical=True)

    # comparison -------------------------------------------------------
    def __eq__(self, other):
        try:
            o = coerce(other)
        except TypeError:
            return NotImplemented
        return self._n == o._n and self._d == o._d

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((str(self._n), str(self._d)))
        return self._hash

    def __repr__(self):
        return f"RatFunc({render(self)!r})"

    def __str__(self):
        return render(self)

    # calculus ---------------------------------------------------------
    def diff(self, var: str) -> "RatFunc":
        return differentiate(self, var)

    def subs(self, bindings: Mapping[str, object]) -> "RatFunc":
        return substitute(self, bindings)

    def to_float_fn(self, names: Iterable[str]):
        return compile_float(self, names)


def coerce(v) -> RatFunc:
    if isinstance(v, RatFunc):
        return v
    if isinstance(v, (int, Fraction, flint.fmpq)):
        return RatFunc.const(v)
    if isinstance(v, str):
        return parse(v)
    raise TypeError(f"cannot convert {type(v).__name__} to RatFunc")


ZERO = RatFunc()
ONE = RatFunc.const(1)


def V(*names: str):
    """Shorthand: one RatFunc generator per name (single name returns it bare)."""
    out = tuple(RatFunc.var(n) for n in names)
    return out[0] if len(out) == 1 else out


def arithmetic(a, b, op: str) -> RatFunc:
    a, b = coerce(a), coerce(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise SymfieldError(f"unknown operator {op!r}")


def equals(a, b) -> bool:
    return (coerce(a) - coerce(b)).is_zero()


def normalize(f: RatFunc) -> RatFunc:
    return RatFunc(f._n, f._d)


# differentiation -------------------------------------------------------

def differentiate(f, var: str) -> RatFunc:
    f = coerce(f)
    i = INDEX[var]
    dn = f._n.derivative(i)
    if f._d.is_constant():
        return RatFunc(dn, f._d, _canonical=True)
    dd = f._d.derivative(i)
    if dd.is_zero():
        return RatFunc(dn, f._d)
    # d/dv (n/d) = (n' d - n d')/d^2; one factor of d usually cancels
    return RatFunc(dn * f._d - f._n * dd, f._d * f._d)


# substitution ----------------------------------------------------------

def _image_list(bindings: Mapping[str, object]):
    imgs = {}
    for k, v in bindings.items():
        if k not in INDEX:
            raise SymfieldError(f"unknown variable {k!r}")
        imgs[INDEX[k]] = coerce(v)
    return imgs


def _subs_poly(P, imgs: dict, gens):
    """Return (numerator, denominator) of P with images substituted."""
    degs = P.degrees()
    active = [i for i in imgs if degs[i] > 0]
    if not active:
        return P, _ONE
    rational = [i for i in active if not imgs[i]._d.is_one()]
    if not rational:
        polys = list(gens)
        for i in active:
            polys[i] = imgs[i]._n
        return P.compose(*polys), _ONE
    # clear denominators: each term gets n_i^e d_i^(deg_i - e)
    polys = list(gens)
    for i in active:
        if imgs[i]._d.is_one():
            polys[i] = imgs[i]._n
    cache = {}
    num = _POLY_ZERO
    den = _ONE
    for i in rational:
        den = den * imgs[i]._d ** degs[i]
    need_compose = any(i not in rational for i in active)
    partial_ctx_terms = {}
    for mon, c in P.terms():
        key = tuple(mon[i] for i in rational)
        rest = list(mon)
        for i in rational:
            rest[i] = 0
        partial_ctx_terms.setdefault(key, []).append((tuple(rest), c))
    for key, items in partial_ctx_terms.items():
        rest_poly = CTX.from_dict(dict(items))
        if need_compose:
            rest_poly = rest_poly.compose(*polys)
        factor = _ONE
        for i, e in zip(rational, key):
            ck = (i, e)
            if ck not in cache:
                cache[ck] = imgs[i]._n ** e * imgs[i]._d ** (degs[i] - e)
            factor = factor * cache[ck]
        num = num + rest_poly * factor
    return num, den


def substitute(f, bindings: Mapping[str, object]) -> RatFunc:
    """Simultaneous substitution of variables by rational functions."""
    f = coerce(f)
    imgs = _image_list(bindings)
    if not imgs:
        return f
    gens = CTX.gens()
    n1, d1 = _subs_poly(f._n, imgs, gens)
    n2, d2 = _subs_poly(f._d, imgs, gens)
    den = d1 * n2
    if den.is_zero():
        raise ZeroDivision(f"substitution makes the denominator of {f} vanish")
    return RatFunc(n1 * d2, den)


def evaluate(f, values: Mapping[str, Number]) -> Fraction:
    r = substitute(f, {k: RatFunc.const(v) for k, v in values.items()})
    return r.constant_value()


# floating point compilation --------------------------------------------

def _poly_source(P, names: list[str]) -> str:
    if P.is_zero():
        return "0.0"
    pos = {INDEX[n]: k for k, n in enumerate(names)}
    parts = []
    for mon, c in P.terms():
        fac = [repr(float(_frac(c)))]
        for i, e in enumerate(mon):
            if e == 0:
                continue
            if i not in pos:
                raise SymfieldError(f"variable {VARIABLES[i]} not bound for evaluation")
            v = f"_a[{pos[i]}]"
            fac.append(v if e == 1 else f"{v}**{e}")
        parts.append("*".join(fac))
    return "(" + " + ".join(parts) + ")"


def compile_float(f, names: Iterable[str]):
    """Compile f into a Python callable taking a sequence ordered as ``names``."""
    f = coerce(f)
    names = list(names)
    src = _poly_source(f._n, names)
    if not f._d.is_one():
        src = f"{src}/{_poly_source(f._d, names)}"
    return eval(f"lambda _a: {src}", {})


def compile_float_vector(fs: Iterable, names: Iterable[str]):
    names = list(names)
    body = []
    for f in fs:
        f = coerce(f)
        s = _poly_source(f._n, names)
        if not f._d.is_one():
            s = f"{s}/{_poly_source(f._d, names)}"
        body.append(s)
    return eval(f"lambda _a: [{', '.join(body)}]", {})


# rendering -------------------------------------------------------------

def _render_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _render_poly(P) -> str:
    if P.is_zero():
        return "0"
    out = []
    for mon, c in P.terms():
        c = _frac(c)
        sign = "-" if c < 0 else "+"
        c = abs(c)
        factors = []
        for i, e in enumerate(mon):
            if e:
                factors.append(VARIABLES[i] if e == 1 else f"{VARIABLES[i]}^{e}")
        if not factors:
            body = _render_coeff(c)
        elif c == 1:
            body = "*".join(factors)
        else:
            body = _render_coeff(c) + "*" + "*".join(factors)
        out.append((sign, body))
    s = ("-" if out[0][0] == "-" else "") + out[0][1]
    for sign, body in out[1:]:
        s += f" {sign} {body}"
    return s


def _integer_scaled(f: RatFunc):
    """Rescale num and den to coprime integer coefficients (den leading term positive)."""
    if f._d.is_one():
        return f._n, f._d
    from math import gcd, lcm

    cs = [_frac(c) for c in f._d.coeffs()] + [_frac(c) for c in f._n.coeffs()]
    m = 1
    for c in cs:
        m = lcm(m, c.denominator)
    g = 0
    for c in cs:
        g = gcd(g, (c * m).numerator)
    scale = flint.fmpq(m, g)
    return f._n * scale, f._d * scale


def render(f) -> str:
    f = coerce(f)
    n, d = _integer_scaled(f)
    if d.is_one():
        return _render_poly(n)
    ns, ds = _render_poly(n), _render_poly(d)
    if len(n.terms() and list(n.terms())) > 1:
        ns = f"({ns})"
    if len(list(d.terms())) > 1 or "*" in ds or "/" in ds:
        ds = f"({ds})"
    return f"{ns}/{ds}"


# parsing ---------------------------------------------------------------

class _Parser:
    def __init__(self, text: str, env: Mapping[str, RatFunc] | None = None):
        self.text = text
        self.toks = self._lex(text)
        self.i = 0
        self.env = env or {}

    @staticmethod
    def _lex(text: str):
        toks = []
        i = 0
        while i < len(text):
            ch = text[i]
            if ch.isspace():
                i += 1
            elif ch.isdigit():
                j = i
                while j < len(text) and text[j].isdigit():
                    j += 1
                toks.append(("INT", text[i:j], i))
                i = j
            elif ch.isalpha() or ch == "_":
                j = i
                while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                toks.append(("VAR", text[i:j], i))
                i = j
            elif ch in "+-*/^()":
                toks.append((ch, ch, i))
                i += 1
            else:
                raise ParseError(f"unexpected character {ch!r}", i, text)
        toks.append(("END", "", len(text)))
        return toks

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None):
        tok = self.toks[self.i]
        if kind is not None and tok[0] != kind:
            what = "end of input" if tok[0] == "END" else repr(tok[1])
            raise ParseError(f"expected {kind!r}, found {what}", tok[2], self.text)
        self.i += 1
        return tok

    def parse(self) -> RatFunc:
        if self.peek()[0] == "END":
            raise ParseError("empty expression", 0, self.text)
        v = self.expr()
        self.take("END")
        return v

    def expr(self):
        v = self.term()
        while self.peek()[0] in "+-" and self.peek()[0] != "END":
            op = self.take()[0]
            rhs = self.term()
            v = v + rhs if op == "+" else v - rhs
        return v

    def term(self):
        v = self.unary()
        while self.peek()[0] in ("*", "/"):
            op, _, pos = self.take()
            rhs = self.unary()
            if op == "*":
                v = v * rhs
            else:
                if rhs.is_zero():
                    raise ParseError("division by zero", pos, self.text)
                v = v / rhs
        return v

    def unary(self):
        if self.peek()[0] == "-":
            self.take()
            return -self.unary()
        if self.peek()[0] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            if self.peek()[0] == "-":
                raise ParseError("negative exponent", self.peek()[2], self.text)
            kind, val, pos = self.take()
            if kind == "(":
                # allow ^(n)
                kind, val, pos = self.take("INT")
                self.take(")")
            elif kind != "INT":
                raise ParseError("exponent must be a nonnegative integer", pos, self.text)
            e = int(val)
            return base ** e
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "INT":
            return RatFunc.const(int(val))
        if kind == "VAR":
            if val in self.env:
                return self.env[val]
            if val not in INDEX:
                raise ParseError(f"unknown variable {val!r}", pos, self.text)
            return RatFunc.var(val)
        if kind == "(":
            v = self.expr()
            self.take(")")
            return v
        what = "end of input" if kind == "END" else repr(val)
        raise ParseError(f"unexpected {what}", pos, self.text)


def parse(text: str, env: Mapping[str, RatFunc] | None = None) -> RatFunc:
    """Parse an expression; ``env`` may bind extra names to values."""
    return _Parser(text, env).parse()


def parse_number(text: str) -> Fraction:
    """Exact rational from '3', '-1/3' or a decimal literal like '0.25'."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise SymfieldError(f"not a rational number: {text!r}") from exc
