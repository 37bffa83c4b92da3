"""Small computer-algebra layer for kinematic expressions.

Expressions are immutable trees over exact rational constants, symbols,
sums, products, integer powers, ``sin`` and ``cos``.  Every constructor
returns the canonical form: products are distributed over sums, like terms
are collected, numeric sub-terms are folded and commutative operands are
stored in a fixed total order.  Two expressions with the same value as
polynomials in their trigonometric atoms are therefore structurally equal.

:func:`simplify` adds the angle-sum rewrites that turn
``cos(a)*cos(b) - sin(a)*sin(b)`` into ``cos(a + b)`` (and the sine and
difference variants), which is what produces the compact ``c23``-style
entries of a forward-kinematics matrix.
"""
from __future__ import annotations

import math
import random
import re
from fractions import Fraction
from typing import Iterable, Mapping

__all__ = [
    "Expr", "Num", "Sym", "Add", "Mul", "Pow", "Sin", "Cos",
    "ExprSyntaxError", "UnboundSymbolError",
    "JOINT_ANGLE", "JOINT_DISPLACEMENT", "LINK_LENGTH", "GENERIC", "CONSTANT",
    "num", "sym", "sin", "cos", "parse_expr", "evaluate", "simplify",
    "diff", "diff_time", "subs", "free_symbols", "equal_on_samples",
    "to_text", "ZERO", "ONE", "PI",
]

JOINT_ANGLE = "joint-angle"
JOINT_DISPLACEMENT = "joint-displacement"
LINK_LENGTH = "link-length"
GENERIC = "generic-constant"
CONSTANT = "constant"  # pi

_ANGLE_RE = re.compile(r"(theta|q)\d+$")
_DISP_RE = re.compile(r"d\d+$")
_LENGTH_RE = re.compile(r"[Ll]\d*$")
_NAT_RE = re.compile(r"(\d+)")


def symbol_kind(name: str) -> str:
    """Infer the kind of a symbol from its spelling."""
    if name == "pi":
        return CONSTANT
    if _ANGLE_RE.match(name):
        return JOINT_ANGLE
    if _DISP_RE.match(name):
        return JOINT_DISPLACEMENT
    if _LENGTH_RE.match(name):
        return LINK_LENGTH
    return GENERIC


def _natural(name: str) -> tuple:
    parts = _NAT_RE.split(name)
    return tuple((1, int(p)) if p.isdigit() else (0, p) for p in parts if p)


class ExprSyntaxError(ValueError):
    """Raised by :func:`parse_expr`; ``offset`` is the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnboundSymbolError(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unbound symbol {self.name!r}"


# ---------------------------------------------------------------------------
# node classes


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ("_key", "_hash", "_poly")

    def __init__(self, key: tuple):
        self._key = key
        self._hash = hash(key)
        self._poly = None

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Expr) and self._key == other._key

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Expr") -> bool:
        return self._key < other._key

    def __repr__(self) -> str:
        return f"Expr({to_text(self)!r})"

    def __str__(self) -> str:
        return to_text(self)

    # arithmetic sugar -- all results are canonical
    def __add__(self, other):
        return _from_poly(_padd(_poly(self), _poly(_coerce(other))))

    __radd__ = __add__

    def __sub__(self, other):
        return _from_poly(_padd(_poly(self), _pscale(_poly(_coerce(other)), -1)))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        return _from_poly(_pmul(_poly(self), _poly(_coerce(other))))

    __rmul__ = __mul__

    def __neg__(self):
        return _from_poly(_pscale(_poly(self), -1))

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = {(): Fraction(1)}
        base = _poly(self)
        for _ in range(n):
            result = _pmul(result, base)
        return _from_poly(result)

    @property
    def is_number(self) -> bool:
        return isinstance(self, Num)


class Num(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = Fraction(value)
        super().__init__((0, self.value))


class Sym(Expr):
    """A named symbol; ``order`` counts time derivatives (1 = rate)."""

    __slots__ = ("name", "order", "kind")

    def __init__(self, name: str, order: int = 0):
        kind = symbol_kind(name)
        if order < 0:
            raise ValueError("derivative order must be non-negative")
        if order and kind not in (JOINT_ANGLE, JOINT_DISPLACEMENT):
            raise ValueError(f"symbol {name!r} of kind {kind} cannot carry a time derivative")
        self.name = name
        self.order = order
        self.kind = kind
        super().__init__((1, _natural(name), order))

    @property
    def label(self) -> str:
        if self.order == 0:
            return self.name
        if self.order == 1:
            return f"{self.name}_dot"
        if self.order == 2:
            return f"{self.name}_ddot"
        return f"{self.name}_d{self.order}"

    @property
    def time_dependent(self) -> bool:
        return self.kind in (JOINT_ANGLE, JOINT_DISPLACEMENT)

    def derivative(self) -> "Sym":
        return Sym(self.name, self.order + 1)


class Cos(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        self.arg = arg
        super().__init__((2, arg._key))


class Sin(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        self.arg = arg
        super().__init__((3, arg._key))


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: int):
        self.base = base
        self.exp = exp
        super().__init__((4, base._key, exp))


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple):
        self.factors = factors
        super().__init__((5, tuple(f._key for f in factors)))


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple):
        self.terms = terms
        super().__init__((6, tuple(t._key for t in terms)))


ZERO = Num(0)
ONE = Num(1)
PI = Sym("pi")


def num(value) -> Num:
    if isinstance(value, float):
        value = Fraction(repr(value))
    return Num(value)


def sym(name: str, order: int = 0) -> Sym:
    return Sym(name, order)


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction, float)):
        return num(x)
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


# ---------------------------------------------------------------------------
# polynomial core: {monomial: coefficient}, monomial = ((atom, exp), ...)


def _mono_key(mono: tuple) -> tuple:
    return tuple((a._key, e) for a, e in mono)


def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return m2
    if not m2:
        return m1
    acc: dict = {}
    for a, e in m1:
        acc[a] = acc.get(a, 0) + e
    for a, e in m2:
        acc[a] = acc.get(a, 0) + e
    return tuple(sorted(acc.items(), key=lambda ae: ae[0]._key))


def _padd(p1: dict, p2: dict) -> dict:
    out = dict(p1)
    for m, c in p2.items():
        v = out.get(m, 0) + c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _pscale(p: dict, k) -> dict:
    if not k:
        return {}
    return {m: c * k for m, c in p.items()}


def _pmul(p1: dict, p2: dict) -> dict:
    out: dict = {}
    for m1, c1 in p1.items():
        for m2, c2 in p2.items():
            m = _mono_mul(m1, m2)
            v = out.get(m, 0) + c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def _atom_poly(atom: Expr) -> dict:
    if isinstance(atom, Num):
        return {(): atom.value} if atom.value else {}
    return {((atom, 1),): Fraction(1)}


def _poly(e: Expr) -> dict:
    p = e._poly
    if p is not None:
        return p
    if isinstance(e, (Num, Sym, Sin, Cos)):
        p = _atom_poly(e)
    elif isinstance(e, Add):
        p = {}
        for t in e.terms:
            p = _padd(p, _poly(t))
    elif isinstance(e, Mul):
        p = {(): Fraction(1)}
        for f in e.factors:
            p = _pmul(p, _poly(f))
    elif isinstance(e, Pow):
        p = {(): Fraction(1)}
        base = _poly(e.base)
        for _ in range(e.exp):
            p = _pmul(p, base)
    else:  # pragma: no cover
        raise TypeError(type(e))
    e._poly = p
    return p


def _term(mono: tuple, coeff: Fraction) -> Expr:
    factors = [a if k == 1 else Pow(a, k) for a, k in mono]
    if coeff != 1 or not factors:
        factors.insert(0, Num(coeff))
    if len(factors) == 1:
        return factors[0]
    return Mul(tuple(factors))


def _from_poly(p: dict) -> Expr:
    if not p:
        e = Num(0)
        e._poly = {}
        return e
    monos = sorted(p, key=_mono_key)
    terms = tuple(_term(m, p[m]) for m in monos)
    e = terms[0] if len(terms) == 1 else Add(terms)
    e._poly = p
    return e


# ---------------------------------------------------------------------------
# trig constructors with exact folding


def _split_pi(arg: Expr) -> tuple[Expr, Fraction]:
    """Split ``arg`` into ``rest + k*pi`` with rational ``k``."""
    p = dict(_poly(arg))
    k = p.pop(((PI, 1),), Fraction(0))
    return _from_poly(p), k


def _leading_negative(arg: Expr) -> bool:
    p = _poly(arg)
    if not p:
        return False
    first = min(p, key=_mono_key)
    if first == () and len(p) > 1:
        # ignore a constant offset when choosing the sign
        first = sorted(p, key=_mono_key)[1]
    return p[first] < 0


def _trig(fn: str, arg: Expr) -> Expr:
    arg = _coerce(arg)
    rest, k = _split_pi(arg)
    # shift by multiples of pi/2 when exact
    if k and (2 * k).denominator == 1:
        quarter = int(2 * k) % 4
        base_sin = _trig("sin", rest)
        base_cos = _trig("cos", rest)
        if fn == "cos":
            return [base_cos, -base_sin, -base_cos, base_sin][quarter]
        return [base_sin, base_cos, -base_sin, -base_cos][quarter]
    if not _poly(arg):
        return ONE if fn == "cos" else ZERO
    if _leading_negative(arg):
        inner = -arg
        return Cos(inner) if fn == "cos" else -Sin(inner)
    return Cos(arg) if fn == "cos" else Sin(arg)


def sin(arg) -> Expr:
    return _trig("sin", arg)


def cos(arg) -> Expr:
    return _trig("cos", arg)


# ---------------------------------------------------------------------------
# parser


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)
_DERIV_RE = re.compile(r"^(?P<base>.+?)_(?:(?P<dot>dot)|(?P<ddot>ddot)|d(?P<n>\d+))$")
_FUNCS = {"sin": sin, "cos": cos}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastgroup)
        toks.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


def _symbol_from_name(name: str) -> Expr:
    if name == "pi":
        return PI
    m = _DERIV_RE.match(name)
    if m and symbol_kind(m.group("base")) in (JOINT_ANGLE, JOINT_DISPLACEMENT):
        order = 1 if m.group("dot") else 2 if m.group("ddot") else int(m.group("n"))
        return Sym(m.group("base"), order)
    return Sym(name)


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.take()
        if text != value or kind == "end":
            raise ExprSyntaxError(f"expected {value!r}", pos)

    def expr(self) -> Expr:
        acc = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self) -> Expr:
        acc = self.power()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op, pos = self.take()[1], self.peek()[2]
            rhs = self.power()
            if op == "*":
                acc = acc * rhs
            elif not isinstance(rhs, Num) or rhs.value == 0:
                raise ExprSyntaxError("can only divide by a non-zero number", pos)
            else:
                acc = acc * Num(1 / rhs.value)
        return acc

    def power(self) -> Expr:
        base = self.factor()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            kind, text, pos = self.take()
            if kind != "num" or not text.isdigit():
                raise ExprSyntaxError("exponent must be a non-negative integer", pos)
            base = base ** int(text)
        return base

    def factor(self) -> Expr:
        kind, text, pos = self.take()
        if kind == "num":
            return Num(Fraction(text))
        if kind == "op" and text == "-":
            return -self.power()
        if kind == "op" and text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        if kind == "name":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                fn = _FUNCS.get(text)
                if fn is None:
                    raise ExprSyntaxError(f"unknown function {text!r}", pos)
                self.take()
                inner = self.expr()
                self.expect(")")
                return fn(inner)
            return _symbol_from_name(text)
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected token {text!r}", pos)


def parse_expr(text: str) -> Expr:
    """Parse expression text into a canonical :class:`Expr`.

    Grammar::

        expr   := term (('+'|'-') term)*
        term   := power (('*' | '/') power)*     (divisor must be a number)
        power  := factor ('^' integer)?
        factor := number | symbol | 'pi' | '-' factor
                | 'sin(' expr ')' | 'cos(' expr ')' | '(' expr ')'

    Symbols ending in ``_dot``, ``_ddot`` or ``_d<n>`` denote time
    derivatives of joint symbols.
    """
    p = _Parser(text)
    e = p.expr()
    kind, tok, pos = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected token {tok!r}", pos)
    return e


# ---------------------------------------------------------------------------
# printing


def _num_text(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    den = v.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        # not a terminating decimal: keep it exact
        return f"{v.numerator}/{v.denominator}"
    digits = max(twos, fives)
    sign = "-" if v < 0 else ""
    scaled = abs(v.numerator) * (10 ** digits) // v.denominator
    whole, frac = divmod(scaled, 10 ** digits)
    return f"{sign}{whole}.{str(frac).rjust(digits, '0').rstrip('0')}"


def _shorthand_index(arg: Expr) -> str | None:
    p = _poly(arg)
    idx = []
    for mono, c in sorted(p.items(), key=lambda mc: _mono_key(mc[0])):
        if c != 1 or len(mono) != 1 or mono[0][1] != 1:
            return None
        atom = mono[0][0]
        if not isinstance(atom, Sym) or atom.order or atom.kind != JOINT_ANGLE:
            return None
        m = re.search(r"(\d+)$", atom.name)
        idx.append(m.group(1))
    return "".join(idx)


def _atom_text(e: Expr, short: bool) -> str:
    if isinstance(e, Sym):
        return e.label
    if isinstance(e, (Sin, Cos)):
        fn = "sin" if isinstance(e, Sin) else "cos"
        if short:
            idx = _shorthand_index(e.arg)
            if idx is not None:
                return f"{fn[0]}{idx}"
        return f"{fn}({to_text(e.arg, short)})"
    if isinstance(e, Pow):
        return f"{_atom_text(e.base, short)}^{e.exp}"
    if isinstance(e, Num):
        return _num_text(e.value)
    return f"({to_text(e, short)})"


def _term_text(t: Expr, short: bool) -> tuple[bool, str]:
    """Return (negative, text-without-sign) for one term."""
    if isinstance(t, Num):
        return t.value < 0, _num_text(abs(t.value))
    if isinstance(t, Mul):
        factors = list(t.factors)
        neg = False
        parts = []
        if isinstance(factors[0], Num):
            c = factors.pop(0).value
            neg = c < 0
            if abs(c) != 1:
                parts.append(_num_text(abs(c)))
        parts.extend(_atom_text(f, short) for f in factors)
        return neg, "*".join(parts)
    return False, _atom_text(t, short)


def to_text(e: Expr, shorthand: bool = False) -> str:
    """Canonical text of ``e``; ``shorthand`` renders ``cos(theta1 + theta2)`` as ``c12``."""
    terms = e.terms if isinstance(e, Add) else (e,)
    out = []
    for i, t in enumerate(terms):
        neg, body = _term_text(t, shorthand)
        if i == 0:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out)


# ---------------------------------------------------------------------------
# evaluation and substitution


def _binding(bindings: Mapping, s: Sym):
    if s.name == "pi" and s.order == 0:
        return math.pi
    for key in (s, s.label):
        if key in bindings:
            return bindings[key]
    raise UnboundSymbolError(s.label)


def evaluate(e: Expr, bindings: Mapping) -> float:
    """Evaluate ``e`` to a float; ``bindings`` maps :class:`Sym` or label text to reals."""
    if isinstance(e, Num):
        return float(e.value)
    if isinstance(e, Sym):
        return float(_binding(bindings, e))
    if isinstance(e, Add):
        return math.fsum(evaluate(t, bindings) for t in e.terms)
    if isinstance(e, Mul):
        acc = 1.0
        for f in e.factors:
            acc *= evaluate(f, bindings)
        return acc
    if isinstance(e, Pow):
        return evaluate(e.base, bindings) ** e.exp
    if isinstance(e, Sin):
        return math.sin(evaluate(e.arg, bindings))
    if isinstance(e, Cos):
        return math.cos(evaluate(e.arg, bindings))
    raise TypeError(type(e))  # pragma: no cover


def _rebuild(e: Expr, leaf) -> Expr:
    if isinstance(e, Num):
        return e
    if isinstance(e, Sym):
        return leaf(e)
    if isinstance(e, Add):
        acc: dict = {}
        for t in e.terms:
            acc = _padd(acc, _poly(_rebuild(t, leaf)))
        return _from_poly(acc)
    if isinstance(e, Mul):
        acc = {(): Fraction(1)}
        for f in e.factors:
            acc = _pmul(acc, _poly(_rebuild(f, leaf)))
        return _from_poly(acc)
    if isinstance(e, Pow):
        return _rebuild(e.base, leaf) ** e.exp
    if isinstance(e, Sin):
        return sin(_rebuild(e.arg, leaf))
    if isinstance(e, Cos):
        return cos(_rebuild(e.arg, leaf))
    raise TypeError(type(e))  # pragma: no cover


def subs(e: Expr, mapping: Mapping) -> Expr:
    """Replace symbols (keyed by :class:`Sym` or label text) with numbers or expressions."""
    def leaf(s: Sym) -> Expr:
        for key in (s, s.label):
            if key in mapping:
                return _coerce(mapping[key])
        return s
    return _rebuild(e, leaf)


def free_symbols(e: Expr) -> set[Sym]:
    out: set[Sym] = set()
    stack = [e]
    while stack:
        x = stack.pop()
        if isinstance(x, Sym):
            if x.kind != CONSTANT:
                out.add(x)
        elif isinstance(x, Add):
            stack.extend(x.terms)
        elif isinstance(x, Mul):
            stack.extend(x.factors)
        elif isinstance(x, Pow):
            stack.append(x.base)
        elif isinstance(x, (Sin, Cos)):
            stack.append(x.arg)
    return out


# ---------------------------------------------------------------------------
# simplification


def _trig_factors(mono: tuple):
    """Yield (index-pair, atom1, atom2) for unordered pairs of trig factors."""
    slots = []
    for a, k in mono:
        if isinstance(a, (Sin, Cos)):
            slots.extend([a] * k)
    seen = set()
    for i in range(len(slots)):
        for j in range(i + 1, len(slots)):
            pair = (slots[i], slots[j])
            if pair in seen:
                continue
            seen.add(pair)
            yield pair


def _mono_remove(mono: tuple, atom: Expr) -> tuple:
    out = []
    removed = False
    for a, k in mono:
        if not removed and a == atom:
            removed = True
            if k > 1:
                out.append((a, k - 1))
        else:
            out.append((a, k))
    return tuple(out)


def _partner(kind: str, x: Expr, y: Expr):
    """For the trig pair (x, y) return the factor pair that completes an identity."""
    a, b = x.arg, y.arg
    if kind == "cc":
        return Sin(a), Sin(b)
    if kind == "sc":  # x = sin(a), y = cos(b)
        return Cos(a), Sin(b)
    return None


def _collapse_once(p: dict) -> dict | None:
    for mono in sorted(p, key=_mono_key):
        coeff = p[mono]
        for x, y in _trig_factors(mono):
            if isinstance(x, Cos) and isinstance(y, Cos):
                kind = "cc"
            elif isinstance(x, Sin) and isinstance(y, Cos):
                kind = "sc"
            elif isinstance(x, Cos) and isinstance(y, Sin):
                x, y = y, x
                kind = "sc"
            else:
                continue
            rest = _mono_remove(_mono_remove(mono, x), y)
            px, py = _partner(kind, x, y)
            other = _mono_mul(rest, _mono_mul(((px, 1),), ((py, 1),)))
            if other == mono or other not in p:
                continue
            c2 = p[other]
            a, b = x.arg, y.arg
            if kind == "cc":
                # c*cos a cos b -/+ c*sin a sin b
                if c2 == -coeff:
                    new = cos(a + b)
                elif c2 == coeff:
                    new = cos(a - b)
                else:
                    continue
            else:
                # c*sin a cos b +/- c*cos a sin b
                if c2 == coeff:
                    new = sin(a + b)
                elif c2 == -coeff:
                    new = sin(a - b)
                else:
                    continue
            out = dict(p)
            del out[mono]
            del out[other]
            rest_poly = {rest: coeff}
            return _padd(out, _pmul(rest_poly, _poly(new)))
    return None


def _simplify_args(e: Expr) -> Expr:
    if isinstance(e, (Num, Sym)):
        return e
    if isinstance(e, Sin):
        return sin(simplify(e.arg))
    if isinstance(e, Cos):
        return cos(simplify(e.arg))
    if isinstance(e, Pow):
        return _simplify_args(e.base) ** e.exp
    parts = [_simplify_args(x) for x in (e.terms if isinstance(e, Add) else e.factors)]
    acc = parts[0]
    for x in parts[1:]:
        acc = acc + x if isinstance(e, Add) else acc * x
    return acc


def simplify(e: Expr) -> Expr:
    """Collapse angle-sum products to a fixpoint; value preserving and idempotent."""
    p = _poly(_simplify_args(e))
    while True:
        nxt = _collapse_once(p)
        if nxt is None:
            break
        p = nxt
    return _from_poly(p)


# ---------------------------------------------------------------------------
# differentiation


def _atom_diff(atom: Expr, s: Sym) -> dict:
    if isinstance(atom, Sym):
        return {(): Fraction(1)} if atom == s else {}
    inner = _poly(diff(atom.arg, s))
    if not inner:
        return {}
    if isinstance(atom, Sin):
        return _pmul(_poly(cos(atom.arg)), inner)
    return _pscale(_pmul(_poly(sin(atom.arg)), inner), -1)


def diff(e: Expr, s: Sym) -> Expr:
    """Partial derivative of ``e`` with respect to the symbol ``s``."""
    out: dict = {}
    for mono, c in _poly(e).items():
        for i, (atom, k) in enumerate(mono):
            d = _atom_diff(atom, s)
            if not d:
                continue
            others = mono[:i] + ((atom, k - 1),) * (k > 1) + mono[i + 1:]
            term = _pmul({others: c * k}, d)
            out = _padd(out, term)
    return _from_poly(out)


def diff_time(e: Expr) -> Expr:
    """Total time derivative; joint symbols are functions of time."""
    acc = ZERO
    for s in sorted(free_symbols(e)):
        if s.time_dependent:
            acc = acc + diff(e, s) * s.derivative()
    return simplify(acc)


# ---------------------------------------------------------------------------
# probabilistic equality


def equal_on_samples(a: Expr, b: Expr, n: int = 100, seed: int = 0,
                     rtol: float = 1e-9) -> bool:
    """True when ``a`` and ``b`` agree at ``n`` seeded random points.

    Angles and derivative symbols are drawn from [-pi, pi], lengths and
    displacements from [0.1, 2].
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    symbols = sorted(free_symbols(a) | free_symbols(b))
    for _ in range(n):
        env = {}
        for s in symbols:
            if s.kind == JOINT_ANGLE or s.order > 0:
                env[s] = rng.uniform(-math.pi, math.pi)
            else:
                env[s] = rng.uniform(0.1, 2.0)
        va = evaluate(a, env)
        vb = evaluate(b, env)
        if abs(va - vb) > rtol * (1 + abs(va)):
            return False
    return True


def exprs_from(texts: Iterable[str]) -> list[Expr]:
    return [parse_expr(t) for t in texts]
