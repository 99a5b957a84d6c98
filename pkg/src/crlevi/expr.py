"""Expression language for real-analytic defining functions.

Grammar (whitespace insensitive)::

    expr   := term (("+" | "-") term)*
    term   := unary ("*" unary)*
    unary  := "-" unary | power
    power  := atom ("^" INTEGER)?
    atom   := NUMBER | "i" | VARIABLE | FUNC "(" expr ")" | "(" expr ")"

NUMBER is a decimal (``0.25``, ``1e-3``) or a rational literal (``3/4``);
VARIABLE is ``z<k>`` or ``t<k>``; FUNC is one of ``conj``, ``Re``, ``Im``,
``abs2`` with ``abs2(w) = w*conj(w)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import BadExponent, ExprSyntaxError, UnboundVariable, UnknownIdentifier
from .poly import (
    HALF,
    I,
    ONE,
    GaussianRational,
    Poly,
    conj_var,
    is_exact,
    tvar,
    zbar,
    zvar,
)

FUNCTIONS = ("conj", "Re", "Im", "abs2")
_VAR_RE = re.compile(r"([zt])([1-9][0-9]*)$")


# --------------------------------------------------------------------- AST
@dataclass(frozen=True)
class Const:
    value: Union[GaussianRational, complex]
    span: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    span: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Expr"
    span: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    arg: "Expr"
    span: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Sum:
    terms: tuple
    span: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Product:
    factors: tuple
    span: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exp: int
    span: tuple = field(default=None, compare=False, repr=False)


Expr = Union[Const, Var, Func, Neg, Sum, Product, Pow]

ZERO_EXPR = Const(GaussianRational(0))


def var_key(name):
    """'z3' -> ('z', 3), 't1' -> ('t', 1)."""
    m = _VAR_RE.match(name)
    if not m:
        raise ValueError(f"not a variable name: {name}")
    return m.group(1), int(m.group(2))


# ------------------------------------------------------------------ lexer
_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<rational>\d+/\d+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*^()/])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    out.append(_Tok("end", "", len(text)))
    return out


# ----------------------------------------------------------------- parser
class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None, cls=ExprSyntaxError):
        tok = tok or self.tok
        return cls(msg, self.text, tok.pos)

    def expect(self, text):
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            if self.tok.text == "/":
                raise self.error("division is only allowed inside rational literals")
            raise self.error(f"unexpected token {self.tok.text!r}")
        return node

    def expr(self):
        start = self.tok.pos
        terms = [self.term()]
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            t = self.term()
            terms.append(Neg(t, span=(t.span[0], t.span[1])) if op == "-" else t)
        if len(terms) == 1:
            return terms[0]
        return Sum(tuple(terms), span=(start, self.tok.pos))

    def term(self):
        start = self.tok.pos
        factors = [self.unary()]
        while self.tok.text == "*":
            self.advance()
            factors.append(self.unary())
        if len(factors) == 1:
            return factors[0]
        return Product(tuple(factors), span=(start, factors[-1].span[1]))

    def unary(self):
        if self.tok.text == "-":
            start = self.advance().pos
            arg = self.unary()
            return Neg(arg, span=(start, arg.span[1]))
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.text != "^":
            return base
        self.advance()
        tok = self.tok
        if tok.text == "-":
            raise self.error("negative exponent", tok, BadExponent)
        if tok.kind == "rational" or (tok.kind == "number" and not tok.text.isdigit()):
            raise self.error(f"non-integer exponent {tok.text!r}", tok, BadExponent)
        if tok.kind != "number":
            raise self.error("exponent must be a non-negative integer literal", tok, BadExponent)
        self.advance()
        return Pow(base, int(tok.text), span=(base.span[0], tok.pos + len(tok.text)))

    def atom(self):
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return Const(GaussianRational(Fraction(tok.text)), span=(tok.pos, tok.pos + len(tok.text)))
        if tok.kind == "rational":
            self.advance()
            num, den = tok.text.split("/")
            if int(den) == 0:
                raise self.error("zero denominator in rational literal", tok)
            return Const(GaussianRational(Fraction(int(num), int(den))),
                         span=(tok.pos, tok.pos + len(tok.text)))
        if tok.kind == "ident":
            self.advance()
            end = tok.pos + len(tok.text)
            if tok.text == "i":
                return Const(I, span=(tok.pos, end))
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                close = self.expect(")")
                return Func(tok.text, arg, span=(tok.pos, close.pos + 1))
            if _VAR_RE.match(tok.text):
                return Var(tok.text, span=(tok.pos, end))
            raise self.error(f"unknown identifier {tok.text!r}", tok, UnknownIdentifier)
        if tok.text == "(":
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        found = tok.text or "end of input"
        raise self.error(f"unexpected {found!r}")


def parse(text: str) -> Expr:
    """Parse grammar text into an AST carrying source spans."""
    return _Parser(text).parse()


# ---------------------------------------------------------------- printer
_PREC = {Sum: 1, Neg: 2, Product: 3, Pow: 4}


def _fmt_number(x):
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _const_atomic(c):
    """Text for a constant if it parses back to a single Const node, else None."""
    if is_exact(c):
        if c.im == 0 and c.re >= 0:
            return _fmt_number(c.re)
        if c.re == 0 and c.im == 1:
            return "i"
        return None
    c = complex(c)
    if c.imag == 0 and c.real >= 0:
        return _fmt_number(c.real)
    return None


def _const_text(c):
    atomic = _const_atomic(c)
    if atomic is not None:
        return atomic, True
    re_, im_ = (c.re, c.im) if is_exact(c) else (complex(c).real, complex(c).imag)
    parts = []
    if re_ != 0:
        parts.append(("-" if re_ < 0 else "") + _fmt_number(abs(re_)))
    if im_ != 0:
        mag = abs(im_)
        body = "i" if mag == 1 else f"{_fmt_number(mag)}*i"
        if parts:
            parts.append((" - " if im_ < 0 else " + ") + body)
        else:
            parts.append(("-" if im_ < 0 else "") + body)
    return "(" + "".join(parts) + ")", False


def to_string(e: Expr) -> str:
    """Print an AST; parser output round-trips exactly."""
    if isinstance(e, Const):
        return _const_text(e.value)[0]
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({to_string(e.arg)})"
    if isinstance(e, Pow):
        base = to_string(e.base)
        if isinstance(e.base, (Sum, Neg, Product, Pow)) or (
            isinstance(e.base, Const) and not _const_text(e.base.value)[1]
        ):
            if not base.startswith("(") or isinstance(e.base, (Sum, Neg, Product, Pow)):
                base = f"({base})"
        return f"{base}^{e.exp}"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        if isinstance(e.arg, (Sum, Product)):
            inner = f"({inner})"
        return "-" + inner
    if isinstance(e, Product):
        parts = []
        for f in e.factors:
            s = to_string(f)
            if isinstance(f, (Sum, Product)):
                s = f"({s})"
            parts.append(s)
        return "*".join(parts)
    if isinstance(e, Sum):
        out = []
        for k, t in enumerate(e.terms):
            if k > 0 and isinstance(t, Neg):
                s = to_string(t.arg)
                if isinstance(t.arg, Sum):
                    s = f"({s})"
                out.append(" - " + s)
                continue
            s = to_string(t)
            if isinstance(t, Sum):
                s = f"({s})"
            out.append(s if k == 0 else " + " + s)
        return "".join(out)
    raise TypeError(f"not an expression: {e!r}")


# ------------------------------------------------------------- evaluation
def evaluate(e: Expr, point):
    """Numeric value at ``point`` (mapping variable name -> value; arrays broadcast)."""
    if isinstance(e, Const):
        return complex(e.value)
    if isinstance(e, Var):
        try:
            v = point[e.name]
        except KeyError:
            raise UnboundVariable(f"variable {e.name} is not bound") from None
        if e.name.startswith("t"):
            return np.real(v) if np.ndim(v) else complex(np.real(v))
        return v
    if isinstance(e, Func):
        a = evaluate(e.arg, point)
        if e.name == "conj":
            return np.conj(a)
        if e.name == "Re":
            return np.real(a) + 0j
        if e.name == "Im":
            return np.imag(a) + 0j
        return a * np.conj(a)
    if isinstance(e, Neg):
        return -evaluate(e.arg, point)
    if isinstance(e, Sum):
        total = 0j
        for t in e.terms:
            total = total + evaluate(t, point)
        return total
    if isinstance(e, Product):
        total = 1 + 0j
        for f in e.factors:
            total = total * evaluate(f, point)
        return total
    if isinstance(e, Pow):
        b = evaluate(e.base, point)
        return b ** e.exp if e.exp else b * 0 + 1
    raise TypeError(f"not an expression: {e!r}")


# -------------------------------------------------------- canonical form
def _var_poly(name):
    kind, idx = var_key(name)
    return Poly.var(zvar(idx) if kind == "z" else tvar(idx))


def expand(e: Expr) -> Poly:
    """Canonical polynomial of an expression."""
    if isinstance(e, Const):
        return Poly.const(e.value)
    if isinstance(e, Var):
        return _var_poly(e.name)
    if isinstance(e, Func):
        p = expand(e.arg)
        if e.name == "conj":
            return p.conj()
        if e.name == "Re":
            return p.real_part()
        if e.name == "Im":
            return p.imag_part()
        return p * p.conj()
    if isinstance(e, Neg):
        return -expand(e.arg)
    if isinstance(e, Sum):
        out = Poly.zero()
        for t in e.terms:
            out = out + expand(t)
        return out
    if isinstance(e, Product):
        out = Poly.const(ONE)
        for f in e.factors:
            out = out * expand(f)
        return out
    if isinstance(e, Pow):
        return expand(e.base) ** e.exp
    raise TypeError(f"not an expression: {e!r}")


def _var_expr(v):
    kind, idx, bar = v
    base = Var(f"{kind}{idx}")
    return Func("conj", base) if bar else base


def _coeff_expr(c):
    """(expr, negative) with the sign pulled out when it is a pure sign."""
    if is_exact(c):
        re_, im_ = c.re, c.im
    else:
        c = complex(c)
        re_, im_ = c.real, c.imag
        re_ = re_ if re_ != 0 else 0
        im_ = im_ if im_ != 0 else 0
    mk = (lambda x: Const(GaussianRational(x))) if is_exact(c) else (lambda x: Const(complex(x)))
    if im_ == 0:
        return mk(abs(re_)), re_ < 0
    if re_ == 0:
        unit = Const(I)
        if abs(im_) == 1:
            return unit, im_ < 0
        return Product((mk(abs(im_)), unit)), im_ < 0
    real = mk(abs(re_)) if re_ > 0 else Neg(mk(-re_))
    imag = Const(I) if abs(im_) == 1 else Product((mk(abs(im_)), Const(I)))
    return Sum((real, Neg(imag) if im_ < 0 else imag)), False


def from_poly(p: Poly) -> Expr:
    """Expression whose expansion is ``p`` (sum of monomials in canonical order)."""
    if p.is_zero():
        return ZERO_EXPR
    terms = []
    for m in sorted(p.terms):
        factors = []
        for v, e in m:
            ve = _var_expr(v)
            factors.append(ve if e == 1 else Pow(ve, e))
        coeff, negative = _coeff_expr(p.terms[m])
        unit = isinstance(coeff, Const) and coeff.value == 1
        if not factors:
            node = coeff
        elif unit:
            node = factors[0] if len(factors) == 1 else Product(tuple(factors))
        elif isinstance(coeff, Product):
            node = Product(coeff.factors + tuple(factors))
        else:
            node = Product((coeff, *factors))
        terms.append(Neg(node) if negative else node)
    return terms[0] if len(terms) == 1 else Sum(tuple(terms))


def is_real_expr(e: Expr, tol: float = 0.0) -> bool:
    return expand(e).is_real(tol)


def variables(e: Expr):
    """Sorted variable names mentioned by the expression."""
    found = set()

    def walk(x):
        if isinstance(x, Var):
            found.add(x.name)
        elif isinstance(x, (Func, Neg)):
            walk(x.arg)
        elif isinstance(x, Pow):
            walk(x.base)
        elif isinstance(x, Sum):
            for t in x.terms:
                walk(t)
        elif isinstance(x, Product):
            for f in x.factors:
                walk(f)

    walk(e)
    return sorted(found, key=lambda s: (s[0] != "z", var_key(s)[1]))


# ------------------------------------------------------------ derivatives
def _parse_dvar(var):
    """Accepts 'z1', 'conj(z1)', 't2' or a Poly variable tuple."""
    if isinstance(var, tuple):
        return var
    var = var.strip()
    if var.startswith("conj(") and var.endswith(")"):
        kind, idx = var_key(var[5:-1])
        if kind != "z":
            return tvar(idx)
        return zbar(idx)
    kind, idx = var_key(var)
    return zvar(idx) if kind == "z" else tvar(idx)


def _d(e, v):
    """Raw AST derivative under the Wirtinger rules."""
    zero = ZERO_EXPR
    if isinstance(e, Const):
        return zero
    if isinstance(e, Var):
        kind, idx = var_key(e.name)
        mine = zvar(idx) if kind == "z" else tvar(idx)
        return Const(ONE) if mine == v else zero
    if isinstance(e, Func):
        a = e.arg
        da = _d(a, v)
        dbar = Func("conj", _d(a, conj_var(v)))
        if e.name == "conj":
            return dbar
        if e.name == "Re":
            return Product((Const(HALF), Sum((da, dbar))))
        if e.name == "Im":
            return Product((Const(GaussianRational(0, Fraction(-1, 2))), Sum((da, Neg(dbar)))))
        return Sum((Product((da, Func("conj", a))), Product((a, dbar))))
    if isinstance(e, Neg):
        return Neg(_d(e.arg, v))
    if isinstance(e, Sum):
        return Sum(tuple(_d(t, v) for t in e.terms))
    if isinstance(e, Product):
        out = []
        fs = e.factors
        for k in range(len(fs)):
            out.append(Product(fs[:k] + (_d(fs[k], v),) + fs[k + 1:]))
        return Sum(tuple(out))
    if isinstance(e, Pow):
        if e.exp == 0:
            return zero
        return Product((Const(GaussianRational(e.exp)), Pow(e.base, e.exp - 1), _d(e.base, v)))
    raise TypeError(f"not an expression: {e!r}")


def wirtinger(e: Expr, var) -> Expr:
    """Exact derivative along d/dz^a, d/dconj(z^a) or d/dt^j, in canonical form.

    The rules are applied on the tree (with d conj(E)/dz = conj(dE/dconj(z)));
    the result is then brought to canonical polynomial form.
    """
    v = _parse_dvar(var)
    return from_poly(expand(_d(e, v)))


def taylor(e: Expr, order: int, at=None) -> Expr:
    """Taylor polynomial of total degree <= order about ``at`` (default: origin).

    Every grammar expression is a polynomial, so the expansion is exact
    truncation after re-centering; the result is written in the original
    variables.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    p = expand(e)
    if not at:
        return from_poly(p.truncate(order))
    fwd, back = {}, {}
    for name, val in at.items():
        kind, idx = var_key(name)
        val = complex(val)
        if kind == "z":
            fwd[zvar(idx)] = Poly.var(zvar(idx)) + val
            fwd[zbar(idx)] = Poly.var(zbar(idx)) + val.conjugate()
            back[zvar(idx)] = Poly.var(zvar(idx)) - val
            back[zbar(idx)] = Poly.var(zbar(idx)) - val.conjugate()
        else:
            fwd[tvar(idx)] = Poly.var(tvar(idx)) + val.real
            back[tvar(idx)] = Poly.var(tvar(idx)) - val.real
    local = p.substitute(fwd).truncate(order)
    return from_poly(local.substitute(back))


def as_expr(x) -> Expr:
    if isinstance(x, str):
        return parse(x)
    if isinstance(x, Poly):
        return from_poly(x)
    return x
