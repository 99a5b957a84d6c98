"""Canonical polynomials in z, conj(z), t (and auxiliary s) with complex coefficients.

Every expression of the grammar expands to a ``Poly``.  Coefficients are kept
exact (Gaussian rationals) for as long as the inputs are exact and silently
degrade to Python ``complex`` once a float enters, so identities between exact
inputs can be checked coefficient by coefficient.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Number

import numpy as np


class GaussianRational:
    """Exact complex number ``re + i*im`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def coerce(cls, value):
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(value, 0)
        return None

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash(complex(self))

    def __eq__(self, other):
        g = GaussianRational.coerce(other)
        if g is not None:
            return self.re == g.re and self.im == g.im
        if isinstance(other, Number):
            return complex(self) == complex(other)
        return NotImplemented

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __add__(self, other):
        g = GaussianRational.coerce(other)
        if g is not None:
            return GaussianRational(self.re + g.re, self.im + g.im)
        if isinstance(other, Number):
            return complex(self) + complex(other)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        g = GaussianRational.coerce(other)
        if g is not None:
            return GaussianRational(self.re * g.re - self.im * g.im,
                                    self.re * g.im + self.im * g.re)
        if isinstance(other, Number):
            return complex(self) * complex(other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        g = GaussianRational.coerce(other)
        if g is not None:
            den = g.re * g.re + g.im * g.im
            if den == 0:
                raise ZeroDivisionError("division by zero")
            num = self * GaussianRational(g.re, -g.im)
            return GaussianRational(num.re / den, num.im / den)
        if isinstance(other, Number):
            return complex(self) / complex(other)
        return NotImplemented

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    @property
    def real(self):
        return self.re

    @property
    def imag(self):
        return self.im


ONE = GaussianRational(1)
ZERO = GaussianRational(0)
I = GaussianRational(0, 1)
HALF = GaussianRational(Fraction(1, 2))


def as_coeff(value):
    """Normalize a scalar to the coefficient domain (exact when possible)."""
    if isinstance(value, np.integer):
        value = int(value)
    g = GaussianRational.coerce(value)
    if g is not None:
        return g
    if isinstance(value, (float, complex, np.floating, np.complexfloating)):
        return complex(value)
    raise TypeError(f"not a scalar coefficient: {value!r}")


def conj_coeff(c):
    return c.conjugate()


def is_exact(c):
    return isinstance(c, GaussianRational)


# Variables are (kind, index, bar); bar=1 marks the conjugate of a complex z.
def zvar(i):
    return ("z", i, 0)


def zbar(i):
    return ("z", i, 1)


def tvar(i):
    return ("t", i, 0)


def svar(i):
    return ("s", i, 0)


def conj_var(v):
    kind, idx, bar = v
    if kind == "z":
        return (kind, idx, 1 - bar)
    return v


def var_name(v):
    kind, idx, bar = v
    return f"conj({kind}{idx})" if bar else f"{kind}{idx}"


def _mono_mul(a, b):
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def _mono_conj(m):
    return tuple(sorted((conj_var(v), e) for v, e in m))


def _mono_degree(m):
    return sum(e for _, e in m)


class Poly:
    """Sparse polynomial: mapping monomial -> coefficient.

    A monomial is a sorted tuple of ``(variable, exponent)`` pairs; the empty
    tuple is the constant monomial.  Instances are treated as immutable.
    """

    __slots__ = ("terms", "_compiled")

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for m, c in terms.items():
                c = as_coeff(c)
                if c != 0:
                    clean[m] = c
        self.terms = clean
        self._compiled = None

    # construction -----------------------------------------------------
    @classmethod
    def const(cls, c):
        return cls({(): c})

    @classmethod
    def var(cls, v):
        return cls({((v, 1),): ONE})

    @classmethod
    def zero(cls):
        return cls()

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        other = _lift(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out[m] + c if m in out else c
        return Poly(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        other = _lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Poly):
            return self.mul(other)
        if isinstance(other, (Number, GaussianRational)):
            c = as_coeff(other)
            return Poly({m: v * c for m, v in self.terms.items()})
        return NotImplemented

    __rmul__ = __mul__

    def mul(self, other, truncate=None):
        out = {}
        for m1, c1 in self.terms.items():
            d1 = _mono_degree(m1)
            for m2, c2 in other.terms.items():
                if truncate is not None and d1 + _mono_degree(m2) > truncate:
                    continue
                m = _mono_mul(m1, m2)
                c = c1 * c2
                out[m] = out[m] + c if m in out else c
        return Poly(out)

    def __pow__(self, n):
        return self.pow(n)

    def pow(self, n, truncate=None):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Poly.const(ONE)
        base = self
        while n:
            if n & 1:
                result = result.mul(base, truncate)
            n >>= 1
            if n:
                base = base.mul(base, truncate)
        return result

    def __eq__(self, other):
        other = _lift(other)
        if other is NotImplemented:
            return other
        return (self - other).is_zero()

    def __hash__(self):
        return hash(tuple(sorted(self.terms)))

    def is_zero(self):
        return not self.terms

    # structure --------------------------------------------------------
    def conj(self):
        return Poly({_mono_conj(m): conj_coeff(c) for m, c in self.terms.items()})

    def real_part(self):
        return (self + self.conj()) * HALF

    def imag_part(self):
        return (self - self.conj()) * GaussianRational(0, Fraction(-1, 2))

    def is_real(self, tol=0.0):
        diff = self - self.conj()
        if tol == 0.0:
            return diff.is_zero()
        return diff.max_abs_coeff() <= tol * (1.0 + self.max_abs_coeff())

    def max_abs_coeff(self):
        return max((abs(complex(c)) for c in self.terms.values()), default=0.0)

    def is_exact(self):
        return all(is_exact(c) for c in self.terms.values())

    def variables(self):
        return sorted({v for m in self.terms for v, _ in m})

    def degree(self):
        return max((_mono_degree(m) for m in self.terms), default=0)

    def min_degree(self):
        return min((_mono_degree(m) for m in self.terms), default=0)

    def homogeneous(self, d):
        return Poly({m: c for m, c in self.terms.items() if _mono_degree(m) == d})

    def truncate(self, d):
        return Poly({m: c for m, c in self.terms.items() if _mono_degree(m) <= d})

    def coeff(self, monomial):
        key = tuple(sorted(monomial))
        return self.terms.get(key, ZERO)

    def chop(self, tol):
        return Poly({m: c for m, c in self.terms.items() if abs(complex(c)) > tol})

    def to_complex(self):
        return Poly({m: complex(c) for m, c in self.terms.items()})

    # calculus ---------------------------------------------------------
    def diff(self, v):
        """Derivative w.r.t. one variable, all others held fixed (Wirtinger)."""
        out = {}
        for m, c in self.terms.items():
            for j, (w, e) in enumerate(m):
                if w == v:
                    rest = list(m)
                    if e == 1:
                        del rest[j]
                    else:
                        rest[j] = (w, e - 1)
                    key = tuple(rest)
                    val = c * e
                    out[key] = out[key] + val if key in out else val
                    break
        return Poly(out)

    def substitute(self, mapping, truncate=None):
        """Replace variables by polynomials; unmapped variables stay put."""
        cache = {}

        def power(v, e):
            key = (v, e)
            if key not in cache:
                cache[key] = mapping[v].pow(e, truncate)
            return cache[key]

        out = Poly.zero()
        for m, c in self.terms.items():
            term = Poly.const(c)
            keep = []
            for v, e in m:
                if v in mapping:
                    term = term.mul(power(v, e), truncate)
                else:
                    keep.append((v, e))
            if keep:
                term = term.mul(Poly({tuple(keep): ONE}), truncate)
            out = out + term
        if truncate is not None:
            out = out.truncate(truncate)
        return out

    # evaluation -------------------------------------------------------
    def compile(self):
        """Vectorized evaluator ``f(env)`` with env mapping (kind, index) -> values."""
        if self._compiled is None:
            self._compiled = _compile(self)
        return self._compiled

    def evaluate(self, env):
        return self.compile()(env)

    def __call__(self, env):
        return self.compile()(env)

    def __repr__(self):
        if not self.terms:
            return "Poly(0)"
        parts = []
        for m in sorted(self.terms):
            c = complex(self.terms[m])
            mono = "*".join(var_name(v) + (f"^{e}" if e > 1 else "") for v, e in m)
            parts.append(f"({c:g})" + (f"*{mono}" if mono else ""))
        return "Poly(" + " + ".join(parts) + ")"


def _lift(other):
    if isinstance(other, Poly):
        return other
    if isinstance(other, (Number, GaussianRational)):
        return Poly.const(as_coeff(other))
    return NotImplemented


def _compile(poly):
    terms = [(m, complex(c)) for m, c in sorted(poly.terms.items())]
    maxpow = {}
    for m, _ in terms:
        for v, e in m:
            maxpow[v] = max(maxpow.get(v, 0), e)

    def fn(env):
        powers = {}
        for v, emax in maxpow.items():
            kind, idx, bar = v
            try:
                base = env[(kind, idx)]
            except KeyError:
                from .errors import UnboundVariable
                raise UnboundVariable(f"variable {kind}{idx} is not bound") from None
            base = np.asarray(base)
            if bar:
                base = np.conj(base)
            pw = [None, base]
            for _ in range(2, emax + 1):
                pw.append(pw[-1] * base)
            powers[v] = pw
        total = 0j
        for m, c in terms:
            val = c
            for v, e in m:
                val = val * powers[v][e]
            total = total + val
        return total

    return fn


def hermitian_matrix(poly, n):
    """Matrix H[a, b] = coefficient of z_a * conj(z_b) (1-based variable indices)."""
    H = np.zeros((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            mono = ((zvar(a + 1), 1), (zbar(b + 1), 1))
            H[a, b] = complex(poly.coeff(mono))
    return H

