from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crlevi.poly import HALF, GaussianRational, Poly, hermitian_matrix, tvar, zbar, zvar

VARS = [zvar(1), zbar(1), zvar(2), zbar(2), tvar(1)]

small = st.integers(-3, 3)
coeff = st.builds(lambda a, b: GaussianRational(Fraction(a), Fraction(b)), small, small)
mono = st.lists(st.sampled_from(VARS), max_size=3)


def _poly(terms):
    out = Poly.zero()
    for c, vs in terms:
        p = Poly.const(c)
        for v in vs:
            p = p * Poly.var(v)
        out = out + p
    return out


polys = st.lists(st.tuples(coeff, mono), max_size=4).map(_poly)


def test_gaussian_rational_exact():
    a = GaussianRational(Fraction(1, 3), Fraction(2))
    b = GaussianRational(Fraction(-1, 2), Fraction(1, 5))
    assert complex(a * b) == pytest.approx(complex(a) * complex(b))
    assert (a * b).re == Fraction(1, 3) * Fraction(-1, 2) - Fraction(2) * Fraction(1, 5)
    assert a.conjugate().im == -a.im
    assert HALF + HALF == GaussianRational(1)


@given(polys, polys, polys)
def test_ring_laws(p, q, r):
    assert ((p + q) - (q + p)).is_zero()
    assert ((p * q) * r - p * (q * r)).is_zero()
    assert (p * (q + r) - (p * q + p * r)).is_zero()


@given(polys, polys)
def test_conjugation_is_multiplicative(p, q):
    assert ((p * q).conj() - p.conj() * q.conj()).is_zero()
    assert (p.conj().conj() - p).is_zero()


@given(polys, polys, st.sampled_from(VARS))
def test_leibniz_rule(p, q, v):
    assert ((p * q).diff(v) - (p.diff(v) * q + p * q.diff(v))).is_zero()


@given(polys)
def test_real_part_is_real(p):
    assert p.real_part().is_real()
    assert (p.real_part() + p.imag_part() * GaussianRational(0, 1) - p).is_zero()


def test_evaluate_matches_numpy(rng):
    z1 = Poly.var(zvar(1))
    p = z1 * z1.conj() * 3 + Poly.var(tvar(1)) * z1
    x = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    t = rng.standard_normal(5)
    env = {("z", 1): x, ("t", 1): t}
    assert np.allclose(p(env), 3 * abs(x) ** 2 + t * x)


def test_hermitian_matrix_reads_mixed_coefficients():
    z1, z2 = Poly.var(zvar(1)), Poly.var(zvar(2))
    p = z1 * z2.conj() * 2 + z2 * z2.conj()
    H = hermitian_matrix(p, 2)
    assert np.array_equal(H, np.array([[0, 2], [0, 1]], dtype=complex))
