import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crlevi import expr as ex
from crlevi.errors import BadExponent, ExprSyntaxError, UnboundVariable, UnknownIdentifier

atoms = st.sampled_from(["z1", "z2", "t1", "i", "2", "1/3", "0.5"])


def _combine(children):
    return st.one_of(
        st.tuples(children, children).map(lambda p: f"({p[0]} + {p[1]})"),
        st.tuples(children, children).map(lambda p: f"{p[0]}*{p[1]}"),
        children.map(lambda c: f"-{c}"),
        children.map(lambda c: f"conj({c})"),
        children.map(lambda c: f"Re({c})"),
        children.map(lambda c: f"Im({c})"),
        children.map(lambda c: f"abs2({c})"),
        st.tuples(children, st.integers(0, 3)).map(lambda p: f"({p[0]})^{p[1]}"),
    )


exprs = st.recursive(atoms, _combine, max_leaves=6)


def _point(rng):
    return {"z1": complex(*rng.standard_normal(2)), "z2": complex(*rng.standard_normal(2)),
            "t1": float(rng.standard_normal())}


def _env(pt):
    return {("z", 1): pt["z1"], ("z", 2): pt["z2"], ("t", 1): pt["t1"]}


@given(exprs)
def test_round_trip_preserves_polynomial(text):
    e = ex.parse(text)
    again = ex.parse(ex.to_string(e))
    assert (ex.expand(e) - ex.expand(again)).is_zero()


@given(exprs, st.integers(0, 2 ** 31))
def test_canonical_form_evaluates_like_tree(text, seed):
    pt = _point(np.random.default_rng(seed))
    e = ex.parse(text)
    a = ex.evaluate(e, pt)
    b = complex(ex.expand(e)(_env(pt)))
    assert abs(a - b) <= 1e-9 * (1 + abs(a))


@given(exprs)
def test_conj_commutes_with_expand(text):
    e = ex.parse(text)
    assert (ex.expand(ex.Func("conj", e)) - ex.expand(e).conj()).is_zero()


@given(exprs, st.sampled_from(["z1", "conj(z1)", "z2", "t1"]), st.integers(0, 2 ** 31))
def test_wirtinger_matches_finite_differences(text, var, seed):
    rng = np.random.default_rng(seed)
    pt = _point(rng)
    e = ex.parse(text)
    d = complex(ex.evaluate(ex.wirtinger(e, var), pt))
    h = 1e-5

    def f(dx, dy=0.0):
        q = dict(pt)
        if var == "t1":
            q["t1"] = pt["t1"] + dx
        else:
            name = var.strip("conj()")
            q[name] = pt[name] + dx + 1j * dy
        return complex(ex.evaluate(e, q))

    if var == "t1":
        fd = (f(h) - f(-h)) / (2 * h)
    else:
        fx = (f(h) - f(-h)) / (2 * h)
        fy = (f(0.0, h) - f(0.0, -h)) / (2 * h)
        fd = 0.5 * (fx - 1j * fy) if not var.startswith("conj") else 0.5 * (fx + 1j * fy)
    assert abs(d - fd) <= 1e-5 * (1 + abs(d))


def test_wirtinger_basic_rules():
    assert ex.to_string(ex.wirtinger(ex.parse("conj(z1)"), "z1")) == "0"
    assert (ex.expand(ex.wirtinger(ex.parse("abs2(z1)"), "z1")) - ex.expand(ex.parse("conj(z1)"))).is_zero()
    assert (ex.expand(ex.wirtinger(ex.parse("Im(z1)"), "conj(z1)")) - ex.expand(ex.parse("1/2*i"))).is_zero()


def test_taylor_recenters():
    t = ex.taylor(ex.parse("z1^3"), 1, {"z1": 1})
    assert (ex.expand(t) - ex.expand(ex.parse("3*z1 - 2"))).is_zero()
    full = ex.taylor(ex.parse("abs2(z1)*t1 + z2"), 3, {"z1": 1 + 1j, "t1": 2})
    assert (ex.expand(full) - ex.expand(ex.parse("abs2(z1)*t1 + z2"))).is_zero()


@pytest.mark.parametrize("text, err, col", [
    ("z1 +", ExprSyntaxError, 5),
    ("foo(z1)", UnknownIdentifier, 1),
    ("w1", UnknownIdentifier, 1),
    ("z1^-1", BadExponent, 4),
    ("z1^1.5", BadExponent, 4),
    ("(z1", ExprSyntaxError, 4),
])
def test_syntax_errors_report_position(text, err, col):
    with pytest.raises(err) as info:
        ex.parse(text)
    assert f"column {col}" in str(info.value)


def test_unbound_variable():
    with pytest.raises(UnboundVariable):
        ex.evaluate(ex.parse("z1 + z2"), {"z1": 1.0})


def test_real_expressions():
    assert ex.is_real_expr(ex.parse("abs2(z1) + Re(z2*conj(z1))"))
    assert not ex.is_real_expr(ex.parse("z1"))
