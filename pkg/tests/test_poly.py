from fractions import Fraction

import pytest
from hypothesis import given
import hypothesis.strategies as st

from symkit.errors import VariableMismatch
from symkit.field import GaussRat, ONE, ZERO
from symkit.poly import Context, ExpPoly, MultiPoly, Var

from .strategies import random_exppoly


def make_ctx():
    return Context([Var("t"), Var("x")], translations=("t",))


def lam():
    return GaussRat(Fraction(2))


def mu():
    return GaussRat(Fraction(0), Fraction(1))


def test_exponent_law_under_multiplication():
    ctx = make_ctx()
    x = ExpPoly.variable(ctx, "x")
    a = x.exp_times({"t": lam()})
    b = x.exp_times({"t": mu()})
    prod = a * b
    expected = (x * x).exp_times({"t": lam() + mu()})
    assert prod == expected


def test_additive_identity():
    ctx = make_ctx()
    p = ExpPoly.variable(ctx, "x") * ExpPoly.variable(ctx, "t")
    assert p + ExpPoly.zero(ctx) == p


def test_difference_of_squares():
    ctx = make_ctx()
    x = ExpPoly.variable(ctx, "x")
    t = ExpPoly.variable(ctx, "t")
    assert (x + t) * (x - t) == x * x - t * t


def test_partial_of_monomial():
    ctx = make_ctx()
    x = ExpPoly.variable(ctx, "x")
    t = ExpPoly.variable(ctx, "t")
    p = x * x * t
    assert p.partial("x") == (x * t).scale(2)


def test_partial_with_exponential_factor():
    ctx = make_ctx()
    x = ExpPoly.variable(ctx, "x")
    p = x.exp_times({"t": lam()})
    assert p.partial("t") == p.scale(lam())


def test_partial_of_constant():
    ctx = make_ctx()
    assert ExpPoly.const(ctx, 5).partial("x").is_zero


def test_coeff_extract_plain():
    ctx = make_ctx()
    x = ExpPoly.variable(ctx, "x")
    t = ExpPoly.variable(ctx, "t")
    p = x * x - t * t
    triples = p.coeff_extract()
    # context order is (t, x): ascending graded-lex puts x^2 = (0, 2) first
    assert triples == [
        ((ZERO,), (0, 2), ONE),
        ((ZERO,), (2, 0), GaussRat(Fraction(-1))),
    ]


def test_coeff_extract_zero():
    ctx = make_ctx()
    assert ExpPoly.zero(ctx).coeff_extract() == []


def test_coeff_extract_with_weight():
    ctx = make_ctx()
    p = ExpPoly.variable(ctx, "x").scale(3).exp_times({"t": lam()})
    assert p.coeff_extract() == [((lam(),), (0, 1), GaussRat(Fraction(3)))]


def test_context_mismatch_raises():
    a = ExpPoly.variable(make_ctx(), "x")
    other = Context([Var("t"), Var("x")])
    b = ExpPoly.variable(other, "x")
    with pytest.raises(VariableMismatch):
        a * b


def test_substitute_square():
    ctx = make_ctx()
    x = ExpPoly.variable(ctx, "x")
    t = ExpPoly.variable(ctx, "t")
    p = x * x + x
    out = p.substitute({"x": t + ExpPoly.const(ctx, 1)})
    expected = (t + ExpPoly.const(ctx, 1)) ** 2 + t + ExpPoly.const(ctx, 1)
    assert out == expected


def test_substitute_translation_rejected():
    ctx = make_ctx()
    p = ExpPoly.variable(ctx, "t")
    with pytest.raises(VariableMismatch):
        p.substitute({"t": ExpPoly.const(ctx, 1)})


def test_render_and_json():
    ctx = make_ctx()
    x = ExpPoly.variable(ctx, "x")
    t = ExpPoly.variable(ctx, "t")
    p = x * x - t.scale(GaussRat(Fraction(1, 2), Fraction(1)))
    s = p.render()
    assert s == "x^2 - (1/2 + i)*t"
    data = p.to_json()
    assert ExpPoly.from_json(ctx, data) == p


def test_render_exponential_part():
    ctx = make_ctx()
    p = ExpPoly.variable(ctx, "x").exp_times({"t": lam()})
    assert p.render() == "exp(2*t)*(x)"


def test_embed_roundtrip():
    small = Context([Var("t"), Var("x")], translations=("t",))
    big = Context([Var("t"), Var("x"), Var("y")], translations=("t", "y"))
    p = (
        ExpPoly.variable(small, "x") * ExpPoly.variable(small, "t")
    ).exp_times({"t": lam()})
    q = p.embed(big)
    assert q.degree_in("x") == 1 and q.degree_in("t") == 1
    assert q.embed(small) == p


def test_embed_missing_variable_raises():
    small = Context([Var("t"), Var("x")])
    tiny = Context([Var("t")])
    p = ExpPoly.variable(small, "x")
    with pytest.raises(VariableMismatch):
        p.embed(tiny)


WEIGHTS = [
    (ZERO,),
    (GaussRat(Fraction(2)),),
    (GaussRat(Fraction(0), Fraction(1)),),
]


@given(st.randoms(use_true_random=False))
def test_mul_commutative_associative(rng):
    ctx = make_ctx()
    a = random_exppoly(rng, ctx, WEIGHTS)
    b = random_exppoly(rng, ctx, WEIGHTS)
    c = random_exppoly(rng, ctx, WEIGHTS)
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)


@given(st.randoms(use_true_random=False))
def test_mixed_partials_commute(rng):
    ctx = make_ctx()
    p = random_exppoly(rng, ctx, WEIGHTS)
    assert p.partial("t").partial("x") == p.partial("x").partial("t")


@given(st.randoms(use_true_random=False))
def test_extract_reconstruct_identity(rng):
    ctx = make_ctx()
    p = random_exppoly(rng, ctx, WEIGHTS)
    assert ExpPoly.reconstruct(ctx, p.coeff_extract()) == p


def test_zero_polynomial_everywhere():
    ctx = make_ctx()
    z = ExpPoly.zero(ctx)
    assert z.is_zero
    assert (z * z).is_zero and (z + z).is_zero and (-z).is_zero
    assert z.partial("x").is_zero
    assert z.degree_in("x") == -1
    assert z.render() == "0"


def test_multipoly_invariants():
    ctx = make_ctx()
    m = MultiPoly(ctx, {(1, 0): ONE, (0, 0): ZERO})
    assert (0, 0) not in m.terms  # zero coefficients are never stored
    assert m.degree_in(0) == 1
    assert m.total_degree() == 1
