import random
from fractions import Fraction

import pytest
import sympy

from symkit.field import GaussRat, I, ONE, ZERO
from symkit.linop import (
    LinDiffOp,
    OperatorPde,
    commutator,
    compose,
    operator_determining_solve,
)
from symkit.poly import Context, ExpPoly, Var
from symkit.casestudies import free_schrodinger, schrodinger_dimension

from .strategies import random_gauss


def g(re, im=0):
    return GaussRat(Fraction(re), Fraction(im))


@pytest.fixture
def ctx():
    return Context([Var("t"), Var("x")], translations=("t", "x"))


def d(ctx, name, order=1):
    return LinDiffOp.derivative(ctx, name, order)


def fn(ctx, name):
    return LinDiffOp.function(ExpPoly.variable(ctx, name))


# ---------------------------------------------------------------------------
# composition and commutators
# ---------------------------------------------------------------------------

def test_compose_leibniz(ctx):
    out = compose(d(ctx, "x"), fn(ctx, "x"))
    x = ExpPoly.variable(ctx, "x")
    expected = LinDiffOp(ctx, {(0, 1): x, (0, 0): ExpPoly.const(ctx, 1)})
    assert out == expected
    assert out.render() == "x*dx + 1"


def test_compose_constant_coefficients_commute(ctx):
    assert compose(d(ctx, "x"), d(ctx, "t")) == compose(d(ctx, "t"), d(ctx, "x"))


def test_compose_identity(ctx):
    a = compose(fn(ctx, "t"), d(ctx, "x"))
    assert compose(LinDiffOp.identity(ctx), a) == a
    assert compose(a, LinDiffOp.identity(ctx)) == a


def test_canonical_pair(ctx):
    p = d(ctx, "x").scale(-I)  # -i d/dx
    out = commutator(fn(ctx, "x"), p)
    assert out == LinDiffOp.function(ExpPoly.const(ctx, I))


def test_commutator_with_self_vanishes(ctx):
    L = d(ctx, "t").scale(I) + d(ctx, "x", 2)
    assert commutator(L, L).is_zero


def test_constant_coefficient_operators_commute(ctx):
    L = d(ctx, "t").scale(I) + d(ctx, "x", 2)
    p = d(ctx, "x").scale(-I)
    assert commutator(p, L).is_zero


def test_compose_matches_sympy(ctx):
    """Apply both compositions to a generic function via sympy."""
    rng = random.Random(31)
    t, x = sympy.symbols("t x")
    f = sympy.Function("f")(t, x)

    def to_sympy_apply(op, target):
        out = sympy.Integer(0)
        for J, coeff in op.terms.items():
            c = sympy.Integer(0)
            for w, exps, value in coeff.coeff_extract():
                assert not any(w)
                term = sympy.Rational(value.re.numerator, value.re.denominator)
                term += sympy.I * sympy.Rational(value.im.numerator, value.im.denominator)
                c += term * t ** exps[0] * x ** exps[1]
            out += c * sympy.diff(target, t, J[0], x, J[1])
        return sympy.expand(out)

    for _ in range(12):
        def rand_op():
            terms = {}
            for _ in range(rng.randint(1, 3)):
                J = (rng.randint(0, 1), rng.randint(0, 2))
                exps = (rng.randint(0, 1), rng.randint(0, 2))
                terms[J] = terms.get(J, ExpPoly.zero(ctx)) + ExpPoly.monomial(
                    ctx, random_gauss(rng, 2, 1), exps
                )
            return LinDiffOp(ctx, {J: c for J, c in terms.items() if not c.is_zero})

        a, b = rand_op(), rand_op()
        ours = to_sympy_apply(compose(a, b), f)
        theirs = sympy.expand(to_sympy_apply(a, to_sympy_apply(b, f)))
        assert sympy.simplify(ours - theirs) == 0


def test_compose_associative_random(ctx):
    rng = random.Random(13)
    for _ in range(25):
        def rand_op():
            terms = {}
            for _ in range(rng.randint(1, 2)):
                J = (rng.randint(0, 1), rng.randint(0, 2))
                exps = (rng.randint(0, 2), rng.randint(0, 2))
                terms[J] = terms.get(J, ExpPoly.zero(ctx)) + ExpPoly.monomial(
                    ctx, random_gauss(rng, 2, 1), exps
                )
            return LinDiffOp(ctx, {J: c for J, c in terms.items() if not c.is_zero})

        a, b, c = rand_op(), rand_op(), rand_op()
        assert compose(compose(a, b), c) == compose(a, compose(b, c))


def test_commutator_jacobi_random(ctx):
    rng = random.Random(29)
    for _ in range(15):
        def rand_op():
            terms = {}
            for _ in range(rng.randint(1, 2)):
                J = (rng.randint(0, 1), rng.randint(0, 2))
                exps = (rng.randint(0, 2), rng.randint(0, 2))
                terms[J] = terms.get(J, ExpPoly.zero(ctx)) + ExpPoly.monomial(
                    ctx, random_gauss(rng, 2, 1), exps
                )
            return LinDiffOp(ctx, {J: c for J, c in terms.items() if not c.is_zero})

        a, b, c = rand_op(), rand_op(), rand_op()
        total = (
            commutator(commutator(a, b), c)
            + commutator(commutator(b, c), a)
            + commutator(commutator(c, a), b)
        )
        assert total.is_zero


# ---------------------------------------------------------------------------
# the defining operator and reduction
# ---------------------------------------------------------------------------

def test_operator_pde_validation(ctx):
    with pytest.raises(ValueError):
        OperatorPde(d(ctx, "t", 2) + d(ctx, "x", 2), "t")  # second order in t
    with pytest.raises(ValueError):
        # evolution-axis coefficient must be constant
        OperatorPde(compose(fn(ctx, "x"), d(ctx, "t")), "t")
    with pytest.raises(ValueError):
        OperatorPde(d(ctx, "x", 2), "t")  # no t at all


def test_reduce_eliminates_time():
    pde = free_schrodinger()
    ctx = pde.ctx
    dt = LinDiffOp.derivative(ctx, "t")
    reduced = pde.reduce(dt)
    # on solutions d/dt = i d^2/dx^2
    assert reduced == LinDiffOp.derivative(ctx, "x", 2).scale(I)
    mixed = compose(LinDiffOp.derivative(ctx, "t"), LinDiffOp.derivative(ctx, "t"))
    reduced2 = pde.reduce(mixed)
    assert reduced2 == LinDiffOp.derivative(ctx, "x", 4).scale(-ONE)


def test_is_symmetry_oracle():
    pde = free_schrodinger()
    ctx = pde.ctx
    t = ExpPoly.variable(ctx, "t")
    x = ExpPoly.variable(ctx, "x")
    galilei = LinDiffOp(ctx, {(0, 1): t, (0, 0): x.scale(g(Fraction(-1, 2), 0) * I)})
    assert pde.is_symmetry(galilei)
    bad = LinDiffOp(ctx, {(0, 1): x})
    assert not pde.is_symmetry(bad)


# ---------------------------------------------------------------------------
# determining solve
# ---------------------------------------------------------------------------

def test_solve_order_one_span():
    pde = free_schrodinger()
    ctx = pde.ctx
    basis = operator_determining_solve(pde, 1, dim_bound=3)
    assert len(basis) == 3
    t = ExpPoly.variable(ctx, "t")
    x = ExpPoly.variable(ctx, "x")
    hand = [
        LinDiffOp.identity(ctx),
        LinDiffOp.derivative(ctx, "x"),
        LinDiffOp(ctx, {(0, 1): t, (0, 0): x.scale(GaussRat(Fraction(0), Fraction(-1, 2)))}),
    ]
    for op in hand:
        assert pde.is_symmetry(op)
    from symkit.casestudies import spans_equal

    assert spans_equal(basis, hand)


def test_solve_order_two_dimension():
    pde = free_schrodinger()
    basis = operator_determining_solve(pde, 2, dim_bound=6)
    assert len(basis) == 6
    for op in basis:
        assert pde.is_symmetry(op)


def test_solve_nonzero_weight_is_empty():
    pde = free_schrodinger()
    basis = operator_determining_solve(pde, 2, weights=(ONE, ZERO), dim_bound=6)
    assert basis == []


def test_solve_caps_required():
    pde = free_schrodinger()
    with pytest.raises(ValueError):
        operator_determining_solve(pde, 1)


def test_commutator_closure_across_orders():
    """[V^(q1), V^(q2)] lies in the span returned for order q1+q2-1."""
    pde = free_schrodinger()
    spaces = {
        q: operator_determining_solve(pde, q, dim_bound=schrodinger_dimension(q))
        for q in (1, 2, 3)
    }
    from symkit.casestudies import _in_span

    for q1, q2 in ((1, 1), (1, 2), (2, 2)):
        target = spaces[q1 + q2 - 1]
        for a in spaces[q1]:
            for b in spaces[q2]:
                assert _in_span(target, commutator(a, b))
