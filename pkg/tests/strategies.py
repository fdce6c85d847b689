"""Hypothesis strategies and seeded random generators for exact values."""

import random
from fractions import Fraction

import hypothesis.strategies as st

from symkit.field import GaussRat
from symkit.poly import ExpPoly, MultiPoly


def fractions_small():
    return st.fractions(min_value=-4, max_value=4, max_denominator=6)


def gauss_rats():
    return st.builds(GaussRat, fractions_small(), fractions_small())


def gauss_rats_nonzero():
    return gauss_rats().filter(bool)


def random_gauss(rng: random.Random, span: int = 9, den: int = 6) -> GaussRat:
    return GaussRat(
        Fraction(rng.randint(-span, span), rng.randint(1, den)),
        Fraction(rng.randint(-span, span), rng.randint(1, den)),
    )


def random_multipoly(rng: random.Random, ctx, nterms=3, max_exp=2) -> MultiPoly:
    terms = {}
    for _ in range(rng.randint(0, nterms)):
        exps = [0] * ctx.nvars
        for _ in range(rng.randint(0, 2)):
            exps[rng.randrange(ctx.nvars)] += rng.randint(1, max_exp)
        terms[tuple(exps)] = random_gauss(rng, span=3, den=3)
    return MultiPoly(ctx, terms)


def random_exppoly(rng: random.Random, ctx, weights=(), nterms=3) -> ExpPoly:
    parts = {}
    pool = list(weights) or [ctx.zero_weights()]
    for w in rng.sample(pool, k=min(len(pool), rng.randint(1, len(pool)))):
        parts[w] = random_multipoly(rng, ctx, nterms=nterms)
    return ExpPoly(ctx, parts)
