"""Algebra of linear differential operators with exponential-polynomial
coefficients: composition by the generalized Leibniz rule, commutators,
on-solution reduction against a first-order-in-time defining operator, and
the exact determining systems for operator symmetries.

Operators are kept in normal form sum(a_J(x) * D^J) with all derivatives to
the right of coefficients and no zero coefficients stored.
"""

from __future__ import annotations

import itertools
import logging
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import VariableMismatch
from .field import GaussRat, ONE, as_gauss
from .linalg import kernel_rows
from .poly import Context, ExpPoly, grlex_key, weight_key

log = logging.getLogger("symkit.linop")

DerivIndex = Tuple[int, ...]


class LinDiffOp:
    """sum over J of a_J(x) * D^J, with ExpPoly coefficients a_J."""

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: Context, terms: Optional[Dict[DerivIndex, ExpPoly]] = None):
        self.ctx = ctx
        m = ctx.nvars
        clean: Dict[DerivIndex, ExpPoly] = {}
        if terms:
            for J, coeff in terms.items():
                if len(J) != m or any(j < 0 for j in J):
                    raise ValueError("bad derivative multiindex")
                if coeff.ctx != ctx:
                    raise VariableMismatch("coefficient not in the operator context")
                if not coeff.is_zero:
                    clean[tuple(J)] = coeff
        self.terms = clean

    @classmethod
    def zero(cls, ctx: Context) -> "LinDiffOp":
        return cls(ctx)

    @classmethod
    def identity(cls, ctx: Context) -> "LinDiffOp":
        return cls(ctx, {(0,) * ctx.nvars: ExpPoly.const(ctx, 1)})

    @classmethod
    def function(cls, coeff: ExpPoly) -> "LinDiffOp":
        return cls(coeff.ctx, {(0,) * coeff.ctx.nvars: coeff})

    @classmethod
    def derivative(cls, ctx: Context, name: str, order: int = 1) -> "LinDiffOp":
        J = [0] * ctx.nvars
        J[ctx.index(name)] = order
        return cls(ctx, {tuple(J): ExpPoly.const(ctx, 1)})

    @classmethod
    def monomial(cls, ctx: Context, coeff: ExpPoly, J: DerivIndex) -> "LinDiffOp":
        return cls(ctx, {tuple(J): coeff})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def order(self) -> int:
        return max((sum(J) for J in self.terms), default=0)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LinDiffOp)
            and self.ctx == other.ctx
            and self.terms == other.terms
        )

    def __add__(self, other: "LinDiffOp") -> "LinDiffOp":
        if self.ctx != other.ctx:
            raise VariableMismatch("operators live in different contexts")
        out = dict(self.terms)
        for J, coeff in other.terms.items():
            acc = out.get(J)
            total = coeff if acc is None else acc + coeff
            if total.is_zero:
                out.pop(J, None)
            else:
                out[J] = total
        return LinDiffOp(self.ctx, out)

    def __neg__(self) -> "LinDiffOp":
        return LinDiffOp(self.ctx, {J: -c for J, c in self.terms.items()})

    def __sub__(self, other: "LinDiffOp") -> "LinDiffOp":
        return self + (-other)

    def scale(self, value) -> "LinDiffOp":
        c = as_gauss(value)
        if not c:
            return LinDiffOp(self.ctx)
        return LinDiffOp(self.ctx, {J: coeff.scale(c) for J, coeff in self.terms.items()})

    def scale_fn(self, fn: ExpPoly) -> "LinDiffOp":
        """Left-multiply by a function: coefficients get multiplied."""
        if fn.ctx != self.ctx:
            raise VariableMismatch("function not in the operator context")
        out: Dict[DerivIndex, ExpPoly] = {}
        for J, coeff in self.terms.items():
            prod = fn * coeff
            if not prod.is_zero:
                out[J] = prod
        return LinDiffOp(self.ctx, out)

    def partial(self, name: str) -> "LinDiffOp":
        """Coefficient-wise derivative: the adjoint action of a translation."""
        out: Dict[DerivIndex, ExpPoly] = {}
        for J, coeff in self.terms.items():
            d = coeff.partial(name)
            if not d.is_zero:
                out[J] = d
        return LinDiffOp(self.ctx, out)

    def flatten(self) -> Dict[tuple, GaussRat]:
        """Coordinates keyed by (J, weights, exponents)."""
        out = {}
        for J in sorted(self.terms, key=grlex_key):
            for w, exps, coeff in self.terms[J].coeff_extract():
                out[(J, w, exps)] = coeff
        return out

    def sorted_terms(self) -> List[Tuple[DerivIndex, ExpPoly]]:
        return sorted(self.terms.items(), key=lambda t: grlex_key(t[0]), reverse=True)

    def render(self) -> str:
        if self.is_zero:
            return "0"
        pieces = []
        for J, coeff in self.sorted_terms():
            dpart = "*".join(
                f"d{self.ctx.vars[i].name}" + (f"^{e}" if e > 1 else "")
                for i, e in enumerate(J)
                if e
            )
            cstr = coeff.render()
            needs_parens = ("+" in cstr) or (" - " in cstr) or cstr.startswith("-")
            if not dpart:
                pieces.append(f"({cstr})" if needs_parens and len(pieces) else cstr)
            elif cstr == "1":
                pieces.append(dpart)
            else:
                pieces.append(f"({cstr})*{dpart}" if needs_parens else f"{cstr}*{dpart}")
        return " + ".join(pieces)

    def to_json(self) -> list:
        return [
            [list(J), self.terms[J].to_json()]
            for J in sorted(self.terms, key=grlex_key)
        ]

    @classmethod
    def from_json(cls, ctx: Context, data: list) -> "LinDiffOp":
        terms = {}
        for J, coeff in data:
            terms[tuple(int(x) for x in J)] = ExpPoly.from_json(ctx, coeff)
        return cls(ctx, terms)

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"LinDiffOp({self})"


def _below(J: DerivIndex):
    """All multiindices K <= J componentwise."""
    return itertools.product(*(range(j + 1) for j in J))


def _multi_binom(J: DerivIndex, K: DerivIndex) -> int:
    out = 1
    for a, b in zip(J, K):
        out *= comb(a, b)
    return out


def compose(a: LinDiffOp, b: LinDiffOp) -> "LinDiffOp":
    """Operator product A o B in normal form, by the generalized Leibniz rule:

        D^J o f = sum_{K <= J} binom(J, K) * (D^{J-K} f) * D^K
    """
    if a.ctx != b.ctx:
        raise VariableMismatch("operators live in different contexts")
    ctx = a.ctx
    names = [v.name for v in ctx.vars]
    out: Dict[DerivIndex, ExpPoly] = {}
    for I_, ca in a.terms.items():
        for J, cb in b.terms.items():
            for K in _below(I_):
                shifted = cb
                for axis, count in enumerate(tuple(i - k for i, k in zip(I_, K))):
                    for _ in range(count):
                        shifted = shifted.partial(names[axis])
                if shifted.is_zero:
                    continue
                coeff = ca * shifted.scale(as_gauss(_multi_binom(I_, K)))
                key = tuple(k + j for k, j in zip(K, J))
                acc = out.get(key)
                total = coeff if acc is None else acc + coeff
                if total.is_zero:
                    out.pop(key, None)
                else:
                    out[key] = total
    return LinDiffOp(ctx, out)


def commutator(a: LinDiffOp, b: LinDiffOp) -> LinDiffOp:
    """[A, B] = A o B - B o A."""
    return compose(a, b) - compose(b, a)


class OperatorPde:
    """A linear PDE L u = 0 whose defining operator is first order in one axis.

    The evolution-axis derivative must occur exactly once, as a pure
    first-order term with a constant invertible coefficient, so that the
    axis derivative can be eliminated on solutions.
    """

    __slots__ = ("ctx", "L", "axis", "_subst")

    def __init__(self, L: LinDiffOp, evolution_axis: str):
        self.ctx = L.ctx
        self.L = L
        self.axis = self.ctx.index(evolution_axis)
        step = [0] * self.ctx.nvars
        step[self.axis] = 1
        step = tuple(step)
        lead = None
        for J, coeff in L.terms.items():
            if J[self.axis] == 0:
                continue
            if J != step:
                raise ValueError(
                    "defining operator must be first order in the evolution axis"
                )
            lead = coeff.constant_value()
            if lead is None or not lead:
                raise ValueError(
                    "evolution-axis coefficient must be a nonzero constant"
                )
        if lead is None:
            raise ValueError("defining operator does not involve the evolution axis")
        # on solutions: D_axis = -lead^{-1} (L - lead * D_axis)
        rest = L - LinDiffOp.monomial(self.ctx, ExpPoly.const(self.ctx, lead), step)
        self._subst = rest.scale(-lead.inv())

    @property
    def axis_name(self) -> str:
        return self.ctx.vars[self.axis].name

    def reduce(self, op: LinDiffOp) -> LinDiffOp:
        """Rewrite away every evolution-axis derivative using the equation."""
        while True:
            target = None
            for J in op.terms:
                if J[self.axis] >= 1:
                    key = (J[self.axis], grlex_key(J))
                    if target is None or key > target[1]:
                        target = (J, key)
            if target is None:
                return op
            J = target[0]
            coeff = op.terms[J]
            lower = list(J)
            lower[self.axis] -= 1
            rest_op = LinDiffOp.monomial(
                self.ctx, ExpPoly.const(self.ctx, 1), tuple(lower)
            )
            replacement = compose(rest_op, self._subst).scale_fn(coeff)
            op = (op - LinDiffOp.monomial(self.ctx, coeff, J)) + replacement

    def is_symmetry(self, op: LinDiffOp) -> bool:
        """Independent check: the reduced commutator with L vanishes."""
        return self.reduce(commutator(op, self.L)).is_zero


def operator_ansatz_monomials(
    pde: OperatorPde,
    order: int,
    caps: Sequence[int],
) -> List[Tuple[Tuple[int, ...], DerivIndex]]:
    """(polynomial exponents, derivative multiindex) pairs, canonically ordered.

    Derivatives range over the non-evolution axes up to total order `order`;
    polynomial exponents are capped per variable by `caps`.
    """
    ctx = pde.ctx
    m = ctx.nvars
    deriv_axes = [i for i in range(m) if i != pde.axis]
    columns = []
    for total in range(order + 1):
        for combo in itertools.combinations_with_replacement(deriv_axes, total):
            J = [0] * m
            for axis in combo:
                J[axis] += 1
            for exps in itertools.product(*(range(c + 1) for c in caps)):
                columns.append((tuple(exps), tuple(J)))
    columns.sort(key=lambda ce: (grlex_key(ce[1]), grlex_key(ce[0])))
    return columns


def operator_determining_solve(
    pde: OperatorPde,
    order: int,
    weights: Optional[Sequence[GaussRat]] = None,
    caps: Optional[Sequence[int]] = None,
    dim_bound: Optional[int] = None,
) -> List[LinDiffOp]:
    """Basis of operators R with [R, L] = 0 on solutions, found exactly.

    The ansatz is exp(weights . translations) times polynomial coefficients
    on derivatives up to `order`.  Per-variable degree caps default to
    dim_bound - 1, the generic bound when the caller knows the symmetry
    space dimension.  The empty list is a valid result.
    """
    ctx = pde.ctx
    if weights is None:
        w = ctx.zero_weights()
    else:
        w = tuple(as_gauss(x) for x in weights)
        if len(w) != ctx.ntrans:
            raise ValueError("one weight per translation variable required")
    if caps is None:
        if dim_bound is None:
            raise ValueError("either caps or dim_bound must be supplied")
        caps = [max(dim_bound - 1, 0)] * ctx.nvars
    caps = list(caps)
    if len(caps) == 1:
        caps = caps * ctx.nvars
    if len(caps) != ctx.nvars:
        raise ValueError("one degree cap per independent variable required")

    columns = operator_ansatz_monomials(pde, order, caps)
    log.info(
        "operator solve: order=%d caps=%s weights=%s columns=%d",
        order,
        caps,
        [str(x) for x in w],
        len(columns),
    )
    row_map: Dict[tuple, Dict[int, GaussRat]] = {}
    for col, (exps, J) in enumerate(columns):
        coeff = ExpPoly.monomial(ctx, ONE, exps, w)
        candidate = LinDiffOp.monomial(ctx, coeff, J)
        residual = pde.reduce(commutator(candidate, pde.L))
        for rJ, rcoeff in residual.terms.items():
            for rw, rexps, value in rcoeff.coeff_extract():
                row_map.setdefault((rJ, rw, rexps), {})[col] = value

    rows = [
        row_map[key]
        for key in sorted(
            row_map, key=lambda k: (grlex_key(k[0]), weight_key(k[1]), grlex_key(k[2]))
        )
    ]
    kernel = kernel_rows(rows, len(columns))
    basis = []
    for vec in kernel:
        op = LinDiffOp.zero(ctx)
        for col, value in vec.items():
            exps, J = columns[col]
            op = op + LinDiffOp.monomial(ctx, ExpPoly.monomial(ctx, value, exps, w), J)
        basis.append(op)
    return basis
