"""Self-contained case studies.

Two independent routes to the symmetry operators of the 1+1 free
Schroedinger equation (a triangular recurrence solved by exact integration,
and the generic ansatz-nullspace solver), their cross-validation, a finite
scan over nonzero exponential weights, and the evolutionary-symmetry search
for second-order evolution equations such as the heat equation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import SpanMismatch
from .field import GaussRat, I, ONE, ZERO, as_gauss
from .jet import (
    GenVectorField,
    JetContext,
    PdeSystem,
    apply_on_solutions,
    evolution_determining_solve,
    jet_order,
)
from .linalg import rref_rows
from .linop import LinDiffOp, OperatorPde, compose, operator_determining_solve
from .poly import Context, ExpPoly, Var
from .structure import StructuredBasis, SymmetrySpace, structured_basis

log = logging.getLogger("symkit.casestudies")


def schrodinger_dimension(q: int) -> int:
    """Symmetry-operator space dimension at order q: (q+1)(q+2)/2."""
    return (q + 1) * (q + 2) // 2


def free_schrodinger() -> OperatorPde:
    """i d/dt + d^2/dx^2 on one space axis; both t and x carry weights."""
    ctx = Context([Var("t"), Var("x")], translations=("t", "x"))
    L = LinDiffOp(
        ctx,
        {
            (1, 0): ExpPoly.const(ctx, I),
            (0, 2): ExpPoly.const(ctx, 1),
        },
    )
    return OperatorPde(L, "t")


# Fixed sample grid of nonzero weight pairs used to exhibit that only the
# zero weights admit symmetry operators.  A finite scan is evidence, not a
# proof; the pairs cover +-1, +-i and 1+i in both slots.
NONZERO_WEIGHT_GRID: Tuple[Tuple[GaussRat, GaussRat], ...] = (
    (ONE, ZERO),
    (-ONE, ZERO),
    (ZERO, ONE),
    (ZERO, -ONE),
    (I, ZERO),
    (ZERO, I),
    (ONE, ONE),
    (ONE + I, -I),
)

# Nonzero exponential weights sampled by the evolution case study.
EVOLUTION_LAMBDA_SAMPLES: Tuple[GaussRat, ...] = (ONE, -ONE, I)


# ---------------------------------------------------------------------------
# symmetrized coefficient form h_j <-> plain operator form
# ---------------------------------------------------------------------------

def _momentum(ctx: Context) -> LinDiffOp:
    return LinDiffOp.derivative(ctx, "x").scale(I)


def nest_with_momentum(h: ExpPoly, times: int) -> LinDiffOp:
    """{...{h, p}, ..., p} with `times` anticommutators against p = i*d/dx."""
    ctx = h.ctx
    p = _momentum(ctx)
    op = LinDiffOp.function(h)
    for _ in range(times):
        op = compose(op, p) + compose(p, op)
    return op


def h_to_operator(hs: Sequence[ExpPoly]) -> LinDiffOp:
    """Assemble sum_j {...{h_j, p},...,p} into plain normal form."""
    out = LinDiffOp.zero(hs[0].ctx)
    for j, h in enumerate(hs):
        out = out + nest_with_momentum(h, j)
    return out


def operator_to_h(op: LinDiffOp) -> List[ExpPoly]:
    """Recover the symmetrized coefficients h_j of a d/dx-polynomial operator."""
    ctx = op.ctx
    x_axis = ctx.index("x")
    q = 0
    for J in op.terms:
        for i, e in enumerate(J):
            if e and i != x_axis:
                raise ValueError("operator involves derivatives other than d/dx")
        q = max(q, J[x_axis])
    hs: List[ExpPoly] = [ExpPoly.zero(ctx) for _ in range(q + 1)]
    rest = op
    # the top coefficient of nest_with_momentum(h, j) is (2i)^j * h
    for j in range(q, -1, -1):
        Jtop = [0] * ctx.nvars
        Jtop[x_axis] = j
        coeff = rest.terms.get(tuple(Jtop))
        if coeff is None or coeff.is_zero:
            continue
        scale = ((I + I) ** j).inv()
        h = coeff.scale(scale)
        hs[j] = h
        rest = rest - nest_with_momentum(h, j)
    if not rest.is_zero:
        raise ArithmeticError("h-form recovery left a remainder")
    return hs


# ---------------------------------------------------------------------------
# route 1: the triangular recurrence, solved by exact integration
# ---------------------------------------------------------------------------

@dataclass
class SchrodingerReport:
    """Basis of order-q symmetry operators with their h-form bookkeeping."""

    q: int
    dimension: int
    basis: Tuple[LinDiffOp, ...]
    h_tables: Tuple[Tuple[ExpPoly, ...], ...]
    bidegrees: Tuple[Tuple[Tuple[int, int], ...], ...]

    def validate(self):
        if self.dimension != schrodinger_dimension(self.q):
            raise ArithmeticError(
                f"dimension {self.dimension} != {schrodinger_dimension(self.q)}"
            )
        for hs_degrees in self.bidegrees:
            for j, (deg_t, deg_x) in enumerate(hs_degrees):
                if deg_t > j or deg_x > self.q - j:
                    raise ArithmeticError(
                        f"bidegree bound violated for h_{j}: ({deg_t}, {deg_x})"
                    )


def solve_recurrence(q: int) -> SchrodingerReport:
    """Solve dh_j/dt = dh_{j-1}/dx, dh_0/dt = 0, dh_q/dx = 0 exactly.

    The general polynomial solution is parametrized by the x-polynomials
    phi_j = h_j(x, t=0) with deg phi_j <= q - j; propagating upward gives
    h_i = sum_r t^r/r! * d^r/dx^r phi_{i-r}.  Free constants are enumerated
    in (j, l) graded order, which labels the basis deterministically.
    """
    if q < 0:
        raise ValueError("q must be non-negative")
    pde = free_schrodinger()
    ctx = pde.ctx
    basis = []
    h_tables = []
    bidegrees = []
    for j in range(q + 1):
        for l in range(q - j + 1):
            hs = []
            for i in range(q + 1):
                r = i - j
                if r < 0 or r > l:
                    hs.append(ExpPoly.zero(ctx))
                    continue
                # t^r/r! * d^r/dx^r (x^l) = t^r/r! * l!/(l-r)! * x^(l-r)
                fall = 1
                for step in range(r):
                    fall *= l - step
                fact = 1
                for step in range(2, r + 1):
                    fact *= step
                coeff = GaussRat(Fraction(fall, fact))
                exps = [0] * ctx.nvars
                exps[ctx.index("t")] = r
                exps[ctx.index("x")] = l - r
                hs.append(ExpPoly.monomial(ctx, coeff, tuple(exps)))
            basis.append(h_to_operator(hs))
            h_tables.append(tuple(hs))
            bidegrees.append(
                tuple(
                    (max(h.degree_in("t"), 0), max(h.degree_in("x"), 0)) for h in hs
                )
            )
    report = SchrodingerReport(
        q=q,
        dimension=len(basis),
        basis=tuple(basis),
        h_tables=tuple(h_tables),
        bidegrees=tuple(bidegrees),
    )
    report.validate()
    return report


# ---------------------------------------------------------------------------
# route 2: generic ansatz-nullspace solve, and the cross-validation
# ---------------------------------------------------------------------------

def ansatz_route(
    q: int, weights: Optional[Sequence[GaussRat]] = None
) -> List[LinDiffOp]:
    """Symmetry operators of order <= q from the generic determining solver."""
    pde = free_schrodinger()
    return operator_determining_solve(
        pde, q, weights=weights, dim_bound=schrodinger_dimension(q)
    )


@dataclass
class CrossReport:
    q: int
    dimension: int
    recurrence_dimension: int
    ansatz_dimension: int
    spans_agree: bool
    bidegrees_ok: bool


def _span_rows(ops: Sequence[LinDiffOp]):
    keys = set()
    flats = [op.flatten() for op in ops]
    for f in flats:
        keys.update(f)
    order = sorted(
        keys, key=lambda k: ((sum(k[0]), k[0]), tuple(x.sort_key() for x in k[1]), (sum(k[2]), k[2]))
    )
    pos = {k: i for i, k in enumerate(order)}
    return [{pos[k]: v for k, v in f.items()} for f in flats]


def spans_equal(a: Sequence[LinDiffOp], b: Sequence[LinDiffOp]) -> bool:
    rows = _span_rows(list(a) + list(b))
    ra = rref_rows(rows[: len(a)])
    rb = rref_rows(rows[len(a):])
    return ra == rb


def cross_validate(q: int) -> CrossReport:
    """Check that the recurrence route and the ansatz route span the same space."""
    rec = solve_recurrence(q)
    ans = ansatz_route(q)
    pde = free_schrodinger()
    for op in ans:
        if not pde.is_symmetry(op):
            raise SpanMismatch("ansatz route returned a non-symmetry", witness=op)
    for op in rec.basis:
        if not pde.is_symmetry(op):
            raise SpanMismatch("recurrence route returned a non-symmetry", witness=op)
    if len(ans) != rec.dimension:
        raise SpanMismatch(
            f"route dimensions differ at q={q}: {rec.dimension} vs {len(ans)}"
        )
    if not spans_equal(rec.basis, ans):
        witness = next(
            (op for op in ans if not _in_span(rec.basis, op)),
            None,
        )
        raise SpanMismatch(f"routes span different spaces at q={q}", witness=witness)
    bidegrees_ok = True
    for op in ans:
        for j, h in enumerate(operator_to_h(op)):
            if h.degree_in("t") > j or h.degree_in("x") > q - j:
                bidegrees_ok = False
    return CrossReport(
        q=q,
        dimension=rec.dimension,
        recurrence_dimension=rec.dimension,
        ansatz_dimension=len(ans),
        spans_agree=True,
        bidegrees_ok=bidegrees_ok,
    )


def _in_span(ops: Sequence[LinDiffOp], op: LinDiffOp) -> bool:
    rows = _span_rows(list(ops) + [op])
    return len(rref_rows(rows)) == len(rref_rows(rows[:-1]))


def weight_scan(
    orders: Sequence[int] = (1, 2, 3),
    grid: Sequence[Tuple[GaussRat, GaussRat]] = NONZERO_WEIGHT_GRID,
) -> Dict[Tuple[int, Tuple[GaussRat, GaussRat]], int]:
    """Dimensions found at nonzero weight pairs (expected all zero)."""
    out = {}
    for q in orders:
        for weights in grid:
            basis = ansatz_route(q, weights=weights)
            out[(q, tuple(weights))] = len(basis)
    return out


def schrodinger_space(qmax: int) -> SymmetrySpace:
    """Filtration-adapted operator symmetry space for orders 0..qmax."""
    bases = {q: ansatz_route(q) for q in range(qmax + 1)}
    pde = free_schrodinger()
    return SymmetrySpace.build("operator", pde.ctx, bases, ("t", "x"))


def schrodinger_structure(qmax: int) -> StructuredBasis:
    return structured_basis(schrodinger_space(qmax))


# ---------------------------------------------------------------------------
# evolution equations: the heat equation search
# ---------------------------------------------------------------------------

def heat_system(max_order: int = 6) -> PdeSystem:
    """u_t = u_yy on axes (t, y), with y carrying exponential weights."""
    jctx = JetContext(("t", "y"), ("u",), max_order, translations=("y",))
    return PdeSystem.evolution(jctx, jctx.jet_poly(0, (0, 2)))


@dataclass
class EvolutionReport:
    """Search results per exponential weight for an evolution equation."""

    q: int
    jet_degree_cap: int
    poly_degree_cap: int
    bases: Dict[GaussRat, Tuple[ExpPoly, ...]]
    residuals_zero: bool
    nonzero_weights_empty: bool
    constant_leading_top_order: Dict[GaussRat, bool]
    max_explicit_degree: int

    def basis_at(self, lam: GaussRat) -> Tuple[ExpPoly, ...]:
        return self.bases[as_gauss(lam)]


def evolution_case(
    sys: PdeSystem,
    q: int,
    jet_degree_cap: int,
    poly_degree_cap: int,
    lambdas: Sequence[GaussRat] = EVOLUTION_LAMBDA_SAMPLES,
) -> EvolutionReport:
    """Run the characteristic search at weight 0 and at sampled nonzero weights.

    Each returned characteristic is re-verified with the independent
    on-solution residual oracle.  For order q >= 2 the report also records
    whether any nonzero-weight characteristic of full order has a constant
    top-jet coefficient (none should, since the right side carries no
    explicit spatial dependence).
    """
    jctx = sys.jctx
    spatial = 1 - sys.evolution_axis
    y_name = jctx.axes[spatial]
    all_lams = [ZERO] + [as_gauss(x) for x in lambdas]
    bases: Dict[GaussRat, Tuple[ExpPoly, ...]] = {}
    residuals_zero = True
    constant_leading: Dict[GaussRat, bool] = {}
    max_explicit = 0
    for lam in all_lams:
        basis = evolution_determining_solve(sys, q, jet_degree_cap, poly_degree_cap, lam)
        bases[lam] = tuple(basis)
        for eta in basis:
            field_ = GenVectorField.evolutionary(jctx, eta)
            if any(not r.is_zero for r in apply_on_solutions(field_, sys)):
                residuals_zero = False
            max_explicit = max(max_explicit, eta.degree_in(y_name))
        if lam:
            top = [0, 0]
            top[spatial] = q
            top_name = jctx.jet_name(0, tuple(top))
            found_constant = False
            for eta in basis:
                if jet_order(eta, jctx) != q:
                    continue
                lead = eta.partial(top_name)
                value = lead.constant_value()
                if value is not None and value:
                    found_constant = True
            constant_leading[lam] = found_constant
    nonzero_empty = all(not bases[lam] for lam in all_lams if lam)
    return EvolutionReport(
        q=q,
        jet_degree_cap=jet_degree_cap,
        poly_degree_cap=poly_degree_cap,
        bases=bases,
        residuals_zero=residuals_zero,
        nonzero_weights_empty=nonzero_empty,
        constant_leading_top_order=constant_leading,
        max_explicit_degree=max_explicit,
    )


def evolution_space(
    sys: PdeSystem, qmax: int, jet_degree_cap: int, poly_degree_cap: int
) -> SymmetrySpace:
    """Filtration-adapted evolutionary symmetry space at weight zero."""
    bases = {
        q: evolution_determining_solve(sys, q, jet_degree_cap, poly_degree_cap, ZERO)
        for q in range(qmax + 1)
    }
    spatial = 1 - sys.evolution_axis
    return SymmetrySpace.build(
        "evolutionary", sys.jctx.ctx, bases, (sys.jctx.axes[spatial],)
    )
