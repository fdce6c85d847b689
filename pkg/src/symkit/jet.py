"""Jet-space calculus: total derivatives, prolongation, Lie brackets and
determining systems for evolutionary symmetries.

A `JetContext` materializes coordinates x_1..x_m and u_{alpha,J} for all
multiindices |J| <= max_order.  The order budget is a hard limit declared
up front: any operation that would need a jet variable beyond it raises
OrderOverflow instead of growing the context.
"""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import CapTooSmallWarning, NotSolvedForm, OrderOverflow, VariableMismatch
from .field import GaussRat, ONE, ZERO, as_gauss
from .linalg import kernel_rows
from .poly import Context, ExpPoly, Var, grlex_key

log = logging.getLogger("symkit.jet")

Multiindex = Tuple[int, ...]


def multiindices(total: int, m: int):
    """All m-tuples of non-negative integers summing to `total`, lex order."""
    if m == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in multiindices(total - head, m - 1):
            yield (head,) + tail


class JetContext:
    """Variable table for m axes, n unknowns and jets up to max_order."""

    __slots__ = ("axes", "unknowns", "max_order", "ctx", "_jet_index", "_translations")

    def __init__(
        self,
        axes: Sequence[str],
        unknowns: Sequence[str],
        max_order: int,
        translations: Sequence[str] = (),
    ):
        if not axes or not unknowns:
            raise ValueError("need at least one axis and one unknown")
        if max_order < 0:
            raise ValueError("max_order must be non-negative")
        self.axes = tuple(axes)
        self.unknowns = tuple(unknowns)
        self.max_order = max_order
        m = len(self.axes)
        variables: List[Var] = [Var(name) for name in self.axes]
        jet_index: Dict[Tuple[int, Multiindex], int] = {}
        for order in range(max_order + 1):
            for alpha in range(len(self.unknowns)):
                for J in multiindices(order, m):
                    name = self.jet_name(alpha, J)
                    kind = "dependent" if order == 0 else "jet"
                    jet_index[(alpha, J)] = len(variables)
                    variables.append(Var(name, kind, alpha, J))
        self.ctx = Context(variables, translations)
        self._jet_index = jet_index
        self._translations = tuple(translations)

    def jet_name(self, alpha: int, J: Multiindex) -> str:
        base = self.unknowns[alpha]
        if not any(J):
            return base
        suffix = "".join(axis * count for axis, count in zip(self.axes, J))
        return f"{base}_{suffix}"

    @property
    def m(self) -> int:
        return len(self.axes)

    @property
    def n(self) -> int:
        return len(self.unknowns)

    def axis_index(self, name: str) -> int:
        try:
            return self.axes.index(name)
        except ValueError:
            raise VariableMismatch(f"{name!r} is not an axis") from None

    def jet_var_index(self, alpha: int, J: Multiindex) -> int:
        try:
            return self._jet_index[(alpha, tuple(J))]
        except KeyError:
            raise OrderOverflow(
                f"jet variable of order {sum(J)} exceeds max_order={self.max_order}"
            ) from None

    def jet_info(self, var_index: int) -> Optional[Tuple[int, Multiindex]]:
        v = self.ctx.vars[var_index]
        if v.kind in ("dependent", "jet"):
            return (v.alpha, v.multiindex)
        return None

    def jet_poly(self, alpha: int, J: Multiindex) -> ExpPoly:
        return ExpPoly.variable(self.ctx, self.ctx.vars[self.jet_var_index(alpha, J)].name)

    def axis_poly(self, name: str) -> ExpPoly:
        self.axis_index(name)
        return ExpPoly.variable(self.ctx, name)

    def var(self, name: str) -> ExpPoly:
        return ExpPoly.variable(self.ctx, name)

    def const(self, value) -> ExpPoly:
        return ExpPoly.const(self.ctx, value)

    def with_max_order(self, max_order: int) -> "JetContext":
        return JetContext(self.axes, self.unknowns, max_order, self._translations)

    def __eq__(self, other):
        return isinstance(other, JetContext) and self.ctx == other.ctx

    def __hash__(self):
        return hash(self.ctx)

    def __repr__(self):
        return (
            f"JetContext(axes={self.axes}, unknowns={self.unknowns}, "
            f"max_order={self.max_order})"
        )


def _poly_jet_support(p: ExpPoly, jctx: JetContext) -> List[Tuple[int, Multiindex, str]]:
    """(alpha, J, name) for every jet coordinate the polynomial depends on."""
    out = []
    for idx in sorted(p.support() | p.weight_support()):
        info = jctx.jet_info(idx)
        if info is not None:
            out.append((info[0], info[1], jctx.ctx.vars[idx].name))
    return out


def jet_order(p: ExpPoly, jctx: JetContext) -> int:
    """Highest |J| among jet coordinates present; 0 if none."""
    return max((sum(J) for _, J, _ in _poly_jet_support(p, jctx)), default=0)


def jet_degree(p: ExpPoly, jctx: JetContext) -> int:
    """Total degree in the jet coordinates (unknowns and their derivatives)."""
    jet_idx = {
        i for i in range(p.ctx.nvars) if jctx.jet_info(i) is not None
    }
    best = -1
    for mp in p.parts.values():
        for exps in mp.terms:
            best = max(best, sum(e for i, e in enumerate(exps) if i in jet_idx))
    return best


def total_derivative(jctx: JetContext, p: ExpPoly, axis: int) -> ExpPoly:
    """D_axis p: the derivative treating u and its jets as functions of x."""
    if p.ctx != jctx.ctx:
        raise VariableMismatch("polynomial not in this jet context")
    axis_name = jctx.axes[axis]
    out = p.partial(axis_name)
    for alpha, J, name in _poly_jet_support(p, jctx):
        dp = p.partial(name)
        if dp.is_zero:
            continue
        J1 = list(J)
        J1[axis] += 1
        raised = jctx.jet_poly(alpha, tuple(J1))
        out = out + raised * dp
    return out


def total_derivative_multi(jctx: JetContext, p: ExpPoly, J: Multiindex) -> ExpPoly:
    out = p
    for axis, count in enumerate(J):
        for _ in range(count):
            out = total_derivative(jctx, out, axis)
    return out


@dataclass(frozen=True)
class GenVectorField:
    """Generalized vector field sum(xi_i d/dx_i) + sum(eta_alpha d/du_alpha)."""

    jctx: JetContext
    xi: Tuple[ExpPoly, ...]
    eta: Tuple[ExpPoly, ...]

    def __post_init__(self):
        if len(self.xi) != self.jctx.m or len(self.eta) != self.jctx.n:
            raise ValueError("coefficient counts do not match the context")
        for p in (*self.xi, *self.eta):
            if p.ctx != self.jctx.ctx:
                raise VariableMismatch("coefficient not in the field's context")

    @classmethod
    def evolutionary(cls, jctx: JetContext, *etas: ExpPoly) -> "GenVectorField":
        zero = ExpPoly.zero(jctx.ctx)
        return cls(jctx, (zero,) * jctx.m, tuple(etas))

    @classmethod
    def translation(cls, jctx: JetContext, axis: int) -> "GenVectorField":
        zero = ExpPoly.zero(jctx.ctx)
        xi = [zero] * jctx.m
        xi[axis] = ExpPoly.const(jctx.ctx, 1)
        return cls(jctx, tuple(xi), (zero,) * jctx.n)

    @property
    def order(self) -> int:
        """Actual highest jet order appearing in any coefficient (computed)."""
        return max(
            (jet_order(p, self.jctx) for p in (*self.xi, *self.eta)),
            default=0,
        )

    @property
    def is_zero(self) -> bool:
        return all(p.is_zero for p in (*self.xi, *self.eta))

    def __add__(self, other: "GenVectorField") -> "GenVectorField":
        if self.jctx != other.jctx:
            raise VariableMismatch("fields live in different contexts")
        return GenVectorField(
            self.jctx,
            tuple(a + b for a, b in zip(self.xi, other.xi)),
            tuple(a + b for a, b in zip(self.eta, other.eta)),
        )

    def scale(self, value) -> "GenVectorField":
        c = as_gauss(value)
        return GenVectorField(
            self.jctx,
            tuple(p.scale(c) for p in self.xi),
            tuple(p.scale(c) for p in self.eta),
        )

    def __sub__(self, other: "GenVectorField") -> "GenVectorField":
        return self + other.scale(-1)

    def characteristics(self) -> Tuple[ExpPoly, ...]:
        """chi_alpha = eta_alpha - sum_l xi_l * u_{alpha,l}."""
        out = []
        for alpha in range(self.jctx.n):
            chi = self.eta[alpha]
            for l in range(self.jctx.m):
                if self.xi[l].is_zero:
                    continue
                step = [0] * self.jctx.m
                step[l] = 1
                chi = chi - self.xi[l] * self.jctx.jet_poly(alpha, tuple(step))
            out.append(chi)
        return tuple(out)


class _ChiDerivatives:
    """Memoized D_J(chi_alpha) table for one field."""

    def __init__(self, field: GenVectorField):
        self.jctx = field.jctx
        self.cache: Dict[Tuple[int, Multiindex], ExpPoly] = {}
        for alpha, chi in enumerate(field.characteristics()):
            self.cache[(alpha, (0,) * field.jctx.m)] = chi

    def get(self, alpha: int, J: Multiindex) -> ExpPoly:
        got = self.cache.get((alpha, J))
        if got is not None:
            return got
        axis = next(i for i, j in enumerate(J) if j)
        lower = list(J)
        lower[axis] -= 1
        prev = self.get(alpha, tuple(lower))
        out = total_derivative(self.jctx, prev, axis)
        self.cache[(alpha, J)] = out
        return out


def pr_apply(field: GenVectorField, p: ExpPoly) -> ExpPoly:
    """Apply the prolonged field to a jet-space function, exactly."""
    jctx = field.jctx
    if p.ctx != jctx.ctx:
        raise VariableMismatch("argument not in the field's context")
    chi = _ChiDerivatives(field)
    out = ExpPoly.zero(jctx.ctx)
    for l in range(jctx.m):
        if not field.xi[l].is_zero:
            out = out + field.xi[l] * total_derivative(jctx, p, l)
    for alpha, J, name in _poly_jet_support(p, jctx):
        dp = p.partial(name)
        if dp.is_zero:
            continue
        out = out + chi.get(alpha, J) * dp
    return out


@dataclass(frozen=True)
class ProlongedField:
    """Coefficient table of a prolonged field up to a requested jet order."""

    field: GenVectorField
    up_to: int
    coeffs: Dict[Tuple[int, Multiindex], ExpPoly]

    def coefficient(self, alpha: int, J: Multiindex) -> ExpPoly:
        return self.coeffs[(alpha, tuple(J))]


def prolong(field: GenVectorField, up_to: int) -> ProlongedField:
    """Coefficient of d/du_{alpha,J} for every |J| <= up_to.

    The coefficient is D_J(chi_alpha) + sum_l xi_l u_{alpha,J+1_l}.
    """
    jctx = field.jctx
    chi = _ChiDerivatives(field)
    coeffs: Dict[Tuple[int, Multiindex], ExpPoly] = {}
    for order in range(up_to + 1):
        for alpha in range(jctx.n):
            for J in multiindices(order, jctx.m):
                value = chi.get(alpha, J)
                for l in range(jctx.m):
                    if field.xi[l].is_zero:
                        continue
                    J1 = list(J)
                    J1[l] += 1
                    value = value + field.xi[l] * jctx.jet_poly(alpha, tuple(J1))
                coeffs[(alpha, J)] = value
    return ProlongedField(field, up_to, coeffs)


def lie_bracket(q1: GenVectorField, q2: GenVectorField) -> GenVectorField:
    """[Q1, Q2]: coefficients pr Q1[c2] - pr Q2[c1], computed exactly."""
    if q1.jctx != q2.jctx:
        raise VariableMismatch("fields live in different contexts")
    xi = tuple(pr_apply(q1, b) - pr_apply(q2, a) for a, b in zip(q1.xi, q2.xi))
    eta = tuple(pr_apply(q1, b) - pr_apply(q2, a) for a, b in zip(q1.eta, q2.eta))
    return GenVectorField(q1.jctx, xi, eta)


class PdeSystem:
    """A PDE system F_nu = 0 with an optional solved form for on-solution work."""

    __slots__ = ("jctx", "equations", "solved")

    def __init__(
        self,
        jctx: JetContext,
        equations: Sequence[ExpPoly],
        solved: Optional[Dict[int, ExpPoly]] = None,
    ):
        self.jctx = jctx
        eqs = tuple(equations)
        if not eqs:
            raise ValueError("empty system")
        for F in eqs:
            if F.ctx != jctx.ctx:
                raise VariableMismatch("equation not in the system's context")
            if F.is_zero:
                raise ValueError("identically zero equation")
            if F.constant_value() is not None:
                raise ValueError("equation is a nonzero constant; degenerate system")
        self.equations = eqs
        solved = dict(solved or {})
        for var_index, rhs in solved.items():
            info = jctx.jet_info(var_index)
            if info is None or sum(info[1]) < 1:
                raise ValueError("solved form must designate a derivative coordinate")
            if rhs.ctx != jctx.ctx:
                raise VariableMismatch("solved-form right side not in context")
            for alpha, J, _ in _poly_jet_support(rhs, jctx):
                if alpha == info[0] and all(a >= b for a, b in zip(J, info[1])):
                    raise ValueError("solved-form right side contains eliminable jets")
        self.solved = solved

    @classmethod
    def evolution(
        cls, jctx: JetContext, rhs: ExpPoly, unknown: int = 0, axis: int = 0
    ) -> "PdeSystem":
        """u_t = rhs with t the given axis; rhs must be free of t-derivatives."""
        step = [0] * jctx.m
        step[axis] = 1
        lhs_var = jctx.jet_var_index(unknown, tuple(step))
        for alpha, J, name in _poly_jet_support(rhs, jctx):
            if J[axis]:
                raise ValueError(
                    f"evolution right side contains {name}, a derivative "
                    "along the evolution axis"
                )
        F = jctx.jet_poly(unknown, tuple(step)) - rhs
        return cls(jctx, [F], {lhs_var: rhs})

    @property
    def evolution_axis(self) -> Optional[int]:
        if len(self.solved) != 1:
            return None
        (var_index, _), = self.solved.items()
        _, J = self.jctx.jet_info(var_index)
        if sum(J) != 1:
            return None
        return J.index(1)

    def order(self) -> int:
        return max(jet_order(F, self.jctx) for F in self.equations)


def reduce_on_solutions(sys: PdeSystem, p: ExpPoly) -> ExpPoly:
    """Substitute away all jets implied by the solved form, to a fixpoint."""
    jctx = sys.jctx
    rules = [
        (jctx.jet_info(v)[0], jctx.jet_info(v)[1], rhs) for v, rhs in sys.solved.items()
    ]
    derivative_cache: Dict[Tuple[int, Multiindex], ExpPoly] = {}

    def rule_derivative(rule_idx: int, K: Multiindex) -> ExpPoly:
        got = derivative_cache.get((rule_idx, K))
        if got is not None:
            return got
        if not any(K):
            out = rules[rule_idx][2]
        else:
            axis = next(i for i, k in enumerate(K) if k)
            lower = list(K)
            lower[axis] -= 1
            prev = rule_derivative(rule_idx, tuple(lower))
            try:
                out = total_derivative(jctx, prev, axis)
            except OrderOverflow as exc:
                raise NotSolvedForm(
                    "elimination needs jet variables beyond max_order"
                ) from exc
        derivative_cache[(rule_idx, K)] = out
        return out

    budget = (jctx.ctx.nvars + 1) ** 2
    while True:
        target = None
        for alpha, J, name in _poly_jet_support(p, jctx):
            for rule_idx, (r_alpha, J0, _) in enumerate(rules):
                if alpha == r_alpha and all(a >= b for a, b in zip(J, J0)):
                    key = grlex_key(J)
                    if target is None or key > target[3]:
                        target = (rule_idx, J, name, key)
        if target is None:
            return p
        budget -= 1
        if budget < 0:
            raise NotSolvedForm("on-solution elimination did not terminate")
        rule_idx, J, name, _ = target
        K = tuple(a - b for a, b in zip(J, rules[rule_idx][1]))
        p = p.substitute({name: rule_derivative(rule_idx, K)})


def apply_on_solutions(field: GenVectorField, sys: PdeSystem) -> List[ExpPoly]:
    """Residuals of the symmetry condition: pr Q[F_nu] reduced on solutions."""
    if not sys.solved:
        raise NotSolvedForm("system has no solved form to reduce with")
    return [reduce_on_solutions(sys, pr_apply(field, F)) for F in sys.equations]


def is_symmetry(field: GenVectorField, sys: PdeSystem) -> bool:
    return all(r.is_zero for r in apply_on_solutions(field, sys))


# ---------------------------------------------------------------------------
# determining systems for evolutionary characteristics
# ---------------------------------------------------------------------------

def evolution_ansatz_monomials(
    sys: PdeSystem,
    order_cap: int,
    jet_degree_cap: int,
    poly_degree_cap: int,
) -> List[ExpPoly]:
    """Ansatz monomials y^j t^k (jet monomial), canonically ordered."""
    jctx = sys.jctx
    if jctx.m != 2:
        raise ValueError("evolution search expects exactly two axes")
    axis = sys.evolution_axis
    if axis is None:
        raise ValueError("system is not in solved evolution form")
    spatial = 1 - axis
    (var_index, _), = sys.solved.items()
    unknown = jctx.jet_info(var_index)[0]

    jet_vars = []
    for l in range(order_cap + 1):
        J = [0, 0]
        J[spatial] = l
        jet_vars.append(jctx.jet_var_index(unknown, tuple(J)))

    monomials: List[ExpPoly] = []
    t_name = jctx.axes[axis]
    y_name = jctx.axes[spatial]
    for deg in range(jet_degree_cap + 1):
        for combo in itertools.combinations_with_replacement(jet_vars, deg):
            for k in range(poly_degree_cap + 1):
                for j in range(poly_degree_cap + 1):
                    exps = [0] * jctx.ctx.nvars
                    for v in combo:
                        exps[v] += 1
                    exps[jctx.ctx.index(t_name)] = k
                    exps[jctx.ctx.index(y_name)] = j
                    monomials.append(tuple(exps))
    monomials.sort(key=grlex_key)
    return [ExpPoly.monomial(jctx.ctx, ONE, exps) for exps in monomials]


def evolution_determining_solve(
    sys: PdeSystem,
    order_cap: int,
    jet_degree_cap: int,
    poly_degree_cap: int,
    lam: GaussRat = ZERO,
) -> List[ExpPoly]:
    """Basis of characteristics eta with pr Q[F] = 0 on solutions.

    The ansatz is exp(lam*y) times polynomials in t, y and the spatial jets
    up to the given caps; the symmetry condition is linear in eta for any
    fixed right side, so residuals of the ansatz monomials assemble into an
    exact homogeneous system whose canonical nullspace is returned.
    """
    jctx = sys.jctx
    lam = as_gauss(lam)
    axis = sys.evolution_axis
    if axis is None:
        raise ValueError("system is not in solved evolution form")
    spatial = 1 - axis
    y_name = jctx.axes[spatial]
    (var_index, rhs), = sys.solved.items()
    d = jet_order(rhs, jctx)
    if jctx.max_order < order_cap + d:
        raise OrderOverflow(
            f"need max_order >= {order_cap + d} for an order-{order_cap} search"
        )
    if (
        d > order_cap
        or jet_degree(rhs, jctx) > jet_degree_cap
        or rhs.degree_in(jctx.axes[axis]) > poly_degree_cap
        or rhs.degree_in(y_name) > poly_degree_cap
    ):
        warnings.warn(
            "the equation's own flow does not fit the search caps",
            CapTooSmallWarning,
            stacklevel=2,
        )

    monomials = evolution_ansatz_monomials(sys, order_cap, jet_degree_cap, poly_degree_cap)
    if lam:
        monomials = [mono.exp_times({y_name: lam}) for mono in monomials]

    log.info("evolution solve: %d ansatz monomials", len(monomials))
    row_map: Dict[tuple, Dict[int, GaussRat]] = {}
    for col, mono in enumerate(monomials):
        field = GenVectorField.evolutionary(jctx, mono)
        residual = apply_on_solutions(field, sys)[0]
        for w, exps, coeff in residual.coeff_extract():
            row_map.setdefault((w, exps), {})[col] = coeff

    rows = [row_map[key] for key in sorted(row_map, key=_row_key)]
    kernel = kernel_rows(rows, len(monomials))
    basis = []
    for vec in kernel:
        eta = ExpPoly.zero(jctx.ctx)
        for col, coeff in vec.items():
            eta = eta + monomials[col].scale(coeff)
        basis.append(eta)
    return basis


def _row_key(key):
    w, exps = key
    return (tuple(x.sort_key() for x in w), grlex_key(exps))
