"""Independent sympy-based oracles used only by the test suite.

These re-derive total derivatives, prolongation coefficients and operator
commutators through sympy's symbolic engine, completely separately from the
package's own exact arithmetic, so agreement is meaningful evidence.
"""

import sympy

from symkit.field import GaussRat
from symkit.jet import JetContext
from symkit.poly import ExpPoly


def gauss_to_sympy(c: GaussRat):
    return sympy.Rational(c.re.numerator, c.re.denominator) + sympy.I * sympy.Rational(
        c.im.numerator, c.im.denominator
    )


def exppoly_to_sympy(p: ExpPoly, symbols):
    """Translate (no exponential parts) into a sympy expression."""
    expr = sympy.Integer(0)
    for w, exps, coeff in p.coeff_extract():
        assert not any(w), "oracle only handles weight-free polynomials"
        term = gauss_to_sympy(coeff)
        for idx, e in enumerate(exps):
            if e:
                term *= symbols[idx] ** e
        expr += term
    return sympy.expand(expr)


def jet_symbols(jctx: JetContext):
    return [sympy.Symbol(v.name) for v in jctx.ctx.vars]


def sympy_total_derivative(jctx: JetContext, expr, axis: int, symbols):
    """D_axis on a sympy expression over the jet coordinates."""
    out = sympy.diff(expr, symbols[jctx.ctx.index(jctx.axes[axis])])
    for idx, var in enumerate(jctx.ctx.vars):
        info = jctx.jet_info(idx)
        if info is None:
            continue
        partial = sympy.diff(expr, symbols[idx])
        if partial == 0:
            continue
        alpha, J = info
        J1 = list(J)
        J1[axis] += 1
        raised = symbols[jctx.jet_var_index(alpha, tuple(J1))]
        out += raised * partial
    return sympy.expand(out)
