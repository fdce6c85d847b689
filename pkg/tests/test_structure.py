from fractions import Fraction

import pytest

from symkit.errors import ClosureViolation
from symkit.field import GaussRat, ZERO
from symkit.linalg import ExactMatrix
from symkit.linop import LinDiffOp
from symkit.poly import ExpPoly
from symkit.structure import (
    SymmetrySpace,
    adjoint_matrix,
    ansatz_dimensions,
    structured_basis,
)
from symkit.casestudies import (
    evolution_space,
    free_schrodinger,
    heat_system,
    schrodinger_space,
)


def g(re, im=0):
    return GaussRat(Fraction(re), Fraction(im))


def order_one_basis(ctx):
    t = ExpPoly.variable(ctx, "t")
    x = ExpPoly.variable(ctx, "x")
    return [
        LinDiffOp.identity(ctx),
        LinDiffOp.derivative(ctx, "x"),
        LinDiffOp(ctx, {(0, 1): t, (0, 0): x.scale(GaussRat(Fraction(0), Fraction(-1, 2)))}),
    ]


@pytest.fixture
def v1_space():
    pde = free_schrodinger()
    basis = order_one_basis(pde.ctx)
    return SymmetrySpace("operator", pde.ctx, basis, [(1, 3)], ("t", "x"))


def test_adjoint_matrix_in_time(v1_space):
    m = adjoint_matrix(v1_space, "t")
    # d/dt sends the third element to the second, the rest to zero
    expected = ExactMatrix([[0, 0, 0], [0, 0, 1], [0, 0, 0]])
    assert m == expected


def test_adjoint_matrix_in_space(v1_space):
    m = adjoint_matrix(v1_space, "x")
    expected = ExactMatrix([
        [ZERO, ZERO, GaussRat(Fraction(0), Fraction(-1, 2))],
        [ZERO, ZERO, ZERO],
        [ZERO, ZERO, ZERO],
    ])
    assert m == expected


def test_adjoint_of_translation_free_basis():
    pde = free_schrodinger()
    ctx = pde.ctx
    basis = [LinDiffOp.identity(ctx), LinDiffOp.derivative(ctx, "x")]
    space = SymmetrySpace("operator", ctx, basis, [(1, 2)], ("t", "x"))
    assert adjoint_matrix(space, "t") == ExactMatrix.zeros(2, 2)
    assert adjoint_matrix(space, "x") == ExactMatrix.zeros(2, 2)


def test_closure_violation_witness():
    pde = free_schrodinger()
    ctx = pde.ctx
    t = ExpPoly.variable(ctx, "t")
    lone = [LinDiffOp(ctx, {(0, 1): t})]  # d/dt gives dx, not in the span
    with pytest.raises(ClosureViolation) as err:
        SymmetrySpace("operator", ctx, lone, [(1, 1)], ("t", "x"))
    assert err.value.element_index == 0
    assert err.value.residual == LinDiffOp.derivative(ctx, "x")


def test_adjoint_matrices_commute(v1_space):
    mt = adjoint_matrix(v1_space, "t")
    mx = adjoint_matrix(v1_space, "x")
    assert mt @ mx == mx @ mt


def test_char_poly_of_adjoints_is_nilpotent(v1_space):
    from symkit.linalg import UniPoly

    for name in ("t", "x"):
        p = adjoint_matrix(v1_space, name).char_poly()
        assert p == UniPoly([0, 0, 0, 1])  # z^3


def test_structured_basis_v1(v1_space):
    sb = structured_basis(v1_space)
    assert sb.rho == 1
    blk = sb.blocks[0]
    assert blk.dim == 3
    assert blk.eigenvalues == {"t": ZERO, "x": ZERO}
    assert blk.bounds == {"t": 2, "x": 2}
    # no exponential factor anywhere: all weights stay zero
    for el in blk.elements:
        for coeff in el.terms.values():
            assert all(not any(w) for w in coeff.parts)
    # coefficient objects carry no t or x dependence
    for obj in blk.coefficient_objects.values():
        for coeff in obj.terms.values():
            assert not coeff.depends_on("t") and not coeff.depends_on("x")


def test_structured_basis_translation_free_is_trivial():
    pde = free_schrodinger()
    ctx = pde.ctx
    basis = [LinDiffOp.identity(ctx), LinDiffOp.derivative(ctx, "x")]
    space = SymmetrySpace("operator", ctx, basis, [(1, 2)], ("t", "x"))
    sb = structured_basis(space)
    for blk in sb.blocks:
        assert blk.bounds == {"t": 1, "x": 1}
        assert blk.eigenvalues == {"t": ZERO, "x": ZERO}
        # C equals the block basis itself
        assert list(blk.base_vector) == list(blk.elements)


def test_structured_basis_exponential_eigenvector():
    pde = free_schrodinger()
    ctx = pde.ctx
    el = LinDiffOp(
        ctx, {(0, 1): ExpPoly.const(ctx, 1).exp_times({"t": g(2)})}
    )  # exp(2t) * d/dx
    space = SymmetrySpace("operator", ctx, [el], [(1, 1)], ("t", "x"))
    sb = structured_basis(space)
    blk = sb.blocks[0]
    assert blk.eigenvalues == {"t": g(2), "x": ZERO}
    assert blk.bounds == {"t": 1, "x": 1}


def test_structured_basis_exponential_with_nilpotent_part():
    """exp(2t)*dx and exp(2t)*t*dx form one block: lambda_t=2, k_t=2."""
    pde = free_schrodinger()
    ctx = pde.ctx
    lam = g(2)
    e1 = LinDiffOp(ctx, {(0, 1): ExpPoly.const(ctx, 1).exp_times({"t": lam})})
    e2 = LinDiffOp(ctx, {(0, 1): ExpPoly.variable(ctx, "t").exp_times({"t": lam})})
    space = SymmetrySpace("operator", ctx, [e1, e2], [(1, 2)], ("t", "x"))
    sb = structured_basis(space)
    assert sb.rho == 1
    blk = sb.blocks[0]
    assert blk.eigenvalues == {"t": lam, "x": ZERO}
    assert blk.bounds == {"t": 2, "x": 1}
    dx = LinDiffOp.derivative(ctx, "x")
    objects = blk.coefficient_objects
    assert objects[(0, (0, 0))] == dx and objects[(1, (1, 0))] == dx
    assert objects[(0, (1, 0))].is_zero and objects[(1, (0, 0))].is_zero


def test_structured_expansion_reproduces_and_differentiates(v1_space):
    sb = structured_basis(v1_space)
    blk = sb.blocks[0]
    # differentiating block elements reproduces the block restriction matrices
    sub = SymmetrySpace(
        "operator", v1_space.ctx, blk.elements, [(1, blk.dim)], ("t", "x")
    )
    for name in ("t", "x"):
        back = adjoint_matrix(sub, name)
        assert back == blk.restrictions[name]


def test_span_preservation_schrodinger_v2():
    space = schrodinger_space(2)
    sb = structured_basis(space)
    assert sum(blk.dim for blk in sb.blocks) == space.dim == 6


def test_ansatz_dimensions_schrodinger():
    space = schrodinger_space(2)
    rep1 = ansatz_dimensions(space, 1)
    assert rep1.v == 3
    assert sum(b[0] for b in rep1.blocks) == 3
    rep0 = ansatz_dimensions(space, 0)
    assert rep0.v == 1
    rep2 = ansatz_dimensions(space, 2)
    assert rep2.v == 6 and rep2.rho <= 6


def test_ansatz_dimensions_zero_space():
    pde = free_schrodinger()
    space = SymmetrySpace("operator", pde.ctx, [], [(0, 0)], ("t", "x"))
    rep = ansatz_dimensions(space, 0)
    assert rep.v == 0 and rep.rho == 0 and rep.blocks == ()


def test_filtration_build_and_at_order():
    space = schrodinger_space(2)
    assert [v for _, v in space.levels] == [1, 3, 6]
    sub = space.at_order(1)
    assert sub.dim == 3
    pde = free_schrodinger()
    for el in sub.elements:
        assert pde.is_symmetry(el)
        assert el.order <= 1


def test_build_rejects_non_nested():
    pde = free_schrodinger()
    ctx = pde.ctx
    bases = {
        0: [LinDiffOp.derivative(ctx, "x")],  # claims order 0 but means a break
        1: [LinDiffOp.identity(ctx)],
    }
    with pytest.raises(ValueError):
        SymmetrySpace.build("operator", ctx, bases, ("t", "x"))


def test_evolutionary_space_structure():
    sys_ = heat_system(6)
    space = evolution_space(sys_, 1, 1, 2)
    assert space.dim == 6
    sb = structured_basis(space)
    assert sum(blk.dim for blk in sb.blocks) == 6
    for blk in sb.blocks:
        assert blk.eigenvalues["y"] == ZERO  # polynomial space is nilpotent
        for obj in blk.coefficient_objects.values():
            assert not obj.depends_on("y")


def test_degree_bound_on_heat_space():
    sys_ = heat_system(6)
    space = evolution_space(sys_, 1, 1, 2)
    sb = structured_basis(space)
    for blk in sb.blocks:
        k = blk.bounds["y"]
        for el in blk.elements:
            assert el.degree_in("y") < k
