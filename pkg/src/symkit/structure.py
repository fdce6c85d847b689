"""Translation structure of finite-dimensional symmetry spaces.

Given an ordered basis of symmetries (operators or evolutionary
characteristics) that is closed under partial differentiation by designated
translation variables, this module builds the matrices of those
differentiations, decomposes the commuting family into common primary
components, and rewrites each block basis in the exponential-polynomial
normal form

    Q_l = exp(sum_s lambda_s z_s) * sum_j z^j * C_{l,j}

with the C coefficient objects free of the translation variables and the
z-degrees bounded by the nilpotency indices.  Every step is verified
exactly: commutation of the matrices, span preservation, the degree bound,
translation-freeness of the C objects, and the differential identity
d/dz R = G R on the structured basis.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .errors import ClosureViolation, VariableMismatch
from .field import GaussRat, ONE, ZERO
from .linalg import (
    Block,
    BlockDecomposition,
    ExactMatrix,
    block_exp,
    common_decompose,
    rref_rows,
    solve_exact,
)
from .linop import LinDiffOp
from .poly import Context, ExpPoly, grlex_key, weight_key

log = logging.getLogger("symkit.structure")

Element = Union[ExpPoly, LinDiffOp]


# ---------------------------------------------------------------------------
# element helpers: ExpPoly characteristics and LinDiffOp operators share the
# flatten / partial surface; multiplication by a function differs.
# ---------------------------------------------------------------------------

def _el_ctx(el: Element) -> Context:
    return el.ctx


def _el_scale_fn(el: Element, fn: ExpPoly) -> Element:
    if isinstance(el, LinDiffOp):
        return el.scale_fn(fn)
    return fn * el


def _el_key_sort(kind: str):
    if kind == "operator":
        return lambda key: (grlex_key(key[0]), weight_key(key[1]), grlex_key(key[2]))
    return lambda key: (weight_key(key[0]), grlex_key(key[1]))


def _el_unflatten(kind: str, ctx: Context, entries: Dict[tuple, GaussRat]) -> Element:
    if kind == "operator":
        terms: Dict[tuple, list] = {}
        for (J, w, exps), coeff in entries.items():
            terms.setdefault(J, []).append((w, exps, coeff))
        return LinDiffOp(
            ctx, {J: ExpPoly.reconstruct(ctx, triples) for J, triples in terms.items()}
        )
    return ExpPoly.reconstruct(ctx, [(w, e, c) for (w, e), c in entries.items()])


def _el_degree_in(el: Element, name: str) -> int:
    if isinstance(el, LinDiffOp):
        return max((c.degree_in(name) for c in el.terms.values()), default=-1)
    return el.degree_in(name)


def _el_translation_free(el: Element, names: Sequence[str]) -> bool:
    coeffs = el.terms.values() if isinstance(el, LinDiffOp) else [el]
    for c in coeffs:
        for name in names:
            if c.depends_on(name):
                return False
    return True


# ---------------------------------------------------------------------------
# symmetry spaces
# ---------------------------------------------------------------------------

class SymmetrySpace:
    """Ordered, filtration-adapted basis of a finite-dimensional symmetry space.

    The basis is canonical: per order level it is the unique RREF of the
    supplied spanning sets in coefficient coordinates, and the first v_q
    elements span the order-q sublevel.  Construction verifies linear
    independence, nesting of the levels, and closure under the translation
    derivatives (raising ClosureViolation with a witness otherwise).
    """

    def __init__(
        self,
        kind: str,
        ctx: Context,
        elements: Sequence[Element],
        levels: Sequence[Tuple[int, int]],
        translations: Sequence[str],
        _adjoints: Optional[Dict[str, ExactMatrix]] = None,
    ):
        if kind not in ("operator", "evolutionary"):
            raise ValueError("kind must be 'operator' or 'evolutionary'")
        self.kind = kind
        self.ctx = ctx
        self.elements: Tuple[Element, ...] = tuple(elements)
        self.levels: Tuple[Tuple[int, int], ...] = tuple(levels)
        self.translations: Tuple[str, ...] = tuple(translations)
        for name in self.translations:
            if ctx.slot(ctx.index(name)) is None:
                raise VariableMismatch(
                    f"translation variable {name!r} must carry exponential weights"
                )
        self._adjoints = _adjoints if _adjoints is not None else {}
        if self.elements:
            term_order = self._term_order()
            rows = [_entries_to_row(el.flatten(), term_order) for el in self.elements]
            if len(rref_rows(rows)) != len(self.elements):
                raise ValueError("basis elements are linearly dependent")
        if _adjoints is None:
            for name in self.translations:
                self._adjoints[name] = self._compute_adjoint(name)

    @classmethod
    def build(
        cls,
        kind: str,
        ctx: Context,
        bases_per_order: Dict[int, Sequence[Element]],
        translations: Sequence[str],
    ) -> "SymmetrySpace":
        """Assemble the adapted canonical basis from cumulative per-order bases."""
        orders = sorted(bases_per_order)
        key_set = set()
        for els in bases_per_order.values():
            for el in els:
                key_set.update(el.flatten().keys())
        term_order = sorted(key_set, key=_el_key_sort(kind))
        term_pos = {key: i for i, key in enumerate(term_order)}

        chosen_rows: List[dict] = []
        chosen_pivots: set = set()
        levels = []
        prev_rref: List[dict] = []
        for q in orders:
            rows = [
                {term_pos[k]: v for k, v in el.flatten().items()}
                for el in bases_per_order[q]
            ]
            level_rref = rref_rows(rows)
            if prev_rref:
                combined = rref_rows(prev_rref + level_rref)
                if len(combined) != len(level_rref):
                    raise ValueError(f"order filtration is not nested at q={q}")
            for row in level_rref:
                p = min(row) if row else None
                if p is not None and p not in chosen_pivots:
                    chosen_pivots.add(p)
                    chosen_rows.append(row)
            levels.append((q, len(chosen_rows)))
            prev_rref = level_rref

        elements = [
            _el_unflatten(
                kind,
                ctx,
                {term_order[i]: v for i, v in row.items()},
            )
            for row in chosen_rows
        ]
        return cls(kind, ctx, elements, levels, translations)

    @property
    def dim(self) -> int:
        return len(self.elements)

    def v(self, q: int) -> int:
        """Dimension of the order-q sublevel."""
        out = 0
        for level_q, count in self.levels:
            if level_q <= q:
                out = count
        return out

    def at_order(self, q: int) -> "SymmetrySpace":
        count = self.v(q)
        levels = [(lq, c) for lq, c in self.levels if lq <= q]
        return SymmetrySpace(
            self.kind, self.ctx, self.elements[:count], levels, self.translations
        )

    def _term_order(self, extra_keys=()) -> List[tuple]:
        keys = set(extra_keys)
        for el in self.elements:
            keys.update(el.flatten().keys())
        return sorted(keys, key=_el_key_sort(self.kind))

    def _compute_adjoint(self, name: str) -> ExactMatrix:
        images = [el.partial(name) for el in self.elements]
        extra = set()
        for img in images:
            extra.update(img.flatten().keys())
        term_order = self._term_order(extra)
        nrows = len(term_order)
        pos = {key: i for i, key in enumerate(term_order)}
        basis_cols = [
            _entries_to_vec(el.flatten(), pos, nrows) for el in self.elements
        ]
        image_cols = [_entries_to_vec(img.flatten(), pos, nrows) for img in images]
        B = ExactMatrix.from_columns(basis_cols, nrows)
        T = ExactMatrix.from_columns(image_cols, nrows)
        coords, bad = solve_exact(B, T)
        if bad:
            j = bad[0]
            residual = _residual_against(self, images[j], term_order)
            raise ClosureViolation(j, residual)
        return coords

    def adjoint_matrix(self, name: str) -> ExactMatrix:
        """Matrix whose column j holds the basis coordinates of d(basis_j)/dz."""
        if name not in self._adjoints:
            self._adjoints[name] = self._compute_adjoint(name)
        return self._adjoints[name]

    def coordinates_of(self, el: Element) -> Tuple[GaussRat, ...]:
        """Exact coordinates of an element in the basis; error if outside."""
        extra = set(el.flatten().keys())
        term_order = self._term_order(extra)
        nrows = len(term_order)
        pos = {key: i for i, key in enumerate(term_order)}
        B = ExactMatrix.from_columns(
            [_entries_to_vec(e.flatten(), pos, nrows) for e in self.elements], nrows
        )
        T = ExactMatrix.from_columns([_entries_to_vec(el.flatten(), pos, nrows)], nrows)
        coords, bad = solve_exact(B, T)
        if bad:
            raise ValueError("element is not in the span of the basis")
        return coords.column(0)

    def contains(self, el: Element) -> bool:
        term_order = self._term_order([*el.flatten()])
        rows = [_entries_to_row(e.flatten(), term_order) for e in self.elements]
        target = _entries_to_row(el.flatten(), term_order)
        return len(rref_rows(rows + [target])) == len(rref_rows(rows))


def _entries_to_row(entries: Dict[tuple, GaussRat], term_order: List[tuple]) -> dict:
    pos = {key: i for i, key in enumerate(term_order)}
    return {pos[k]: v for k, v in entries.items()}


def _entries_to_vec(entries: Dict[tuple, GaussRat], pos: Dict[tuple, int], n: int):
    out = [ZERO] * n
    for k, v in entries.items():
        out[pos[k]] = v
    return out


def _residual_against(space: SymmetrySpace, el: Element, term_order) -> Element:
    rows = [_entries_to_row(e.flatten(), term_order) for e in space.elements]
    reduced = rref_rows(rows)
    pivots = {min(r): r for r in reduced}
    target = dict(_entries_to_row(el.flatten(), term_order))
    for col in sorted(c for c in list(target) if c in pivots):
        coef = target.pop(col, None)
        if coef is None or not coef:
            continue
        for c2, v2 in pivots[col].items():
            if c2 == col:
                continue
            nv = target.get(c2, ZERO) - coef * v2
            if nv:
                target[c2] = nv
            else:
                target.pop(c2, None)
    entries = {term_order[i]: v for i, v in target.items() if v}
    return _el_unflatten(space.kind, space.ctx, entries)


def adjoint_matrix(space: SymmetrySpace, name: str) -> ExactMatrix:
    """Exact matrix of d/dz on the space; columns are images in the basis."""
    return space.adjoint_matrix(name)


# ---------------------------------------------------------------------------
# structured bases
# ---------------------------------------------------------------------------

@dataclass
class StructuredBlock:
    """One block of the structured basis."""

    elements: Tuple[Element, ...]
    eigenvalues: Dict[str, GaussRat]
    bounds: Dict[str, int]
    basis_columns: ExactMatrix
    restrictions: Dict[str, ExactMatrix]
    coefficient_objects: Dict[Tuple[int, Tuple[int, ...]], Element]
    base_vector: Tuple[Element, ...]

    @property
    def dim(self) -> int:
        return len(self.elements)


@dataclass
class StructuredBasis:
    """Blocks covering the space, each in exponential-polynomial normal form."""

    space: SymmetrySpace
    adjoints: Dict[str, ExactMatrix]
    decomposition: BlockDecomposition
    blocks: Tuple[StructuredBlock, ...]

    @property
    def rho(self) -> int:
        return len(self.blocks)


def structured_basis(space: SymmetrySpace) -> StructuredBasis:
    """Decompose the space and rewrite each block in the structured form."""
    names = list(space.translations)
    if not names:
        raise ValueError("space has no designated translation variables")
    if space.dim == 0:
        raise ValueError("space is zero-dimensional")
    adjoints = {name: space.adjoint_matrix(name) for name in names}
    mats = [adjoints[name] for name in names]
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            if (mats[i] @ mats[j]) != (mats[j] @ mats[i]):
                raise ArithmeticError(
                    "translation derivative matrices do not commute; "
                    "closure verification was incomplete"
                )
    decomp = common_decompose(mats)
    decomp.require_unflagged()

    blocks = []
    for blk in decomp.blocks:
        blocks.append(_structure_block(space, names, blk))
    sb = StructuredBasis(space, adjoints, decomp, tuple(blocks))
    _verify_span_preserved(space, sb)
    return sb


def _structure_block(
    space: SymmetrySpace, names: List[str], blk: Block
) -> StructuredBlock:
    ctx = space.ctx
    P = blk.basis
    r = blk.dim
    members: List[Element] = []
    for j in range(r):
        acc = None
        for i, base_el in enumerate(space.elements):
            c = P.data[i][j]
            if not c:
                continue
            piece = _el_scale(base_el, c)
            acc = piece if acc is None else acc + piece
        members.append(acc)

    generators = {}
    nilpotents = {}
    for s, name in enumerate(names):
        generators[name] = blk.restrictions[s].transpose()
        lam = blk.eigenvalues[s]
        nilpotents[name] = generators[name] - ExactMatrix.identity(r).scale(lam)

    # C = prod_s exp(-G_s z_s) applied to the block element vector
    base_vec = list(members)
    for s, name in enumerate(names):
        lam = blk.eigenvalues[s]
        k = blk.nilpotency[s]
        mat = block_exp(generators[name].scale(-1), ctx, name, -lam, k)
        base_vec = _matvec_elements(mat, base_vec)
    for l, c_el in enumerate(base_vec):
        if not _el_translation_free(c_el, names):
            raise ArithmeticError(
                f"coefficient object {l} still depends on a translation variable"
            )

    # coefficient objects C_{l,j} = [prod_s N_s^{j_s} / j_s!] C  (exact)
    coeff_objects: Dict[Tuple[int, Tuple[int, ...]], Element] = {}
    bounds = [blk.nilpotency[s] for s in range(len(names))]
    for multi in _multi_range(bounds):
        mat = ExactMatrix.identity(r)
        scale = ONE
        for s, js in enumerate(multi):
            mat = mat @ nilpotents[names[s]].pow(js)
            scale = scale * _inv_factorial(js)
        transformed = _matvec_scalar(mat.scale(scale), base_vec)
        for l in range(r):
            coeff_objects[(l, multi)] = transformed[l]

    # expanding the structured form must reproduce the block elements exactly
    for l in range(r):
        acc = None
        for multi in _multi_range(bounds):
            obj = coeff_objects[(l, multi)]
            if _el_is_zero(obj):
                continue
            exps = [0] * ctx.nvars
            weights = list(ctx.zero_weights())
            for s, js in enumerate(multi):
                idx = ctx.index(names[s])
                exps[idx] = js
            for s, name in enumerate(names):
                slot = ctx.slot(ctx.index(name))
                weights[slot] = blk.eigenvalues[s]
            fn = ExpPoly.monomial(ctx, ONE, tuple(exps), tuple(weights))
            piece = _el_scale_fn(obj, fn)
            acc = piece if acc is None else acc + piece
        expected = members[l]
        if acc is None:
            acc = _el_scale(expected, ZERO)
        if acc != expected:
            raise ArithmeticError("structured expansion does not reproduce the basis")

    for l, el in enumerate(members):
        for s, name in enumerate(names):
            if _el_degree_in(el, name) > blk.nilpotency[s] - 1:
                raise ArithmeticError(
                    f"degree bound violated in block element {l} for {name}"
                )

    return StructuredBlock(
        elements=tuple(members),
        eigenvalues={name: blk.eigenvalues[s] for s, name in enumerate(names)},
        bounds={name: blk.nilpotency[s] for s, name in enumerate(names)},
        basis_columns=P,
        restrictions={name: blk.restrictions[s] for s, name in enumerate(names)},
        coefficient_objects=coeff_objects,
        base_vector=tuple(base_vec),
    )


def _el_scale(el: Element, c: GaussRat) -> Element:
    return el.scale(c)


def _el_is_zero(el: Element) -> bool:
    return el.is_zero


def _matvec_elements(mat: List[List[ExpPoly]], vec: List[Element]) -> List[Element]:
    n = len(vec)
    out = []
    for i in range(n):
        acc = None
        for j in range(n):
            fn = mat[i][j]
            if fn.is_zero:
                continue
            piece = _el_scale_fn(vec[j], fn)
            acc = piece if acc is None else acc + piece
        out.append(acc if acc is not None else _el_scale(vec[0], ZERO))
    return out


def _matvec_scalar(mat: ExactMatrix, vec: List[Element]) -> List[Element]:
    out = []
    for i in range(mat.rows):
        acc = None
        for j in range(mat.cols):
            c = mat.data[i][j]
            if not c:
                continue
            piece = _el_scale(vec[j], c)
            acc = piece if acc is None else acc + piece
        out.append(acc if acc is not None else _el_scale(vec[0], ZERO))
    return out


def _multi_range(bounds: List[int]):
    if not bounds:
        yield ()
        return
    for head in range(bounds[0]):
        for tail in _multi_range(bounds[1:]):
            yield (head,) + tail


def _inv_factorial(n: int) -> GaussRat:
    f = 1
    for i in range(2, n + 1):
        f *= i
    return GaussRat(Fraction(1, f))


def _verify_span_preserved(space: SymmetrySpace, sb: StructuredBasis):
    keys = set()
    for el in space.elements:
        keys.update(el.flatten().keys())
    for blk in sb.blocks:
        for el in blk.elements:
            keys.update(el.flatten().keys())
    term_order = sorted(keys, key=_el_key_sort(space.kind))
    orig = [_entries_to_row(el.flatten(), term_order) for el in space.elements]
    new = [
        _entries_to_row(el.flatten(), term_order)
        for blk in sb.blocks
        for el in blk.elements
    ]
    if rref_rows(orig) != rref_rows(new):
        raise ArithmeticError("structured basis changed the spanned space")


# ---------------------------------------------------------------------------
# dimension bookkeeping
# ---------------------------------------------------------------------------

@dataclass
class DimensionReport:
    """Block bookkeeping of a symmetry space at one order level."""

    q: int
    v: int
    rho: int
    blocks: Tuple[Tuple[int, Dict[str, GaussRat], Dict[str, int]], ...]

    def validate(self):
        if self.rho > max(self.v, 0) and self.v:
            raise ArithmeticError("more blocks than dimensions")
        if sum(b[0] for b in self.blocks) != self.v:
            raise ArithmeticError("block dimensions do not sum to v")
        for r, _eigs, ks in self.blocks:
            for k in ks.values():
                if not (1 <= k <= r):
                    raise ArithmeticError("nilpotency bound out of range")


def ansatz_dimensions(space: SymmetrySpace, q: int) -> DimensionReport:
    """v, block count, block dimensions and (lambda, k) data at order q."""
    sub = space.at_order(q)
    if sub.dim == 0:
        report = DimensionReport(q=q, v=0, rho=0, blocks=())
        report.validate()
        return report
    sb = structured_basis(sub)
    blocks = tuple(
        (blk.dim, dict(blk.eigenvalues), dict(blk.bounds)) for blk in sb.blocks
    )
    report = DimensionReport(q=q, v=sub.dim, rho=len(blocks), blocks=blocks)
    report.validate()
    return report
