"""Exact linear algebra over the Gaussian rationals.

Provides reduced row echelon forms and canonical nullspaces (both a dense
matrix API and a sparse row-dict path for large determining systems),
characteristic polynomials via the Faddeev-LeVerrier recursion, root
finding in Q(i) through Gaussian-integer divisor candidates, simultaneous
primary decomposition of commuting families, and truncated exponentials of
nilpotent-plus-scalar blocks.

Everything is exact; there is no floating point and no numerical root
finding anywhere in this module.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import (
    IrrationalEigenvalue,
    NonSquare,
    NotCommuting,
    NotNilpotentAtLambda,
    VariableMismatch,
)
from .field import GaussRat, ONE, ZERO, as_gauss
from .poly import Context, ExpPoly

log = logging.getLogger("symkit.linalg")

Row = Dict[int, GaussRat]


# ---------------------------------------------------------------------------
# sparse row utilities
# ---------------------------------------------------------------------------

def rref_rows(rows: Iterable[Row]) -> List[Row]:
    """Unique reduced row echelon form of the span of `rows`.

    Rows are dicts {column: coefficient}.  Pivots are leftmost, each pivot
    column is cleared elsewhere, pivot values are 1 and the result is sorted
    by pivot column, so any two generating sets of the same row space give
    bit-identical output.
    """
    pivots: Dict[int, Row] = {}
    for row in rows:
        r = dict(row)
        for col in sorted(c for c in row if c in pivots):
            coef = r.pop(col, None)
            if coef is None or not coef:
                continue
            for c2, v2 in pivots[col].items():
                if c2 == col:
                    continue
                nv = r.get(c2, ZERO) - coef * v2
                if nv:
                    r[c2] = nv
                else:
                    r.pop(c2, None)
        r = {c: v for c, v in r.items() if v}
        if not r:
            continue
        p = min(r)
        inv = r[p].inv()
        new_row = {c: v * inv for c, v in r.items()}
        for other in pivots.values():
            coef = other.get(p)
            if coef is None:
                continue
            for c2, v2 in new_row.items():
                nv = other.get(c2, ZERO) - coef * v2
                if nv:
                    other[c2] = nv
                else:
                    other.pop(c2, None)
        pivots[p] = new_row
    return [pivots[c] for c in sorted(pivots)]


def rank_rows(rows: Iterable[Row]) -> int:
    return len(rref_rows(rows))


def kernel_rows(rows: Iterable[Row], ncols: int) -> List[Row]:
    """Canonical basis of {x : M x = 0} for the matrix with the given rows.

    Forward elimination pivots on the highest column of each reduced row
    (cheap on the near-triangular determining systems this is built for),
    pivot rows are then resolved to free columns only, and the kernel is
    canonicalized to the unique RREF of its row space, so the output does
    not depend on pivoting choices.
    """
    pivots: Dict[int, Row] = {}
    work = sorted((dict(r) for r in rows), key=len)
    for r in work:
        while True:
            hit = -1
            for c in r:
                if c in pivots and c > hit:
                    hit = c
            if hit < 0:
                break
            coef = r.pop(hit)
            for c2, v2 in pivots[hit].items():
                nv = r.get(c2, ZERO) - coef * v2
                if nv:
                    r[c2] = nv
                else:
                    r.pop(c2, None)
        if r:
            p = max(r)
            inv = r.pop(p).inv()
            pivots[p] = {c: v * inv for c, v in r.items()}

    # express every pivot column in terms of free columns only
    resolved: Dict[int, Row] = {}
    for p in pivots:
        if p in resolved:
            continue
        stack = [p]
        while stack:
            top = stack[-1]
            pending = [c for c in pivots[top] if c in pivots and c not in resolved]
            if pending:
                stack.extend(pending)
                continue
            stack.pop()
            if top in resolved:
                continue
            # pivot row means x_top + sum(row[c] * x_c) = 0; substituting the
            # already-resolved pivot columns x_c = -sum(resolved[c][d] * x_d)
            # flips their sign.
            out: Row = {}
            for c, v in pivots[top].items():
                if c in pivots:
                    for c2, v2 in resolved[c].items():
                        nv = out.get(c2, ZERO) - v * v2
                        if nv:
                            out[c2] = nv
                        else:
                            out.pop(c2, None)
                else:
                    nv = out.get(c, ZERO) + v
                    if nv:
                        out[c] = nv
                    else:
                        out.pop(c, None)
            resolved[top] = out

    free = [c for c in range(ncols) if c not in pivots]
    basis: List[Row] = []
    for f in free:
        vec: Row = {f: ONE}
        for p, row in resolved.items():
            v = row.get(f)
            if v:
                vec[p] = -v
        basis.append(vec)
    return rref_rows(basis)


# ---------------------------------------------------------------------------
# dense matrices
# ---------------------------------------------------------------------------

class ExactMatrix:
    """Immutable dense matrix of GaussRat entries."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, data: Sequence[Sequence]):
        rows = [tuple(as_gauss(x) for x in row) for row in data]
        if rows:
            width = len(rows[0])
            if any(len(r) != width for r in rows):
                raise ValueError("ragged matrix")
        else:
            width = 0
        self.data: Tuple[Tuple[GaussRat, ...], ...] = tuple(rows)
        self.rows = len(rows)
        self.cols = width

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "ExactMatrix":
        return cls([[ZERO] * cols for _ in range(rows)])

    @classmethod
    def identity(cls, n: int) -> "ExactMatrix":
        return cls([[ONE if i == j else ZERO for j in range(n)] for i in range(n)])

    @classmethod
    def diag(cls, values) -> "ExactMatrix":
        vals = [as_gauss(v) for v in values]
        n = len(vals)
        return cls([[vals[i] if i == j else ZERO for j in range(n)] for i in range(n)])

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], nrows: int) -> "ExactMatrix":
        cols = [list(c) for c in columns]
        return cls([[as_gauss(c[i]) for c in cols] for i in range(nrows)])

    def __getitem__(self, key):
        i, j = key
        return self.data[i][j]

    def column(self, j: int) -> Tuple[GaussRat, ...]:
        return tuple(self.data[i][j] for i in range(self.rows))

    def __eq__(self, other) -> bool:
        return isinstance(other, ExactMatrix) and self.data == other.data

    def __hash__(self):
        return hash(self.data)

    def __add__(self, other: "ExactMatrix") -> "ExactMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        return ExactMatrix(
            [
                [self.data[i][j] + other.data[i][j] for j in range(self.cols)]
                for i in range(self.rows)
            ]
        )

    def __sub__(self, other: "ExactMatrix") -> "ExactMatrix":
        return self + other.scale(GaussRat(Fraction(-1)))

    def scale(self, value) -> "ExactMatrix":
        c = as_gauss(value)
        return ExactMatrix([[c * x for x in row] for row in self.data])

    def __matmul__(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = ZERO
                for k in range(self.cols):
                    a = self.data[i][k]
                    if a:
                        acc = acc + a * other.data[k][j]
                row.append(acc)
            out.append(row)
        return ExactMatrix(out)

    def matvec(self, vec: Sequence[GaussRat]) -> Tuple[GaussRat, ...]:
        return tuple(
            sum((self.data[i][k] * vec[k] for k in range(self.cols)), ZERO)
            for i in range(self.rows)
        )

    def transpose(self) -> "ExactMatrix":
        return ExactMatrix(
            [[self.data[i][j] for i in range(self.rows)] for j in range(self.cols)]
        )

    def trace(self) -> GaussRat:
        if self.rows != self.cols:
            raise NonSquare("trace of a non-square matrix")
        return sum((self.data[i][i] for i in range(self.rows)), ZERO)

    @property
    def is_zero(self) -> bool:
        return all(not x for row in self.data for x in row)

    def pow(self, e: int) -> "ExactMatrix":
        if self.rows != self.cols:
            raise NonSquare("power of a non-square matrix")
        out = ExactMatrix.identity(self.rows)
        for _ in range(e):
            out = out @ self
        return out

    def to_rows(self) -> List[Row]:
        return [
            {j: x for j, x in enumerate(row) if x}
            for row in self.data
        ]

    def rref(self) -> Tuple["ExactMatrix", Tuple[int, ...]]:
        """Unique RREF plus the pivot columns (zero rows dropped)."""
        reduced = rref_rows(self.to_rows())
        pivots = tuple(min(r) for r in reduced)
        dense = [
            [r.get(j, ZERO) for j in range(self.cols)]
            for r in reduced
        ]
        return ExactMatrix(dense) if dense else ExactMatrix.zeros(0, self.cols), pivots

    def rank(self) -> int:
        return len(self.rref()[1])

    def nullspace(self) -> List[Tuple[GaussRat, ...]]:
        """Canonical kernel basis (RREF of the kernel's row space)."""
        basis = kernel_rows(self.to_rows(), self.cols)
        return [tuple(v.get(j, ZERO) for j in range(self.cols)) for v in basis]

    def char_poly(self) -> "UniPoly":
        """Characteristic polynomial det(zI - M) by Faddeev-LeVerrier."""
        if self.rows != self.cols:
            raise NonSquare("characteristic polynomial of a non-square matrix")
        n = self.rows
        coeffs = [ZERO] * (n + 1)
        coeffs[n] = ONE
        m = ExactMatrix.zeros(n, n)
        ident = ExactMatrix.identity(n)
        for k in range(1, n + 1):
            m = self @ (m + ident.scale(coeffs[n - k + 1]))
            coeffs[n - k] = m.trace() * GaussRat(Fraction(-1, k))
        return UniPoly(coeffs)

    def __str__(self):
        return "[" + "; ".join(
            "[" + ", ".join(str(x) for x in row) + "]" for row in self.data
        ) + "]"

    def __repr__(self):
        return f"ExactMatrix({self})"


def solve_exact(columns_matrix: ExactMatrix, targets: ExactMatrix):
    """Solve columns_matrix @ X = targets for X; returns (X, inconsistent_cols).

    columns_matrix must have full column rank.  Target columns that are not
    in the column span are reported in inconsistent_cols together with a
    residual indicator (handled by callers); consistent columns get exact
    coordinate vectors.
    """
    n, v = columns_matrix.rows, columns_matrix.cols
    t = targets.cols
    aug_rows = []
    for i in range(n):
        row = {}
        for j in range(v):
            x = columns_matrix.data[i][j]
            if x:
                row[j] = x
        for j in range(t):
            x = targets.data[i][j]
            if x:
                row[v + j] = x
        aug_rows.append(row)
    reduced = rref_rows(aug_rows)
    coords = [[ZERO] * t for _ in range(v)]
    bad = []
    for r in reduced:
        p = min(r)
        if p >= v:
            bad.extend(c - v for c in r if c >= v)
            continue
        for j in range(t):
            val = r.get(v + j)
            if val:
                coords[p][j] = val
    return ExactMatrix(coords), sorted(set(bad))


# ---------------------------------------------------------------------------
# univariate polynomials over Q(i)
# ---------------------------------------------------------------------------

class UniPoly:
    """Dense univariate polynomial over GaussRat, ascending coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence):
        vals = [as_gauss(c) for c in coeffs]
        while vals and not vals[-1]:
            vals.pop()
        self.coeffs: Tuple[GaussRat, ...] = tuple(vals)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other):
        return isinstance(other, UniPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other: "UniPoly") -> "UniPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return UniPoly(
            [
                (self.coeffs[i] if i < len(self.coeffs) else ZERO)
                + (other.coeffs[i] if i < len(other.coeffs) else ZERO)
                for i in range(n)
            ]
        )

    def __neg__(self) -> "UniPoly":
        return UniPoly([-c for c in self.coeffs])

    def __sub__(self, other: "UniPoly") -> "UniPoly":
        return self + (-other)

    def __mul__(self, other: "UniPoly") -> "UniPoly":
        if self.is_zero or other.is_zero:
            return UniPoly([])
        out = [ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(other.coeffs):
                if b:
                    out[i + j] = out[i + j] + a * b
        return UniPoly(out)

    def scale(self, value) -> "UniPoly":
        c = as_gauss(value)
        return UniPoly([c * x for x in self.coeffs])

    def monic(self) -> "UniPoly":
        if self.is_zero:
            return self
        return self.scale(self.coeffs[-1].inv())

    def divmod(self, other: "UniPoly") -> Tuple["UniPoly", "UniPoly"]:
        if other.is_zero:
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        quo = [ZERO] * max(0, len(rem) - len(other.coeffs) + 1)
        inv_lead = other.coeffs[-1].inv()
        while len(rem) >= len(other.coeffs) and rem:
            factor = rem[-1] * inv_lead
            shift = len(rem) - len(other.coeffs)
            quo[shift] = factor
            for i, b in enumerate(other.coeffs):
                rem[shift + i] = rem[shift + i] - factor * b
            while rem and not rem[-1]:
                rem.pop()
        return UniPoly(quo), UniPoly(rem)

    def eval(self, x: GaussRat) -> GaussRat:
        acc = ZERO
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self) -> "UniPoly":
        return UniPoly([c * i for i, c in enumerate(self.coeffs)][1:])

    def gcd(self, other: "UniPoly") -> "UniPoly":
        a, b = self, other
        while not b.is_zero:
            a, b = b, a.divmod(b)[1]
        return a.monic() if not a.is_zero else a

    @classmethod
    def from_roots(cls, roots: Sequence[GaussRat]) -> "UniPoly":
        out = cls([ONE])
        for r in roots:
            out = out * cls([-r, ONE])
        return out

    def render(self, name: str = "z") -> str:
        if self.is_zero:
            return "0"
        pieces = []
        for e in range(self.degree, -1, -1):
            c = self.coeffs[e]
            if not c:
                continue
            negative = (c.re < 0) if c.re else (c.im < 0)
            mag = -c if negative else c
            if e == 0:
                body = str(mag) if not (mag.re and mag.im) else f"({mag})"
            else:
                var = name if e == 1 else f"{name}^{e}"
                if mag == ONE:
                    body = var
                else:
                    cs = str(mag) if not (mag.re and mag.im) else f"({mag})"
                    body = f"{cs}*{var}"
            if not pieces:
                pieces.append(f"-{body}" if negative else body)
            else:
                pieces.append(f" - {body}" if negative else f" + {body}")
        return "".join(pieces)

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"UniPoly({self})"


# ---------------------------------------------------------------------------
# Gaussian integers: divisor candidates for root finding
# ---------------------------------------------------------------------------

GInt = Tuple[int, int]

_UNITS: Tuple[GInt, ...] = ((1, 0), (0, 1), (-1, 0), (0, -1))


def _gi_norm(z: GInt) -> int:
    return z[0] * z[0] + z[1] * z[1]


def _gi_mul(a: GInt, b: GInt) -> GInt:
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _gi_divmod(a: GInt, b: GInt) -> Tuple[GInt, GInt]:
    """Nearest-integer division; the remainder has norm < norm(b)."""
    n = _gi_norm(b)
    num_re = a[0] * b[0] + a[1] * b[1]
    num_im = a[1] * b[0] - a[0] * b[1]
    q = (_round_div(num_re, n), _round_div(num_im, n))
    r = (a[0] - (q[0] * b[0] - q[1] * b[1]), a[1] - (q[0] * b[1] + q[1] * b[0]))
    return q, r


def _round_div(a: int, b: int) -> int:
    q, r = divmod(a, b)
    if 2 * r >= b:
        q += 1
    return q


def _gi_gcd(a: GInt, b: GInt) -> GInt:
    while b != (0, 0):
        a, b = b, _gi_divmod(a, b)[1]
    return a


def _gi_divides(d: GInt, z: GInt) -> bool:
    return _gi_divmod(z, d)[1] == (0, 0)


def _int_factor(n: int) -> Dict[int, int]:
    out: Dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _sqrt_minus_one_mod(p: int) -> int:
    # p = 1 mod 4; brute force is fine at the coefficient sizes seen here
    for k in range(2, p):
        if (k * k + 1) % p == 0:
            return k
    raise ValueError(f"no square root of -1 modulo {p}")


def _gi_prime_factors(z: GInt) -> List[Tuple[GInt, int]]:
    """Gaussian prime factorization (primes up to units, exponents exact)."""
    if z == (0, 0):
        raise ValueError("cannot factor zero")
    factors: List[Tuple[GInt, int]] = []
    rest = z
    for p, _ in sorted(_int_factor(_gi_norm(z)).items()):
        candidates: List[GInt]
        if p == 2:
            candidates = [(1, 1)]
        elif p % 4 == 3:
            candidates = [(p, 0)]
        else:
            k = _sqrt_minus_one_mod(p)
            pi = _gi_gcd((p, 0), (k, 1))
            candidates = [pi, (pi[0], -pi[1])]
        for pi in candidates:
            e = 0
            while _gi_divides(pi, rest):
                rest = _gi_divmod(rest, pi)[0]
                e += 1
            if e:
                factors.append((pi, e))
    if _gi_norm(rest) != 1:
        raise ArithmeticError(f"incomplete factorization of {z}")
    return factors


def _gi_divisors(z: GInt) -> List[GInt]:
    """All divisors of z up to unit multiples."""
    divs: List[GInt] = [(1, 0)]
    for pi, e in _gi_prime_factors(z):
        grown = []
        power = (1, 0)
        for _ in range(e + 1):
            grown.extend(_gi_mul(d, power) for d in divs)
            power = _gi_mul(power, pi)
        divs = grown
    return divs


def qi_roots(p: UniPoly) -> Tuple[List[Tuple[GaussRat, int]], UniPoly]:
    """All roots of p in Q(i) with multiplicities, plus the root-free cofactor.

    Candidates u/v are enumerated from Gaussian-integer divisors of the
    primitive integral form's constant and leading coefficients (rational
    root theorem over the UFD Z[i]); each candidate is tested exactly and
    deflated to multiplicity.  The returned cofactor has no Q(i) roots.
    """
    if p.is_zero:
        raise ValueError("zero polynomial has every root")
    roots: List[Tuple[GaussRat, int]] = []
    work = p.monic()
    zero_mult = 0
    while not work.is_zero and not work.coeffs[0]:
        work = UniPoly(work.coeffs[1:])
        zero_mult += 1
    if zero_mult:
        roots.append((ZERO, zero_mult))
    if work.degree < 1:
        return roots, UniPoly([ONE])

    denom = 1
    for c in work.coeffs:
        denom = denom * c.re.denominator // _gcd_int(denom, c.re.denominator)
        denom = denom * c.im.denominator // _gcd_int(denom, c.im.denominator)
    ints: List[GInt] = [
        (int(c.re * denom), int(c.im * denom)) for c in work.coeffs
    ]
    content = (0, 0)
    for g in ints:
        if g != (0, 0):
            content = g if content == (0, 0) else _gi_gcd(content, g)
    ints = [_gi_divmod(g, content)[0] for g in ints]

    candidates = []
    seen = set()
    for u in _gi_divisors(ints[0]):
        for v in _gi_divisors(ints[-1]):
            vu = GaussRat(Fraction(v[0]), Fraction(v[1]))
            base = GaussRat(Fraction(u[0]), Fraction(u[1])) / vu
            for unit in _UNITS:
                cand = base * GaussRat(Fraction(unit[0]), Fraction(unit[1]))
                if cand not in seen:
                    seen.add(cand)
                    candidates.append(cand)
    candidates.sort(key=lambda c: (c.norm2(), c.sort_key()))

    for cand in candidates:
        mult = 0
        while not work.is_zero and work.degree >= 1 and not work.eval(cand):
            work = work.divmod(UniPoly([-cand, ONE]))[0]
            mult += 1
        if mult:
            roots.append((cand, mult))
    roots.sort(key=lambda rm: rm[0].sort_key())
    return roots, work.monic()


def _gcd_int(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


# ---------------------------------------------------------------------------
# simultaneous decomposition of commuting families
# ---------------------------------------------------------------------------

@dataclass
class Block:
    """One common invariant subspace of the family.

    `basis` holds the subspace as columns; `eigenvalues[s]` and
    `nilpotency[s]` describe the s-th matrix on the block, which acts as
    eigenvalue * Id + nilpotent with (A - eigenvalue)^nilpotency = 0.
    Blocks whose characteristic polynomial has a factor without Q(i) roots
    are returned undecomposed with `flagged_factor` set and None entries.
    """

    basis: ExactMatrix
    eigenvalues: Tuple[Optional[GaussRat], ...]
    nilpotency: Tuple[Optional[int], ...]
    restrictions: Tuple[Optional[ExactMatrix], ...]
    flagged_factor: Optional[UniPoly] = None

    @property
    def dim(self) -> int:
        return self.basis.cols

    @property
    def flagged(self) -> bool:
        return self.flagged_factor is not None


@dataclass
class BlockDecomposition:
    """Direct-sum decomposition of the ambient space under a commuting family."""

    matrices: Tuple[ExactMatrix, ...]
    blocks: Tuple[Block, ...]

    @property
    def rho(self) -> int:
        return len(self.blocks)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(b.dim for b in self.blocks)

    @property
    def ambient(self) -> int:
        return self.matrices[0].rows if self.matrices else 0

    def require_unflagged(self):
        for b in self.blocks:
            if b.flagged:
                raise IrrationalEigenvalue(
                    "characteristic polynomial factor without Q(i) roots: "
                    f"{b.flagged_factor.render()}"
                )


def _restrict(mat: ExactMatrix, basis: ExactMatrix) -> ExactMatrix:
    """Matrix of `mat` on the invariant subspace spanned by basis columns."""
    image = mat @ basis
    coords, bad = solve_exact(basis, image)
    if bad:
        raise ArithmeticError("subspace is not invariant")
    return coords


def _canonical_column_basis(vectors: List[Sequence[GaussRat]], n: int) -> ExactMatrix:
    rows = [
        {j: v for j, v in enumerate(vec) if v}
        for vec in vectors
    ]
    reduced = rref_rows(rows)
    cols = [
        [r.get(j, ZERO) for j in range(n)]
        for r in reduced
    ]
    return ExactMatrix.from_columns(cols, n)


def common_decompose(matrices: Sequence[ExactMatrix]) -> BlockDecomposition:
    """Split the space into common primary components of a commuting family.

    Each input matrix is decomposed over its Q(i) eigenvalues; components
    are intersected across the family by iterative refinement.  On every
    resulting block each matrix acts as lambda * Id + nilpotent, and the
    exact nilpotency index is recorded.  Blocks are ordered by their
    eigenvalue vectors (sort_key lexicographic), then dimension.
    """
    mats = list(matrices)
    if not mats:
        raise ValueError("empty matrix family")
    n = mats[0].rows
    for m in mats:
        if m.rows != m.cols or m.rows != n:
            raise NonSquare("family members must be square and same size")
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            if (mats[i] @ mats[j]) != (mats[j] @ mats[i]):
                raise NotCommuting(i, j)

    blocks: List[Tuple[ExactMatrix, Optional[UniPoly]]] = [
        (ExactMatrix.identity(n), None)
    ]
    for mat in mats:
        refined: List[Tuple[ExactMatrix, Optional[UniPoly]]] = []
        for basis, flag in blocks:
            if flag is not None:
                refined.append((basis, flag))
                continue
            action = _restrict(mat, basis)
            roots, cofactor = qi_roots(action.char_poly())
            r = basis.cols
            ident = ExactMatrix.identity(r)
            pieces: List[Tuple[ExactMatrix, Optional[UniPoly]]] = []
            for lam, mult in roots:
                kernel = (action - ident.scale(lam)).pow(mult).nullspace()
                sub = _subspace_through(basis, kernel)
                pieces.append((sub, None))
            if cofactor.degree >= 1:
                cof_mat = _apply_unipoly(cofactor, action)
                kernel = cof_mat.nullspace()
                sub = _subspace_through(basis, kernel)
                pieces.append((sub, cofactor))
            if sum(p[0].cols for p in pieces) != r:
                raise ArithmeticError("primary components do not fill the block")
            refined.extend(pieces)
        blocks = refined

    final: List[Block] = []
    for basis, flag in blocks:
        if flag is not None:
            final.append(
                Block(
                    basis=basis,
                    eigenvalues=(None,) * len(mats),
                    nilpotency=(None,) * len(mats),
                    restrictions=(None,) * len(mats),
                    flagged_factor=flag,
                )
            )
            continue
        eigs: List[GaussRat] = []
        ks: List[int] = []
        actions: List[ExactMatrix] = []
        for mat in mats:
            action = _restrict(mat, basis)
            roots, cofactor = qi_roots(action.char_poly())
            if cofactor.degree >= 1 or len(roots) != 1:
                raise ArithmeticError("block is not primary for the family")
            lam = roots[0][0]
            shifted = action - ExactMatrix.identity(action.rows).scale(lam)
            k = _nilpotency_index(shifted)
            eigs.append(lam)
            ks.append(k)
            actions.append(action)
        final.append(
            Block(
                basis=basis,
                eigenvalues=tuple(eigs),
                nilpotency=tuple(ks),
                restrictions=tuple(actions),
            )
        )

    def order_key(b: Block):
        eig_key = tuple(
            (0, e.sort_key()) if e is not None else (1, (Fraction(0), Fraction(0)))
            for e in b.eigenvalues
        )
        return (1 if b.flagged else 0, eig_key, b.dim)

    final.sort(key=order_key)
    decomp = BlockDecomposition(tuple(mats), tuple(final))
    _validate_decomposition(decomp, n)
    return decomp


def _subspace_through(basis: ExactMatrix, kernel_vectors) -> ExactMatrix:
    n = basis.rows
    vectors = [basis.matvec(vec) for vec in kernel_vectors]
    return _canonical_column_basis(vectors, n)


def _apply_unipoly(p: UniPoly, mat: ExactMatrix) -> ExactMatrix:
    out = ExactMatrix.zeros(mat.rows, mat.cols)
    power = ExactMatrix.identity(mat.rows)
    for c in p.coeffs:
        if c:
            out = out + power.scale(c)
        power = power @ mat
    return out


def _nilpotency_index(mat: ExactMatrix) -> int:
    power = ExactMatrix.identity(mat.rows)
    for k in range(mat.rows + 1):
        if power.is_zero:
            return k
        power = power @ mat
    raise ArithmeticError("matrix is not nilpotent")


def _validate_decomposition(decomp: BlockDecomposition, n: int):
    if sum(decomp.dims) != n:
        raise ArithmeticError("block dimensions do not sum to the ambient dimension")
    stacked = []
    for b in decomp.blocks:
        for j in range(b.basis.cols):
            stacked.append({i: x for i, x in enumerate(b.basis.column(j)) if x})
    if len(rref_rows(stacked)) != n:
        raise ArithmeticError("block bases do not form a direct sum")
    for b in decomp.blocks:
        if b.flagged:
            continue
        for k, lam in zip(b.nilpotency, b.eigenvalues):
            if not (1 <= k <= b.dim):
                raise ArithmeticError("nilpotency index out of range")


# ---------------------------------------------------------------------------
# truncated exponentials
# ---------------------------------------------------------------------------

def block_exp(
    mat: ExactMatrix, ctx: Context, var_name: str, lam: GaussRat, k: int
) -> List[List[ExpPoly]]:
    """exp(mat * z) for mat = lam * Id + nilpotent of index <= k.

    Returns a matrix of ExpPoly entries: exp(lam*z) times polynomials in z
    of degree < k.  Raises NotNilpotentAtLambda when (mat - lam)^k != 0.
    """
    if mat.rows != mat.cols:
        raise NonSquare("exponential of a non-square matrix")
    n = mat.rows
    lam = as_gauss(lam)
    nil = mat - ExactMatrix.identity(n).scale(lam)
    if not nil.pow(k).is_zero:
        raise NotNilpotentAtLambda(
            f"(G - {lam})^{k} != 0; cannot truncate the exponential"
        )
    idx = ctx.index(var_name)
    slot = ctx.slot(idx)
    if slot is None and lam:
        raise VariableMismatch(
            f"nonzero exponential weight requires {var_name!r} to be a translation variable"
        )
    weights = list(ctx.zero_weights())
    if slot is not None:
        weights[slot] = lam
    weights = tuple(weights)

    entries = [[ExpPoly.zero(ctx) for _ in range(n)] for _ in range(n)]
    power = ExactMatrix.identity(n)
    factorial = 1
    for s in range(k):
        if s:
            factorial *= s
        exps = [0] * ctx.nvars
        exps[idx] = s
        z_term = GaussRat(Fraction(1, factorial))
        for i in range(n):
            for j in range(n):
                c = power.data[i][j]
                if c:
                    entries[i][j] = entries[i][j] + ExpPoly.monomial(
                        ctx, c * z_term, tuple(exps), weights
                    )
        power = power @ nil
    return entries
