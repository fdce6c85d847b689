"""Sparse exact polynomials and exponential-polynomials.

Every polynomial lives in a fixed `Context`: an ordered tuple of named
variables, a designated subset of which ("translation variables") may also
carry exponential weights.  A `MultiPoly` maps exponent tuples to GaussRat
coefficients; an `ExpPoly` maps weight vectors (one scalar per translation
variable) to MultiPoly parts:

    ExpPoly = sum over w of  exp(sum_s w[s] * z_s) * MultiPoly_w

The zero polynomial has an empty term map, and all operations keep maps
free of zero entries, so structural equality is semantic equality.  Values
are treated as immutable: no public operation mutates its operands.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import VariableMismatch
from .field import GaussRat, ONE, ZERO, as_gauss

Exponents = Tuple[int, ...]
Weights = Tuple[GaussRat, ...]

VAR_KINDS = ("independent", "dependent", "jet")


@dataclass(frozen=True)
class Var:
    """A named coordinate.

    Jet variables carry the index of the unknown they derive (`alpha`) and
    a per-axis derivative multiindex; order-0 unknowns use kind "dependent"
    with the zero multiindex.
    """

    name: str
    kind: str = "independent"
    alpha: Optional[int] = None
    multiindex: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.kind not in VAR_KINDS:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind in ("dependent", "jet"):
            if self.alpha is None or self.multiindex is None:
                raise ValueError(f"{self.kind} variable needs alpha and multiindex")
            if any(j < 0 for j in self.multiindex):
                raise ValueError("multiindex entries must be non-negative")

    @property
    def order(self) -> int:
        return sum(self.multiindex) if self.multiindex else 0


class Context:
    """Ordered variable table shared by all polynomials of one problem."""

    __slots__ = ("vars", "translations", "_by_name", "_slot_of")

    def __init__(self, variables: Sequence[Var], translations: Sequence[str] = ()):
        self.vars: Tuple[Var, ...] = tuple(variables)
        by_name = {}
        for idx, v in enumerate(self.vars):
            if v.name in by_name:
                raise ValueError(f"duplicate variable name {v.name!r}")
            by_name[v.name] = idx
        self._by_name: Dict[str, int] = by_name
        trans = []
        for name in translations:
            if name not in by_name:
                raise ValueError(f"translation variable {name!r} not declared")
            if by_name[name] in trans:
                raise ValueError(f"duplicate translation variable {name!r}")
            trans.append(by_name[name])
        self.translations: Tuple[int, ...] = tuple(trans)
        self._slot_of: Dict[int, int] = {v: s for s, v in enumerate(self.translations)}

    @property
    def nvars(self) -> int:
        return len(self.vars)

    @property
    def ntrans(self) -> int:
        return len(self.translations)

    def index(self, name: str) -> int:
        try:
            return self._by_name[name]
        except KeyError:
            raise VariableMismatch(f"variable {name!r} not in context") from None

    def var_named(self, name: str) -> Var:
        return self.vars[self.index(name)]

    def slot(self, var_index: int) -> Optional[int]:
        """Translation slot of a variable index, or None."""
        return self._slot_of.get(var_index)

    def translation_names(self) -> Tuple[str, ...]:
        return tuple(self.vars[i].name for i in self.translations)

    def zero_weights(self) -> Weights:
        return (ZERO,) * self.ntrans

    def zero_exps(self) -> Exponents:
        return (0,) * self.nvars

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return (
            isinstance(other, Context)
            and self.vars == other.vars
            and self.translations == other.translations
        )

    def __hash__(self):
        return hash((self.vars, self.translations))

    def __repr__(self):
        names = ",".join(v.name for v in self.vars)
        return f"Context({names}; translations={self.translation_names()})"


def grlex_key(exps: Exponents):
    return (sum(exps), exps)


def weight_key(weights: Weights):
    return tuple(w.sort_key() for w in weights)


def _check_ctx(a, b):
    if a.ctx != b.ctx:
        raise VariableMismatch("operands live in different contexts")


class MultiPoly:
    """Multivariate polynomial: exponent tuple -> GaussRat, zeros dropped."""

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: Context, terms: Optional[Dict[Exponents, GaussRat]] = None):
        self.ctx = ctx
        clean: Dict[Exponents, GaussRat] = {}
        if terms:
            n = ctx.nvars
            for exps, coeff in terms.items():
                if len(exps) != n:
                    raise ValueError("exponent tuple has wrong length")
                if coeff:
                    clean[exps] = coeff
        self.terms = clean

    @classmethod
    def zero(cls, ctx: Context) -> "MultiPoly":
        return cls(ctx)

    @classmethod
    def const(cls, ctx: Context, value) -> "MultiPoly":
        c = as_gauss(value)
        return cls(ctx, {ctx.zero_exps(): c} if c else {})

    @classmethod
    def variable(cls, ctx: Context, name: str) -> "MultiPoly":
        exps = [0] * ctx.nvars
        exps[ctx.index(name)] = 1
        return cls(ctx, {tuple(exps): ONE})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MultiPoly)
            and self.ctx == other.ctx
            and self.terms == other.terms
        )

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        _check_ctx(self, other)
        out = dict(self.terms)
        for exps, coeff in other.terms.items():
            acc = out.get(exps)
            total = coeff if acc is None else acc + coeff
            if total:
                out[exps] = total
            else:
                out.pop(exps, None)
        return MultiPoly(self.ctx, out)

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.ctx, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "MultiPoly") -> "MultiPoly":
        return self + (-other)

    def __mul__(self, other: "MultiPoly") -> "MultiPoly":
        _check_ctx(self, other)
        out: Dict[Exponents, GaussRat] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exps = tuple(a + b for a, b in zip(e1, e2))
                prod = c1 * c2
                acc = out.get(exps)
                total = prod if acc is None else acc + prod
                if total:
                    out[exps] = total
                else:
                    out.pop(exps, None)
        return MultiPoly(self.ctx, out)

    def scale(self, value) -> "MultiPoly":
        c = as_gauss(value)
        if not c:
            return MultiPoly(self.ctx)
        return MultiPoly(self.ctx, {e: c * v for e, v in self.terms.items()})

    def partial(self, var_index: int) -> "MultiPoly":
        out: Dict[Exponents, GaussRat] = {}
        for exps, coeff in self.terms.items():
            e = exps[var_index]
            if not e:
                continue
            lowered = list(exps)
            lowered[var_index] = e - 1
            key = tuple(lowered)
            add = coeff * e
            acc = out.get(key)
            total = add if acc is None else acc + add
            if total:
                out[key] = total
            else:
                out.pop(key, None)
        return MultiPoly(self.ctx, out)

    def degree_in(self, var_index: int) -> int:
        """Largest exponent of the variable; -1 for the zero polynomial."""
        return max((e[var_index] for e in self.terms), default=-1)

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def support(self) -> set:
        """Indices of variables appearing with positive exponent."""
        seen = set()
        for exps in self.terms:
            for i, e in enumerate(exps):
                if e:
                    seen.add(i)
        return seen

    def sorted_terms(self, reverse: bool = True) -> List[Tuple[Exponents, GaussRat]]:
        return sorted(self.terms.items(), key=lambda t: grlex_key(t[0]), reverse=reverse)

    def __str__(self) -> str:
        return render_terms(self.ctx, self.sorted_terms())

    def __repr__(self) -> str:
        return f"MultiPoly({self})"


class ExpPoly:
    """Finite sum of exp(weight . translation_vars) * MultiPoly parts."""

    __slots__ = ("ctx", "parts")

    def __init__(self, ctx: Context, parts: Optional[Dict[Weights, MultiPoly]] = None):
        self.ctx = ctx
        clean: Dict[Weights, MultiPoly] = {}
        if parts:
            for weights, mp in parts.items():
                if len(weights) != ctx.ntrans:
                    raise ValueError("weight vector has wrong length")
                if not mp.is_zero:
                    clean[weights] = mp
        self.parts = clean

    @classmethod
    def zero(cls, ctx: Context) -> "ExpPoly":
        return cls(ctx)

    @classmethod
    def const(cls, ctx: Context, value) -> "ExpPoly":
        mp = MultiPoly.const(ctx, value)
        return cls(ctx, {ctx.zero_weights(): mp})

    @classmethod
    def variable(cls, ctx: Context, name: str) -> "ExpPoly":
        return cls(ctx, {ctx.zero_weights(): MultiPoly.variable(ctx, name)})

    @classmethod
    def monomial(
        cls,
        ctx: Context,
        coeff,
        exps: Exponents,
        weights: Optional[Weights] = None,
    ) -> "ExpPoly":
        w = ctx.zero_weights() if weights is None else tuple(weights)
        return cls(ctx, {w: MultiPoly(ctx, {tuple(exps): as_gauss(coeff)})})

    @classmethod
    def from_multi(cls, mp: MultiPoly, weights: Optional[Weights] = None) -> "ExpPoly":
        w = mp.ctx.zero_weights() if weights is None else tuple(weights)
        return cls(mp.ctx, {w: mp})

    @property
    def is_zero(self) -> bool:
        return not self.parts

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ExpPoly)
            and self.ctx == other.ctx
            and self.parts == other.parts
        )

    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        _check_ctx(self, other)
        out = dict(self.parts)
        for w, mp in other.parts.items():
            acc = out.get(w)
            total = mp if acc is None else acc + mp
            if total.is_zero:
                out.pop(w, None)
            else:
                out[w] = total
        return ExpPoly(self.ctx, out)

    def __neg__(self) -> "ExpPoly":
        return ExpPoly(self.ctx, {w: -mp for w, mp in self.parts.items()})

    def __sub__(self, other: "ExpPoly") -> "ExpPoly":
        return self + (-other)

    def __mul__(self, other: "ExpPoly") -> "ExpPoly":
        _check_ctx(self, other)
        out: Dict[Weights, MultiPoly] = {}
        for w1, m1 in self.parts.items():
            for w2, m2 in other.parts.items():
                w = tuple(a + b for a, b in zip(w1, w2))
                prod = m1 * m2
                acc = out.get(w)
                total = prod if acc is None else acc + prod
                if total.is_zero:
                    out.pop(w, None)
                else:
                    out[w] = total
        return ExpPoly(self.ctx, out)

    def scale(self, value) -> "ExpPoly":
        c = as_gauss(value)
        if not c:
            return ExpPoly(self.ctx)
        return ExpPoly(self.ctx, {w: mp.scale(c) for w, mp in self.parts.items()})

    def __pow__(self, exponent: int) -> "ExpPoly":
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("only non-negative integer powers")
        out = ExpPoly.const(self.ctx, 1)
        for _ in range(exponent):
            out = out * self
        return out

    def exp_times(self, updates: Dict[str, GaussRat]) -> "ExpPoly":
        """Multiply by exp(sum updates[name] * name); names must be translations."""
        shift = [ZERO] * self.ctx.ntrans
        for name, lam in updates.items():
            slot = self.ctx.slot(self.ctx.index(name))
            if slot is None:
                raise VariableMismatch(f"{name!r} is not a translation variable")
            shift[slot] = shift[slot] + as_gauss(lam)
        out: Dict[Weights, MultiPoly] = {}
        for w, mp in self.parts.items():
            key = tuple(a + b for a, b in zip(w, shift))
            acc = out.get(key)
            total = mp if acc is None else acc + mp
            if total.is_zero:
                out.pop(key, None)
            else:
                out[key] = total
        return ExpPoly(self.ctx, out)

    def partial(self, name: str) -> "ExpPoly":
        """Partial derivative; an exp factor contributes weight * part."""
        idx = self.ctx.index(name)
        slot = self.ctx.slot(idx)
        acc: Dict[Weights, MultiPoly] = {}

        def add(w, mp):
            if mp.is_zero:
                return
            prev = acc.get(w)
            total = mp if prev is None else prev + mp
            if total.is_zero:
                acc.pop(w, None)
            else:
                acc[w] = total

        for w, mp in self.parts.items():
            add(w, mp.partial(idx))
            if slot is not None and w[slot]:
                add(w, mp.scale(w[slot]))
        return ExpPoly(self.ctx, acc)

    def substitute(self, mapping: Dict[str, "ExpPoly"]) -> "ExpPoly":
        """Replace non-translation variables by polynomials (exact composition)."""
        idx_map: Dict[int, ExpPoly] = {}
        for name, repl in mapping.items():
            idx = self.ctx.index(name)
            if self.ctx.slot(idx) is not None:
                raise VariableMismatch(
                    f"cannot substitute translation variable {name!r}"
                )
            _check_ctx(self, repl)
            idx_map[idx] = repl
        if not idx_map:
            return self
        powers: Dict[Tuple[int, int], ExpPoly] = {}

        def power(idx: int, e: int) -> ExpPoly:
            got = powers.get((idx, e))
            if got is None:
                got = idx_map[idx] ** e
                powers[(idx, e)] = got
            return got

        plain: Dict[Weights, Dict[Exponents, GaussRat]] = {}
        composed = ExpPoly.zero(self.ctx)
        for w, mp in self.parts.items():
            for exps, coeff in mp.terms.items():
                hit = [(i, e) for i, e in enumerate(exps) if e and i in idx_map]
                if not hit:
                    bucket = plain.setdefault(w, {})
                    prev = bucket.get(exps)
                    total = coeff if prev is None else prev + coeff
                    if total:
                        bucket[exps] = total
                    else:
                        bucket.pop(exps, None)
                    continue
                base = list(exps)
                for i, _ in hit:
                    base[i] = 0
                term = ExpPoly.monomial(self.ctx, coeff, tuple(base), w)
                for i, e in hit:
                    term = term * power(i, e)
                composed = composed + term
        untouched = ExpPoly(
            self.ctx, {w: MultiPoly(self.ctx, bucket) for w, bucket in plain.items()}
        )
        return untouched + composed

    def coeff_extract(self) -> List[Tuple[Weights, Exponents, GaussRat]]:
        """Complete, duplicate-free term list in canonical ascending order."""
        triples = []
        for w in sorted(self.parts, key=weight_key):
            mp = self.parts[w]
            for exps in sorted(mp.terms, key=grlex_key):
                triples.append((w, exps, mp.terms[exps]))
        return triples

    @classmethod
    def reconstruct(
        cls, ctx: Context, triples: Iterable[Tuple[Weights, Exponents, GaussRat]]
    ) -> "ExpPoly":
        parts: Dict[Weights, Dict[Exponents, GaussRat]] = {}
        for w, exps, coeff in triples:
            bucket = parts.setdefault(tuple(w), {})
            prev = bucket.get(tuple(exps))
            total = coeff if prev is None else prev + coeff
            bucket[tuple(exps)] = total
        return cls(ctx, {w: MultiPoly(ctx, b) for w, b in parts.items()})

    def flatten(self) -> Dict[Tuple[Weights, Exponents], GaussRat]:
        """Coordinates of the polynomial, keyed by (weights, exponents)."""
        return {(w, e): c for w, e, c in self.coeff_extract()}

    def degree_in(self, name: str) -> int:
        """Polynomial degree in one variable (exp factors not counted); -1 if absent."""
        idx = self.ctx.index(name)
        return max((mp.degree_in(idx) for mp in self.parts.values()), default=-1)

    def support(self) -> set:
        """Variable indices with positive exponent in some monomial."""
        seen = set()
        for mp in self.parts.values():
            seen |= mp.support()
        return seen

    def weight_support(self) -> set:
        """Translation-variable indices carrying a nonzero exponential weight."""
        seen = set()
        for w in self.parts:
            for slot, value in enumerate(w):
                if value:
                    seen.add(self.ctx.translations[slot])
        return seen

    def depends_on(self, name: str) -> bool:
        idx = self.ctx.index(name)
        return idx in self.support() or idx in self.weight_support()

    def constant_value(self) -> Optional[GaussRat]:
        """The scalar value if the polynomial is constant, else None."""
        if not self.parts:
            return ZERO
        if len(self.parts) != 1:
            return None
        (w, mp), = self.parts.items()
        if any(w):
            return None
        if len(mp.terms) != 1:
            return None
        (exps, coeff), = mp.terms.items()
        if any(exps):
            return None
        return coeff

    def embed(self, new_ctx: Context) -> "ExpPoly":
        """Re-express in another context, matching variables by name."""
        if new_ctx == self.ctx:
            return self
        old_names = [v.name for v in self.ctx.vars]
        col_map = []
        for name in old_names:
            try:
                col_map.append(new_ctx.index(name))
            except VariableMismatch:
                col_map.append(None)
        old_trans = self.ctx.translation_names()
        slot_map = []
        new_trans = new_ctx.translation_names()
        for name in old_trans:
            slot_map.append(new_trans.index(name) if name in new_trans else None)
        parts: Dict[Weights, Dict[Exponents, GaussRat]] = {}
        for w, mp in self.parts.items():
            new_w = [ZERO] * new_ctx.ntrans
            for s, value in enumerate(w):
                if not value:
                    continue
                if slot_map[s] is None:
                    raise VariableMismatch(
                        f"weighted variable {old_trans[s]!r} missing from target context"
                    )
                new_w[slot_map[s]] = value
            bucket = parts.setdefault(tuple(new_w), {})
            for exps, coeff in mp.terms.items():
                new_e = [0] * new_ctx.nvars
                for i, e in enumerate(exps):
                    if not e:
                        continue
                    if col_map[i] is None:
                        raise VariableMismatch(
                            f"variable {old_names[i]!r} missing from target context"
                        )
                    new_e[col_map[i]] = e
                key = tuple(new_e)
                prev = bucket.get(key)
                bucket[key] = coeff if prev is None else prev + coeff
        return ExpPoly(new_ctx, {w: MultiPoly(new_ctx, b) for w, b in parts.items()})

    def render(self) -> str:
        if self.is_zero:
            return "0"
        chunks = []
        for w in sorted(self.parts, key=weight_key):
            body = render_terms(self.ctx, self.parts[w].sorted_terms())
            if any(w):
                chunks.append(f"exp({render_weight(self.ctx, w)})*({body})")
            else:
                chunks.append(body)
        return " + ".join(chunks)

    def to_json(self) -> list:
        """Nested arrays of (weights, exponents, coefficient), all exact strings."""
        return [
            [[str(x) for x in w], list(e), str(c)]
            for w, e, c in self.coeff_extract()
        ]

    @classmethod
    def from_json(cls, ctx: Context, data: list) -> "ExpPoly":
        triples = []
        for w, e, c in data:
            triples.append(
                (
                    tuple(GaussRat.parse(x) for x in w),
                    tuple(int(x) for x in e),
                    GaussRat.parse(c),
                )
            )
        return cls.reconstruct(ctx, triples)

    def __str__(self) -> str:
        return self.render()

    def __repr__(self) -> str:
        return f"ExpPoly({self})"


def coeff_str(c: GaussRat) -> str:
    """Coefficient rendered for use inside a product."""
    s = str(c)
    if c.re and c.im:
        return f"({s})"
    return s


def _monomial_str(ctx: Context, exps: Exponents) -> str:
    pieces = []
    for i, e in enumerate(exps):
        if not e:
            continue
        name = ctx.vars[i].name
        pieces.append(name if e == 1 else f"{name}^{e}")
    return "*".join(pieces)


def render_terms(ctx: Context, terms: List[Tuple[Exponents, GaussRat]]) -> str:
    if not terms:
        return "0"
    out = []
    for pos, (exps, coeff) in enumerate(terms):
        negative = (coeff.re < 0) if coeff.re else (coeff.im < 0)
        mag = -coeff if negative else coeff
        mono = _monomial_str(ctx, exps)
        if not mono:
            body = coeff_str(mag)
        elif mag == ONE:
            body = mono
        else:
            body = f"{coeff_str(mag)}*{mono}"
        if pos == 0:
            out.append(f"-{body}" if negative else body)
        else:
            out.append(f" - {body}" if negative else f" + {body}")
    return "".join(out)


def render_weight(ctx: Context, weights: Weights) -> str:
    terms = []
    for slot, value in enumerate(weights):
        if not value:
            continue
        name = ctx.vars[ctx.translations[slot]].name
        exps = [0] * ctx.nvars
        exps[ctx.index(name)] = 1
        terms.append((tuple(exps), value))
    return render_terms(ctx, terms)
