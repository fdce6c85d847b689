"""Exact scalars: the Gaussian rationals Q(i).

A scalar is re + im*i with both parts arbitrary-precision `Fraction`s, so
every value is automatically in canonical lowest terms and equality of
values is structural equality.  This is the coefficient field for every
polynomial, operator and matrix in symkit; no floating point appears
anywhere downstream.

Values are immutable and hashable.  `str` produces a short canonical form
such as "3/2 - 1/2*i" and `GaussRat.parse` maps it back bit-exactly.
"""

from __future__ import annotations

import re as _re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import SymkitError

__all__ = ["GaussRat", "DivisionByZero", "ZERO", "ONE", "I", "as_gauss"]


class DivisionByZero(SymkitError, ZeroDivisionError):
    """Inverse of the zero scalar was requested."""


Scalar = Union["GaussRat", int, Fraction]


def _frac(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"expected int or Fraction, got {type(value).__name__}")


@dataclass(frozen=True)
class GaussRat:
    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", _frac(self.re))
        object.__setattr__(self, "im", _frac(self.im))

    @staticmethod
    def of(value: Scalar) -> "GaussRat":
        if isinstance(value, GaussRat):
            return value
        return GaussRat(_frac(value))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __add__(self, other) -> "GaussRat":
        other = GaussRat.of(other)
        return GaussRat(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other) -> "GaussRat":
        other = GaussRat.of(other)
        return GaussRat(self.re - other.re, self.im - other.im)

    def __rsub__(self, other) -> "GaussRat":
        return GaussRat.of(other) - self

    def __neg__(self) -> "GaussRat":
        return GaussRat(-self.re, -self.im)

    def __mul__(self, other) -> "GaussRat":
        other = GaussRat.of(other)
        return GaussRat(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def conjugate(self) -> "GaussRat":
        return GaussRat(self.re, -self.im)

    def norm2(self) -> Fraction:
        """|z|^2 = re^2 + im^2, an exact rational."""
        return self.re * self.re + self.im * self.im

    def inv(self) -> "GaussRat":
        n = self.norm2()
        if not n:
            raise DivisionByZero("inverse of zero")
        return GaussRat(self.re / n, -self.im / n)

    def __truediv__(self, other) -> "GaussRat":
        return self * GaussRat.of(other).inv()

    def __rtruediv__(self, other) -> "GaussRat":
        return GaussRat.of(other) * self.inv()

    def __pow__(self, exponent: int) -> "GaussRat":
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("only non-negative integer powers")
        out = ONE
        base = self
        e = exponent
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def sort_key(self):
        """Deterministic total order used for canonical output (not a field order)."""
        return (self.re, self.im)

    def __str__(self) -> str:
        if not self:
            return "0"
        re_str = str(self.re) if self.re else None
        if not self.im:
            return re_str
        mag = abs(self.im)
        im_str = "i" if mag == 1 else f"{mag}*i"
        if re_str is None:
            return im_str if self.im > 0 else "-" + im_str
        return f"{re_str} + {im_str}" if self.im > 0 else f"{re_str} - {im_str}"

    def __repr__(self) -> str:
        return f"GaussRat({self})"

    @staticmethod
    def parse(text: str) -> "GaussRat":
        """Parse the canonical rendering; round-trips bit-exactly with str()."""
        stripped = text.strip()
        compact = stripped.replace(" + ", "+").replace(" - ", "-")
        if " " in compact or "\t" in compact:
            raise ValueError(f"malformed scalar {text!r}")
        if not compact:
            raise ValueError("empty scalar")
        chunks = _re.findall(r"[+-]?[^+-]+", compact)
        if "".join(chunks) != compact:
            raise ValueError(f"malformed scalar {text!r}")
        re_part = Fraction(0)
        im_part = Fraction(0)
        for chunk in chunks:
            sign = -1 if chunk.startswith("-") else 1
            body = chunk.lstrip("+-")
            if not body:
                raise ValueError(f"malformed scalar {text!r}")
            if body == "i":
                im_part += sign
            elif body.endswith("*i"):
                im_part += sign * Fraction(body[:-2])
            else:
                re_part += sign * Fraction(body)
        return GaussRat(re_part, im_part)


ZERO = GaussRat()
ONE = GaussRat(Fraction(1))
I = GaussRat(Fraction(0), Fraction(1))


def as_gauss(value: Scalar) -> GaussRat:
    return GaussRat.of(value)
