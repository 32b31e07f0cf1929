"""Fixed-point coefficient formats and the integer <-> real mapping.

A coefficient with word length ``w`` and MSB position ``g`` is stored as a
two's complement integer ``c'`` in ``[-2^(w-1), 2^(w-1)-1]`` and stands for
the dyadic rational ``c' * 2^(g-w+1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable


def pow2(e: int) -> Fraction:
    """Exact 2**e for any integer e."""
    return Fraction(1 << e) if e >= 0 else Fraction(1, 1 << -e)


@dataclass(frozen=True)
class CoefficientFormat:
    w: int
    g: int

    def __post_init__(self) -> None:
        if self.w < 2:
            raise ValueError(f"word length must be >= 2, got {self.w}")

    @property
    def lsb(self) -> int:
        return self.g - self.w + 1

    @property
    def scale(self) -> Fraction:
        return pow2(self.lsb)

    def integer_range(self) -> tuple[int, int]:
        return integer_range(self)

    def contains(self, c: int) -> bool:
        lo, hi = integer_range(self)
        return lo <= c <= hi

    def to_real(self, c: int) -> Fraction:
        return c * self.scale

    def from_real(self, x) -> int:
        """Integer code of ``x``; raises if ``x`` is not exactly representable."""
        q = Fraction(x) / self.scale
        if q.denominator != 1 or not self.contains(q.numerator):
            raise ValueError(f"{x} is not representable with w={self.w}, g={self.g}")
        return q.numerator


def integer_range(fmt: CoefficientFormat) -> tuple[int, int]:
    half = 1 << (fmt.w - 1)
    return -half, half - 1


def msb_for_bound(max_abs: float) -> int:
    """Smallest g with 2^g >= max_abs."""
    if not max_abs > 0:
        raise ValueError("max_abs must be positive")
    x = Fraction(max_abs)
    g = math.floor(math.log2(max_abs))
    # correct for floating point error in log2
    while pow2(g) < x:
        g += 1
    while pow2(g - 1) >= x:
        g -= 1
    return g


@dataclass(frozen=True)
class QuantizedFilter:
    """Second-order section with integer coefficients.

    ``H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`` where the
    real coefficients are the integers scaled by their format's LSB weight.
    """

    a1: int
    a2: int
    b0: int
    b1: int
    b2: int
    fmt_a: CoefficientFormat
    fmt_b: CoefficientFormat

    def __post_init__(self) -> None:
        if self.fmt_a.w != self.fmt_b.w:
            raise ValueError("a and b must share the word length")
        for name in ("a1", "a2"):
            if not self.fmt_a.contains(getattr(self, name)):
                raise ValueError(f"{name}={getattr(self, name)} outside w={self.fmt_a.w}")
        for name in ("b0", "b1", "b2"):
            if not self.fmt_b.contains(getattr(self, name)):
                raise ValueError(f"{name}={getattr(self, name)} outside w={self.fmt_b.w}")

    @property
    def w(self) -> int:
        return self.fmt_a.w

    @property
    def a_int(self) -> tuple[int, int]:
        return (self.a1, self.a2)

    @property
    def b_int(self) -> tuple[int, int, int]:
        return (self.b0, self.b1, self.b2)

    @property
    def a(self) -> tuple[Fraction, Fraction]:
        s = self.fmt_a.scale
        return (self.a1 * s, self.a2 * s)

    @property
    def b(self) -> tuple[Fraction, Fraction, Fraction]:
        s = self.fmt_b.scale
        return (self.b0 * s, self.b1 * s, self.b2 * s)

    def to_real(self) -> tuple[Fraction, Fraction, Fraction, Fraction, Fraction]:
        return to_real(self)

    def nonzeros(self) -> int:
        return sum(1 for c in self.a_int + self.b_int if c != 0)

    def to_dict(self) -> dict:
        a1, a2, b0, b1, b2 = to_real(self)
        return {
            "w": self.w,
            "g_a": self.fmt_a.g,
            "g_b": self.fmt_b.g,
            "a_int": list(self.a_int),
            "b_int": list(self.b_int),
            "a": [str(a1), str(a2)],
            "b": [str(b0), str(b1), str(b2)],
            "a_decimal": [float(a1), float(a2)],
            "b_decimal": [float(b0), float(b1), float(b2)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuantizedFilter":
        w = int(d["w"])
        a1, a2 = (int(v) for v in d["a_int"])
        b0, b1, b2 = (int(v) for v in d["b_int"])
        return cls(a1, a2, b0, b1, b2,
                   CoefficientFormat(w, int(d["g_a"])), CoefficientFormat(w, int(d["g_b"])))

    @classmethod
    def from_reals(cls, a: Iterable, b: Iterable, w: int, g_a: int, g_b: int) -> "QuantizedFilter":
        fa, fb = CoefficientFormat(w, g_a), CoefficientFormat(w, g_b)
        a1, a2 = (fa.from_real(x) for x in a)
        b0, b1, b2 = (fb.from_real(x) for x in b)
        return cls(a1, a2, b0, b1, b2, fa, fb)


def to_real(q: QuantizedFilter) -> tuple[Fraction, Fraction, Fraction, Fraction, Fraction]:
    """Exact (a1, a2, b0, b1, b2)."""
    return q.a + q.b
