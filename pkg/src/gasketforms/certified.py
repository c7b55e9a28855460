"""Certified values: a number together with a sound error radius.

Exact results carry a rational value and radius zero.  Certified numeric
results carry a float value and a rational radius derived from the geometric
tail constants of the underlying approximation scheme; radii are always upper
bounds, so enclosures stay sound under addition and scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Number = Union[Fraction, float]

_ZERO = Fraction(0)


def sqrt_upper(x: Fraction, scale: int = 10**12) -> Fraction:
    """A rational upper bound for sqrt(x), tight to ~1/scale relatively."""
    if x < 0:
        raise ValueError("sqrt of negative bound")
    if x == 0:
        return _ZERO
    n = x.numerator * x.denominator * scale * scale
    s = math.isqrt(n)
    if s * s < n:
        s += 1
    return Fraction(s, x.denominator * scale)


@dataclass(frozen=True)
class CertifiedValue:
    value: Number
    radius: Fraction = _ZERO

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    @property
    def exact(self) -> bool:
        return self.radius == 0 and isinstance(self.value, Fraction)

    @staticmethod
    def from_exact(v) -> "CertifiedValue":
        return CertifiedValue(Fraction(v), _ZERO)

    # -- interval views ------------------------------------------------------
    def lower(self) -> Number:
        return self.value - self.radius

    def upper(self) -> Number:
        return self.value + self.radius

    def contains(self, x) -> bool:
        return abs(self.value - x) <= self.radius + _float_slop(self)

    def encloses(self, other: "CertifiedValue") -> bool:
        """Whether every point of ``other`` lies in this enclosure."""
        slop = _float_slop(self) + _float_slop(other)
        return abs(self.value - other.value) + other.radius <= self.radius + slop

    def overlaps(self, other: "CertifiedValue") -> bool:
        slop = _float_slop(self) + _float_slop(other)
        return abs(self.value - other.value) <= self.radius + other.radius + slop

    # -- arithmetic ------------------------------------------------------------
    def __add__(self, other: "CertifiedValue") -> "CertifiedValue":
        return CertifiedValue(self.value + other.value, self.radius + other.radius)

    def __sub__(self, other: "CertifiedValue") -> "CertifiedValue":
        return CertifiedValue(self.value - other.value, self.radius + other.radius)

    def __neg__(self) -> "CertifiedValue":
        return CertifiedValue(-self.value, self.radius)

    def scaled(self, c) -> "CertifiedValue":
        c = Fraction(c)
        return CertifiedValue(self.value * c, self.radius * abs(c))

    def __repr__(self):
        if self.exact:
            return f"CertifiedValue({self.value})"
        return f"CertifiedValue({float(self.value)!r} ± {float(self.radius):.3e})"

    # -- serialization ---------------------------------------------------------
    def to_json(self) -> dict:
        if self.exact:
            v = self.value
            return {"value": f"{v.numerator}/{v.denominator}", "radius": 0.0, "exact": True}
        return {"value": float(self.value), "radius": float(self.radius), "exact": False}

    @staticmethod
    def from_json(data: dict) -> "CertifiedValue":
        if data.get("exact"):
            return CertifiedValue.from_exact(Fraction(data["value"]))
        return CertifiedValue(float(data["value"]), Fraction(data["radius"]).limit_denominator(10**15))


def _float_slop(cv: CertifiedValue) -> Fraction:
    """Round-off allowance when float values are involved in comparisons."""
    if isinstance(cv.value, Fraction):
        return _ZERO
    return Fraction(1, 10**9) * (1 + Fraction(abs(cv.value)).limit_denominator(10**6))
