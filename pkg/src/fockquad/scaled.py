"""Overflow-safe real numbers stored as ``mantissa * 2**exponent``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = ["ScaledReal"]


def _canonical(value: float, exponent: int) -> tuple[float, int]:
    if value == 0.0:
        return 0.0, 0
    if not math.isfinite(value):
        raise ValueError(f"cannot scale non-finite value {value!r}")
    m, e = math.frexp(value)
    # frexp gives |m| in [0.5, 1); shift to [1, 2)
    return 2.0 * m, exponent + e - 1


@dataclass(frozen=True)
class ScaledReal:
    """A real number ``mantissa * 2**exponent`` with ``|mantissa|`` in [1, 2).

    Zero is stored as ``(0.0, 0)``. The exponent is an unbounded Python int,
    so quantities like ``2**n * n!`` for large ``n`` stay representable.
    """

    mantissa: float
    exponent: int

    def __post_init__(self):
        m, e = _canonical(float(self.mantissa), int(self.exponent))
        object.__setattr__(self, "mantissa", m)
        object.__setattr__(self, "exponent", e)

    @classmethod
    def from_float(cls, value: float, exponent: int = 0) -> ScaledReal:
        return cls(value, exponent)

    @classmethod
    def from_int(cls, value: int) -> ScaledReal:
        shift = max(value.bit_length() - 62, 0)
        if value < 0:
            return -cls.from_int(-value)
        return cls(float(value >> shift), shift)

    @classmethod
    def from_fraction(cls, value: Fraction) -> ScaledReal:
        return cls.from_int(value.numerator) / cls.from_int(value.denominator)

    def is_zero(self) -> bool:
        return self.mantissa == 0.0

    def to_float(self) -> float:
        """Convert to a float; saturates to +-inf or 0 outside float range."""
        if self.exponent > 1100:
            return math.copysign(math.inf, self.mantissa) if self.mantissa else 0.0
        if self.exponent < -1200:
            return math.copysign(0.0, self.mantissa)
        return math.ldexp(self.mantissa, self.exponent)

    __float__ = to_float

    def log2abs(self) -> float:
        if self.is_zero():
            return -math.inf
        return self.exponent + math.log2(abs(self.mantissa))

    def scale2(self, k: int) -> ScaledReal:
        """Multiply by ``2**k`` exactly."""
        return ScaledReal(self.mantissa, self.exponent + k)

    def __neg__(self) -> ScaledReal:
        return ScaledReal(-self.mantissa, self.exponent)

    def __abs__(self) -> ScaledReal:
        return ScaledReal(abs(self.mantissa), self.exponent)

    def _coerce(self, other) -> ScaledReal:
        if isinstance(other, ScaledReal):
            return other
        if isinstance(other, int) and not isinstance(other, bool):
            return ScaledReal.from_int(other)
        if isinstance(other, float):
            return ScaledReal(other, 0)
        return NotImplemented

    def __mul__(self, other) -> ScaledReal:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return ScaledReal(self.mantissa * other.mantissa, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __truediv__(self, other) -> ScaledReal:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_zero():
            raise ZeroDivisionError("ScaledReal division by zero")
        return ScaledReal(self.mantissa / other.mantissa, self.exponent - other.exponent)

    def __rtruediv__(self, other) -> ScaledReal:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __add__(self, other) -> ScaledReal:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        big, small = (self, other) if self.exponent >= other.exponent else (other, self)
        gap = big.exponent - small.exponent
        if gap > 60:
            return big
        return ScaledReal(big.mantissa + math.ldexp(small.mantissa, -gap), big.exponent)

    __radd__ = __add__

    def __sub__(self, other) -> ScaledReal:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> ScaledReal:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __lt__(self, other) -> bool:
        return (self - other).mantissa < 0.0

    def __le__(self, other) -> bool:
        return (self - other).mantissa <= 0.0

    def __gt__(self, other) -> bool:
        return (self - other).mantissa > 0.0

    def __ge__(self, other) -> bool:
        return (self - other).mantissa >= 0.0

    def isclose(self, other, rel_tol: float = 1e-12, abs_tol: float = 0.0) -> bool:
        other = self._coerce(other)
        diff = abs(self - other)
        scale = max(abs(self), abs(other))
        bound = scale * rel_tol if not scale.is_zero() else ScaledReal(0.0, 0)
        return diff <= bound or diff.to_float() <= abs_tol

    def __repr__(self) -> str:
        return f"ScaledReal({self.mantissa!r}, {self.exponent})"
