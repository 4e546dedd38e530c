"""Exact arithmetic on the eight protocol angles {j*pi/4}.

Every angle exchanged between client and server lives on this grid, so all
angle bookkeeping (rotation sums, sign flips, pi-shifts from measurement
outcomes) is done modulo 8 on integers and only converted to radians at the
point where a gate matrix is built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class Angle8:
    """An angle j*pi/4 stored as the integer j mod 8."""

    value: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", self.value % 8)

    def radians(self) -> float:
        return self.value * math.pi / 4.0

    def __add__(self, other: "Angle8") -> "Angle8":
        return Angle8(self.value + other.value)

    def __sub__(self, other: "Angle8") -> "Angle8":
        return Angle8(self.value - other.value)

    def __neg__(self) -> "Angle8":
        return Angle8(-self.value)

    def flip_if(self, bit: int) -> "Angle8":
        """Return (-1)**bit times the angle."""
        return -self if bit & 1 else self

    def plus_pi_if(self, bit: int) -> "Angle8":
        """Return the angle shifted by pi when bit is set."""
        return Angle8(self.value + 4) if bit & 1 else self

    def __repr__(self) -> str:
        return f"Angle8({self.value})"


ZERO = Angle8(0)
PI = Angle8(4)
HALF_PI = Angle8(2)

ALL_ANGLES = tuple(Angle8(j) for j in range(8))


def uniform_angle(rng) -> Angle8:
    """Draw an angle uniformly from the 8-element set."""
    return Angle8(int(rng.integers(8)))
