"""Weak-coherent-pulse statistics and the worst-case leakage model.

A phase-randomised pulse of intensity alpha_sq is a Poisson mixture of
photon-number states, all carrying the same polarisation angle. The adversary
model is deliberately pessimistic: a pulse with two or more photons leaks its
angle completely, a single-photon pulse is an opaque qubit (the angle stays
hidden), and a vacuum pulse reveals nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .angles import Angle8

LEAK_NOTHING = "nothing"
LEAK_SINGLE = "single_qubit"
LEAK_FULL = "full_leak"


@dataclass(frozen=True)
class PulseRecord:
    """Photon count and polarisation of one transmitted pulse."""

    k: int
    theta: Angle8
    index: int = 0

    def __post_init__(self) -> None:
        if self.k < 0:
            raise ValueError(f"photon count must be >= 0, got {self.k}")


@dataclass(frozen=True)
class LeakView:
    """What the server can extract from one pulse, keyed solely by k.

    ``theta`` is populated only for the full-leak variant; a single-photon
    pulse carries |+_theta> but its classical angle is not observable.
    """

    kind: str
    theta: Angle8 | None = None

    def key(self) -> tuple:
        return (self.kind, None if self.theta is None else self.theta.value)


def sample_pulse(alpha_sq: float, theta: Angle8, rng, index: int = 0) -> PulseRecord:
    """Draw the photon number of one pulse: k ~ Poisson(alpha_sq)."""
    if alpha_sq < 0:
        raise ValueError(f"pulse intensity must be >= 0, got {alpha_sq}")
    return PulseRecord(k=int(rng.poisson(alpha_sq)), theta=theta, index=index)


def poisson_pmf(k: int, alpha_sq: float) -> float:
    if alpha_sq == 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(alpha_sq) - alpha_sq - math.lgamma(k + 1))


def pmf_truncation_cutoff(alpha_sq: float) -> int:
    return math.ceil(alpha_sq + 12.0 * math.sqrt(alpha_sq) + 20.0)


def at_least_one_prob(alpha_sq: float) -> float:
    """p_{alpha,1}: probability the pulse holds at least one photon."""
    if alpha_sq < 0:
        raise ValueError(f"pulse intensity must be >= 0, got {alpha_sq}")
    return -math.expm1(-alpha_sq)


def multiphoton_prob(alpha_sq: float) -> float:
    """p_{alpha,2} = 1 - e^{-a} - a e^{-a}: probability of two or more photons."""
    if alpha_sq < 0:
        raise ValueError(f"pulse intensity must be >= 0, got {alpha_sq}")
    return -math.expm1(-alpha_sq) - alpha_sq * math.exp(-alpha_sq)


def server_view(record: PulseRecord) -> LeakView:
    """Worst-case per-pulse leakage: k=0 nothing, k=1 opaque qubit, k>=2 full."""
    if record.k == 0:
        return LeakView(LEAK_NOTHING)
    if record.k == 1:
        return LeakView(LEAK_SINGLE)
    return LeakView(LEAK_FULL, record.theta)
