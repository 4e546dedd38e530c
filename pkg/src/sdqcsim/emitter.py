"""Quantum-emitter abstraction: spin-entangled photon emission and retirement.

An emitter is a spin qubit living in a shared :class:`~sdqcsim.qstate.PureState`
register. Driving it emits a polarisation qubit correlated with the spin
(|down> -> |down,L>, |up> -> |up,R>), i.e. a CNOT from the spin onto a fresh
photon in |0>; a pulse polarised at angle theta additionally imprints RZ(theta)
on the photon. A Hadamard on the spin moves the emitter to the next vertex of
the cluster it is growing; a Z measurement plus a conditional Z correction on
a neighbour retires it.

Emission success under a weak drive is Bernoulli(eta1); a failed pulse
produces no photon label at all.
"""

from __future__ import annotations

from dataclasses import dataclass

from .angles import Angle8
from .qstate import PureState, add_qubit, apply_gate, measure_qubit


@dataclass(frozen=True)
class EmitterModel:
    """Per-pulse single-photon generation probability of one emitter."""

    eta1: float
    id: str = "qe"

    def __post_init__(self) -> None:
        if not 0.0 <= self.eta1 <= 1.0:
            raise ValueError(f"eta1 must be in [0, 1], got {self.eta1}")


def emit_photon(state: PureState, spin: str, theta: Angle8, new_photon: str) -> PureState:
    """Rotated emission: append |0> photon, CNOT(spin -> photon), RZ(theta) on photon.

    theta = 0 reduces to the plain emission operator.
    """
    if spin not in state.qubits:
        raise KeyError(f"unknown spin label {spin!r}")
    state = add_qubit(state, new_photon, 0)
    state = apply_gate(state, "CNOT", [spin, new_photon])
    if theta.value:
        state = apply_gate(state, "RZ", [new_photon], angle=theta.radians())
    return state


def spin_hadamard(state: PureState, spin: str) -> PureState:
    """Move the emitter to the next vertex: H on the spin."""
    return apply_gate(state, "H", [spin])


def retire_spin(state: PureState, spin: str, correction_target: str, rng) -> PureState:
    """Disentangle the spin: Z-measure it and push Z^c onto the correction target."""
    if correction_target not in state.qubits:
        raise KeyError(f"unknown correction target {correction_target!r}")
    outcome, state = measure_qubit(state, spin, "Z", rng)
    if outcome:
        state = apply_gate(state, "Z", [correction_target])
    return state


def sample_emission_success(model: EmitterModel, rng) -> int:
    """One Bernoulli(eta1) draw: did this pulse produce the photon?"""
    return int(rng.random() < model.eta1)
