"""Dense state-vector simulator over labelled spin and polarisation qubits.

States are immutable values: every operation returns a fresh ``PureState``,
which makes trajectory-level parallelism safe and keeps protocol code free of
aliasing bugs. Measured or discarded qubits are removed from the register
(the protocols continuously create and destroy photons), so label sets shrink
as a protocol progresses.

Conventions:
  - ``RZ(theta) = diag(1, e^{i theta})`` (a global phase away from
    ``exp(-i theta Z / 2)``); all state comparisons are phase-insensitive.
  - the rotated measurement basis ``rotated(delta)`` applies ``RZ(-delta)``
    and then measures in the |+/-> basis; ``X`` is ``rotated(0)``.
  - photon loss is modelled as measure-in-Z-and-forget, which reproduces the
    partial trace in distribution over trajectories.

The register is capped at 20 qubits (state vector) and 5 qubits for the
exact density-matrix oracle used in trace-out and view-equality checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .angles import Angle8

MAX_QUBITS = 20
MAX_ORACLE_QUBITS = 5
NORM_TOL = 1e-12

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)
_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.array([[1.0, 0.0], [0.0, np.exp(1j * theta)]], dtype=complex)


@dataclass(frozen=True)
class PureState:
    """A normalized complex amplitude array over an ordered set of labels."""

    qubits: tuple[str, ...]
    amps: np.ndarray  # shape (2,) * len(qubits)

    def __post_init__(self) -> None:
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"duplicate qubit labels: {self.qubits}")
        if len(self.qubits) > MAX_QUBITS:
            raise ValueError(
                f"register cap exceeded: {len(self.qubits)} > {MAX_QUBITS} qubits"
            )
        expected = (2,) * len(self.qubits)
        if self.amps.shape != expected:
            raise ValueError(f"amplitude shape {self.amps.shape} != {expected}")
        norm = float(np.sum(np.abs(self.amps) ** 2))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state not normalized: sum |amp|^2 = {norm}")

    @classmethod
    def from_amplitudes(cls, qubits: Sequence[str], vector) -> "PureState":
        qubits = tuple(qubits)
        arr = np.asarray(vector, dtype=complex).reshape((2,) * len(qubits))
        arr = arr / math.sqrt(float(np.sum(np.abs(arr) ** 2)))
        return cls(qubits, arr)

    @classmethod
    def zeros(cls, qubits: Sequence[str]) -> "PureState":
        qubits = tuple(qubits)
        arr = np.zeros((2,) * len(qubits), dtype=complex)
        arr[(0,) * len(qubits)] = 1.0
        return cls(qubits, arr)

    @classmethod
    def plus(cls, qubits: Sequence[str]) -> "PureState":
        qubits = tuple(qubits)
        n = len(qubits)
        arr = np.full((2,) * n, 2.0 ** (-n / 2.0), dtype=complex)
        return cls(qubits, arr)

    @classmethod
    def single(cls, label: str, alpha: complex, beta: complex) -> "PureState":
        return cls.from_amplitudes([label], [alpha, beta])

    def axis(self, label: str) -> int:
        try:
            return self.qubits.index(label)
        except ValueError:
            raise KeyError(f"unknown qubit label {label!r}") from None

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    def norm_error(self) -> float:
        return abs(float(np.sum(np.abs(self.amps) ** 2)) - 1.0)

    def vector(self, order: Sequence[str] | None = None) -> np.ndarray:
        """Flat amplitude vector, optionally with axes permuted to ``order``."""
        if order is None:
            return self.amps.reshape(-1)
        order = tuple(order)
        if set(order) != set(self.qubits) or len(order) != len(self.qubits):
            raise ValueError(f"label sets differ: {order} vs {self.qubits}")
        perm = [self.qubits.index(q) for q in order]
        return np.transpose(self.amps, perm).reshape(-1)

    def tensor(self, other: "PureState") -> "PureState":
        if set(self.qubits) & set(other.qubits):
            raise ValueError("label collision in tensor product")
        amps = np.tensordot(self.amps, other.amps, axes=0)
        return PureState(self.qubits + other.qubits, amps)


def add_qubit(state: PureState, label: str, bit: int = 0) -> PureState:
    """Append a fresh qubit in |0> or |1>."""
    if label in state.qubits:
        raise ValueError(f"label collision: {label!r} already in register")
    single = np.zeros(2, dtype=complex)
    single[bit] = 1.0
    amps = np.tensordot(state.amps, single, axes=0)
    return PureState(state.qubits + (label,), amps)


def _apply_1q(state: PureState, matrix: np.ndarray, target: str) -> PureState:
    ax = state.axis(target)
    amps = np.tensordot(matrix, state.amps, axes=([1], [ax]))
    amps = np.moveaxis(amps, 0, ax)
    return PureState(state.qubits, amps)


def _apply_cz(state: PureState, a: str, b: str) -> PureState:
    ia, ib = state.axis(a), state.axis(b)
    amps = state.amps.copy()
    idx = [slice(None)] * state.n_qubits
    idx[ia], idx[ib] = 1, 1
    amps[tuple(idx)] *= -1.0
    return PureState(state.qubits, amps)


def _apply_cnot(state: PureState, control: str, target: str) -> PureState:
    ic, it = state.axis(control), state.axis(target)
    amps = state.amps.copy()
    sel = [slice(None)] * state.n_qubits
    sel[ic] = 1
    sub = amps[tuple(sel)]
    amps[tuple(sel)] = np.flip(sub, axis=it if it < ic else it - 1)
    return PureState(state.qubits, amps)


def apply_gate(
    state: PureState,
    gate: str,
    targets: Sequence[str],
    angle: float | None = None,
) -> PureState:
    """Apply one of H, X, Z, RZ(angle), CZ, CNOT to the named targets.

    ``angle`` (radians) is required for RZ and rejected otherwise. Two-qubit
    gates take exactly two distinct targets; CNOT is control-first.
    """
    targets = list(targets)
    if gate in ("H", "X", "Z", "RZ"):
        if len(targets) != 1:
            raise ValueError(f"{gate} takes one target, got {targets}")
        if gate == "RZ":
            if angle is None:
                raise ValueError("RZ requires an angle")
            out = _apply_1q(state, _rz(angle), targets[0])
        else:
            if angle is not None:
                raise ValueError(f"{gate} takes no angle")
            out = _apply_1q(state, {"H": _H, "X": _X, "Z": _Z}[gate], targets[0])
    elif gate in ("CZ", "CNOT"):
        if len(targets) != 2 or targets[0] == targets[1]:
            raise ValueError(f"{gate} takes two distinct targets, got {targets}")
        if gate == "CZ":
            out = _apply_cz(state, targets[0], targets[1])
        else:
            out = _apply_cnot(state, targets[0], targets[1])
    else:
        raise ValueError(f"unknown gate {gate!r}")
    assert out.norm_error() < NORM_TOL, "gate broke normalization"
    return out


def _measurement_rotation(state: PureState, target: str, basis) -> tuple[PureState, bool]:
    """Rotate ``target`` so the requested basis becomes the Z basis.

    Returns the rotated state and whether the basis was computational.
    """
    if basis == "Z":
        return state, True
    if basis == "X":
        basis = Angle8(0)
    if isinstance(basis, Angle8):
        s = state
        if basis.value:
            s = _apply_1q(s, _rz(-basis.radians()), target)
        return _apply_1q(s, _H, target), False
    raise ValueError(f"unknown measurement basis {basis!r}")


def _collapse(state: PureState, target: str, outcome: int) -> tuple[float, PureState | None]:
    ax = state.axis(target)
    sub = np.take(state.amps, outcome, axis=ax)
    prob = float(np.sum(np.abs(sub) ** 2))
    if prob <= 1e-15:
        return prob, None
    labels = tuple(q for q in state.qubits if q != target)
    return prob, PureState(labels, sub / math.sqrt(prob))


def project_qubit(
    state: PureState, target: str, basis, outcome: int
) -> tuple[float, PureState]:
    """Deterministically collapse onto ``outcome``; returns (probability, state).

    Raises if the branch has (numerically) zero probability — callers that
    enumerate branches must check probabilities first via branch weights.
    """
    rotated, _ = _measurement_rotation(state, target, basis)
    prob, collapsed = _collapse(rotated, target, outcome)
    if collapsed is None:
        raise ValueError(
            f"zero-probability branch: outcome {outcome} on {target!r} has p={prob}"
        )
    return prob, collapsed


def branch_probability(state: PureState, target: str, basis, outcome: int) -> float:
    rotated, _ = _measurement_rotation(state, target, basis)
    ax = rotated.axis(target)
    sub = np.take(rotated.amps, outcome, axis=ax)
    return float(np.sum(np.abs(sub) ** 2))


def measure_qubit(state: PureState, target: str, basis, rng) -> tuple[int, PureState]:
    """Born-rule measurement; the measured qubit is removed from the register.

    ``basis`` is "Z", "X", or an :class:`Angle8` delta for the rotated basis
    (apply RZ(-delta), then measure |+/->).
    """
    rotated, _ = _measurement_rotation(state, target, basis)
    ax = rotated.axis(target)
    p0 = float(np.sum(np.abs(np.take(rotated.amps, 0, axis=ax)) ** 2))
    outcome = 0 if rng.random() < p0 else 1
    prob, collapsed = _collapse(rotated, target, outcome)
    if collapsed is None:  # p0 was 0 or 1 to rounding; take the other branch
        outcome = 1 - outcome
        _, collapsed = _collapse(rotated, target, outcome)
    assert collapsed.norm_error() < NORM_TOL
    return outcome, collapsed


def discard_qubit(state: PureState, target: str, rng) -> PureState:
    """Lose a qubit: measure in Z and forget the outcome (trajectory mixing)."""
    _, collapsed = measure_qubit(state, target, "Z", rng)
    return collapsed


def fidelity_up_to_phase(a: PureState, b: PureState) -> float:
    """|<a|b>|^2 after aligning label order; global phase is irrelevant."""
    if set(a.qubits) != set(b.qubits):
        raise ValueError(f"label sets differ: {a.qubits} vs {b.qubits}")
    overlap = np.vdot(a.vector(), b.vector(a.qubits))
    return float(min(1.0, abs(overlap) ** 2))


def states_equal_up_to_phase(a: PureState, b: PureState, tol: float = 1e-10) -> bool:
    return fidelity_up_to_phase(a, b) > 1.0 - tol


@dataclass(frozen=True)
class DensityOracle:
    """Exact density matrix on <= 5 qubits, used as the trace-out oracle."""

    qubits: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self) -> None:
        k = len(self.qubits)
        if k > MAX_ORACLE_QUBITS:
            raise ValueError(f"density oracle capped at {MAX_ORACLE_QUBITS} qubits")
        if self.matrix.shape != (2**k, 2**k):
            raise ValueError("density matrix shape mismatch")

    @classmethod
    def from_pure(cls, state: PureState, keep: Iterable[str] | None = None) -> "DensityOracle":
        keep = tuple(keep) if keep is not None else state.qubits
        vec = state.vector(keep + tuple(q for q in state.qubits if q not in keep))
        k = len(keep)
        rest = state.n_qubits - k
        mat = vec.reshape(2**k, 2**rest)
        rho = mat @ mat.conj().T
        return cls(keep, rho)

    @classmethod
    def mixture(cls, parts: Sequence[tuple[float, "DensityOracle"]]) -> "DensityOracle":
        qubits = parts[0][1].qubits
        rho = np.zeros_like(parts[0][1].matrix)
        for weight, oracle in parts:
            if oracle.qubits != qubits:
                raise ValueError("mixture parts must share labels and order")
            rho = rho + weight * oracle.matrix
        return cls(qubits, rho)

    def reduce(self, keep: Iterable[str]) -> "DensityOracle":
        keep = tuple(keep)
        perm = [self.qubits.index(q) for q in keep] + [
            self.qubits.index(q) for q in self.qubits if q not in keep
        ]
        n = len(self.qubits)
        k = len(keep)
        t = self.matrix.reshape((2,) * (2 * n))
        t = np.transpose(t, perm + [p + n for p in perm])
        t = t.reshape(2**k, 2 ** (n - k), 2**k, 2 ** (n - k))
        rho = np.einsum("ajbj->ab", t)
        return DensityOracle(keep, rho)

    def check_physical(self, trace_tol: float = 1e-10, psd_tol: float = 1e-9) -> None:
        if not np.allclose(self.matrix, self.matrix.conj().T, atol=1e-10):
            raise ValueError("density matrix is not Hermitian")
        tr = float(np.trace(self.matrix).real)
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"trace {tr} != 1")
        eigs = np.linalg.eigvalsh(self.matrix)
        if eigs.min() < -psd_tol:
            raise ValueError(f"negative eigenvalue {eigs.min()}")

    def allclose(self, other: "DensityOracle", tol: float = 1e-10) -> bool:
        if set(self.qubits) != set(other.qubits):
            return False
        perm_other = other if other.qubits == self.qubits else other._permuted(self.qubits)
        return bool(np.allclose(self.matrix, perm_other.matrix, atol=tol))

    def _permuted(self, order: tuple[str, ...]) -> "DensityOracle":
        n = len(self.qubits)
        perm = [self.qubits.index(q) for q in order]
        t = self.matrix.reshape((2,) * (2 * n))
        t = np.transpose(t, perm + [p + n for p in perm])
        return DensityOracle(order, t.reshape(2**n, 2**n))


def maximally_mixed(label: str) -> DensityOracle:
    return DensityOracle((label,), np.eye(2, dtype=complex) / 2.0)
