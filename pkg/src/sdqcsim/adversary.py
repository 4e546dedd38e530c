"""Security-proof simulators and exact server-view distribution comparisons.

The security claims are concrete and finite at desk scale, so they are
checked by enumeration rather than proved: for every assignment of the
client's hidden angles and coin flips, the server's view (classical messages
plus the density matrix of the qubits it holds) is tabulated with exact
rational probabilities, and the real protocol's distribution is compared
with the simulator's, or across different client inputs.

View canonicalization: classical payloads are kept verbatim; quantum parts
are reduced to a density matrix over the server-held qubits (pulse slots
with exactly one photon, in index order). Multi-photon pulses are replaced
by their fully leaked angle, the worst-case model.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .angles import ALL_ANGLES, Angle8, uniform_angle
from .graphs import Graph, build_blind_graph_state
from .protocols import CLIENT, SERVER, Transcript
from .pulses import LEAK_FULL, LEAK_NOTHING, LEAK_SINGLE
from .qstate import PureState, add_qubit, apply_gate, project_qubit

_I2 = np.eye(2, dtype=complex) / 2.0


def _plus_density(theta: Angle8) -> np.ndarray:
    v = np.array([1.0, np.exp(1j * theta.radians())], dtype=complex) / np.sqrt(2.0)
    return np.outer(v, v.conj())


def _kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


class ViewDistribution:
    """Exact-probability map over canonical views, with optional quantum parts."""

    def __init__(self) -> None:
        self.probs: dict[tuple, Fraction] = {}
        self._density_sums: dict[tuple, np.ndarray] = {}

    def add(self, key: tuple, weight: Fraction, density: np.ndarray | None = None) -> None:
        self.probs[key] = self.probs.get(key, Fraction(0)) + weight
        if density is not None:
            acc = self._density_sums.get(key)
            scaled = float(weight) * density
            self._density_sums[key] = scaled if acc is None else acc + scaled

    def density(self, key: tuple) -> np.ndarray | None:
        acc = self._density_sums.get(key)
        if acc is None:
            return None
        return acc / float(self.probs[key])

    def validate(self) -> None:
        total = sum(self.probs.values(), Fraction(0))
        if abs(float(total) - 1.0) > 1e-10:
            raise ValueError(f"view probabilities sum to {total}")

    def tv(self, other: "ViewDistribution") -> float:
        keys = set(self.probs) | set(other.probs)
        acc = Fraction(0)
        for k in keys:
            acc += abs(self.probs.get(k, Fraction(0)) - other.probs.get(k, Fraction(0)))
        return float(acc) / 2.0

    def equals(self, other: "ViewDistribution", tol: float = 1e-12) -> bool:
        if set(self.probs) != set(other.probs):
            return False
        for k, p in self.probs.items():
            if p != other.probs[k]:
                return False
            da, db = self.density(k), other.density(k)
            if (da is None) != (db is None):
                return False
            if da is not None and not np.allclose(da, db, atol=tol):
                return False
        return True


def _leak_entries(k: Sequence[int], thetas: Mapping[int, Angle8]) -> tuple:
    entries = []
    for i, ki in enumerate(k, start=1):
        if ki == 0:
            entries.append((LEAK_NOTHING,))
        elif ki == 1:
            entries.append((LEAK_SINGLE,))
        else:
            entries.append((LEAK_FULL, thetas[i].value))
    return tuple(entries)


def _held_qubit_slots(k: Sequence[int]) -> list[int]:
    return [i for i, ki in enumerate(k, start=1) if ki == 1]


# ---------------------------------------------------------------------------
# Threshold gadget: real view and Simulator 2, exact enumeration
# ---------------------------------------------------------------------------

def real_gadget_view(theta: Angle8, k: Sequence[int], s_set: Sequence[int]) -> ViewDistribution:
    """Server view of the real gadget for a fixed photon-count vector and S.

    Classical part: per-pulse leak record, the correction angle, and m_x.
    Quantum part: the single-photon pulses the server holds, conditioned on
    the classical values.
    """
    n = len(k)
    s_set = sorted(s_set)
    slots = _held_qubit_slots(k)
    dist = ViewDistribution()
    base = Fraction(1, 8**n * 2)
    for combo in np.ndindex(*([8] * n)):
        thetas = {i: Angle8(int(combo[i - 1])) for i in range(1, n + 1)}
        for m_x in (0, 1):
            theta_bar = theta.flip_if(m_x)
            for i in s_set:
                theta_bar = theta_bar - thetas[i]
            key = (_leak_entries(k, thetas), ("theta_bar", theta_bar.value), ("m_x", m_x))
            density = _kron_all([_plus_density(thetas[i]) for i in slots]) if slots else None
            dist.add(key, base, density)
    dist.validate()
    return dist


def simulator2_view(theta: Angle8, k: Sequence[int], s_set: Sequence[int]) -> ViewDistribution:
    """Simulator-2 view for fixed (k, S): EPR halves for single-photon slots,
    teleportation onto a random slot s, correction assembled from the
    steering outcomes. Emits the single view ("error",) when no slot in S
    holds at most one photon.
    """
    n = len(k)
    s_set = sorted(s_set)
    slots = _held_qubit_slots(k)
    dist = ViewDistribution()
    singles = [i for i in s_set if k[i - 1] == 1]
    vacuums = [i for i in s_set if k[i - 1] == 0]
    candidates = singles if singles else vacuums
    if not candidates:
        dist.add((("error",),), Fraction(1))
        dist.validate()
        return dist
    pick = Fraction(1, len(candidates))
    steered = lambda s: [i for i in s_set if k[i - 1] == 1 and i != s]
    for combo in np.ndindex(*([8] * n)):
        thetas = {i: Angle8(int(combo[i - 1])) for i in range(1, n + 1)}
        base = Fraction(1, 8**n)
        for s in candidates:
            ms = steered(s)
            for m_bits in np.ndindex(*([2] * len(ms))):
                m = dict(zip(ms, m_bits))
                for m_sx in (0, 1):
                    for m_sz in (0, 1):
                        weight = base * pick * Fraction(1, 2 ** len(ms)) * Fraction(1, 4)
                        theta_bar = (-thetas[s].flip_if(m_sx)).plus_pi_if(m_sz)
                        for i in s_set:
                            if i == s:
                                continue
                            if i in m:  # steered EPR half: outcome shifts by pi
                                theta_bar = theta_bar - thetas[i].plus_pi_if(m[i])
                            else:
                                theta_bar = theta_bar - thetas[i]
                        mats = []
                        for i in slots:
                            if i == s:
                                angle = (theta + thetas[s]).flip_if(m_sx).plus_pi_if(m_sz)
                                mats.append(_plus_density(angle))
                            elif i in m:
                                mats.append(_plus_density(thetas[i].plus_pi_if(m[i])))
                            else:
                                mats.append(_I2)  # EPR half never steered
                        key = (
                            _leak_entries(k, thetas),
                            ("theta_bar", theta_bar.value),
                            ("m_x", m_sx),
                        )
                        dist.add(key, weight, _kron_all(mats) if mats else None)
    dist.validate()
    return dist


# ---------------------------------------------------------------------------
# Post-selected gadget: real view and Simulator 3
# ---------------------------------------------------------------------------

def real_postselected_view(theta: Angle8, k: Sequence[int]) -> ViewDistribution:
    """Real view of the post-selected gadget: pulses and m_x; the last pulse
    angle pre-compensates the total rotation."""
    n = len(k)
    slots = _held_qubit_slots(k)
    dist = ViewDistribution()
    base = Fraction(1, 8 ** (n - 1) * 2)
    for combo in np.ndindex(*([8] * (n - 1))):
        for m_x in (0, 1):
            thetas = {i: Angle8(int(combo[i - 1])) for i in range(1, n)}
            last = theta.flip_if(m_x)
            for i in range(1, n):
                last = last - thetas[i]
            thetas[n] = last
            key = (_leak_entries(k, thetas), ("m_x", m_x))
            density = _kron_all([_plus_density(thetas[i]) for i in slots]) if slots else None
            dist.add(key, base, density)
    dist.validate()
    return dist


def simulator3_view(theta: Angle8, k: Sequence[int]) -> ViewDistribution:
    """Simulator-3 view: the oracle qubit is rotated into a random slot with a
    uniform sign bit; all other angles sum to zero. Emits ("error",) when
    every pulse is multi-photon."""
    n = len(k)
    slots = _held_qubit_slots(k)
    dist = ViewDistribution()
    singles = [i for i in range(1, n + 1) if k[i - 1] == 1]
    vacuums = [i for i in range(1, n + 1) if k[i - 1] == 0]
    candidates = singles if singles else vacuums
    if not candidates:
        dist.add((("error",),), Fraction(1))
        dist.validate()
        return dist
    pick = Fraction(1, len(candidates))
    base = Fraction(1, 8 ** (n - 1) * 2)
    for combo in np.ndindex(*([8] * (n - 1))):
        for m_sx in (0, 1):
            thetas = {i: Angle8(int(combo[i - 1])) for i in range(1, n)}
            running = Angle8(0)
            for i in range(1, n):
                running = running + thetas[i]
            thetas[n] = -running
            for s in candidates:
                mats = []
                for i in slots:
                    if i == s:
                        mats.append(_plus_density(theta.flip_if(m_sx) + thetas[s]))
                    else:
                        mats.append(_plus_density(thetas[i]))
                key = (_leak_entries(k, thetas), ("m_x", m_sx))
                dist.add(key, base * pick, _kron_all(mats) if mats else None)
    dist.validate()
    return dist


# ---------------------------------------------------------------------------
# Blindness: classical view TV across client inputs
# ---------------------------------------------------------------------------

def blindness_check(n: int, k: Sequence[int], s_set: Sequence[int]) -> float:
    """Max pairwise total variation between server views across all client
    angles, for a fixed photon-count vector and accepted set S.

    The view here is purely classical — per-pulse leak records (single-photon
    pulses stay opaque), the correction angle, and m_x — enumerated exactly
    over all 8^n angle assignments and the m_x coin.
    """
    if n > 3:
        raise ValueError("exhaustive blindness check capped at n = 3")
    if len(k) != n:
        raise ValueError("photon-count vector length must equal n")
    views = []
    for theta in ALL_ANGLES:
        dist = ViewDistribution()
        base = Fraction(1, 8**n * 2)
        for combo in np.ndindex(*([8] * n)):
            thetas = {i: Angle8(int(combo[i - 1])) for i in range(1, n + 1)}
            for m_x in (0, 1):
                theta_bar = theta.flip_if(m_x)
                for i in sorted(s_set):
                    theta_bar = theta_bar - thetas[i]
                key = (
                    _leak_entries(k, thetas),
                    ("theta_bar", theta_bar.value),
                    ("m_x", m_x),
                )
                dist.add(key, base)
        dist.validate()
        views.append(dist)
    worst = 0.0
    for a in range(len(views)):
        for b in range(a + 1, len(views)):
            worst = max(worst, views[a].tv(views[b]))
    return worst


# ---------------------------------------------------------------------------
# Simulator 1: blind graph RSP
# ---------------------------------------------------------------------------

def oracle_labels(graph: Graph) -> dict[str, str]:
    return {v: f"oracle.{v}" for v in graph.vertices}


def _oracle_state(graph: Graph, thetas: Mapping[str, Angle8]) -> PureState:
    labels = oracle_labels(graph)
    relabeled = Graph(
        vertices=tuple(labels[v] for v in graph.vertices),
        edges=tuple((labels[a], labels[b]) for a, b in graph.edges),
        order=tuple(labels[v] for v in graph.order),
    )
    return build_blind_graph_state(relabeled, {labels[v]: thetas[v] for v in graph.vertices})


def simulator1_graph(
    graph: Graph,
    thetas: Mapping[str, Angle8],
    server_state: PureState,
    server_qubits: Mapping[str, str],
    rng,
    photon_prefix: str = "sim.ph.",
) -> tuple[PureState, dict[str, int], Transcript]:
    """Emulate every extender call from one oracle copy of |G(theta)>.

    Per vertex: undo the CZ layer once, CNOT the server's qubit onto the
    oracle qubit, Z-measure it (bit b), CNOT onto a fresh |0> photon, and
    hand both qubits back with b.
    """
    labels = oracle_labels(graph)
    state = server_state.tensor(_oracle_state(graph, thetas))
    for a, b in graph.edges:
        state = apply_gate(state, "CZ", [labels[a], labels[b]])
    transcript = Transcript()
    bits: dict[str, int] = {}
    for v in graph.order:
        sq = server_qubits[v]
        state = apply_gate(state, "CNOT", [sq, labels[v]])
        from .qstate import measure_qubit

        b, state = measure_qubit(state, labels[v], "Z", rng)
        photon = f"{photon_prefix}{v}"
        state = add_qubit(state, photon, 0)
        state = apply_gate(state, "CNOT", [sq, photon])
        transcript.add(0, SERVER, "outcome", vertex=v, bit=b)
        bits[v] = b
    return state, bits, transcript


def simulator1_branches(
    graph: Graph,
    thetas: Mapping[str, Angle8],
    server_state: PureState,
    server_qubits: Mapping[str, str],
    photon_prefix: str = "sim.ph.",
) -> dict[tuple[int, ...], tuple[Fraction, PureState]]:
    """All (b-vector, final state) branches of Simulator 1, exact weights."""
    labels = oracle_labels(graph)
    state = server_state.tensor(_oracle_state(graph, thetas))
    for a, b in graph.edges:
        state = apply_gate(state, "CZ", [labels[a], labels[b]])
    out: dict[tuple[int, ...], tuple[Fraction, PureState]] = {}

    def walk(s: PureState, idx: int, bits: tuple[int, ...], weight: float) -> None:
        if idx == len(graph.order):
            frac = Fraction(1, 2 ** len(bits))
            assert abs(weight - float(frac)) < 1e-9
            out[bits] = (frac, s)
            return
        v = graph.order[idx]
        sq = server_qubits[v]
        s2 = apply_gate(s, "CNOT", [sq, labels[v]])
        for b in (0, 1):
            p, collapsed = project_qubit(s2, labels[v], "Z", b)
            nxt = add_qubit(collapsed, f"{photon_prefix}{v}", 0)
            nxt = apply_gate(nxt, "CNOT", [sq, f"{photon_prefix}{v}"])
            walk(nxt, idx + 1, bits + (b,), weight * p)

    walk(state, 0, (), 1.0)
    return out


def real_extender_branches(
    graph: Graph,
    thetas: Mapping[str, Angle8],
    server_state: PureState,
    server_qubits: Mapping[str, str],
    photon_prefix: str = "sim.ph.",
) -> dict[tuple[int, ...], tuple[Fraction, PureState]]:
    """All branches of the genuine extender resource, uniform sign bits."""
    out: dict[tuple[int, ...], tuple[Fraction, PureState]] = {}
    order = graph.order

    def walk(s: PureState, idx: int, bits: tuple[int, ...]) -> None:
        if idx == len(order):
            out[bits] = (Fraction(1, 2 ** len(bits)), s)
            return
        v = order[idx]
        sq = server_qubits[v]
        for b in (0, 1):
            photon = f"{photon_prefix}{v}"
            nxt = add_qubit(s, photon, 0)
            nxt = apply_gate(nxt, "CNOT", [sq, photon])
            angle = thetas[v].flip_if(b)
            if angle.value:
                nxt = apply_gate(nxt, "RZ", [photon], angle=angle.radians())
            walk(nxt, idx + 1, bits + (b,))

    walk(server_state, 0, ())
    return out


# ---------------------------------------------------------------------------
# Sampled simulators (classical transcripts; rate statistics at scale)
# ---------------------------------------------------------------------------

def worst_case_set(ks: Sequence[int], t: float) -> list[int]:
    """The distinguisher's S maximising the Error chance without aborting."""
    multi = [i for i, k in enumerate(ks, start=1) if k >= 2]
    if len(multi) > t:
        return multi
    rest = [i for i, k in enumerate(ks, start=1) if k < 2]
    need = int(np.floor(t)) + 1 - len(multi)
    return multi + rest[: max(0, need)]


def simulator2_gadget(
    n: int,
    alpha_sq: float,
    t: float,
    rng,
    theta: Angle8 | None = None,
    set_chooser: Callable[[Sequence[int]], Sequence[int]] | None = None,
) -> tuple[str, Transcript]:
    """One sampled Simulator-2 run against a set-choosing distinguisher.

    Returns ("ok" | "abort" | "error", transcript). The quantum steering
    outcomes are fair coins, so no state needs to be tracked; the exact
    enumeration above covers state-level equality at small n.
    """
    transcript = Transcript()
    ks = [int(rng.poisson(alpha_sq)) for _ in range(n)]
    thetas = {i: uniform_angle(rng) for i in range(1, n + 1)}
    for i in range(1, n + 1):
        if ks[i - 1] == 0:
            leak = (LEAK_NOTHING, None)
        elif ks[i - 1] == 1:
            leak = (LEAK_SINGLE, None)  # half EPR pair: looks like one photon
        else:
            leak = (LEAK_FULL, thetas[i].value)
        transcript.add(0, CLIENT, "pulse", index=i, leak=leak)
    chooser = set_chooser or (lambda kk: worst_case_set(kk, t))
    s_set = sorted(chooser(ks))
    transcript.add(0, SERVER, "set_s", indices=list(s_set))
    if len(s_set) <= t:
        transcript.add(0, CLIENT, "abort")
        return "abort", transcript
    singles = [i for i in s_set if ks[i - 1] == 1]
    vacuums = [i for i in s_set if ks[i - 1] == 0]
    candidates = singles if singles else vacuums
    if not candidates:
        return "error", transcript
    s = candidates[int(rng.integers(len(candidates)))]
    m_sx, m_sz = int(rng.integers(2)), int(rng.integers(2))
    theta_bar = (-thetas[s].flip_if(m_sx)).plus_pi_if(m_sz)
    for i in s_set:
        if i != s and ks[i - 1] == 1:
            theta_bar = theta_bar - thetas[i].plus_pi_if(int(rng.integers(2)))
        elif i != s:
            theta_bar = theta_bar - thetas[i]
    transcript.add(0, CLIENT, "correction", theta_bar=theta_bar.value, m_x=m_sx)
    return "ok", transcript


def simulator3_postselected(
    n: int, alpha_sq: float, rng, theta: Angle8 | None = None
) -> tuple[str, Transcript]:
    """One sampled Simulator-3 run; Error iff every pulse is multi-photon."""
    transcript = Transcript()
    ks = [int(rng.poisson(alpha_sq)) for _ in range(n)]
    thetas = {i: uniform_angle(rng) for i in range(1, n)}
    running = Angle8(0)
    for i in range(1, n):
        running = running + thetas[i]
    thetas[n] = -running
    m_sx = int(rng.integers(2))
    for i in range(1, n + 1):
        if ks[i - 1] == 0:
            leak = (LEAK_NOTHING, None)
        elif ks[i - 1] == 1:
            leak = (LEAK_SINGLE, None)
        else:
            leak = (LEAK_FULL, thetas[i].value)
        transcript.add(0, CLIENT, "pulse", index=i, leak=leak)
    transcript.add(0, CLIENT, "correction", theta_bar=None, m_x=m_sx)
    if not any(k in (0, 1) for k in ks):
        return "error", transcript
    return "ok", transcript


def simulator_error_rate_mc(alpha_sq: float, n: int, t: float, runs: int, rng) -> float:
    """Empirical Pr[Error] against the worst-case distinguisher: more than t
    multi-photon pulses. Vectorized Poisson sampling."""
    ks = rng.poisson(alpha_sq, size=(runs, n))
    return float(np.mean(np.sum(ks >= 2, axis=1) > t))


def postselect_error_rate_mc(alpha_sq: float, n: int, runs: int, rng) -> float:
    """Empirical Pr[all pulses multi-photon] for the post-selected simulator."""
    ks = rng.poisson(alpha_sq, size=(runs, n))
    return float(np.mean(np.all(ks >= 2, axis=1)))
