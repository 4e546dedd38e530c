"""Executable protocols: blind extension, blind graph RSP, the GHZ gadgets,
UBQC, and the repetition-with-tests wrapper.

Each protocol is a straight-line transcription of its message flow. The
server side is a replaceable behaviour: the honest policy follows the
protocol verbatim, adversarial policies may apply a fixed deviation to the
quantum register or tamper with the reported photon-detection set.

Photons are measured in the |+/-> basis immediately after emission instead
of all at the end; the operations act on disjoint qubits, so the transcript
and all output distributions are unchanged while the live register stays
small (a few qubits even for hundred-pulse gadgets).

Angle bookkeeping is exact: every transmitted angle is an
:class:`~sdqcsim.angles.Angle8`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .angles import Angle8, uniform_angle
from .emitter import emit_photon, retire_spin, spin_hadamard
from .graphs import Graph, MeasurementPattern, StabilizerTest, enumerate_tests
from .pulses import sample_pulse, server_view
from .qstate import PureState, apply_gate, measure_qubit

CLIENT = "client->server"
SERVER = "server->client"


@dataclass(frozen=True)
class Message:
    round: int
    direction: str
    kind: str  # pulse | set_s | abort | correction | measure_instruction | outcome
    payload: dict

    def to_record(self) -> dict:
        return {
            "round": self.round,
            "direction": self.direction,
            "kind": self.kind,
            "payload": self.payload,
        }


def _jsonable(value):
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


class Transcript:
    """Ordered record of every client/server message in one execution."""

    def __init__(self) -> None:
        self.messages: list[Message] = []

    def add(self, round_: int, direction: str, kind: str, **payload) -> None:
        self.messages.append(Message(round_, direction, kind, _jsonable(payload)))

    def __iter__(self):
        return iter(self.messages)

    def __len__(self) -> int:
        return len(self.messages)

    def of_kind(self, kind: str) -> list[Message]:
        return [m for m in self.messages if m.kind == kind]

    def to_jsonl(self) -> str:
        return "\n".join(
            json.dumps(m.to_record(), sort_keys=True) for m in self.messages
        ) + ("\n" if self.messages else "")

    @classmethod
    def from_jsonl(cls, text: str) -> "Transcript":
        t = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            t.add(rec["round"], rec["direction"], rec["kind"], **rec["payload"])
        return t


@dataclass(frozen=True)
class GadgetParams:
    """Public gadget parameters plus the honest emitter's efficiency."""

    alpha_sq: float
    n: int
    t: float
    eta1: float

    def __post_init__(self) -> None:
        if self.alpha_sq <= 0:
            raise ValueError(f"alpha_sq must be > 0, got {self.alpha_sq}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0.0 <= self.t <= self.n:
            raise ValueError(f"threshold must satisfy 0 <= t <= n, got {self.t}")
        if not 0.0 <= self.eta1 <= 1.0:
            raise ValueError(f"eta1 must be in [0, 1], got {self.eta1}")


@dataclass(frozen=True)
class GadgetOutcome:
    """Abort, or the post-correction register holding the spin and photon 0."""

    aborted: bool
    state: PureState | None = None
    m_x: int | None = None
    spin: str | None = None
    photon: str | None = None
    detected: tuple[int, ...] = ()
    parity: int = 0
    theta_bar: Angle8 | None = None


@dataclass
class ServerBehavior:
    """Replaceable server policy: honest unless a deviation hook is set."""

    deviate_state: Callable[[PureState, int], PureState] | None = None
    tamper_set: Callable[[list[int]], list[int]] | None = None


HONEST = ServerBehavior()


def z_deviation(label: str) -> ServerBehavior:
    """A server that applies Z to one fixed qubit in every round."""

    def hook(state: PureState, _round: int) -> PureState:
        if label in state.qubits:
            return apply_gate(state, "Z", [label])
        return state

    return ServerBehavior(deviate_state=hook)


class RspAborted(Exception):
    """A gadget call inside the blind RSP aborted; propagates to the caller."""


# ---------------------------------------------------------------------------
# Resource 1: blind graph state extension
# ---------------------------------------------------------------------------

def resource_blind_extender(
    theta: Angle8, state: PureState, spin: str, photon: str, rng
) -> tuple[PureState, int]:
    """Ideal extension: emit with angle (-1)^b theta for a uniform secret b."""
    b = int(rng.integers(2))
    state = emit_photon(state, spin, theta.flip_if(b), photon)
    return state, b


def gadget_target_state(
    alpha: complex, beta: complex, theta: Angle8, m_x: int,
    spin: str = "qe", photon: str = "ph0",
) -> PureState:
    """The exact honest gadget output: alpha|00> + e^{i(-1)^{m_x} theta} beta|11>."""
    phase = np.exp(1j * theta.flip_if(m_x).radians())
    vec = np.zeros(4, dtype=complex)
    vec[0] = alpha
    vec[3] = phase * beta
    return PureState.from_amplitudes([spin, photon], vec)


# ---------------------------------------------------------------------------
# Protocol 3: threshold GHZ privacy amplification
# ---------------------------------------------------------------------------

def protocol3_gadget(
    theta: Angle8,
    params: GadgetParams,
    rng,
    state: PureState | None = None,
    spin: str = "qe",
    photon: str = "ph0",
    server: ServerBehavior = HONEST,
    round_: int = 0,
    pulse_prefix: str = "p",
) -> tuple[GadgetOutcome, Transcript]:
    """Run the threshold gadget once against an honest (or hooked) server.

    Per pulse: the client draws theta_i, the pulse's photon number is sampled
    for its leak record, and the emitter fires with probability eta1. Emitted
    photons are measured in |+/-> as they appear; their indices form S. The
    client aborts iff |S| <= t, otherwise sends the correction angle
    theta_bar = (-1)^{m_x} theta - sum_{i in S} theta_i and the bit m_x, and
    the server rotates photon 0 by theta_bar + b pi.

    ``state``/``spin`` may point into a larger register (the spin keeps its
    entanglement), which is how the blind RSP composes with this gadget.
    """
    if state is None:
        state = PureState.plus([spin])
    elif spin not in state.qubits:
        raise KeyError(f"spin {spin!r} not in register")
    transcript = Transcript()
    thetas: dict[int, Angle8] = {}
    detected: list[int] = []
    parity = 0
    for i in range(1, params.n + 1):
        theta_i = uniform_angle(rng)
        thetas[i] = theta_i
        pulse = sample_pulse(params.alpha_sq, theta_i, rng, index=i)
        view = server_view(pulse)
        transcript.add(round_, CLIENT, "pulse", index=i, leak=view.key())
        if rng.random() < params.eta1:
            label = f"{spin}.{pulse_prefix}{i}"
            state = emit_photon(state, spin, theta_i, label)
            outcome, state = measure_qubit(state, label, "X", rng)
            parity ^= outcome
            detected.append(i)
    state = emit_photon(state, spin, Angle8(0), photon)
    reported = list(detected)
    if server.tamper_set is not None:
        reported = sorted(server.tamper_set(reported))
    transcript.add(round_, SERVER, "set_s", indices=list(reported))
    if len(reported) <= params.t:
        transcript.add(round_, CLIENT, "abort")
        return GadgetOutcome(aborted=True, detected=tuple(reported)), transcript
    m_x = int(rng.integers(2))
    theta_bar = theta.flip_if(m_x)
    for i in reported:
        theta_bar = theta_bar - thetas[i]
    transcript.add(round_, CLIENT, "correction", theta_bar=theta_bar.value, m_x=m_x)
    correction = theta_bar.plus_pi_if(parity)
    if correction.value:
        state = apply_gate(state, "RZ", [photon], angle=correction.radians())
    return (
        GadgetOutcome(
            aborted=False,
            state=state,
            m_x=m_x,
            spin=spin,
            photon=photon,
            detected=tuple(reported),
            parity=parity,
            theta_bar=theta_bar,
        ),
        transcript,
    )


# ---------------------------------------------------------------------------
# Protocol 5: post-selected variant
# ---------------------------------------------------------------------------

def protocol5_postselected(
    theta: Angle8,
    alpha_sq: float,
    n: int,
    eta1: float,
    rng,
    state: PureState | None = None,
    spin: str = "qe",
    photon: str = "ph0",
    round_: int = 0,
) -> tuple[GadgetOutcome, Transcript]:
    """Post-selected gadget: the last pulse angle pre-compensates the sum, and
    any missing photon aborts the run; no correction message is needed beyond
    m_x, the server applies Z^b itself.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if state is None:
        state = PureState.plus([spin])
    transcript = Transcript()
    m_x = int(rng.integers(2))
    thetas: dict[int, Angle8] = {}
    running = Angle8(0)
    for i in range(1, n):
        thetas[i] = uniform_angle(rng)
        running = running + thetas[i]
    thetas[n] = theta.flip_if(m_x) - running
    parity = 0
    lost = False
    for i in range(1, n + 1):
        pulse = sample_pulse(alpha_sq, thetas[i], rng, index=i)
        transcript.add(round_, CLIENT, "pulse", index=i, leak=server_view(pulse).key())
        if rng.random() < eta1:
            label = f"{spin}.pp{i}"
            state = emit_photon(state, spin, thetas[i], label)
            outcome, state = measure_qubit(state, label, "X", rng)
            parity ^= outcome
        else:
            lost = True
    transcript.add(round_, CLIENT, "correction", theta_bar=None, m_x=m_x)
    if lost:
        transcript.add(round_, SERVER, "abort")
        return GadgetOutcome(aborted=True), transcript
    state = emit_photon(state, spin, Angle8(0), photon)
    if parity:
        state = apply_gate(state, "Z", [photon])
    return (
        GadgetOutcome(
            aborted=False, state=state, m_x=m_x, spin=spin, photon=photon,
            detected=tuple(range(1, n + 1)), parity=parity,
        ),
        transcript,
    )


# ---------------------------------------------------------------------------
# Protocol 2: blind graph state preparation from blind extensions
# ---------------------------------------------------------------------------

def single_emitter_assignment(graph: Graph) -> list[list[str]]:
    return [list(graph.order)]


def row_assignment(graph: Graph, rows: int, cols: int) -> list[list[str]]:
    return [[f"q{r}{c}" for c in range(1, cols + 1)] for r in range(1, rows + 1)]


def _validate_assignment(graph: Graph, assignment: Sequence[Sequence[str]]) -> dict[str, int]:
    pos = {v: i for i, v in enumerate(graph.order)}
    owner: dict[str, int] = {}
    for q, vq in enumerate(assignment):
        if not vq:
            raise ValueError("empty emitter assignment list")
        for v in vq:
            if v not in pos:
                raise ValueError(f"assignment names unknown vertex {v!r}")
            if v in owner:
                raise ValueError(f"vertex {v!r} assigned twice")
            owner[v] = q
        order_idx = [pos[v] for v in vq]
        if order_idx != sorted(order_idx):
            raise ValueError(f"emitter {q} vertices are not in protocol order")
    if set(owner) != set(graph.vertices):
        raise ValueError("assignment must cover every vertex")
    nbrs = graph.neighbours()
    chain_pairs = set()
    next_in_chain: dict[str, str | None] = {}
    for vq in assignment:
        for a, b in zip(vq, vq[1:]):
            if b not in nbrs[a]:
                raise ValueError(
                    f"consecutive emitter vertices ({a!r}, {b!r}) must be adjacent"
                )
            chain_pairs.add(frozenset((a, b)))
            next_in_chain[a] = b
        next_in_chain[vq[-1]] = None
    for a, b in graph.edges:
        if frozenset((a, b)) in chain_pairs:
            continue
        w, v = (a, b) if pos[a] < pos[b] else (b, a)
        if owner[v] == owner[w]:
            raise ValueError(
                f"edge ({w!r}, {v!r}) needs two emitters; one spin cannot link itself"
            )
        nxt = next_in_chain[w]
        if nxt is not None and pos[nxt] <= pos[v]:
            raise ValueError(
                f"edge ({w!r}, {v!r}) unrealizable: emitter of {w!r} moves on to "
                f"{nxt!r} before {v!r} is generated"
            )
    return owner


Extender = Callable[[Angle8, PureState, str, str, "np.random.Generator"], tuple[PureState, int]]


def gadget_extender(params: GadgetParams) -> Extender:
    """Wrap the threshold gadget as a blind extender; aborts raise RspAborted."""

    def call(theta: Angle8, state: PureState, spin: str, photon: str, rng):
        outcome, _ = protocol3_gadget(
            theta, params, rng, state=state, spin=spin, photon=photon,
            pulse_prefix=f"g{photon}.",
        )
        if outcome.aborted:
            raise RspAborted(f"gadget aborted while extending onto {photon!r}")
        return outcome.state, outcome.m_x

    return call


def protocol2_blind_rsp(
    graph: Graph,
    thetas: Mapping[str, Angle8],
    assignment: Sequence[Sequence[str]],
    rng,
    extender: Extender = resource_blind_extender,
    n_extra: Mapping[str, int] | None = None,
) -> PureState:
    """Grow |G(theta)> vertex by vertex with one extender call per vertex.

    Each emitter's Hadamard move is deferred until just before its next
    emission (or to the decorrelation step), so a later cross edge (v, w) can
    still be linked by a spin-spin CZ while the spin of w's emitter remains
    part of w's redundant encoding. Extra per-vertex qubits (``n_extra``) are
    emitted with the plain operator and collapsed at the end with |+/->
    measurements plus a parity Z correction.
    """
    owner = _validate_assignment(graph, assignment)
    n_extra = dict(n_extra or {})
    pos = {v: i for i, v in enumerate(graph.order)}
    nbrs = graph.neighbours()
    spins = [f"spin{q}" for q in range(len(assignment))]
    state = PureState.plus(spins)
    chain_prev: dict[int, str | None] = {q: None for q in range(len(assignment))}
    pending_h: dict[int, bool] = {q: False for q in range(len(assignment))}
    at_vertex: dict[int, str | None] = {q: None for q in range(len(assignment))}
    extras: dict[str, list[str]] = {v: [] for v in graph.vertices}

    for v in graph.order:
        q = owner[v]
        spin = spins[q]
        if pending_h[q]:
            state = spin_hadamard(state, spin)
            pending_h[q] = False
        state, b_v = extender(thetas[v], state, spin, v, rng)
        if b_v:
            state = apply_gate(state, "X", [spin])
            state = apply_gate(state, "X", [v])
            if chain_prev[q] is not None:
                state = apply_gate(state, "Z", [chain_prev[q]])
        for j in range(n_extra.get(v, 0)):
            label = f"{v}.x{j}"
            state = emit_photon(state, spin, Angle8(0), label)
            extras[v].append(label)
        for w in nbrs[v]:
            if pos[w] > pos[v] or w == chain_prev[q]:
                continue
            r = owner[w]
            if at_vertex[r] != w:
                raise ValueError(
                    f"edge ({v!r}, {w!r}) unrealizable: emitter {r} is not at {w!r}"
                )
            state = apply_gate(state, "CZ", [spin, spins[r]])
        at_vertex[q] = v
        chain_prev[q] = v
        pending_h[q] = True

    for q, spin in enumerate(spins):
        if pending_h[q]:
            state = spin_hadamard(state, spin)
        last = assignment[q][-1]
        state = retire_spin(state, spin, last, rng)

    for v in graph.vertices:
        d_v = 0
        for label in extras[v]:
            outcome, state = measure_qubit(state, label, "X", rng)
            d_v ^= outcome
        if d_v:
            state = apply_gate(state, "Z", [v])
    return state


# ---------------------------------------------------------------------------
# Protocol 4: UBQC, and the repetition wrapper with stabilizer tests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UbqcResult:
    aborted: bool
    outputs: dict[str, int] | None
    transcript: Transcript


def _prepare_blind_state(
    graph: Graph,
    thetas: Mapping[str, Angle8],
    rng,
    state_source: str,
    assignment: Sequence[Sequence[str]] | None,
    gadget_params: GadgetParams | None,
) -> PureState:
    from .graphs import build_blind_graph_state

    if state_source == "ideal":
        return build_blind_graph_state(graph, thetas)
    if state_source == "protocol2":
        assignment = assignment or single_emitter_assignment(graph)
        extender: Extender = resource_blind_extender
        if gadget_params is not None:
            extender = gadget_extender(gadget_params)
        return protocol2_blind_rsp(graph, thetas, assignment, rng, extender=extender)
    raise ValueError(f"unknown state source {state_source!r}")


def ubqc_run(
    graph: Graph,
    pattern: MeasurementPattern,
    x: Mapping[str, int],
    rng,
    state_source: str = "ideal",
    server: ServerBehavior = HONEST,
    thetas: Mapping[str, Angle8] | None = None,
    rs: Mapping[str, int] | None = None,
    assignment: Sequence[Sequence[str]] | None = None,
    gadget_params: GadgetParams | None = None,
    round_: int = 0,
) -> UbqcResult:
    """One blind delegated execution: delta_v = phi'_v + theta_v + r_v pi + x_v pi.

    The returned outputs are the one-time-pad-corrected bits s_v = b_v xor r_v
    on the output vertices; with an honest server they are distributed exactly
    as a plain pattern execution.
    """
    if set(x) - set(graph.inputs):
        raise ValueError("input bits given for non-input vertices")
    transcript = Transcript()
    if thetas is None:
        thetas = {v: uniform_angle(rng) for v in graph.order}
    if rs is None:
        rs = {v: int(rng.integers(2)) for v in graph.order}
    try:
        state = _prepare_blind_state(graph, thetas, rng, state_source, assignment, gadget_params)
    except RspAborted:
        transcript.add(round_, CLIENT, "abort")
        return UbqcResult(aborted=True, outputs=None, transcript=transcript)
    if server.deviate_state is not None:
        state = server.deviate_state(state, round_)
    results: dict[str, int] = {}
    from .graphs import flow_update

    for v in graph.order:
        s_x = results.get(pattern.x_dep[v], 0) if pattern.x_dep[v] else 0
        s_z = 0
        for w in pattern.z_deps[v]:
            s_z ^= results[w]
        phi_prime = flow_update(pattern.angles[v], s_x, s_z)
        delta = phi_prime + thetas[v]
        delta = delta.plus_pi_if(rs[v])
        if v in graph.inputs:
            delta = delta.plus_pi_if(x.get(v, 0))
        transcript.add(round_, CLIENT, "measure_instruction", vertex=v, delta=delta.value)
        b_v, state = measure_qubit(state, v, delta, rng)
        transcript.add(round_, SERVER, "outcome", vertex=v, bit=b_v)
        results[v] = b_v ^ rs[v]
    return UbqcResult(
        aborted=False,
        outputs={v: results[v] for v in graph.outputs},
        transcript=transcript,
    )


@dataclass(frozen=True)
class SdqcResult:
    aborted: bool
    output: tuple[int, ...] | None
    n_rounds: int
    n_tests: int
    n_failed: int
    test_parities: tuple[int, ...]


def _test_round(
    graph: Graph,
    test: StabilizerTest,
    rng,
    state_source: str,
    assignment,
    gadget_params,
    server: ServerBehavior,
    round_: int,
) -> int:
    """One UBQC-overlaid test round; returns the parity on the test support."""
    thetas = {v: uniform_angle(rng) for v in graph.order}
    rs = {v: int(rng.integers(2)) for v in graph.order}
    angles = {v: test.measurement_angle(v, rng) for v in graph.order}
    state = _prepare_blind_state(graph, thetas, rng, state_source, assignment, gadget_params)
    if server.deviate_state is not None:
        state = server.deviate_state(state, round_)
    parity = 0
    support = set(test.support)
    for v in graph.order:
        delta = (angles[v] + thetas[v]).plus_pi_if(rs[v])
        b_v, state = measure_qubit(state, v, delta, rng)
        if v in support:
            parity ^= b_v ^ rs[v]
    return parity


def sdqc_run(
    graph: Graph,
    pattern: MeasurementPattern,
    x: Mapping[str, int],
    n_rounds: int,
    test_fraction: float,
    w: float,
    rng,
    server: ServerBehavior = HONEST,
    state_source: str = "ideal",
    assignment: Sequence[Sequence[str]] | None = None,
    gadget_params: GadgetParams | None = None,
) -> SdqcResult:
    """Repetition protocol: hidden stabilizer-test rounds among computations.

    Aborts when more than ``w`` tests fail; otherwise returns the majority
    output over the computation rounds (ties broken lexicographically).
    """
    if n_rounds < 2:
        raise ValueError("need at least 2 rounds")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    tests = enumerate_tests(graph)
    if not tests:
        raise ValueError("graph admits no valid stabilizer tests")
    n_tests = int(round(test_fraction * n_rounds))
    n_tests = min(max(n_tests, 1), n_rounds - 1)
    test_rounds = set(rng.choice(n_rounds, size=n_tests, replace=False).tolist())
    parities: list[int] = []
    outputs: list[tuple[int, ...]] = []
    for i in range(n_rounds):
        if i in test_rounds:
            test = tests[int(rng.integers(len(tests)))]
            parities.append(
                _test_round(
                    graph, test, rng, state_source, assignment, gadget_params, server, i
                )
            )
        else:
            res = ubqc_run(
                graph, pattern, x, rng,
                state_source=state_source, server=server,
                assignment=assignment, gadget_params=gadget_params, round_=i,
            )
            if res.aborted:
                return SdqcResult(True, None, n_rounds, n_tests, len(parities), tuple(parities))
            outputs.append(tuple(res.outputs[v] for v in graph.outputs))
    n_failed = sum(parities)
    if n_failed > w:
        return SdqcResult(True, None, n_rounds, n_tests, n_failed, tuple(parities))
    counts: dict[tuple[int, ...], int] = {}
    for o in outputs:
        counts[o] = counts.get(o, 0) + 1
    best = max(counts.items(), key=lambda kv: (kv[1], tuple(-b for b in kv[0])))[0]
    return SdqcResult(False, best, n_rounds, n_tests, n_failed, tuple(parities))


# ---------------------------------------------------------------------------
# Classical fast paths for large Monte Carlo grids
# ---------------------------------------------------------------------------

def abort_rate_mc(eta1: float, n: int, t: float, runs: int, rng) -> float:
    """Empirical Pr[|S| <= t] with |S| ~ Binomial(n, eta1).

    Equal in distribution to the full quantum gadget's abort rate: the
    |+/-> outcomes never influence which pulses produced photons.
    """
    sizes = rng.binomial(n, eta1, size=runs)
    return float(np.mean(sizes <= t))


def postselect_abort_rate_mc(eta1: float, n: int, runs: int, rng) -> float:
    """Empirical Pr[any of n pulses failed] for the post-selected gadget."""
    return float(np.mean(rng.binomial(n, eta1, size=runs) < n))
