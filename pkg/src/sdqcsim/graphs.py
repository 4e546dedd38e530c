"""Open graphs, blind graph states, MBQC pattern execution, stabilizer tests.

A pattern measures every vertex (outputs included) in the X-Y plane; the
flow function dictates how earlier outcomes modify later angles,
``phi' = (-1)^{s_X} phi + s_Z pi``, with

  - s_X(v): the outcome of f^{-1}(v), and
  - s_Z(v): the parity of outcomes over {w : v in N(f(w)), w != v}.

Measuring at the corrected angle makes the outcome identical to measuring the
byproduct-free state at the base angle, so the bits returned on the output
set are already corrected.

Stabilizer tests are products of the graph generators S_v = X_v prod Z_w that
act trivially or as X/Y everywhere (no Z on any vertex) and carry a +1 global
sign, so an honest run always has outcome parity 0 on the test's support.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .angles import Angle8, uniform_angle
from .qstate import MAX_QUBITS, PureState, apply_gate, branch_probability, measure_qubit, project_qubit

MAX_TEST_VERTICES = 16


@dataclass(frozen=True)
class Graph:
    """An open graph: vertices, undirected edges, input/output sets, order, flow."""

    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()
    order: tuple[str, ...] = ()
    flow: Mapping[str, str] | None = None

    def __post_init__(self) -> None:
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            raise ValueError("duplicate vertices")
        canon = []
        seen = set()
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop at {a!r}")
            if a not in vs or b not in vs:
                raise ValueError(f"edge ({a!r}, {b!r}) leaves the vertex set")
            key = (a, b) if a <= b else (b, a)
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            canon.append(key)
        object.__setattr__(self, "edges", tuple(canon))
        for name, sub in (("inputs", self.inputs), ("outputs", self.outputs)):
            if not set(sub) <= vs:
                raise ValueError(f"{name} must be a subset of the vertices")
        order = self.order or self.vertices
        if sorted(order) != sorted(self.vertices):
            raise ValueError("order must be a permutation of the vertices")
        object.__setattr__(self, "order", tuple(order))
        if self.flow is not None:
            pos = {v: i for i, v in enumerate(self.order)}
            nbrs = self.neighbours()
            for v, fv in self.flow.items():
                if v in self.outputs or fv in self.inputs:
                    raise ValueError("flow must map non-outputs to non-inputs")
                if fv not in nbrs[v]:
                    raise ValueError(f"flow image f({v!r})={fv!r} is not adjacent")
                if pos[v] >= pos[fv]:
                    raise ValueError(f"{v!r} must precede f({v!r})")
                for w in nbrs[fv]:
                    if w != v and pos[w] < pos[v]:
                        raise ValueError(
                            f"order violates flow: {w!r} < {v!r} but {w!r} ~ f({v!r})"
                        )
            object.__setattr__(self, "flow", dict(self.flow))

    def neighbours(self) -> dict[str, set[str]]:
        n: dict[str, set[str]] = {v: set() for v in self.vertices}
        for a, b in self.edges:
            n[a].add(b)
            n[b].add(a)
        return n


@dataclass(frozen=True)
class MeasurementPattern:
    """Base angles plus the flow-induced dependency sets, order-checked."""

    angles: dict[str, Angle8]
    x_dep: dict[str, str | None]
    z_deps: dict[str, frozenset[str]]

    @classmethod
    def from_graph(cls, graph: Graph, angles: Mapping[str, Angle8]) -> "MeasurementPattern":
        if graph.flow is None:
            raise ValueError("pattern construction needs a graph with a flow")
        if set(angles) != set(graph.vertices):
            raise ValueError("angles must cover every vertex exactly")
        inverse = {fv: v for v, fv in graph.flow.items()}
        nbrs = graph.neighbours()
        z_deps: dict[str, frozenset[str]] = {v: frozenset() for v in graph.vertices}
        acc: dict[str, set[str]] = {v: set() for v in graph.vertices}
        for w, fw in graph.flow.items():
            for v in nbrs[fw]:
                if v != w:
                    acc[v].add(w)
        pos = {v: i for i, v in enumerate(graph.order)}
        for v in graph.vertices:
            dep = inverse.get(v)
            if dep is not None and pos[dep] >= pos[v]:
                raise ValueError("X dependency does not respect the order")
            if any(pos[w] >= pos[v] for w in acc[v]):
                raise ValueError("Z dependency does not respect the order")
            z_deps[v] = frozenset(acc[v])
        return cls(dict(angles), {v: inverse.get(v) for v in graph.vertices}, z_deps)


def flow_update(phi: Angle8, s_x: int, s_z: int) -> Angle8:
    """phi' = (-1)^{s_x} phi + s_z pi, reduced into the 8-angle set."""
    return phi.flip_if(s_x).plus_pi_if(s_z)


def build_blind_graph_state(graph: Graph, thetas: Mapping[str, Angle8]) -> PureState:
    """prod_E CZ . tensor_V RZ(theta_v) |+>: all thetas zero gives plain |G>."""
    if len(graph.vertices) > MAX_QUBITS:
        raise ValueError(f"graph has {len(graph.vertices)} vertices, cap {MAX_QUBITS}")
    state = PureState.plus(graph.vertices)
    for v in graph.vertices:
        theta = thetas[v]
        if theta.value:
            state = apply_gate(state, "RZ", [v], angle=theta.radians())
    for a, b in graph.edges:
        state = apply_gate(state, "CZ", [a, b])
    return state


def zero_angles(graph: Graph) -> dict[str, Angle8]:
    return {v: Angle8(0) for v in graph.vertices}


def _corrected_angle(
    pattern: MeasurementPattern, v: str, results: Mapping[str, int]
) -> Angle8:
    s_x = results.get(pattern.x_dep[v], 0) if pattern.x_dep[v] else 0
    s_z = 0
    for w in pattern.z_deps[v]:
        s_z ^= results[w]
    return flow_update(pattern.angles[v], s_x, s_z)


def run_mbqc(
    graph: Graph,
    pattern: MeasurementPattern,
    input_bits: Mapping[str, int],
    state: PureState,
    rng,
) -> dict[str, int]:
    """Measure every vertex in order at its corrected angle; return output bits.

    Classical input bits enter as a pi shift on the input vertices' angles.
    """
    if set(graph.vertices) - set(state.qubits):
        raise ValueError("state does not cover the graph's vertices")
    if set(input_bits) - set(graph.inputs):
        raise ValueError("input bits given for non-input vertices")
    results: dict[str, int] = {}
    for v in graph.order:
        angle = _corrected_angle(pattern, v, results)
        if v in graph.inputs:
            angle = angle.plus_pi_if(input_bits.get(v, 0))
        outcome, state = measure_qubit(state, v, angle, rng)
        results[v] = outcome
    return {v: results[v] for v in graph.outputs}


def mbqc_output_distribution(
    graph: Graph,
    pattern: MeasurementPattern,
    input_bits: Mapping[str, int],
    state: PureState,
) -> dict[tuple[int, ...], float]:
    """Exact output distribution by walking every measurement branch.

    Output keys follow the graph's ``outputs`` ordering. Only usable at desk
    scale (2^|V| branches).
    """
    dist: dict[tuple[int, ...], float] = {}

    def walk(s: PureState, idx: int, results: dict[str, int], weight: float) -> None:
        if weight <= 1e-18:
            return
        if idx == len(graph.order):
            key = tuple(results[v] for v in graph.outputs)
            dist[key] = dist.get(key, 0.0) + weight
            return
        v = graph.order[idx]
        angle = _corrected_angle(pattern, v, results)
        if v in graph.inputs:
            angle = angle.plus_pi_if(input_bits.get(v, 0))
        for outcome in (0, 1):
            p = branch_probability(s, v, angle, outcome)
            if p <= 1e-15:
                continue
            _, collapsed = project_qubit(s, v, angle, outcome)
            results[v] = outcome
            walk(collapsed, idx + 1, results, weight * p)
            del results[v]

    walk(state, 0, {}, 1.0)
    return dist


# ---------------------------------------------------------------------------
# Stabilizer tests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilizerTest:
    """A generator product acting as I/X/Y on every vertex, honest parity 0."""

    bits: dict[str, int]
    paulis: dict[str, str]  # "I" | "X" | "Y" per vertex
    expected_parity: int = 0

    @property
    def support(self) -> tuple[str, ...]:
        return tuple(v for v, p in self.paulis.items() if p != "I")

    def measurement_angle(self, v: str, rng) -> Angle8:
        """X -> 0, Y -> pi/2, unconstrained -> uniformly random angle."""
        p = self.paulis[v]
        if p == "X":
            return Angle8(0)
        if p == "Y":
            return Angle8(2)
        return uniform_angle(rng)

    def anticommutes_with_z(self, vertex: str) -> bool:
        return self.paulis.get(vertex, "I") in ("X", "Y")


def enumerate_tests(graph: Graph) -> list[StabilizerTest]:
    """All nonzero generator products with no Z anywhere and +1 global sign.

    Brute force over the 2^|V| selection strings; capped at 16 vertices.
    Products with a -1 sign (possible on odd cycles) are excluded so that the
    honest parity is 0 for every returned test.
    """
    n = len(graph.vertices)
    if n > MAX_TEST_VERTICES:
        raise ValueError(f"test enumeration capped at {MAX_TEST_VERTICES} vertices")
    order = list(graph.vertices)
    index = {v: i for i, v in enumerate(order)}
    nbrs = graph.neighbours()
    gen_x = []
    gen_z = []
    for v in order:
        x = np.zeros(n, dtype=np.int64)
        z = np.zeros(n, dtype=np.int64)
        x[index[v]] = 1
        for w in nbrs[v]:
            z[index[w]] = 1
        gen_x.append(x)
        gen_z.append(z)

    tests = []
    for mask in range(1, 2**n):
        x = np.zeros(n, dtype=np.int64)
        z = np.zeros(n, dtype=np.int64)
        k = 0  # phase exponent: operator = i^k prod X^x Z^z
        for j in range(n):
            if mask >> j & 1:
                k += 2 * int(np.sum(z * gen_x[j]))  # move new X left through old Z
                x ^= gen_x[j]
                z ^= gen_z[j]
        if np.any((x == 0) & (z == 1)):
            continue
        n_y = int(np.sum((x == 1) & (z == 1)))
        if (k - n_y) % 4 != 0:  # -1 sign: honest parity would be 1
            continue
        bits = {order[j]: (mask >> j) & 1 for j in range(n)}
        letters = {"00": "I", "10": "X", "11": "Y"}
        paulis = {order[j]: letters[f"{x[j]}{z[j]}"] for j in range(n)}
        tests.append(StabilizerTest(bits=bits, paulis=paulis))
    return tests


# ---------------------------------------------------------------------------
# Standard graphs
# ---------------------------------------------------------------------------

def path_graph(n: int) -> Graph:
    vs = tuple(f"v{i}" for i in range(1, n + 1))
    edges = tuple((vs[i], vs[i + 1]) for i in range(n - 1))
    flow = {vs[i]: vs[i + 1] for i in range(n - 1)}
    return Graph(vs, edges, inputs=(vs[0],), outputs=(vs[-1],), order=vs, flow=flow)


def grid_graph(rows: int, cols: int) -> Graph:
    """Cluster graph: row/column lattice, column-major order, row flow."""
    name = lambda r, c: f"q{r}{c}"
    vs = tuple(name(r, c) for c in range(1, cols + 1) for r in range(1, rows + 1))
    edges = []
    for r in range(1, rows + 1):
        for c in range(1, cols):
            edges.append((name(r, c), name(r, c + 1)))
    for c in range(1, cols + 1):
        for r in range(1, rows):
            edges.append((name(r, c), name(r + 1, c)))
    flow = {name(r, c): name(r, c + 1) for r in range(1, rows + 1) for c in range(1, cols)}
    inputs = tuple(name(r, 1) for r in range(1, rows + 1))
    outputs = tuple(name(r, cols) for r in range(1, rows + 1))
    return Graph(vs, tuple(edges), inputs, outputs, vs, flow)


def brickwork_identity_graph() -> Graph:
    """One 2x5 brick: vertical links at columns 3 and 5; all-zero angles give I."""
    name = lambda r, c: f"b{r}{c}"
    vs = tuple(name(r, c) for c in range(1, 6) for r in (1, 2))
    edges = [(name(r, c), name(r, c + 1)) for r in (1, 2) for c in range(1, 5)]
    edges += [(name(1, 3), name(2, 3)), (name(1, 5), name(2, 5))]
    flow = {name(r, c): name(r, c + 1) for r in (1, 2) for c in range(1, 5)}
    inputs = (name(1, 1), name(2, 1))
    outputs = (name(1, 5), name(2, 5))
    return Graph(vs, tuple(edges), inputs, outputs, vs, flow)


def triangle_graph() -> Graph:
    vs = ("t1", "t2", "t3")
    return Graph(vs, (("t1", "t2"), ("t2", "t3"), ("t1", "t3")), order=vs)


# ---------------------------------------------------------------------------
# Graph description documents
# ---------------------------------------------------------------------------

def load_graph_document(path) -> tuple[Graph, MeasurementPattern | None]:
    """Read the JSON graph schema used by the command-line tools.

    Keys: vertices, edges, inputs, outputs, order, flow, angles. ``angles``
    are integers j meaning j*pi/4. ``flow``/``angles`` are optional; a
    pattern is returned only when both are present.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    allowed = {"vertices", "edges", "inputs", "outputs", "order", "flow", "angles"}
    unknown = set(doc) - allowed
    if unknown:
        raise ValueError(f"unknown graph document keys: {sorted(unknown)}")
    graph = Graph(
        vertices=tuple(doc["vertices"]),
        edges=tuple((a, b) for a, b in doc.get("edges", [])),
        inputs=tuple(doc.get("inputs", [])),
        outputs=tuple(doc.get("outputs", [])),
        order=tuple(doc.get("order", doc["vertices"])),
        flow=doc.get("flow"),
    )
    pattern = None
    if doc.get("angles") is not None and graph.flow is not None:
        angles = {v: Angle8(int(j)) for v, j in doc["angles"].items()}
        pattern = MeasurementPattern.from_graph(graph, angles)
    return graph, pattern


def dump_graph_document(graph: Graph, angles: Mapping[str, Angle8] | None = None) -> dict:
    doc = {
        "vertices": list(graph.vertices),
        "edges": [list(e) for e in graph.edges],
        "inputs": list(graph.inputs),
        "outputs": list(graph.outputs),
        "order": list(graph.order),
    }
    if graph.flow is not None:
        doc["flow"] = dict(graph.flow)
    if angles is not None:
        doc["angles"] = {v: a.value for v, a in angles.items()}
    return doc
