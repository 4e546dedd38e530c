import itertools
import json
import math

import numpy as np
import pytest

from sdqcsim.angles import Angle8
from sdqcsim.graphs import (
    Graph,
    MeasurementPattern,
    brickwork_identity_graph,
    build_blind_graph_state,
    dump_graph_document,
    enumerate_tests,
    flow_update,
    grid_graph,
    load_graph_document,
    mbqc_output_distribution,
    path_graph,
    run_mbqc,
    triangle_graph,
    zero_angles,
)
from sdqcsim.qstate import (
    PureState,
    apply_gate,
    branch_probability,
    fidelity_up_to_phase,
    project_qubit,
)
from sdqcsim.seeding import trial_rng

SQ2 = 1.0 / math.sqrt(2.0)
H = np.array([[1, 1], [1, -1]], dtype=complex) * SQ2


def jmat(angle: Angle8) -> np.ndarray:
    """One wire step: J(phi) = H RZ(-phi)."""
    return H @ np.diag([1.0, np.exp(-1j * angle.radians())])


def path_circuit_distribution(angles, x_bit=0):
    """Independent oracle: Born distribution of the J-gate chain on |+>."""
    psi = np.array([SQ2, SQ2], dtype=complex)
    first = angles[0].plus_pi_if(x_bit)
    for i, a in enumerate([first] + list(angles[1:])):
        psi = jmat(a) @ psi
    return {(0,): abs(psi[0]) ** 2, (1,): abs(psi[1]) ** 2}


def brick_circuit_distribution(col_angles):
    """Oracle for the 2x5 brick: J-steps per column, CZ before columns 3 and 5."""
    cz = np.eye(4, dtype=complex)
    cz[3, 3] = -1
    psi = np.full(4, 0.5, dtype=complex)
    for c in range(5):
        if c + 1 in (3, 5):
            psi = cz @ psi
        a1, a2 = col_angles[c]
        psi = np.kron(jmat(a1), jmat(a2)) @ psi
    return {
        (b1, b2): abs(psi[2 * b1 + b2]) ** 2
        for b1 in (0, 1)
        for b2 in (0, 1)
    }


class TestGraphValidation:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError, match="self-loop"):
            Graph(("a",), (("a", "a"),))

    def test_rejects_unknown_edge_endpoint(self):
        with pytest.raises(ValueError):
            Graph(("a",), (("a", "b"),))

    def test_rejects_flow_not_adjacent(self):
        with pytest.raises(ValueError, match="adjacent"):
            Graph(("a", "b", "c"), (("a", "b"), ("b", "c")),
                  outputs=("c",), order=("a", "b", "c"), flow={"a": "c"})

    def test_rejects_order_violating_flow(self):
        with pytest.raises(ValueError):
            Graph(("a", "b"), (("a", "b"),), outputs=("b",),
                  order=("b", "a"), flow={"a": "b"})


class TestBlindGraphStates:
    def test_single_vertex(self):
        g = Graph(("v",), ())
        st = build_blind_graph_state(g, {"v": Angle8(1)})
        expect = np.array([1.0, np.exp(1j * math.pi / 4)]) * SQ2
        assert np.allclose(st.vector(), expect)

    def test_two_path_zero_angles_is_cz_plus_plus(self):
        g = path_graph(2)
        st = build_blind_graph_state(g, zero_angles(g))
        target = apply_gate(PureState.plus(["v1", "v2"]), "CZ", ["v1", "v2"])
        assert fidelity_up_to_phase(st, target) > 1 - 1e-12

    @pytest.mark.parametrize("graph", [path_graph(3), triangle_graph(), grid_graph(2, 2)])
    def test_blindness_algebra(self, graph):
        # |G(theta)> equals per-vertex RZ applied to the plain |G>
        rng = trial_rng(8, 0)
        for _ in range(10):
            thetas = {v: Angle8(int(rng.integers(8))) for v in graph.vertices}
            a = build_blind_graph_state(graph, thetas)
            b = build_blind_graph_state(graph, zero_angles(graph))
            for v in graph.vertices:
                if thetas[v].value:
                    b = apply_gate(b, "RZ", [v], angle=thetas[v].radians())
            assert fidelity_up_to_phase(a, b) > 1 - 1e-12


class TestFlowUpdate:
    def test_spec_values(self):
        assert flow_update(Angle8(1), 0, 0) == Angle8(1)
        assert flow_update(Angle8(1), 1, 0) == Angle8(7)
        assert flow_update(Angle8(1), 0, 1) == Angle8(5)

    def test_all_combinations(self):
        for j, sx, sz in itertools.product(range(8), (0, 1), (0, 1)):
            assert flow_update(Angle8(j), sx, sz).value == ((-1) ** sx * j + 4 * sz) % 8


class TestRunMbqc:
    def test_single_vertex_plus_measures_zero(self):
        g = Graph(("v",), (), outputs=("v",), order=("v",), flow={})
        pat = MeasurementPattern.from_graph(g, {"v": Angle8(0)})
        rng = trial_rng(8, 1)
        for _ in range(50):
            out = run_mbqc(g, pat, {}, PureState.plus(["v"]), rng)
            assert out == {"v": 0}

    def test_two_path_uniform_output_and_deterministic_corrected_state(self):
        g = path_graph(2)
        pat = MeasurementPattern.from_graph(g, zero_angles(g))
        state = build_blind_graph_state(g, zero_angles(g))
        dist = mbqc_output_distribution(g, pat, {}, state)
        oracle = path_circuit_distribution([Angle8(0), Angle8(0)])
        for key in oracle:
            assert dist.get(key, 0.0) == pytest.approx(oracle[key], abs=1e-9)
        # teleportation residue: X^{s1}-corrected qubit 2 is |0> in both branches
        for s1 in (0, 1):
            _, coll = project_qubit(state, "v1", Angle8(0), s1)
            if s1:
                coll = apply_gate(coll, "X", ["v2"])
            assert fidelity_up_to_phase(coll, PureState.zeros(["v2"])) > 1 - 1e-12

    def test_brickwork_identity_exact(self):
        g = brickwork_identity_graph()
        pat = MeasurementPattern.from_graph(g, zero_angles(g))
        dist = mbqc_output_distribution(g, pat, {}, build_blind_graph_state(g, zero_angles(g)))
        assert dist[(0, 0)] >= 1 - 1e-10

    @pytest.mark.parametrize("x,expect", [(0, 0), (1, 1)])
    def test_three_path_identity_on_classical_bit(self, x, expect):
        g = path_graph(3)
        pat = MeasurementPattern.from_graph(g, zero_angles(g))
        dist = mbqc_output_distribution(
            g, pat, {"v1": x}, build_blind_graph_state(g, zero_angles(g))
        )
        assert dist[(expect,)] >= 1 - 1e-10

    @pytest.mark.parametrize("length", [2, 3, 4])
    def test_path_patterns_match_circuit_oracle_exactly(self, length):
        rng = trial_rng(8, 2 + length)
        g = path_graph(length)
        for _ in range(6):
            angles = {v: Angle8(int(rng.integers(8))) for v in g.vertices}
            pat = MeasurementPattern.from_graph(g, angles)
            dist = mbqc_output_distribution(
                g, pat, {}, build_blind_graph_state(g, zero_angles(g))
            )
            oracle = path_circuit_distribution([angles[v] for v in g.order])
            for key in ((0,), (1,)):
                assert dist.get(key, 0.0) == pytest.approx(oracle[key], abs=1e-9)

    def test_brick_pattern_matches_circuit_oracle_exactly(self):
        rng = trial_rng(8, 9)
        g = brickwork_identity_graph()
        for _ in range(3):
            angles = {v: Angle8(int(rng.integers(8))) for v in g.vertices}
            pat = MeasurementPattern.from_graph(g, angles)
            dist = mbqc_output_distribution(
                g, pat, {}, build_blind_graph_state(g, zero_angles(g))
            )
            col_angles = [
                (angles[f"b1{c}"], angles[f"b2{c}"]) for c in range(1, 6)
            ]
            oracle = brick_circuit_distribution(col_angles)
            for key, p in oracle.items():
                assert dist.get(key, 0.0) == pytest.approx(p, abs=1e-9)

    def test_sampled_distribution_tv_below_one_percent(self):
        rng = trial_rng(8, 20)
        g = path_graph(3)
        angles = {"v1": Angle8(1), "v2": Angle8(3), "v3": Angle8(6)}
        pat = MeasurementPattern.from_graph(g, angles)
        n = 10_000
        counts = {0: 0, 1: 0}
        for _ in range(n):
            out = run_mbqc(g, pat, {}, build_blind_graph_state(g, zero_angles(g)), rng)
            counts[out["v3"]] += 1
        oracle = path_circuit_distribution([angles[v] for v in g.order])
        tv = 0.5 * sum(abs(counts[b] / n - oracle[(b,)]) for b in (0, 1))
        assert tv < 0.01


class TestStabilizerTests:
    def test_single_vertex(self):
        tests = enumerate_tests(Graph(("v",), ()))
        assert len(tests) == 1
        assert tests[0].bits == {"v": 1}
        assert tests[0].paulis == {"v": "X"}

    def test_two_path_exactly_one_test(self):
        tests = enumerate_tests(path_graph(2))
        assert len(tests) == 1
        assert tests[0].bits == {"v1": 1, "v2": 1}
        assert tests[0].paulis == {"v1": "Y", "v2": "Y"}

    def test_triangle_excludes_negative_sign_product(self):
        tests = enumerate_tests(triangle_graph())
        masks = {tuple(t.bits[v] for v in ("t1", "t2", "t3")) for t in tests}
        assert masks == {(1, 1, 0), (1, 0, 1), (0, 1, 1)}

    def test_cap(self):
        vs = tuple(f"v{i}" for i in range(17))
        with pytest.raises(ValueError, match="capped"):
            enumerate_tests(Graph(vs, ()))

    def test_measurement_angles(self):
        tests = enumerate_tests(path_graph(2))
        rng = trial_rng(8, 30)
        t = tests[0]
        assert t.measurement_angle("v1", rng) == Angle8(2)  # Y basis

    @pytest.mark.parametrize(
        "graph",
        [
            path_graph(2),
            path_graph(4),
            triangle_graph(),
            grid_graph(2, 2),
            grid_graph(2, 3),
            Graph(("h", "s1", "s2", "s3"),
                  (("h", "s1"), ("h", "s2"), ("h", "s3"))),  # star
        ],
    )
    def test_eigenstate_property_exact(self, graph):
        # every enumerated test yields parity 0 with probability 1 on |G>
        state = build_blind_graph_state(graph, zero_angles(graph))
        tests = enumerate_tests(graph)
        assert tests, "graph should admit at least one test"
        basis = {"X": Angle8(0), "Y": Angle8(2)}
        for test in tests:
            odd_prob = 0.0

            def walk(s, support, parity, weight):
                nonlocal odd_prob
                if not support:
                    if parity:
                        odd_prob += weight
                    return
                v, rest = support[0], support[1:]
                for outcome in (0, 1):
                    p = branch_probability(s, v, basis[test.paulis[v]], outcome)
                    if p < 1e-15:
                        continue
                    _, coll = project_qubit(s, v, basis[test.paulis[v]], outcome)
                    walk(coll, rest, parity ^ outcome, weight * p)

            walk(state, list(test.support), 0, 1.0)
            assert odd_prob < 1e-12


class TestGraphDocuments:
    def test_round_trip(self, tmp_path):
        g = path_graph(3)
        angles = {v: Angle8(i) for i, v in enumerate(g.vertices)}
        doc = dump_graph_document(g, angles)
        path = tmp_path / "g.json"
        path.write_text(json.dumps(doc))
        g2, pat = load_graph_document(path)
        assert g2.vertices == g.vertices
        assert g2.edges == g.edges
        assert g2.flow == g.flow
        assert pat is not None
        assert pat.angles == angles

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"vertices": ["a"], "bogus": 1}))
        with pytest.raises(ValueError, match="unknown graph document keys"):
            load_graph_document(path)
