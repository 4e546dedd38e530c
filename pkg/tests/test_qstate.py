import itertools
import math

import numpy as np
import pytest

from sdqcsim.angles import Angle8
from sdqcsim.qstate import (
    DensityOracle,
    PureState,
    add_qubit,
    apply_gate,
    branch_probability,
    discard_qubit,
    fidelity_up_to_phase,
    maximally_mixed,
    measure_qubit,
    project_qubit,
)
from sdqcsim.seeding import trial_rng


def bell(a="a", b="b"):
    return PureState.from_amplitudes([a, b], [1, 0, 0, 1])


class TestGates:
    def test_rz_on_plus_gives_rotated_plus(self):
        st = apply_gate(PureState.plus(["q"]), "RZ", ["q"], angle=math.pi / 4)
        expect = np.array([1.0, np.exp(1j * math.pi / 4)]) / math.sqrt(2)
        assert np.allclose(st.vector(), expect, atol=1e-15)

    def test_rz_zero_is_identity(self):
        st = PureState.from_amplitudes(["q"], [0.6, 0.8j])
        out = apply_gate(st, "RZ", ["q"], angle=0.0)
        assert np.allclose(out.vector(), st.vector())

    def test_cz_commutes_with_rz_on_path3(self):
        # per-qubit RZ then CZ edges equals CZ edges then RZ, theta = (1,2,3)*pi/4
        labels = ["a", "b", "c"]
        thetas = [1, 2, 3]
        st = PureState.plus(labels)
        rz_first = st
        for q, j in zip(labels, thetas):
            rz_first = apply_gate(rz_first, "RZ", [q], angle=Angle8(j).radians())
        for e in (("a", "b"), ("b", "c")):
            rz_first = apply_gate(rz_first, "CZ", list(e))
        cz_first = st
        for e in (("a", "b"), ("b", "c")):
            cz_first = apply_gate(cz_first, "CZ", list(e))
        for q, j in zip(labels, thetas):
            cz_first = apply_gate(cz_first, "RZ", [q], angle=Angle8(j).radians())
        assert np.allclose(rz_first.vector(), cz_first.vector(), atol=1e-14)

    def test_cz_rz_commutation_all_4_vertex_graphs(self):
        rng = trial_rng(42, 0)
        labels = ["a", "b", "c", "d"]
        pairs = list(itertools.combinations(labels, 2))
        for mask in range(2 ** len(pairs)):
            edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
            js = [int(rng.integers(8)) for _ in labels]
            a = PureState.plus(labels)
            for q, j in zip(labels, js):
                a = apply_gate(a, "RZ", [q], angle=Angle8(j).radians())
            for e in edges:
                a = apply_gate(a, "CZ", list(e))
            b = PureState.plus(labels)
            for e in edges:
                b = apply_gate(b, "CZ", list(e))
            for q, j in zip(labels, js):
                b = apply_gate(b, "RZ", [q], angle=Angle8(j).radians())
            assert fidelity_up_to_phase(a, b) > 1 - 1e-12

    def test_norm_preserved_by_random_circuits(self):
        rng = trial_rng(1, 0)
        st = PureState.plus(["a", "b", "c"])
        for _ in range(200):
            g = ["H", "X", "Z", "RZ", "CZ", "CNOT"][int(rng.integers(6))]
            qs = list(rng.choice(["a", "b", "c"], size=2, replace=False))
            if g in ("CZ", "CNOT"):
                st = apply_gate(st, g, qs)
            elif g == "RZ":
                st = apply_gate(st, g, qs[:1], angle=float(rng.uniform(0, 2 * math.pi)))
            else:
                st = apply_gate(st, g, qs[:1])
            assert st.norm_error() < 1e-12

    def test_errors(self):
        st = PureState.plus(["a", "b"])
        with pytest.raises(KeyError):
            apply_gate(st, "H", ["zz"])
        with pytest.raises(ValueError):
            apply_gate(st, "CZ", ["a", "a"])
        with pytest.raises(ValueError):
            apply_gate(st, "RZ", ["a"])
        with pytest.raises(ValueError):
            apply_gate(st, "FOO", ["a"])

    def test_register_cap(self):
        with pytest.raises(ValueError, match="cap"):
            PureState.plus([f"q{i}" for i in range(21)])


class TestMeasurement:
    def test_plus_in_x_is_deterministic(self):
        rng = trial_rng(2, 0)
        for _ in range(20):
            out, _ = measure_qubit(PureState.plus(["q"]), "q", "X", rng)
            assert out == 0

    def test_rotated_basis_matches_state(self):
        rng = trial_rng(2, 1)
        for j in range(8):
            st = apply_gate(PureState.plus(["q"]), "RZ", ["q"], angle=Angle8(j).radians())
            out, _ = measure_qubit(st, "q", Angle8(j), rng)
            assert out == 0

    def test_bell_x_measurement_statistics_and_collapse(self):
        # outcome 0/1 each with prob 1/2 over 1e4 samples (3 sigma); collapse |+/->
        rng = trial_rng(2, 2)
        n, ones = 10_000, 0
        for _ in range(n):
            out, coll = measure_qubit(bell(), "a", "X", rng)
            ones += out
            target = PureState.from_amplitudes(["b"], [1, 1 - 2 * out])
            assert fidelity_up_to_phase(coll, target) > 1 - 1e-12
        sigma = math.sqrt(0.25 / n)
        assert abs(ones / n - 0.5) < 3 * sigma

    def test_born_rule_statistics_4_sigma(self):
        # |psi> = sqrt(0.3)|0> + sqrt(0.7)|1>, 1e5 Z measurements
        rng = trial_rng(2, 3)
        st = PureState.from_amplitudes(["q"], [math.sqrt(0.3), math.sqrt(0.7)])
        n = 100_000
        ones = sum(measure_qubit(st, "q", "Z", rng)[0] for _ in range(n))
        sigma = math.sqrt(0.3 * 0.7 / n)
        assert abs(ones / n - 0.7) < 4 * sigma

    def test_project_zero_probability_branch_raises(self):
        st = PureState.zeros(["q"])
        with pytest.raises(ValueError, match="zero-probability"):
            project_qubit(st, "q", "Z", 1)

    def test_branch_probability(self):
        assert branch_probability(PureState.plus(["q"]), "q", "Z", 1) == pytest.approx(0.5)


class TestDiscard:
    def test_discard_half_bell(self):
        rng = trial_rng(3, 0)
        seen = set()
        for _ in range(50):
            coll = discard_qubit(bell(), "a", rng)
            z = coll.vector()
            if abs(z[0]) > 0.99:
                seen.add(0)
            else:
                seen.add(1)
        assert seen == {0, 1}

    def test_discard_product_state_leaves_rest_untouched(self):
        rng = trial_rng(3, 1)
        psi = PureState.from_amplitudes(["a"], [0.6, 0.8j])
        st = psi.tensor(PureState.from_amplitudes(["b"], [0.28, 0.96]))
        out = discard_qubit(st, "b", rng)
        assert fidelity_up_to_phase(out, psi) > 1 - 1e-12

    @pytest.mark.parametrize("case", ["bell", "ghz3", "w4", "rotated"])
    def test_trajectory_mixture_equals_partial_trace(self, case):
        rng = trial_rng(3, 2)
        if case == "bell":
            st = bell()
        elif case == "ghz3":
            st = PureState.from_amplitudes(["a", "b", "c"], [1, 0, 0, 0, 0, 0, 0, 1])
        elif case == "w4":
            v = np.zeros(16)
            v[1] = v[2] = v[4] = v[8] = 1.0
            st = PureState.from_amplitudes(["a", "b", "c", "d"], v)
        else:
            st = apply_gate(bell("a", "b"), "RZ", ["b"], angle=Angle8(3).radians())
        keep = [q for q in st.qubits if q != "a"]
        # enumerate both discard branches exactly and mix
        parts = []
        for z in (0, 1):
            p = branch_probability(st, "a", "Z", z)
            if p < 1e-15:
                continue
            _, coll = project_qubit(st, "a", "Z", z)
            parts.append((p, DensityOracle.from_pure(coll)))
        mixed = DensityOracle.mixture(parts)
        traced = DensityOracle.from_pure(st, keep=tuple(keep))
        assert mixed.allclose(traced, tol=1e-10)
        _ = rng


class TestFidelity:
    def test_global_phase_invariance(self):
        a = PureState.from_amplitudes(["q"], [0.6, 0.8])
        b = PureState.from_amplitudes(["q"], [0.6 * np.exp(1j * 1.3), 0.8 * np.exp(1j * 1.3)])
        assert fidelity_up_to_phase(a, b) == pytest.approx(1.0, abs=1e-14)

    def test_orthogonal(self):
        assert fidelity_up_to_phase(PureState.zeros(["q"]),
                                    PureState.from_amplitudes(["q"], [0, 1])) == 0.0

    def test_plus_vs_rotated_plus(self):
        a = PureState.plus(["q"])
        b = apply_gate(a, "RZ", ["q"], angle=math.pi / 4)
        assert fidelity_up_to_phase(a, b) == pytest.approx(math.cos(math.pi / 8) ** 2, abs=1e-12)

    def test_label_order_irrelevant(self):
        a = bell("x", "y")
        b = PureState.from_amplitudes(["y", "x"], [1, 0, 0, 1])
        assert fidelity_up_to_phase(a, b) == pytest.approx(1.0)

    def test_mismatched_labels_raise(self):
        with pytest.raises(ValueError):
            fidelity_up_to_phase(PureState.plus(["a"]), PureState.plus(["b"]))


class TestDensityOracle:
    def test_physicality_checks(self):
        rho = DensityOracle.from_pure(bell())
        rho.check_physical()
        assert rho.matrix.shape == (4, 4)

    def test_reduce_bell_is_maximally_mixed(self):
        rho = DensityOracle.from_pure(bell()).reduce(["a"])
        assert rho.allclose(maximally_mixed("a"), tol=1e-12)

    def test_cap(self):
        st = PureState.plus([f"q{i}" for i in range(6)])
        with pytest.raises(ValueError, match="capped"):
            DensityOracle.from_pure(st)

    def test_add_qubit_collision(self):
        with pytest.raises(ValueError, match="collision"):
            add_qubit(PureState.plus(["a"]), "a")
