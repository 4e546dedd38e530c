import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sdqcsim.angles import ALL_ANGLES, Angle8
from sdqcsim.pulses import (
    LEAK_FULL,
    LEAK_NOTHING,
    LEAK_SINGLE,
    PulseRecord,
    at_least_one_prob,
    multiphoton_prob,
    pmf_truncation_cutoff,
    poisson_pmf,
    sample_pulse,
    server_view,
)
from sdqcsim.seeding import trial_rng


class TestSampling:
    def test_zero_intensity_always_vacuum(self):
        rng = trial_rng(5, 0)
        assert all(sample_pulse(0.0, Angle8(0), rng).k == 0 for _ in range(100))

    def test_poisson_mean_4_sigma(self):
        rng = trial_rng(5, 1)
        n = 100_000
        mean = sum(sample_pulse(2.5, Angle8(0), rng).k for _ in range(n)) / n
        sigma = math.sqrt(2.5 / n)
        assert abs(mean - 2.5) < 4 * sigma
        assert 2.48 <= mean <= 2.52

    def test_single_photon_frequency_at_unit_intensity(self):
        rng = trial_rng(5, 2)
        n = 100_000
        hits = sum(sample_pulse(1.0, Angle8(0), rng).k == 1 for _ in range(n))
        p = math.exp(-1.0)
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(hits / n - p) < 4 * sigma

    def test_negative_intensity_rejected(self):
        rng = trial_rng(5, 3)
        with pytest.raises(ValueError):
            sample_pulse(-1.0, Angle8(0), rng)
        with pytest.raises(ValueError):
            multiphoton_prob(-0.5)

    def test_negative_count_rejected(self):
        with pytest.raises(ValueError):
            PulseRecord(k=-1, theta=Angle8(0))


class TestClosedForms:
    def test_multiphoton_prob_values(self):
        assert multiphoton_prob(0.0) == 0.0
        assert multiphoton_prob(1.0) == pytest.approx(0.264241, abs=1e-6)
        assert multiphoton_prob(2.5) == pytest.approx(0.712703, abs=1e-6)

    def test_at_least_one(self):
        assert at_least_one_prob(0.0) == 0.0
        assert at_least_one_prob(1.0) == pytest.approx(1 - math.exp(-1), abs=1e-15)

    @pytest.mark.parametrize("alpha_sq", [0.0, 0.2, 1.0, 2.5, 10.0, 40.0])
    def test_pmf_sums_to_one_at_cutoff(self, alpha_sq):
        cutoff = pmf_truncation_cutoff(alpha_sq)
        total = sum(poisson_pmf(k, alpha_sq) for k in range(cutoff + 1))
        assert abs(total - 1.0) < 1e-12

    def test_pmf_consistent_with_closed_forms(self):
        for a in (0.3, 1.0, 2.5):
            assert 1 - poisson_pmf(0, a) == pytest.approx(at_least_one_prob(a), abs=1e-14)
            assert 1 - poisson_pmf(0, a) - poisson_pmf(1, a) == pytest.approx(
                multiphoton_prob(a), abs=1e-14
            )

    @given(st.floats(min_value=1e-6, max_value=15.0), st.floats(min_value=1e-3, max_value=1.0))
    def test_strictly_increasing(self, a, delta):
        # strict where the tail is resolvable in double precision
        assert multiphoton_prob(a + delta) > multiphoton_prob(a)

    def test_never_decreasing_up_to_saturation(self):
        grid = np.linspace(0.0, 60.0, 400)
        vals = [multiphoton_prob(a) for a in grid]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


class TestLeakage:
    def test_view_variants(self):
        assert server_view(PulseRecord(0, Angle8(5))).kind == LEAK_NOTHING
        single = server_view(PulseRecord(1, Angle8(5)))
        assert single.kind == LEAK_SINGLE and single.theta is None
        full = server_view(PulseRecord(2, Angle8(5)))
        assert full.kind == LEAK_FULL and full.theta == Angle8(5)

    def test_uniform_rotated_qubit_is_maximally_mixed(self):
        avg = np.zeros((2, 2), dtype=complex)
        for theta in ALL_ANGLES:
            v = np.array([1.0, np.exp(1j * theta.radians())]) / math.sqrt(2)
            avg += np.outer(v, v.conj()) / 8.0
        assert np.allclose(avg, np.eye(2) / 2.0, atol=1e-12)
