"""Higher-order means: regularity, exactness, and non-regularization."""

from fractions import Fraction

import numpy as np
import pytest

from orbitmeter.bowen import DerivedModuli, generate_itinerary
from orbitmeter.cesaro import (
    MeanSpec,
    cesaro_mean,
    cesaro_values,
    cesaro_values_exact,
    hoelder_mean,
    hoelder_values,
    kahan_cumsum,
    mean_oscillation,
)
from orbitmeter.errors import InputError, PreconditionError


class TestCesaro:
    def test_order_zero_identity(self):
        seq = np.array([3.0, 1.0, 4.0, 1.0, 5.0])
        assert np.allclose(cesaro_values(seq, 0), seq)

    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_constant_regularity(self, k):
        seq = np.full(200, 2.5)
        values = cesaro_values(seq, k)
        assert np.allclose(values, 2.5, atol=1e-12)

    def test_alternating_first_order_to_zero(self):
        # oracle: partial sums of (-1)^n are bounded by 1, so the first
        # mean is O(1/n)
        n = 5000
        seq = np.array([(-1) ** i for i in range(n)])
        values = cesaro_values(seq, 1)
        assert abs(values[-1]) <= 1 / n + 1e-12
        assert abs(values[n // 2]) <= 2 / n + 1e-12

    def test_convergent_input_first_order(self):
        n = 20000
        seq = 0.5 + 1.0 / np.arange(1, n + 1)
        values = cesaro_values(seq, 1)
        assert values[-1] == pytest.approx(0.5, abs=2 * np.log(n) / n)

    def test_binomial_normalization(self):
        # (C,2) of the sequence 1,1,1,... is 1 via binom(n+2,2)
        seq = np.ones(50, dtype=np.int64)
        assert np.allclose(cesaro_values(seq, 2), 1.0)

    def test_mean_at_index(self):
        seq = [1.0, 0.0, 1.0, 0.0]
        assert cesaro_mean(seq, 1, 3) == pytest.approx(0.5)

    def test_bounds_preserved(self):
        rng = np.random.default_rng(2)
        seq = rng.integers(0, 2, size=1000)
        for k in (1, 2, 3):
            values = cesaro_values(seq, k)
            assert (values >= -1e-12).all() and (values <= 1 + 1e-12).all()

    def test_negative_order_rejected(self):
        with pytest.raises(InputError):
            cesaro_values(np.ones(4), -1)

    def test_empty_rejected(self):
        with pytest.raises(PreconditionError):
            cesaro_values(np.array([]), 1)


class TestHoelder:
    def test_constant(self):
        assert np.allclose(hoelder_values(np.full(100, 7.0), 3), 7.0)

    def test_first_orders_coincide(self):
        rng = np.random.default_rng(5)
        seq = rng.random(500)
        assert np.allclose(hoelder_values(seq, 1), cesaro_values(seq, 1), atol=1e-12)

    def test_stays_in_unit_interval(self):
        itin = generate_itinerary(DerivedModuli(2, 2), a0=5, transit=1, cycles=9)
        stream = itin.label_stream()
        indicator = (stream == 0).astype(np.int64)
        values = hoelder_values(indicator, 2)
        assert (values >= 0).all() and (values <= 1).all()

    def test_mean_at_index(self):
        assert hoelder_mean([4.0, 0.0], 1, 1) == pytest.approx(2.0)


class TestNumerics:
    def test_kahan_matches_fsum(self):
        rng = np.random.default_rng(1)
        seq = rng.random(3000) * 1e6
        out = kahan_cumsum(seq)
        import math

        assert out[-1] == pytest.approx(math.fsum(seq), rel=1e-15)

    def test_drift_against_exact_rationals(self):
        # relative drift of the float path vs exact rationals on a 1e4
        # prefix stays below 1e-9
        rng = np.random.default_rng(7)
        floats = rng.random(10**4)
        exact = [Fraction(float(x)) for x in floats]
        for k in (1, 2):
            approx = cesaro_values(floats, k)
            truth = cesaro_values_exact(exact, k)
            for i in (10, 100, 9999):
                t = float(truth[i])
                assert abs(approx[i] - t) <= 1e-9 * max(1.0, abs(t))


class TestOscillation:
    def test_convergent_control_small_amplitude(self):
        # summable deviations keep the means' inertia below tolerance;
        # hoelder orders beyond 1 carry ln^(k-1)(n)/n inertia and are
        # checked at the larger acceptance horizon instead
        n = 10**5
        seq = 0.5 + 1.0 / np.arange(1, n + 1) ** 2
        for kind, orders in (("cesaro", (0, 1, 2, 3)), ("hoelder", (0, 1))):
            for k in orders:
                report = mean_oscillation(seq, MeanSpec(kind, k), burn_in=n // 10, horizon=n)
                assert report.amplitude <= 1e-3

    def test_bowen_indicator_first_order_amplitude(self):
        itin = generate_itinerary(DerivedModuli(2, 2), a0=10, transit=1, cycles=10)
        stream = itin.label_stream(max_steps=10**6)
        indicator = (stream == 0).astype(np.int64)
        report = mean_oscillation(
            indicator, MeanSpec("cesaro", 1), burn_in=len(indicator) // 100,
            horizon=len(indicator),
        )
        # oscillates between roughly 1/3 and 2/3
        assert report.amplitude >= 0.2

    def test_bowen_indicator_second_order_persists(self):
        itin = generate_itinerary(DerivedModuli(2, 2), a0=10, transit=1, cycles=12)
        stream = itin.label_stream(max_steps=10**6)
        indicator = (stream == 0).astype(np.int64)
        report = mean_oscillation(
            indicator, MeanSpec("cesaro", 2), burn_in=len(indicator) // 100,
            horizon=len(indicator),
        )
        assert report.amplitude >= 0.05

    def test_raw_vs_smoothed_ordering(self):
        # higher orders can only shrink the oscillation of this input
        itin = generate_itinerary(DerivedModuli(2, 2), a0=10, transit=0, cycles=10)
        stream = itin.label_stream()
        indicator = (stream == 0).astype(np.int64)
        burn = len(indicator) // 50
        amps = [
            mean_oscillation(indicator, MeanSpec("cesaro", k), burn, len(indicator)).amplitude
            for k in (0, 1, 2)
        ]
        assert amps[0] >= amps[1] >= amps[2]

    def test_bad_horizon(self):
        with pytest.raises(PreconditionError):
            mean_oscillation(np.ones(10), MeanSpec("cesaro", 1), 5, 5)
