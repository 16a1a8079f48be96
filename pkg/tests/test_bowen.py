"""Heteroclinic sojourn model vs its closed-form oracle."""

import math
from fractions import Fraction

import numpy as np
import pytest

from orbitmeter.bowen import (
    REGION_A,
    REGION_B,
    REGION_TRANSIT,
    DerivedModuli,
    SaddleParams,
    boundary_average_trace,
    closed_form_extremes,
    empirical_extremes,
    eta_atoms,
    generate_itinerary,
    moduli,
    total_mass_formula,
    two_atom_report,
)
from orbitmeter.errors import DomainError, InputError, ResourceError


class TestModuli:
    def test_attracting_case(self):
        mod = moduli(SaddleParams(1, 2, 1, 2))
        assert (mod.lam, mod.sigma, mod.rho) == (2, 2, 4)
        assert mod.attracting

    def test_repelling_case(self):
        mod = moduli(SaddleParams(2, 1, 2, 1))
        assert (mod.lam, mod.sigma, mod.rho) == (0.5, 0.5, 0.25)
        assert not mod.attracting

    def test_boundary_case(self):
        mod = moduli(SaddleParams(1, 1, 1, 1))
        assert mod.rho == 1
        assert not mod.attracting

    def test_positivity_enforced(self):
        with pytest.raises(InputError):
            SaddleParams(1, -2, 1, 1)


class TestClosedForm:
    def test_symmetric_two(self):
        sup, inf = closed_form_extremes(DerivedModuli(2, 2), 1, 0)
        assert sup == pytest.approx(2 / 3)
        assert inf == pytest.approx(1 / 3)

    def test_asymmetric(self):
        sup, inf = closed_form_extremes(DerivedModuli(3, 1), 1, 0)
        assert sup == pytest.approx(1 / 2)
        assert inf == pytest.approx(1 / 4)

    def test_degenerate_observable_converges(self):
        for eps in (1e-3, 1e-6, 0.0):
            sup, inf = closed_form_extremes(DerivedModuli(2, 2), 1 + eps, 1)
            assert sup >= inf
            assert sup - inf <= eps
        sup, inf = closed_form_extremes(DerivedModuli(2, 2), 5, 5)
        assert sup == inf == 5

    def test_orientation_error(self):
        with pytest.raises(InputError):
            closed_form_extremes(DerivedModuli(2, 2), 0, 1)

    def test_swap_symmetry(self):
        # relabeling A <-> B swaps (lam, sigma) and the two extremes
        lam, sig = 2.5, 1.7
        sup, inf = closed_form_extremes(DerivedModuli(lam, sig), 1, 0)
        sup2, inf2 = closed_form_extremes(DerivedModuli(sig, lam), 1, 0)
        assert sup == pytest.approx(1 - inf2)
        assert inf == pytest.approx(1 - sup2)


class TestAtoms:
    def test_symmetric_two(self):
        mass_a, mass_b, total = eta_atoms(DerivedModuli(2, 2))
        assert mass_a == pytest.approx(2 / 3)
        assert mass_b == pytest.approx(2 / 3)
        assert total == pytest.approx(4 / 3)

    def test_total_equals_sum_of_atoms(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            lam = float(rng.uniform(0.3, 5))
            sig = float(rng.uniform(0.3, 5))
            if lam * sig <= 1:
                continue
            mass_a, mass_b, total = eta_atoms(DerivedModuli(lam, sig))
            assert total == pytest.approx(mass_a + mass_b, abs=1e-12)

    def test_total_identity_and_sign(self):
        # total - 1 = (rho - 1)/(1 + sigma + lam + rho) for all moduli
        for lam in np.linspace(0.2, 3.0, 10):
            for sig in np.linspace(0.2, 3.0, 10):
                total = total_mass_formula(lam, sig)
                rho = lam * sig
                identity = (rho - 1) / (1 + sig + lam + rho)
                assert total - 1 == pytest.approx(identity, abs=1e-12)
                assert (total > 1) == (rho > 1)

    def test_limits(self):
        assert total_mass_formula(1e9, 1e9) == pytest.approx(2, abs=1e-8)
        assert total_mass_formula(1.001, 1.0) == pytest.approx(1, abs=1e-3)

    def test_non_attracting_rejected(self):
        with pytest.raises(DomainError):
            eta_atoms(DerivedModuli(0.5, 0.5))


class TestItinerary:
    def test_dwell_recursion(self):
        itin = generate_itinerary(DerivedModuli(2, 2), a0=10, transit=0, cycles=3)
        assert itin.dwell_a == (10, 40, 160)
        assert itin.dwell_b == (20, 80, 320)
        durations = [d for _, d in itin.segments]
        assert durations == [10, 20, 40, 80, 160, 320]

    def test_transit_bookkeeping(self):
        itin = generate_itinerary(DerivedModuli(2, 2), a0=4, transit=5, cycles=4)
        transit_steps = sum(d for r, d in itin.segments if r == REGION_TRANSIT)
        assert transit_steps == 2 * 4 * 5

    def test_single_cycle_layout(self):
        itin = generate_itinerary(DerivedModuli(2, 2), a0=3, transit=2, cycles=1)
        assert [r for r, _ in itin.segments] == [
            REGION_A,
            REGION_TRANSIT,
            REGION_B,
            REGION_TRANSIT,
        ]
        assert [d for _, d in itin.segments] == [3, 2, 6, 2]

    def test_stream_matches_segments(self):
        itin = generate_itinerary(DerivedModuli(2, 2), a0=3, transit=1, cycles=3)
        stream = itin.label_stream()
        assert len(stream) == itin.total_steps
        assert int((stream == REGION_A).sum()) == sum(
            d for r, d in itin.segments if r == REGION_A
        )

    def test_stream_cap(self):
        itin = generate_itinerary(DerivedModuli(2, 2), a0=10, transit=1, cycles=40)
        with pytest.raises(ResourceError):
            itin.label_stream()
        truncated = itin.label_stream(max_steps=1000)
        assert len(truncated) == 1000


class TestEmpiricalExtremes:
    def test_matches_oracle_symmetric(self):
        mod = DerivedModuli(2, 2)
        itin = generate_itinerary(mod, a0=10, transit=0, cycles=20)
        sup, inf = closed_form_extremes(mod, 1, 0)
        report = empirical_extremes(itin, 1, 0, 0, burn_in=itin.total_steps // 50)
        assert report.sup_tail == pytest.approx(sup, abs=1e-2)
        assert report.inf_tail == pytest.approx(inf, abs=1e-2)

    def test_boundary_and_stream_agree(self):
        mod = DerivedModuli(2, 1.5)
        itin = generate_itinerary(mod, a0=5, transit=1, cycles=8)
        stream = itin.label_stream()
        burn = itin.total_steps // 10
        exact = empirical_extremes(itin, 1, 0, 0, burn_in=burn)
        scanned = empirical_extremes(stream, 1, 0, 0, burn_in=burn)
        assert scanned.sup_tail <= exact.sup_tail + 1e-12
        assert scanned.inf_tail >= exact.inf_tail - 1e-12
        assert exact.sup_tail == pytest.approx(scanned.sup_tail, abs=1e-3)

    def test_constant_observable_amplitude_zero(self):
        itin = generate_itinerary(DerivedModuli(2, 2), a0=6, transit=2, cycles=10)
        report = empirical_extremes(itin, 1, 1, 1, burn_in=100)
        assert report.amplitude == pytest.approx(0, abs=1e-12)

    def test_non_attracting_converges_to_cycle_mean(self):
        mod = DerivedModuli(0.9, 1.0)  # rho < 1: dwells shrink geometrically
        itin = generate_itinerary(mod, a0=500, transit=0, cycles=30)
        report = empirical_extremes(itin, 1, 0, 0, burn_in=itin.total_steps // 3)
        assert report.amplitude < 0.15
        # the mean sits strictly between the would-be extremes
        assert 0.3 < report.inf_tail <= report.sup_tail < 0.7

    def test_error_decays_with_cycles(self):
        mod = DerivedModuli(2, 2)
        sup, _ = closed_form_extremes(mod, 1, 0)
        errors = []
        for cycles in (6, 9, 12):
            itin = generate_itinerary(mod, a0=10, transit=1, cycles=cycles)
            report = empirical_extremes(itin, 1, 0, 0, burn_in=itin.total_steps // 100)
            errors.append(abs(report.sup_tail - sup))
        assert errors[2] <= errors[0] + 1e-9

    def test_dwell_fraction_at_kth_visit(self):
        # at the end of the k-th dwell near A the exact time fraction in A
        # is sigma/(1+sigma) up to a geometrically small correction
        mod = DerivedModuli(2, 2)
        itin = generate_itinerary(mod, a0=1000, transit=0, cycles=14)
        trace = boundary_average_trace(itin, {REGION_A: 1, REGION_B: 0, REGION_TRANSIT: 0})
        target = mod.sigma / (1 + mod.sigma)
        points = list(trace.points)
        for k in range(6, 14):
            n, value = points[2 * k]  # boundary after the (k+1)-th A-dwell
            slack = 1 / mod.rho**k + 4 * k / (1000 * mod.rho ** (k / 2))
            assert abs(float(value) - target) <= max(slack, 3 / mod.rho**k)


class TestTwoAtomReport:
    def test_symmetric_no_transit(self):
        itin = generate_itinerary(DerivedModuli(2, 2), a0=50, transit=0, cycles=18)
        report = two_atom_report(itin, burn_in=itin.total_steps // 20)
        assert report.attracting and report.satisfied
        assert report.mass_a_empirical == pytest.approx(2 / 3, abs=1e-2)
        assert report.mass_b_empirical == pytest.approx(2 / 3, abs=1e-2)
        assert report.elsewhere_tail == 0

    def test_transit_fades(self):
        itin = generate_itinerary(DerivedModuli(2, 2), a0=50, transit=3, cycles=18)
        report = two_atom_report(itin, burn_in=itin.total_steps // 20)
        assert report.satisfied
        assert report.elsewhere_tail <= 1e-2

    def test_non_attracting_declines(self):
        itin = generate_itinerary(DerivedModuli(0.8, 0.9), a0=100, transit=1, cycles=12)
        report = two_atom_report(itin, burn_in=itin.total_steps // 4)
        assert not report.attracting
        assert not report.satisfied


ACCEPTANCE_GRID = [(2.0, 2.0), (3.0, 1.5), (1.2, 1.2)]


class TestAcceptanceGridPreview:
    """The K=25 grid the acceptance suite pins, checked at module level."""

    @pytest.mark.parametrize("lam,sig", ACCEPTANCE_GRID)
    def test_grid_extremes(self, lam, sig):
        mod = DerivedModuli(lam, sig)
        itin = generate_itinerary(mod, a0=100, transit=1, cycles=25)
        sup, inf = closed_form_extremes(mod, 1, 0)
        report = empirical_extremes(itin, 1, 0, 0, burn_in=itin.total_steps // 100)
        assert report.sup_tail == pytest.approx(sup, abs=1e-2)
        assert report.inf_tail == pytest.approx(inf, abs=1e-2)
