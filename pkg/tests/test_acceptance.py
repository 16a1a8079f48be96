"""Acceptance gate: every criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one
PASS/FAIL line per criterion.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from orbitmeter.bowen import (
    DerivedModuli,
    closed_form_extremes,
    empirical_extremes,
    eta_atoms,
    generate_itinerary,
    region_frequency_traces,
    total_mass_formula,
)
from orbitmeter.cesaro import MeanSpec, mean_oscillation
from orbitmeter.eta import (
    eta_eventually_periodic,
    eta_packing_lower_bound,
    eventually_periodic_orbit,
    probability_verdict,
    total_mass_from_traces,
)
from orbitmeter.frequency import (
    block_schedule_indicator,
    cylinder_mask,
    visit_frequency,
)
from orbitmeter.markov import (
    decomposition_check,
    physicality_check,
    stationary_distribution,
    two_class_mixture,
    MarkovMeasure,
    MixtureSpec,
)
from orbitmeter.orbit import (
    LengthSchedule,
    build_wild_prefix,
    kappa,
    period_visit_bound,
    verify_checkpoint_bounds,
)
from orbitmeter.symbolic import (
    TMC,
    CylinderSpec,
    PeriodicWord,
    all_cylinders,
    minimal_period,
    periodic_words_upto,
    preimage_cylinders,
)

FULL2 = TMC.full_shift(2)
FULL3 = TMC.full_shift(3)
GOLDEN = TMC.golden_mean()

BOWEN_GRID = [(2.0, 2.0), (3.0, 1.5), (1.2, 1.2)]


def gate(name: str, ok: bool, detail: str = "") -> None:
    tag = "PASS" if ok else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"[{tag}] {name}{suffix}")
    assert ok, f"{name}{suffix}"


def test_criterion_1_bowen_extremes():
    worst = 0.0
    for lam, sig in BOWEN_GRID:
        mod = DerivedModuli(lam, sig)
        itin = generate_itinerary(mod, a0=100, transit=1, cycles=25)
        sup, inf = closed_form_extremes(mod, 1, 0)
        report = empirical_extremes(itin, 1, 0, 0, burn_in=itin.total_steps // 100)
        worst = max(worst, abs(report.sup_tail - sup), abs(report.inf_tail - inf))
    gate(
        "criterion 1: sojourn extremes match closed forms at K=25 within 1e-2",
        worst <= 1e-2,
        f"worst error {worst:.2e}",
    )


def test_criterion_2_atomic_mass():
    formula_ok = True
    empirical_ok = True
    for lam, sig in BOWEN_GRID:
        mod = DerivedModuli(lam, sig)
        mass_a, mass_b, total = eta_atoms(mod)
        pinned = (sig + lam + 2 * lam * sig) / (1 + sig + lam + lam * sig)
        formula_ok &= abs(total - pinned) <= 1e-12
        itin = generate_itinerary(mod, a0=100, transit=1, cycles=25)
        traces = region_frequency_traces(itin)
        report = total_mass_from_traces(traces, burn_in=itin.total_steps // 100)
        empirical_ok &= abs(report.total - pinned) <= 1e-2
    sign_ok = True
    for lam in np.linspace(0.2, 3.0, 10):
        for sig in np.linspace(0.2, 3.0, 10):
            sign_ok &= (total_mass_formula(lam, sig) > 1) == (lam * sig > 1)
    gate(
        "criterion 2: atomic total mass formula (1e-12), empirical (1e-2), "
        "sign iff attracting on the 10x10 grid",
        formula_ok and empirical_ok and sign_ok,
    )


def test_criterion_3_wild_checkpoints():
    start = time.perf_counter()
    ok = True
    details = []
    setups = [
        (FULL2, 1, (1, 2, 3, 4, 5)),  # periods 1,1,2,3,3: all pi <= 3
        (GOLDEN, 2, (1, 2, 3)),  # periods 1,2,3
    ]
    for tmc, n_ap, target_indices in setups:
        sched = LengthSchedule(N=n_ap, factor=2)
        max_kappa = max(target_indices)
        # the first checkpoint copying index h sits in kappa block h
        n_needed = max(12, (max_kappa * (max_kappa + 1)) // 2 - max_kappa + max_kappa)
        ells = sched.lengths(n_needed + 1)
        horizon = 2 * ells[n_needed - 1] + 16
        prefix = build_wild_prefix(tmc, sched, horizon)
        kappas = {cp.n: cp.kappa for cp in prefix.checkpoints}
        # (P2): every checkpoint n <= 12, window count >= floor(l_n / pi)
        for h in sorted(set(kappas[n] for n in kappas if n <= 12)):
            for m in (1, 2, 3):
                report = verify_checkpoint_bounds(prefix, h, m)
                for entry in report.entries:
                    if entry.n <= 12:
                        ok &= entry.window_ok
        # peak-frequency certificate for every periodic target of period <= 3
        for h in target_indices:
            p = prefix.periodic_word(h)
            report = verify_checkpoint_bounds(prefix, h, m=p.minimal_period)
            ok &= report.certified and not report.vacuous
            ok &= report.max_freq >= period_visit_bound(p.minimal_period)
            details.append(f"{h}:{float(report.max_freq):.3f}")
    elapsed = time.perf_counter() - start
    gate(
        "criterion 3: doubling-window counts and 1/(4 pi) certificates "
        "(both chains, growth 2) in under 10 s",
        ok and elapsed < 10.0,
        f"{elapsed:.2f} s",
    )


def test_criterion_4_packing_divergence():
    prefix = build_wild_prefix(FULL2, LengthSchedule(N=1), 4000)
    bound = eta_packing_lower_bound(
        prefix, CylinderSpec((0,)), list(range(2, 13)), FULL2
    )
    gate(
        "criterion 4: packing lower bound for [0] over periods 2..12 exceeds M=10",
        bound.exceeds(10.0),
        f"value {float(bound.value):.3f}",
    )


def test_criterion_5_eventually_periodic_oracle():
    rng = np.random.default_rng(2024)
    horizon = 8192
    burn_in = 1024
    tau_ok = True
    verdict_ok = True
    eta_ok = True
    cylinders = []
    for g in (1, 2, 3, 4):
        cylinders.extend(all_cylinders(FULL3, g))
    for _ in range(100):
        q = int(rng.integers(0, 21))
        raw = tuple(int(x) for x in rng.integers(0, 3, size=int(rng.integers(1, 11))))
        word = PeriodicWord(raw[: minimal_period(raw)])
        pi = word.minimal_period
        pre = tuple(int(x) for x in rng.integers(0, 3, size=q))
        orbit = eventually_periodic_orbit(pre, word, horizon + 8)

        # tau error bound, exact rational arithmetic
        for _ in range(3):
            m = int(rng.integers(1, 5))
            base = tuple(int(x) for x in rng.integers(0, 3, size=m))
            s_n = visit_frequency(orbit, CylinderSpec(base), horizon)
            exact = eta_eventually_periodic(word, CylinderSpec(base), pre).value
            tau_ok &= abs(s_n - exact) <= Fraction(q + pi, horizon)

        verdict = probability_verdict(orbit, FULL3, horizon, tol=0.05, burn_in=burn_in)
        verdict_ok &= verdict.verdict == "probability"

        # independent oracle: window counts over 20 periods of the tail
        window = orbit[len(pre) : len(pre) + 20 * pi + 4]
        for cyl in cylinders:
            counted = int(cylinder_mask(window, cyl.base)[: 20 * pi].sum())
            est = eta_eventually_periodic(word, cyl, pre)
            eta_ok &= est.value == Fraction(counted, 20 * pi)
    gate(
        "criterion 5: 100 eventually periodic orbits - exact tau bound, "
        "probability verdicts, uniform-cycle measure on generations <= 4",
        tau_ok and verdict_ok and eta_ok,
    )


def test_criterion_6_decomposition_demo():
    start = time.perf_counter()
    first = np.array([[0.75, 0.25], [0.5, 0.5]])  # stationary (2/3, 1/3)
    second = np.array([[0.25, 0.75], [0.5, 0.5]])  # stationary (2/5, 3/5)
    assert not np.allclose(
        stationary_distribution(first), stationary_distribution(second)
    )
    mixture = two_class_mixture(first, second, weight_first=0.3)
    cylinders = all_cylinders(TMC.full_shift(4), 2)
    report = decomposition_check(
        mixture,
        sample_count=200,
        horizon=10**5,
        cylinders=cylinders,
        tol_sigma=4.0,
        seed=20240805,
    )
    elapsed = time.perf_counter() - start
    gate(
        "criterion 6: 200-sample mixture reconstruction at 4 sigma "
        "(>= 95% per-sample, mixture bands) in under 30 s",
        report.fraction_within_bands >= 0.95 and report.mixture_ok and elapsed < 30.0,
        f"fraction {report.fraction_within_bands:.3f}, {elapsed:.1f} s",
    )


def test_criterion_7_physicality_verdicts():
    ergodic_ok = True
    mixture_ok = True
    pi = stationary_distribution(np.array([[0.75, 0.25], [0.5, 0.5]]))
    ergodic = MarkovMeasure(np.array([[0.75, 0.25], [0.5, 0.5]]), pi)
    mixture = two_class_mixture(
        np.array([[0.75, 0.25], [0.5, 0.5]]),
        np.array([[0.25, 0.75], [0.5, 0.5]]),
        weight_first=0.5,
    )
    for seed in (1, 2, 3, 4, 5):
        r_erg = physicality_check(
            ergodic, sample_count=30, horizon=20000, tol=0.05, seed=seed
        )
        ergodic_ok &= r_erg.mu_physical and r_erg.generalized_physical
        r_mix = physicality_check(
            mixture, sample_count=30, horizon=20000, tol=0.05, seed=seed
        )
        mixture_ok &= r_mix.generalized_physical and not r_mix.mu_physical
    gate(
        "criterion 7: ergodic chain physical; two-class mixture generalized "
        "but not physical; stable across 5 seeds",
        ergodic_ok and mixture_ok,
    )


def test_criterion_8_non_regularization():
    horizon = 10**6
    itin = generate_itinerary(DerivedModuli(2, 2), a0=10, transit=1, cycles=12)
    stream = itin.label_stream(max_steps=horizon)
    indicator = (stream == 0).astype(np.int64)
    burn_osc = horizon // 100
    amp1 = mean_oscillation(indicator, MeanSpec("cesaro", 1), burn_osc, horizon).amplitude
    amp2 = mean_oscillation(indicator, MeanSpec("cesaro", 2), burn_osc, horizon).amplitude

    idx = np.arange(horizon)
    control = 0.5 + np.power(2.0, -np.minimum(idx, 60))
    burn_ctl = horizon // 5
    control_ok = True
    for kind in ("cesaro", "hoelder"):
        for k in (0, 1, 2, 3):
            amp = mean_oscillation(control, MeanSpec(kind, k), burn_ctl, horizon).amplitude
            control_ok &= amp <= 1e-3
    gate(
        "criterion 8: (C,1) and (C,2) of the sojourn indicator keep amplitude "
        ">= 0.05 at 1e6 while a convergent control stays <= 1e-3 for k <= 3",
        amp1 >= 0.05 and amp2 >= 0.05 and control_ok,
        f"amp1 {amp1:.3f}, amp2 {amp2:.3f}",
    )


def test_criterion_9_property_suites():
    rng = np.random.default_rng(77)
    ok = True
    for _ in range(1000):
        tmc = FULL3 if rng.random() < 0.5 else FULL2
        s = tmc.alphabet_size
        n = int(rng.integers(10, 120))
        m = int(rng.integers(1, 4))
        orbit = rng.integers(0, s, size=n + m + 2)
        base_a = tuple(int(x) for x in rng.integers(0, s, size=m))
        base_b = tuple(int(x) for x in rng.integers(0, s, size=m))
        cyl_a, cyl_b = CylinderSpec(base_a), CylinderSpec(base_b)

        # shift compatibility, exact: |S_n(preimage) - S_n(target)| <= 1/n
        s_direct = visit_frequency(orbit, cyl_a, n)
        s_pre = visit_frequency(orbit, preimage_cylinders(cyl_a, tmc), n)
        ok &= abs(s_pre - s_direct) <= Fraction(1, n)

        # subadditivity with equality on disjoint targets
        sa = visit_frequency(orbit, cyl_a, n)
        sb = visit_frequency(orbit, cyl_b, n)
        sab = visit_frequency(orbit, [cyl_a, cyl_b], n)
        ok &= sab <= sa + sb
        if base_a != base_b:
            ok &= sab == sa + sb
    gate(
        "criterion 9: shift compatibility and subadditivity, 1000 exact "
        "rational instances",
        ok,
    )


def test_criterion_10_block_schedule():
    indicator, checkpoints = block_schedule_indicator(6)
    sums = np.cumsum(indicator)
    ok = True
    for k, n_k in enumerate(checkpoints, start=1):
        freq = Fraction(int(sums[n_k - 1]), n_k)
        if k % 2 == 0:
            ok &= freq >= Fraction(9, 10)
        else:
            ok &= freq <= Fraction(1, 10)
    gate(
        "criterion 10: alternating block schedule crosses 9/10 (even) and "
        "1/10 (odd) at every checkpoint up to k=6",
        ok,
    )
