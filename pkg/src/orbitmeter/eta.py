"""Cover measure built from visit frequencies along one orbit.

The visit-frequency premeasure of an orbit assigns every set the limsup
of its running visit frequency.  The associated Borel measure evaluates
a target as the sup over cover fineness of the cheapest countable cover
cost; on a symbolic space the canonical covers are cylinder partitions,
generation ``g`` playing the role of fineness ``2**-g`` in the standard
product metric (distance ``2**-first_disagreement``).  Splitting a
disjoint cover only increases its frequency cost, so the partition of a
target into its generation-``g`` subcylinders realizes the cover
infimum exactly, and the sup over fineness becomes monotone growth in
``g``.  That partition-sum reading of the infimum is this module's
central convention; every estimate records whether it is exact, a lower
bound or an upper bound, so comparisons never silently mix directions.

Two regimes are covered exactly or certifiably:

* eventually periodic orbits, where the measure is the uniform measure
  on the periodic cycle (the oracle used all over the test suite);
* oscillating prefixes from :mod:`orbitmeter.orbit`, where disjoint
  cylinders around distinct periodic orbits inside a host cylinder each
  carry frequency at least ``1/(4 period)`` along their own time
  subsequences, so summing over the (exponentially many) orbits of
  several period levels drives the host's mass over any finite
  threshold.  Divergence is always reported as "lower bound exceeds
  M" for a configurable level ``M``, never as a literal infinity:
  finite computation can only certify divergence to a level.

Premeasure tables are built in one pass and immutable afterwards, so
per-target estimation may run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InputError, PreconditionError, StructuralError
from .frequency import FrequencyTrace, frequency_trace, geometric_horizons
from .orbit import WildPrefix, period_visit_bound, verify_checkpoint_bounds
from .symbolic import (
    TMC,
    CylinderSpec,
    PeriodicWord,
    Word,
    all_cylinders,
    as_word,
    enumerate_periodic_words,
    subcylinders,
)

DIRECTIONS = ("exact", "lower_bound", "upper_bound")


@dataclass(frozen=True)
class TauEstimate:
    """Finite-horizon estimate of one cylinder's limsup visit frequency."""

    value: Fraction
    horizon: int
    exact: bool


@dataclass(frozen=True)
class EtaEstimate:
    """A measure value for one target, with its provenance direction."""

    target: str
    value: Fraction | float
    direction: str
    generation: int | None = None
    horizon: int | None = None
    note: str = ""

    def __post_init__(self) -> None:
        if self.direction not in DIRECTIONS:
            raise InputError(f"direction must be one of {DIRECTIONS}")

    def to_json_dict(self) -> dict:
        value = self.value
        return {
            "target": self.target,
            "value": str(value) if isinstance(value, Fraction) else float(value),
            "direction": self.direction,
            "generation": self.generation,
            "horizon": self.horizon,
            "note": self.note,
        }


@dataclass(frozen=True, eq=False)
class PremeasureTable:
    """Per-cylinder frequency estimates at one generation.

    ``entries`` maps every admissible generation-``generation`` base
    word to a :class:`TauEstimate`.  At any single horizon the entries
    of a disjoint partition sum exactly to the partitioned cylinder's
    frequency; the stored values are tail sups over sampled horizons,
    which can only overshoot that identity.
    """

    generation: int
    tmc: TMC
    entries: dict
    horizon: int
    burn_in: int

    def tau(self, base: Word) -> TauEstimate:
        key = as_word(base)
        if len(key) != self.generation:
            raise PreconditionError(
                f"table holds generation {self.generation}, asked for {key}"
            )
        try:
            return self.entries[key]
        except KeyError:
            raise InputError(f"{key} is not an admissible cylinder here") from None


def build_premeasure_table(
    orbit,
    tmc: TMC,
    generation: int,
    horizon: int,
    burn_in: int | None = None,
    gamma: float = 1.1,
) -> PremeasureTable:
    """Tail-sup frequency estimates for every generation-``g`` cylinder."""
    if burn_in is None:
        burn_in = max(1, horizon // 8)
    horizons = geometric_horizons(burn_in, horizon, gamma)
    entries = {}
    for cyl in all_cylinders(tmc, generation):
        trace = frequency_trace(orbit, cyl, horizons)
        sup = max(trace.values_from(burn_in))
        if not isinstance(sup, Fraction):
            sup = Fraction(sup).limit_denominator(10**12)  # pragma: no cover
        entries[cyl.base] = TauEstimate(value=sup, horizon=horizon, exact=False)
    return PremeasureTable(generation, tmc, entries, horizon, burn_in)


def periodic_premeasure_table(
    pword: PeriodicWord, tmc: TMC, generation: int
) -> PremeasureTable:
    """Exact limit frequencies for the periodic orbit of ``pword``."""
    q = pword.minimal_period
    entries = {}
    for cyl in all_cylinders(tmc, generation):
        hits = sum(1 for i in range(q) if pword.in_cylinder(cyl.base, phase=i))
        entries[cyl.base] = TauEstimate(Fraction(hits, q), horizon=0, exact=True)
    return PremeasureTable(generation, tmc, entries, horizon=0, burn_in=0)


def nu_g(table: PremeasureTable, target, generation: int | None = None) -> EtaEstimate:
    """Cheapest-cover value of the target at the table's generation.

    Computed as the sum of the table's estimates over the generation-
    ``g`` subcylinder partition of the target; monotone nondecreasing in
    ``g`` for a fixed target.
    """
    g = table.generation if generation is None else generation
    if g != table.generation:
        raise PreconditionError(
            f"table generation {table.generation} does not match requested {g}"
        )
    cyls = [target] if isinstance(target, CylinderSpec) else list(target)
    total = Fraction(0)
    seen: set[Word] = set()
    for cyl in cyls:
        if cyl.generation > g:
            raise PreconditionError(
                f"target generation {cyl.generation} exceeds table generation {g}"
            )
        for sub in subcylinders(cyl, g, table.tmc):
            if sub.base in seen:
                raise StructuralError("target cylinders overlap")
            seen.add(sub.base)
            total += table.tau(sub.base).value
    exact = all(e.exact for e in table.entries.values())
    label = "+".join(c.label() for c in cyls)
    return EtaEstimate(
        target=label,
        value=total,
        direction="exact" if exact else "lower_bound",
        generation=g,
        horizon=table.horizon,
        note="partition-sum cover value",
    )


def eventually_periodic_orbit(preperiod: Word, pword: PeriodicWord, length: int) -> np.ndarray:
    """Materialize preperiod then periodic repetition, ``length`` symbols."""
    q = pword.minimal_period
    tail = length - len(preperiod)
    if tail < 0:
        raise PreconditionError("length shorter than the preperiod")
    reps = -(-tail // q) if tail else 0
    return np.concatenate(
        [
            np.asarray(preperiod, dtype=np.int64),
            np.tile(np.asarray(pword.word, dtype=np.int64), reps)[:tail],
        ]
    )


def eta_eventually_periodic(pword: PeriodicWord, target, preperiod: Sequence[int] = ()) -> EtaEstimate:
    """Exact measure of a cylinder union for an eventually periodic orbit.

    The preperiod is irrelevant in the limit: the measure is the uniform
    measure on the periodic cycle, ``(1/pi) * #{i < pi : shifted cycle
    in target}``.
    """
    q = pword.minimal_period
    cyls = [target] if isinstance(target, CylinderSpec) else list(target)
    bases = [c.base if isinstance(c, CylinderSpec) else as_word(c) for c in cyls]
    hits = sum(
        1 for i in range(q) if any(pword.in_cylinder(b, phase=i) for b in bases)
    )
    label = "+".join(CylinderSpec(b).label() for b in bases)
    return EtaEstimate(
        target=label,
        value=Fraction(hits, q),
        direction="exact",
        generation=max(len(b) for b in bases),
        horizon=None,
        note=f"uniform measure on the period-{q} cycle",
    )


@dataclass(frozen=True)
class PackingLevel:
    period: int
    orbits_found: int
    per_orbit_bound: Fraction
    level_mass: Fraction
    spot_checked: int


@dataclass(frozen=True)
class PackingBound:
    """Disjoint-cylinder mass accounting inside a host cylinder.

    ``value`` is a certified-lower-bound style sum; ``exceeds(M)``
    reports divergence to level ``M``.
    """

    host: str
    levels: tuple[PackingLevel, ...]
    value: Fraction
    horizon: int | None
    note: str

    def exceeds(self, threshold: float) -> bool:
        return self.value > threshold

    def to_json_dict(self) -> dict:
        return {
            "host": self.host,
            "value": str(self.value),
            "levels": [
                {
                    "period": l.period,
                    "orbits_found": l.orbits_found,
                    "per_orbit_bound": str(l.per_orbit_bound),
                    "level_mass": str(l.level_mass),
                    "spot_checked": l.spot_checked,
                }
                for l in self.levels
            ],
            "horizon": self.horizon,
            "note": self.note,
        }


def _orbits_meeting(tmc: TMC, q: int, host: CylinderSpec) -> list[PeriodicWord]:
    """Distinct period-``q`` orbits whose cycle meets the host cylinder."""
    found = []
    for p in enumerate_periodic_words(tmc, q):
        if any(p.in_cylinder(host.base, phase=i) for i in range(q)):
            found.append(p)
    return found


def eta_packing_lower_bound(
    source,
    host: CylinderSpec,
    periods: Sequence[int],
    tmc: TMC,
    horizon: int | None = None,
    spot_check_limit: int = 8,
) -> PackingBound:
    """Mass lower bound for the host cylinder from periodic-orbit packing.

    For each supplied period ``q``, the distinct period-``q`` orbits
    meeting the host carry pairwise disjoint generation-``q`` cylinders.
    Along an oscillating prefix every such orbit is revisited at
    arbitrarily long copying runs, so each contributes the doubling-
    window level ``1/(4 q)``; the contributions add across orbits and
    levels, and the orbit count per level grows exponentially.  For a
    plain orbit the contribution is instead capped by the empirically
    observed tail-sup frequency of the orbit's cylinder (zero when the
    orbit never returns), keeping the value an honest lower bound.

    ``source`` is a :class:`~orbitmeter.orbit.WildPrefix` or a plain
    symbol array; the value is monotone nondecreasing in the set of
    periods supplied.
    """
    if not periods:
        raise PreconditionError("need at least one period level")
    if len(set(periods)) != len(periods):
        raise InputError("period levels must be distinct")

    is_wild = isinstance(source, WildPrefix)
    orbit_arr = None if is_wild else np.asarray(source, dtype=np.int64)
    levels = []
    total = Fraction(0)
    for q in sorted(periods):
        orbits = _orbits_meeting(tmc, q, host)
        bound = period_visit_bound(q)
        level_mass = Fraction(0)
        spot_checked = 0
        for p in orbits:
            if is_wild:
                contribution = bound
                if spot_checked < spot_check_limit:
                    index = _enumeration_index(source, p)
                    if index is not None:
                        report = verify_checkpoint_bounds(source, index, m=min(q, 3))
                        if not report.vacuous:
                            spot_checked += 1
                            if not report.certified:
                                raise StructuralError(
                                    f"checkpoint certificate failed for orbit {p.word}"
                                )
            else:
                contribution = min(
                    bound, _empirical_orbit_tail(orbit_arr, p, host.base, horizon)
                )
            level_mass += contribution
        levels.append(
            PackingLevel(
                period=q,
                orbits_found=len(orbits),
                per_orbit_bound=bound,
                level_mass=level_mass,
                spot_checked=spot_checked,
            )
        )
        total += level_mass
    note = (
        "per-orbit doubling-window bounds certified by the checkpoint schedule"
        if is_wild
        else "per-orbit bounds capped by empirical tail-sup frequencies"
    )
    return PackingBound(
        host=host.label(), levels=tuple(levels), value=total, horizon=horizon, note=note
    )


def _enumeration_index(prefix: WildPrefix, p: PeriodicWord) -> int | None:
    for i, q in enumerate(prefix.periodic_words, start=1):
        if q.word == p.word:
            return i
    return None


def _empirical_orbit_tail(
    orbit: np.ndarray, p: PeriodicWord, host_base: Word, horizon: int | None
) -> Fraction:
    """Best observed tail-sup frequency among the orbit's cylinders that
    lie inside the host (one cylinder per in-host phase)."""
    q = p.minimal_period
    g = max(q, len(host_base))
    n_max = (horizon or len(orbit)) - g
    if n_max < 4:
        return Fraction(0)
    burn = max(1, n_max // 8)
    horizons = geometric_horizons(burn, n_max)
    best = Fraction(0)
    for i in range(q):
        if not p.in_cylinder(host_base, phase=i):
            continue
        base = tuple(p.symbol_at(i + j) for j in range(g))
        trace = frequency_trace(orbit, CylinderSpec(base), horizons)
        tail = trace.values_from(burn)
        if tail:
            best = max(best, max(tail))
    return best


@dataclass(frozen=True)
class ConvergenceVerdict:
    """Finite-horizon verdict on whether the orbit's averages settle.

    ``probability`` when every tracked average has tail amplitude at
    most ``tol`` (the finite surrogate of the measure having unit total
    mass, equivalently of all averages converging); ``historic`` when
    some amplitude at least ``3 * tol`` already present at half the
    horizon persists at the full horizon; ``undetermined`` otherwise.
    """

    verdict: str
    tol: float
    burn_in: int
    horizon: int
    amplitudes: dict

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "tol": self.tol,
            "burn_in": self.burn_in,
            "horizon": self.horizon,
            "amplitudes": {k: float(v) for k, v in self.amplitudes.items()},
        }


def verdict_from_traces(
    traces: Sequence[FrequencyTrace],
    tol: float,
    burn_in: int,
    min_burn_in: int = 8,
) -> ConvergenceVerdict:
    """Core verdict logic on pre-computed traces."""
    horizon = max(t.horizon for t in traces)
    if burn_in < min_burn_in or horizon < 2 * burn_in:
        return ConvergenceVerdict("undetermined", tol, burn_in, horizon, {})
    amplitudes = {}
    persistent = False
    for t in traces:
        tail = [(n, v) for n, v in t.points if n >= burn_in]
        if not tail:
            return ConvergenceVerdict("undetermined", tol, burn_in, horizon, {})
        values = [float(v) for _, v in tail]
        amp = max(values) - min(values)
        amplitudes[t.target] = amp
        half = [float(v) for n, v in tail if n <= t.horizon // 2]
        if len(half) >= 2:
            amp_half = max(half) - min(half)
            if amp >= 3 * tol and amp_half >= 3 * tol:
                persistent = True
    if all(a <= tol for a in amplitudes.values()):
        return ConvergenceVerdict("probability", tol, burn_in, horizon, amplitudes)
    if persistent:
        return ConvergenceVerdict("historic", tol, burn_in, horizon, amplitudes)
    return ConvergenceVerdict("undetermined", tol, burn_in, horizon, amplitudes)


def probability_verdict(
    orbit,
    tmc: TMC,
    horizon: int,
    tol: float,
    generation: int = 1,
    burn_in: int | None = None,
    gamma: float = 1.1,
) -> ConvergenceVerdict:
    """Verdict from the generation-``g`` cylinder partition frequencies."""
    if burn_in is None:
        burn_in = max(1, horizon // 8)
    if horizon < 2 * burn_in or burn_in < 8:
        return ConvergenceVerdict("undetermined", tol, burn_in, horizon, {})
    horizons = geometric_horizons(burn_in, horizon, gamma)
    traces = [
        frequency_trace(orbit, cyl, horizons, label=cyl.label())
        for cyl in all_cylinders(tmc, generation)
    ]
    return verdict_from_traces(traces, tol, burn_in)


@dataclass(frozen=True)
class TotalMassReport:
    """Tail-sup frequency mass summed over a disjoint covering partition."""

    cells: tuple[tuple[str, float], ...]
    estimate: EtaEstimate

    @property
    def total(self) -> float:
        return float(self.estimate.value)


def total_mass_from_traces(traces: Sequence[FrequencyTrace], burn_in: int) -> TotalMassReport:
    cells = []
    total = Fraction(0)
    exact = True
    for t in traces:
        tail = t.values_from(burn_in)
        if not tail:
            raise PreconditionError(f"trace {t.target} has no tail past {burn_in}")
        sup = max(tail)
        if not isinstance(sup, Fraction):
            exact = False
            sup = Fraction(float(sup)).limit_denominator(10**12)
        cells.append((t.target, float(sup)))
        total += sup
    estimate = EtaEstimate(
        target="whole space",
        value=total if exact else float(total),
        direction="lower_bound",
        generation=None,
        horizon=max(t.horizon for t in traces),
        note="sum of per-cell tail-sup frequencies over a covering partition",
    )
    return TotalMassReport(tuple(cells), estimate)


def total_mass_partition(
    orbit,
    tmc: TMC,
    horizon: int,
    generation: int = 1,
    burn_in: int | None = None,
    gamma: float = 1.1,
) -> TotalMassReport:
    """Whole-space mass lower bound from the generation-``g`` partition."""
    if burn_in is None:
        burn_in = max(1, horizon // 8)
    horizons = geometric_horizons(burn_in, horizon, gamma)
    traces = [
        frequency_trace(orbit, cyl, horizons, label=cyl.label())
        for cyl in all_cylinders(tmc, generation)
    ]
    return total_mass_from_traces(traces, burn_in)


@dataclass(frozen=True)
class TauEtaComparison:
    target: str
    tau_hat: float
    eta_hat: float
    direction: str
    within_tol: bool


def compare_tau_eta(
    orbit,
    targets: Sequence[CylinderSpec],
    tmc: TMC,
    horizon: int,
    table_generation: int | None = None,
    burn_in: int | None = None,
    tol: float = 1e-9,
) -> list[TauEtaComparison]:
    """Check ``tau(target) <= eta(target) + tol`` on clopen targets.

    Cylinders are simultaneously closed and open, so the closure/interior
    comparison directions collapse; with exact periodic tables the two
    sides agree outright.  The cover side is evaluated at a common
    refinement generation of all targets.
    """
    if burn_in is None:
        burn_in = max(1, horizon // 8)
    g = table_generation or max(t.generation for t in targets)
    if any(t.generation > g for t in targets):
        raise PreconditionError("table generation must refine every target")
    table = build_premeasure_table(orbit, tmc, g, horizon, burn_in)
    horizons = geometric_horizons(burn_in, horizon)
    rows = []
    for target in targets:
        trace = frequency_trace(orbit, target, horizons)
        tau_hat = max(trace.values_from(burn_in))
        eta_est = nu_g(table, target)
        rows.append(
            TauEtaComparison(
                target=target.label(),
                tau_hat=float(tau_hat),
                eta_hat=float(eta_est.value),
                direction=eta_est.direction,
                within_tol=float(tau_hat) <= float(eta_est.value) + tol,
            )
        )
    return rows
