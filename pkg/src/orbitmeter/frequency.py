"""Birkhoff sums and empirical visit frequencies along finite orbit prefixes.

The running frequency of a target set ``A`` along an orbit ``x`` is

    S_n(x, A) = (1/n) * #{0 <= j < n : shift^j(x) in A},

an exact rational at desk scale.  Its limsup over ``n`` defines the
visit-frequency premeasure of the orbit; with only a finite prefix in
hand we report tail sup/inf past a burn-in, evaluated on a geometric
grid of horizons (oscillation in every model treated here happens on
geometric time scales).  The tail sup over-estimates the limsup and the
tail inf under-estimates the liminf for monotone-tail traces; verdicts
built on them always carry the burn-in and horizon used.

Frequencies are exact :class:`fractions.Fraction` values up to horizon
2**40 and floats beyond.  Traces are immutable after construction, so
concurrent readers need no locking.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError, PreconditionError, StructuralError
from .symbolic import TMC, CylinderSpec, PeriodicWord, Word, all_cylinders, as_word

EXACT_HORIZON_CAP = 2**40


def as_frequency(count: int, n: int) -> Fraction | float:
    """Exact rational count/n below the exactness cap, float beyond."""
    if n <= EXACT_HORIZON_CAP:
        return Fraction(int(count), int(n))
    return count / n  # pragma: no cover - beyond desk scale


def as_orbit(symbols: Sequence[int] | np.ndarray) -> np.ndarray:
    """Normalize an orbit prefix to a 1-d integer array."""
    arr = np.asarray(symbols)
    if arr.ndim != 1:
        raise InputError("orbit must be one-dimensional")
    return arr.astype(np.int64, copy=False)


def target_bases(target) -> list[Word]:
    """A target is a cylinder, a list of cylinders, or a list of base words."""
    if isinstance(target, CylinderSpec):
        return [target.base]
    bases = []
    for item in target:
        bases.append(item.base if isinstance(item, CylinderSpec) else as_word(item))
    if not bases:
        raise InputError("empty target")
    return bases


def cylinder_mask(orbit: np.ndarray, base: Word) -> np.ndarray:
    """Boolean mask over offsets j with orbit[j : j+m] == base
    (length ``len(orbit) - m + 1``)."""
    m = len(base)
    n = len(orbit) - m + 1
    if n <= 0:
        raise PreconditionError(
            f"orbit of length {len(orbit)} too short for generation {m}"
        )
    mask = np.ones(n, dtype=bool)
    for i, symbol in enumerate(base):
        mask &= orbit[i : i + n] == symbol
    return mask


def membership_mask(orbit: np.ndarray, target) -> np.ndarray:
    """Mask over offsets for a union of cylinders, trimmed to the coarsest
    common offset range."""
    bases = target_bases(target)
    max_m = max(len(b) for b in bases)
    n = len(orbit) - max_m + 1
    if n <= 0:
        raise PreconditionError("orbit too short for the target generation")
    mask = np.zeros(n, dtype=bool)
    for base in bases:
        mask |= cylinder_mask(orbit, base)[:n]
    return mask


def visit_frequency(orbit, target, n: int) -> Fraction | float:
    """Exact empirical frequency ``S_n(orbit, target)``.

    Requires the orbit prefix to be at least ``n + generation - 1``
    symbols long so every counted window is fully visible.
    """
    arr = as_orbit(orbit)
    bases = target_bases(target)
    max_m = max(len(b) for b in bases)
    if n < 1:
        raise PreconditionError("horizon must be >= 1")
    if len(arr) < n + max_m - 1:
        raise PreconditionError(
            f"orbit prefix of length {len(arr)} cannot support horizon {n} "
            f"at generation {max_m}"
        )
    mask = membership_mask(arr, bases)
    return as_frequency(int(mask[:n].sum()), n)


@dataclass(frozen=True, eq=False)
class FrequencyTrace:
    """Sampled running averages ``n -> S_n`` for one target along one orbit.

    Horizons are strictly increasing; for frequency traces every value
    lies in [0, 1] and consecutive points differ by at most one
    indicator hit: ``|S_{n+1} (n+1) - S_n n| <= 1``.
    """

    points: tuple[tuple[int, Fraction | float], ...]
    target: str
    orbit_id: str

    def __post_init__(self) -> None:
        ns = [n for n, _ in self.points]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise InputError("trace horizons must be strictly increasing")

    @property
    def horizon(self) -> int:
        return self.points[-1][0]

    def values_from(self, burn_in: int) -> list[Fraction | float]:
        return [v for n, v in self.points if n >= burn_in]


@dataclass(frozen=True)
class OscillationReport:
    """Tail sup/inf of a trace past a burn-in; the finite-horizon
    surrogate for the limsup/liminf pair."""

    sup_tail: float
    inf_tail: float
    burn_in: int
    horizon: int

    def __post_init__(self) -> None:
        if self.inf_tail > self.sup_tail:
            raise InputError("tail inf exceeds tail sup")

    @property
    def amplitude(self) -> float:
        return self.sup_tail - self.inf_tail

    def to_json_dict(self) -> dict:
        return {
            "sup_tail": float(self.sup_tail),
            "inf_tail": float(self.inf_tail),
            "burn_in": self.burn_in,
            "horizon": self.horizon,
            "amplitude": float(self.amplitude),
        }


def geometric_horizons(n_min: int, n_max: int, gamma: float = 1.1) -> list[int]:
    """Increasing horizons n_min, ceil(gamma*n_min), ... capped at n_max."""
    if n_min < 1 or n_max < n_min:
        raise PreconditionError("need 1 <= n_min <= n_max")
    if gamma <= 1.0:
        raise InputError("gamma must exceed 1")
    out = [n_min]
    while out[-1] < n_max:
        out.append(min(int(np.ceil(out[-1] * gamma)), n_max))
    return out


def frequency_trace(
    orbit,
    target,
    horizons: Sequence[int],
    orbit_id: str = "orbit",
    label: str | None = None,
) -> FrequencyTrace:
    """Visit-frequency trace sampled at the given horizons (exact rationals)."""
    arr = as_orbit(orbit)
    bases = target_bases(target)
    mask = membership_mask(arr, bases)
    counts = np.cumsum(mask, dtype=np.int64)
    pts = []
    for n in horizons:
        if n < 1 or n > len(mask):
            raise PreconditionError(f"horizon {n} outside the supported range")
        pts.append((int(n), as_frequency(int(counts[n - 1]), int(n))))
    if label is None:
        label = "+".join(CylinderSpec(b).label() for b in bases)
    return FrequencyTrace(tuple(pts), label, orbit_id)


def value_trace(
    values: Sequence[float] | np.ndarray,
    horizons: Sequence[int],
    orbit_id: str = "orbit",
    label: str = "observable",
) -> FrequencyTrace:
    """Running-average trace of a per-step value sequence.

    Integer-valued inputs keep exact rational averages; float inputs are
    averaged in float64.
    """
    arr = np.asarray(values)
    exact = np.issubdtype(arr.dtype, np.integer) or np.issubdtype(arr.dtype, np.bool_)
    sums = np.cumsum(arr.astype(np.int64) if exact else arr.astype(np.float64))
    pts = []
    for n in horizons:
        if n < 1 or n > len(arr):
            raise PreconditionError(f"horizon {n} outside the value range")
        total = sums[n - 1]
        pts.append((int(n), as_frequency(int(total), int(n)) if exact else total / n))
    return FrequencyTrace(tuple(pts), label, orbit_id)


def running_extremes(trace: FrequencyTrace, burn_in: int) -> OscillationReport:
    """Tail sup/inf of the trace over horizons >= burn_in."""
    tail = trace.values_from(burn_in)
    if not tail:
        raise PreconditionError(
            f"no trace points at or beyond burn-in {burn_in} "
            f"(trace ends at {trace.horizon})"
        )
    return OscillationReport(
        sup_tail=float(max(tail)),
        inf_tail=float(min(tail)),
        burn_in=burn_in,
        horizon=trace.horizon,
    )


class Observable:
    """A desk-scale observable: a per-symbol value table or a cylinder-union
    indicator scaled to ``value_in``/``value_out``."""

    def __init__(self, step_fn, orbit_average_fn, label: str):
        self._step_fn = step_fn
        self._orbit_average_fn = orbit_average_fn
        self.label = label

    @classmethod
    def symbol_table(cls, table: Mapping[int, float], label: str = "phi") -> "Observable":
        values = dict(table)

        def step(orbit: np.ndarray) -> np.ndarray:
            missing = set(np.unique(orbit)) - set(values)
            if missing:
                raise InputError(f"orbit symbols {sorted(missing)} not in the table")
            lookup = np.zeros(max(values) + 1, dtype=np.float64)
            for k, v in values.items():
                lookup[k] = v
            return lookup[orbit]

        def orbit_avg(p: PeriodicWord) -> Fraction | float:
            return sum(values[s] for s in p.word) / p.minimal_period

        return cls(step, orbit_avg, label)

    @classmethod
    def indicator(cls, target, value_in=1, value_out=0, label: str | None = None) -> "Observable":
        bases = target_bases(target)
        if label is None:
            label = "+".join(CylinderSpec(b).label() for b in bases)

        def step(orbit: np.ndarray) -> np.ndarray:
            mask = membership_mask(orbit, bases)
            return np.where(mask, value_in, value_out)

        def orbit_avg(p: PeriodicWord) -> Fraction | float:
            q = p.minimal_period
            hits = sum(
                1 for i in range(q) if any(p.in_cylinder(b, phase=i) for b in bases)
            )
            return (hits * value_in + (q - hits) * value_out) / Fraction(q)

        return cls(step, orbit_avg, label)

    def step_values(self, orbit) -> np.ndarray:
        return self._step_fn(as_orbit(orbit))

    def periodic_orbit_average(self, p: PeriodicWord) -> Fraction | float:
        return self._orbit_average_fn(p)


def time_average_trace(
    orbit,
    observable: Observable,
    horizons: Sequence[int],
    orbit_id: str = "orbit",
) -> FrequencyTrace:
    """Running time averages of an observable along the orbit."""
    values = observable.step_values(orbit)
    return value_trace(values, horizons, orbit_id=orbit_id, label=observable.label)


def is_periodically_trivial(
    observable: Observable, periodic_words: Sequence[PeriodicWord], tol: float = 0.0
) -> bool:
    """Whether the observable has the same time average over every listed
    periodic orbit (within ``tol``).  Exactly these observables have
    convergent averages along maximally oscillating orbits."""
    if not periodic_words:
        raise PreconditionError("need at least one periodic word")
    averages = [observable.periodic_orbit_average(p) for p in periodic_words]
    lo, hi = min(averages), max(averages)
    return float(hi - lo) <= tol


def digit_block_frequency(seq, block: Sequence[int], ell: int) -> Fraction:
    """Frequency of a length-``h`` block among the first ``ell`` symbols:
    ``(1/ell) * #{0 <= j <= ell - h - 1 : seq[j : j+h] == block}``."""
    arr = as_orbit(seq)
    b = as_word(block)
    h = len(b)
    if ell < h:
        raise PreconditionError(f"horizon {ell} shorter than block length {h}")
    if len(arr) < ell:
        raise PreconditionError("sequence shorter than the requested horizon")
    mask = cylinder_mask(arr[:ell], b)
    count = int(mask[: max(ell - h, 0)].sum())
    return Fraction(count, ell)


@dataclass(frozen=True)
class SuspensionBound:
    """Continuous-time vs rescaled discrete-time frequency under a
    piecewise-constant suspension with bounded roof."""

    continuous_fraction: float
    discrete_bound: float
    edge_term: float
    hits: int

    @property
    def holds(self) -> bool:
        return self.continuous_fraction >= self.discrete_bound - self.edge_term


def suspension_frequency_bound(
    orbit,
    target,
    roof: Mapping[int, float],
    interval_mass: float,
    total_time: float,
) -> SuspensionBound:
    """Compare time fraction in ``target x [0, L)`` under the suspension flow
    against ``(L / r1) * S_n(target)`` at the matching hitting count.

    The roof assigns each symbol a duration in ``[r0, r1]`` with
    ``r0 > 0``; the suspension spends ``roof(s)`` time units over each
    visited symbol ``s``, of which ``min(L, roof(s))`` lie in the
    interval fiber.  The discrete bound can exceed the continuous
    fraction by at most one partial fiber, i.e. ``r1 / T``.
    """
    arr = as_orbit(orbit)
    durations = np.array([float(roof[int(s)]) for s in arr])
    if (durations <= 0).any():
        raise InputError("roof durations must be positive")
    r1 = float(max(roof.values()))
    r0 = float(min(roof.values()))
    if interval_mass <= 0 or interval_mass > r0:
        raise InputError("interval mass must lie in (0, min roof]")
    if total_time <= 0:
        raise PreconditionError("total time must be positive")

    mask = membership_mask(arr, target)
    times = np.concatenate([[0.0], np.cumsum(durations)])
    if times[-1] < total_time:
        raise PreconditionError("orbit prefix too short to cover the time horizon")
    hits = int(np.searchsorted(times, total_time, side="right") - 1)

    inside = 0.0
    for j in range(hits + 1):
        if j >= len(mask):
            break
        start = times[j]
        if start >= total_time:
            break
        visible = min(times[j + 1], total_time) - start
        if mask[j]:
            inside += min(interval_mass, visible)
    lhs = inside / total_time

    full_hits = max(hits, 1)
    freq = float(visit_frequency(arr, target, min(full_hits, len(mask))))
    rhs = (interval_mass / r1) * freq
    return SuspensionBound(lhs, rhs, r1 / total_time, hits)


def block_schedule_indicator(k_max: int, base: int = 10) -> tuple[np.ndarray, list[int]]:
    """Indicator of iterates in the union of alternating index blocks.

    With checkpoints ``n_k = sum_{i<=k} base**i``, the indicator marks
    iterates ``j`` in ``[n_1, n_2] u [n_3, n_4] u ...``.  Its running
    frequency at ``n_k`` is at least ``(base-1)/base`` for even ``k >= 2``
    and at most ``1/base`` for odd ``k``.  Returns the indicator over
    iterates ``1..n_k_max`` (entry ``j-1`` is iterate ``j``) and the
    checkpoint list ``[n_1, ..., n_k_max]``.
    """
    if k_max < 1:
        raise PreconditionError("need k_max >= 1")
    if base < 2:
        raise InputError("base must be >= 2")
    checkpoints = []
    total = 1  # n_0
    for k in range(1, k_max + 1):
        total += base**k
        checkpoints.append(total)
    indicator = np.zeros(checkpoints[-1], dtype=np.int64)
    i = 0
    while 2 * i + 1 <= k_max:
        lo = checkpoints[2 * i] - 1  # iterate n_{2i+1}, 0-based
        hi = checkpoints[2 * i + 1] if 2 * i + 2 <= k_max else checkpoints[-1]
        indicator[lo:hi] = 1
        i += 1
    return indicator, checkpoints


TRACE_CSV_HEADER = ["n", "value", "target", "orbit_id"]


def _format_value(v, exact: bool) -> str:
    if exact and isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return format(float(v), ".17g")


def write_trace_csv(path, traces: Iterable[FrequencyTrace], exact: bool = False) -> None:
    """One row per sampled horizon: n,value,target,orbit_id."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_CSV_HEADER)
        for trace in traces:
            for n, v in trace.points:
                writer.writerow([n, _format_value(v, exact), trace.target, trace.orbit_id])


def read_trace_csv(path) -> list[FrequencyTrace]:
    """Inverse of :func:`write_trace_csv`; rejects files without the schema."""
    grouped: dict[tuple[str, str], list[tuple[int, float | Fraction]]] = {}
    order: list[tuple[str, str]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_CSV_HEADER:
            raise InputError(f"not a trace CSV (header {header!r})")
        for row in reader:
            if len(row) != 4:
                raise InputError(f"malformed trace row {row!r}")
            n, raw, target, orbit_id = row
            value = Fraction(raw) if "/" in raw else float(raw)
            key = (target, orbit_id)
            if key not in grouped:
                grouped[key] = []
                order.append(key)
            grouped[key].append((int(n), value))
    return [
        FrequencyTrace(tuple(grouped[key]), key[0], key[1]) for key in order
    ]


def partition_cells(tmc: TMC, generation: int) -> list[tuple[str, list[Word]]]:
    """The canonical generation-``g`` cylinder partition as labelled cells."""
    cells = [(c.label(), [c.base]) for c in all_cylinders(tmc, generation)]
    return cells


def check_partition(tmc: TMC, cells: Sequence[tuple[str, Sequence]]) -> None:
    """Cells must be pairwise disjoint cylinder unions covering the space."""
    seen: dict[Word, str] = {}
    generations = set()
    for label, targets in cells:
        for base in target_bases(list(targets)):
            generations.add(len(base))
            if base in seen:
                raise StructuralError(
                    f"cell {label!r} repeats cylinder {base} of cell {seen[base]!r}"
                )
            seen[base] = label
    if len(generations) != 1:
        raise StructuralError("partition cells must share one generation")
    g = generations.pop()
    expected = {c.base for c in all_cylinders(tmc, g)}
    got = set(seen)
    if got - expected:
        raise StructuralError("partition contains inadmissible cylinders")
    if expected - got:
        raise StructuralError("partition does not cover the space")
