"""Construction of orbit prefixes with certified wild oscillation.

The builder concatenates longer and longer runs of periodic words.  Run
``n`` starts at position ``l_n``, where the lengths satisfy

    l_1 = N   and   l_{n+1} = G_n * (l_1 + ... + l_n),

with ``N`` the aperiodicity index of the chain and every multiplier
``G_n >= 2``, so each run dominates the whole past.  Which periodic
word gets copied is steered by the triangular-block index sequence

    kappa = 1, 1, 2, 1, 2, 3, 1, 2, 3, 4, ...

which revisits every index infinitely often; run ``n`` copies the
``kappa_n``-th periodic word (period-then-lexicographic enumeration)
from phase 0, so the shifted prefix at position ``l_n`` agrees with
that word on at least ``l_n`` symbols.  Consequently the window
``[l_n, 2 l_n]`` visits the cylinder of the copied word along an
arithmetic progression with step its period ``pi``, which pins the
running frequency at horizon ``2 l_n`` above ``l_n / ((2 l_n + 1) 2 pi)``
and the peak frequency above ``1/(4 pi)`` - for every periodic target,
at infinitely many scales.  That is the oscillation certificate
:func:`verify_checkpoint_bounds` checks on the finite prefix.

Short connector words (at most ``N`` symbols, lexicographically least)
splice consecutive runs admissibly.  Rebuilding with the same inputs is
bit-identical; schedule values use Python integers throughout, so there
is no overflow at any growth rate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import InputError, PreconditionError, StructuralError
from .frequency import cylinder_mask
from .symbolic import (
    TMC,
    PeriodicWord,
    Word,
    aperiodicity_index,
    connect,
    periodic_words_stream,
)


def alpha_index(n: int) -> int:
    """Triangular index alpha_n = n (n + 1) / 2 separating kappa blocks."""
    if n < 0:
        raise PreconditionError("alpha index needs n >= 0")
    return n * (n + 1) // 2


def kappa(n: int) -> int:
    """The n-th entry (1-based) of 1, 1, 2, 1, 2, 3, 1, 2, 3, 4, ...

    Block ``m`` (of length ``m``) occupies positions
    ``alpha_{m-1} + 1 .. alpha_m`` and counts ``1..m``, so every value
    is taken infinitely often.
    """
    if n < 1:
        raise PreconditionError("kappa is defined for n >= 1")
    m = int((np.sqrt(8 * n + 1) - 1) / 2)
    while alpha_index(m) < n:
        m += 1
    while m > 1 and alpha_index(m - 1) >= n:
        m -= 1
    return n - alpha_index(m - 1)


def kappa_prefix(count: int) -> list[int]:
    return [kappa(n) for n in range(1, count + 1)]


@dataclass(frozen=True)
class LengthSchedule:
    """The run-start positions l_n.

    ``mode`` is ``"factor"`` (constant multiplier ``factor``, default 2;
    the desk-scale choice) or ``"tenpow"`` (``G_n = 10**n``, which grows
    beyond desk scale after a handful of runs but is available for small
    ``n``).  Only ``G_n >= 2`` matters for the bounds: it keeps
    ``l_{n+1} >= 2 * sum_{i<=n} l_i``, hence each doubling window
    ``[l_n, 2 l_n]`` inside run ``n``.
    """

    N: int
    mode: str = "factor"
    factor: int = 2

    def __post_init__(self) -> None:
        if self.N < 1:
            raise InputError("aperiodicity index N must be >= 1")
        if self.mode not in ("factor", "tenpow"):
            raise InputError(f"unknown growth mode {self.mode!r}")
        if self.mode == "factor" and self.factor < 2:
            raise InputError("growth factor must be >= 2")

    def multiplier(self, n: int) -> int:
        return 10**n if self.mode == "tenpow" else self.factor

    def lengths(self, upto: int) -> list[int]:
        """l_1 .. l_upto as exact integers."""
        if upto < 1:
            raise PreconditionError("need upto >= 1")
        out = [self.N]
        total = self.N
        for n in range(1, upto):
            nxt = self.multiplier(n) * total
            out.append(nxt)
            total += nxt
        return out

    def length(self, n: int) -> int:
        return self.lengths(n)[-1]

    def validate(self, upto: int = 12) -> None:
        """Check the monotonicity and dominance invariants on a prefix."""
        ls = self.lengths(upto)
        total = 0
        for i, l in enumerate(ls):
            if i > 0:
                if l <= ls[i - 1]:
                    raise StructuralError("schedule not strictly increasing")
                if l < 2 * total:
                    raise StructuralError("schedule lost dominance over the past sum")
                if l - ls[i - 1] < self.N:
                    raise StructuralError("schedule gap below the aperiodicity index")
            total += l

    def to_json_dict(self) -> dict:
        return {"N": self.N, "mode": self.mode, "factor": self.factor}

    @classmethod
    def from_json_dict(cls, data: dict) -> "LengthSchedule":
        return cls(int(data["N"]), data.get("mode", "factor"), int(data.get("factor", 2)))


@dataclass(frozen=True)
class Checkpoint:
    n: int
    ell: int
    kappa: int
    p_index: int  # 1-based index into the periodic enumeration (== kappa)


@dataclass(frozen=True, eq=False)
class WildPrefix:
    """A finite admissible prefix of the oscillating construction, plus
    the checkpoint records needed to audit it."""

    word: np.ndarray
    checkpoints: tuple[Checkpoint, ...]
    tmc: TMC
    schedule: LengthSchedule
    periodic_words: tuple[PeriodicWord, ...]

    def __len__(self) -> int:
        return len(self.word)

    def periodic_word(self, index: int) -> PeriodicWord:
        """1-based lookup into the periodic enumeration; indices beyond the
        builder's materialized list are recomputed deterministically."""
        if index < 1:
            raise PreconditionError("periodic word indices are 1-based")
        if index <= len(self.periodic_words):
            return self.periodic_words[index - 1]
        from .symbolic import periodic_words_upto

        return periodic_words_upto(self.tmc, index)[index - 1]


def build_wild_prefix(tmc: TMC, schedule: LengthSchedule, horizon: int) -> WildPrefix:
    """Build the oscillating prefix out to at least ``horizon`` symbols.

    Every run is materialized in full up to the run containing the
    horizon, which is truncated at ``max(horizon, 3 * l_last)`` so the
    final checkpoint window stays auditable.  Raises
    :class:`StructuralError` if the chain is not aperiodic at the
    schedule's index, or if a tight schedule leaves no room for an
    admissible connector.
    """
    n_idx = aperiodicity_index(tmc, schedule.N)
    if n_idx is None:
        raise StructuralError(
            f"incidence^N not positive for any N <= {schedule.N}; "
            "the chain is not aperiodic at the schedule's index"
        )
    if horizon < schedule.N:
        raise PreconditionError(f"horizon {horizon} below the first run start")

    # Runs n = 1 .. n_end, n_end the last with l_n <= horizon.
    lengths = [schedule.N]
    while True:
        total = sum(lengths)
        nxt = schedule.multiplier(len(lengths)) * total
        if lengths[-1] > horizon:
            break
        lengths.append(nxt)
    n_end = max(i + 1 for i, l in enumerate(lengths) if l <= horizon)
    ells = lengths[: n_end + 1]  # l_1 .. l_{n_end + 1}

    kappas = kappa_prefix(n_end)
    words: list[PeriodicWord] = []
    stream = periodic_words_stream(tmc)
    for p in stream:
        words.append(p)
        if len(words) >= max(kappas):
            break

    target_len = min(ells[n_end], max(horizon, 3 * ells[n_end - 1]))
    out = np.empty(target_len, dtype=np.int64)

    # Head [0, l_1): backward greedy fill into the first copied word.
    first = words[kappas[0] - 1].word[0]
    nxt_sym = first
    for pos in range(ells[0] - 1, -1, -1):
        for s in range(tmc.alphabet_size):
            if tmc.allows(s, nxt_sym):
                out[pos] = s
                nxt_sym = s
                break
        else:  # pragma: no cover - no dead columns by TMC invariant
            raise StructuralError("no admissible head symbol")

    checkpoints = []
    for n in range(1, n_end + 1):
        start = ells[n - 1]
        end = min(ells[n], target_len)
        p = words[kappas[n - 1] - 1]
        q = p.minimal_period
        run_len = end - start
        connector: Word = ()
        if end == ells[n] and n < n_end + 1 and ells[n] <= target_len:
            # A following run exists; reserve an admissible connector.
            nxt_word = words[kappas[n] - 1].word if n < n_end else None
            if nxt_word is not None:
                max_c = min(schedule.N, ells[n] - 2 * ells[n - 1])
                found = None
                for c in range(0, max_c + 1):
                    last = p.symbol_at(run_len - c - 1)
                    path = connect(tmc, last, nxt_word[0], c)
                    if path is not None:
                        found = (c, path)
                        break
                if found is None:
                    raise StructuralError(
                        f"no connector of length <= {max_c} between run {n} "
                        f"and run {n + 1}; increase the growth factor"
                    )
                c, path = found
                run_len = end - start - c
                connector = path
        reps = -(-run_len // q)  # ceil
        copied = np.tile(np.asarray(p.word, dtype=np.int64), reps)[:run_len]
        out[start : start + run_len] = copied
        if connector:
            out[start + run_len : start + run_len + len(connector)] = connector
        checkpoints.append(
            Checkpoint(n=n, ell=ells[n - 1], kappa=kappas[n - 1], p_index=kappas[n - 1])
        )

    return WildPrefix(
        word=out,
        checkpoints=tuple(checkpoints),
        tmc=tmc,
        schedule=schedule,
        periodic_words=tuple(words),
    )


def period_visit_bound(period: int) -> Fraction:
    """The per-orbit frequency level ``1/(4 period)`` that the doubling
    windows certify for every cylinder around a periodic word."""
    return Fraction(1, 4 * period)


@dataclass(frozen=True)
class CheckpointWindow:
    n: int
    ell: int
    window_count: int
    window_floor: int  # floor(l_n / pi)
    freq_at_double: Fraction
    freq_floor: Fraction  # l_n / ((2 l_n + 1) * 2 pi)

    @property
    def window_ok(self) -> bool:
        return self.window_count >= self.window_floor

    @property
    def freq_ok(self) -> bool:
        return self.freq_at_double >= self.freq_floor


@dataclass(frozen=True)
class CheckpointBoundReport:
    """Per-checkpoint window statistics for one periodic target, and the
    peak-frequency certificate ``max_freq >= 1/(4 pi)``."""

    h: int
    m: int
    period: int
    entries: tuple[CheckpointWindow, ...]
    vacuous: bool

    @property
    def bound(self) -> Fraction:
        return period_visit_bound(self.period)

    @property
    def max_freq(self) -> Fraction:
        return max((e.freq_at_double for e in self.entries), default=Fraction(0))

    @property
    def certified(self) -> bool:
        return (
            not self.vacuous
            and all(e.window_ok and e.freq_ok for e in self.entries)
            and self.max_freq >= self.bound
        )

    def to_json_dict(self) -> dict:
        return {
            "h": self.h,
            "m": self.m,
            "period": self.period,
            "bound": str(self.bound),
            "max_freq": str(self.max_freq),
            "vacuous": self.vacuous,
            "certified": self.certified,
            "windows": [
                {
                    "n": e.n,
                    "ell": e.ell,
                    "count": e.window_count,
                    "floor": e.window_floor,
                    "freq_at_double": str(e.freq_at_double),
                }
                for e in self.entries
            ],
        }


def verify_checkpoint_bounds(prefix: WildPrefix, h: int, m: int) -> CheckpointBoundReport:
    """Audit the doubling windows of all checkpoints copying word ``h``.

    For each checkpoint ``n`` with ``kappa_n == h``, ``l_n >= m`` and the
    window fully inside the prefix, counts visits of ``[p_h]_m`` over
    ``[l_n, 2 l_n]`` (at least ``floor(l_n / pi_h)`` by construction) and
    checks the frequency at horizon ``2 l_n + 1`` against
    ``l_n / ((2 l_n + 1) 2 pi_h)``; the report is vacuous when no
    checkpoint qualifies.
    """
    if m < 1:
        raise PreconditionError("cylinder generation m must be >= 1")
    p = prefix.periodic_word(h)
    pi = p.minimal_period
    base = p.prefix(m)
    mask = cylinder_mask(prefix.word, base)
    counts = np.cumsum(mask, dtype=np.int64)

    entries = []
    for cp in prefix.checkpoints:
        if cp.kappa != h or cp.ell < m:
            continue
        lo, hi = cp.ell, 2 * cp.ell
        if hi >= len(mask):
            continue
        window_count = int(counts[hi] - (counts[lo - 1] if lo > 0 else 0))
        total = int(counts[hi])
        entries.append(
            CheckpointWindow(
                n=cp.n,
                ell=cp.ell,
                window_count=window_count,
                window_floor=cp.ell // pi,
                freq_at_double=Fraction(total, hi + 1),
                freq_floor=Fraction(cp.ell, (2 * cp.ell + 1) * 2 * pi),
            )
        )
    return CheckpointBoundReport(
        h=h, m=m, period=pi, entries=tuple(entries), vacuous=not entries
    )


def orbit_neighborhood(p: PeriodicWord, m: int) -> list[Word]:
    """Generation-``m`` bases around every phase of the periodic orbit."""
    bases = {tuple(p.symbol_at(i + j) for j in range(m)) for i in range(p.minimal_period)}
    return sorted(bases)


def genericity_membership(
    word,
    n: int,
    periodic_list: list[PeriodicWord],
    m_n: int,
    tmc: TMC,
) -> bool:
    """Finite-horizon membership in the n-th genericity window set.

    True iff for every ``j < n`` some horizon ``k`` with
    ``n < k <= len(word) - m_n`` has the frequency of the generation-
    ``m_n`` neighborhood of orbit ``j`` at least ``1/pi_j - 1/n``.  The
    neighborhoods of the first ``n - 1`` orbits must be pairwise
    disjoint at generation ``m_n``; ``n == 1`` is vacuously true.
    """
    if n < 1:
        raise PreconditionError("need n >= 1")
    if n == 1:
        return True
    if len(periodic_list) < n - 1:
        raise PreconditionError(f"need at least {n - 1} periodic words")
    neighborhoods = [orbit_neighborhood(p, m_n) for p in periodic_list[: n - 1]]
    seen: set[Word] = set()
    for bases in neighborhoods:
        for b in bases:
            if b in seen:
                raise StructuralError(
                    f"neighborhoods not pairwise disjoint at generation {m_n}"
                )
            seen.add(b)

    arr = np.asarray(word, dtype=np.int64)
    k_max = len(arr) - m_n
    if k_max <= n:
        return False
    for j, bases in enumerate(neighborhoods):
        pi = periodic_list[j].minimal_period
        needed = Fraction(1, pi) - Fraction(1, n)
        mask = np.zeros(k_max, dtype=bool)
        for b in bases:
            mask |= cylinder_mask(arr, b)[:k_max]
        counts = np.cumsum(mask, dtype=np.int64)
        ks = np.arange(1, k_max + 1)
        # generous float prefilter, then an exact rational re-check
        ok = counts[n:] >= float(needed) * ks[n:] - 1e-9
        if not any(
            Fraction(int(counts[k - 1]), k) >= needed
            for k in ks[n:][ok].tolist()
        ):
            return False
    return True


RLE_SUFFIX = ".rle"


def save_wild_prefix(prefix: WildPrefix, path) -> tuple[Path, Path]:
    """Persist as run-length-encoded symbols plus a JSON sidecar."""
    base = Path(path)
    rle_path = base.with_suffix(RLE_SUFFIX)
    sidecar_path = base.with_suffix(".json")
    word = prefix.word
    boundaries = np.flatnonzero(np.diff(word)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [len(word)]])
    with open(rle_path, "w") as fh:
        for s, e in zip(starts, ends):
            fh.write(f"{int(word[s])} {int(e - s)}\n")
    sidecar = {
        "tmc": prefix.tmc.to_json_dict(),
        "schedule": prefix.schedule.to_json_dict(),
        "length": int(len(word)),
        "checkpoints": [
            {"n": c.n, "ell": c.ell, "kappa": c.kappa, "p_index": c.p_index}
            for c in prefix.checkpoints
        ],
        "periodic_words": [list(p.word) for p in prefix.periodic_words],
    }
    with open(sidecar_path, "w") as fh:
        json.dump(sidecar, fh, indent=1)
    return rle_path, sidecar_path


def load_wild_prefix(path) -> WildPrefix:
    base = Path(path)
    rle_path = base.with_suffix(RLE_SUFFIX)
    sidecar_path = base.with_suffix(".json")
    with open(sidecar_path) as fh:
        sidecar = json.load(fh)
    chunks = []
    with open(rle_path) as fh:
        for line in fh:
            sym, count = line.split()
            chunks.append(np.full(int(count), int(sym), dtype=np.int64))
    word = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
    if len(word) != sidecar["length"]:
        raise InputError("RLE stream length disagrees with sidecar")
    return WildPrefix(
        word=word,
        checkpoints=tuple(Checkpoint(**c) for c in sidecar["checkpoints"]),
        tmc=TMC.from_json_dict(sidecar["tmc"]),
        schedule=LengthSchedule.from_json_dict(sidecar["schedule"]),
        periodic_words=tuple(PeriodicWord(tuple(w)) for w in sidecar["periodic_words"]),
    )
