"""Topological Markov chains over a finite alphabet.

A chain is given by an alphabet ``{0, ..., S-1}`` and an ``S x S``
incidence matrix with 0/1 entries; a word is admissible when every
consecutive transition is allowed.  This module provides admissibility
checks, the aperiodicity index (least power of the incidence matrix
that is entrywise positive), cylinder sets ``[w]_m`` and their
refinements, enumeration of periodic words by minimal period, and two
codings of symbol sequences into ``[0, 1]``: base-``b`` expansions and
continued fractions.

Countable alphabets are handled by truncation to the first ``S``
symbols; ``S`` is a plain configuration parameter of :class:`TMC`.

Everything here is immutable and all functions are pure, so concurrent
use needs no coordination.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import InputError, PreconditionError, StructuralError

Word = tuple[int, ...]


def as_word(symbols: Iterable[int]) -> Word:
    """Normalize any iterable of symbols to the tuple form used throughout."""
    return tuple(int(s) for s in symbols)


@dataclass(frozen=True)
class TMC:
    """A topological Markov chain: alphabet size and 0/1 incidence matrix.

    ``incidence[a][b] == 1`` means the transition ``a -> b`` is allowed.
    Every row and every column must contain at least one 1 (no dead
    symbols), which is checked at construction.
    """

    alphabet_size: int
    incidence: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        s = self.alphabet_size
        if s < 1:
            raise InputError(f"alphabet_size must be positive, got {s}")
        if len(self.incidence) != s or any(len(row) != s for row in self.incidence):
            raise InputError(f"incidence must be {s}x{s}")
        for row in self.incidence:
            for entry in row:
                if entry not in (0, 1):
                    raise InputError(f"incidence entries must be 0 or 1, got {entry!r}")
        mat = np.asarray(self.incidence)
        if (mat.sum(axis=1) == 0).any() or (mat.sum(axis=0) == 0).any():
            raise StructuralError("incidence has a dead symbol (empty row or column)")

    @classmethod
    def full_shift(cls, alphabet_size: int) -> "TMC":
        """The full shift on ``alphabet_size`` symbols (all transitions allowed)."""
        row = (1,) * alphabet_size
        return cls(alphabet_size, (row,) * alphabet_size)

    @classmethod
    def golden_mean(cls) -> "TMC":
        """The two-symbol chain forbidding the block 11."""
        return cls(2, ((1, 1), (1, 0)))

    @classmethod
    def from_matrix(cls, matrix: Sequence[Sequence[int]]) -> "TMC":
        rows = tuple(tuple(int(v) for v in row) for row in matrix)
        return cls(len(rows), rows)

    def allows(self, a: int, b: int) -> bool:
        return self.incidence[a][b] == 1

    def check_symbol(self, s: int) -> None:
        if not 0 <= s < self.alphabet_size:
            raise InputError(
                f"symbol {s} out of range for alphabet of size {self.alphabet_size}"
            )

    def matrix(self) -> np.ndarray:
        return np.asarray(self.incidence, dtype=np.int64)

    def to_json_dict(self) -> dict:
        return {"S": self.alphabet_size, "incidence": [list(r) for r in self.incidence]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "TMC":
        try:
            s = int(data["S"])
            rows = data["incidence"]
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed TMC spec: {exc}") from exc
        tmc = cls.from_matrix(rows)
        if tmc.alphabet_size != s:
            raise InputError("TMC spec field S disagrees with incidence shape")
        return tmc


@dataclass(frozen=True)
class CylinderSpec:
    """The cylinder ``[base]_m``: all admissible sequences starting with ``base``."""

    base: Word

    def __post_init__(self) -> None:
        if len(self.base) == 0:
            raise InputError("cylinder base must be a nonempty word")
        object.__setattr__(self, "base", as_word(self.base))

    @property
    def generation(self) -> int:
        return len(self.base)

    def label(self) -> str:
        return "[" + ".".join(str(s) for s in self.base) + "]"


@dataclass(frozen=True)
class PeriodicWord:
    """One full period of a cyclically admissible word.

    The stored word is one minimal period; the represented point is its
    infinite periodic repetition.
    """

    word: Word

    def __post_init__(self) -> None:
        if len(self.word) == 0:
            raise InputError("periodic word must be nonempty")
        object.__setattr__(self, "word", as_word(self.word))
        if minimal_period(self.word) != len(self.word):
            raise InputError(
                f"word {self.word} has a proper period; store one minimal period"
            )

    @property
    def minimal_period(self) -> int:
        return len(self.word)

    def symbol_at(self, i: int) -> int:
        return self.word[i % len(self.word)]

    def prefix(self, m: int) -> Word:
        """First ``m`` symbols of the periodic repetition."""
        q = len(self.word)
        return tuple(self.word[i % q] for i in range(m))

    def rotation(self, i: int) -> Word:
        q = len(self.word)
        return tuple(self.word[(i + j) % q] for j in range(q))

    def in_cylinder(self, base: Word, phase: int = 0) -> bool:
        """Whether the periodic point shifted by ``phase`` lies in ``[base]``."""
        return all(self.symbol_at(phase + j) == b for j, b in enumerate(base))


def is_admissible(word: Sequence[int], tmc: TMC) -> bool:
    """True iff every consecutive transition of ``word`` is allowed by ``tmc``.

    Symbols out of range raise :class:`InputError`; the empty word and
    single symbols are vacuously admissible.
    """
    w = as_word(word)
    for s in w:
        tmc.check_symbol(s)
    return all(tmc.allows(a, b) for a, b in zip(w, w[1:]))


def is_cyclically_admissible(word: Sequence[int], tmc: TMC) -> bool:
    """Admissible including the wrap transition last -> first."""
    w = as_word(word)
    if not is_admissible(w, tmc):
        return False
    return len(w) == 0 or tmc.allows(w[-1], w[0])


@lru_cache(maxsize=None)
def _boolean_powers(tmc: TMC, max_n: int) -> tuple:
    """Boolean powers (A^1 .. A^max_n) as a tuple of bool arrays."""
    a = tmc.matrix() > 0
    powers = [a]
    for _ in range(max_n - 1):
        powers.append((powers[-1].astype(np.int64) @ a.astype(np.int64)) > 0)
    return tuple(powers)


def aperiodicity_index(tmc: TMC, max_n: int) -> int | None:
    """Least ``N <= max_n`` with ``incidence^N`` entrywise positive, else None.

    Uses boolean matrix powers, so no overflow for any alphabet size.
    """
    if max_n < 1:
        raise PreconditionError(f"max_n must be >= 1, got {max_n}")
    for n, power in enumerate(_boolean_powers(tmc, max_n), start=1):
        if power.all():
            return n
    return None


def path_exists(tmc: TMC, a: int, b: int, length: int) -> bool:
    """Whether an admissible path of exactly ``length`` transitions a -> b exists."""
    if length < 1:
        return a == b
    return bool(_boolean_powers(tmc, length)[length - 1][a, b])


def connect(tmc: TMC, a: int, b: int, inner_length: int) -> Word | None:
    """Lexicographically least word ``w`` of ``inner_length`` symbols with
    ``a -> w[0] -> ... -> w[-1] -> b`` admissible, or None.

    ``inner_length == 0`` asks for the direct transition ``a -> b``.
    """
    if inner_length == 0:
        return () if tmc.allows(a, b) else None
    if not path_exists(tmc, a, b, inner_length + 1):
        return None
    path: list[int] = []
    prev = a
    for i in range(inner_length):
        remaining = inner_length - i  # transitions still needed after choosing s
        for s in range(tmc.alphabet_size):
            if tmc.allows(prev, s) and path_exists(tmc, s, b, remaining):
                path.append(s)
                prev = s
                break
        else:  # pragma: no cover - excluded by the path_exists guard
            return None
    return tuple(path)


def minimal_period(word: Sequence[int]) -> int:
    """Least ``p`` with ``word[i] == word[(i + p) % len]`` for all ``i``.

    Periods are cyclic: only divisors of the length qualify, and the
    number of rotations fixing the word is ``len(word) / minimal_period``.
    """
    w = as_word(word)
    n = len(w)
    if n == 0:
        raise PreconditionError("minimal_period of the empty word is undefined")
    for p in range(1, n + 1):
        if n % p == 0 and all(w[i] == w[i % p] for i in range(n)):
            return p
    return n  # pragma: no cover - p == n always matches


def least_rotation(word: Word) -> Word:
    q = len(word)
    doubled = word + word
    return min(tuple(doubled[i : i + q]) for i in range(q))


def _admissible_words(tmc: TMC, length: int, prefix: Word) -> Iterator[Word]:
    """All admissible words of ``length`` starting with ``prefix``, in lex order."""
    if len(prefix) > length:
        return
    stack: list[Word] = [prefix]
    while stack:
        w = stack.pop()
        if len(w) == length:
            yield w
            continue
        if len(w) == 0:
            extensions = range(tmc.alphabet_size - 1, -1, -1)
            stack.extend((s,) for s in extensions)
        else:
            last = w[-1]
            for s in range(tmc.alphabet_size - 1, -1, -1):
                if tmc.allows(last, s):
                    stack.append(w + (s,))


def enumerate_periodic_words(
    tmc: TMC, period: int, prefix: Sequence[int] = ()
) -> list[PeriodicWord]:
    """All periodic words of minimal period ``period`` starting with ``prefix``.

    One representative per cyclic orbit: the lexicographically least
    rotation among those starting with ``prefix`` (the least rotation
    outright when the prefix is empty).  Results are sorted by that
    representative.  A nonempty result is guaranteed whenever
    ``period > len(prefix) + aperiodicity_index(tmc)``; for smaller
    periods the enumeration is still exact and may be empty.
    """
    pre = as_word(prefix)
    for s in pre:
        tmc.check_symbol(s)
    if period < 1:
        raise PreconditionError(f"period must be >= 1, got {period}")
    if pre and not is_admissible(pre, tmc):
        raise PreconditionError(f"prefix {pre} is not admissible")

    found: dict[Word, Word] = {}
    if len(pre) <= period:
        candidates = _admissible_words(tmc, period, pre)
    else:
        # Prefix longer than the period: the period-q word is pinned by
        # the prefix and must be consistent with q-periodicity.
        head = pre[:period]
        if all(pre[i] == head[i % period] for i in range(len(pre))):
            candidates = iter([head])
        else:
            candidates = iter([])
    for w in candidates:
        if minimal_period(w) != period:
            continue
        if not is_cyclically_admissible(w, tmc):
            continue
        canon = least_rotation(w)
        best = found.get(canon)
        if best is None or w < best:
            found[canon] = w
    return [PeriodicWord(w) for w in sorted(found.values())]


def periodic_words_stream(tmc: TMC, start_period: int = 1) -> Iterator[PeriodicWord]:
    """Period-then-lexicographic enumeration p_1, p_2, ... of all periodic orbits."""
    q = start_period
    while True:
        yield from enumerate_periodic_words(tmc, q)
        q += 1


def periodic_words_upto(tmc: TMC, count: int) -> list[PeriodicWord]:
    """First ``count`` entries of the period-then-lexicographic enumeration."""
    out: list[PeriodicWord] = []
    for p in periodic_words_stream(tmc):
        out.append(p)
        if len(out) == count:
            return out
    raise StructuralError("ran out of periodic words")  # pragma: no cover


def subcylinders(cyl: CylinderSpec, target_generation: int, tmc: TMC) -> list[CylinderSpec]:
    """All admissible generation-``target_generation`` cylinders inside ``cyl``.

    They partition ``cyl``; for the full shift there are
    ``S**(target_generation - cyl.generation)`` of them.
    """
    g = target_generation
    if g < cyl.generation:
        raise PreconditionError(
            f"target generation {g} below cylinder generation {cyl.generation}"
        )
    if not is_admissible(cyl.base, tmc):
        return []
    return [CylinderSpec(w) for w in _admissible_words(tmc, g, cyl.base)]


def all_cylinders(tmc: TMC, generation: int) -> list[CylinderSpec]:
    """All admissible cylinders of the given generation, in lex order."""
    if generation < 1:
        raise PreconditionError("generation must be >= 1")
    return [CylinderSpec(w) for w in _admissible_words(tmc, generation, ())]


def preimage_cylinders(cyl: CylinderSpec, tmc: TMC) -> list[CylinderSpec]:
    """The shift preimage of ``[w]_m`` as the union of ``[s w]_{m+1}``
    over symbols ``s`` with ``s -> w[0]`` allowed."""
    first = cyl.base[0]
    return [
        CylinderSpec((s,) + cyl.base)
        for s in range(tmc.alphabet_size)
        if tmc.allows(s, first)
    ]


@dataclass(frozen=True)
class CodedReal:
    """A real number computed from a finite symbolic prefix, with the
    truncation-error bound that the prefix length warrants."""

    value: Fraction
    error_bound: Fraction

    def __float__(self) -> float:
        return float(self.value)


def encode_base_b(digits: Sequence[int], b: int) -> CodedReal:
    """Value of the base-``b`` expansion ``sum digits[i] * b**-(i+1)``.

    The digits are a prefix of an infinite expansion, so the true value
    lies within ``b**-len(digits)`` of the returned one.  For fixed
    length the value is monotone in lexicographic digit order.
    """
    if b < 2:
        raise InputError(f"base must be >= 2, got {b}")
    ds = as_word(digits)
    for d in ds:
        if not 0 <= d < b:
            raise InputError(f"digit {d} out of range for base {b}")
    value = Fraction(0)
    scale = Fraction(1)
    for d in ds:
        scale /= b
        value += d * scale
    return CodedReal(value, Fraction(1, b ** len(ds)) if ds else Fraction(1))


def gauss_value(partial_quotients: Sequence[int]) -> CodedReal:
    """Finite continued fraction ``[0; a_1, ..., a_k]`` in ``(0, 1]``.

    The error bound ``1/q_k**2`` (``q_k`` the last convergent
    denominator) covers every infinite continuation.
    """
    pq = as_word(partial_quotients)
    if len(pq) == 0:
        raise PreconditionError("need at least one partial quotient")
    for a in pq:
        if a < 1:
            raise InputError(f"partial quotients must be >= 1, got {a}")
    value = Fraction(0)
    for a in reversed(pq):
        value = Fraction(1, a + value)
    q_prev, q_cur = 0, 1
    for a in pq:
        q_prev, q_cur = q_cur, a * q_cur + q_prev
    return CodedReal(value, Fraction(1, q_cur * q_cur))
