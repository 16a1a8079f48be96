"""Higher-order Cesaro (C,k) and Hoelder (H,k) means of real sequences.

Order zero is the identity.  (C,k) divides the k-fold iterated partial
sum by binom(n+k, k); (H,k) iterates the plain arithmetic mean k times;
(C,1) and (H,1) coincide.  Both are regular (they preserve limits), so
a sequence whose raw averages already converge gains nothing - and a
sequence with oscillating averages keeps oscillating at every order:
no higher-order averaging regularizes it.

Integer inputs (indicator sequences) are summed exactly in int64;
float inputs use compensated (Kahan) cumulative sums.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InputError, PreconditionError
from .frequency import OscillationReport


@dataclass(frozen=True)
class MeanSpec:
    kind: str  # "cesaro" | "hoelder"
    order: int

    def __post_init__(self) -> None:
        if self.kind not in ("cesaro", "hoelder"):
            raise InputError(f"unknown mean kind {self.kind!r}")
        if self.order < 0:
            raise InputError("order must be nonnegative")


def kahan_cumsum(values) -> np.ndarray:
    """Compensated running sums of a float sequence."""
    arr = np.asarray(values, dtype=np.float64)
    out = np.empty_like(arr)
    s = 0.0
    c = 0.0
    for i, x in enumerate(arr):
        y = x - c
        t = s + y
        c = (t - s) - y
        s = t
        out[i] = s
    return out


def _binomials(n: int, k: int) -> np.ndarray:
    """binom(i + k, k) for i = 0..n-1, exact in int64 at desk scale."""
    idx = np.arange(n, dtype=np.int64)
    out = np.ones(n, dtype=np.int64)
    for j in range(1, k + 1):
        out = out * (idx + j) // j
    return out


def cesaro_values(seq, k: int) -> np.ndarray:
    """(C,k) means at every index of the prefix."""
    if k < 0:
        raise InputError("order must be nonnegative")
    arr = np.asarray(seq)
    if arr.size == 0:
        raise PreconditionError("empty sequence")
    if k == 0:
        return arr.astype(np.float64)
    exact = np.issubdtype(arr.dtype, np.integer) or np.issubdtype(arr.dtype, np.bool_)
    sums = arr.astype(np.int64) if exact else arr.astype(np.float64)
    for _ in range(k):
        sums = np.cumsum(sums) if exact else kahan_cumsum(sums)
    return sums / _binomials(len(arr), k)


def cesaro_mean(seq, k: int, n: int) -> float:
    """(C,k) value at 0-based index n."""
    values = cesaro_values(np.asarray(seq)[: n + 1], k)
    return float(values[n])


def cesaro_values_exact(seq: list[Fraction], k: int) -> list[Fraction]:
    """Exact-rational (C,k) means; the drift oracle for the float path."""
    sums = list(seq)
    for _ in range(k):
        acc = Fraction(0)
        out = []
        for v in sums:
            acc += v
            out.append(acc)
        sums = out
    binoms = _binomials(len(seq), k)
    return [s / Fraction(int(b)) for s, b in zip(sums, binoms)]


def hoelder_values(seq, k: int) -> np.ndarray:
    """(H,k) means at every index: k-fold iterated arithmetic averaging."""
    if k < 0:
        raise InputError("order must be nonnegative")
    arr = np.asarray(seq, dtype=np.float64)
    if arr.size == 0:
        raise PreconditionError("empty sequence")
    denom = np.arange(1, len(arr) + 1, dtype=np.float64)
    out = arr
    for _ in range(k):
        out = kahan_cumsum(out) / denom
    return out


def hoelder_mean(seq, k: int, n: int) -> float:
    return float(hoelder_values(np.asarray(seq)[: n + 1], k)[n])


def mean_values(seq, spec: MeanSpec) -> np.ndarray:
    if spec.kind == "cesaro":
        return cesaro_values(seq, spec.order)
    return hoelder_values(seq, spec.order)


def mean_oscillation(seq, spec: MeanSpec, burn_in: int, horizon: int) -> OscillationReport:
    """Tail sup/inf of the order-k mean over indices burn_in..horizon-1."""
    if horizon <= burn_in:
        raise PreconditionError("horizon must exceed burn_in")
    arr = np.asarray(seq)[:horizon]
    if len(arr) < horizon:
        raise PreconditionError("sequence shorter than the horizon")
    values = mean_values(arr, spec)
    tail = values[burn_in:]
    return OscillationReport(
        sup_tail=float(tail.max()),
        inf_tail=float(tail.min()),
        burn_in=burn_in,
        horizon=horizon,
    )
