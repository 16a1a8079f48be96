"""Finite-state Markov measures: stationarity, recurrent classes, and
Monte Carlo demonstrations of ergodic decomposition and physicality.

An invariant Markov measure decomposes over the recurrent classes of
its transition graph; along almost every sampled orbit the empirical
cylinder frequencies converge to the stationary measure of the orbit's
own class, and averaging over samples reconstructs the mixture.  The
checks here are statistical with explicit central-limit bands: the
per-sample band uses the exact asymptotic variance of the cylinder
indicator under the component chain (computed from the fundamental
matrix of the block-lifted chain, not the iid formula), and the
mixture band adds the between-component spread.

Physicality verdicts follow the same finite-horizon reading: a measure
is "generalized physical" for the sampled reference measure as soon as
a positive fraction of samples has settling averages, and "physical"
when additionally all settling samples agree on the tracked cylinder
family, which fails exactly when distinct recurrent classes carry
distinct stationary vectors.  Agreement of the per-orbit measures is
necessary for ergodicity of the reference measure but not sufficient:
the attracting heteroclinic cycle gives every interior orbit the same
two-atom measure while its area measure splits into invariant pieces
of positive mass, a planar phenomenon outside this module's scope and
recorded here as a caveat only.

All sampling uses the PCG64 generator; per-sample streams are spawned
from the root seed by index, so every report is bit-reproducible from
(seed, config) and says so.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import networkx as nx
import numpy as np

from .errors import InputError, PreconditionError, StructuralError
from .eta import probability_verdict
from .frequency import membership_mask
from .symbolic import TMC, CylinderSpec, Word, all_cylinders, as_word

PRNG_NAME = "PCG64"
ROW_SUM_TOL = 1e-12


def _check_stochastic(transition: np.ndarray) -> np.ndarray:
    p = np.asarray(transition, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise InputError("transition matrix must be square")
    if (p < 0).any():
        raise InputError("transition entries must be nonnegative")
    if np.abs(p.sum(axis=1) - 1).max() > ROW_SUM_TOL:
        raise InputError("transition rows must sum to 1 within 1e-12")
    return p


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Row-stochastic transition matrix plus an initial distribution."""

    transition: np.ndarray
    initial: np.ndarray

    def __post_init__(self) -> None:
        p = _check_stochastic(self.transition)
        init = np.asarray(self.initial, dtype=np.float64)
        if init.shape != (p.shape[0],):
            raise InputError("initial distribution shape mismatch")
        if (init < 0).any() or abs(init.sum() - 1) > ROW_SUM_TOL:
            raise InputError("initial must be a probability vector")
        object.__setattr__(self, "transition", p)
        object.__setattr__(self, "initial", init)

    @property
    def size(self) -> int:
        return self.transition.shape[0]

    def support_tmc(self) -> TMC:
        return TMC.from_matrix((self.transition > 0).astype(int))

    def to_json_dict(self) -> dict:
        return {
            "transition": [[float(v) for v in row] for row in self.transition],
            "initial": [float(v) for v in self.initial],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "MarkovMeasure":
        try:
            return cls(np.asarray(data["transition"]), np.asarray(data["initial"]))
        except KeyError as exc:
            raise InputError(f"malformed chain spec: {exc}") from exc


def support_digraph(transition: np.ndarray) -> nx.DiGraph:
    g = nx.DiGraph()
    n = transition.shape[0]
    g.add_nodes_from(range(n))
    rows, cols = np.nonzero(transition > 0)
    g.add_edges_from(zip(rows.tolist(), cols.tolist()))
    return g


def recurrent_classes(transition: np.ndarray) -> list[frozenset[int]]:
    """Strongly connected components with no outgoing edges, sorted by
    their least state."""
    p = _check_stochastic(transition)
    g = support_digraph(p)
    classes = []
    for comp in nx.strongly_connected_components(g):
        comp = frozenset(comp)
        if all(v in comp for u in comp for v in g.successors(u)):
            classes.append(comp)
    return sorted(classes, key=min)


def _stationary_on_states(p: np.ndarray, states: Sequence[int]) -> np.ndarray:
    idx = sorted(states)
    sub = p[np.ix_(idx, idx)]
    n = len(idx)
    mat = sub.T - np.eye(n)
    mat[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi_sub = np.linalg.solve(mat, rhs)
    pi_sub = np.where(np.abs(pi_sub) < 1e-15, 0.0, pi_sub)
    full = np.zeros(p.shape[0])
    full[idx] = pi_sub
    return full


def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    """The unique pi with pi P = pi, for a chain with one recurrent class.

    Transient states get mass zero.  Raises :class:`StructuralError`
    when several recurrent classes exist; decompose with
    :func:`ergodic_components` first.
    """
    p = _check_stochastic(transition)
    classes = recurrent_classes(p)
    if len(classes) != 1:
        raise StructuralError(
            f"{len(classes)} recurrent classes; stationarity is only unique "
            "per class - use ergodic_components"
        )
    pi = _stationary_on_states(p, sorted(classes[0]))
    residual = np.abs(pi @ p - pi).max()
    if residual > ROW_SUM_TOL:
        raise StructuralError(f"stationary solve residual {residual:g}")  # pragma: no cover
    return pi


def ergodic_components(transition: np.ndarray) -> list[tuple[frozenset[int], np.ndarray]]:
    """Recurrent classes with their stationary vectors (transient states
    belong to no component)."""
    p = _check_stochastic(transition)
    return [
        (cls, _stationary_on_states(p, sorted(cls))) for cls in recurrent_classes(p)
    ]


def _scan_paths(
    cum_rows: np.ndarray, starts: np.ndarray, uniforms: np.ndarray
) -> np.ndarray:
    """Vectorized-over-samples sequential scan of Markov paths."""
    count, length = uniforms.shape
    states = np.empty((count, length + 1), dtype=np.int64)
    states[:, 0] = starts
    for t in range(length):
        rows = cum_rows[states[:, t]]
        states[:, t + 1] = (uniforms[:, t, None] >= rows[:, :-1]).sum(axis=1)
    return states


def sample_paths(
    markov: MarkovMeasure, seed: int, count: int, length: int, chunk: int = 64
) -> np.ndarray:
    """``count`` independent orbits of ``length`` symbols, PCG64 streams
    spawned per sample index from the root seed."""
    if length < 1 or count < 1:
        raise PreconditionError("need count >= 1 and length >= 1")
    children = np.random.SeedSequence(seed).spawn(count)
    cum_rows = np.cumsum(markov.transition, axis=1)
    cum_rows[:, -1] = 1.0
    cum_init = np.cumsum(markov.initial)
    cum_init[-1] = 1.0
    out = np.empty((count, length), dtype=np.int64)
    for lo in range(0, count, chunk):
        gens = [np.random.Generator(np.random.PCG64(s)) for s in children[lo : lo + chunk]]
        u = np.stack([g.random(length) for g in gens])
        starts = (u[:, 0, None] >= cum_init[:-1]).sum(axis=1)
        paths = _scan_paths(cum_rows, starts, u[:, 1:])
        out[lo : lo + len(gens)] = paths[:, :length]
    return out


def sample_orbit(markov: MarkovMeasure, seed: int, length: int) -> np.ndarray:
    """One orbit; deterministic in (seed, PCG64)."""
    return sample_paths(markov, seed, 1, length)[0]


def cylinder_measure(pi: np.ndarray, transition: np.ndarray, base: Word) -> float:
    """Stationary measure of the cylinder [base]: pi(b0) prod P(bi, bi+1)."""
    w = as_word(base)
    value = pi[w[0]]
    for a, b in zip(w, w[1:]):
        value *= transition[a, b]
    return float(value)


def _block_chain(transition: np.ndarray, pi: np.ndarray, m: int):
    """The chain on admissible m-blocks, its stationary vector, and the
    block index map."""
    n = transition.shape[0]
    blocks = []
    index: dict[Word, int] = {}

    def extend(prefix):
        if len(prefix) == m:
            index[prefix] = len(blocks)
            blocks.append(prefix)
            return
        for nxt in range(n):
            if transition[prefix[-1], nxt] > 0:
                extend(prefix + (nxt,))

    for s in range(n):
        if pi[s] > 0:
            extend((s,))
    size = len(blocks)
    p_block = np.zeros((size, size))
    pi_block = np.zeros(size)
    for i, w in enumerate(blocks):
        pi_block[i] = cylinder_measure(pi, transition, w)
        for nxt in range(n):
            prob = transition[w[-1], nxt]
            if prob > 0:
                j = index.get(w[1:] + (nxt,))
                if j is not None:
                    p_block[i, j] = prob
    keep = pi_block > 0
    if not keep.all():
        blocks = [w for w, k in zip(blocks, keep) if k]
        index = {w: i for i, w in enumerate(blocks)}
        p_block = p_block[np.ix_(keep, keep)]
        pi_block = pi_block[keep]
    p_block = p_block / p_block.sum(axis=1, keepdims=True)
    return p_block, pi_block, index


def asymptotic_variance(transition: np.ndarray, pi: np.ndarray, base: Word) -> float:
    """Exact CLT variance of the cylinder-indicator average under the
    stationary chain, via the fundamental matrix of the block lift.

    ``Var(sqrt(n) * S_n) -> pi[f (2Z - I) f]`` with ``f`` the centered
    indicator and ``Z`` the fundamental matrix; positive correlations
    make this exceed the iid value ``p (1 - p)``.
    """
    w = as_word(base)
    p_block, pi_block, index = _block_chain(transition, pi, len(w))
    f = np.zeros(len(pi_block))
    j = index.get(w)
    mean = cylinder_measure(pi, transition, w)
    if j is not None:
        f[j] = 1.0
    f_bar = f - mean
    size = len(pi_block)
    big_pi = np.tile(pi_block, (size, 1))
    z = np.linalg.inv(np.eye(size) - p_block + big_pi)
    var = float(pi_block @ (f_bar * ((2 * z - np.eye(size)) @ f_bar)))
    return max(var, 0.0)


def second_largest_modulus(transition: np.ndarray) -> float:
    eigs = np.sort(np.abs(np.linalg.eigvals(transition)))
    return float(eigs[-2]) if len(eigs) > 1 else 0.0


@dataclass(frozen=True, eq=False)
class MixtureSpec:
    """Convex mixture of ergodic components on disjoint recurrent classes.

    Each component's initial distribution must be its own stationary
    vector, so component samples are stationary from step 0.
    """

    components: tuple[tuple[MarkovMeasure, float], ...]

    def __post_init__(self) -> None:
        weights = [w for _, w in self.components]
        if not self.components:
            raise InputError("mixture needs at least one component")
        if any(w < 0 for w in weights) or abs(sum(weights) - 1) > ROW_SUM_TOL:
            raise InputError("weights must be nonnegative and sum to 1")
        seen: set[int] = set()
        for measure, _ in self.components:
            support = set(np.nonzero(measure.initial > 0)[0].tolist())
            classes = recurrent_classes(measure.transition)
            if not any(support <= cls for cls in classes):
                raise StructuralError(
                    "component initial support is not inside one recurrent class"
                )
            pi = _stationary_on_states(measure.transition, sorted(support))
            if np.abs(pi - measure.initial).max() > 1e-9:
                raise StructuralError("component initial must be its stationary vector")
            if seen & support:
                raise StructuralError("component classes overlap")
            seen |= support
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def size(self) -> int:
        return self.components[0][0].size

    def mixture_cylinder_measure(self, base: Word) -> float:
        return sum(
            w * cylinder_measure(m.initial, m.transition, base)
            for m, w in self.components
        )

    @classmethod
    def from_weighted(cls, pairs: Sequence[tuple[MarkovMeasure, float]]) -> "MixtureSpec":
        return cls(tuple(pairs))


def two_class_mixture(
    p_first: np.ndarray, p_second: np.ndarray, weight_first: float
) -> MixtureSpec:
    """Embed two chains block-diagonally on a shared alphabet."""
    a = _check_stochastic(p_first)
    b = _check_stochastic(p_second)
    na, nb = a.shape[0], b.shape[0]
    size = na + nb
    big_a = np.eye(size)
    big_a[:na, :na] = a
    big_b = np.eye(size)
    big_b[na:, na:] = b
    init_a = np.zeros(size)
    init_a[:na] = stationary_distribution(a)
    init_b = np.zeros(size)
    init_b[na:] = stationary_distribution(b)
    return MixtureSpec(
        (
            (MarkovMeasure(big_a, init_a), weight_first),
            (MarkovMeasure(big_b, init_b), 1.0 - weight_first),
        )
    )


def _draw_components(mixture: MixtureSpec, seed: int, count: int) -> np.ndarray:
    weights = np.array([w for _, w in mixture.components])
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 1])))
    return gen.choice(len(weights), size=count, p=weights)


def sample_mixture_paths(
    mixture: MixtureSpec, seed: int, count: int, length: int
) -> tuple[np.ndarray, np.ndarray]:
    """Component assignments and orbits; per-component sampling keeps the
    per-sample stream indices stable."""
    assignment = _draw_components(mixture, seed, count)
    orbits = np.empty((count, length), dtype=np.int64)
    for c, (measure, _) in enumerate(mixture.components):
        rows = np.nonzero(assignment == c)[0]
        if rows.size:
            paths = sample_paths(measure, seed + 1000 * (c + 1), rows.size, length)
            orbits[rows] = paths
    return assignment, orbits


@dataclass(frozen=True)
class CellCheck:
    cylinder: str
    observed: float
    expected: float
    band: float

    @property
    def ok(self) -> bool:
        return abs(self.observed - self.expected) <= self.band


@dataclass(frozen=True, eq=False)
class DecompositionReport:
    """Per-sample and mixture-level reconstruction statistics."""

    sample_count: int
    horizon: int
    tol_sigma: float
    per_sample_pass: np.ndarray
    mixture_cells: tuple[CellCheck, ...]
    horizon_warning: bool
    prng: str = PRNG_NAME

    @property
    def fraction_within_bands(self) -> float:
        return float(self.per_sample_pass.mean())

    @property
    def mixture_ok(self) -> bool:
        return all(c.ok for c in self.mixture_cells)

    def to_json_dict(self) -> dict:
        return {
            "sample_count": self.sample_count,
            "horizon": self.horizon,
            "tol_sigma": self.tol_sigma,
            "fraction_within_bands": self.fraction_within_bands,
            "mixture_ok": self.mixture_ok,
            "horizon_warning": self.horizon_warning,
            "prng": self.prng,
            "mixture_cells": [
                {
                    "cylinder": c.cylinder,
                    "observed": c.observed,
                    "expected": c.expected,
                    "band": c.band,
                }
                for c in self.mixture_cells
            ],
        }


def _frequency_matrix(orbits: np.ndarray, bases: list[Word], horizon: int) -> np.ndarray:
    out = np.empty((orbits.shape[0], len(bases)))
    for j, base in enumerate(bases):
        for i in range(orbits.shape[0]):
            mask = membership_mask(orbits[i], [base])
            out[i, j] = mask[:horizon].mean()
    return out


def decomposition_check(
    mixture: MixtureSpec,
    sample_count: int,
    horizon: int,
    cylinders: Sequence[CylinderSpec],
    tol_sigma: float,
    seed: int,
) -> DecompositionReport:
    """Monte Carlo reconstruction of a mixture from per-orbit frequencies.

    For every sampled orbit, the cylinder frequency vector must match
    the orbit's own component measure within ``tol_sigma`` exact CLT
    bands; the across-sample average must match the mixture measure
    within the corresponding aggregate band.  A warning flag is raised
    when the horizon is small relative to the slowest component's
    relaxation time.
    """
    if not cylinders:
        raise PreconditionError("need a nonempty cylinder family")
    bases = [c.base for c in cylinders]
    max_gen = max(len(b) for b in bases)
    assignment, orbits = sample_mixture_paths(
        mixture, seed, sample_count, horizon + max_gen - 1
    )
    freq = _frequency_matrix(orbits, bases, horizon)

    comp_expected = np.empty((len(mixture.components), len(bases)))
    comp_sd = np.empty_like(comp_expected)
    slem = 0.0
    for c, (measure, _) in enumerate(mixture.components):
        support = sorted(np.nonzero(measure.initial > 0)[0].tolist())
        sub = measure.transition[np.ix_(support, support)]
        slem = max(slem, second_largest_modulus(sub))
        for j, base in enumerate(bases):
            comp_expected[c, j] = cylinder_measure(
                measure.initial, measure.transition, base
            )
            var = asymptotic_variance(measure.transition, measure.initial, base)
            comp_sd[c, j] = np.sqrt(var / horizon)

    bands = tol_sigma * comp_sd[assignment]
    bands = np.maximum(bands, 1e-12)
    per_sample_pass = (np.abs(freq - comp_expected[assignment]) <= bands).all(axis=1)

    weights = np.array([w for _, w in mixture.components])
    mixture_cells = []
    for j, base in enumerate(bases):
        mu_mix = float(weights @ comp_expected[:, j])
        var_single = float(
            weights @ (comp_sd[:, j] ** 2 + comp_expected[:, j] ** 2) - mu_mix**2
        )
        band = tol_sigma * np.sqrt(max(var_single, 0.0) / sample_count)
        mixture_cells.append(
            CellCheck(
                cylinder=CylinderSpec(base).label(),
                observed=float(freq[:, j].mean()),
                expected=mu_mix,
                band=max(float(band), 1e-12),
            )
        )

    relaxation = 1.0 / max(1e-12, 1.0 - slem) if slem < 1 else np.inf
    return DecompositionReport(
        sample_count=sample_count,
        horizon=horizon,
        tol_sigma=tol_sigma,
        per_sample_pass=per_sample_pass,
        mixture_cells=tuple(mixture_cells),
        horizon_warning=bool(horizon < 50 * relaxation),
    )


@dataclass(frozen=True, eq=False)
class PhysicalityReport:
    """Finite-horizon physicality verdicts for a sampled reference measure.

    ``generalized_physical`` holds iff a positive fraction of samples
    has settling averages; ``mu_physical`` additionally needs all
    settling samples to agree on the tracked cylinder family.
    """

    fraction_convergent: float
    pairwise_agreement: bool
    max_disagreement: float
    tol: float
    sample_count: int
    horizon: int
    verdicts: tuple[str, ...]
    prng: str = PRNG_NAME

    @property
    def generalized_physical(self) -> bool:
        return self.fraction_convergent > 0

    @property
    def mu_physical(self) -> bool:
        return self.generalized_physical and self.pairwise_agreement

    def to_json_dict(self) -> dict:
        return {
            "fraction_convergent": self.fraction_convergent,
            "pairwise_agreement": self.pairwise_agreement,
            "max_disagreement": self.max_disagreement,
            "tol": self.tol,
            "sample_count": self.sample_count,
            "horizon": self.horizon,
            "generalized_physical": self.generalized_physical,
            "mu_physical": self.mu_physical,
            "prng": self.prng,
        }


def physicality_check(
    measure_or_mixture,
    sample_count: int,
    horizon: int,
    tol: float,
    seed: int,
    generation: int = 2,
) -> PhysicalityReport:
    """Sample orbits, classify each as settling or not, and compare the
    settled frequency vectors across samples."""
    if isinstance(measure_or_mixture, MixtureSpec):
        mixture = measure_or_mixture
    else:
        mixture = MixtureSpec(((measure_or_mixture, 1.0),))
    size = mixture.size
    tmc = TMC.full_shift(size)
    bases = [c.base for c in all_cylinders(tmc, generation)]
    _, orbits = sample_mixture_paths(mixture, seed, sample_count, horizon + generation - 1)

    verdicts = []
    for i in range(sample_count):
        verdict = probability_verdict(
            orbits[i], tmc, horizon=horizon, tol=tol, generation=generation
        )
        verdicts.append(verdict.verdict)
    convergent = [i for i, v in enumerate(verdicts) if v == "probability"]
    fraction = len(convergent) / sample_count

    max_disagreement = 0.0
    if convergent:
        freq = _frequency_matrix(orbits[convergent], bases, horizon)
        max_disagreement = float((freq.max(axis=0) - freq.min(axis=0)).max())
    agreement = bool(convergent) and max_disagreement <= tol
    return PhysicalityReport(
        fraction_convergent=fraction,
        pairwise_agreement=agreement,
        max_disagreement=max_disagreement,
        tol=tol,
        sample_count=sample_count,
        horizon=horizon,
        verdicts=tuple(verdicts),
    )
