"""Exact N-photon detection statistics and distribution metrics.

At the scale of interest (tens of modes, up to six detected photons)
every admissible detection pattern can be enumerated and its
probability evaluated exactly, so sampling reduces to categorical
draws from the enumerated distribution.  That trades the generality of
chain-rule samplers for freedom from sampler bias, and it makes rate
questions (how many device runs per retained sample) a single
normalization constant.

Patterns are tuples of clicked mode indices in ascending order, with
repeats for multi-photon clicks; distributions list them in
lexicographic order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, combinations_with_replacement, groupby
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, GuardError
from .gaussian import GaussianState, kernel_matrix, vacuum_probability
from .hafnian import hafnian

__all__ = [
    "PatternDistribution",
    "distribution_from_csv",
    "distribution_to_csv",
    "draw_samples",
    "enumerate_distribution",
    "ideal_graph_distribution",
    "mean_photons_per_mode",
    "nfold_mass",
    "runs_per_sample",
    "tvd",
]

_PATTERN_GUARD = 10**7
_IMAG_TOL = 1e-10
_SUM_TOL = 1e-9

Pattern = Tuple[int, ...]


@dataclass(frozen=True)
class PatternDistribution:
    """Conditional distribution over N-photon detection patterns."""

    photons: int
    collision_free: bool
    patterns: Tuple[Pattern, ...]
    probs: np.ndarray
    norm: float

    def __post_init__(self):
        if self.photons < 1:
            raise ValueError(f"photon number must be >= 1, got {self.photons}")
        pats = tuple(tuple(int(i) for i in p) for p in self.patterns)
        if not pats:
            raise ValueError("distribution needs at least one pattern")
        for p in pats:
            if len(p) != self.photons or any(i < 0 for i in p):
                raise ValueError(f"pattern {p} does not detect {self.photons} photons")
            if list(p) != sorted(p):
                raise ValueError(f"pattern {p} is not ascending")
            if self.collision_free and len(set(p)) != len(p):
                raise ValueError(f"pattern {p} has collisions")
        if any(a >= b for a, b in zip(pats, pats[1:])):
            raise ValueError("patterns must be strictly lexicographically ascending")
        probs = np.array(self.probs, dtype=float)
        if probs.shape != (len(pats),):
            raise ValueError(f"{len(pats)} patterns but probs shape {probs.shape}")
        if np.any(probs < -1e-12) or not np.all(np.isfinite(probs)):
            raise ValueError("probabilities must be finite and non-negative")
        if abs(probs.sum() - 1.0) > _SUM_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()}, not 1")
        if not (math.isfinite(self.norm) and self.norm >= 0.0):
            raise ValueError(f"norm must be >= 0, got {self.norm}")
        probs = np.clip(probs, 0.0, None)
        probs.flags.writeable = False
        object.__setattr__(self, "patterns", pats)
        object.__setattr__(self, "probs", probs)

    def prob_of(self, pattern) -> float:
        """Probability of one pattern, zero when outside the support."""
        key = tuple(sorted(int(i) for i in pattern))
        try:
            return float(self.probs[self.patterns.index(key)])
        except ValueError:
            return 0.0


def _subset_indices(num_modes: int, mode_subset) -> Tuple[int, ...]:
    subset = tuple(int(i) for i in mode_subset)
    if len(set(subset)) != len(subset):
        raise ValueError(f"mode subset has duplicates: {mode_subset}")
    if any(i < 0 or i >= num_modes for i in subset):
        raise ValueError(f"mode subset {mode_subset} out of range for {num_modes} modes")
    return tuple(sorted(subset))


def _reduced_state(state: GaussianState, subset: Tuple[int, ...]) -> GaussianState:
    # Discarding modes of a Gaussian state keeps the principal
    # submatrix of both covariance blocks.
    m = state.num_modes
    rows = np.array(list(subset) + [i + m for i in subset])
    return GaussianState(state.sigma[np.ix_(rows, rows)])


def _pattern_weights(state: GaussianState, photons: int, collision_free: bool):
    m = state.num_modes
    count = math.comb(m, photons) if collision_free else math.comb(m + photons - 1, photons)
    if count > _PATTERN_GUARD:
        raise GuardError(f"{count} patterns exceed the enumeration guard {_PATTERN_GUARD}")
    if count == 0:
        raise ValueError(f"no {photons}-photon patterns on {m} modes")
    a = kernel_matrix(state).a
    p0 = vacuum_probability(state)
    maker = combinations if collision_free else combinations_with_replacement
    patterns = []
    weights = np.empty(count)
    for slot, pattern in enumerate(maker(range(m), photons)):
        idx = np.asarray(pattern, dtype=np.int64)
        cols = np.concatenate([idx, idx + m])
        value = hafnian(a[np.ix_(cols, cols)])
        # Hafnian roundoff tracks the 2^N subset sum inside it, so the
        # realness check must widen accordingly or large patterns trip it.
        if abs(value.imag) > _IMAG_TOL * math.ldexp(1.0, photons) * max(1.0, abs(value.real)):
            raise GuardError(f"pattern weight has imaginary residue {value.imag:.3e}")
        repeats = 1.0
        for _, run in groupby(pattern):
            repeats *= math.factorial(len(tuple(run)))
        patterns.append(pattern)
        weights[slot] = max(value.real, 0.0) * p0 / repeats
    return tuple(patterns), weights


def nfold_mass(
    state: GaussianState,
    photons: int,
    collision_free: bool = True,
    mode_subset=None,
) -> float:
    """Unconditioned probability of an N-photon pattern.

    With a mode subset the remaining detectors are ignored, which for a
    Gaussian state means tracing them out before enumerating.
    """
    if photons < 1:
        raise ValueError(f"photon number must be >= 1, got {photons}")
    if mode_subset is not None:
        subset = _subset_indices(state.num_modes, mode_subset)
        state = _reduced_state(state, subset)
    _, weights = _pattern_weights(state, photons, collision_free)
    return float(weights.sum())


def enumerate_distribution(
    state: GaussianState,
    photons: int,
    collision_free: bool = True,
    mode_subset=None,
) -> PatternDistribution:
    """Exact conditional distribution of N-photon detection events.

    Every admissible pattern probability is evaluated from the state
    kernel and the list is conditioned on the detected photon number.
    Patterns are reported in the original mode indices even when a
    subset restriction is active.
    """
    if photons < 1:
        raise ValueError(f"photon number must be >= 1, got {photons}")
    subset = None
    if mode_subset is not None:
        subset = _subset_indices(state.num_modes, mode_subset)
        state = _reduced_state(state, subset)
    patterns, weights = _pattern_weights(state, photons, collision_free)
    norm = float(weights.sum())
    if norm <= 0.0:
        raise GuardError(f"no probability mass in the {photons}-photon sector")
    if subset is not None:
        patterns = tuple(tuple(subset[i] for i in p) for p in patterns)
    return PatternDistribution(
        photons=photons,
        collision_free=collision_free,
        patterns=patterns,
        probs=weights / norm,
        norm=norm,
    )


def ideal_graph_distribution(matrix, photons: int) -> PatternDistribution:
    """Lossless collision-free distribution encoded by a graph matrix.

    For even N the pattern weights are the squared hafnians of the
    pattern submatrices.  Odd N is assembled from the (N+1)-fold
    distribution by removing one of the detections uniformly at random,
    which is how an even-photon source yields odd seed sizes.
    """
    b = np.asarray(matrix, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] == 0:
        raise ValueError(f"matrix must be square and non-empty, got shape {b.shape}")
    if np.max(np.abs(b - b.T)) > 1e-10 * max(1.0, np.max(np.abs(b))):
        raise ValueError("matrix must be symmetric")
    if np.any(b > 1e-12) and np.any(b < -1e-12):
        raise ValueError(
            "matrix mixes positive and negative entries; pattern weights would "
            "no longer track subgraph density"
        )
    if photons < 2:
        raise ValueError(f"need at least 2 photons, got {photons}")
    m = b.shape[0]
    if photons % 2 == 1:
        parent = ideal_graph_distribution(b, photons + 1)
        lookup = {p: w for p, w in zip(parent.patterns, parent.probs)}
        patterns = list(combinations(range(m), photons))
        probs = np.zeros(len(patterns))
        for slot, pattern in enumerate(patterns):
            held = set(pattern)
            total = 0.0
            for extra in range(m):
                if extra in held:
                    continue
                total += lookup.get(tuple(sorted(pattern + (extra,))), 0.0)
            probs[slot] = total / (photons + 1)
        if probs.sum() <= 0.0:
            raise GuardError(f"no probability mass in the {photons}-photon sector")
        return PatternDistribution(
            photons=photons,
            collision_free=True,
            patterns=tuple(patterns),
            probs=probs / probs.sum(),
            norm=parent.norm,
        )
    count = math.comb(m, photons)
    if count > _PATTERN_GUARD:
        raise GuardError(f"{count} patterns exceed the enumeration guard {_PATTERN_GUARD}")
    if count == 0:
        raise ValueError(f"no {photons}-photon patterns on {m} nodes")
    patterns = []
    weights = np.empty(count)
    for slot, pattern in enumerate(combinations(range(m), photons)):
        idx = np.asarray(pattern)
        weights[slot] = abs(hafnian(b[np.ix_(idx, idx)])) ** 2
        patterns.append(pattern)
    norm = float(weights.sum())
    if norm <= 0.0:
        raise GuardError(f"no probability mass in the {photons}-photon sector")
    return PatternDistribution(
        photons=photons,
        collision_free=True,
        patterns=tuple(patterns),
        probs=weights / norm,
        norm=norm,
    )


def draw_samples(dist: PatternDistribution, count: int, rng_seed: int) -> list:
    """Independent categorical draws from the distribution."""
    if count < 0:
        raise ValueError(f"sample count must be >= 0, got {count}")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    probs = dist.probs / dist.probs.sum()
    picks = rng.choice(len(dist.patterns), size=count, p=probs)
    return [dist.patterns[i] for i in picks]


def tvd(p: PatternDistribution, q: PatternDistribution) -> float:
    """Total variation distance on the union of the two supports."""
    if p.photons != q.photons:
        raise ValueError(f"photon numbers differ: {p.photons} vs {q.photons}")
    if p.collision_free != q.collision_free:
        raise ValueError("cannot compare collision-free with multiset statistics")
    support = sorted(set(p.patterns) | set(q.patterns))
    lookup_p = dict(zip(p.patterns, p.probs))
    lookup_q = dict(zip(q.patterns, q.probs))
    return 0.5 * float(
        sum(abs(lookup_p.get(s, 0.0) - lookup_q.get(s, 0.0)) for s in support)
    )


def runs_per_sample(state: GaussianState, photons: int, mode_subset=None) -> float:
    """Expected device runs per retained collision-free N-fold event."""
    mass = nfold_mass(state, photons, collision_free=True, mode_subset=mode_subset)
    if mass <= 0.0:
        raise GuardError(f"the {photons}-photon sector is empty; rate diverges")
    return 1.0 / mass


def mean_photons_per_mode(state: GaussianState) -> float:
    """Photon number expectation averaged over the modes."""
    return float(np.mean(np.diag(state.number_block).real - 0.5))


def distribution_to_csv(dist: PatternDistribution, device_hash: str = "") -> str:
    """CSV document with the metadata needed to interpret the rows."""
    lines = [
        f"# photons={dist.photons}",
        f"# collision_free={str(dist.collision_free).lower()}",
        f"# norm={dist.norm!r}",
        f"# device={device_hash}",
        "pattern,probability",
    ]
    for pattern, prob in zip(dist.patterns, dist.probs):
        lines.append("-".join(str(i) for i in pattern) + f",{float(prob)!r}")
    return "\n".join(lines) + "\n"


def distribution_from_csv(text: str) -> Tuple[PatternDistribution, str]:
    """Inverse of distribution_to_csv; returns the device hash too."""
    meta = {}
    patterns = []
    probs = []
    try:
        lines = [line for line in text.splitlines() if line.strip()]
        for line in lines:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value
            elif line != "pattern,probability":
                pattern, _, prob = line.partition(",")
                patterns.append(tuple(int(i) for i in pattern.split("-")))
                probs.append(float(prob))
        dist = PatternDistribution(
            photons=int(meta["photons"]),
            collision_free=meta["collision_free"] == "true",
            patterns=tuple(patterns),
            probs=np.asarray(probs),
            norm=float(meta["norm"]),
        )
        return dist, meta.get("device", "")
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed distribution document: {exc}") from exc
