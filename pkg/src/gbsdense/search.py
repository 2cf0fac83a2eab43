"""Random densification search seeded by detection samples.

The search is deliberately naive: draw n candidate k-node subsets from
a seed source, score each by subgraph density, and keep the best.
What changes between experiments is only the seed source (uniform
subsets, a device model distribution, the lossless ideal, or a file of
recorded samples), so the quality of a source shows up directly in how
fast the expected running maximum approaches the true optimum.

Every repetition uses an RNG stream derived from (rng_seed, repetition
index), which makes curves bit-reproducible and independent of any
execution order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .distributions import PatternDistribution
from .errors import ConfigError
from .graphs import WeightedGraph, validate_subset

__all__ = [
    "BudgetEstimate",
    "SearchConfig",
    "SearchCurve",
    "crossing_budget",
    "density_at_budget",
    "geometric_budgets",
    "random_search",
    "samples_at_density_fraction",
    "seed_pool_from_text",
    "seed_pool_to_text",
]

_SEED_SOURCES = ("uniform", "gbs-model", "ideal", "file")


def geometric_budgets(max_budget: int, points: int = 60) -> Tuple[int, ...]:
    """Roughly geometric integer grid from 1 to max_budget."""
    if max_budget < 1:
        raise ValueError(f"max budget must be >= 1, got {max_budget}")
    if points < 1:
        raise ValueError(f"need at least one grid point, got {points}")
    grid = np.unique(np.rint(np.geomspace(1.0, float(max_budget), points)).astype(int))
    return tuple(int(b) for b in grid)


@dataclass(frozen=True)
class SearchConfig:
    """Search shape: subset size, budget grid, averaging, seed source."""

    k: int
    budgets: Tuple[int, ...]
    repeats: int
    seed_source: str
    rng_seed: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"subset size must be >= 2, got {self.k}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        budgets = tuple(int(b) for b in self.budgets)
        if not budgets or budgets[0] < 1:
            raise ValueError("budgets must be positive integers")
        if any(a >= b for a, b in zip(budgets, budgets[1:])):
            raise ValueError("budgets must be strictly increasing")
        if self.seed_source not in _SEED_SOURCES:
            raise ValueError(
                f"unknown seed source {self.seed_source!r}; expected one of {_SEED_SOURCES}"
            )
        object.__setattr__(self, "budgets", budgets)


@dataclass(frozen=True)
class SearchCurve:
    """Mean running-max density per budget, with spread over repeats."""

    budgets: Tuple[int, ...]
    mean_density: np.ndarray
    stderr: np.ndarray
    metadata: Dict[str, object]
    per_repeat: Optional[np.ndarray] = None

    def __post_init__(self):
        budgets = tuple(int(b) for b in self.budgets)
        mean = np.array(self.mean_density, dtype=float)
        err = np.array(self.stderr, dtype=float)
        if not budgets or any(a >= b for a, b in zip(budgets, budgets[1:])):
            raise ValueError("budgets must be non-empty and strictly increasing")
        if mean.shape != (len(budgets),) or err.shape != (len(budgets),):
            raise ValueError("mean and stderr must match the budget grid")
        if np.any(err < 0.0):
            raise ValueError("standard errors must be >= 0")
        slack = 2.0 * (err[:-1] + err[1:]) + 1e-12
        if np.any(mean[1:] < mean[:-1] - slack):
            raise ValueError("mean running-max density decreased beyond noise")
        mean.flags.writeable = False
        err.flags.writeable = False
        object.__setattr__(self, "budgets", budgets)
        object.__setattr__(self, "mean_density", mean)
        object.__setattr__(self, "stderr", err)
        object.__setattr__(self, "metadata", dict(self.metadata))
        if self.per_repeat is not None:
            reps = np.array(self.per_repeat, dtype=float)
            if reps.ndim != 2 or reps.shape[1] != len(budgets):
                raise ValueError("per-repeat matrix must be repeats x budgets")
            reps.flags.writeable = False
            object.__setattr__(self, "per_repeat", reps)

    def to_csv(self) -> str:
        lines = [f"# {key}={self.metadata[key]}" for key in sorted(self.metadata)]
        lines.append("budget,mean_density,stderr")
        for budget, mean, err in zip(self.budgets, self.mean_density, self.stderr):
            lines.append(f"{budget},{float(mean)!r},{float(err)!r}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {
            "budgets": list(self.budgets),
            "mean_density": [float(x) for x in self.mean_density],
            "stderr": [float(x) for x in self.stderr],
            "metadata": self.metadata,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SearchCurve":
        try:
            doc = json.loads(text)
            return cls(
                budgets=tuple(doc["budgets"]),
                mean_density=np.asarray(doc["mean_density"], dtype=float),
                stderr=np.asarray(doc["stderr"], dtype=float),
                metadata=dict(doc["metadata"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed search curve document: {exc}") from exc


@dataclass(frozen=True)
class BudgetEstimate:
    """Budget satisfying a density criterion, with bootstrap spread."""

    value: int
    uncertainty: float
    exceeded: bool
    max_budget: int

    def __str__(self) -> str:
        if self.exceeded:
            return f">{self.max_budget}"
        return f"{self.value}({max(0, round(self.uncertainty))})"


def _repetition_rng(rng_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(rng_seed, spawn_key=(index,))))


def _check_distribution(graph: WeightedGraph, cfg: SearchConfig, dist: PatternDistribution):
    if not dist.collision_free:
        raise ValueError("seed distribution must be collision-free")
    if dist.photons != cfg.k:
        raise ValueError(f"seed distribution has {dist.photons}-node patterns, search wants {cfg.k}")
    top = max(max(pattern) for pattern in dist.patterns)
    if top >= graph.num_nodes:
        raise ValueError(f"seed pattern mentions node {top}, graph has {graph.num_nodes}")


def _check_pool(graph: WeightedGraph, cfg: SearchConfig, pool: Sequence[Tuple[int, ...]]):
    if not pool:
        raise ValueError("seed pool is empty")
    for pattern in pool:
        subset = validate_subset(graph, pattern)
        if len(subset) != cfg.k:
            raise ValueError(f"pool pattern {pattern} does not have {cfg.k} distinct nodes")


def random_search(
    graph: WeightedGraph,
    cfg: SearchConfig,
    distribution: Optional[PatternDistribution] = None,
    pool: Optional[Sequence[Tuple[int, ...]]] = None,
) -> SearchCurve:
    """Expected running-max density of seeded random search.

    The uniform source ignores distribution and pool; model and ideal
    sources draw from the given pattern distribution; the file source
    resamples the pool with replacement, so budgets beyond the pool
    size are fine (and flagged in the metadata).
    """
    wants_dist = cfg.seed_source in ("gbs-model", "ideal")
    if wants_dist and distribution is None:
        raise ValueError(f"seed source {cfg.seed_source!r} needs a pattern distribution")
    if cfg.seed_source == "file" and pool is None:
        raise ValueError("seed source 'file' needs a sample pool")
    if distribution is not None and not wants_dist:
        raise ValueError(f"seed source {cfg.seed_source!r} does not take a distribution")
    if pool is not None and cfg.seed_source != "file":
        raise ValueError(f"seed source {cfg.seed_source!r} does not take a pool")
    if cfg.seed_source == "uniform" and cfg.k > graph.num_nodes:
        raise ValueError(f"cannot draw {cfg.k} distinct nodes from {graph.num_nodes}")

    if distribution is not None:
        _check_distribution(graph, cfg, distribution)
        seed_probs = distribution.probs / distribution.probs.sum()
    if pool is not None:
        _check_pool(graph, cfg, pool)
        pool = [validate_subset(graph, p) for p in pool]

    max_budget = cfg.budgets[-1]
    slots = np.asarray(cfg.budgets) - 1
    per_repeat = np.empty((cfg.repeats, len(cfg.budgets)))
    adjacency = graph.adjacency
    pair_norm = cfg.k * (cfg.k - 1)

    for rep in range(cfg.repeats):
        rng = _repetition_rng(cfg.rng_seed, rep)
        if cfg.seed_source == "uniform":
            ranks = np.argsort(rng.random((max_budget, graph.num_nodes)), axis=1)
            subsets = ranks[:, : cfg.k]
        elif cfg.seed_source == "file":
            picks = rng.integers(0, len(pool), size=max_budget)
            subsets = np.asarray([pool[i] for i in picks])
        else:
            picks = rng.choice(len(distribution.patterns), size=max_budget, p=seed_probs)
            subsets = np.asarray([distribution.patterns[i] for i in picks])
        scores = np.zeros(max_budget)
        for a in range(cfg.k):
            for b in range(a + 1, cfg.k):
                scores += adjacency[subsets[:, a], subsets[:, b]]
        running = np.maximum.accumulate(2.0 * scores / pair_norm)
        per_repeat[rep] = running[slots]

    mean = per_repeat.mean(axis=0)
    spread = per_repeat.std(axis=0, ddof=1) if cfg.repeats > 1 else np.zeros_like(mean)
    metadata = {
        "graph": graph.digest(),
        "k": cfg.k,
        "repeats": cfg.repeats,
        "rng_seed": cfg.rng_seed,
        "seed_source": cfg.seed_source,
        "uncertainty": "standard error over repeats; bootstrap for derived budgets",
    }
    if pool is not None:
        metadata["pool_size"] = len(pool)
        metadata["pool_resampled_with_replacement"] = True
    return SearchCurve(
        budgets=cfg.budgets,
        mean_density=mean,
        stderr=spread / math.sqrt(cfg.repeats),
        metadata=metadata,
        per_repeat=per_repeat,
    )


def _first_crossing(budgets, means, target: float) -> Optional[int]:
    hits = np.flatnonzero(means >= target)
    return int(budgets[hits[0]]) if hits.size else None


def samples_at_density_fraction(
    curve: SearchCurve, fraction: float, d_max: float, resamples: int = 1000
) -> BudgetEstimate:
    """Smallest budget whose mean density reaches fraction * d_max.

    The uncertainty is the spread of that budget under bootstrap
    resampling of the repetitions, so it needs a curve that still
    carries its per-repeat matrix.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    if d_max <= 0.0:
        raise ValueError(f"reference density must be positive, got {d_max}")
    budgets = np.asarray(curve.budgets)
    target = fraction * d_max
    point = _first_crossing(budgets, curve.mean_density, target)
    if point is None:
        return BudgetEstimate(
            value=int(budgets[-1]), uncertainty=0.0, exceeded=True, max_budget=int(budgets[-1])
        )
    if curve.per_repeat is None or resamples < 1:
        return BudgetEstimate(point, 0.0, False, int(budgets[-1]))
    reps = curve.per_repeat.shape[0]
    seed = int(curve.metadata.get("rng_seed", 0))
    rng = _repetition_rng(seed, curve.per_repeat.shape[0])
    values = np.empty(resamples)
    for i in range(resamples):
        picks = rng.integers(0, reps, size=reps)
        mean = curve.per_repeat[picks].mean(axis=0)
        crossing = _first_crossing(budgets, mean, target)
        values[i] = budgets[-1] if crossing is None else crossing
    return BudgetEstimate(
        value=point,
        uncertainty=float(values.std(ddof=1)) if resamples > 1 else 0.0,
        exceeded=False,
        max_budget=int(budgets[-1]),
    )


def density_at_budget(curve: SearchCurve, budget: int = 50) -> Tuple[float, float]:
    """Mean density and its standard error at a budget inside the grid."""
    budgets = np.asarray(curve.budgets, dtype=float)
    if budget < budgets[0] or budget > budgets[-1]:
        raise ValueError(
            f"budget {budget} is outside the grid [{curve.budgets[0]}, {curve.budgets[-1]}]"
        )
    mean = float(np.interp(budget, budgets, curve.mean_density))
    err = float(np.interp(budget, budgets, curve.stderr))
    return mean, err


def crossing_budget(
    curve: SearchCurve,
    d_max: float,
    runs_per_sample: float,
    threshold_fraction: float = 0.75,
) -> Tuple[int, float]:
    """Budget reaching the threshold density and the device runs it costs."""
    if runs_per_sample <= 0.0:
        raise ValueError(f"runs per sample must be positive, got {runs_per_sample}")
    if not 0.0 <= threshold_fraction <= 1.0:
        raise ValueError(f"threshold fraction must lie in [0, 1], got {threshold_fraction}")
    if d_max <= 0.0:
        raise ValueError(f"reference density must be positive, got {d_max}")
    point = _first_crossing(np.asarray(curve.budgets), curve.mean_density, threshold_fraction * d_max)
    if point is None:
        raise ValueError(
            f"curve never reaches {threshold_fraction:.2f} of the reference density"
        )
    return point, point * runs_per_sample


def seed_pool_to_text(pool: Sequence[Tuple[int, ...]]) -> str:
    """Newline-delimited dash-joined patterns."""
    return "\n".join("-".join(str(i) for i in pattern) for pattern in pool) + "\n"


def seed_pool_from_text(text: str) -> list:
    pool = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            pattern = tuple(int(i) for i in line.split("-"))
        except ValueError as exc:
            raise ConfigError(f"seed pool line {lineno}: {exc}") from exc
        pool.append(pattern)
    if not pool:
        raise ConfigError("seed pool file is empty")
    return pool
