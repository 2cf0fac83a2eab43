"""Weighted loopless graphs and dense-subgraph utilities.

Graphs are symmetric real adjacency matrices with an empty diagonal.
The density of a node subset is the mean weight over all its node
pairs, which for unweighted graphs is the fraction of present edges
and equals 1 exactly on cliques.  A brute-force maximizer over all
k-subsets provides ground truth for the search experiments, and a
planted-instance generator joins a small dense random graph to a
larger sparse one.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, GuardError
from .gaussian import KernelMatrix

__all__ = [
    "WeightedGraph",
    "all_subset_densities",
    "densest_subgraph_bruteforce",
    "density",
    "graph_from_kernel",
    "is_nonnegative",
    "planted_graph",
    "validate_subset",
]

_SYM_TOL = 1e-12
_REAL_TOL = 1e-9
_SUBSET_GUARD = 10**7


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected weighted graph without self-loops."""

    node_labels: tuple
    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        if not np.all(np.isfinite(adj)):
            raise ValueError("adjacency must have finite entries")
        if adj.size and np.max(np.abs(adj - adj.T)) > _SYM_TOL:
            raise ValueError("adjacency must be symmetric")
        if adj.size and np.max(np.abs(np.diag(adj))) > _SYM_TOL:
            raise ValueError("adjacency diagonal must be zero (no self-loops)")
        adj = (adj + adj.T) / 2.0
        np.fill_diagonal(adj, 0.0)
        labels = tuple(str(name) for name in self.node_labels)
        if len(labels) != adj.shape[0]:
            raise ValueError(
                f"{len(labels)} labels for {adj.shape[0]} nodes"
            )
        adj.flags.writeable = False
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "node_labels", labels)

    @classmethod
    def from_adjacency(cls, adjacency, node_labels: Optional[Sequence] = None) -> "WeightedGraph":
        adj = np.asarray(adjacency, dtype=float)
        if node_labels is None:
            node_labels = [str(i) for i in range(adj.shape[0])]
        return cls(tuple(node_labels), adj)

    @property
    def num_nodes(self) -> int:
        return self.adjacency.shape[0]

    def to_json(self) -> str:
        doc = {"labels": list(self.node_labels), "adj": self.adjacency.tolist()}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def digest(self) -> str:
        """Short content hash for metadata trails."""
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:12]

    @classmethod
    def from_json(cls, text: str) -> "WeightedGraph":
        try:
            doc = json.loads(text)
            return cls(tuple(doc["labels"]), np.asarray(doc["adj"], dtype=float))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed graph document: {exc}") from exc

    def to_edge_list(self) -> str:
        """One "i j w" line per node pair i < j, zeros included."""
        lines = [
            f"{i} {j} {float(self.adjacency[i, j])!r}"
            for i in range(self.num_nodes)
            for j in range(i + 1, self.num_nodes)
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_edge_list(cls, text: str, node_labels: Optional[Sequence] = None) -> "WeightedGraph":
        pairs = {}
        top = -1
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ConfigError(f"edge list line {lineno} is not 'i j w': {raw!r}")
            try:
                i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as exc:
                raise ConfigError(f"edge list line {lineno}: {exc}") from exc
            if i < 0 or j < 0 or i == j:
                raise ConfigError(f"edge list line {lineno} has invalid endpoints")
            pairs[(min(i, j), max(i, j))] = w
            top = max(top, i, j)
        n = top + 1
        if n < 1:
            raise ConfigError("edge list is empty")
        adj = np.zeros((n, n))
        for (i, j), w in pairs.items():
            adj[i, j] = adj[j, i] = w
        return cls.from_adjacency(adj, node_labels)


def validate_subset(graph: WeightedGraph, subset) -> Tuple[int, ...]:
    nodes = tuple(int(i) for i in subset)
    if len(set(nodes)) != len(nodes):
        raise ValueError(f"subset has duplicate nodes: {subset}")
    if any(i < 0 or i >= graph.num_nodes for i in nodes):
        raise ValueError(f"subset {subset} is out of range for {graph.num_nodes} nodes")
    return tuple(sorted(nodes))


def density(graph: WeightedGraph, subset) -> float:
    """Mean edge weight over all node pairs of the subset."""
    nodes = validate_subset(graph, subset)
    k = len(nodes)
    if k < 2:
        raise ValueError("density needs at least 2 nodes")
    idx = np.asarray(nodes)
    block = graph.adjacency[np.ix_(idx, idx)]
    return float(block.sum() / (k * (k - 1)))


def is_nonnegative(graph: WeightedGraph, subset=None) -> bool:
    """True when every edge weight inside the subset (default: all) is >= 0."""
    if subset is None:
        return bool(np.all(graph.adjacency >= 0.0))
    idx = np.asarray(validate_subset(graph, subset))
    return bool(np.all(graph.adjacency[np.ix_(idx, idx)] >= 0.0))


def graph_from_kernel(kernel: KernelMatrix) -> Tuple[WeightedGraph, np.ndarray]:
    """Graph encoded in the pair block of a detection kernel.

    Requires the block to be real (a phase-locked device); returns the
    graph together with the diagonal self-loop weights, which do not
    enter densities but are part of the kernel.
    """
    b = kernel.b_block
    if np.max(np.abs(b.imag)) > _REAL_TOL:
        raise GuardError(
            f"kernel pair block is complex (max imag {np.max(np.abs(b.imag)):.3e}); "
            "graph extraction needs a phase-locked device"
        )
    weights = b.real.copy()
    self_loops = np.diag(weights).copy()
    np.fill_diagonal(weights, 0.0)
    return WeightedGraph.from_adjacency(weights), self_loops


def planted_graph(
    rng_seed: int,
    n_small: int = 6,
    p_small: float = 0.875,
    n_large: int = 20,
    p_large: float = 0.3,
    k_attach: int = 8,
    attach_mode: str = "global",
) -> WeightedGraph:
    """Join a dense random graph to a sparse background.

    Nodes 0 .. n_small-1 form an Erdos-Renyi graph with edge probability
    p_small (the planted subset); the remaining n_large nodes one with
    p_large; k_attach cross edges connect the two parts.  attach_mode
    "global" draws k_attach distinct cross pairs uniformly; "per_node"
    instead gives every small node k_attach distinct large neighbors.
    Randomness comes from a PCG64 generator seeded with rng_seed, so a
    seed pins the instance.
    """
    if not (0.0 <= p_small <= 1.0 and 0.0 <= p_large <= 1.0):
        raise ValueError("edge probabilities must lie in [0, 1]")
    if n_small < 1 or n_large < 1:
        raise ValueError("both blocks need at least one node")
    if attach_mode not in ("global", "per_node"):
        raise ValueError(f"unknown attach_mode {attach_mode!r}")
    cap = n_small * n_large if attach_mode == "global" else n_large
    if not (0 <= k_attach <= cap):
        raise ValueError(f"k_attach must lie in [0, {cap}] for this mode, got {k_attach}")

    rng = np.random.Generator(np.random.PCG64(rng_seed))
    n = n_small + n_large
    adj = np.zeros((n, n))

    def fill_block(lo, hi, p):
        for i in range(lo, hi):
            for j in range(i + 1, hi):
                if rng.random() < p:
                    adj[i, j] = adj[j, i] = 1.0

    fill_block(0, n_small, p_small)
    fill_block(n_small, n, p_large)

    if attach_mode == "global":
        flat = rng.choice(n_small * n_large, size=k_attach, replace=False)
        for code in np.sort(flat):
            small, large = divmod(int(code), n_large)
            adj[small, n_small + large] = adj[n_small + large, small] = 1.0
    else:
        for small in range(n_small):
            for large in np.sort(rng.choice(n_large, size=k_attach, replace=False)):
                adj[small, n_small + int(large)] = adj[n_small + int(large), small] = 1.0
    return WeightedGraph.from_adjacency(adj)


def all_subset_densities(graph: WeightedGraph, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """All k-subsets in lexicographic order with their densities."""
    n = graph.num_nodes
    if not 2 <= k <= n:
        raise ValueError(f"subset size must lie in [2, {n}], got {k}")
    count = math.comb(n, k)
    if count > _SUBSET_GUARD:
        raise GuardError(
            f"C({n}, {k}) = {count} subsets exceed the enumeration guard {_SUBSET_GUARD}"
        )
    combos = np.fromiter(
        (node for combo in combinations(range(n), k) for node in combo),
        dtype=np.int64,
        count=count * k,
    ).reshape(count, k)
    total = np.zeros(count)
    for a in range(k):
        for b in range(a + 1, k):
            total += graph.adjacency[combos[:, a], combos[:, b]]
    return combos, 2.0 * total / (k * (k - 1))


def densest_subgraph_bruteforce(graph: WeightedGraph, k: int) -> Tuple[Tuple[int, ...], float]:
    """Exact densest k-subset; ties go to the lexicographically first."""
    combos, densities = all_subset_densities(graph, k)
    best = int(np.argmax(densities))
    return tuple(int(i) for i in combos[best]), float(densities[best])
