"""Construction of the recognition repertoire and the abstraction connections.

The recognition repertoire grows layer by layer from one random root. Each
seed of the current frontier spawns ``fanout`` children, each a copy of its
parent with ``mutation_count`` weight pairs resampled, so adjacent groups
start out nearly identical. A few children become the next frontier and a
few extra edges tie each new layer back to the previous one.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .hopfield import mutate_weights, n_pairs, new_random_group


class ConfigurationError(ValueError):
    pass


@dataclass
class RepertoireGraph:
    weights: np.ndarray  # (r, n, n)
    indptr: np.ndarray   # CSR adjacency, sorted neighbor lists
    indices: np.ndarray
    parent: np.ndarray   # -1 for the root
    layer: np.ndarray

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def neuron_count(self) -> int:
        return self.weights.shape[1]

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def adjacency(self) -> sparse.csr_matrix:
        r = self.size
        data = np.ones(self.indices.size)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(r, r))

    def is_connected(self) -> bool:
        seen = np.zeros(self.size, dtype=bool)
        seen[0] = True
        todo = deque([0])
        while todo:
            i = todo.popleft()
            for j in self.neighbors(i):
                if not seen[j]:
                    seen[j] = True
                    todo.append(j)
        return bool(seen.all())


@dataclass
class AbstractionMap:
    anchors: np.ndarray   # (a,)
    indptr: np.ndarray    # CSR: recognition groups feeding each abstraction group
    indices: np.ndarray
    weights: np.ndarray   # (a, n, n) abstraction group matrices

    @property
    def size(self) -> int:
        return self.anchors.size

    def connections(self, s: int) -> np.ndarray:
        return self.indices[self.indptr[s]:self.indptr[s + 1]]

    def connection_counts(self) -> np.ndarray:
        return np.diff(self.indptr)

    def connection_matrix(self, r: int) -> sparse.csr_matrix:
        data = np.ones(self.indices.size)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(self.size, r))


def _csr_from_sets(sets: list[set[int]]) -> tuple[np.ndarray, np.ndarray]:
    lengths = [len(s) for s in sets]
    indptr = np.zeros(len(sets) + 1, dtype=np.int64)
    np.cumsum(lengths, out=indptr[1:])
    indices = np.fromiter(
        (j for s in sets for j in sorted(s)), dtype=np.int64, count=int(indptr[-1]))
    return indptr, indices


def build_recognition_repertoire(
    target_size: int,
    mutation_count: int = 60,
    fanout: int = 8,
    branch_sample: int = 4,
    back_edges: int = 32,
    neuron_count: int = 16,
    rng: np.random.Generator | None = None,
) -> RepertoireGraph:
    """Grow a connected, topographically arranged population of groups.

    Stops as soon as ``target_size`` groups exist, so the last layer may be
    partial.
    """
    r, n, m = target_size, neuron_count, mutation_count
    if r < 1:
        raise ConfigurationError(f"repertoire size must be positive, got {r}")
    if n < 1:
        raise ConfigurationError(f"neuron count must be positive, got {n}")
    if fanout < 1 or not 1 <= branch_sample <= fanout:
        raise ConfigurationError(
            f"need fanout >= 1 and 1 <= branch_sample <= fanout, got {fanout}, {branch_sample}")
    if back_edges < 0:
        raise ConfigurationError("back_edges must be non-negative")
    if not 0 <= m <= n_pairs(n):
        raise ConfigurationError(f"mutation count {m} exceeds the {n_pairs(n)} weight pairs")
    rng = np.random.default_rng() if rng is None else rng

    weights = np.empty((r, n, n))
    parent = np.full(r, -1, dtype=np.int64)
    layer = np.zeros(r, dtype=np.int64)
    adj: list[set[int]] = [set() for _ in range(r)]

    weights[0] = new_random_group(n, rng)
    count = 1
    frontier = [0]
    previous = [0]
    depth = 0
    while count < r:
        depth += 1
        fresh = []
        for p in frontier:
            for _ in range(fanout):
                if count == r:
                    break
                weights[count] = mutate_weights(weights[p], m, rng)
                parent[count] = p
                layer[count] = depth
                adj[p].add(count)
                adj[count].add(p)
                fresh.append(count)
                count += 1
        for _ in range(back_edges):
            u = fresh[rng.integers(len(fresh))]
            v = previous[rng.integers(len(previous))]
            if u != v:
                adj[u].add(v)
                adj[v].add(u)
        k = min(branch_sample, len(fresh))
        frontier = [fresh[i] for i in rng.choice(len(fresh), size=k, replace=False)]
        previous = fresh

    indptr, indices = _csr_from_sets(adj)
    return RepertoireGraph(weights, indptr, indices, parent, layer)


def build_abstraction_map(
    graph: RepertoireGraph, count: int, rng: np.random.Generator | None = None
) -> AbstractionMap:
    """Sample ``count`` distinct anchors and wire each to its closed 2-hop neighborhood.

    The abstraction matrices are drawn fresh with :func:`new_random_group`
    after the anchors, from the same stream.
    """
    if not 1 <= count <= graph.size:
        raise ConfigurationError(
            f"abstraction size must be in [1, {graph.size}], got {count}")
    rng = np.random.default_rng() if rng is None else rng
    anchors = rng.choice(graph.size, size=count, replace=False).astype(np.int64)
    sets = []
    for a in anchors:
        c = {int(a)}
        for j in graph.neighbors(a):
            c.add(int(j))
            c.update(int(x) for x in graph.neighbors(j))
        sets.append(c)
    indptr, indices = _csr_from_sets(sets)
    n = graph.neuron_count
    weights = np.stack([new_random_group(n, rng) for _ in range(count)])
    return AbstractionMap(anchors, indptr, indices, weights)
