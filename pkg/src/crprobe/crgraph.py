"""Global item co-occurrence graph and hop-level pair classification.

Every training sequence contributes a clique over its distinct items; the
union of those cliques is an undirected, unweighted global graph held in
compressed sparse row form. The relation class of an item pair is derived
from their shortest-path distance: distance d in 1..H maps to class
"hop{d-1}", reachable pairs beyond H are "others", disconnected pairs are
"none".
"""

from __future__ import annotations

import warnings
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .ingest import SequenceSet
from .nputil import chunk_bounds, gather_ranges

DEFAULT_MAX_HOP = 4
CLASS_OTHERS = "others"
CLASS_NONE = "none"
DEFAULT_CLIQUE_CAP = 500


def hop_class(h: int) -> str:
    """Class label for a pair whose shortest path has h intermediate hops."""
    if h < 0:
        raise ValueError("hop level must be >= 0")
    return f"hop{h}"


def class_labels(hops: int) -> list[str]:
    """All class labels under a hop budget, nearest first."""
    return [hop_class(h) for h in range(hops)] + [CLASS_OTHERS, CLASS_NONE]


@dataclass
class GlobalGraph:
    """Immutable CSR co-occurrence graph with per-edge co-occurrence counts.

    Neighbor lists are strictly sorted and self-loop free; cooc is aligned
    with indices and symmetric. comp/comp_sizes label connected components.
    """

    n: int
    indptr: np.ndarray  # int64, length n + 1
    indices: np.ndarray  # int32, length 2 * edge_count, sorted per row
    cooc: np.ndarray  # int32, aligned with indices
    comp: np.ndarray  # int32 component label per node
    comp_sizes: np.ndarray  # int64 per component

    @property
    def edge_count(self) -> int:
        return self.indices.size // 2

    @property
    def total_pairs(self) -> int:
        return self.n * (self.n - 1) // 2

    def neighbors(self, node: int) -> np.ndarray:
        return self.indices[self.indptr[node] : self.indptr[node + 1]]

    def cooc_between(self, a: int, b: int) -> int:
        """Co-occurrence count of the edge a-b, or 0 when not adjacent."""
        row = self.neighbors(a)
        pos = int(np.searchsorted(row, b))
        if pos < row.size and row[pos] == b:
            return int(self.cooc[self.indptr[a] + pos])
        return 0

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def connected(self, a: int, b: int) -> bool:
        return bool(self.comp[a] == self.comp[b])


def build_global_graph(train: SequenceSet, clique_cap: int = DEFAULT_CLIQUE_CAP) -> GlobalGraph:
    """Union the per-sequence cliques of a training corpus into one graph.

    Duplicate items inside a sequence collapse before pairing, so each
    sequence contributes at most one co-occurrence per pair. Sequences with
    more than clique_cap distinct items still build their full clique but
    raise a warning, since they add O(m^2) edges.
    """
    n = train.n_items
    pair_counts: dict[int, int] = {}
    for seq in train.sequences:
        distinct = sorted(set(seq.items))
        m = len(distinct)
        if m > clique_cap:
            warnings.warn(
                f"sequence {seq.id} has {m} distinct items (clique cap {clique_cap}); "
                f"building {m * (m - 1) // 2} edges anyway",
                stacklevel=2,
            )
        for ai in range(m):
            base = distinct[ai] * n
            for bi in range(ai + 1, m):
                key = base + distinct[bi]  # packed (a, b) with a < b
                pair_counts[key] = pair_counts.get(key, 0) + 1

    edge_count = len(pair_counts)
    keys = np.fromiter(pair_counts.keys(), dtype=np.int64, count=edge_count)
    vals = np.fromiter(pair_counts.values(), dtype=np.int32, count=edge_count)
    a_side = (keys // n).astype(np.int32)
    b_side = (keys % n).astype(np.int32)

    rows = np.concatenate([a_side, b_side])
    cols = np.concatenate([b_side, a_side])
    cooc_both = np.concatenate([vals, vals])
    order = np.lexsort((cols, rows))
    rows, cols, cooc_both = rows[order], cols[order], cooc_both[order]

    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    graph = GlobalGraph(
        n=n,
        indptr=indptr,
        indices=cols.astype(np.int32),
        cooc=cooc_both.astype(np.int32),
        comp=np.zeros(n, dtype=np.int32),
        comp_sizes=np.zeros(0, dtype=np.int64),
    )
    graph.comp, graph.comp_sizes = _connected_components(graph)
    return graph


def _connected_components(g: GlobalGraph) -> tuple[np.ndarray, np.ndarray]:
    comp = np.full(g.n, -1, dtype=np.int32)
    label = 0
    for start in range(g.n):
        if comp[start] >= 0:
            continue
        comp[start] = label
        frontier = np.array([start], dtype=np.int32)
        while frontier.size:
            starts = g.indptr[frontier]
            lens = g.indptr[frontier + 1] - starts
            nbrs = gather_ranges(starts, lens, g.indices)
            nbrs = nbrs[comp[nbrs] < 0]
            if nbrs.size == 0:
                break
            frontier = np.unique(nbrs)
            comp[frontier] = label
        label += 1
    return comp, np.bincount(comp, minlength=label).astype(np.int64)


def _bfs_levels(
    g: GlobalGraph,
    source: int,
    depth_cap: int,
    dist: np.ndarray,
    stamp: int,
) -> Iterator[np.ndarray]:
    """Yield the sorted frontier at each depth 1..depth_cap from source.

    dist is a reusable int64 scratch array, epoch-stamped: entries below
    `stamp` are stale; visited nodes are set to stamp + depth. Stops as soon
    as a frontier is empty.

    Direction-optimizing: once the frontier's edge mass would touch most of
    the graph, each level scans the shrinking unvisited side for neighbors in
    the previous frontier instead of expanding the frontier.
    """
    dist[source] = stamp
    frontier = np.array([source], dtype=np.int64)
    unvisited: np.ndarray | None = None
    unvisited_mass = 0
    for depth in range(1, depth_cap + 1):
        level_stamp = stamp + depth
        lens = g.indptr[frontier + 1] - g.indptr[frontier]
        top_mass = int(lens.sum())
        if unvisited is None and top_mass * 2 > g.indices.size:
            unvisited = np.flatnonzero(dist < stamp)
            u_deg = g.indptr[unvisited + 1] - g.indptr[unvisited]
            unvisited = unvisited[u_deg > 0]
            unvisited_mass = int(u_deg[u_deg > 0].sum())
        if unvisited is not None and unvisited.size and unvisited_mass < top_mass:
            u_starts = g.indptr[unvisited]
            u_lens = g.indptr[unvisited + 1] - u_starts
            cat = gather_ranges(u_starts, u_lens, g.indices)
            hit = dist[cat] == level_stamp - 1
            bounds = np.zeros(unvisited.size, dtype=np.int64)
            np.cumsum(u_lens[:-1], out=bounds[1:])
            found = np.bitwise_or.reduceat(hit, bounds)
            frontier = unvisited[found]
            if frontier.size == 0:
                return
            dist[frontier] = level_stamp
            unvisited = unvisited[~found]
            unvisited_mass -= int((g.indptr[frontier + 1] - g.indptr[frontier]).sum())
            yield frontier
            continue
        nbrs = gather_ranges(g.indptr[frontier], lens, g.indices)
        nbrs = nbrs[dist[nbrs] < stamp]
        if nbrs.size == 0:
            return
        dist[nbrs] = level_stamp
        # duplicates collapsed by the stamp; recover the frontier by sort or
        # scan, whichever is cheaper for this level
        if nbrs.size * 4 < g.n:
            frontier = np.unique(nbrs)
        else:
            frontier = np.flatnonzero(dist == level_stamp)
        if unvisited is not None:
            unvisited = unvisited[dist[unvisited] < stamp]
            unvisited_mass = int((g.indptr[unvisited + 1] - g.indptr[unvisited]).sum())
        yield frontier


def bfs_frontiers(g: GlobalGraph, source: int, max_hop: int = DEFAULT_MAX_HOP) -> list[np.ndarray]:
    """Per-depth BFS frontiers from source for depths 1..max_hop+1.

    frontiers[d-1] holds exactly the nodes at shortest-path distance d, as a
    sorted int32 array; the source is excluded and frontiers are disjoint.
    """
    if not 0 <= source < g.n:
        raise ValueError(f"source {source} out of range for graph with {g.n} nodes")
    dist = np.zeros(g.n, dtype=np.int64)
    frontiers = list(_bfs_levels(g, source, max_hop + 1, dist, stamp=1))
    while len(frontiers) < max_hop + 1:
        frontiers.append(np.zeros(0, dtype=np.int32))
    return frontiers


def cr_between(g: GlobalGraph, a: int, b: int, hops: int = DEFAULT_MAX_HOP) -> str:
    """Relation class of the pair (a, b) under a hop budget.

    Symmetric in its arguments. Raises ValueError for a == b: the relation is
    defined between distinct items only.
    """
    if a == b:
        raise ValueError("collaborative relation is undefined for identical items")
    if not (0 <= a < g.n and 0 <= b < g.n):
        raise ValueError("item index out of range")
    if g.comp[a] != g.comp[b]:
        return CLASS_NONE
    dist = np.zeros(g.n, dtype=np.int64)
    for depth, _frontier in enumerate(_bfs_levels(g, a, hops, dist, stamp=1), start=1):
        if dist[b] >= 1:  # reached: early exit
            return hop_class(depth - 1)
    return CLASS_OTHERS


@dataclass
class CrHistogram:
    """Unordered-pair counts per relation class, over all n*(n-1)/2 pairs."""

    counts: dict[str, int]
    total_pairs: int
    hops: int

    def proportions(self, denominator: str = "connected") -> dict[str, float]:
        """Class shares; denominator 'connected' excludes the disconnected mass."""
        if denominator == "connected":
            base = self.total_pairs - self.counts.get(CLASS_NONE, 0)
            labels = [lb for lb in self.counts if lb != CLASS_NONE]
        elif denominator == "all":
            base = self.total_pairs
            labels = list(self.counts)
        else:
            raise ValueError("denominator must be 'connected' or 'all'")
        if base == 0:
            return {label: 0.0 for label in labels}
        return {label: self.counts[label] / base for label in labels}

    def to_json_dict(self, denominator: str = "connected") -> dict:
        return {
            "schema": "crprobe.pair_classes/1",
            "hops": self.hops,
            "classes": dict(self.counts),
            "total_pairs": self.total_pairs,
            "denominator": denominator,
            "proportions": self.proportions(denominator),
        }


@dataclass
class CoocHistogram:
    """Number of adjacent (hop-0) pairs per co-occurrence frequency."""

    buckets: dict[int, int]

    def total_edges(self) -> int:
        return sum(self.buckets.values())

    def to_json_dict(self) -> dict:
        return {
            "schema": "crprobe.cooc_freq/1",
            "buckets": [[freq, count] for freq, count in sorted(self.buckets.items())],
            "edges": self.total_edges(),
        }


# Worker-side state for the fork-based source sweep.
_SWEEP_GRAPH: GlobalGraph | None = None
_SWEEP_HOPS: int = 0


def _sweep_chunk(bounds: tuple[int, int]) -> np.ndarray:
    g, hops = _SWEEP_GRAPH, _SWEEP_HOPS
    assert g is not None
    lo, hi = bounds
    totals = np.zeros(hops, dtype=np.int64)
    dist = np.zeros(g.n, dtype=np.int64)
    stamp = 0
    for source in range(lo, hi):
        if g.indptr[source] == g.indptr[source + 1]:
            continue
        stamp += hops + 2
        for depth, frontier in enumerate(_bfs_levels(g, source, hops, dist, stamp), start=1):
            totals[depth - 1] += frontier.size
    return totals


def pair_class_histogram(
    g: GlobalGraph, hops: int = DEFAULT_MAX_HOP, workers: int = 1
) -> CrHistogram:
    """Classify every unordered item pair by running a capped BFS per source.

    Per-depth frontier sizes are summed over all sources and halved; pairs
    reachable beyond the hop budget are counted from component sizes, so the
    O(n^2) pair list is never materialized. The sweep is data-parallel over
    sources with order-independent integer aggregation.
    """
    if hops < 1:
        raise ValueError("hops must be >= 1")
    global _SWEEP_GRAPH, _SWEEP_HOPS
    _SWEEP_GRAPH, _SWEEP_HOPS = g, hops
    try:
        bounds = chunk_bounds(g.n, max(1, workers) * 4)
        if workers > 1 and len(bounds) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                partials = list(pool.map(_sweep_chunk, bounds))
            per_depth = np.sum(partials, axis=0)
        else:
            per_depth = np.zeros(hops, dtype=np.int64)
            for b in bounds:
                per_depth += _sweep_chunk(b)
    finally:
        _SWEEP_GRAPH = None

    hop_pairs = per_depth // 2
    reachable_pairs = int(sum(int(s) * (int(s) - 1) // 2 for s in g.comp_sizes))
    within = int(hop_pairs.sum())
    counts = {hop_class(h): int(hop_pairs[h]) for h in range(hops)}
    counts[CLASS_OTHERS] = reachable_pairs - within
    counts[CLASS_NONE] = g.total_pairs - reachable_pairs
    return CrHistogram(counts=counts, total_pairs=g.total_pairs, hops=hops)


def cooc_frequency_histogram(g: GlobalGraph) -> CoocHistogram:
    """Histogram of per-edge co-occurrence counts, each undirected edge once."""
    rows = np.repeat(np.arange(g.n, dtype=np.int32), np.diff(g.indptr))
    upper = rows < g.indices
    freqs, counts = np.unique(g.cooc[upper], return_counts=True)
    return CoocHistogram(buckets={int(f): int(c) for f, c in zip(freqs, counts)})


class HopClassifier:
    """Batch pair classification with per-source BFS reuse.

    codes_from(source) returns a dense uint8 array of class codes for every
    node: 0..hops-1 are hop levels, hops is "others", hops+1 is "none"; the
    source's own slot is left at code 0 and must be special-cased by callers.
    Recent sources are cached, which makes repeated lookups from the same
    prefix or label item cheap.
    """

    def __init__(self, g: GlobalGraph, hops: int = DEFAULT_MAX_HOP, cache_size: int = 1024):
        self.g = g
        self.hops = hops
        self.labels = class_labels(hops)
        self._cache: OrderedDict[int, np.ndarray] = OrderedDict()
        self._cache_size = cache_size
        self._dist = np.zeros(g.n, dtype=np.int64)
        self._stamp = 0

    def code_of(self, a: int, b: int) -> int:
        return int(self.codes_from(a)[b])

    def class_of(self, a: int, b: int) -> str:
        if a == b:
            raise ValueError("collaborative relation is undefined for identical items")
        return self.labels[self.code_of(a, b)]

    def codes_from(self, source: int) -> np.ndarray:
        cached = self._cache.get(source)
        if cached is not None:
            self._cache.move_to_end(source)
            return cached
        g, hops = self.g, self.hops
        self._stamp += hops + 2
        codes = np.where(
            g.comp == g.comp[source], np.uint8(hops), np.uint8(hops + 1)
        ).astype(np.uint8)
        for depth, frontier in enumerate(
            _bfs_levels(g, source, hops, self._dist, self._stamp), start=1
        ):
            codes[frontier] = depth - 1
        codes[source] = 0
        self._cache[source] = codes
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return codes
