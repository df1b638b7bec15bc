"""Shared fixtures: the six-item toy corpus and an independent BFS oracle.

The oracle deliberately avoids the package's CSR machinery: plain dict-of-set
adjacency walked with a deque, so graph tests compare two genuinely separate
implementations.
"""

from __future__ import annotations

from collections import deque

import pytest

from crprobe import SequenceSet, build_global_graph

TOY_LISTS = [["x1", "x2", "x3"], ["x3", "x5"], ["x2", "x4"], ["x4", "x6"]]

# Toy fixture TSV: four training sequences forming the toy graph, three
# validation and three test sequences over the same items. With ratios 4:3:3
# the chronological split puts exactly the toy sequences in train.
TOY_TSV = "\n".join(
    ["session_id\titem_id\ttimestamp"]
    + [
        "s1\tx1\t100",
        "s1\tx2\t110",
        "s1\tx3\t120",
        "s2\tx3\t200",
        "s2\tx5\t210",
        "s3\tx2\t300",
        "s3\tx4\t310",
        "s4\tx4\t400",
        "s4\tx6\t410",
        "s5\tx5\t500",
        "s5\tx3\t510",
        "s5\tx2\t520",
        "s6\tx2\t600",
        "s6\tx4\t610",
        "s6\tx6\t620",
        "s7\tx1\t700",
        "s7\tx3\t710",
        "s8\tx5\t800",
        "s8\tx6\t810",
        "s9\tx1\t900",
        "s9\tx2\t910",
        "s10\tx3\t1000",
        "s10\tx4\t1010",
        "s10\tx1\t1020",
    ]
) + "\n"

TOY_CONFIG = """\
dataset.name = toy
grouping = session
min_item_freq = 1
min_len = 2
split.ratios = 4,3,3
hops = 4
k = 5
seed = 7
model.bpr.dim = 8
model.bpr.epochs = 5
model.bpr.batch = 4
"""


@pytest.fixture
def toy_corpus() -> SequenceSet:
    return SequenceSet.from_item_lists(TOY_LISTS)


@pytest.fixture
def toy_graph(toy_corpus):
    return build_global_graph(toy_corpus)


@pytest.fixture
def toy_index(toy_corpus):
    return {name: toy_corpus.vocab.encode(name) for name in ["x1", "x2", "x3", "x4", "x5", "x6"]}


@pytest.fixture
def toy_workdir(tmp_path):
    """Toy TSV plus config file pointing outputs into the temp dir."""
    data = tmp_path / "toy.tsv"
    data.write_text(TOY_TSV, encoding="utf-8")
    config = tmp_path / "toy.conf"
    config.write_text(
        TOY_CONFIG + f"dataset.path = {data}\nout_dir = {tmp_path / 'out'}\n",
        encoding="utf-8",
    )
    return tmp_path


# ---------------------------------------------------------------------------
# Independent shortest-path oracle


def oracle_adjacency(item_lists: list[list[int]]) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = {}
    for items in item_lists:
        distinct = sorted(set(items))
        for i, a in enumerate(distinct):
            adj.setdefault(a, set())
            for b in distinct[i + 1 :]:
                adj[a].add(b)
                adj.setdefault(b, set()).add(a)
    return adj


def oracle_distances(adj: dict[int, set[int]], source: int) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj.get(u, ()):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def oracle_class(adj: dict[int, set[int]], a: int, b: int, hops: int) -> str:
    dist = oracle_distances(adj, a).get(b)
    if dist is None:
        return "none"
    if dist <= hops:
        return f"hop{dist - 1}"
    return "others"
