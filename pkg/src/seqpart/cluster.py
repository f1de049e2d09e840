"""Single-linkage clustering under the distance threshold, plus Hobohm 1.

With the minimum-cluster-point parameter pinned to 1, density clustering
degenerates to single linkage: clusters are exactly the connected
components of the graph whose edges are the pairs closer than epsilon.
Chaining is deliberate — two records further apart than epsilon share a
cluster whenever a path of close pairs connects them, which is what keeps
them out of different partitions.
"""
from __future__ import annotations

import enum
import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .distance import DistanceMeasure, EdgeList, all_pairs_edges, bulk_pair_distances
from .errors import DataError, UsageError
from .sequence_io import LabelTable
from .sketch import SketchSet


class HobohmSeparationWarning(UserWarning):
    """Hobohm pre-clustering weakens the cross-partition distance guarantee."""


class HobohmOrder(enum.Enum):
    INPUT_ORDER = "input"
    LONGEST_FIRST = "longest"


@dataclass(slots=True)
class Cluster:
    """A connected component: member record indices, size, label tallies."""

    cluster_id: int
    members: list[int]
    size: int
    label_counts: dict[str, int] | None = None


@dataclass(frozen=True, slots=True)
class ClusteringParams:
    epsilon: float
    min_points: int = 1  # fixed; >1 would break the separation guarantee
    hobohm_threshold: float | None = None
    hobohm_order: HobohmOrder = HobohmOrder.LONGEST_FIRST

    def __post_init__(self):
        if self.min_points != 1:
            raise UsageError("min_points is fixed to 1")
        if not 0.0 < self.epsilon <= 1.0:
            raise UsageError(f"epsilon must be in (0, 1], got {self.epsilon}")
        if self.hobohm_threshold is not None and not 0.0 < self.hobohm_threshold <= 1.0:
            raise UsageError("hobohm threshold must be in (0, 1]")


class UnionFind:
    """Disjoint sets with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


def _components(n: int, pairs_i, pairs_j) -> list[list[int]]:
    uf = UnionFind(n)
    for a, b in zip(pairs_i, pairs_j):
        if not (0 <= a < n and 0 <= b < n):
            raise DataError(f"edge ({a}, {b}) references a record index >= {n}")
        uf.union(a, b)
    groups: dict[int, list[int]] = {}
    for x in range(n):
        groups.setdefault(uf.find(x), []).append(x)
    # iteration over 0..n-1 leaves each group sorted and keyed by first member
    return sorted(groups.values(), key=lambda members: members[0])


def threshold_components(n: int, edges: EdgeList) -> list[Cluster]:
    """Connected components of the sub-epsilon edge graph over n records.

    Cluster ids are assigned by smallest member index, ascending, so the
    labeling does not depend on edge order or thread count.
    """
    comps = _components(n, edges.i.tolist(), edges.j.tolist())
    return [
        Cluster(cluster_id=cid, members=members, size=len(members))
        for cid, members in enumerate(comps)
    ]


def hobohm1_reduce(
    sketch_set: SketchSet,
    measure: DistanceMeasure,
    threshold: float,
    order: HobohmOrder = HobohmOrder.LONGEST_FIRST,
) -> tuple[list[int], dict[int, int]]:
    """Greedy representative selection (Hobohm algorithm 1).

    Scanning in the chosen order, each record joins the first existing
    representative closer than ``threshold``, else founds a new one. Unlike
    single linkage this is not transitive: two records assigned to the same
    representative may themselves be further apart than the threshold.

    Returns:
        (representatives in creation order, record index -> representative).
    """
    if not 0.0 < threshold <= 1.0:
        raise UsageError(f"hobohm threshold must be in (0, 1], got {threshold}")
    n = len(sketch_set)
    if order is HobohmOrder.LONGEST_FIRST:
        scan = sorted(range(n), key=lambda i: (-sketch_set.sketches[i].total_kmers, i))
    else:
        scan = list(range(n))

    reps: list[int] = []
    assignment: dict[int, int] = {}
    for idx in scan:
        if reps:
            pi = np.full(len(reps), idx, dtype=np.int64)
            pj = np.array(reps, dtype=np.int64)
            dists = bulk_pair_distances(sketch_set, measure, pi, pj)
            below = np.flatnonzero(dists < threshold)
            if below.size:
                assignment[idx] = reps[int(below[0])]
                continue
        reps.append(idx)
        assignment[idx] = idx
    return reps, assignment


def _tally_labels(
    members: list[int], ids: list[str], labels: LabelTable | None
) -> dict[str, int] | None:
    if labels is None:
        return None
    counts: Counter[str] = Counter()
    for m in members:
        seq_id = ids[m]
        if seq_id not in labels:
            raise DataError(f"record {seq_id!r} has no label")
        counts[labels[seq_id]] += 1
    return dict(counts)


def clusters_from_pipeline(
    sketch_set: SketchSet,
    measure: DistanceMeasure,
    params: ClusteringParams,
    labels: LabelTable | None = None,
    invert: bool = False,
    edges: EdgeList | None = None,
) -> list[Cluster]:
    """Full clustering stage: optional Hobohm collapse, then single linkage.

    With a Hobohm threshold set, near-duplicates are first collapsed onto
    representatives and the edge graph is built over representatives only;
    collapsed records are folded back into their representative's cluster,
    so clusters always partition the full record index range. A
    precomputed ``edges`` list (over all records) is reused when Hobohm is
    disabled.
    """
    n = len(sketch_set)
    if params.hobohm_threshold is not None:
        level = (
            "acting as the main clustering step"
            if params.hobohm_threshold >= params.epsilon
            else "collapsing near-duplicates"
        )
        warnings.warn(
            f"Hobohm 1 pre-clustering ({level}) can place records closer than "
            "epsilon into different clusters, weakening the cross-partition "
            "separation guarantee",
            HobohmSeparationWarning,
            stacklevel=2,
        )
        reps, assignment = hobohm1_reduce(
            sketch_set, measure, params.hobohm_threshold, params.hobohm_order
        )
        rep_set = SketchSet(
            sketch_set.scheme,
            [sketch_set.ids[r] for r in reps],
            [sketch_set.sketches[r] for r in reps],
        )
        edges = all_pairs_edges(rep_set, measure, params.epsilon, invert=invert)
        rep_comps = _components(len(reps), edges.i.tolist(), edges.j.tolist())
        rep_to_comp: dict[int, int] = {}
        for c, comp in enumerate(rep_comps):
            for local in comp:
                rep_to_comp[reps[local]] = c
        member_lists: list[list[int]] = [[] for _ in rep_comps]
        for record, rep in assignment.items():
            member_lists[rep_to_comp[rep]].append(record)
        comps = sorted((sorted(m) for m in member_lists), key=lambda m: m[0])
    else:
        if edges is None:
            edges = all_pairs_edges(sketch_set, measure, params.epsilon, invert=invert)
        comps = _components(n, edges.i.tolist(), edges.j.tolist())

    return [
        Cluster(
            cluster_id=cid,
            members=members,
            size=len(members),
            label_counts=_tally_labels(members, sketch_set.ids, labels),
        )
        for cid, members in enumerate(comps)
    ]


def write_clusters_tsv(clusters: list[Cluster], ids: list[str], path) -> None:
    """Cluster assignment export: ``seq_id TAB cluster_id``, in input order."""
    cluster_of: dict[int, int] = {}
    for cluster in clusters:
        for m in cluster.members:
            cluster_of[m] = cluster.cluster_id
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for idx, seq_id in enumerate(ids):
            fh.write(f"{seq_id}\t{cluster_of[idx]}\n")
