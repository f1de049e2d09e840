"""Makespan-balanced assignment of clusters to cross-validation partitions.

Clusters are indivisible (splitting one would leak close records across
folds), so fold building is a scheduling problem: place C weighted
clusters on P partitions minimizing a balance objective. The solver is a
longest-processing-time greedy start followed by a tabu exchange search
over cluster swaps and one-sided transfers between partition pairs.

Objectives are lexicographic tuples, smaller is better:

* size / log / squared: (max load - min load) under weight size,
  ln(1+size), size^2;
* clusters: (count range, load range);
* labels: (sum over labels of per-partition tally range, load range).
"""
from __future__ import annotations

import enum
import heapq
import math
import warnings
from bisect import insort
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .cluster import Cluster
from .errors import UsageError


class ForcedImbalanceWarning(UserWarning):
    """Separation constraints force unbalanced partitions (e.g. C < P)."""


class BalanceCriterion(enum.Enum):
    SIZE = "size"
    LOG_SIZE = "log"
    SQUARED_SIZE = "squared"
    CLUSTER_COUNT = "clusters"
    LABEL_BALANCE = "labels"


_SIZE_FAMILY = (
    BalanceCriterion.SIZE,
    BalanceCriterion.LOG_SIZE,
    BalanceCriterion.SQUARED_SIZE,
)


def cluster_weight(size: int, criterion: BalanceCriterion) -> float:
    """Scheduling weight of one cluster. log uses ln(1+size) so a
    hypothetical zero-size item still weighs 0, not -inf."""
    if criterion is BalanceCriterion.LOG_SIZE:
        return math.log1p(size)
    if criterion is BalanceCriterion.SQUARED_SIZE:
        return float(size) ** 2
    return float(size)


@dataclass(slots=True)
class Move:
    """An exchange between two partitions; None means the null cluster,
    turning the swap into a one-sided transfer."""

    from_a: Optional[int]
    from_b: Optional[int]
    restricted_after: tuple

    def key(self) -> tuple[int, int]:
        return (
            self.from_a if self.from_a is not None else -1,
            self.from_b if self.from_b is not None else -1,
        )

    def pair_key(self) -> tuple[int, int]:
        return tuple(sorted(self.key()))  # type: ignore[return-value]


@dataclass(slots=True)
class PartitionPlan:
    """Cluster -> partition assignment plus per-partition aggregates.

    ``members`` holds, per partition, (weight, cluster_id) pairs kept
    sorted so the exchange search can scan them in one pass.
    """

    p: int
    criterion: BalanceCriterion
    assignment: dict[int, int]
    loads: list[float]
    counts: list[int]
    label_tallies: list[dict[str, int]] | None
    weights: dict[int, float]
    cluster_labels: dict[int, dict[str, int]] | None
    members: list[list[tuple[float, int]]]

    def copy(self) -> "PartitionPlan":
        return PartitionPlan(
            p=self.p,
            criterion=self.criterion,
            assignment=dict(self.assignment),
            loads=list(self.loads),
            counts=list(self.counts),
            label_tallies=(
                [dict(t) for t in self.label_tallies]
                if self.label_tallies is not None
                else None
            ),
            weights=self.weights,
            cluster_labels=self.cluster_labels,
            members=[list(m) for m in self.members],
        )


def objective(plan: PartitionPlan) -> tuple:
    """The plan's lexicographic objective under its criterion."""
    return _objective_of(
        plan.criterion, plan.loads, plan.counts, plan.label_tallies
    )


def _objective_of(
    criterion: BalanceCriterion,
    loads: list[float],
    counts: list[int],
    tallies: list[dict[str, int]] | None,
) -> tuple:
    load_range = max(loads) - min(loads)
    if criterion in _SIZE_FAMILY:
        return (load_range,)
    if criterion is BalanceCriterion.CLUSTER_COUNT:
        return (float(max(counts) - min(counts)), load_range)
    labels: set[str] = set()
    for t in tallies:  # type: ignore[union-attr]
        labels.update(t)
    total = 0.0
    for name in labels:
        vals = [t.get(name, 0) for t in tallies]  # type: ignore[union-attr]
        total += max(vals) - min(vals)
    return (total, load_range)


def lpt_initial(
    clusters: list[Cluster], p: int, criterion: BalanceCriterion
) -> PartitionPlan:
    """Longest-processing-time greedy: clusters in descending weight order
    (ties by ascending id) each go to the least-loaded partition (ties to
    the lowest index)."""
    if p < 2:
        raise UsageError(f"need at least 2 partitions, got {p}")
    if not clusters:
        raise UsageError("cannot partition zero clusters")
    needs_labels = criterion is BalanceCriterion.LABEL_BALANCE
    if needs_labels and any(c.label_counts is None for c in clusters):
        raise UsageError("label-balance criterion requires a label table")

    weights = {c.cluster_id: cluster_weight(c.size, criterion) for c in clusters}
    cluster_labels = (
        {c.cluster_id: dict(c.label_counts or {}) for c in clusters}
        if any(c.label_counts is not None for c in clusters)
        else None
    )

    order = sorted(clusters, key=lambda c: (-weights[c.cluster_id], c.cluster_id))
    heap = [(0.0, q) for q in range(p)]
    heapq.heapify(heap)
    assignment: dict[int, int] = {}
    loads = [0.0] * p
    counts = [0] * p
    tallies: list[dict[str, int]] | None = (
        [{} for _ in range(p)] if cluster_labels is not None else None
    )
    members: list[list[tuple[float, int]]] = [[] for _ in range(p)]

    for c in order:
        load, q = heapq.heappop(heap)
        w = weights[c.cluster_id]
        assignment[c.cluster_id] = q
        loads[q] = load + w
        counts[q] += 1
        insort(members[q], (w, c.cluster_id))
        if tallies is not None:
            for name, k in (c.label_counts or {}).items():
                tallies[q][name] = tallies[q].get(name, 0) + k
        heapq.heappush(heap, (loads[q], q))

    return PartitionPlan(
        p=p,
        criterion=criterion,
        assignment=assignment,
        loads=loads,
        counts=counts,
        label_tallies=tallies,
        weights=weights,
        cluster_labels=cluster_labels,
        members=members,
    )


def _pair_objective(
    plan: PartitionPlan,
    qa: int,
    qb: int,
    la: float,
    lb: float,
    ca: int,
    cb: int,
    ta: dict[str, int] | None,
    tb: dict[str, int] | None,
) -> tuple:
    crit = plan.criterion
    if crit in _SIZE_FAMILY:
        return (abs(la - lb),)
    if crit is BalanceCriterion.CLUSTER_COUNT:
        return (float(abs(ca - cb)), abs(la - lb))
    total = 0.0
    for name in set(ta) | set(tb):  # type: ignore[arg-type]
        total += abs(ta.get(name, 0) - tb.get(name, 0))  # type: ignore[union-attr]
    return (total, abs(la - lb))


def _moved_tallies(
    plan: PartitionPlan,
    qa: int,
    qb: int,
    cid_a: Optional[int],
    cid_b: Optional[int],
) -> tuple[dict[str, int], dict[str, int]]:
    ta = dict(plan.label_tallies[qa])  # type: ignore[index]
    tb = dict(plan.label_tallies[qb])  # type: ignore[index]

    def shift(tally_from, tally_to, cid):
        for name, k in plan.cluster_labels[cid].items():  # type: ignore[index]
            tally_from[name] = tally_from.get(name, 0) - k
            tally_to[name] = tally_to.get(name, 0) + k

    if cid_a is not None:
        shift(ta, tb, cid_a)
    if cid_b is not None:
        shift(tb, ta, cid_b)
    return ta, tb


def best_exchange_between(
    plan: PartitionPlan, qa: int, qb: int
) -> Optional[Move]:
    """Best swap or transfer between two partitions, judged on the
    objective restricted to them; None when every move is strictly worse.

    For the size-family criteria the optimum swaps the pair whose weight
    delta is closest to half the load difference; with both member lists
    sorted (a weight-0 null item models transfers) one forward pass with a
    monotone partner pointer finds it. The other criteria enumerate the
    pairs directly.
    """
    if qa == qb:
        raise UsageError("exchange needs two distinct partitions")
    la, lb = plan.loads[qa], plan.loads[qb]
    ca, cb = plan.counts[qa], plan.counts[qb]
    if plan.criterion in _SIZE_FAMILY:
        current = (abs(la - lb),)
        best = _best_size_move(plan, qa, qb)
    else:
        current = _pair_objective(
            plan,
            qa,
            qb,
            la,
            lb,
            ca,
            cb,
            plan.label_tallies[qa] if plan.label_tallies else None,
            plan.label_tallies[qb] if plan.label_tallies else None,
        )
        best = _best_general_move(plan, qa, qb)
    if best is None or best.restricted_after > current:
        return None
    return best


def _best_size_move(plan: PartitionPlan, qa: int, qb: int) -> Optional[Move]:
    d = plan.loads[qa] - plan.loads[qb]
    ca, cb = plan.counts[qa], plan.counts[qb]
    list_a = [(0.0, None)] + plan.members[qa]
    list_b = [(0.0, None)] + plan.members[qb]
    best_key = None
    best_move = None
    jb = 0
    for wa, cid_a in list_a:
        target = wa - d / 2.0
        while jb + 1 < len(list_b) and list_b[jb + 1][0] <= target:
            jb += 1
        for idx in (jb, jb + 1):
            if idx >= len(list_b):
                continue
            wb, cid_b = list_b[idx]
            if cid_a is None and cid_b is None:
                continue
            after = (abs(d - 2.0 * (wa - wb)),)
            shift = (0 if cid_a is None else 1) - (0 if cid_b is None else 1)
            count_imb = abs((ca - shift) - (cb + shift))
            key = (
                after,
                count_imb,
                cid_a if cid_a is not None else -1,
                cid_b if cid_b is not None else -1,
            )
            if best_key is None or key < best_key:
                best_key = key
                best_move = Move(cid_a, cid_b, after)
    return best_move


def _best_general_move(plan: PartitionPlan, qa: int, qb: int) -> Optional[Move]:
    la, lb = plan.loads[qa], plan.loads[qb]
    ca, cb = plan.counts[qa], plan.counts[qb]
    labeled = plan.criterion is BalanceCriterion.LABEL_BALANCE
    list_a = [(0.0, None)] + plan.members[qa]
    list_b = [(0.0, None)] + plan.members[qb]
    best_key = None
    best_move = None
    for wa, cid_a in list_a:
        for wb, cid_b in list_b:
            if cid_a is None and cid_b is None:
                continue
            la2 = la - wa + wb
            lb2 = lb + wa - wb
            shift = (0 if cid_a is None else 1) - (0 if cid_b is None else 1)
            ca2, cb2 = ca - shift, cb + shift
            if labeled:
                ta2, tb2 = _moved_tallies(plan, qa, qb, cid_a, cid_b)
            else:
                ta2 = tb2 = None
            after = _pair_objective(plan, qa, qb, la2, lb2, ca2, cb2, ta2, tb2)
            key = (
                after,
                abs(ca2 - cb2),
                cid_a if cid_a is not None else -1,
                cid_b if cid_b is not None else -1,
            )
            if best_key is None or key < best_key:
                best_key = key
                best_move = Move(cid_a, cid_b, after)
    return best_move


def _global_after(
    plan: PartitionPlan, qa: int, qb: int, move: Move
) -> tuple[tuple, int]:
    """(objective, count imbalance) if the move were applied; no mutation."""
    wa = plan.weights[move.from_a] if move.from_a is not None else 0.0
    wb = plan.weights[move.from_b] if move.from_b is not None else 0.0
    loads = list(plan.loads)
    loads[qa] += wb - wa
    loads[qb] += wa - wb
    counts = list(plan.counts)
    shift = (0 if move.from_a is None else 1) - (0 if move.from_b is None else 1)
    counts[qa] -= shift
    counts[qb] += shift
    tallies = plan.label_tallies
    if plan.criterion is BalanceCriterion.LABEL_BALANCE:
        ta2, tb2 = _moved_tallies(plan, qa, qb, move.from_a, move.from_b)
        tallies = list(plan.label_tallies)  # type: ignore[arg-type]
        tallies[qa] = ta2
        tallies[qb] = tb2
    obj = _objective_of(plan.criterion, loads, counts, tallies)
    return obj, max(counts) - min(counts)


def _apply_move(plan: PartitionPlan, qa: int, qb: int, move: Move) -> None:
    def relocate(cid: int, src: int, dst: int) -> None:
        w = plan.weights[cid]
        plan.members[src].remove((w, cid))
        insort(plan.members[dst], (w, cid))
        plan.assignment[cid] = dst
        plan.loads[src] -= w
        plan.loads[dst] += w
        plan.counts[src] -= 1
        plan.counts[dst] += 1
        if plan.label_tallies is not None and plan.cluster_labels is not None:
            for name, k in plan.cluster_labels[cid].items():
                plan.label_tallies[src][name] = (
                    plan.label_tallies[src].get(name, 0) - k
                )
                plan.label_tallies[dst][name] = (
                    plan.label_tallies[dst].get(name, 0) + k
                )

    if move.from_a is not None:
        relocate(move.from_a, qa, qb)
    if move.from_b is not None:
        relocate(move.from_b, qb, qa)


def tabu_search(plan: PartitionPlan) -> PartitionPlan:
    """Descent over pairwise exchanges with tie-move diversification.

    Each round evaluates the best exchange of every partition pair and
    applies the globally best strictly-improving move. A move that only
    ties the objective is applied when it strictly reduces the
    cluster-count imbalance and its cluster pair is not among the last P
    applied moves (the tabu list); consecutive tie moves are capped at the
    cluster count, which together with strict descent guarantees
    termination. The result is never worse than the input plan.
    """
    plan = plan.copy()
    n_clusters = len(plan.assignment)
    tabu: deque[tuple[int, int]] = deque(maxlen=plan.p)
    consecutive_ties = 0
    current = objective(plan)

    while True:
        ranked = []
        for qa in range(plan.p):
            for qb in range(qa + 1, plan.p):
                move = best_exchange_between(plan, qa, qb)
                if move is None:
                    continue
                gobj, gcount = _global_after(plan, qa, qb, move)
                ranked.append((gobj, gcount, move.key(), qa, qb, move))
        if not ranked:
            break
        ranked.sort(key=lambda r: r[:5])
        count_imb = max(plan.counts) - min(plan.counts)
        applied = False
        for gobj, gcount, _, qa, qb, move in ranked:
            if gobj < current:
                _apply_move(plan, qa, qb, move)
                tabu.append(move.pair_key())
                consecutive_ties = 0
                current = gobj
                applied = True
                break
            if gobj > current:
                break
            if (
                consecutive_ties < n_clusters
                and gcount < count_imb
                and move.pair_key() not in tabu
            ):
                _apply_move(plan, qa, qb, move)
                tabu.append(move.pair_key())
                consecutive_ties += 1
                applied = True
                break
        if not applied:
            break
    return plan


def make_partitions(
    clusters: list[Cluster], p: int, criterion: BalanceCriterion
) -> PartitionPlan:
    """LPT initialization followed by tabu exchange search; deterministic."""
    plan = tabu_search(lpt_initial(clusters, p, criterion))
    if len(clusters) < p:
        warnings.warn(
            f"only {len(clusters)} cluster(s) for {p} partitions: separation "
            "forces empty partitions and an unbalanced split",
            ForcedImbalanceWarning,
            stacklevel=2,
        )
    return plan
