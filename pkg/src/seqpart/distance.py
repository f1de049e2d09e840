"""Sketch-based distance measures and the threshold-pruned edge list.

Five measures operate on sketch hash sets: Mash (via the merged bottom-s
Jaccard estimator when sketches are bottom-s MinHash, exact Jaccard
otherwise), plain Jaccard, cosine over retained-k-mer multiplicities,
Szymkiewicz-Simpson overlap, and inverse k-mer coverage.

No dense distance matrix is ever materialized: ``all_pairs_edges`` walks
the pair space in blocks and keeps only pairs below the threshold.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ._jit import njit, prange
from .errors import DataError, UsageError
from .sketch import KmerSketch, SketchKind, SketchScheme, SketchSet

__all__ = [
    "DistanceMeasure",
    "DistanceEdge",
    "EdgeList",
    "jaccard_estimate",
    "mash_distance",
    "jaccard_distance",
    "cosine_distance",
    "overlap_distance",
    "inv_coverage_distance",
    "pairwise_distance",
    "all_pairs_edges",
    "bulk_pair_distances",
    "write_edges_tsv",
]


class DistanceMeasure(enum.Enum):
    MASH = "mash"
    JACCARD = "jaccard"
    COSINE = "cosine"
    OVERLAP = "overlap"
    INV_COVERAGE = "invcov"


@dataclass(frozen=True, slots=True)
class DistanceEdge:
    """One kept pair: record indices i < j and their distance in [0, 1]."""

    i: int
    j: int
    d: float


@dataclass(slots=True)
class EdgeList:
    """Edges with d < epsilon, as parallel arrays sorted by (i, j)."""

    i: np.ndarray  # int64
    j: np.ndarray  # int64
    d: np.ndarray  # float64
    epsilon: float

    def __len__(self) -> int:
        return self.i.size

    def __iter__(self) -> Iterator[DistanceEdge]:
        for a, b, dist in zip(self.i.tolist(), self.j.tolist(), self.d.tolist()):
            yield DistanceEdge(a, b, dist)


# ---------------------------------------------------------------------------
# Scalar reference implementations. These are the semantics of record; the
# block kernels below must (and are tested to) agree bit-for-bit.


def _intersection(a: KmerSketch, b: KmerSketch) -> int:
    return int(np.intersect1d(a.hashes, b.hashes, assume_unique=True).size)


def jaccard_estimate(a: KmerSketch, b: KmerSketch, sketch_size: int | None = None) -> float:
    """Jaccard similarity of two sketches.

    With ``sketch_size`` s (bottom-s sketches), uses the merged estimator:
    X = the s smallest values of hashes(a) ∪ hashes(b), and the estimate is
    |X ∩ A ∩ B| / |X|. Without it, the exact |A ∩ B| / |A ∪ B| of the hash
    sets. Two empty sketches estimate 0.
    """
    la, lb = a.hashes.size, b.hashes.size
    if la == 0 and lb == 0:
        return 0.0
    if sketch_size is None:
        inter = _intersection(a, b)
        union = la + lb - inter
        return inter / union if union else 0.0
    merged = np.union1d(a.hashes, b.hashes)[:sketch_size]
    shared = np.intersect1d(a.hashes, b.hashes, assume_unique=True)
    num = int(np.searchsorted(shared, merged[-1], side="right"))
    return num / merged.size


def _mash_from_jaccard(j: float, k: int) -> float:
    """Mash distance -(1/k) ln(2j / (1+j)), capped to [0, 1]; j=0 maps to 1."""
    if j <= 0.0:
        return 1.0
    return float(min(1.0, -np.log(2.0 * j / (1.0 + j)) / k))


def mash_distance(
    a: KmerSketch, b: KmerSketch, k: int, sketch_size: int | None = None
) -> float:
    return _mash_from_jaccard(jaccard_estimate(a, b, sketch_size), k)


def jaccard_distance(a: KmerSketch, b: KmerSketch) -> float:
    la, lb = a.hashes.size, b.hashes.size
    inter = _intersection(a, b)
    union = la + lb - inter
    if union == 0:
        return 1.0
    return float(np.clip(1.0 - inter / union, 0.0, 1.0))


def overlap_distance(a: KmerSketch, b: KmerSketch) -> float:
    """Szymkiewicz-Simpson distance 1 - |A∩B| / min(|A|, |B|)."""
    smaller = min(a.hashes.size, b.hashes.size)
    if smaller == 0:
        return 1.0
    return float(np.clip(1.0 - _intersection(a, b) / smaller, 0.0, 1.0))


def inv_coverage_distance(a: KmerSketch, b: KmerSketch) -> float:
    """Inverse k-mer coverage distance 1 - |A∩B| / max(|A|, |B|)."""
    larger = max(a.hashes.size, b.hashes.size)
    if larger == 0:
        return 1.0
    return float(np.clip(1.0 - _intersection(a, b) / larger, 0.0, 1.0))


def cosine_distance(a: KmerSketch, b: KmerSketch) -> float:
    """1 minus the cosine of the multiplicity vectors over shared hash space."""
    if a.counts is None or b.counts is None:
        raise UsageError(
            "cosine distance needs k-mer multiplicities; "
            "use a minimizer or prefix sketch scheme"
        )
    if a.hashes.size == 0 or b.hashes.size == 0:
        return 1.0
    _, ia, ib = np.intersect1d(
        a.hashes, b.hashes, assume_unique=True, return_indices=True
    )
    dot = int(np.sum(a.counts[ia].astype(np.int64) * b.counts[ib].astype(np.int64)))
    na = float(np.sqrt(np.sum(a.counts.astype(np.int64) ** 2)))
    nb = float(np.sqrt(np.sum(b.counts.astype(np.int64) ** 2)))
    return float(np.clip(1.0 - dot / (na * nb), 0.0, 1.0))


def pairwise_distance(
    a: KmerSketch, b: KmerSketch, measure: DistanceMeasure, scheme: SketchScheme
) -> float:
    """Distance between two sketches built under ``scheme``."""
    if measure is DistanceMeasure.MASH:
        s = scheme.param if scheme.kind is SketchKind.MINHASH_BOTTOM_S else None
        return mash_distance(a, b, scheme.k, s)
    if measure is DistanceMeasure.JACCARD:
        return jaccard_distance(a, b)
    if measure is DistanceMeasure.COSINE:
        return cosine_distance(a, b)
    if measure is DistanceMeasure.OVERLAP:
        return overlap_distance(a, b)
    return inv_coverage_distance(a, b)


# ---------------------------------------------------------------------------
# Block kernels: per-pair sorted-set merges over flattened sketch arrays.
# Each pair writes only its own output slot, so results are independent of
# the thread count.


@njit(cache=True, parallel=True)
def _merge_pairs(flat, offs, lens, counts, use_counts, pi, pj, inter, dots):
    for t in prange(pi.size):
        pa = offs[pi[t]]
        ea = pa + lens[pi[t]]
        pb = offs[pj[t]]
        eb = pb + lens[pj[t]]
        shared = 0
        dot = np.int64(0)
        while pa < ea and pb < eb:
            ha = flat[pa]
            hb = flat[pb]
            if ha == hb:
                shared += 1
                if use_counts:
                    dot += counts[pa] * counts[pb]
                pa += 1
                pb += 1
            elif ha < hb:
                pa += 1
            else:
                pb += 1
        inter[t] = shared
        dots[t] = dot


@njit(cache=True, parallel=True)
def _bottom_s_pairs(flat, offs, lens, s, pi, pj, nums, dens):
    for t in prange(pi.size):
        pa = offs[pi[t]]
        ea = pa + lens[pi[t]]
        pb = offs[pj[t]]
        eb = pb + lens[pj[t]]
        union = 0
        shared = 0
        while union < s and (pa < ea or pb < eb):
            if pa < ea and pb < eb:
                ha = flat[pa]
                hb = flat[pb]
                if ha == hb:
                    shared += 1
                    pa += 1
                    pb += 1
                elif ha < hb:
                    pa += 1
                else:
                    pb += 1
            elif pa < ea:
                pa += 1
            else:
                pb += 1
            union += 1
        nums[t] = shared
        dens[t] = union


@dataclass(slots=True)
class _FlatSketches:
    flat: np.ndarray
    offs: np.ndarray
    lens: np.ndarray
    counts: np.ndarray  # int64, empty when the scheme keeps none
    norms: np.ndarray  # float64 count-vector norms (cosine)


def _flatten(sketch_set: SketchSet) -> _FlatSketches:
    sketches = sketch_set.sketches
    lens = np.array([s.hashes.size for s in sketches], dtype=np.int64)
    offs = np.concatenate(([0], np.cumsum(lens)[:-1])) if sketches else np.zeros(0, np.int64)
    flat = (
        np.concatenate([s.hashes for s in sketches])
        if sketches
        else np.zeros(0, np.uint64)
    )
    if sketch_set.scheme.kind.keeps_counts and sketches:
        counts = np.concatenate([s.counts for s in sketches]).astype(np.int64)
        sq = counts * counts
        csum = np.concatenate(([0], np.cumsum(sq)))
        ends = offs + lens
        norms = np.sqrt((csum[ends] - csum[offs]).astype(np.float64))
    else:
        counts = np.zeros(0, np.int64)
        norms = np.zeros(len(sketches), np.float64)
    return _FlatSketches(flat, offs.astype(np.int64), lens, counts, norms)


def _mash_from_jaccard_vec(j: np.ndarray, k: int) -> np.ndarray:
    with np.errstate(divide="ignore"):
        d = -np.log(2.0 * j / (1.0 + j)) / k
    return np.where(j > 0.0, np.minimum(d, 1.0), 1.0)


def _block_distances(
    fs: _FlatSketches,
    scheme: SketchScheme,
    measure: DistanceMeasure,
    pi: np.ndarray,
    pj: np.ndarray,
) -> np.ndarray:
    """Distances for an explicit block of (i, j) pairs."""
    if measure is DistanceMeasure.MASH and scheme.kind is SketchKind.MINHASH_BOTTOM_S:
        nums = np.empty(pi.size, np.int64)
        dens = np.empty(pi.size, np.int64)
        _bottom_s_pairs(fs.flat, fs.offs, fs.lens, scheme.param, pi, pj, nums, dens)
        with np.errstate(invalid="ignore"):
            j = np.where(dens > 0, nums / dens, 0.0)
        return _mash_from_jaccard_vec(j, scheme.k)

    inter = np.empty(pi.size, np.int64)
    dots = np.empty(pi.size, np.int64)
    use_counts = measure is DistanceMeasure.COSINE
    if use_counts and fs.counts.size == 0 and fs.flat.size > 0:
        raise UsageError(
            "cosine distance needs k-mer multiplicities; "
            "use a minimizer or prefix sketch scheme"
        )
    _merge_pairs(fs.flat, fs.offs, fs.lens, fs.counts, use_counts, pi, pj, inter, dots)

    la = fs.lens[pi]
    lb = fs.lens[pj]
    with np.errstate(invalid="ignore", divide="ignore"):
        if measure is DistanceMeasure.COSINE:
            denom = fs.norms[pi] * fs.norms[pj]
            d = np.where(denom > 0.0, 1.0 - dots / denom, 1.0)
        elif measure is DistanceMeasure.OVERLAP:
            smaller = np.minimum(la, lb)
            d = np.where(smaller > 0, 1.0 - inter / smaller, 1.0)
        elif measure is DistanceMeasure.INV_COVERAGE:
            larger = np.maximum(la, lb)
            d = np.where(larger > 0, 1.0 - inter / larger, 1.0)
        else:
            union = la + lb - inter
            j = np.where(union > 0, inter / union, 0.0)
            if measure is DistanceMeasure.MASH:
                return _mash_from_jaccard_vec(j, scheme.k)
            d = np.where(union > 0, 1.0 - j, 1.0)
    return np.clip(d, 0.0, 1.0)


def bulk_pair_distances(
    sketch_set: SketchSet, measure: DistanceMeasure, pi: np.ndarray, pj: np.ndarray
) -> np.ndarray:
    """Distances for arbitrary (i, j) index arrays; same math as the scalar ops."""
    fs = _flatten(sketch_set)
    return _block_distances(
        fs,
        sketch_set.scheme,
        measure,
        pi.astype(np.int64),
        pj.astype(np.int64),
    )


def all_pairs_edges(
    sketch_set: SketchSet,
    measure: DistanceMeasure,
    epsilon: float,
    invert: bool = False,
    pair_block: int = 4_000_000,
) -> EdgeList:
    """All pairs (i < j) with distance strictly below ``epsilon``.

    Output is sorted by (i, j) and independent of thread count. ``invert``
    replaces d with 1 - d before thresholding (the adversarial
    spread-similar-records baseline); the stored distance is the inverted
    one.
    """
    if not 0.0 < epsilon <= 1.0:
        raise UsageError(f"epsilon must be in (0, 1], got {epsilon}")
    n = len(sketch_set)
    fs = _flatten(sketch_set)
    out_i: list[np.ndarray] = []
    out_j: list[np.ndarray] = []
    out_d: list[np.ndarray] = []

    rows_per_block = max(1, pair_block // max(1, n))
    for i0 in range(0, n, rows_per_block):
        i1 = min(n, i0 + rows_per_block)
        sizes = np.arange(n - i0 - 1, n - i1 - 1, -1)
        if sizes.sum() <= 0:
            continue
        pi = np.repeat(np.arange(i0, i1, dtype=np.int64), sizes)
        pj = np.concatenate(
            [np.arange(i + 1, n, dtype=np.int64) for i in range(i0, i1)]
        )
        d = _block_distances(fs, sketch_set.scheme, measure, pi, pj)
        if invert:
            d = 1.0 - d
        keep = d < epsilon
        if keep.any():
            out_i.append(pi[keep])
            out_j.append(pj[keep])
            out_d.append(d[keep])

    if not out_i:
        empty = np.zeros(0, np.int64)
        return EdgeList(empty, empty.copy(), np.zeros(0, np.float64), epsilon)
    # blocks are generated in ascending (i, j) order already
    return EdgeList(
        np.concatenate(out_i), np.concatenate(out_j), np.concatenate(out_d), epsilon
    )


def write_edges_tsv(edges: EdgeList, ids: list[str], path) -> None:
    """Edge list export: ``id_i TAB id_j TAB distance``, 6 decimals, (i,j)-sorted."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a, b, dist in zip(edges.i.tolist(), edges.j.tolist(), edges.d.tolist()):
            fh.write(f"{ids[a]}\t{ids[b]}\t{dist:.6f}\n")


def check_measure_compatible(measure: DistanceMeasure, scheme: SketchScheme) -> None:
    if measure is DistanceMeasure.COSINE and not scheme.kind.keeps_counts:
        raise UsageError(
            "cosine distance needs k-mer multiplicities; "
            "use a minimizer or prefix sketch scheme"
        )
