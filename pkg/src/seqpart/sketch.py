"""K-mer hashing and sketch construction.

Every sequence is reduced to a sub-sampled set of 64-bit k-mer hashes
under one of three schemes:

* bottom-s MinHash: the s smallest distinct hashes,
* minimizers: the minimal-hash k-mer of each window of w consecutive
  k-mers, kept with multiplicities,
* prefix sampling: k-mers whose first p residues are all 'A', kept with
  multiplicities.

The hash function is fixed and documented (see :func:`hash_kmer`) so
sketches are bit-identical across platforms and runs for a given seed.
"""
from __future__ import annotations

import enum
import struct
import warnings
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Sequence, Union

import numpy as np

from .errors import DataError, SchemeMismatchError, UsageError
from .sequence_io import Alphabet, PathLike, SequenceRecord

MASK64 = 0xFFFFFFFFFFFFFFFF
# 2^64 / golden ratio, forced odd: the multiplier of the byte-mixing chain.
HASH_MULT = 0x9E3779B97F4A7C15
# splitmix64 finalizer constants (Steele/Vigna).
_FIN1 = 0xBF58476D1CE4E5B9
_FIN2 = 0x94D049BB133111EB

DEFAULT_SEED = 42

# Residues that may appear inside a hashed k-mer. 'U' is folded to 'T'
# before hashing so RNA input sketches like DNA. B/Z/X and '*' are treated
# as ambiguity codes and skipped, as are the IUPAC nucleotide wildcards.
_NUC_VALID = b"ACGT"
_AA_VALID = b"ACDEFGHIKLMNPQRSTVWYUO"

_COMPLEMENT = {65: 84, 67: 71, 71: 67, 84: 65}  # A<->T, C<->G


class EmptySketchWarning(UserWarning):
    """A sequence yielded no valid k-mers (too short or all-ambiguous)."""


class SketchKind(enum.Enum):
    MINHASH_BOTTOM_S = 0
    MINIMIZER = 1
    PREFIX = 2

    @property
    def keeps_counts(self) -> bool:
        return self is not SketchKind.MINHASH_BOTTOM_S


@dataclass(frozen=True, slots=True)
class SketchScheme:
    """Sub-sampling scheme: kind, k-mer size, scheme parameter, strand mode.

    ``param`` is the sketch size s for bottom-s MinHash, the window length
    w for minimizers, and the prefix length p for prefix sampling.
    """

    kind: SketchKind
    k: int
    param: int
    canonical: bool = True
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.k < 1:
            raise UsageError(f"k-mer size must be >= 1, got {self.k}")
        if self.kind is SketchKind.PREFIX:
            if not 0 <= self.param <= self.k:
                raise UsageError(
                    f"prefix length must be in [0, k], got {self.param}"
                )
        elif self.param < 1:
            raise UsageError(
                f"scheme parameter must be >= 1, got {self.param}"
            )
        if not 0 <= self.seed <= MASK64:
            raise UsageError("hash seed must fit in 64 bits")

    def for_alphabet(self, alphabet: Alphabet) -> "SketchScheme":
        """Canonical k-mers are meaningless for amino acids; drop the flag."""
        if alphabet is Alphabet.AMINO_ACID and self.canonical:
            return SketchScheme(self.kind, self.k, self.param, False, self.seed)
        return self


@dataclass(slots=True)
class KmerSketch:
    """Sub-sampled k-mer hashes of one record.

    ``hashes`` is strictly increasing. ``counts`` (multiplicity of each
    retained k-mer) is present exactly for schemes that keep it.
    ``total_kmers`` counts valid k-mer positions before sub-sampling.
    """

    record_index: int
    hashes: np.ndarray  # uint64, sorted strictly ascending
    counts: np.ndarray | None  # uint32, aligned with hashes
    total_kmers: int

    def __len__(self) -> int:
        return self.hashes.size


@dataclass(slots=True)
class SketchSet:
    """Sketches of a whole dataset plus the scheme that produced them."""

    scheme: SketchScheme
    ids: list[str]
    sketches: list[KmerSketch]

    def __len__(self) -> int:
        return len(self.sketches)


def hash_kmer(kmer: bytes, seed: int = DEFAULT_SEED) -> int:
    """Hash a k-mer to a 64-bit value, identically on every platform.

    The state starts from the seed xored with ``len(kmer) * HASH_MULT``,
    each byte is folded in FNV-1a style (``x = (x ^ b) * HASH_MULT``), and
    the result passes through the splitmix64 avalanche finalizer, so every
    output bit is unbiased. The seed perturbs all outputs.
    """
    x = (seed ^ (len(kmer) * HASH_MULT)) & MASK64
    for b in kmer:
        x = ((x ^ b) * HASH_MULT) & MASK64
    x ^= x >> 30
    x = (x * _FIN1) & MASK64
    x ^= x >> 27
    x = (x * _FIN2) & MASK64
    x ^= x >> 31
    return x


def reverse_complement(kmer: bytes) -> bytes:
    try:
        return bytes(_COMPLEMENT[b] for b in reversed(kmer))
    except KeyError as exc:
        raise DataError(
            f"cannot complement ambiguous base {chr(exc.args[0])!r}"
        ) from None


def canonical_kmer(kmer: bytes) -> bytes:
    """Lexicographic minimum of an A/C/G/T k-mer and its reverse complement."""
    rc = reverse_complement(kmer)
    return kmer if kmer <= rc else rc


# ---------------------------------------------------------------------------
# Vectorized internals. These must agree bit-for-bit with hash_kmer /
# canonical_kmer; the test suite cross-checks them.

_U = np.uint64


def _window_hashes(seq: np.ndarray, k: int, seed: int) -> np.ndarray:
    """hash_kmer of every length-k window of a byte array, vectorized."""
    n = seq.size - k + 1
    if n <= 0:
        return np.empty(0, dtype=np.uint64)
    x = np.full(n, (seed ^ (k * HASH_MULT & MASK64)) & MASK64, dtype=np.uint64)
    s64 = seq.astype(np.uint64)
    for j in range(k):
        x = (x ^ s64[j : j + n]) * _U(HASH_MULT)
    x ^= x >> _U(30)
    x *= _U(_FIN1)
    x ^= x >> _U(27)
    x *= _U(_FIN2)
    x ^= x >> _U(31)
    return x


def _complement_bytes(seq: np.ndarray) -> np.ndarray:
    table = np.arange(256, dtype=np.uint8)
    for a, b in _COMPLEMENT.items():
        table[a] = b
    return table[seq]


def _forward_is_canonical(seq: np.ndarray, comp: np.ndarray, k: int) -> np.ndarray:
    """Per window: does the forward k-mer lexicographically precede its rc?

    Compares column by column; ties (palindromes) resolve to forward, whose
    hash equals the reverse complement's anyway.
    """
    n = seq.size - k + 1
    fwd_min = np.ones(n, dtype=bool)
    undecided = np.ones(n, dtype=bool)
    for j in range(k):
        f = seq[j : j + n]
        r = comp[k - 1 - j : k - 1 - j + n]
        newly = undecided & (f != r)
        if newly.any():
            fwd_min[newly] = f[newly] < r[newly]
            undecided &= ~newly
            if not undecided.any():
                break
    return fwd_min


def _valid_positions(codes_ok: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask over k-mer start positions with no invalid residue."""
    n = codes_ok.size - k + 1
    if n <= 0:
        return np.zeros(0, dtype=bool)
    bad = (~codes_ok).astype(np.int32)
    csum = np.concatenate(([0], np.cumsum(bad)))
    return (csum[k:] - csum[:-k]) == 0


def _minimizer_positions(hashes: np.ndarray, valid: np.ndarray, w: int) -> np.ndarray:
    """Positions retained by windowed min-hash selection, leftmost on ties.

    Windows slide over each maximal run of consecutive valid positions; a
    run shorter than the window contributes its single overall minimum.
    """
    idx = np.flatnonzero(valid)
    if idx.size == 0:
        return np.empty(0, dtype=np.int64)
    breaks = np.flatnonzero(np.diff(idx) > 1)
    run_bounds = np.concatenate(([0], breaks + 1, [idx.size]))
    selected: list[np.ndarray] = []
    for r in range(run_bounds.size - 1):
        a = int(idx[run_bounds[r]])
        m = int(run_bounds[r + 1] - run_bounds[r])
        run = hashes[a : a + m]
        if m <= w:
            selected.append(np.array([a + int(np.argmin(run))], dtype=np.int64))
        else:
            windows = np.lib.stride_tricks.sliding_window_view(run, w)
            offsets = windows.argmin(axis=1)
            pos = a + np.arange(m - w + 1, dtype=np.int64) + offsets
            selected.append(np.unique(pos))
    return np.unique(np.concatenate(selected))


def _prefix_mask(
    seq: np.ndarray, comp: np.ndarray, fwd_min: np.ndarray | None, k: int, p: int
) -> np.ndarray:
    """Per window: do the first p residues of the (canonical) k-mer equal 'A'?"""
    n = seq.size - k + 1
    mask = np.ones(n, dtype=bool)
    a = np.uint8(ord("A"))
    for j in range(p):
        f = seq[j : j + n]
        if fwd_min is None:
            mask &= f == a
        else:
            r = comp[k - 1 - j : k - 1 - j + n]
            mask &= np.where(fwd_min, f, r) == a
        if not mask.any():
            break
    return mask


def sketch_sequence(record: SequenceRecord, scheme: SketchScheme,
                    record_index: int = 0) -> KmerSketch:
    """Build the k-mer hash sketch of one record under ``scheme``.

    K-mers overlapping ambiguity codes are skipped. A record shorter than
    k (or with no valid k-mer) yields an empty sketch and a warning rather
    than an error, so that datasets with short records still partition;
    such records sit at distance 1 from everything.
    """
    scheme = scheme.for_alphabet(record.alphabet)
    seq = np.frombuffer(record.residues, dtype=np.uint8).copy()
    if record.alphabet is Alphabet.NUCLEOTIDE:
        seq[seq == ord("U")] = ord("T")
        valid_chars = _NUC_VALID
    else:
        valid_chars = _AA_VALID
    ok = np.isin(seq, np.frombuffer(valid_chars, dtype=np.uint8))

    k = scheme.k
    valid = _valid_positions(ok, k)
    total = int(valid.sum())
    if total == 0:
        warnings.warn(
            f"record {record.id!r}: no valid k-mer of length {k}; empty sketch",
            EmptySketchWarning,
            stacklevel=2,
        )
        counts = np.empty(0, np.uint32) if scheme.kind.keeps_counts else None
        return KmerSketch(record_index, np.empty(0, np.uint64), counts, 0)

    fwd_min = None
    comp = None
    hashes = _window_hashes(seq, k, scheme.seed)
    if scheme.canonical:
        comp = _complement_bytes(seq)
        rc_hashes = _window_hashes(comp[::-1], k, scheme.seed)[::-1]
        fwd_min = _forward_is_canonical(seq, comp, k)
        hashes = np.where(fwd_min, hashes, rc_hashes)

    if scheme.kind is SketchKind.MINHASH_BOTTOM_S:
        distinct = np.unique(hashes[valid])
        return KmerSketch(record_index, distinct[: scheme.param], None, total)

    if scheme.kind is SketchKind.MINIMIZER:
        pos = _minimizer_positions(hashes, valid, scheme.param)
        kept = hashes[pos]
    else:  # PREFIX
        pmask = _prefix_mask(seq, comp, fwd_min, k, scheme.param)
        kept = hashes[valid & pmask]

    if kept.size == 0:
        warnings.warn(
            f"record {record.id!r}: scheme retained no k-mers; empty sketch",
            EmptySketchWarning,
            stacklevel=2,
        )
        return KmerSketch(
            record_index, np.empty(0, np.uint64), np.empty(0, np.uint32), total
        )
    uniq, counts = np.unique(kept, return_counts=True)
    return KmerSketch(record_index, uniq, counts.astype(np.uint32), total)


def sketch_records(
    records: Sequence[SequenceRecord], scheme: SketchScheme
) -> SketchSet:
    """Sketch every record; results are gathered by record index."""
    if records:
        scheme = scheme.for_alphabet(records[0].alphabet)
    sketches = [
        sketch_sequence(rec, scheme, record_index=i)
        for i, rec in enumerate(records)
    ]
    return SketchSet(scheme, [r.id for r in records], sketches)


# ---------------------------------------------------------------------------
# Persistence: binary sketch file, magic "SSKC", version 1, little-endian.
# Header: kind u8, k u16, param u32, canonical u8, seed u64. Per record:
# id length u16 + id bytes + total_kmers u64 + hash count u32 + sorted u64
# hashes (+ u32 counts for schemes that keep multiplicities).

_MAGIC = b"SSKC"
_VERSION = 1
_HEADER = struct.Struct("<BHIBQ")
_REC_FIXED = struct.Struct("<QI")


def write_sketch_file(sketch_set: SketchSet, dest: Union[PathLike, BinaryIO]) -> None:
    fh: BinaryIO
    own = isinstance(dest, (str, bytes)) or hasattr(dest, "__fspath__")
    fh = open(dest, "wb") if own else dest  # type: ignore[arg-type]
    try:
        sch = sketch_set.scheme
        fh.write(_MAGIC)
        fh.write(bytes([_VERSION]))
        fh.write(
            _HEADER.pack(
                sch.kind.value, sch.k, sch.param, int(sch.canonical), sch.seed
            )
        )
        for seq_id, sk in zip(sketch_set.ids, sketch_set.sketches):
            ident = seq_id.encode("utf-8")
            fh.write(struct.pack("<H", len(ident)))
            fh.write(ident)
            fh.write(_REC_FIXED.pack(sk.total_kmers, sk.hashes.size))
            fh.write(sk.hashes.astype("<u8").tobytes())
            if sch.kind.keeps_counts:
                fh.write(sk.counts.astype("<u4").tobytes())
    finally:
        if own:
            fh.close()


def read_sketch_file(source: Union[PathLike, BinaryIO]) -> SketchSet:
    own = isinstance(source, (str, bytes)) or hasattr(source, "__fspath__")
    fh: BinaryIO = open(source, "rb") if own else source  # type: ignore[arg-type]
    try:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise DataError("not a sketch file (bad magic)")
        version = fh.read(1)
        if version != bytes([_VERSION]):
            raise DataError(f"unsupported sketch file version {version!r}")
        kind_v, k, param, canonical, seed = _HEADER.unpack(fh.read(_HEADER.size))
        scheme = SketchScheme(SketchKind(kind_v), k, param, bool(canonical), seed)
        ids: list[str] = []
        sketches: list[KmerSketch] = []
        index = 0
        while True:
            raw = fh.read(2)
            if not raw:
                break
            (id_len,) = struct.unpack("<H", raw)
            seq_id = fh.read(id_len).decode("utf-8")
            total, n = _REC_FIXED.unpack(fh.read(_REC_FIXED.size))
            hashes = np.frombuffer(fh.read(8 * n), dtype="<u8").astype(np.uint64)
            counts = None
            if scheme.kind.keeps_counts:
                counts = np.frombuffer(fh.read(4 * n), dtype="<u4").astype(np.uint32)
            ids.append(seq_id)
            sketches.append(KmerSketch(index, hashes, counts, total))
            index += 1
        return SketchSet(scheme, ids, sketches)
    finally:
        if own:
            fh.close()


def write_sketch_tsv(sketch_set: SketchSet, path: PathLike) -> None:
    """Lossless text export for debugging, one row per record."""
    sch = sketch_set.scheme
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            f"#scheme\tkind={sch.kind.name.lower()}\tk={sch.k}\t"
            f"param={sch.param}\tcanonical={int(sch.canonical)}\tseed={sch.seed}\n"
        )
        for seq_id, sk in zip(sketch_set.ids, sketch_set.sketches):
            hashes = ",".join(str(h) for h in sk.hashes.tolist()) or "-"
            if sk.counts is not None:
                counts = ",".join(str(c) for c in sk.counts.tolist()) or "-"
            else:
                counts = "-"
            fh.write(f"{seq_id}\t{sk.total_kmers}\t{hashes}\t{counts}\n")


def require_same_scheme(a: SketchScheme, b: SketchScheme) -> None:
    if a != b:
        raise SchemeMismatchError(f"sketch schemes differ: {a} vs {b}")
