import numpy as np
import pytest

from seqpart.sequence_io import Alphabet, SequenceRecord
from seqpart.sketch import KmerSketch

ACGT = np.frombuffer(b"ACGT", dtype=np.uint8)


def random_dna(rng: np.random.Generator, length: int) -> bytes:
    return rng.choice(ACGT, size=length).tobytes()


def mutate(rng: np.random.Generator, seq: bytes, n_sites: int) -> bytes:
    """Point-mutate exactly n_sites distinct positions to a different base."""
    arr = np.frombuffer(seq, dtype=np.uint8).copy()
    sites = rng.choice(arr.size, size=n_sites, replace=False)
    for pos in sites:
        choices = ACGT[ACGT != arr[pos]]
        arr[pos] = rng.choice(choices)
    return arr.tobytes()


def nt_record(seq_id: str, residues: bytes) -> SequenceRecord:
    return SequenceRecord(id=seq_id, alphabet=Alphabet.NUCLEOTIDE, residues=residues)


def make_sketch(idx: int, hashes, counts=None, total: int | None = None) -> KmerSketch:
    h = np.asarray(sorted(set(hashes)), dtype=np.uint64)
    c = None if counts is None else np.asarray(counts, dtype=np.uint32)
    return KmerSketch(idx, h, c, total if total is not None else h.size)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240521)
