"""FASTA ingestion, alphabet inference and label tables.

Residues are uppercased on ingest so downstream k-mer hashing is
case-insensitive. Ambiguity codes are kept in the record; the sketching
stage skips k-mers that overlap them.
"""
from __future__ import annotations

import enum
import gzip
import io
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Union

from .errors import (
    ConflictingLabelError,
    DuplicateIdError,
    FastaFormatError,
    IllegalResidueError,
    LabelFormatError,
)


class Alphabet(enum.Enum):
    NUCLEOTIDE = "nucleotide"
    AMINO_ACID = "amino_acid"


# A/C/G/T/U/N plus the IUPAC ambiguity codes.
NUCLEOTIDE_CHARS = frozenset(b"ACGTUNRYSWKMBDHV")
# 20 standard residues plus B, Z, X, U, O and the stop symbol.
AMINO_ACID_CHARS = frozenset(b"ACDEFGHIKLMNPQRSTVWY" b"BZXUO*")

_GZIP_MAGIC = b"\x1f\x8b"

PathLike = Union[str, Path]


@dataclass(frozen=True, slots=True)
class SequenceRecord:
    """One FASTA entry: unique id, alphabet, uppercased residues."""

    id: str
    alphabet: Alphabet
    residues: bytes

    def __len__(self) -> int:
        return len(self.residues)


# Map from sequence id to its categorical label.
LabelTable = dict[str, str]


def infer_alphabet(residues: bytes) -> Alphabet:
    """Classify residues as nucleotide or amino acid.

    Nucleotide wins when every character is a nucleotide or IUPAC
    ambiguity code; this means short all-ACGT peptides are classified as
    nucleotide, which the ``alphabet`` config option can override.

    Raises:
        IllegalResidueError: a character fits neither alphabet.
    """
    if not residues:
        raise IllegalResidueError("cannot infer alphabet of empty sequence")
    chars = set(residues)
    if chars <= NUCLEOTIDE_CHARS:
        return Alphabet.NUCLEOTIDE
    if chars <= AMINO_ACID_CHARS:
        return Alphabet.AMINO_ACID
    bad = sorted(chars - (NUCLEOTIDE_CHARS | AMINO_ACID_CHARS))
    raise IllegalResidueError(
        "illegal residue characters: "
        + ", ".join(repr(chr(c)) for c in bad[:10])
    )


def _validate_residues(seq_id: str, residues: bytes, alphabet: Alphabet) -> None:
    allowed = (
        NUCLEOTIDE_CHARS if alphabet is Alphabet.NUCLEOTIDE else AMINO_ACID_CHARS
    )
    bad = set(residues) - allowed
    if bad:
        raise IllegalResidueError(
            f"record {seq_id!r}: illegal {alphabet.value} residues: "
            + ", ".join(repr(chr(c)) for c in sorted(bad)[:10])
        )


def _open_maybe_gzip(source: Union[PathLike, BinaryIO]) -> BinaryIO:
    """Open a path or wrap a binary stream, transparently gunzipping."""
    if isinstance(source, (str, Path)):
        raw: BinaryIO = open(source, "rb")
    else:
        raw = source
    buffered = raw if hasattr(raw, "peek") else io.BufferedReader(raw)  # type: ignore[arg-type]
    if buffered.peek(2)[:2] == _GZIP_MAGIC:
        return gzip.open(buffered, "rb")  # type: ignore[return-value]
    return buffered


def parse_fasta(
    source: Union[PathLike, BinaryIO],
    alphabet: Alphabet | None = None,
    seen_ids: set[str] | None = None,
) -> list[SequenceRecord]:
    """Parse one FASTA file (plain or gzip) into records, in file order.

    Args:
        source: path or binary stream.
        alphabet: force this alphabet instead of inferring per record.
        seen_ids: ids already taken by earlier files; updated in place so
            multi-file datasets enforce dataset-wide id uniqueness.

    Raises:
        FastaFormatError: malformed header or stray data before the first one.
        DuplicateIdError: an id occurs twice.
        IllegalResidueError: residues fit no alphabet (or not the forced one).
    """
    if seen_ids is None:
        seen_ids = set()
    records: list[SequenceRecord] = []
    own_handle = isinstance(source, (str, Path))
    fh = _open_maybe_gzip(source)

    seq_id: str | None = None
    chunks: list[bytes] = []

    def flush() -> None:
        if seq_id is None:
            return
        residues = b"".join(chunks).upper()
        if not residues:
            raise FastaFormatError(f"record {seq_id!r} has an empty sequence")
        ab = alphabet or infer_alphabet(residues)
        _validate_residues(seq_id, residues, ab)
        records.append(SequenceRecord(id=seq_id, alphabet=ab, residues=residues))

    try:
        for line in fh:
            line = line.rstrip(b"\r\n")
            if not line:
                continue
            if line.startswith(b">"):
                flush()
                header = line[1:].strip()
                if not header:
                    raise FastaFormatError("header line with empty id")
                seq_id = header.split()[0].decode("ascii", errors="replace")
                if seq_id in seen_ids:
                    raise DuplicateIdError(seq_id)
                seen_ids.add(seq_id)
                chunks = []
            else:
                if seq_id is None:
                    raise FastaFormatError(
                        "sequence data before the first '>' header"
                    )
                chunks.append(line)
        flush()
    finally:
        if own_handle:
            fh.close()
    return records


def parse_fasta_files(
    paths: Iterable[PathLike], alphabet: Alphabet | None = None
) -> list[SequenceRecord]:
    """Concatenate records from several FASTA files in argument order."""
    seen: set[str] = set()
    records: list[SequenceRecord] = []
    for path in paths:
        records.extend(parse_fasta(path, alphabet=alphabet, seen_ids=seen))
    return records


def write_fasta(records: Iterable[SequenceRecord], path: PathLike, width: int = 60) -> None:
    """Write records back out; re-parsing yields identical (id, residues)."""
    with open(path, "wb") as fh:
        for rec in records:
            fh.write(b">" + rec.id.encode("ascii") + b"\n")
            for i in range(0, len(rec.residues), width):
                fh.write(rec.residues[i : i + width] + b"\n")


def parse_labels(source: Union[PathLike, BinaryIO]) -> LabelTable:
    """Parse a two-column ``seq_id TAB label`` TSV into a label table.

    Lines starting with '#' are ignored. A repeated id with the same label
    is accepted; a repeated id with a different label is an error.
    """
    labels: LabelTable = {}
    own_handle = isinstance(source, (str, Path))
    fh = _open_maybe_gzip(source)
    try:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip(b"\r\n")
            if not line or line.startswith(b"#"):
                continue
            fields = line.split(b"\t")
            if len(fields) != 2:
                raise LabelFormatError(
                    f"line {lineno}: expected 2 tab-separated columns, got {len(fields)}"
                )
            seq_id = fields[0].decode("utf-8")
            label = fields[1].decode("utf-8")
            if seq_id in labels and labels[seq_id] != label:
                raise ConflictingLabelError(seq_id, labels[seq_id], label)
            labels[seq_id] = label
    finally:
        if own_handle:
            fh.close()
    return labels
