import gzip
import io

import pytest
from hypothesis import given, strategies as st

from conftest import nt_record
from seqpart.errors import (
    ConflictingLabelError,
    DuplicateIdError,
    FastaFormatError,
    IllegalResidueError,
    LabelFormatError,
)
from seqpart.sequence_io import (
    Alphabet,
    infer_alphabet,
    parse_fasta,
    parse_fasta_files,
    parse_labels,
    write_fasta,
)


def parse_bytes(data: bytes, **kwargs):
    return parse_fasta(io.BytesIO(data), **kwargs)


class TestParseFasta:
    def test_single_record_case_folded(self):
        records = parse_bytes(b">s1\nacgt\n")
        assert len(records) == 1
        assert records[0].id == "s1"
        assert records[0].alphabet is Alphabet.NUCLEOTIDE
        assert records[0].residues == b"ACGT"

    def test_duplicate_id_rejected(self):
        with pytest.raises(DuplicateIdError):
            parse_bytes(b">a\nACGT\n>a\nTTTT\n")

    def test_amino_acid_inference(self):
        records = parse_bytes(b">p1\nMKV*\n")
        assert records[0].alphabet is Alphabet.AMINO_ACID
        assert records[0].residues == b"MKV*"

    def test_multiline_sequence_and_id_token(self):
        records = parse_bytes(b">seq7 description here\nACGT\nACGT\n")
        assert records[0].id == "seq7"
        assert records[0].residues == b"ACGTACGT"

    def test_empty_sequence_rejected(self):
        with pytest.raises(FastaFormatError):
            parse_bytes(b">a\n>b\nACGT\n")

    def test_empty_header_rejected(self):
        with pytest.raises(FastaFormatError):
            parse_bytes(b">\nACGT\n")

    def test_data_before_header_rejected(self):
        with pytest.raises(FastaFormatError):
            parse_bytes(b"ACGT\n>a\nACGT\n")

    def test_illegal_residues_rejected(self):
        with pytest.raises(IllegalResidueError):
            parse_bytes(b">a\nAC!GT\n")

    def test_forced_alphabet_validates(self):
        with pytest.raises(IllegalResidueError):
            parse_bytes(b">a\nMKVE\n", alphabet=Alphabet.NUCLEOTIDE)

    def test_gzip_input(self, tmp_path):
        path = tmp_path / "in.fa.gz"
        path.write_bytes(gzip.compress(b">g1\nACGT\n"))
        records = parse_fasta(path)
        assert [r.id for r in records] == ["g1"]

    def test_order_preserved(self):
        data = b"".join(f">s{i}\nAC\n".encode() for i in range(20))
        records = parse_bytes(data)
        assert [r.id for r in records] == [f"s{i}" for i in range(20)]

    def test_multi_file_concatenation_and_cross_file_duplicates(self, tmp_path):
        a = tmp_path / "a.fa"
        b = tmp_path / "b.fa"
        a.write_bytes(b">x\nAC\n")
        b.write_bytes(b">y\nGT\n")
        records = parse_fasta_files([b, a])
        assert [r.id for r in records] == ["y", "x"]
        dup = tmp_path / "dup.fa"
        dup.write_bytes(b">x\nTT\n")
        with pytest.raises(DuplicateIdError):
            parse_fasta_files([a, dup])


class TestInferAlphabet:
    @pytest.mark.parametrize(
        "residues,expected",
        [
            (b"ACGTN", Alphabet.NUCLEOTIDE),
            (b"MKLV", Alphabet.AMINO_ACID),
            # E/F/I/L/P/Q are outside every IUPAC nucleotide code
            (b"ACDEFGHIKLMNPQRSTVWY", Alphabet.AMINO_ACID),
            (b"ACGU", Alphabet.NUCLEOTIDE),
            (b"RYSWKMBDHV", Alphabet.NUCLEOTIDE),
        ],
    )
    def test_classification(self, residues, expected):
        assert infer_alphabet(residues) is expected

    def test_illegal_everywhere(self):
        with pytest.raises(IllegalResidueError):
            infer_alphabet(b"ACGJ")  # J fits neither alphabet


class TestLabels:
    def test_basic(self):
        assert parse_labels(io.BytesIO(b"s1\tcytoplasm\n")) == {"s1": "cytoplasm"}

    def test_idempotent_duplicate(self):
        assert parse_labels(io.BytesIO(b"s1\ta\ns1\ta\n")) == {"s1": "a"}

    def test_conflicting_label(self):
        with pytest.raises(ConflictingLabelError):
            parse_labels(io.BytesIO(b"s1\ta\ns1\tb\n"))

    def test_comments_and_column_count(self):
        assert parse_labels(io.BytesIO(b"# header\ns1\tx\n")) == {"s1": "x"}
        with pytest.raises(LabelFormatError):
            parse_labels(io.BytesIO(b"s1\ta\tb\n"))

    def test_labels_verbatim(self):
        table = parse_labels(io.BytesIO(b"s1\tCell membrane \n"))
        assert table["s1"] == "Cell membrane "


@given(
    st.lists(
        st.tuples(
            st.text(
                alphabet=st.characters(
                    min_codepoint=33, max_codepoint=126, exclude_characters=">"
                ),
                min_size=1,
                max_size=12,
            ),
            st.text(alphabet="ACGT", min_size=1, max_size=80),
        ),
        min_size=1,
        max_size=12,
        unique_by=lambda t: t[0],
    )
)
def test_fasta_round_trip(tmp_path_factory, entries):
    """Writing records and re-parsing them yields identical (id, residues)."""
    records = [nt_record(i, s.encode()) for i, s in entries]
    path = tmp_path_factory.mktemp("rt") / "out.fa"
    write_fasta(records, path)
    back = parse_fasta(path)
    assert [(r.id, r.residues) for r in back] == [
        (r.id, r.residues) for r in records
    ]


from conftest import nt_record  # noqa: E402
