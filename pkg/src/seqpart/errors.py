"""Exception hierarchy shared across the pipeline.

Exit-code mapping used by the CLI: usage errors exit 1, data errors exit 2,
anything else exits 3.
"""


class SeqPartError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 3


class UsageError(SeqPartError):
    """Invalid configuration or incompatible parameter combination."""

    exit_code = 1


class DataError(SeqPartError):
    """Malformed or inconsistent input data."""

    exit_code = 2


class FastaFormatError(DataError):
    """Structurally invalid FASTA input."""


class DuplicateIdError(DataError):
    """The same sequence id appears more than once in the dataset."""

    def __init__(self, seq_id: str):
        super().__init__(f"duplicate sequence id {seq_id!r}")
        self.seq_id = seq_id


class IllegalResidueError(DataError):
    """A residue is outside both the nucleotide and amino-acid alphabets."""


class LabelFormatError(DataError):
    """Malformed label table."""


class ConflictingLabelError(DataError):
    """One sequence id is mapped to two different labels."""

    def __init__(self, seq_id: str, first: str, second: str):
        super().__init__(
            f"conflicting labels for {seq_id!r}: {first!r} vs {second!r}"
        )
        self.seq_id = seq_id


class MissingLabelError(DataError):
    """A sequence has no label but the selected criterion needs one."""


class SchemeMismatchError(UsageError):
    """Sketches built under different schemes were combined."""


class UnknownPresetError(UsageError):
    def __init__(self, name: str):
        super().__init__(f"unknown preset {name!r}")
        self.name = name
