"""End-to-end orchestration: config, the three pipeline stages, artifacts.

The pipeline is parse -> sketch -> edge list -> clusters -> partitions.
Every stage is deterministic for a fixed config, including across thread
counts, so reruns reproduce output files byte for byte.
"""
from __future__ import annotations

import enum
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import _jit
from .cluster import (
    Cluster,
    ClusteringParams,
    HobohmOrder,
    clusters_from_pipeline,
    write_clusters_tsv,
)
from .distance import (
    DistanceMeasure,
    all_pairs_edges,
    check_measure_compatible,
    write_edges_tsv,
)
from .errors import UnknownPresetError, UsageError
from .partition import BalanceCriterion, PartitionPlan, make_partitions, objective
from .sequence_io import (
    Alphabet,
    LabelTable,
    SequenceRecord,
    parse_fasta_files,
    parse_labels,
    write_fasta,
)
from .sketch import (
    DEFAULT_SEED,
    SketchKind,
    SketchScheme,
    sketch_records,
    write_sketch_file,
)


class Emit(enum.Enum):
    PARTITIONS_TSV = "partitions"
    CLUSTERS_TSV = "clusters"
    EDGES_TSV = "edges"
    SKETCH_FILE = "sketch"
    PARTITION_FASTA = "fasta"


DEFAULT_EMIT = frozenset({Emit.PARTITIONS_TSV, Emit.CLUSTERS_TSV})


@dataclass(slots=True)
class PipelineConfig:
    inputs: list[str]
    epsilon: float
    partitions: int
    scheme: SketchScheme = SketchScheme(SketchKind.MINHASH_BOTTOM_S, 16, 1024)
    measure: DistanceMeasure = DistanceMeasure.MASH
    criterion: BalanceCriterion = BalanceCriterion.SIZE
    alphabet: Alphabet | None = None  # None = infer per record
    labels_path: str | None = None
    hobohm_threshold: float | None = None
    hobohm_order: HobohmOrder = HobohmOrder.LONGEST_FIRST
    seed: int = DEFAULT_SEED
    threads: int = 1
    output_dir: str = "."
    emit: frozenset[Emit] = DEFAULT_EMIT
    invert_distances: bool = False


@dataclass(slots=True)
class PipelineReport:
    n_records: int
    n_clusters: int
    partitions: int
    objective: tuple
    stage_seconds: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    n_edges: int = -1  # -1 when the stage was skipped (Hobohm path)
    empty_sketches: int = 0

    def lines(self) -> list[str]:
        out = [
            f"records\t{self.n_records}",
            f"clusters\t{self.n_clusters}",
            f"partitions\t{self.partitions}",
            "objective\t" + ",".join(f"{v:g}" for v in self.objective),
        ]
        if self.n_edges >= 0:
            out.append(f"edges\t{self.n_edges}")
        if self.empty_sketches:
            out.append(f"empty_sketches\t{self.empty_sketches}")
        for stage, secs in self.stage_seconds.items():
            out.append(f"time_{stage}\t{secs:.3f}s")
        for w in self.warnings:
            out.append(f"warning\t{w}")
        for path in self.outputs:
            out.append(f"wrote\t{path}")
        return out


# Named parameter presets: (scheme kind, k, param, default measure).
# protein/gene bottom-s sketches use the published sketch size 1048.
_PRESETS: dict[str, tuple[SketchKind, int, int, DistanceMeasure]] = {
    "protein-mash": (SketchKind.MINHASH_BOTTOM_S, 6, 1048, DistanceMeasure.MASH),
    "gene-mash": (SketchKind.MINHASH_BOTTOM_S, 8, 1048, DistanceMeasure.MASH),
    "gene-cosine": (SketchKind.MINIMIZER, 8, 5, DistanceMeasure.COSINE),
    "genome-mash": (SketchKind.MINHASH_BOTTOM_S, 19, 4096, DistanceMeasure.MASH),
    "genome-minimizer": (SketchKind.MINIMIZER, 18, 16, DistanceMeasure.COSINE),
}

PRESET_NAMES = tuple(_PRESETS)


def preset(name: str, seed: int = DEFAULT_SEED, canonical: bool = True) -> tuple[SketchScheme, DistanceMeasure]:
    """Named (scheme, measure) presets for common data types."""
    try:
        kind, k, param, measure = _PRESETS[name]
    except KeyError:
        raise UnknownPresetError(name) from None
    return SketchScheme(kind, k, param, canonical, seed), measure


def validate_config(config: PipelineConfig, alphabet: Alphabet) -> PipelineConfig:
    """Resolve the alphabet-dependent invariants; returns the adjusted config."""
    if not 0.0 < config.epsilon <= 1.0:
        raise UsageError(f"epsilon must be in (0, 1], got {config.epsilon}")
    if config.partitions < 2:
        raise UsageError(f"need at least 2 partitions, got {config.partitions}")
    if config.threads < 1:
        raise UsageError("threads must be >= 1")
    if alphabet is Alphabet.AMINO_ACID:
        if config.measure is not DistanceMeasure.MASH:
            raise UsageError(
                "amino-acid data supports only the mash distance"
            )
        if config.scheme.canonical:
            config = replace(
                config, scheme=config.scheme.for_alphabet(alphabet)
            )
    check_measure_compatible(config.measure, config.scheme)
    if (
        config.criterion is BalanceCriterion.LABEL_BALANCE
        and config.labels_path is None
    ):
        raise UsageError("label-balance criterion requires --labels")
    return config


def dataset_alphabet(records: list[SequenceRecord]) -> Alphabet:
    """One alphabet for the whole dataset. Any amino-acid record promotes
    the dataset (every nucleotide string is also a valid amino-acid
    string), mirroring how mixed inference is resolved."""
    if any(r.alphabet is Alphabet.AMINO_ACID for r in records):
        return Alphabet.AMINO_ACID
    return Alphabet.NUCLEOTIDE


def emit_partitions(
    plan: PartitionPlan,
    clusters: list[Cluster],
    ids: list[str],
    path,
) -> None:
    """Partition table: ``#sequence TAB cluster TAB partition`` header, one
    row per record in input order, LF endings."""
    cluster_of: dict[int, int] = {}
    for cluster in clusters:
        for m in cluster.members:
            cluster_of[m] = cluster.cluster_id
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("#sequence\tcluster\tpartition\n")
        for idx, seq_id in enumerate(ids):
            cid = cluster_of[idx]
            fh.write(f"{seq_id}\t{cid}\t{plan.assignment[cid]}\n")


def emit_partition_fastas(
    plan: PartitionPlan,
    clusters: list[Cluster],
    records: list[SequenceRecord],
    out_dir: Path,
) -> list[Path]:
    partition_of: dict[int, int] = {}
    for cluster in clusters:
        for m in cluster.members:
            partition_of[m] = plan.assignment[cluster.cluster_id]
    paths = []
    for q in range(plan.p):
        recs = [r for i, r in enumerate(records) if partition_of[i] == q]
        path = out_dir / f"part_{q}.fasta"
        write_fasta(recs, path)
        paths.append(path)
    return paths


def run_pipeline(config: PipelineConfig) -> PipelineReport:
    """Execute parse -> sketch -> edges -> clusters -> partitions and write
    the requested artifacts into the output directory."""
    _jit.set_threads(config.threads)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stage_seconds: dict[str, float] = {}
    collected: list[str] = []

    def timed(stage: str, fn):
        t0 = time.perf_counter()
        result = fn()
        stage_seconds[stage] = time.perf_counter() - t0
        return result

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")

        records = timed(
            "parse", lambda: parse_fasta_files(config.inputs, config.alphabet)
        )
        if not records:
            raise UsageError("no input records")
        alphabet = config.alphabet or dataset_alphabet(records)
        if config.alphabet is None and alphabet is Alphabet.AMINO_ACID:
            records = [
                replace(r, alphabet=alphabet)
                if r.alphabet is not alphabet
                else r
                for r in records
            ]
        config = validate_config(config, alphabet)
        scheme = replace(
            config.scheme.for_alphabet(alphabet), seed=config.seed
        )

        labels: LabelTable | None = None
        if config.labels_path is not None:
            labels = parse_labels(config.labels_path)

        sketch_set = timed("sketch", lambda: sketch_records(records, scheme))

        params = ClusteringParams(
            epsilon=config.epsilon,
            hobohm_threshold=config.hobohm_threshold,
            hobohm_order=config.hobohm_order,
        )
        if config.invert_distances:
            warnings.warn(
                "distance inversion is a research baseline that concentrates "
                "similar records into different partitions",
                UserWarning,
                stacklevel=1,
            )

        edges = None
        if config.hobohm_threshold is None or Emit.EDGES_TSV in config.emit:
            edges = timed(
                "distances",
                lambda: all_pairs_edges(
                    sketch_set,
                    config.measure,
                    config.epsilon,
                    invert=config.invert_distances,
                ),
            )
        clusters = timed(
            "cluster",
            lambda: clusters_from_pipeline(
                sketch_set,
                config.measure,
                params,
                labels=labels,
                invert=config.invert_distances,
                edges=edges if config.hobohm_threshold is None else None,
            ),
        )
        plan = timed(
            "partition",
            lambda: make_partitions(clusters, config.partitions, config.criterion),
        )

        outputs: list[Path] = []
        t0 = time.perf_counter()
        if Emit.PARTITIONS_TSV in config.emit:
            path = out_dir / "partitions.tsv"
            emit_partitions(plan, clusters, sketch_set.ids, path)
            outputs.append(path)
        if Emit.CLUSTERS_TSV in config.emit:
            path = out_dir / "clusters.tsv"
            write_clusters_tsv(clusters, sketch_set.ids, path)
            outputs.append(path)
        if Emit.EDGES_TSV in config.emit:
            path = out_dir / "edges.tsv"
            write_edges_tsv(edges, sketch_set.ids, path)
            outputs.append(path)
        if Emit.SKETCH_FILE in config.emit:
            path = out_dir / "sketches.bin"
            write_sketch_file(sketch_set, path)
            outputs.append(path)
        if Emit.PARTITION_FASTA in config.emit:
            outputs.extend(
                emit_partition_fastas(plan, clusters, records, out_dir)
            )
        stage_seconds["emit"] = time.perf_counter() - t0

        collected = [str(w.message) for w in caught]

    empties = sum(1 for s in sketch_set.sketches if s.hashes.size == 0)
    return PipelineReport(
        n_records=len(records),
        n_clusters=len(clusters),
        partitions=config.partitions,
        objective=objective(plan),
        stage_seconds=stage_seconds,
        warnings=collected,
        outputs=[str(p) for p in outputs],
        n_edges=len(edges) if edges is not None else -1,
        empty_sketches=empties,
    )
