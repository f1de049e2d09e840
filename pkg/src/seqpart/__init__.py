"""seqpart: leakage-free cross-validation splits for sequence datasets.

Records are sketched into sub-sampled k-mer hash sets, pairs closer than
a distance threshold epsilon are linked, connected components become
clusters, and clusters are balanced across partitions by a makespan
solver. No two records closer than epsilon ever land in different
partitions.
"""
from .cluster import (
    Cluster,
    ClusteringParams,
    HobohmOrder,
    clusters_from_pipeline,
    hobohm1_reduce,
    threshold_components,
)
from .distance import (
    DistanceEdge,
    DistanceMeasure,
    EdgeList,
    all_pairs_edges,
    cosine_distance,
    inv_coverage_distance,
    jaccard_distance,
    jaccard_estimate,
    mash_distance,
    overlap_distance,
    pairwise_distance,
)
from .errors import DataError, SeqPartError, UsageError
from .partition import (
    BalanceCriterion,
    PartitionPlan,
    best_exchange_between,
    lpt_initial,
    make_partitions,
    objective,
    tabu_search,
)
from .pipeline import (
    Emit,
    PipelineConfig,
    PipelineReport,
    preset,
    run_pipeline,
)
from .sequence_io import (
    Alphabet,
    LabelTable,
    SequenceRecord,
    infer_alphabet,
    parse_fasta,
    parse_labels,
    write_fasta,
)
from .sketch import (
    KmerSketch,
    SketchKind,
    SketchScheme,
    SketchSet,
    canonical_kmer,
    hash_kmer,
    read_sketch_file,
    sketch_records,
    sketch_sequence,
    write_sketch_file,
)

__version__ = "0.1.0"
