"""Command-line interface.

Subcommands mirror the pipeline stages so intermediates can be persisted
and recombined: ``partition`` runs everything; ``sketch``, ``dist``,
``cluster`` and ``split`` each run one stage over the previous stage's
artifact.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Failures print a single machine-parsable ``error<TAB>kind<TAB>message``
line on stderr.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import _jit
from .cluster import (
    Cluster,
    ClusteringParams,
    HobohmOrder,
    clusters_from_pipeline,
    write_clusters_tsv,
)
from .distance import DistanceMeasure, all_pairs_edges, write_edges_tsv
from .errors import DataError, SeqPartError, UsageError
from .partition import BalanceCriterion, make_partitions, objective
from .pipeline import (
    DEFAULT_EMIT,
    Emit,
    PipelineConfig,
    PRESET_NAMES,
    emit_partitions,
    preset,
    run_pipeline,
)
from .sequence_io import Alphabet, parse_fasta_files, parse_labels
from .sketch import (
    DEFAULT_SEED,
    SketchKind,
    SketchScheme,
    read_sketch_file,
    sketch_records,
    write_sketch_file,
    write_sketch_tsv,
)


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through the error hierarchy."""

    def error(self, message):
        raise UsageError(message)


def _add_io_args(p: _Parser) -> None:
    p.add_argument("-i", "--input", action="append", default=None,
                   help="input FASTA (plain or gzip); repeatable")
    p.add_argument("-o", "--output-dir", default=None, help="output directory")
    p.add_argument("--alphabet", choices=["auto", "nucleotide", "amino"],
                   default=None, help="force the residue alphabet")
    p.add_argument("--config", default=None,
                   help="flat key=value config file; flags take precedence")


def _add_scheme_args(p: _Parser) -> None:
    p.add_argument("-k", "--kmer-size", type=int, default=None, help="k-mer length")
    p.add_argument("-s", "--sketch-size", type=int, default=None,
                   help="bottom-s MinHash sketch size")
    p.add_argument("-w", "--minimizer", type=int, default=None,
                   help="minimizer window length (k-mers per window)")
    p.add_argument("--prefix", type=int, default=None,
                   help="prefix sampling length (bases)")
    p.add_argument("--no-canonical", action="store_true", default=None,
                   help="hash k-mers as read instead of canonicalizing")
    p.add_argument("--preset", choices=list(PRESET_NAMES), default=None,
                   help="named scheme/measure preset")
    p.add_argument("--seed", type=int, default=None, help="hash seed (default 42)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads; never changes any output byte")


def _add_distance_args(p: _Parser) -> None:
    p.add_argument("-d", "--distance", default=None,
                   choices=[m.value for m in DistanceMeasure],
                   help="distance measure")
    p.add_argument("-e", "--epsilon", type=float, default=None,
                   help="distance threshold separating partitions")


def _add_cluster_args(p: _Parser) -> None:
    p.add_argument("--hobohm", type=float, default=None, metavar="T",
                   help="collapse records within T of a representative first")
    p.add_argument("--hobohm-order", choices=["longest", "input"], default=None,
                   help="Hobohm scan order (default longest)")


def _add_split_args(p: _Parser) -> None:
    p.add_argument("-p", "--partitions", type=int, default=None,
                   help="number of partitions")
    p.add_argument("-c", "--criterion", default=None,
                   choices=[c.value for c in BalanceCriterion],
                   help="balance criterion (default size)")
    p.add_argument("--labels", default=None,
                   help="two-column seq_id<TAB>label table")


def build_parser() -> _Parser:
    parser = _Parser(prog="seqpart",
                     description="Partition sequence datasets into "
                                 "cross-validation folds without leaking "
                                 "near-duplicates across folds.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("partition", help="full pipeline: FASTA to partition table")
    for add in (_add_io_args, _add_scheme_args, _add_distance_args,
                _add_cluster_args, _add_split_args):
        add(run)  # type: ignore[arg-type]
    run.add_argument("--emit", default=None,
                     help="comma list of artifacts: partitions,clusters,edges,sketch,fasta")
    run.add_argument("--invert-distances", action="store_true", default=None,
                     help=argparse.SUPPRESS)

    sk = sub.add_parser("sketch", help="sketch FASTA into a binary sketch file")
    _add_io_args(sk)  # type: ignore[arg-type]
    _add_scheme_args(sk)  # type: ignore[arg-type]
    sk.add_argument("--tsv", action="store_true", default=None,
                    help="also write a lossless sketches.tsv export")

    ds = sub.add_parser("dist", help="edge list from a sketch file")
    ds.add_argument("--sketches", required=True, help="sketches.bin from `sketch`")
    ds.add_argument("-o", "--output-dir", default=None)
    ds.add_argument("--config", default=None)
    ds.add_argument("--threads", type=int, default=None)
    _add_distance_args(ds)  # type: ignore[arg-type]

    cl = sub.add_parser("cluster", help="clusters from a sketch file")
    cl.add_argument("--sketches", required=True, help="sketches.bin from `sketch`")
    cl.add_argument("-o", "--output-dir", default=None)
    cl.add_argument("--config", default=None)
    cl.add_argument("--threads", type=int, default=None)
    _add_distance_args(cl)  # type: ignore[arg-type]
    _add_cluster_args(cl)  # type: ignore[arg-type]

    sp = sub.add_parser("split", help="partition table from a cluster table")
    sp.add_argument("--clusters", required=True, help="clusters.tsv from `cluster`")
    sp.add_argument("-o", "--output-dir", default=None)
    sp.add_argument("--config", default=None)
    _add_split_args(sp)  # type: ignore[arg-type]

    return parser


def load_config_file(path: str) -> dict[str, list[str]]:
    """Flat ``key = value`` file; '#' starts a comment; keys may repeat."""
    entries: dict[str, list[str]] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        entries.setdefault(key.strip().replace("-", "_"), []).append(value.strip())
    return entries


_CONFIG_CONVERTERS = {
    "input": None,  # list, handled separately
    "output_dir": str,
    "alphabet": str,
    "kmer_size": int,
    "sketch_size": int,
    "minimizer": int,
    "prefix": int,
    "no_canonical": lambda v: v.lower() in ("1", "true", "yes"),
    "preset": str,
    "seed": int,
    "threads": int,
    "distance": str,
    "epsilon": float,
    "hobohm": float,
    "hobohm_order": str,
    "partitions": int,
    "criterion": str,
    "labels": str,
    "emit": str,
    "invert_distances": lambda v: v.lower() in ("1", "true", "yes"),
    "sketches": str,
    "clusters": str,
    "tsv": lambda v: v.lower() in ("1", "true", "yes"),
}


def _merge_config(ns: argparse.Namespace) -> None:
    if not getattr(ns, "config", None):
        return
    entries = load_config_file(ns.config)
    for key, values in entries.items():
        if key not in _CONFIG_CONVERTERS:
            raise UsageError(f"unknown config key {key!r}")
        if not hasattr(ns, key) or getattr(ns, key) is not None:
            continue  # flag was given or key not valid for this subcommand
        if key == "input":
            setattr(ns, key, values)
        else:
            conv = _CONFIG_CONVERTERS[key]
            setattr(ns, key, conv(values[-1]))


def _resolve_scheme(ns: argparse.Namespace) -> tuple[SketchScheme, DistanceMeasure]:
    """Combine preset and explicit flags into a scheme plus default measure."""
    seed = ns.seed if ns.seed is not None else DEFAULT_SEED
    canonical = not bool(getattr(ns, "no_canonical", None))
    base_measure = DistanceMeasure.MASH
    kind = None
    k = ns.kmer_size
    param = None

    if ns.preset is not None:
        scheme, base_measure = preset(ns.preset, seed=seed, canonical=canonical)
        kind, param = scheme.kind, scheme.param
        if k is None:
            k = scheme.k

    chosen = [
        name
        for name, value in (
            ("sketch-size", ns.sketch_size),
            ("minimizer", ns.minimizer),
            ("prefix", ns.prefix),
        )
        if value is not None
    ]
    if len(chosen) > 1:
        raise UsageError(
            "options --sketch-size, --minimizer and --prefix are mutually "
            f"exclusive (got {', '.join(chosen)})"
        )
    if ns.sketch_size is not None:
        kind, param = SketchKind.MINHASH_BOTTOM_S, ns.sketch_size
    elif ns.minimizer is not None:
        kind, param = SketchKind.MINIMIZER, ns.minimizer
    elif ns.prefix is not None:
        kind, param = SketchKind.PREFIX, ns.prefix

    if kind is None:
        kind, param = SketchKind.MINHASH_BOTTOM_S, 1024
    if k is None:
        k = 16
    return SketchScheme(kind, k, param, canonical, seed), base_measure


def _resolve_measure(ns: argparse.Namespace, default: DistanceMeasure) -> DistanceMeasure:
    if ns.distance is not None:
        return DistanceMeasure(ns.distance)
    return default


def _resolve_alphabet(ns: argparse.Namespace) -> Alphabet | None:
    value = getattr(ns, "alphabet", None)
    if value in (None, "auto"):
        return None
    return Alphabet.NUCLEOTIDE if value == "nucleotide" else Alphabet.AMINO_ACID


_EMIT_NAMES = {e.value: e for e in Emit}


def _resolve_emit(spec: str | None) -> frozenset[Emit]:
    if spec is None:
        return DEFAULT_EMIT
    chosen = set()
    for name in spec.split(","):
        name = name.strip()
        if name not in _EMIT_NAMES:
            raise UsageError(
                f"unknown emit artifact {name!r}; choose from "
                + ",".join(sorted(_EMIT_NAMES))
            )
        chosen.add(_EMIT_NAMES[name])
    return frozenset(chosen)


def _require(ns: argparse.Namespace, attr: str, flag: str):
    value = getattr(ns, attr, None)
    if value is None:
        raise UsageError(f"missing required option {flag}")
    return value


def _out_dir(ns: argparse.Namespace) -> Path:
    out = Path(ns.output_dir if ns.output_dir is not None else ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_partition(ns: argparse.Namespace) -> int:
    scheme, default_measure = _resolve_scheme(ns)
    config = PipelineConfig(
        inputs=_require(ns, "input", "-i/--input"),
        epsilon=_require(ns, "epsilon", "-e/--epsilon"),
        partitions=_require(ns, "partitions", "-p/--partitions"),
        scheme=scheme,
        measure=_resolve_measure(ns, default_measure),
        criterion=BalanceCriterion(ns.criterion) if ns.criterion else BalanceCriterion.SIZE,
        alphabet=_resolve_alphabet(ns),
        labels_path=ns.labels,
        hobohm_threshold=ns.hobohm,
        hobohm_order=HobohmOrder.INPUT_ORDER if ns.hobohm_order == "input"
        else HobohmOrder.LONGEST_FIRST,
        seed=ns.seed if ns.seed is not None else DEFAULT_SEED,
        threads=ns.threads if ns.threads is not None else 1,
        output_dir=str(_out_dir(ns)),
        emit=_resolve_emit(ns.emit),
        invert_distances=bool(ns.invert_distances),
    )
    report = run_pipeline(config)
    for line in report.lines():
        print(line)
    return 0


def _cmd_sketch(ns: argparse.Namespace) -> int:
    scheme, _ = _resolve_scheme(ns)
    if ns.threads is not None:
        _jit.set_threads(ns.threads)
    records = parse_fasta_files(
        _require(ns, "input", "-i/--input"), _resolve_alphabet(ns)
    )
    sketch_set = sketch_records(records, scheme)
    out = _out_dir(ns)
    path = out / "sketches.bin"
    write_sketch_file(sketch_set, path)
    print(f"records\t{len(records)}")
    print(f"wrote\t{path}")
    if ns.tsv:
        tsv = out / "sketches.tsv"
        write_sketch_tsv(sketch_set, tsv)
        print(f"wrote\t{tsv}")
    return 0


def _cmd_dist(ns: argparse.Namespace) -> int:
    if ns.threads is not None:
        _jit.set_threads(ns.threads)
    sketch_set = read_sketch_file(ns.sketches)
    measure = _resolve_measure(ns, DistanceMeasure.MASH)
    epsilon = _require(ns, "epsilon", "-e/--epsilon")
    edges = all_pairs_edges(sketch_set, measure, epsilon)
    out = _out_dir(ns) / "edges.tsv"
    write_edges_tsv(edges, sketch_set.ids, out)
    print(f"records\t{len(sketch_set)}")
    print(f"edges\t{len(edges)}")
    print(f"wrote\t{out}")
    return 0


def _cmd_cluster(ns: argparse.Namespace) -> int:
    if ns.threads is not None:
        _jit.set_threads(ns.threads)
    sketch_set = read_sketch_file(ns.sketches)
    measure = _resolve_measure(ns, DistanceMeasure.MASH)
    params = ClusteringParams(
        epsilon=_require(ns, "epsilon", "-e/--epsilon"),
        hobohm_threshold=ns.hobohm,
        hobohm_order=HobohmOrder.INPUT_ORDER if ns.hobohm_order == "input"
        else HobohmOrder.LONGEST_FIRST,
    )
    clusters = clusters_from_pipeline(sketch_set, measure, params)
    out = _out_dir(ns) / "clusters.tsv"
    write_clusters_tsv(clusters, sketch_set.ids, out)
    print(f"records\t{len(sketch_set)}")
    print(f"clusters\t{len(clusters)}")
    print(f"wrote\t{out}")
    return 0


def read_clusters_tsv(path) -> tuple[list[str], list[int]]:
    """Read a ``seq_id TAB cluster_id`` table back, in file order."""
    ids: list[str] = []
    cluster_ids: list[int] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        if not raw or raw.startswith("#"):
            continue
        fields = raw.split("\t")
        if len(fields) != 2:
            raise DataError(f"{path}:{lineno}: expected 2 columns")
        ids.append(fields[0])
        try:
            cluster_ids.append(int(fields[1]))
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad cluster id {fields[1]!r}") from None
    return ids, cluster_ids


def _cmd_split(ns: argparse.Namespace) -> int:
    ids, cluster_ids = read_clusters_tsv(ns.clusters)
    labels = parse_labels(ns.labels) if ns.labels else None
    members: dict[int, list[int]] = {}
    for idx, cid in enumerate(cluster_ids):
        members.setdefault(cid, []).append(idx)
    clusters = []
    for cid in sorted(members):
        tally = None
        if labels is not None:
            tally = {}
            for m in members[cid]:
                if ids[m] not in labels:
                    raise DataError(f"record {ids[m]!r} has no label")
                name = labels[ids[m]]
                tally[name] = tally.get(name, 0) + 1
        clusters.append(
            Cluster(cluster_id=cid, members=members[cid],
                    size=len(members[cid]), label_counts=tally)
        )
    criterion = BalanceCriterion(ns.criterion) if ns.criterion else BalanceCriterion.SIZE
    plan = make_partitions(
        clusters, _require(ns, "partitions", "-p/--partitions"), criterion
    )
    out = _out_dir(ns) / "partitions.tsv"
    emit_partitions(plan, clusters, ids, out)
    print(f"records\t{len(ids)}")
    print(f"clusters\t{len(clusters)}")
    print("objective\t" + ",".join(f"{v:g}" for v in objective(plan)))
    print(f"wrote\t{out}")
    return 0


_COMMANDS = {
    "partition": _cmd_partition,
    "sketch": _cmd_sketch,
    "dist": _cmd_dist,
    "cluster": _cmd_cluster,
    "split": _cmd_split,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        _merge_config(ns)
        return _COMMANDS[ns.command](ns)
    except SeqPartError as exc:
        message = str(exc).replace("\n", " ")
        print(f"error\t{type(exc).__name__}\t{message}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        message = str(exc).replace("\n", " ")
        print(f"error\t{type(exc).__name__}\t{message}", file=sys.stderr)
        return DataError.exit_code
    except SystemExit as exc:  # argparse -h
        return int(exc.code or 0)
    except Exception as exc:  # pragma: no cover - internal failures
        message = str(exc).replace("\n", " ")
        print(f"error\t{type(exc).__name__}\t{message}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
