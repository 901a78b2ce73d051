"""Command line entry point: ``hypermetric {gen,distmat,communities,homology,knn}``.

Exit codes: 0 success, 1 runtime failure, 2 invalid input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from hypermetric import community, congruence, knn, persistence
from hypermetric.core import HypergraphFormatError, read_hypergraph, write_hypergraph
from hypermetric.pipeline import distance_matrix_of, profile_table_of

DEFAULT_SEED = 0

log = logging.getLogger("hypermetric")


class InputError(Exception):
    pass


def _source(args):
    if bool(args.spec) == bool(args.hypergraph):
        raise InputError("give exactly one of --spec or --hypergraph")
    try:
        if args.spec:
            return congruence.build(congruence.load_spec(args.spec))
        return read_hypergraph(args.hypergraph)
    except (congruence.SpecError, HypergraphFormatError, OSError) as exc:
        raise InputError(str(exc)) from None


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _int_list(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(",") if t.strip()]


def cmd_gen(args):
    if not args.spec:
        raise InputError("gen needs --spec")
    ih = _source(args)
    out = _out(args)
    counts = congruence.hyperedge_count_total(ih)
    lines = [
        f"kind: {congruence.spec_to_dict(ih.spec)['kind']}",
        f"vertices: {len(ih.vertices)}",
        f"max_edge_size: {ih.max_edge_size}",
        f"properties: {' '.join(str(p) for p in ih.property_set)}",
        f"total_edges: {counts.total}",
        "edges_by_size_and_label:",
    ]
    for (m, label), c in sorted(counts.breakdown.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
        lines.append(f"  {m} {label} {c}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    (out / "spec.json").write_text(json.dumps(congruence.spec_to_dict(ih.spec), indent=2, sort_keys=True) + "\n")
    if args.enumerate:
        H = congruence.enumerate_hypergraph(ih, cap=args.cap)
        write_hypergraph(H, out / "hypergraph.txt")


def cmd_distmat(args):
    src = _source(args)
    out = _out(args)
    table = profile_table_of(src, jobs=args.jobs)
    table.write_csv(out / "profiles.csv")
    distance_matrix_of(table, jobs=args.jobs).write_csv(out / "distmat.csv")


def cmd_communities(args):
    src = _source(args)
    out = _out(args)
    M = distance_matrix_of(src, jobs=args.jobs)
    part = community.partition(M)
    with open(out / "communities.csv", "w") as fh:
        fh.write("vertex,representative\n")
        for v in M.vertex_index:
            fh.write(f"{v},{part.class_of[v]}\n")
    sizes = part.sizes()
    lines = [f"classes: {len(part.representatives)}",
             "representatives: " + " ".join(str(r) for r in part.representatives),
             "class_sizes:"]
    lines += [f"  {r} {sizes[r]}" for r in part.representatives]
    anchor = args.anchor if args.anchor is not None else M.vertex_index[0]
    zs = community.zero_set(M, anchor)
    with open(out / "zero_set.csv", "w") as fh:
        fh.write("anchor,member\n")
        for j in zs.members:
            fh.write(f"{anchor},{j}\n")
    lines.append(f"anchor: {anchor}")
    lines.append(f"zero_set_size: {len(zs.members)}")
    if zs.members:
        for name, ok in community.check_patterns(zs.members).items():
            lines.append(f"  pattern {name}: {'holds' if ok else 'fails'}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")


def cmd_homology(args):
    src = _source(args)
    out = _out(args)
    M = distance_matrix_of(src, jobs=args.jobs)
    F = persistence.FiltrationSpec.parse(args.filtration) if args.filtration else persistence.FiltrationSpec((M.order,))
    steps = persistence.filtration_barcodes(M, F, max_dim=args.max_dim, jobs=args.jobs)
    lines = ["step,n,dim0_bars,dim0_finite_bars,dim1_bars,dim1_threshold,dim1_important"]
    for k, ((nk, bc), row) in enumerate(zip(steps, persistence.summarize(steps, args.min_persistence))):
        bc.write_csv(out / f"barcode_X{k}.csv")
        if args.svg:
            persistence.write_barcode_svg(bc, out / f"barcode_X{k}.svg", title=f"X{k}: first {nk} vertices")
        lines.append(f"X{k},{nk},{row['dim0_bars']},{row['dim0_finite_bars']},{row['dim1_bars']},"
                     f"{row['dim1_threshold']!r},{row['dim1_important']}")
    (out / "summary.csv").write_text("\n".join(lines) + "\n")


def cmd_knn(args):
    src = _source(args)
    out = _out(args)
    M = distance_matrix_of(src, jobs=args.jobs)
    ks = _int_list(args.k)
    record_k = args.pred_k
    report = knn.run_experiment(M, args.method, ks, trials=args.trials, split_fraction=args.split,
                                master_seed=args.seed, jobs=args.jobs)
    if record_k is None:
        record_k = report.best_k()
    if record_k not in ks:
        raise InputError(f"--pred-k {record_k} not among --k values")
    if not 1 <= args.pred_trial <= args.trials:
        raise InputError("--pred-trial out of range")
    # re-run only the recorded trial cell: same seeds give the same split
    cell = knn.run_experiment(M, args.method, [record_k], trials=args.pred_trial, split_fraction=args.split,
                              master_seed=args.seed, record=(args.pred_trial, record_k))
    report.predictions, report.prediction_key = cell.predictions, cell.prediction_key
    report.write_csv(out / f"knn_{args.method}.csv")
    report.write_predictions(out / "predictions.csv")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="congruence spec (JSON)")
    common.add_argument("--hypergraph", help="explicit hypergraph text file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hypermetric", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="summarise or enumerate a congruence hypergraph")
    g.add_argument("--enumerate", action="store_true")
    g.add_argument("--cap", type=int, default=10**6)
    g.set_defaults(func=cmd_gen)

    d = sub.add_parser("distmat", parents=[common], help="count profiles and distance matrix")
    d.set_defaults(func=cmd_distmat)

    c = sub.add_parser("communities", parents=[common], help="zero-distance classes and zero sets")
    c.add_argument("--anchor", type=int)
    c.set_defaults(func=cmd_communities)

    h = sub.add_parser("homology", parents=[common], help="Vietoris-Rips barcodes over vertex prefixes")
    h.add_argument("--filtration", help="comma-separated prefix sizes, e.g. 100,300,500,700")
    h.add_argument("--max-dim", type=int, choices=(0, 1), default=1)
    h.add_argument("--min-persistence", type=float,
                   help="dimension-1 importance cut (default: 5%% of the largest finite death)")
    h.add_argument("--svg", action="store_true", help="also write SVG barcode plots")
    h.set_defaults(func=cmd_homology)

    k = sub.add_parser("knn", parents=[common], help="nearest-neighbor sign prediction experiment")
    k.add_argument("--method", choices=knn.METHODS, default="knnall")
    k.add_argument("--k", default="1..5", help="k values: 1..5 or 1,2,3")
    k.add_argument("--trials", type=int, default=10)
    k.add_argument("--split", type=float, default=0.7)
    k.add_argument("--pred-trial", type=int, default=1, help="trial whose predictions are written")
    k.add_argument("--pred-k", type=int, help="k whose predictions are written (default: best average)")
    k.set_defaults(func=cmd_knn)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        args.func(args)
    except InputError as exc:
        print(f"hypermetric {args.command}: invalid input: {exc}", file=sys.stderr)
        return 2
    except congruence.EnumerationInfeasible as exc:
        print(f"hypermetric {args.command}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"hypermetric {args.command}: invalid input: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"hypermetric {args.command}: failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
