"""Command-line experiment harness.

Subcommands: ``synth`` (dataset generators), ``fit`` (single run producing a
model and trace), ``predict``, ``cv``, ``baseline`` and ``sweep``. Exit
codes: 0 on success, 1 on validation or configuration errors, 2 when the
solver diverges.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import data_io, evaluate
from .errors import (
    ContractViolation,
    DataFormatError,
    Diverged,
    UnsupportedConfiguration,
)
from .graph import build_knn_graph, edges_csv
from .solver import SolverConfig, fit, load_model, predict, save_model
from .spaces import (
    ChainSequenceSpace,
    MulticlassSpace,
    TaxonomySpace,
    three_level_taxonomy,
)


def _add_solver_flags(p):
    p.add_argument("--c1", type=float, default=1.0, help="loss-bound tradeoff (> 0)")
    p.add_argument("--c2", type=float, default=1.0, help="weight-penalty tradeoff (> 0)")
    p.add_argument("--eta", type=float, default=None,
                   help="gradient step size (default 1/c2)")
    p.add_argument("--iters", type=int, default=50, help="number of iterations")
    p.add_argument("--z-init", choices=["nearest-labeled", "uniform-random"],
                   default="nearest-labeled")


def _add_space_flags(p):
    p.add_argument("--space", choices=["multiclass", "taxonomy", "chain"],
                   required=True)
    p.add_argument("--taxonomy", help="taxonomy JSON file (taxonomy space)")
    p.add_argument("--classes", type=int, default=None,
                   help="class count (multiclass; inferred from data when omitted)")
    p.add_argument("--alphabet", type=int, default=None,
                   help="label count (chain; inferred from data when omitted)")
    p.add_argument("--loss", choices=["zero-one", "hamming"], default=None,
                   help="chain loss mode (default hamming)")


def _add_graph_flags(p):
    p.add_argument("--k", type=int, default=5, help="neighbors per node")
    p.add_argument("--sigma", type=float, default=None,
                   help="Gaussian bandwidth (default: median squared edge distance)")


def _peek_records(path):
    records = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def _build_space(args, data_path):
    """Construct the output space from flags, inferring sizes from data."""
    records = _peek_records(data_path)
    if not records:
        raise DataFormatError(f"{data_path}: no records")
    x0 = np.asarray(records[0]["x"], dtype=float)
    dim = int(x0.shape[-1])
    if args.space == "multiclass":
        classes = args.classes
        if classes is None:
            labels = [r["y"] for r in records if r.get("y") is not None]
            if not labels:
                raise ContractViolation(
                    "cannot infer --classes from a fully unlabeled file"
                )
            classes = max(labels) + 1
        return MulticlassSpace(classes, dim)
    if args.space == "taxonomy":
        if not args.taxonomy:
            raise ContractViolation("--taxonomy <file> is required for this space")
        return TaxonomySpace(data_io.load_taxonomy(args.taxonomy), dim)
    alphabet = args.alphabet
    if alphabet is None:
        labels = [v for r in records if r.get("y") is not None for v in r["y"]]
        if not labels:
            raise ContractViolation("cannot infer --alphabet from a fully unlabeled file")
        alphabet = max(labels) + 1
    return ChainSequenceSpace(alphabet, dim, loss=args.loss or "hamming")


def _solver_config(args):
    return SolverConfig(
        c1=args.c1,
        c2=args.c2,
        eta=args.eta,
        max_iters=args.iters,
        seed=args.seed,
        z_init=args.z_init,
    )


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(args):
    out = _out_dir(args)
    if args.space == "multiclass":
        ds = data_io.synth_blobs(args.classes or 8, args.per_class, args.dim,
                                 args.spread, args.seed)
        space = MulticlassSpace(args.classes or 8, args.dim)
    elif args.space == "taxonomy":
        if args.taxonomy:
            tree = data_io.load_taxonomy(args.taxonomy)
        else:
            tree = three_level_taxonomy()
        data_io.save_taxonomy(tree, out / "taxonomy.json")
        ds = data_io.synth_taxonomy_blobs(tree, args.per_leaf, args.dim,
                                          args.spread, args.seed)
        space = TaxonomySpace(tree, args.dim)
    else:
        ds = data_io.synth_chains(args.alphabet or 3,
                                  (args.min_len, args.max_len),
                                  args.count, args.dim, args.seed)
        space = ChainSequenceSpace(args.alphabet or 3, args.dim)
    path = out / "data.jsonl"
    data_io.save_dataset(ds, path, space)
    print(f"wrote {len(ds.points)} points to {path}")
    return 0


def cmd_fit(args):
    out = _out_dir(args)
    space = _build_space(args, args.data)
    ds = data_io.load_dataset(args.data, space, require_labeled=True)
    cfg = _solver_config(args)
    g = build_knn_graph(ds, args.k, args.sigma)
    if args.dump_graph:
        (out / "graph.csv").write_text(edges_csv(g))
    start = time.perf_counter()
    state = fit(ds, g, space, cfg)
    elapsed = time.perf_counter() - start
    save_model(out / "model.json", state, space, cfg)
    (out / "trace.csv").write_text(evaluate.trace_csv(state.trace))
    last = state.trace[-1]
    print(f"fit {state.iteration} iterations in {elapsed:.2f}s; "
          f"final objective {last.total:.6g}")
    print(f"wrote {out / 'model.json'} and {out / 'trace.csv'}")
    return 0


def cmd_predict(args):
    out = _out_dir(args)
    w, space, _ = load_model(args.model)
    ds = data_io.load_dataset(args.data, space, require_labeled=False)
    path = out / "predictions.jsonl"
    with open(path, "w") as f:
        for p in ds.points:
            y = predict(w, p.x, space)
            f.write(json.dumps({"id": p.id, "y": space.encode(y)}) + "\n")
    print(f"wrote {len(ds.points)} predictions to {path}")
    return 0


def _write_report(report, out):
    (out / "report.json").write_text(evaluate.report_json(report))
    (out / "folds.csv").write_text(evaluate.folds_csv(report))
    paths = []
    for i, trace in enumerate(report.traces):
        p = out / f"trace_fold{i}.csv"
        p.write_text(evaluate.trace_csv(trace))
        paths.append(p.name)
    report.trace_paths = paths
    (out / "report.json").write_text(evaluate.report_json(report))


def cmd_cv(args):
    out = _out_dir(args)
    space = _build_space(args, args.data)
    ds = data_io.load_dataset(args.data, space, require_labeled=True)
    report = evaluate.run_cv(ds, space, _solver_config(args),
                             k=args.k, sigma=args.sigma, seed=args.seed)
    _write_report(report, out)
    print(f"mean test ASL {report.mean_test_asl:.4f}, "
          f"mean transductive ASL {report.mean_transductive_asl:.4f} "
          f"({report.folds_diverged} diverged folds, {report.total_seconds:.1f}s)")
    print(f"wrote {out / 'report.json'}")
    return 0


def cmd_baseline(args):
    out = _out_dir(args)
    space = _build_space(args, args.data)
    ds = data_io.load_dataset(args.data, space, require_labeled=True)
    report = evaluate.run_baseline_supervised(ds, space, _solver_config(args),
                                              seed=args.seed)
    _write_report(report, out)
    print(f"mean test ASL {report.mean_test_asl:.4f} "
          f"({report.folds_diverged} diverged folds, {report.total_seconds:.1f}s)")
    print(f"wrote {out / 'report.json'}")
    return 0


def cmd_sweep(args):
    out = _out_dir(args)
    space = _build_space(args, args.data)
    ds = data_io.load_dataset(args.data, space, require_labeled=True)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    rows = evaluate.sweep(args.param, values, ds, space, _solver_config(args),
                          k=args.k, sigma=args.sigma, seed=args.seed)
    path = out / "sweep.csv"
    path.write_text(evaluate.sweep_csv(args.param, rows))
    for r in rows:
        status = f"{r.mean_test_asl:.4f}" if r.mean_test_asl is not None else f"failed: {r.error}"
        print(f"{args.param}={r.value:g}: {status}")
    print(f"wrote {path}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="semistruct",
        description="Semi-supervised structured output prediction with "
                    "neighbor-graph regularization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--space", choices=["multiclass", "taxonomy", "chain"], required=True)
    p.add_argument("--classes", type=int, default=None, help="multiclass cluster count")
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--per-leaf", type=int, default=10)
    p.add_argument("--alphabet", type=int, default=None, help="chain label count")
    p.add_argument("--count", type=int, default=100, help="chain sequence count")
    p.add_argument("--min-len", type=int, default=4)
    p.add_argument("--max-len", type=int, default=6)
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--spread", type=float, default=0.5)
    p.add_argument("--taxonomy", help="taxonomy JSON (default: built-in 19-node tree)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit on one dataset, write model and trace")
    p.add_argument("--data", required=True)
    _add_space_flags(p)
    _add_solver_flags(p)
    _add_graph_flags(p)
    p.add_argument("--dump-graph", action="store_true",
                   help="also write the edge list as graph.csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict outputs with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    for name, handler, semi in (("cv", cmd_cv, True),
                                ("baseline", cmd_baseline, False)):
        p = sub.add_parser(
            name,
            help="ten-fold cross validation"
            + ("" if semi else " of the labeled-only baseline"),
        )
        p.add_argument("--data", required=True)
        _add_space_flags(p)
        _add_solver_flags(p)
        if semi:
            _add_graph_flags(p)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True)
        p.set_defaults(func=handler)

    p = sub.add_parser("sweep", help="cross-validated sweep over c1 or c2")
    p.add_argument("--param", choices=["c1", "c2"], required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--data", required=True)
    _add_space_flags(p)
    _add_solver_flags(p)
    _add_graph_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Diverged as e:
        print(f"diverged: {e}", file=sys.stderr)
        return 2
    except (ContractViolation, DataFormatError, UnsupportedConfiguration) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
