"""Cross-validation harness, average-structured-loss scoring and sweeps.

The protocol: split into ten folds, rotate each fold out as the test set,
keep two random folds of the remaining nine labeled and mask the other
seven. Each run reports the inductive test score (predictions of the
learned weights on the held-out fold) and the transductive score (the final
slack outputs against the masked ground truth).

Wall-clock timings live only on the in-memory report; serialized reports
and traces contain no volatile fields, so repeated seeded runs are
byte-identical.
"""

from __future__ import annotations

import io
import json
import time
from dataclasses import dataclass, field, replace

from .core import Dataset, validate_dataset
from .data_io import NUM_FOLDS, make_folds, mask_labels
from .errors import ContractViolation, Diverged
from .graph import NeighborGraph, build_knn_graph
from .solver import SolverConfig, config_echo, fit, predict

SWEEP_PARAMS = ("c1", "c2")


def asl(predictions, truths, space) -> float:
    """Average structured loss of predictions against true outputs."""
    if len(predictions) != len(truths):
        raise ContractViolation(
            f"got {len(predictions)} predictions for {len(truths)} truths"
        )
    if not predictions:
        raise ContractViolation("cannot average over an empty set")
    return sum(space.delta(p, t) for p, t in zip(predictions, truths)) / len(predictions)


@dataclass
class FoldResult:
    fold: int
    test_asl: float = None
    transductive_asl: float = None
    diverged: bool = False
    error: str = None
    seconds: float = 0.0  # volatile; excluded from serialized reports


@dataclass
class EvalReport:
    """Aggregated outcome of a ten-fold run."""

    method: str
    space_kind: str
    seed: int
    solver: dict
    graph: dict
    folds: list = field(default_factory=list)
    traces: list = field(default_factory=list)  # per-fold objective traces
    trace_paths: list = None  # filled by callers that write traces to disk

    def _mean(self, attr):
        vals = [getattr(f, attr) for f in self.folds if getattr(f, attr) is not None]
        return sum(vals) / len(vals) if vals else None

    @property
    def mean_test_asl(self):
        return self._mean("test_asl")

    @property
    def mean_transductive_asl(self):
        return self._mean("transductive_asl")

    @property
    def folds_diverged(self):
        return sum(1 for f in self.folds if f.diverged)

    @property
    def total_seconds(self):
        return sum(f.seconds for f in self.folds)

    def to_dict(self) -> dict:
        """Deterministic JSON-ready view; timing deliberately left out."""
        return {
            "method": self.method,
            "space": self.space_kind,
            "seed": self.seed,
            "solver": self.solver,
            "graph": self.graph,
            "folds": [
                {
                    "fold": f.fold,
                    "test_asl": f.test_asl,
                    "transductive_asl": f.transductive_asl,
                    "diverged": f.diverged,
                    "error": f.error,
                }
                for f in self.folds
            ],
            "mean_test_asl": self.mean_test_asl,
            "mean_transductive_asl": self.mean_transductive_asl,
            "folds_diverged": self.folds_diverged,
            "trace_paths": self.trace_paths,
        }


def report_json(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def folds_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    buf.write("fold,test_asl,transductive_asl,diverged\n")
    for f in report.folds:
        test = "" if f.test_asl is None else repr(f.test_asl)
        trans = "" if f.transductive_asl is None else repr(f.transductive_asl)
        buf.write(f"{f.fold},{test},{trans},{int(f.diverged)}\n")
    return buf.getvalue()


def trace_csv(trace) -> str:
    """Objective trace as CSV, one row per iteration including the initial
    row; the total column always equals manifold + c1 * loss + c2 * reg.
    Accepts either a trace list or a fitted solver state."""
    trace = getattr(trace, "trace", trace)
    buf = io.StringIO()
    buf.write("iteration,manifold,loss,regularizer,objective\n")
    for row in trace:
        buf.write(
            f"{row.iteration},{row.manifold!r},{row.loss!r},{row.reg!r},{row.total!r}\n"
        )
    return buf.getvalue()


def _require_valid(ds, space):
    report = validate_dataset(ds, space)
    if not report.ok:
        raise ContractViolation("invalid dataset: " + "; ".join(report.violations))


def run_cv(ds, space, cfg: SolverConfig, k=5, sigma=None, seed=0) -> EvalReport:
    """Ten-fold cross validation of the graph-regularized learner.

    Per fold: mask, build the neighbor graph over the train inputs, fit,
    then score the test fold inductively and the masked points
    transductively. A diverging fold is recorded and the run continues.
    """
    _require_valid(ds, space)
    plan = make_folds(ds, seed)
    report = EvalReport(
        method="graph-regularized",
        space_kind=space.kind,
        seed=seed,
        solver=config_echo(cfg),
        graph={"k": k, "sigma": sigma},
    )
    for run in range(NUM_FOLDS):
        split = mask_labels(ds, plan, run)
        start = time.perf_counter()
        fold = FoldResult(fold=run)
        try:
            g = build_knn_graph(split.train, k, sigma)
            state = fit(split.train, g, space, cfg)
        except Diverged as e:
            fold.diverged = True
            fold.error = str(e)
            report.traces.append(list(e.state.trace) if e.state else [])
            fold.seconds = time.perf_counter() - start
            report.folds.append(fold)
            continue
        preds = [predict(state.w, p.x, space) for p in split.test.points]
        truths = [p.y for p in split.test.points]
        fold.test_asl = asl(preds, truths, space)
        masked_ids = sorted(split.masked_truth)
        fold.transductive_asl = asl(
            [state.z[i] for i in masked_ids],
            [split.masked_truth[i] for i in masked_ids],
            space,
        )
        fold.seconds = time.perf_counter() - start
        report.folds.append(fold)
        report.traces.append(list(state.trace))
    return report


def run_baseline_supervised(ds, space, cfg: SolverConfig, seed=0) -> EvalReport:
    """Labeled-only comparison arm under the identical fold plan.

    Drops the masked points and trains on the two labeled folds with an
    edge-free graph, which reduces the objective to the loss bound plus the
    weight penalty. The transductive column scores the learned weights'
    predictions on the dropped points, since no slack outputs exist for
    them.
    """
    _require_valid(ds, space)
    plan = make_folds(ds, seed)
    report = EvalReport(
        method="supervised-baseline",
        space_kind=space.kind,
        seed=seed,
        solver=config_echo(cfg),
        graph={"k": None, "sigma": None},
    )
    for run in range(NUM_FOLDS):
        split = mask_labels(ds, plan, run)
        masked_ids = sorted(split.masked_truth)
        labeled = [p for p in split.train.points if p.y is not None]
        base_ds = Dataset(
            tuple(replace(p, id=i) for i, p in enumerate(labeled)),
            split.train.space_id,
        )
        start = time.perf_counter()
        fold = FoldResult(fold=run)
        try:
            state = fit(base_ds, NeighborGraph.empty(len(labeled)), space, cfg)
        except Diverged as e:
            fold.diverged = True
            fold.error = str(e)
            report.traces.append(list(e.state.trace) if e.state else [])
            fold.seconds = time.perf_counter() - start
            report.folds.append(fold)
            continue
        preds = [predict(state.w, p.x, space) for p in split.test.points]
        fold.test_asl = asl(preds, [p.y for p in split.test.points], space)
        fold.transductive_asl = asl(
            [predict(state.w, split.train.points[i].x, space) for i in masked_ids],
            [split.masked_truth[i] for i in masked_ids],
            space,
        )
        fold.seconds = time.perf_counter() - start
        report.folds.append(fold)
        report.traces.append(list(state.trace))
    return report


@dataclass
class SweepRow:
    value: float
    mean_test_asl: float = None
    error: str = None


def sweep(param, values, ds, space, base_cfg: SolverConfig,
          k=5, sigma=None, seed=0) -> list:
    """Cross-validated mean test score for each tradeoff value.

    ``param`` is "c1" or "c2". Failures for individual values are recorded
    and the sweep continues. Note a swept c2 also moves the default step
    size, which stays at 1 / c2 unless the base config pins eta.
    """
    if param not in SWEEP_PARAMS:
        raise ContractViolation(f"param must be one of {SWEEP_PARAMS}, got {param!r}")
    if not values:
        raise ContractViolation("sweep needs at least one value")
    rows = []
    for v in values:
        cfg = replace(base_cfg, **{param: float(v)})
        try:
            rep = run_cv(ds, space, cfg, k=k, sigma=sigma, seed=seed)
            rows.append(SweepRow(float(v), rep.mean_test_asl))
        except Exception as e:  # keep sweeping past bad configurations
            rows.append(SweepRow(float(v), None, str(e)))
    return rows


def sweep_csv(param, rows) -> str:
    buf = io.StringIO()
    buf.write(f"{param},mean_test_asl,error\n")
    for r in rows:
        mean = "" if r.mean_test_asl is None else repr(r.mean_test_asl)
        err = "" if r.error is None else r.error.replace("\n", " ").replace(",", ";")
        buf.write(f"{r.value!r},{mean},{err}\n")
    return buf.getvalue()
