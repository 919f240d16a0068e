"""Dataset and taxonomy files, synthetic generators, fold masking.

Dataset files are JSON Lines, one record per point:

    {"id": 0, "x": [0.5, -1.2], "y": 3}

``x`` is a flat list for vector inputs or a list of per-position lists for
sequence inputs; ``y`` uses the space encoding (int class, int leaf id, or
list of int labels) and is null for unlabeled points.

Taxonomy files are JSON documents ``{"nodes": [{"id": 0, "parent": null,
"name": "root"}, ...]}`` with exactly one null parent and ids contiguous
from 0.

The synthetic generators stand in for benchmark corpora at desk scale; all
of them are deterministic in their seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .core import DataPoint, Dataset, validate_dataset
from .errors import ContractViolation, DataFormatError
from .spaces import Taxonomy

_SEED_TAG_FOLDS = 211
_SEED_TAG_BLOBS = 223
_SEED_TAG_TAXO = 227
_SEED_TAG_CHAINS = 229

NUM_FOLDS = 10
NUM_LABELED_FOLDS = 2


# --- dataset files ----------------------------------------------------------


def load_dataset(path, space, require_labeled=False) -> Dataset:
    """Parse and validate a JSONL dataset file.

    Rejects duplicate or non-contiguous ids, ragged or mis-shaped inputs and
    outputs not in the space, naming the offending line. ``require_labeled``
    additionally demands at least one labeled point (prediction inputs may
    legitimately have none).
    """
    records = {}
    with open(path) as f:
        for ln, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataFormatError(f"{path}:{ln}: invalid JSON ({e})") from None
            if not isinstance(rec, dict) or "id" not in rec or "x" not in rec:
                raise DataFormatError(f"{path}:{ln}: record needs 'id' and 'x' fields")
            pid = rec["id"]
            if not isinstance(pid, int) or isinstance(pid, bool):
                raise DataFormatError(f"{path}:{ln}: id must be an integer, got {pid!r}")
            if pid in records:
                raise DataFormatError(f"{path}:{ln}: duplicate id {pid}")
            try:
                x = np.asarray(rec["x"], dtype=float)
            except (ValueError, TypeError):
                raise DataFormatError(f"{path}:{ln}: ragged or non-numeric x") from None
            if x.ndim != space.input_ndim:
                raise DataFormatError(
                    f"{path}:{ln}: x has {x.ndim} dimension(s), "
                    f"space expects {space.input_ndim}"
                )
            raw_y = rec.get("y")
            if raw_y is None:
                y = None
            else:
                try:
                    y = space.decode(raw_y)
                except ContractViolation as e:
                    raise DataFormatError(f"{path}:{ln}: bad output: {e}") from None
                if not space.contains(y, x=x):
                    raise DataFormatError(
                        f"{path}:{ln}: output {raw_y!r} is not valid for this input"
                    )
            records[pid] = DataPoint(pid, x, y)

    if not records:
        raise DataFormatError(f"{path}: no records")
    n = len(records)
    if sorted(records) != list(range(n)):
        missing = sorted(set(range(n)) - set(records))[:5]
        raise DataFormatError(
            f"{path}: ids must be contiguous from 0 (missing {missing}, n={n})"
        )
    ds = Dataset(tuple(records[i] for i in range(n)), space_id=space.kind)

    report = validate_dataset(ds, space)
    problems = [
        v for v in report.violations
        if require_labeled or v != "dataset has no labeled points"
    ]
    if problems:
        raise DataFormatError(f"{path}: " + "; ".join(problems))
    return ds


def save_dataset(ds: Dataset, path, space):
    """Write a dataset as JSONL; inverse of :func:`load_dataset`."""
    with open(path, "w") as f:
        for p in ds.points:
            rec = {
                "id": p.id,
                "x": np.asarray(p.x, dtype=float).tolist(),
                "y": None if p.y is None else space.encode(p.y),
            }
            f.write(json.dumps(rec) + "\n")


# --- taxonomy files -----------------------------------------------------------


def load_taxonomy(path) -> Taxonomy:
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise DataFormatError(f"{path}: invalid JSON ({e})") from None
    nodes = doc.get("nodes") if isinstance(doc, dict) else None
    if not isinstance(nodes, list) or not nodes:
        raise DataFormatError(f"{path}: expected an object with a 'nodes' list")
    try:
        nodes = sorted(nodes, key=lambda nd: nd["id"])
        ids = [nd["id"] for nd in nodes]
        if ids != list(range(len(nodes))):
            raise DataFormatError(f"{path}: node ids must be contiguous from 0")
        parents = tuple(nd["parent"] for nd in nodes)
        names = tuple(str(nd.get("name", i)) for i, nd in enumerate(nodes))
    except (KeyError, TypeError):
        raise DataFormatError(f"{path}: each node needs 'id' and 'parent'") from None
    try:
        return Taxonomy(parents, names)
    except ContractViolation as e:
        raise DataFormatError(f"{path}: {e}") from None


def save_taxonomy(tree: Taxonomy, path):
    names = tree.names or tuple(str(i) for i in range(len(tree)))
    doc = {
        "nodes": [
            {"id": i, "parent": tree.parents[i], "name": names[i]}
            for i in range(len(tree))
        ]
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


# --- synthetic generators ------------------------------------------------------


def _ring(count, radius, dim):
    """Evenly spaced centers on a circle in the first two dimensions."""
    out = np.zeros((count, dim))
    for i in range(count):
        angle = 2.0 * math.pi * i / count
        out[i, 0] = radius * math.cos(angle)
        out[i, 1] = radius * math.sin(angle)
    return out


def synth_blobs(classes, per_class, dim, spread, seed) -> Dataset:
    """Gaussian clusters with unit-separated means, one class per cluster.

    With ``dim >= classes`` the means sit on scaled coordinate axes, putting
    every pair of centers exactly unit distance apart; otherwise they sit on
    a circle in the first two dimensions with adjacent centers a unit apart.
    """
    if classes < 2:
        raise ContractViolation(f"need at least 2 classes, got {classes}")
    if dim < 2:
        raise ContractViolation(f"need dim >= 2, got {dim}")
    rng = np.random.default_rng((seed, _SEED_TAG_BLOBS))
    if dim >= classes:
        means = np.zeros((classes, dim))
        means[np.arange(classes), np.arange(classes)] = 1.0 / math.sqrt(2.0)
    else:
        means = _ring(classes, 1.0 / (2.0 * math.sin(math.pi / classes)), dim)
    points = []
    for k in range(classes):
        for _ in range(per_class):
            x = means[k] + spread * rng.standard_normal(dim)
            points.append(DataPoint(len(points), x, k))
    return Dataset(tuple(points), space_id="multiclass")


def taxonomy_leaf_centers(tree: Taxonomy, dim) -> dict:
    """Deterministic leaf centers mirroring the tree metric.

    Children sit on a circle around their parent whose radius shrinks fast
    enough down the tree that leaves under one branch stay strictly closer
    to each other than to any leaf of another branch.
    """
    if dim < 2:
        raise ContractViolation(f"need dim >= 2, got {dim}")
    centers = {tree.root: np.zeros(dim)}
    queue = [(tree.root, 3.0)]
    while queue:
        node, radius = queue.pop(0)
        kids = tree.children[node]
        if not kids:
            continue
        offsets = _ring(len(kids), radius, dim)
        separation = (
            2.0 * radius * math.sin(math.pi / len(kids)) if len(kids) > 1 else radius
        )
        for j, kid in enumerate(kids):
            centers[kid] = centers[node] + offsets[j]
            queue.append((kid, separation / 10.0))
    return {leaf: centers[leaf] for leaf in tree.leaves}


def synth_taxonomy_blobs(tree: Taxonomy, per_leaf, dim, spread, seed) -> Dataset:
    """Gaussian cluster per leaf, sibling leaves closer than cross-branch."""
    rng = np.random.default_rng((seed, _SEED_TAG_TAXO))
    centers = taxonomy_leaf_centers(tree, dim)
    points = []
    for leaf in tree.leaves:
        for _ in range(per_leaf):
            x = centers[leaf] + spread * rng.standard_normal(dim)
            points.append(DataPoint(len(points), x, int(leaf)))
    return Dataset(tuple(points), space_id="taxonomy")


def synth_chains(num_labels, length_range, count, dim, seed,
                 transition=None, spread=0.5) -> Dataset:
    """Label sequences from a sticky Markov chain with Gaussian emissions.

    ``length_range`` is an inclusive (lo, hi) pair. ``transition`` overrides
    the default 0.6-self-loop matrix; rows must sum to 1.
    """
    if num_labels < 2:
        raise ContractViolation(f"need at least 2 labels, got {num_labels}")
    lo, hi = length_range
    if lo < 1 or hi < lo:
        raise ContractViolation(f"bad length range {length_range}")
    rng = np.random.default_rng((seed, _SEED_TAG_CHAINS))
    if transition is None:
        off = 0.4 / (num_labels - 1)
        transition = np.full((num_labels, num_labels), off)
        np.fill_diagonal(transition, 0.6)
    else:
        transition = np.asarray(transition, dtype=float)
        if transition.shape != (num_labels, num_labels):
            raise ContractViolation("transition matrix shape must be (a, a)")
    # label emission centers a unit apart along the first axis
    means = np.zeros((num_labels, dim))
    means[:, 0] = np.arange(num_labels)

    points = []
    for i in range(count):
        length = int(rng.integers(lo, hi + 1))
        labels = [int(rng.integers(num_labels))]
        for _ in range(length - 1):
            labels.append(int(rng.choice(num_labels, p=transition[labels[-1]])))
        x = means[labels] + spread * rng.standard_normal((length, dim))
        points.append(DataPoint(i, x, tuple(labels)))
    return Dataset(tuple(points), space_id="chain")


# --- fold protocol ---------------------------------------------------------------


@dataclass(frozen=True)
class FoldPlan:
    """Ten-fold assignment plus, per run, which two train folds stay labeled.

    The labeled pair is drawn once per (seed, run) when the plan is built,
    so repeated runs of the same plan are identical.
    """

    seed: int
    fold_of: tuple
    labeled_folds: tuple

    @property
    def n(self):
        return len(self.fold_of)


def make_folds(ds: Dataset, seed) -> FoldPlan:
    """Random ten-fold partition with sizes differing by at most one."""
    n = len(ds.points)
    if n < NUM_FOLDS:
        raise ContractViolation(f"need at least {NUM_FOLDS} points, got {n}")
    rng = np.random.default_rng((seed, _SEED_TAG_FOLDS))
    perm = rng.permutation(n)
    fold_of = np.empty(n, dtype=int)
    for f, chunk in enumerate(np.array_split(perm, NUM_FOLDS)):
        fold_of[chunk] = f
    labeled_pairs = []
    for run in range(NUM_FOLDS):
        train_folds = [f for f in range(NUM_FOLDS) if f != run]
        pick = rng.choice(len(train_folds), size=NUM_LABELED_FOLDS, replace=False)
        labeled_pairs.append(tuple(sorted(train_folds[i] for i in pick)))
    return FoldPlan(seed, tuple(int(f) for f in fold_of), tuple(labeled_pairs))


class MaskedSplit(NamedTuple):
    """Train set with 7 of 9 folds masked, the test fold, and the held-back
    outputs of the masked points keyed by train-local id (for transductive
    scoring only; never hand them to the solver)."""

    train: Dataset
    test: Dataset
    masked_truth: dict


def mask_labels(ds: Dataset, plan: FoldPlan, run_index) -> MaskedSplit:
    """Build the train/test datasets of one cross-validation run.

    The test fold keeps its outputs (they are the scoring truth); within the
    nine train folds only the two designated labeled folds keep theirs. The
    masked ground truth travels out-of-band. Inputs are never altered; both
    subsets are re-indexed contiguously from 0.
    """
    if not 0 <= run_index < NUM_FOLDS:
        raise ContractViolation(f"run_index must be in 0..{NUM_FOLDS - 1}, got {run_index}")
    if plan.n != len(ds.points):
        raise ContractViolation("fold plan does not match this dataset")
    keep_labeled = set(plan.labeled_folds[run_index])
    train, test, truth = [], [], {}
    for p in ds.points:
        f = plan.fold_of[p.id]
        if f == run_index:
            test.append(replace(p, id=len(test)))
        elif f in keep_labeled:
            train.append(replace(p, id=len(train)))
        else:
            nid = len(train)
            if p.y is not None:
                truth[nid] = p.y
            train.append(DataPoint(nid, p.x, None))
    return MaskedSplit(
        Dataset(tuple(train), ds.space_id),
        Dataset(tuple(test), ds.space_id),
        truth,
    )
