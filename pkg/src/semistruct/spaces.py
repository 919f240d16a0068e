"""Concrete output spaces: flat multiclass, taxonomy leaves, label chains.

Each space fixes a canonical output encoding, a joint feature map, a
structured loss and the three inference oracles. The multiclass and taxonomy
spaces enumerate their (small, finite) output sets; the chain space answers
score and Hamming-coupled queries with dynamic programs and falls back to
capped enumeration for the non-decomposable whole-sequence zero-one loss.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import OutputSpace, as_weights, loss_augmented_value
from .errors import ContractViolation, UnsupportedConfiguration

DEFAULT_ENUMERATION_CAP = 4096


def _as_flat_input(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != dim:
        raise ContractViolation(f"input has shape {x.shape}, expected ({dim},)")
    return x


class MulticlassSpace(OutputSpace):
    """Flat classification with a one-hot block feature map.

    Outputs are class indices ``0 .. num_classes-1``. The joint feature
    vector has ``num_classes`` blocks of length ``input_dim``; the block of
    the chosen class holds the input and every other block is zero (the
    outer product of the input with the class indicator, flattened). The
    loss is zero-one.
    """

    kind = "multiclass"
    input_ndim = 1
    enumerable = True

    def __init__(self, num_classes, input_dim):
        if num_classes < 2:
            raise ContractViolation(f"need at least 2 classes, got {num_classes}")
        if input_dim < 1:
            raise ContractViolation(f"input_dim must be >= 1, got {input_dim}")
        self.num_classes = int(num_classes)
        self.input_dim = int(input_dim)
        self.dim = self.num_classes * self.input_dim

    def contains(self, y, x=None):
        return (
            isinstance(y, (int, np.integer))
            and not isinstance(y, bool)
            and 0 <= int(y) < self.num_classes
        )

    def _check_member(self, y):
        if not self.contains(y):
            raise ContractViolation(f"{y!r} is not a class index in [0, {self.num_classes})")
        return int(y)

    def phi(self, x, y):
        x = _as_flat_input(x, self.input_dim)
        k = self._check_member(y)
        out = np.zeros(self.dim)
        out[k * self.input_dim : (k + 1) * self.input_dim] = x
        return out

    def delta(self, y1, y2):
        a, b = self._check_member(y1), self._check_member(y2)
        return 0.0 if a == b else 1.0

    def outputs(self, x=None):
        return range(self.num_classes)

    def random_output(self, x, rng):
        return int(rng.integers(self.num_classes))

    def decode(self, value):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ContractViolation(f"multiclass output must be an int, got {value!r}")
        return self._check_member(value)

    def config(self):
        return {
            "kind": self.kind,
            "num_classes": self.num_classes,
            "input_dim": self.input_dim,
        }


@dataclass(frozen=True)
class Taxonomy:
    """Rooted tree over node ids ``0 .. q-1`` given as parent links.

    ``parents[i]`` is the parent id of node ``i``, or None for the single
    root. Leaves (nodes without children) form the output set of the
    taxonomy space.
    """

    parents: tuple
    names: tuple | None = None

    def __post_init__(self):
        q = len(self.parents)
        if q < 2:
            raise ContractViolation("taxonomy needs at least a root and one leaf")
        roots = [i for i, p in enumerate(self.parents) if p is None]
        if len(roots) != 1:
            raise ContractViolation(f"taxonomy must have exactly one root, found {len(roots)}")
        for i, p in enumerate(self.parents):
            if p is not None and not (0 <= p < q):
                raise ContractViolation(f"node {i} has parent {p} outside 0..{q - 1}")
        # reject cycles: every node must reach the root
        for i in range(q):
            seen = set()
            j = i
            while self.parents[j] is not None:
                if j in seen:
                    raise ContractViolation(f"cycle detected at node {i}")
                seen.add(j)
                j = self.parents[j]

    def __len__(self):
        return len(self.parents)

    @cached_property
    def root(self):
        return next(i for i, p in enumerate(self.parents) if p is None)

    @cached_property
    def children(self):
        kids = [[] for _ in self.parents]
        for i, p in enumerate(self.parents):
            if p is not None:
                kids[p].append(i)
        return tuple(tuple(k) for k in kids)

    @cached_property
    def leaves(self):
        return tuple(i for i, k in enumerate(self.children) if not k)

    @cached_property
    def paths(self):
        """Per node: ids on the path to the root, node and root included."""
        out = []
        for i in range(len(self.parents)):
            path = [i]
            while self.parents[path[-1]] is not None:
                path.append(self.parents[path[-1]])
            out.append(tuple(path))
        return tuple(out)

    @cached_property
    def heights(self):
        """Per node: maximum edge distance to a descendant leaf (0 at leaves)."""
        h = [None] * len(self.parents)

        def rec(i):
            if h[i] is None:
                kids = self.children[i]
                h[i] = 0 if not kids else 1 + max(rec(c) for c in kids)
            return h[i]

        rec(self.root)
        return tuple(h)

    def first_common_ancestor(self, a, b):
        on_a = set(self.paths[a])
        for node in self.paths[b]:
            if node in on_a:
                return node
        return self.root


def three_level_taxonomy(branches=3, leaves_per_branch=5):
    """Root with ``branches`` children, each carrying ``leaves_per_branch``
    leaves. branches=3, leaves_per_branch=5 yields the canonical 19-node
    scene-style tree."""
    parents = [None]
    names = ["root"]
    for b in range(branches):
        parents.append(0)
        names.append(f"branch-{b}")
    for b in range(branches):
        for l in range(leaves_per_branch):
            parents.append(1 + b)
            names.append(f"leaf-{b}-{l}")
    return Taxonomy(tuple(parents), tuple(names))


class TaxonomySpace(OutputSpace):
    """Hierarchical classification over the leaves of a rooted tree.

    Outputs are leaf node ids. The feature vector has one block per tree
    node; the blocks of the leaf and all of its ancestors hold the input,
    the rest are zero. The loss between two leaves is the height of their
    first common ancestor, where height is the maximum edge distance from a
    node down to any of its descendant leaves. Identical leaves meet at
    themselves, so the loss is zero exactly on equal outputs.
    """

    kind = "taxonomy"
    input_ndim = 1
    enumerable = True

    def __init__(self, tree: Taxonomy, input_dim):
        if input_dim < 1:
            raise ContractViolation(f"input_dim must be >= 1, got {input_dim}")
        self.tree = tree
        self.input_dim = int(input_dim)
        self.dim = len(tree) * self.input_dim
        self._leaf_set = frozenset(tree.leaves)

    def contains(self, y, x=None):
        return (
            isinstance(y, (int, np.integer))
            and not isinstance(y, bool)
            and int(y) in self._leaf_set
        )

    def _check_member(self, y):
        if not self.contains(y):
            raise ContractViolation(f"{y!r} is not a leaf of the taxonomy")
        return int(y)

    def phi(self, x, y):
        x = _as_flat_input(x, self.input_dim)
        leaf = self._check_member(y)
        out = np.zeros(self.dim)
        d = self.input_dim
        for node in self.tree.paths[leaf]:
            out[node * d : (node + 1) * d] = x
        return out

    def delta(self, y1, y2):
        a, b = self._check_member(y1), self._check_member(y2)
        return float(self.tree.heights[self.tree.first_common_ancestor(a, b)])

    def outputs(self, x=None):
        return iter(self.tree.leaves)

    def random_output(self, x, rng):
        return int(self.tree.leaves[int(rng.integers(len(self.tree.leaves)))])

    def decode(self, value):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ContractViolation(f"taxonomy output must be an int node id, got {value!r}")
        return self._check_member(value)

    def config(self):
        names = self.tree.names or tuple(str(i) for i in range(len(self.tree)))
        return {
            "kind": self.kind,
            "input_dim": self.input_dim,
            "nodes": [
                {"id": i, "parent": self.tree.parents[i], "name": names[i]}
                for i in range(len(self.tree))
            ],
        }


class ChainSequenceSpace(OutputSpace):
    """Label sequences over a fixed alphabet with chain-structured features.

    An input is a ``(T, d)`` array of per-position features; an output is a
    length-T tuple of labels in ``0 .. num_labels-1``. Features concatenate
    a transition histogram (``num_labels**2`` counts, row-major by previous
    label) with per-label summed emissions (``num_labels * d``).

    ``loss="hamming"`` counts differing positions and keeps every oracle
    solvable by dynamic programming. ``loss="zero-one"`` is 1 whenever the
    sequences differ; it does not decompose, so the loss-coupled oracles
    enumerate candidates and refuse inputs whose candidate count exceeds
    ``enumeration_cap``.
    """

    kind = "chain"
    input_ndim = 2
    enumerable = False

    LOSS_MODES = ("hamming", "zero-one")

    def __init__(self, num_labels, input_dim, loss="hamming",
                 enumeration_cap=DEFAULT_ENUMERATION_CAP):
        if num_labels < 2:
            raise ContractViolation(f"need at least 2 labels, got {num_labels}")
        if input_dim < 1:
            raise ContractViolation(f"input_dim must be >= 1, got {input_dim}")
        if loss not in self.LOSS_MODES:
            raise ContractViolation(f"loss must be one of {self.LOSS_MODES}, got {loss!r}")
        if enumeration_cap < 1:
            raise ContractViolation("enumeration_cap must be >= 1")
        self.num_labels = int(num_labels)
        self.input_dim = int(input_dim)
        self.loss = loss
        self.enumeration_cap = int(enumeration_cap)
        self.dim = self.num_labels**2 + self.num_labels * self.input_dim

    # --- membership and encoding -------------------------------------------

    def contains(self, y, x=None):
        if not isinstance(y, tuple) or len(y) == 0:
            return False
        for v in y:
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                return False
            if not 0 <= int(v) < self.num_labels:
                return False
        if x is not None and len(y) != self._as_seq_input(x).shape[0]:
            return False
        return True

    def _check_member(self, y):
        if not self.contains(y):
            raise ContractViolation(f"{y!r} is not a label sequence over {self.num_labels} labels")
        return tuple(int(v) for v in y)

    def _as_seq_input(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.input_dim or x.shape[0] < 1:
            raise ContractViolation(
                f"sequence input has shape {x.shape}, expected (T, {self.input_dim})"
            )
        return x

    def decode(self, value):
        if not isinstance(value, list) or not value:
            raise ContractViolation(f"chain output must be a non-empty list, got {value!r}")
        for v in value:
            if isinstance(v, bool) or not isinstance(v, int):
                raise ContractViolation(f"chain labels must be ints, got {v!r}")
        return self._check_member(tuple(value))

    def encode(self, y):
        return list(self._check_member(y))

    def config(self):
        return {
            "kind": self.kind,
            "num_labels": self.num_labels,
            "input_dim": self.input_dim,
            "loss": self.loss,
            "enumeration_cap": self.enumeration_cap,
        }

    # --- features and loss ---------------------------------------------------

    def phi(self, x, y):
        x = self._as_seq_input(x)
        y = self._check_member(y)
        if len(y) != x.shape[0]:
            raise ContractViolation(
                f"label sequence length {len(y)} does not match input length {x.shape[0]}"
            )
        a, d = self.num_labels, self.input_dim
        out = np.zeros(self.dim)
        for t in range(1, len(y)):
            out[y[t - 1] * a + y[t]] += 1.0
        base = a * a
        for t, label in enumerate(y):
            out[base + label * d : base + (label + 1) * d] += x[t]
        return out

    def delta(self, y1, y2):
        y1, y2 = self._check_member(y1), self._check_member(y2)
        if len(y1) != len(y2):
            raise ContractViolation(
                f"cannot compare label sequences of lengths {len(y1)} and {len(y2)}"
            )
        if self.loss == "zero-one":
            return 0.0 if y1 == y2 else 1.0
        return float(sum(1 for a, b in zip(y1, y2) if a != b))

    # --- enumeration ----------------------------------------------------------

    def candidate_count(self, x):
        return self.num_labels ** self._as_seq_input(x).shape[0]

    def outputs(self, x=None):
        if x is None:
            raise ContractViolation("chain enumeration needs the input (its length)")
        n = self.candidate_count(x)
        if n > self.enumeration_cap:
            raise UnsupportedConfiguration(
                f"{n} candidate sequences exceed the enumeration cap "
                f"of {self.enumeration_cap}"
            )
        length = self._as_seq_input(x).shape[0]
        return (tuple(y) for y in itertools.product(range(self.num_labels), repeat=length))

    def random_output(self, x, rng):
        length = self._as_seq_input(x).shape[0]
        return tuple(int(v) for v in rng.integers(self.num_labels, size=length))

    # --- dynamic programs ------------------------------------------------------

    def _score_tables(self, w, x):
        """Split weights into transition matrix and per-position unary scores."""
        a, d = self.num_labels, self.input_dim
        pairwise = w[: a * a].reshape(a, a)
        emit = w[a * a :].reshape(a, d)
        unary = x @ emit.T  # (T, a)
        return unary, pairwise

    @staticmethod
    def _best_path(unary, pairwise):
        """Max-sum path through the chain, ties toward the smallest labels.

        Runs the recursion backward then rebuilds the path greedily from the
        front, so the returned sequence is the lexicographically smallest
        maximizer.
        """
        length, a = unary.shape
        best_to_go = np.empty((length, a))
        best_to_go[length - 1] = unary[length - 1]
        for t in range(length - 2, -1, -1):
            best_to_go[t] = unary[t] + np.max(pairwise + best_to_go[t + 1][None, :], axis=1)
        path = [int(np.argmax(best_to_go[0]))]
        for t in range(1, length):
            path.append(int(np.argmax(pairwise[path[-1]] + best_to_go[t])))
        return tuple(path)

    def argmax_score(self, w, x):
        w = as_weights(w, self.dim)
        x = self._as_seq_input(x)
        unary, pairwise = self._score_tables(w, x)
        return self._best_path(unary, pairwise)

    def argmax_loss_augmented(self, w, x, z):
        w = as_weights(w, self.dim)
        x = self._as_seq_input(x)
        z = self._check_member(z)
        if len(z) != x.shape[0]:
            raise ContractViolation("reference output length does not match the input")
        if self.loss == "zero-one":
            # whole-sequence loss does not decompose; enumerate under the cap
            return super().argmax_loss_augmented(w, x, z)
        unary, pairwise = self._score_tables(w, x)
        aug = unary + 1.0
        aug[np.arange(len(z)), np.asarray(z)] -= 1.0  # no reward for matching positions
        y = self._best_path(aug, pairwise)
        return y, loss_augmented_value(w, x, z, y, self)

    def argmin_slack(self, w, x, upsilon, neighbors, c1):
        if c1 <= 0:
            raise ContractViolation(f"c1 must be positive, got {c1}")
        w = as_weights(w, self.dim)
        x = self._as_seq_input(x)
        upsilon = self._check_member(upsilon)
        length = x.shape[0]
        if len(upsilon) != length:
            raise ContractViolation("upsilon length does not match the input")
        if self.loss == "zero-one":
            return super().argmin_slack(w, x, upsilon, neighbors, c1)

        for _, z_nb in neighbors:
            if len(z_nb) != length:
                raise ContractViolation(
                    "hamming slack update needs neighbor outputs of the same length"
                )
        unary, pairwise = self._score_tables(w, x)
        a = self.num_labels
        # position-wise costs: neighbor disagreement + model score + upsilon loss
        cost = np.zeros((length, a))
        for omega, z_nb in neighbors:
            cost += omega
            cost[np.arange(length), [int(v) for v in z_nb]] -= omega
        cost += c1 * (1.0 - unary)
        cost[np.arange(length), np.asarray(upsilon)] -= c1
        y = self._best_path(-cost, c1 * pairwise)
        return y


def space_from_config(cfg: dict) -> OutputSpace:
    """Rebuild a space from the dict produced by ``OutputSpace.config``."""
    kind = cfg.get("kind")
    if kind == "multiclass":
        return MulticlassSpace(cfg["num_classes"], cfg["input_dim"])
    if kind == "taxonomy":
        nodes = sorted(cfg["nodes"], key=lambda n: n["id"])
        if [n["id"] for n in nodes] != list(range(len(nodes))):
            raise ContractViolation("taxonomy node ids must be contiguous from 0")
        parents = tuple(n["parent"] for n in nodes)
        names = tuple(str(n.get("name", i)) for i, n in enumerate(nodes))
        return TaxonomySpace(Taxonomy(parents, names), cfg["input_dim"])
    if kind == "chain":
        return ChainSequenceSpace(
            cfg["num_labels"],
            cfg["input_dim"],
            loss=cfg.get("loss", "hamming"),
            enumeration_cap=cfg.get("enumeration_cap", DEFAULT_ENUMERATION_CAP),
        )
    raise ContractViolation(f"unknown space kind {kind!r}")
