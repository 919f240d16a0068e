import numpy as np
import pytest

from semistruct import (
    ChainSequenceSpace,
    MulticlassSpace,
    Taxonomy,
    TaxonomySpace,
    three_level_taxonomy,
)


@pytest.fixture
def multiclass_space():
    return MulticlassSpace(3, 2)


@pytest.fixture
def scene_tree():
    """Root, three branches, fifteen leaves: 19 nodes."""
    return three_level_taxonomy()


@pytest.fixture
def taxonomy_space(scene_tree):
    return TaxonomySpace(scene_tree, 2)


@pytest.fixture
def small_tree():
    """Five nodes: root 0, inner 1 and 2, leaf 3 under 1, leaf 4 under 2."""
    return Taxonomy((None, 0, 0, 1, 2), ("root", "a", "b", "leaf-a", "leaf-b"))


@pytest.fixture
def hamming_chain_space():
    return ChainSequenceSpace(2, 1, loss="hamming")


def random_flat_space(rng):
    """A random enumerable space plus a matching random input."""
    if rng.integers(2) == 0:
        c = int(rng.integers(2, 7))
        d = int(rng.integers(1, 6))
        space = MulticlassSpace(c, d)
    else:
        space = TaxonomySpace(three_level_taxonomy(), int(rng.integers(1, 6)))
    x = rng.standard_normal(space.input_dim)
    return space, x


def random_chain_instance(rng, max_labels=3, max_len=5, loss="hamming"):
    a = int(rng.integers(2, max_labels + 1))
    d = int(rng.integers(1, 4))
    length = int(rng.integers(1, max_len + 1))
    space = ChainSequenceSpace(a, d, loss=loss)
    x = rng.standard_normal((length, d))
    return space, x
