import numpy as np
import pytest

from fairthresh.metrics import Dataset, ScoredInstance
from fairthresh.partition import partition_by_attribute


@pytest.fixture
def four_instances():
    """The hand-enumerable quartet: one of each confusion outcome at tau=0.5."""
    return [
        ScoredInstance(id="a", score=0.9, label=1),
        ScoredInstance(id="b", score=0.8, label=0),
        ScoredInstance(id="c", score=0.3, label=1),
        ScoredInstance(id="d", score=0.1, label=0),
    ]


@pytest.fixture
def gender_dataset():
    """Small two-subgroup dataset with a planted PPV gap at tau=0.5."""
    rng = np.random.default_rng(7)
    instances = []
    for name, neg_shape in (("M", (2.0, 5.0)), ("F", (3.2, 3.0))):
        for i in range(300):
            label = int(rng.random() < 0.5)
            score = rng.beta(5, 2) if label else rng.beta(*neg_shape)
            instances.append(
                ScoredInstance(
                    id=f"{name}{i}", score=float(score), label=label, attribute=name
                )
            )
    dataset = Dataset(instances=tuple(instances))
    return dataset, partition_by_attribute(dataset, "gender")


def make_block(prefix, score, n_pos, n_neg, attribute):
    """n_pos positives and n_neg negatives, all at one score."""
    out = []
    for i in range(n_pos):
        out.append(
            ScoredInstance(
                id=f"{prefix}p{i}", score=score, label=1, attribute=attribute
            )
        )
    for i in range(n_neg):
        out.append(
            ScoredInstance(
                id=f"{prefix}n{i}", score=score, label=0, attribute=attribute
            )
        )
    return out


@pytest.fixture
def additive_counterexample():
    """Three subgroups where raising every subgroup's PPV can sink pooled PPV.

    Subgroup B holds most of the high-PPV positive-prediction mass at the
    baseline; an assignment that bumps every subgroup's PPV slightly while
    collapsing B's mass drags the pooled value down. Verified arithmetically
    in the tests that use it.
    """
    instances = []
    instances += make_block("A9", 0.90, 9, 1, "A")
    instances += make_block("A95", 0.95, 5, 0, "A")
    instances += make_block("B5", 0.50, 85, 15, "B")
    instances += make_block("B55", 0.55, 43, 7, "B")
    instances += make_block("C5", 0.50, 2, 8, "C")
    instances += make_block("C55", 0.55, 57, 133, "C")
    dataset = Dataset(instances=tuple(instances))
    return dataset, partition_by_attribute(dataset, "block")
