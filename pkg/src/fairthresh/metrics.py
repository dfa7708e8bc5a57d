"""Confusion-count and utility-measure arithmetic for scored instance sets.

Everything in here is a pure function of immutable inputs; datasets are
read-only snapshots that can be shared across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

from .errors import DatasetError, EmptyInputError, UndefinedUtilityError

if TYPE_CHECKING:
    from .partition import SubgroupPartition


class UtilityKind(str, Enum):
    """Selectable measure mapping confusion counts to a value in [0, 1].

    PPV is the default; each kind is undefined when its denominator is zero
    (an UndefinedUtilityError, never a silent 0 or 1).
    """

    PPV = "ppv"
    NPV = "npv"
    TPR = "tpr"
    ACCURACY = "accuracy"


@dataclass(frozen=True)
class ScoredInstance:
    """One observation: a probability estimate with its binary outcome.

    ``label`` 1 is the positive class (e.g. defaulted), 0 the negative
    (e.g. paid). ``features`` and ``attribute`` are only needed by the
    partitioning layer and may be absent.
    """

    id: str
    score: float
    label: int
    features: tuple[float, ...] | None = None
    attribute: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise DatasetError(
                f"instance {self.id!r}: score {self.score} outside [0, 1]"
            )
        if self.label not in (0, 1):
            raise DatasetError(
                f"instance {self.id!r}: label {self.label} is not binary"
            )


@dataclass(frozen=True)
class Dataset:
    """Ordered, validated collection of scored instances.

    Score and label arrays are precomputed once so metric sweeps stay cheap.
    """

    instances: tuple[ScoredInstance, ...]
    feature_names: tuple[str, ...] | None = None
    scores: np.ndarray = field(init=False, repr=False, compare=False)
    labels: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.instances:
            raise EmptyInputError("a dataset must contain at least one instance")
        seen: set[str] = set()
        for inst in self.instances:
            if inst.id in seen:
                raise DatasetError(f"duplicate instance id {inst.id!r}")
            seen.add(inst.id)
        if self.feature_names is not None:
            width = len(self.feature_names)
            for inst in self.instances:
                if inst.features is not None and len(inst.features) != width:
                    raise DatasetError(
                        f"instance {inst.id!r}: feature vector has "
                        f"{len(inst.features)} values, expected {width}"
                    )
        object.__setattr__(
            self, "scores", np.array([i.score for i in self.instances], dtype=float)
        )
        object.__setattr__(
            self, "labels", np.array([i.label for i in self.instances], dtype=np.int64)
        )
        self.scores.setflags(write=False)
        self.labels.setflags(write=False)

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(inst.id for inst in self.instances)


@dataclass(frozen=True)
class ConfusionCounts:
    """TP/FP/TN/FN tallies for one instance set at one threshold."""

    tp: int
    fp: int
    tn: int
    fn: int
    tau: float

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def positive_predictions(self) -> int:
        return self.tp + self.fp


def classify(score: float, tau: float) -> bool:
    """Return True (positive) iff ``score >= tau``.

    The boundary is inclusive: a score exactly at the threshold classifies
    positive. Downstream threshold optimality depends on this convention.
    """
    return score >= tau


def confusion_counts(instances: Iterable[ScoredInstance], tau: float) -> ConfusionCounts:
    """Tally confusion outcomes for ``instances`` at threshold ``tau``."""
    items = list(instances)
    if not items:
        raise EmptyInputError("cannot compute confusion counts of an empty collection")
    scores = np.array([i.score for i in items], dtype=float)
    labels = np.array([i.label for i in items], dtype=np.int64)
    return counts_from_arrays(scores, labels, tau)


def counts_from_arrays(scores: np.ndarray, labels: np.ndarray, tau: float) -> ConfusionCounts:
    """Array form of :func:`confusion_counts` for preextracted columns."""
    if scores.size == 0:
        raise EmptyInputError("cannot compute confusion counts of an empty collection")
    positive = scores >= tau
    tp = int(np.count_nonzero(positive & (labels == 1)))
    fp = int(np.count_nonzero(positive & (labels == 0)))
    fn = int(np.count_nonzero(~positive & (labels == 1)))
    tn = int(scores.size - tp - fp - fn)
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn, tau=tau)


def utility(counts: ConfusionCounts, kind: UtilityKind = UtilityKind.PPV) -> float:
    """Evaluate ``kind`` on ``counts``; raises UndefinedUtilityError on a
    zero denominator rather than coercing to 0 or 1."""
    if kind is UtilityKind.PPV:
        denom = counts.tp + counts.fp
        num = counts.tp
    elif kind is UtilityKind.NPV:
        denom = counts.tn + counts.fn
        num = counts.tn
    elif kind is UtilityKind.TPR:
        denom = counts.tp + counts.fn
        num = counts.tp
    elif kind is UtilityKind.ACCURACY:
        denom = counts.total
        num = counts.tp + counts.tn
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown utility kind {kind!r}")
    if denom == 0:
        raise UndefinedUtilityError(kind, counts)
    return num / denom


def subgroup_utility(
    dataset: Dataset,
    partition: "SubgroupPartition",
    subgroup: str,
    tau: float,
    kind: UtilityKind = UtilityKind.PPV,
) -> float:
    """Utility of one subgroup's members at ``tau``."""
    members = partition.member_ids(subgroup)
    by_id = {inst.id: inst for inst in dataset.instances}
    try:
        return utility(confusion_counts((by_id[i] for i in members), tau), kind)
    except UndefinedUtilityError as err:
        raise UndefinedUtilityError(err.kind, err.counts, subgroup=subgroup) from None


class ScoreIndex:
    """Score-sorted prefix sums for one instance set.

    Confusion counts at any threshold come from a binary search instead of a
    full pass, which keeps grid sweeps and what-if queries cheap. Counting is
    verified against :func:`confusion_counts` by property tests.
    """

    def __init__(self, scores: np.ndarray, labels: np.ndarray):
        if scores.size == 0:
            raise EmptyInputError("cannot index an empty instance set")
        order = np.argsort(scores, kind="stable")
        self.sorted_scores = scores[order]
        sorted_labels = labels[order]
        # suffix_pos[i] = number of label-1 instances with rank >= i
        self.suffix_pos = np.concatenate(
            [np.cumsum(sorted_labels[::-1])[::-1], [0]]
        ).astype(np.int64)
        self.size = int(scores.size)
        self.n_pos = int(self.suffix_pos[0])

    def counts_at(self, tau: float) -> ConfusionCounts:
        lo = int(np.searchsorted(self.sorted_scores, tau, side="left"))
        pospred = self.size - lo
        tp = int(self.suffix_pos[lo])
        fp = pospred - tp
        fn = self.n_pos - tp
        tn = self.size - pospred - fn
        return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn, tau=tau)

    def sweep(self, taus: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized (tp, positive-prediction) counts at each threshold."""
        taus_arr = np.asarray(taus, dtype=float)
        lo = np.searchsorted(self.sorted_scores, taus_arr, side="left")
        pospred = self.size - lo
        tp = self.suffix_pos[lo]
        return tp, pospred


def index_subgroups(
    dataset: Dataset, partition: "SubgroupPartition"
) -> Mapping[str, ScoreIndex]:
    """Build one ScoreIndex per subgroup of ``partition`` over ``dataset``."""
    partition.validate_against(dataset)
    row_of = {inst.id: row for row, inst in enumerate(dataset.instances)}
    indexes: dict[str, ScoreIndex] = {}
    for subgroup in partition.subgroup_ids:
        rows = np.array([row_of[i] for i in partition.member_ids(subgroup)], dtype=np.int64)
        indexes[subgroup] = ScoreIndex(dataset.scores[rows], dataset.labels[rows])
    return indexes
