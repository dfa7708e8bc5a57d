"""Subgroup partitions from a categorical attribute or k-means clustering."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import PartitionError
from .metrics import Dataset

KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-6
KMEANS_RESTARTS = 10


@dataclass(frozen=True)
class Standardization:
    """Per-feature location/scale recorded so new points can be projected
    into the same space. Constant features keep scale 1."""

    mean: np.ndarray
    scale: np.ndarray

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (features - self.mean) / self.scale


@dataclass(frozen=True)
class ClusterModel:
    centroids: np.ndarray
    standardization: Standardization
    k: int
    seed: int
    inertia: float

    def __post_init__(self):
        if self.k < 2:
            raise PartitionError("a cluster model needs k >= 2")
        if self.inertia < 0:
            raise PartitionError("inertia cannot be negative")


@dataclass(frozen=True)
class ElbowResult:
    inertia_by_k: Mapping[int, float]
    chosen_k: int
    method: str = "max-distance-to-chord"


@dataclass(frozen=True)
class AttributeProvenance:
    attribute: str

    def describe(self) -> str:
        return f"attribute({self.attribute})"


@dataclass(frozen=True)
class ClusterProvenance:
    model: ClusterModel

    def describe(self) -> str:
        return f"cluster(k={self.model.k}, seed={self.model.seed})"


@dataclass(frozen=True)
class SubgroupPartition:
    """Disjoint, exhaustive assignment of instance ids to subgroup ids."""

    assignment: Mapping[str, str]
    subgroup_ids: tuple[str, ...]
    provenance: AttributeProvenance | ClusterProvenance
    _members: Mapping[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        members: dict[str, list[str]] = {g: [] for g in self.subgroup_ids}
        for instance_id, subgroup in self.assignment.items():
            if subgroup not in members:
                raise PartitionError(
                    f"instance {instance_id!r} assigned to unlisted subgroup {subgroup!r}"
                )
            members[subgroup].append(instance_id)
        if len(self.subgroup_ids) < 2:
            raise PartitionError("a partition needs at least 2 subgroups")
        for subgroup, ids in members.items():
            if not ids:
                raise PartitionError(f"subgroup {subgroup!r} is empty")
        object.__setattr__(
            self, "_members", {g: tuple(ids) for g, ids in members.items()}
        )

    def member_ids(self, subgroup: str) -> tuple[str, ...]:
        try:
            return self._members[subgroup]
        except KeyError:
            raise PartitionError(f"unknown subgroup {subgroup!r}") from None

    def sizes(self) -> dict[str, int]:
        return {g: len(self._members[g]) for g in self.subgroup_ids}

    def validate_against(self, dataset: Dataset) -> None:
        """Check the partition is disjoint and exhaustive over ``dataset``."""
        dataset_ids = set(dataset.ids)
        assigned = set(self.assignment)
        missing = dataset_ids - assigned
        extra = assigned - dataset_ids
        if missing or extra:
            raise PartitionError(
                f"partition does not cover the dataset exactly: "
                f"{len(missing)} unassigned, {len(extra)} unknown ids"
            )


def partition_by_attribute(dataset: Dataset, attribute_name: str) -> SubgroupPartition:
    """One subgroup per distinct value of the instances' attribute."""
    missing = [inst.id for inst in dataset.instances if inst.attribute is None]
    if missing:
        raise PartitionError(
            f"attribute {attribute_name!r} missing for instances: "
            + ", ".join(repr(i) for i in missing[:10])
            + ("..." if len(missing) > 10 else "")
        )
    assignment = {inst.id: inst.attribute for inst in dataset.instances}
    values = sorted(set(assignment.values()))
    if len(values) < 2:
        raise PartitionError(
            f"attribute {attribute_name!r} has a single value {values[0]!r}; "
            "no subgroup pairs to compare"
        )
    return SubgroupPartition(
        assignment=assignment,
        subgroup_ids=tuple(values),
        provenance=AttributeProvenance(attribute_name),
    )


def feature_matrix(dataset: Dataset) -> np.ndarray:
    """Stack instance feature vectors, erroring on missing ones."""
    missing = [inst.id for inst in dataset.instances if inst.features is None]
    if missing:
        raise PartitionError(
            "clustering needs complete feature vectors; missing for: "
            + ", ".join(repr(i) for i in missing[:10])
            + ("..." if len(missing) > 10 else "")
        )
    matrix = np.array([inst.features for inst in dataset.instances], dtype=float)
    if not np.all(np.isfinite(matrix)):
        raise PartitionError("feature matrix contains non-finite values")
    return matrix


def standardize(features: np.ndarray) -> tuple[np.ndarray, Standardization]:
    """Scale each feature to sample mean 0 and sample std 1 (ddof=1).

    Constant features map to all zeros with recorded scale 1 so projection
    of new points stays defined.
    """
    if features.size == 0:
        raise PartitionError("cannot standardize an empty matrix")
    mean = features.mean(axis=0)
    if features.shape[0] > 1:
        scale = features.std(axis=0, ddof=1)
    else:
        scale = np.zeros(features.shape[1])
    scale = np.where(scale == 0.0, 1.0, scale)
    params = Standardization(mean=mean, scale=scale)
    return params.apply(features), params


def _kmeans_plusplus(features: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: spread initial centroids by squared distance."""
    n = features.shape[0]
    centroids = np.empty((k, features.shape[1]))
    centroids[0] = features[rng.integers(n)]
    closest_sq = np.sum((features - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = closest_sq.sum()
        if total == 0.0:
            centroids[j:] = features[rng.integers(n, size=k - j)]
            break
        probs = closest_sq / total
        centroids[j] = features[rng.choice(n, p=probs)]
        closest_sq = np.minimum(
            closest_sq, np.sum((features - centroids[j]) ** 2, axis=1)
        )
    return centroids


def _nearest_centroid(features: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # argmin returns the lowest index on ties, which is the documented rule
    distances = np.linalg.norm(features[:, None, :] - centroids[None, :, :], axis=2)
    return np.argmin(distances, axis=1)


def _lloyd(features: np.ndarray, k: int, rng: np.random.Generator, max_iter: int, tol: float):
    centroids = _kmeans_plusplus(features, k, rng)
    for _ in range(max_iter):
        labels = _nearest_centroid(features, centroids)
        new_centroids = centroids.copy()
        for j in range(k):
            members = features[labels == j]
            if members.shape[0] > 0:
                new_centroids[j] = members.mean(axis=0)
        shift = float(np.linalg.norm(new_centroids - centroids))
        centroids = new_centroids
        if shift < tol:
            break
    labels = _nearest_centroid(features, centroids)
    inertia = float(np.sum((features - centroids[labels]) ** 2))
    return centroids, inertia


def kmeans_fit(
    features: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = KMEANS_MAX_ITER,
    tol: float = KMEANS_TOL,
    restarts: int = KMEANS_RESTARTS,
    standardization: Standardization | None = None,
) -> ClusterModel:
    """Lloyd's k-means with k-means++ seeding, deterministic given ``seed``.

    Runs ``restarts`` independent seedings (sub-streams spawned from ``seed``)
    and keeps the lowest-inertia fit, which guards against poor single-init
    local optima. ``features`` are expected to be standardized already; pass
    the Standardization so the model can project new points.
    """
    if k < 2:
        raise PartitionError("k must be at least 2")
    if features.shape[0] < k:
        raise PartitionError(f"k={k} exceeds the {features.shape[0]} available rows")
    if not np.all(np.isfinite(features)):
        raise PartitionError("feature matrix contains non-finite values")

    best_centroids = None
    best_inertia = np.inf
    for stream in np.random.SeedSequence(seed).spawn(max(1, restarts)):
        centroids, inertia = _lloyd(
            features, k, np.random.default_rng(stream), max_iter, tol
        )
        if inertia < best_inertia:
            best_centroids, best_inertia = centroids, inertia
    if standardization is None:
        width = features.shape[1]
        standardization = Standardization(mean=np.zeros(width), scale=np.ones(width))
    return ClusterModel(
        centroids=best_centroids,
        standardization=standardization,
        k=k,
        seed=seed,
        inertia=best_inertia,
    )


def elbow_select_k(
    features: np.ndarray, k_range: tuple[int, int], seed: int
) -> ElbowResult:
    """Fit k-means across ``k_range`` and pick k at the inertia curve's bend.

    The bend is the point farthest (perpendicular) from the chord joining the
    curve's endpoints, with both axes normalized to [0, 1]; ties go to the
    smallest k. Per-k fits derive their seed as ``seed + k`` so they are
    independent and reproducible.
    """
    k_min, k_max = k_range
    if k_min > k_max:
        raise PartitionError("empty k range")
    if k_min < 2 or k_max > features.shape[0]:
        raise PartitionError("k range must lie within [2, row count]")
    ks = list(range(k_min, k_max + 1))
    if len(ks) < 3:
        raise PartitionError(
            "k range too narrow for elbow detection (need at least 3 values); "
            "pass an explicit k instead"
        )
    inertia_by_k = {
        k: kmeans_fit(features, k, seed=seed + k).inertia for k in ks
    }
    chosen_k = elbow_from_curve(ks, [inertia_by_k[k] for k in ks])
    return ElbowResult(inertia_by_k=inertia_by_k, chosen_k=chosen_k)


def elbow_from_curve(ks: Sequence[int], inertias: Sequence[float]) -> int:
    """Bend of an inertia-vs-k curve: the point farthest from the endpoint
    chord after normalizing both axes to [0, 1]. Ties (including a perfectly
    linear curve, where every distance is 0) resolve to the smallest k."""
    x = (np.array(ks, dtype=float) - ks[0]) / (ks[-1] - ks[0])
    inertias = np.asarray(inertias, dtype=float)
    span = inertias[0] - inertias[-1]
    y = (inertias - inertias[-1]) / span if span > 0 else np.zeros_like(inertias)
    # perpendicular distance from each normalized point to the chord y = 1 - x
    distances = np.abs(x + y - 1.0) / np.sqrt(2.0)
    return int(ks[int(np.argmax(distances))])


def assign_clusters(model: ClusterModel, dataset: Dataset) -> SubgroupPartition:
    """Assign each instance to its nearest centroid in standardized space.

    Ties go to the lowest centroid index. Clusters that end up empty are
    dropped with a warning; the remaining partition must still have at least
    two subgroups.
    """
    raw = feature_matrix(dataset)
    if raw.shape[1] != model.centroids.shape[1]:
        raise PartitionError(
            f"feature dimension {raw.shape[1]} does not match "
            f"model dimension {model.centroids.shape[1]}"
        )
    projected = model.standardization.apply(raw)
    labels = _nearest_centroid(projected, model.centroids)

    occupied = sorted(set(int(label) for label in labels))
    dropped = [j for j in range(model.k) if j not in occupied]
    if dropped:
        warnings.warn(
            f"dropping empty clusters {dropped} from the partition", stacklevel=2
        )
    if len(occupied) < 2:
        raise PartitionError("clustering produced fewer than 2 non-empty subgroups")

    names = {j: f"C{j}" for j in occupied}
    assignment = {
        inst.id: names[int(label)] for inst, label in zip(dataset.instances, labels)
    }
    return SubgroupPartition(
        assignment=assignment,
        subgroup_ids=tuple(names[j] for j in occupied),
        provenance=ClusterProvenance(model),
    )


def cluster_partition(
    dataset: Dataset,
    k: int | None,
    seed: int,
    k_range: tuple[int, int] = (2, 10),
) -> tuple[SubgroupPartition, ElbowResult | None]:
    """Standardize, pick k (elbow when ``k is None``), fit, and assign."""
    raw = feature_matrix(dataset)
    standardized, params = standardize(raw)
    elbow: ElbowResult | None = None
    if k is None:
        elbow = elbow_select_k(standardized, k_range, seed=seed)
        k = elbow.chosen_k
    model = kmeans_fit(standardized, k, seed=seed, standardization=params)
    return assign_clusters(model, dataset), elbow
