"""Dataset/manifest loading, run configurations, and partition files."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import jsonschema
import numpy as np

from . import schemas
from .errors import ConfigError, DatasetError, PartitionError
from .metrics import Dataset, ScoredInstance
from .optimizer import Aggregate, GridSpec, Mode, OptimizerConfig
from .partition import (
    AttributeProvenance,
    ClusterModel,
    ClusterProvenance,
    ElbowResult,
    Standardization,
    SubgroupPartition,
    cluster_partition,
    partition_by_attribute,
)


@dataclass(frozen=True)
class Manifest:
    """Column roles for a dataset CSV."""

    id: str
    score: str
    label: str
    attribute: str | None = None
    features: tuple[str, ...] = ()


def parse_manifest(source: Mapping | str | Path) -> Manifest:
    """Build a Manifest from a dict or a JSON file path."""
    if isinstance(source, (str, Path)):
        try:
            doc = json.loads(Path(source).read_text(encoding="utf-8"))
        except OSError as err:
            raise DatasetError(f"cannot read manifest {source}: {err}") from None
        except json.JSONDecodeError as err:
            raise DatasetError(f"manifest {source} is not valid JSON: {err}") from None
    else:
        doc = dict(source)
    try:
        jsonschema.validate(doc, schemas.MANIFEST_SCHEMA)
    except jsonschema.ValidationError as err:
        raise DatasetError(f"invalid manifest: {err.message}") from None
    return Manifest(
        id=doc["id"],
        score=doc["score"],
        label=doc["label"],
        attribute=doc.get("attribute"),
        features=tuple(doc.get("features", ())),
    )


def load_dataset(path: str | Path, manifest: Manifest, max_rows: int | None = None) -> Dataset:
    """Load and validate a scored dataset from a CSV file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise DatasetError(f"cannot read dataset {path}: {err}") from None
    return parse_dataset_text(text, manifest, max_rows=max_rows)


def parse_dataset_text(text: str, manifest: Manifest, max_rows: int | None = None) -> Dataset:
    """Parse CSV text (header row required) into a validated Dataset.

    Row numbers in error messages are 1-based over data rows. Rows with any
    missing feature cell keep ``features=None``; they are rejected later only
    if clustering actually needs them.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetError("dataset is empty: no header row") from None
    col = {name: idx for idx, name in enumerate(header)}
    needed = [manifest.id, manifest.score, manifest.label, *manifest.features]
    if manifest.attribute:
        needed.append(manifest.attribute)
    for name in needed:
        if name not in col:
            raise DatasetError(f"dataset is missing column {name!r}")

    rows = [row for row in reader if row]
    if not rows:
        raise DatasetError("dataset has no data rows")
    if max_rows is not None and len(rows) > max_rows:
        raise DatasetError(f"dataset has {len(rows)} rows, exceeding the cap of {max_rows}")

    ids: list[str] = []
    scores: list[float] = []
    labels: list[int] = []
    attributes: list[str | None] = []
    raw_features: list[list[str] | None] = []
    first_row_of: dict[str, int] = {}

    for n, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise DatasetError(f"row {n}: expected {len(header)} fields, got {len(row)}")
        instance_id = row[col[manifest.id]].strip()
        if not instance_id:
            raise DatasetError(f"row {n}: empty id")
        if instance_id in first_row_of:
            raise DatasetError(
                f"duplicate id {instance_id!r} at rows {first_row_of[instance_id]} and {n}"
            )
        first_row_of[instance_id] = n

        score_text = row[col[manifest.score]].strip()
        try:
            score = float(score_text)
        except ValueError:
            raise DatasetError(
                f"row {n}, column {manifest.score!r}: cannot parse score {score_text!r}"
            ) from None
        if not 0.0 <= score <= 1.0:
            raise DatasetError(
                f"row {n}, column {manifest.score!r}: score {score_text} outside [0, 1]"
            )

        label_text = row[col[manifest.label]].strip()
        if label_text not in ("0", "1"):
            raise DatasetError(
                f"row {n}, column {manifest.label!r}: label {label_text!r} is not 0 or 1"
            )

        attribute = None
        if manifest.attribute:
            value = row[col[manifest.attribute]].strip()
            attribute = value if value else None

        cells: list[str] | None = [row[col[f]].strip() for f in manifest.features]
        if manifest.features and any(c == "" for c in cells):
            cells = None

        ids.append(instance_id)
        scores.append(score)
        labels.append(int(label_text))
        attributes.append(attribute)
        raw_features.append(cells if manifest.features else None)

    feature_names, vectors = _encode_features(manifest.features, raw_features)
    instances = tuple(
        ScoredInstance(
            id=ids[i],
            score=scores[i],
            label=labels[i],
            features=vectors[i],
            attribute=attributes[i],
        )
        for i in range(len(ids))
    )
    return Dataset(instances=instances, feature_names=feature_names)


def _encode_features(
    columns: tuple[str, ...], raw: list[list[str] | None]
) -> tuple[tuple[str, ...] | None, list[tuple[float, ...] | None]]:
    """Expand categorical feature columns to one-hot indicators.

    A column is numeric if every present value parses as a float; otherwise
    its sorted distinct values become ``column=value`` indicator features.
    """
    if not columns:
        return None, [None] * len(raw)

    parsed: list[list[float | None]] = []
    categories: list[list[str] | None] = []
    for j, column in enumerate(columns):
        values = [cells[j] for cells in raw if cells is not None]
        as_float: list[float] | None = []
        for v in values:
            try:
                as_float.append(float(v))
            except ValueError:
                as_float = None
                break
        if as_float is not None:
            if not all(np.isfinite(as_float)):
                raise DatasetError(f"feature column {column!r} contains non-finite values")
            categories.append(None)
        else:
            categories.append(sorted(set(values)))
        parsed.append(as_float)

    names: list[str] = []
    for column, cats in zip(columns, categories):
        if cats is None:
            names.append(column)
        else:
            names.extend(f"{column}={value}" for value in cats)

    vectors: list[tuple[float, ...] | None] = []
    for cells in raw:
        if cells is None:
            vectors.append(None)
            continue
        vec: list[float] = []
        for j, (column, cats) in enumerate(zip(columns, categories)):
            if cats is None:
                vec.append(float(cells[j]))
            else:
                vec.extend(1.0 if cells[j] == value else 0.0 for value in cats)
        vectors.append(tuple(vec))
    return tuple(names), vectors


# ---------------------------------------------------------------------------
# Partition specs and run configuration


@dataclass(frozen=True)
class AttributeSpec:
    attribute: str


@dataclass(frozen=True)
class ClusterSpec:
    k: int | None  # None means elbow-selected
    k_range: tuple[int, int] = (2, 10)
    seed: int | None = None


def parse_partition_spec(doc: Mapping) -> AttributeSpec | ClusterSpec:
    try:
        jsonschema.validate(dict(doc), schemas.PARTITION_SPEC_SCHEMA)
    except jsonschema.ValidationError as err:
        raise ConfigError(f"invalid partition spec: {err.message}") from None
    if "attribute" in doc:
        return AttributeSpec(attribute=doc["attribute"])
    cluster = doc["cluster"]
    k = cluster["k"]
    return ClusterSpec(
        k=None if k == "auto" else int(k),
        k_range=tuple(cluster.get("k_range", (2, 10))),
        seed=cluster.get("seed"),
    )


def build_partition(
    dataset: Dataset,
    spec: AttributeSpec | ClusterSpec,
    default_seed: int = 0,
) -> tuple[SubgroupPartition, ElbowResult | None]:
    if isinstance(spec, AttributeSpec):
        return partition_by_attribute(dataset, spec.attribute), None
    seed = spec.seed if spec.seed is not None else default_seed
    return cluster_partition(dataset, k=spec.k, seed=seed, k_range=spec.k_range)


def parse_optimizer_config(doc: Mapping) -> OptimizerConfig:
    try:
        jsonschema.validate(dict(doc), schemas.OPTIMIZER_SCHEMA)
    except jsonschema.ValidationError as err:
        raise ConfigError(f"invalid optimizer config: {err.message}") from None
    grid_doc = doc.get("grid", {"type": "uniform", "step": 0.05})
    if grid_doc["type"] == "uniform":
        grid = GridSpec.uniform(grid_doc["step"])
    elif grid_doc["type"] == "observed_scores":
        grid = GridSpec.observed()
    else:
        grid = GridSpec.explicit(grid_doc["values"])
    return OptimizerConfig(
        tau_base=doc.get("tau_base", 0.5),
        grid=grid,
        mode=Mode(doc.get("mode", "fixed_dominant")),
        utility=_utility_kind(doc.get("utility", "ppv")),
        aggregate_objective=Aggregate(doc.get("aggregate_objective", "max_gap")),
    )


def _utility_kind(name: str):
    from .metrics import UtilityKind

    return UtilityKind(name)


@dataclass(frozen=True)
class RunConfig:
    dataset: Path
    manifest: Manifest
    partition_spec: AttributeSpec | ClusterSpec
    optimizer: OptimizerConfig
    report_json: Path | None
    report_table: Path | None
    seed: int


def load_run_config(path: str | Path) -> RunConfig:
    """Load and validate a run configuration; relative paths resolve against
    the config file's directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from None
    try:
        jsonschema.validate(doc, schemas.RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        raise ConfigError(
            f"invalid run config at {err.json_path}: {err.message}"
        ) from None

    base = path.parent
    manifest_doc = doc["manifest"]
    if isinstance(manifest_doc, str):
        manifest = parse_manifest(base / manifest_doc)
    else:
        manifest = parse_manifest(manifest_doc)
    output = doc.get("output", {})
    return RunConfig(
        dataset=base / doc["dataset"],
        manifest=manifest,
        partition_spec=parse_partition_spec(doc["partition"]),
        optimizer=parse_optimizer_config(doc.get("optimizer", {})),
        report_json=(base / output["report_json"]) if "report_json" in output else None,
        report_table=(base / output["report_table"]) if "report_table" in output else None,
        seed=doc.get("seed", 0),
    )


# ---------------------------------------------------------------------------
# Partition files


def partition_to_doc(partition: SubgroupPartition) -> dict:
    """Serializable document for a partition, including enough cluster state
    to re-assign new instances."""
    provenance = partition.provenance
    if isinstance(provenance, AttributeProvenance):
        prov_doc = {"type": "attribute", "attribute": provenance.attribute}
    else:
        model = provenance.model
        prov_doc = {
            "type": "cluster",
            "k": model.k,
            "seed": model.seed,
            "inertia": model.inertia,
            "centroids": model.centroids.tolist(),
            "standardization": {
                "mean": model.standardization.mean.tolist(),
                "scale": model.standardization.scale.tolist(),
            },
        }
    return {
        "schema_version": schemas.PARTITION_SCHEMA_VERSION,
        "provenance": prov_doc,
        "subgroups": partition.sizes(),
        "assignment": dict(sorted(partition.assignment.items())),
    }


def partition_from_doc(doc: Mapping) -> SubgroupPartition:
    try:
        prov_doc = doc["provenance"]
        assignment = dict(doc["assignment"])
    except KeyError as err:
        raise PartitionError(f"partition file is missing key {err}") from None
    if prov_doc["type"] == "attribute":
        provenance = AttributeProvenance(prov_doc["attribute"])
    else:
        provenance = ClusterProvenance(
            ClusterModel(
                centroids=np.array(prov_doc["centroids"], dtype=float),
                standardization=Standardization(
                    mean=np.array(prov_doc["standardization"]["mean"], dtype=float),
                    scale=np.array(prov_doc["standardization"]["scale"], dtype=float),
                ),
                k=int(prov_doc["k"]),
                seed=int(prov_doc["seed"]),
                inertia=float(prov_doc["inertia"]),
            )
        )
    subgroup_ids = tuple(sorted(set(assignment.values())))
    return SubgroupPartition(
        assignment=assignment, subgroup_ids=subgroup_ids, provenance=provenance
    )
