import json

import pytest

from fairthresh.errors import ConfigError, DatasetError, PartitionError
from fairthresh.ingest import (
    AttributeSpec,
    ClusterSpec,
    Manifest,
    build_partition,
    load_dataset,
    load_run_config,
    parse_dataset_text,
    parse_manifest,
    parse_optimizer_config,
    parse_partition_spec,
    partition_from_doc,
    partition_to_doc,
)
from fairthresh.optimizer import Aggregate, Mode
from fairthresh.partition import cluster_partition, partition_by_attribute

BASIC = Manifest(id="id", score="score", label="label")
WITH_ATTR = Manifest(id="id", score="score", label="label", attribute="gender")


def test_happy_path_three_rows():
    text = "id,score,label\n1,0.9,1\n2,0.5,0\n3,0.1,1\n"
    dataset = parse_dataset_text(text, BASIC)
    assert len(dataset) == 3
    assert dataset.instances[0].score == 0.9
    assert dataset.ids == ("1", "2", "3")


def test_out_of_range_score_cites_row_and_column():
    rows = "\n".join(f"{i},0.5,1" for i in range(1, 7))
    text = f"id,score,label\n{rows}\n7,1.2,0\n"
    with pytest.raises(DatasetError, match=r"row 7.*'score'"):
        parse_dataset_text(text, BASIC)


def test_duplicate_id_cites_both_rows():
    text = "id,score,label\n41,0.5,1\n42,0.5,0\n42,0.6,1\n"
    with pytest.raises(DatasetError, match=r"'42' at rows 2 and 3"):
        parse_dataset_text(text, BASIC)


def test_non_binary_label():
    text = "id,score,label\n1,0.5,2\n"
    with pytest.raises(DatasetError, match="not 0 or 1"):
        parse_dataset_text(text, BASIC)


def test_unparseable_score():
    text = "id,score,label\n1,high,1\n"
    with pytest.raises(DatasetError, match="cannot parse score"):
        parse_dataset_text(text, BASIC)


def test_missing_column():
    with pytest.raises(DatasetError, match="missing column 'label'"):
        parse_dataset_text("id,score\n1,0.5\n", BASIC)


def test_empty_inputs():
    with pytest.raises(DatasetError, match="no header"):
        parse_dataset_text("", BASIC)
    with pytest.raises(DatasetError, match="no data rows"):
        parse_dataset_text("id,score,label\n", BASIC)


def test_row_cap():
    text = "id,score,label\n" + "\n".join(f"{i},0.5,1" for i in range(5))
    with pytest.raises(DatasetError, match="cap"):
        parse_dataset_text(text, BASIC, max_rows=3)


def test_attribute_column_blank_becomes_missing():
    text = "id,score,label,gender\n1,0.5,1,M\n2,0.6,0,\n"
    dataset = parse_dataset_text(text, WITH_ATTR)
    assert dataset.instances[0].attribute == "M"
    assert dataset.instances[1].attribute is None


def test_categorical_features_one_hot_expanded():
    manifest = Manifest(
        id="id", score="score", label="label", features=("age", "city")
    )
    text = (
        "id,score,label,age,city\n"
        "1,0.5,1,30,NY\n"
        "2,0.6,0,40,SF\n"
        "3,0.7,1,50,NY\n"
    )
    dataset = parse_dataset_text(text, manifest)
    assert dataset.feature_names == ("age", "city=NY", "city=SF")
    assert dataset.instances[0].features == (30.0, 1.0, 0.0)
    assert dataset.instances[1].features == (40.0, 0.0, 1.0)


def test_missing_feature_cell_allowed_until_clustering():
    manifest = Manifest(id="id", score="score", label="label", features=("x",))
    text = "id,score,label,x\n1,0.5,1,1.0\n2,0.6,0,\n3,0.7,1,2.0\n4,0.2,0,3.0\n"
    dataset = parse_dataset_text(text, manifest)
    assert dataset.instances[1].features is None
    with pytest.raises(PartitionError, match="'2'"):
        cluster_partition(dataset, k=2, seed=0)


def test_load_dataset_roundtrip_preserves_scores(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("id,score,label\n1,0.123456789012345,1\n2,0.65,0\n")
    dataset = load_dataset(path, BASIC)
    assert dataset.instances[0].score == 0.123456789012345
    assert dataset.instances[1].score == 0.65


def test_manifest_validation():
    with pytest.raises(DatasetError, match="invalid manifest"):
        parse_manifest({"id": "id", "score": "score"})
    with pytest.raises(DatasetError, match="invalid manifest"):
        parse_manifest({"id": "id", "score": "s", "label": "l", "bogus": 1})


def test_partition_spec_parsing():
    assert parse_partition_spec({"attribute": "gender"}) == AttributeSpec("gender")
    spec = parse_partition_spec({"cluster": {"k": "auto", "k_range": [2, 8], "seed": 3}})
    assert spec == ClusterSpec(k=None, k_range=(2, 8), seed=3)
    with pytest.raises(ConfigError):
        parse_partition_spec({"cluster": {"k": 1}})
    with pytest.raises(ConfigError):
        parse_partition_spec({"attribute": "g", "cluster": {"k": 2}})


def test_optimizer_config_parsing():
    config = parse_optimizer_config(
        {
            "tau_base": 0.4,
            "grid": {"type": "explicit", "values": [0.4, 0.6]},
            "mode": "free_dominant",
            "utility": "npv",
            "aggregate_objective": "sum_gap",
        }
    )
    assert config.tau_base == 0.4
    assert config.mode is Mode.FREE_DOMINANT
    assert config.aggregate_objective is Aggregate.SUM_GAP
    with pytest.raises(ConfigError):
        parse_optimizer_config({"grid": {"type": "uniform", "step": 0.7}})
    with pytest.raises(ConfigError):
        parse_optimizer_config({"unknown_key": 1})


def test_run_config_full(tmp_path):
    (tmp_path / "data.csv").write_text(
        "id,score,label,gender\n1,0.9,1,M\n2,0.4,0,F\n3,0.6,1,F\n"
    )
    (tmp_path / "manifest.json").write_text(
        json.dumps({"id": "id", "score": "score", "label": "label", "attribute": "gender"})
    )
    config_doc = {
        "dataset": "data.csv",
        "manifest": "manifest.json",
        "partition": {"attribute": "gender"},
        "optimizer": {"tau_base": 0.5},
        "output": {"report_json": "out/report.json"},
        "seed": 3,
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(config_doc))
    run = load_run_config(path)
    assert run.dataset == tmp_path / "data.csv"
    assert run.manifest.attribute == "gender"
    assert run.report_json == tmp_path / "out" / "report.json"
    assert run.seed == 3


def test_run_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(
        json.dumps(
            {
                "dataset": "d.csv",
                "manifest": {"id": "i", "score": "s", "label": "l"},
                "partition": {"attribute": "g"},
                "extra": True,
            }
        )
    )
    with pytest.raises(ConfigError, match=r"\$"):
        load_run_config(path)


def test_partition_file_roundtrip():
    text = "id,score,label,gender\n1,0.9,1,M\n2,0.4,0,F\n3,0.6,1,F\n"
    dataset = parse_dataset_text(text, WITH_ATTR)
    partition = partition_by_attribute(dataset, "gender")
    doc = json.loads(json.dumps(partition_to_doc(partition)))
    loaded = partition_from_doc(doc)
    assert loaded.assignment == dict(partition.assignment)
    assert set(loaded.subgroup_ids) == set(partition.subgroup_ids)


def test_cluster_partition_file_roundtrip():
    from generators import blob_dataset

    dataset, _ = blob_dataset(3, n=120)
    partition, _ = build_partition(dataset, ClusterSpec(k=4, seed=5))
    doc = json.loads(json.dumps(partition_to_doc(partition)))
    loaded = partition_from_doc(doc)
    assert loaded.assignment == dict(partition.assignment)
    assert loaded.provenance.model.k == 4
