import json

import pytest
from fastapi.testclient import TestClient

from generators import blob_dataset, planted_bias_dataset
from fairthresh.optimizer import OptimizerConfig, optimize
from fairthresh.reporting import serialize_report
from fairthresh.service import create_app

MANIFEST = {"id": "id", "score": "score", "label": "label", "attribute": "gender"}


def csv_of(dataset):
    lines = ["id,score,label,gender"]
    for inst in dataset.instances:
        lines.append(f"{inst.id},{inst.score!r},{inst.label},{inst.attribute}")
    return "\n".join(lines) + "\n"


@pytest.fixture
def client():
    return TestClient(create_app(session_cap=4, max_rows=100_000))


@pytest.fixture
def bias_session(client):
    dataset, partition = planted_bias_dataset(3, n=600)
    response = client.post("/sessions", json={"csv": csv_of(dataset), "manifest": MANIFEST})
    assert response.status_code == 201
    session = response.json()["session"]
    response = client.post(f"/sessions/{session}/partition", json={"attribute": "gender"})
    assert response.status_code == 200
    return client, session, dataset, partition


class TestSessions:
    def test_upload_happy_path(self, client):
        response = client.post(
            "/sessions",
            json={
                "csv": "id,score,label,gender\n1,0.9,1,M\n2,0.4,0,F\n3,0.6,1,F\n",
                "manifest": MANIFEST,
            },
        )
        assert response.status_code == 201
        body = response.json()
        assert body["instances"] == 3
        assert body["session"]

    def test_invalid_score_cites_row(self, client):
        response = client.post(
            "/sessions",
            json={"csv": "id,score,label\n1,1.2,0\n", "manifest": {"id": "id", "score": "score", "label": "label"}},
        )
        assert response.status_code == 400
        assert "row 1" in response.json()["detail"]

    def test_empty_csv_rejected(self, client):
        response = client.post("/sessions", json={"csv": "", "manifest": MANIFEST})
        assert response.status_code == 400

    def test_session_cap(self, client):
        csv_text = "id,score,label\n1,0.9,1\n2,0.4,0\n"
        manifest = {"id": "id", "score": "score", "label": "label"}
        for _ in range(4):
            assert (
                client.post("/sessions", json={"csv": csv_text, "manifest": manifest}).status_code
                == 201
            )
        response = client.post("/sessions", json={"csv": csv_text, "manifest": manifest})
        assert response.status_code == 429

    def test_unknown_session(self, client):
        assert client.get("/sessions/nope").status_code == 404


class TestPartitionEndpoint:
    def test_attribute_partition_summary(self, bias_session):
        client, session, dataset, partition = bias_session
        body = client.get(f"/sessions/{session}").json()
        assert body["subgroups"] == partition.sizes()
        assert body["version"] == 2

    def test_unknown_attribute(self, client):
        response = client.post(
            "/sessions",
            json={"csv": "id,score,label\n1,0.9,1\n2,0.4,0\n", "manifest": {"id": "id", "score": "score", "label": "label"}},
        )
        session = response.json()["session"]
        response = client.post(f"/sessions/{session}/partition", json={"attribute": "gender"})
        assert response.status_code == 422

    def test_single_value_attribute(self, client):
        response = client.post(
            "/sessions",
            json={
                "csv": "id,score,label,gender\n1,0.9,1,M\n2,0.4,0,M\n",
                "manifest": MANIFEST,
            },
        )
        session = response.json()["session"]
        response = client.post(f"/sessions/{session}/partition", json={"attribute": "gender"})
        assert response.status_code == 422

    def test_cluster_partition_auto_k(self, client):
        dataset, _ = blob_dataset(2, n=240)
        lines = ["id,score,label,x0,x1"]
        for inst in dataset.instances:
            lines.append(
                f"{inst.id},{inst.score!r},{inst.label},{inst.features[0]!r},{inst.features[1]!r}"
            )
        manifest = {
            "id": "id",
            "score": "score",
            "label": "label",
            "features": ["x0", "x1"],
        }
        response = client.post(
            "/sessions", json={"csv": "\n".join(lines) + "\n", "manifest": manifest}
        )
        session = response.json()["session"]
        response = client.post(
            f"/sessions/{session}/partition",
            json={"cluster": {"k": "auto", "k_range": [2, 8], "seed": 2}},
        )
        assert response.status_code == 200
        body = response.json()
        assert body["chosen_k"] == 4
        assert set(body["subgroups"]) == {"C0", "C1", "C2", "C3"}


class TestWhatif:
    def test_requires_partition(self, client):
        response = client.post(
            "/sessions",
            json={"csv": "id,score,label\n1,0.9,1\n2,0.4,0\n", "manifest": {"id": "id", "score": "score", "label": "label"}},
        )
        session = response.json()["session"]
        assert client.get(f"/sessions/{session}/whatif?thresholds=0.5").status_code == 409

    def test_global_threshold_matches_baseline(self, bias_session):
        from fairthresh.optimizer import baseline_report

        client, session, dataset, partition = bias_session
        response = client.get(f"/sessions/{session}/whatif?thresholds=0.5")
        assert response.status_code == 200
        body = response.json()
        base = baseline_report(dataset, partition, OptimizerConfig())
        for g, value in base.per_subgroup_utility.items():
            assert body["per_subgroup"][g]["utility"] == value
        assert body["overall"]["utility"] == base.overall_utility
        assert body["dominant"] == base.dominance.dominating_subgroup

    def test_assignment_matches_report_adjusted(self, bias_session):
        client, session, dataset, partition = bias_session
        report = optimize(dataset, partition, OptimizerConfig())
        pairs = ",".join(
            f"{g}:{tau!r}" for g, tau in report.assignment.per_subgroup.items()
        )
        body = client.get(f"/sessions/{session}/whatif?thresholds={pairs}").json()
        for g, value in report.adjusted_per_subgroup.items():
            assert body["per_subgroup"][g]["utility"] == value
        assert body["overall"]["utility"] == report.adjusted_overall
        for g, gap in report.discrimination_after.items():
            assert body["discrimination"][g] == gap

    def test_out_of_range_threshold(self, bias_session):
        client, session, *_ = bias_session
        assert client.get(f"/sessions/{session}/whatif?thresholds=1.5").status_code == 422

    def test_incomplete_per_subgroup_thresholds(self, bias_session):
        client, session, *_ = bias_session
        assert client.get(f"/sessions/{session}/whatif?thresholds=A:0.5").status_code == 422

    def test_undefined_utility_is_null(self, bias_session):
        client, session, *_ = bias_session
        body = client.get(f"/sessions/{session}/whatif?thresholds=1.0").json()
        values = [entry["utility"] for entry in body["per_subgroup"].values()]
        assert values == [None, None]
        assert body["dominant"] is None


class TestOptimizeEndpoint:
    def test_requires_partition(self, client):
        response = client.post(
            "/sessions",
            json={"csv": "id,score,label\n1,0.9,1\n2,0.4,0\n", "manifest": {"id": "id", "score": "score", "label": "label"}},
        )
        session = response.json()["session"]
        assert client.post(f"/sessions/{session}/optimize", json={}).status_code == 409

    def test_fixed_mode_run(self, bias_session):
        client, session, dataset, partition = bias_session
        response = client.post(f"/sessions/{session}/optimize", json={"tau_base": 0.5})
        assert response.status_code == 200
        body = response.json()
        assert body["validation"]["feasible"] is True

    def test_bad_step_rejected(self, bias_session):
        client, session, *_ = bias_session
        response = client.post(
            f"/sessions/{session}/optimize",
            json={"grid": {"type": "uniform", "step": 0.7}},
        )
        assert response.status_code == 422

    def test_response_bytes_equal_serializer_output(self, bias_session):
        client, session, dataset, partition = bias_session
        config_doc = {"tau_base": 0.5, "grid": {"type": "uniform", "step": 0.05}}
        response = client.post(f"/sessions/{session}/optimize", json=config_doc)
        expected = serialize_report(optimize(dataset, partition, OptimizerConfig()))
        assert response.content == expected
        # identical rerun produces identical bytes
        again = client.post(f"/sessions/{session}/optimize", json=config_doc)
        assert again.content == response.content
