import json

import jsonschema
import pytest

from generators import mixture_dataset
from fairthresh import schemas
from fairthresh.errors import DatasetError, FairthreshError
from fairthresh.metrics import UtilityKind
from fairthresh.optimizer import (
    Aggregate,
    GridSpec,
    Mode,
    OptimizationReport,
    OptimizerConfig,
    ThresholdAssignment,
    ValidationResult,
    optimize,
)
from fairthresh.reporting import (
    REPORT_FOOTNOTE,
    read_report,
    render_table,
    report_to_doc,
    serialize_report,
    write_report,
)


def build_report(**overrides):
    """Hand-built two-subgroup report; values are the published-table shape."""
    fields = dict(
        utility=UtilityKind.PPV,
        mode=Mode.FIXED_DOMINANT,
        tau_base=0.5,
        grid=GridSpec.uniform(0.05),
        aggregate_objective=Aggregate.MAX_GAP,
        dominant="male",
        dominant_tie_broken=False,
        subgroup_sizes={"female": 5000, "male": 5000},
        baseline_overall=0.7107,
        baseline_per_subgroup={"female": 0.6836, "male": 0.7713},
        adjusted_overall=0.7669,
        adjusted_per_subgroup={"female": 0.7639, "male": 0.7713},
        assignment=ThresholdAssignment(
            per_subgroup={"female": 0.65, "male": 0.5}, tau_base=0.5
        ),
        discrimination_before={"female": 0.7713 - 0.6836},
        discrimination_after={"female": 0.7713 - 0.7639},
        validation=ValidationResult(feasible=True, checks=()),
    )
    fields.update(overrides)
    return OptimizationReport(**fields)


def test_serialization_is_deterministic():
    report = build_report()
    assert serialize_report(report) == serialize_report(build_report())


def test_document_matches_published_schema():
    doc = report_to_doc(build_report())
    jsonschema.validate(doc, schemas.REPORT_SCHEMA)


def test_json_roundtrip_preserves_floats(tmp_path):
    dataset, partition = mixture_dataset(2, n=150)
    report = optimize(dataset, partition, OptimizerConfig())
    path = tmp_path / "report.json"
    write_report(report, path, format="json")
    doc = read_report(path)
    assert doc["baseline"]["overall"] == report.baseline_overall
    assert doc["adjusted"]["per_subgroup"] == dict(report.adjusted_per_subgroup)
    # a second write is byte-identical
    second = tmp_path / "again.json"
    write_report(report, second, format="json")
    assert path.read_bytes() == second.read_bytes()


def test_reader_rejects_unknown_major_version(tmp_path):
    path = tmp_path / "report.json"
    doc = report_to_doc(build_report())
    doc["schema_version"] = "2.0.0"
    path.write_text(json.dumps(doc))
    with pytest.raises(DatasetError, match="schema version"):
        read_report(path)


def test_refuses_undefined_utilities():
    report = build_report(adjusted_overall=float("nan"))
    with pytest.raises(FairthreshError, match="undefined"):
        serialize_report(report)


def test_table_has_expected_rows():
    table = render_table(build_report())
    lines = table.splitlines()
    assert any(line.startswith("Baseline") for line in lines)
    assert any(line.startswith("tau_adj,female") for line in lines)
    assert any(line.startswith("Net Diff.") for line in lines)
    assert any(line.startswith("% Diff.") for line in lines)
    assert "male*" in table
    assert REPORT_FOOTNOTE in table


def test_table_values_rounded_to_four_decimals():
    table = render_table(build_report())
    assert "0.7107" in table and "0.6836" in table and "0.7639" in table
    assert "+7.9%" in table and "+11.7%" in table


def test_table_format_written(tmp_path):
    path = tmp_path / "report.txt"
    write_report(build_report(), path, format="table")
    assert "Baseline" in path.read_text()
    with pytest.raises(FairthreshError, match="format"):
        write_report(build_report(), tmp_path / "x", format="yaml")
