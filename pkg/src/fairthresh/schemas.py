"""Published JSON schemas for run configurations and report documents.

Copies of these schemas live under docs/ for consumers; the dicts here are
the source of truth and a test keeps the copies in sync.
"""

REPORT_SCHEMA_VERSION = "1.0.0"
PARTITION_SCHEMA_VERSION = "1.0.0"

MANIFEST_SCHEMA = {
    "type": "object",
    "properties": {
        "id": {"type": "string"},
        "score": {"type": "string"},
        "label": {"type": "string"},
        "attribute": {"type": "string"},
        "features": {"type": "array", "items": {"type": "string"}},
    },
    "required": ["id", "score", "label"],
    "additionalProperties": False,
}

GRID_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"type": {"const": "uniform"}, "step": {"type": "number"}},
            "required": ["type", "step"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"type": {"const": "observed_scores"}},
            "required": ["type"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "explicit"},
                "values": {
                    "type": "array",
                    "items": {"type": "number"},
                    "minItems": 1,
                },
            },
            "required": ["type", "values"],
            "additionalProperties": False,
        },
    ]
}

OPTIMIZER_SCHEMA = {
    "type": "object",
    "properties": {
        "tau_base": {"type": "number", "minimum": 0, "maximum": 1},
        "grid": GRID_SCHEMA,
        "mode": {"enum": ["fixed_dominant", "free_dominant"]},
        "utility": {"enum": ["ppv", "npv", "tpr", "accuracy"]},
        "aggregate_objective": {"enum": ["max_gap", "sum_gap"]},
    },
    "additionalProperties": False,
}

CLUSTER_SPEC_SCHEMA = {
    "type": "object",
    "properties": {
        "k": {"oneOf": [{"type": "integer", "minimum": 2}, {"const": "auto"}]},
        "k_range": {
            "type": "array",
            "items": {"type": "integer", "minimum": 2},
            "minItems": 2,
            "maxItems": 2,
        },
        "seed": {"type": "integer"},
    },
    "required": ["k"],
    "additionalProperties": False,
}

PARTITION_SPEC_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"attribute": {"type": "string"}},
            "required": ["attribute"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"cluster": CLUSTER_SPEC_SCHEMA},
            "required": ["cluster"],
            "additionalProperties": False,
        },
    ]
}

RUN_CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "fairthresh run configuration",
    "type": "object",
    "properties": {
        "dataset": {"type": "string"},
        "manifest": {"oneOf": [{"type": "string"}, MANIFEST_SCHEMA]},
        "partition": PARTITION_SPEC_SCHEMA,
        "optimizer": OPTIMIZER_SCHEMA,
        "output": {
            "type": "object",
            "properties": {
                "report_json": {"type": "string"},
                "report_table": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "seed": {"type": "integer"},
    },
    "required": ["dataset", "manifest", "partition"],
    "additionalProperties": False,
}

_NULLABLE_NUMBER = {"type": ["number", "null"]}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "fairthresh optimization report",
    "type": "object",
    "properties": {
        "schema_version": {"type": "string"},
        "utility": {"enum": ["ppv", "npv", "tpr", "accuracy"]},
        "mode": {"enum": ["fixed_dominant", "free_dominant"]},
        "aggregate_objective": {"enum": ["max_gap", "sum_gap"]},
        "tau_base": {"type": "number"},
        "grid": GRID_SCHEMA,
        "dominant": {"type": "string"},
        "dominant_tie_broken": {"type": "boolean"},
        "subgroup_sizes": {
            "type": "object",
            "additionalProperties": {"type": "integer"},
        },
        "baseline": {
            "type": "object",
            "properties": {
                "overall": {"type": "number"},
                "per_subgroup": {
                    "type": "object",
                    "additionalProperties": {"type": "number"},
                },
            },
            "required": ["overall", "per_subgroup"],
            "additionalProperties": False,
        },
        "adjusted": {
            "type": "object",
            "properties": {
                "overall": {"type": "number"},
                "per_subgroup": {
                    "type": "object",
                    "additionalProperties": {"type": "number"},
                },
            },
            "required": ["overall", "per_subgroup"],
            "additionalProperties": False,
        },
        "thresholds": {
            "type": "object",
            "properties": {
                "tau_base": {"type": "number"},
                "per_subgroup": {
                    "type": "object",
                    "additionalProperties": {"type": "number"},
                },
            },
            "required": ["tau_base", "per_subgroup"],
            "additionalProperties": False,
        },
        "discrimination": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "properties": {
                    "before": {"type": "number"},
                    "after": {"type": "number"},
                    "net_diff": {"type": "number"},
                    "pct_diff": _NULLABLE_NUMBER,
                },
                "required": ["before", "after", "net_diff", "pct_diff"],
                "additionalProperties": False,
            },
        },
        "diffs": {
            "type": "object",
            "properties": {
                "overall": {
                    "type": "object",
                    "properties": {
                        "net_diff": {"type": "number"},
                        "pct_diff": _NULLABLE_NUMBER,
                    },
                    "required": ["net_diff", "pct_diff"],
                    "additionalProperties": False,
                },
                "per_subgroup": {
                    "type": "object",
                    "additionalProperties": {
                        "type": "object",
                        "properties": {
                            "net_diff": {"type": "number"},
                            "pct_diff": _NULLABLE_NUMBER,
                        },
                        "required": ["net_diff", "pct_diff"],
                        "additionalProperties": False,
                    },
                },
            },
            "required": ["overall", "per_subgroup"],
            "additionalProperties": False,
        },
        "validation": {
            "type": "object",
            "properties": {
                "feasible": {"type": "boolean"},
                "checks": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "name": {"type": "string"},
                            "subgroup": {"type": ["string", "null"]},
                            "passed": {"type": "boolean"},
                            "detail": {"type": "string"},
                        },
                        "required": ["name", "subgroup", "passed", "detail"],
                        "additionalProperties": False,
                    },
                },
            },
            "required": ["feasible", "checks"],
            "additionalProperties": False,
        },
        "footnote": {"type": "string"},
    },
    "required": [
        "schema_version",
        "utility",
        "mode",
        "aggregate_objective",
        "tau_base",
        "grid",
        "dominant",
        "dominant_tie_broken",
        "subgroup_sizes",
        "baseline",
        "adjusted",
        "thresholds",
        "discrimination",
        "diffs",
        "validation",
        "footnote",
    ],
    "additionalProperties": False,
}
