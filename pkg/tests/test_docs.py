import json
from pathlib import Path

import pytest

from fairthresh import schemas

DOCS = Path(__file__).resolve().parent.parent / "docs"


@pytest.mark.parametrize(
    "filename,schema",
    [
        ("run_config.schema.json", schemas.RUN_CONFIG_SCHEMA),
        ("report.schema.json", schemas.REPORT_SCHEMA),
        ("manifest.schema.json", schemas.MANIFEST_SCHEMA),
    ],
)
def test_published_schema_copies_in_sync(filename, schema):
    published = json.loads((DOCS / filename).read_text(encoding="utf-8"))
    assert published == schema
