from __future__ import annotations

from pathlib import Path

import pytest

from funcdiag.dsl import parse_schema, parse_script
from funcdiag.engine import apply_mutation
from funcdiag.store import Database

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def geography_schema():
    schema, diagnostics = parse_schema(fixture_text("geography.fd"))
    assert schema is not None, diagnostics
    return schema


@pytest.fixture(scope="session")
def neighbors_schema():
    schema, diagnostics = parse_schema(fixture_text("neighbors.fd"))
    assert schema is not None, diagnostics
    return schema


def seeded_geography(schema) -> tuple[Database, dict]:
    """Database holding the valid prefix of the replay fixture (both
    continents, both mountain paths, Danube and Indus)."""
    db = Database(schema)
    handles: dict = {}
    mutations, diagnostics = parse_script(fixture_text("geography_ac1.fdm"), schema)
    assert mutations is not None, diagnostics
    for m in mutations:
        if m.expectation is not None:
            break
        verdict = apply_mutation(db, m, handles)
        assert verdict.applied, verdict.violations
    return db, handles


@pytest.fixture()
def geography_db(geography_schema):
    db, _ = seeded_geography(geography_schema)
    return db


@pytest.fixture()
def geography_handles(geography_schema):
    return seeded_geography(geography_schema)
