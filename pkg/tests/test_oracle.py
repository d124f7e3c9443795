from __future__ import annotations

from funcdiag.dsl import Action, Binding, Mutation
from funcdiag.engine import Outcome, apply_mutation
from funcdiag.oracle import full_check, oracle_apply
from funcdiag.store import Database

from conftest import seeded_geography


def test_full_check_empty_database(geography_schema):
    db = Database(geography_schema)
    report = full_check(db)
    assert report.violations == ()
    assert report.rows_scanned == 0


def test_full_check_counts_domain_rows(geography_schema):
    db, _ = seeded_geography(geography_schema)
    report = full_check(db)
    assert report.rows_scanned == db.row_count("RIVERS")
    assert report.violations == ()


def test_full_check_finds_seeded_violation(geography_schema):
    db, handles = seeded_geography(geography_schema)
    # seed the mismatch raw, behind the engine's back
    rogue = db.insert_row(
        "RIVERS",
        {"River": "Rogue", "Continent": handles["asia"], "Mountain": handles["montblanc"]},
    )
    report = full_check(db)
    assert [v.witness for v in report.violations] == [rogue]


def test_full_check_vacuous_when_chain_nulled(geography_schema):
    db, handles = seeded_geography(geography_schema)
    for row in db.rows("RIVERS"):
        db.set_value(row, "Mountain", None)
    db.insert_row(
        "RIVERS",
        {"River": "Free", "Continent": handles["asia"], "Mountain": None},
    )
    assert full_check(db).violations == ()


def test_full_check_sorted_by_witness(geography_schema):
    db, handles = seeded_geography(geography_schema)
    for name in ("A", "B", "C"):
        db.insert_row(
            "RIVERS",
            {"River": name, "Continent": handles["asia"], "Mountain": handles["montblanc"]},
        )
    witnesses = [v.witness.x for v in full_check(db).violations]
    assert witnesses == sorted(witnesses)


def test_oracle_apply_rejects_and_leaves_db_untouched(geography_schema):
    db, handles = seeded_geography(geography_schema)
    before = db.snapshot()
    verdict = oracle_apply(
        db,
        Mutation(
            Action.UPDATE,
            row_ref=handles["alps"],
            bindings=(Binding("Continent", handles["asia"]),),
        ),
    )
    assert verdict.outcome is Outcome.REJECTED
    assert [v.witness for v in verdict.violations] == [handles["danube"]]
    assert db.snapshot() == before


def test_oracle_apply_applies_clean_mutations(geography_schema):
    db, handles = seeded_geography(geography_schema)
    verdict = oracle_apply(
        db,
        Mutation(
            Action.INSERT,
            set_name="RIVERS",
            bindings=(
                Binding("River", "Volga"),
                Binding("Continent", handles["europe"]),
                Binding("Mountain", None),
            ),
        ),
    )
    assert verdict.outcome is Outcome.APPLIED
    assert verdict.row is not None
    assert db.row_exists(verdict.row)


def test_oracle_ignores_preexisting_violations(geography_schema):
    db, handles = seeded_geography(geography_schema)
    db.insert_row(
        "RIVERS",
        {"River": "Rogue", "Continent": handles["asia"], "Mountain": handles["montblanc"]},
    )
    assert len(full_check(db).violations) == 1
    # an unrelated clean mutation is not blamed for the standing violation
    verdict = oracle_apply(
        db,
        Mutation(
            Action.INSERT,
            set_name="CONTINENTS",
            bindings=(Binding("Continent", "Oceania"),),
        ),
    )
    assert verdict.outcome is Outcome.APPLIED
    # a mutation creating a fresh violation is still rejected
    verdict = oracle_apply(
        db,
        Mutation(
            Action.INSERT,
            set_name="RIVERS",
            bindings=(
                Binding("River", "Rogue2"),
                Binding("Continent", handles["asia"]),
                Binding("Mountain", handles["montblanc"]),
            ),
        ),
    )
    assert verdict.outcome is Outcome.REJECTED


def test_oracle_and_engine_agree_on_fixture_scenarios(geography_schema):
    engine_db, handles_e = seeded_geography(geography_schema)
    oracle_db = engine_db.clone(share_counter=False)
    handles_o = dict(handles_e)
    scenarios = [
        Mutation(
            Action.INSERT,
            set_name="RIVERS",
            bindings=(
                Binding("River", "Rhone"),
                Binding("Continent", handles_e["asia"]),
                Binding("Mountain", handles_e["montblanc"]),
            ),
        ),
        Mutation(
            Action.UPDATE,
            row_ref=handles_e["alps"],
            bindings=(Binding("Continent", handles_e["asia"]),),
        ),
        Mutation(
            Action.UPDATE,
            row_ref=handles_e["danube"],
            bindings=(Binding("Mountain", None),),
        ),
        Mutation(Action.DELETE, row_ref=handles_e["alps"]),
        Mutation(
            Action.INSERT,
            set_name="RIVERS",
            bindings=(Binding("River", "Volga"), Binding("Continent", handles_e["asia"])),
        ),
    ]
    for m in scenarios:
        v_engine = apply_mutation(engine_db, m, handles_e)
        v_oracle = oracle_apply(oracle_db, m, handles_o)
        assert v_engine.outcome == v_oracle.outcome, m
        assert engine_db.snapshot() == oracle_db.snapshot()
