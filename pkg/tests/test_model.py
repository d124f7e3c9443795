from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from funcdiag.model import (
    ChainSpec,
    ConstraintClass,
    ConstraintKind,
    DiagramConstraint,
    FunctionDef,
    IssueCode,
    RawChain,
    RawConstraint,
    ScalarType,
    Schema,
    SetDef,
    Side,
    classify_constraint,
    validate_diagram,
    validate_schema,
    verify_resolved_chain,
)

from randgen import make_schema


def _raw(cid, kind, domain, left, right):
    return RawConstraint(
        cid,
        kind,
        domain,
        RawChain(tuple(left)) if isinstance(left, (list, tuple)) else left,
        RawChain(tuple(right)) if isinstance(right, (list, tuple)) else right,
    )


IDENTITY = RawChain(identity=True)


def test_geography_chains_resolve(geography_schema):
    raw = _raw(
        "geo",
        ConstraintKind.COMMUTATIVE,
        "RIVERS",
        ["Continent", "Range", "Subrange", "Group", "Mountain"],
        ["Continent"],
    )
    constraint, issues = validate_diagram(geography_schema, raw)
    assert issues == []
    assert constraint is not None
    assert constraint.domain_set == "RIVERS"
    assert constraint.left.codomain == "CONTINENTS"
    assert constraint.right.codomain == "CONTINENTS"
    domains = [fn.domain for fn in constraint.left.functions]
    assert domains == [
        "MOUNTAIN_RANGES",
        "MOUNT_SUBRANGES",
        "MOUNT_GROUPS",
        "MOUNTAINS",
        "RIVERS",
    ]
    assert verify_resolved_chain(geography_schema, constraint.left, "RIVERS")
    assert verify_resolved_chain(geography_schema, constraint.right, "RIVERS")


def test_dangling_chain_is_broken_composition():
    # RIVERS has no Continent of its own here, so a bare [Continent] chain
    # cannot start on RIVERS; the only Continent lives on MOUNTAIN_RANGES.
    schema = Schema(
        "G",
        (
            SetDef("CONTINENTS", "Continent"),
            SetDef("MOUNTAIN_RANGES", "Range"),
            SetDef("RIVERS", "River"),
        ),
        (
            FunctionDef("Continent", "CONTINENTS", ScalarType.TEXT),
            FunctionDef("Range", "MOUNTAIN_RANGES", ScalarType.TEXT),
            FunctionDef("Continent", "MOUNTAIN_RANGES", "CONTINENTS"),
            FunctionDef("River", "RIVERS", ScalarType.TEXT),
            FunctionDef("Range", "RIVERS", "MOUNTAIN_RANGES", nullable=True),
        ),
    )
    raw = _raw(
        "broken",
        ConstraintKind.COMMUTATIVE,
        "RIVERS",
        ["Continent"],
        ["Continent", "Range"],
    )
    constraint, issues = validate_diagram(schema, raw)
    assert constraint is None
    [issue] = [i for i in issues if i.side is Side.LEFT]
    assert issue.code is IssueCode.BROKEN_COMPOSITION
    assert issue.position == 1
    assert "MOUNTAIN_RANGES" in issue.message and "RIVERS" in issue.message


def test_all_diagnostics_reported_not_just_first(geography_schema):
    raw = _raw(
        "multi",
        ConstraintKind.COMMUTATIVE,
        "RIVERS",
        ["Nope", "Mountain"],
        ["AlsoNope"],
    )
    constraint, issues = validate_diagram(geography_schema, raw)
    assert constraint is None
    sides = {(i.side, i.code) for i in issues}
    assert (Side.LEFT, IssueCode.UNKNOWN_FUNCTION) in sides
    assert (Side.RIGHT, IssueCode.UNKNOWN_FUNCTION) in sides


def test_scalar_codomain_chains_resolve(neighbors_schema):
    raw = _raw(
        "colors",
        ConstraintKind.ANTI_COMMUTATIVE,
        "NEIGHBOR_COUNTRIES",
        ["FrontierColor", "Country"],
        ["FrontierColor", "Neighbor"],
    )
    constraint, issues = validate_diagram(neighbors_schema, raw)
    assert issues == []
    assert constraint is not None
    assert constraint.left.codomain is ScalarType.TEXT
    assert constraint.right.codomain is ScalarType.TEXT


def test_codomain_mismatch_reported(geography_schema):
    raw = _raw(
        "mixed",
        ConstraintKind.COMMUTATIVE,
        "RIVERS",
        ["River"],
        ["Continent"],
    )
    constraint, issues = validate_diagram(geography_schema, raw)
    assert constraint is None
    assert any(i.code is IssueCode.CODOMAIN_MISMATCH for i in issues)


def test_interior_attribute_is_broken_composition(geography_schema):
    raw = _raw(
        "interior",
        ConstraintKind.COMMUTATIVE,
        "RIVERS",
        ["Continent", "River"],
        ["Continent"],
    )
    constraint, issues = validate_diagram(geography_schema, raw)
    assert constraint is None
    assert any(i.code is IssueCode.BROKEN_COMPOSITION for i in issues)


def test_identity_on_both_sides_is_degenerate(geography_schema):
    raw = _raw("deg", ConstraintKind.COMMUTATIVE, "RIVERS", IDENTITY, IDENTITY)
    constraint, issues = validate_diagram(geography_schema, raw)
    assert constraint is None
    assert [i.code for i in issues] == [IssueCode.DEGENERATE_IDENTITY]


def test_unknown_domain_set(geography_schema):
    raw = _raw("lost", ConstraintKind.COMMUTATIVE, "OCEANS", ["Continent"], ["Continent"])
    constraint, issues = validate_diagram(geography_schema, raw)
    assert constraint is None
    assert issues[0].code is IssueCode.UNKNOWN_SET


def _capitals_schema() -> Schema:
    return Schema(
        "Capitals",
        (SetDef("STATES", "State"), SetDef("CITIES", "City")),
        (
            FunctionDef("State", "STATES", ScalarType.TEXT),
            FunctionDef("StateCapital", "STATES", "CITIES", nullable=True),
            FunctionDef("City", "CITIES", ScalarType.TEXT),
            FunctionDef("State", "CITIES", "STATES"),
        ),
    )


def test_classification_general(geography_schema):
    raw = _raw(
        "geo",
        ConstraintKind.COMMUTATIVE,
        "RIVERS",
        ["Continent", "Range", "Subrange", "Group", "Mountain"],
        ["Continent"],
    )
    constraint, _ = validate_diagram(geography_schema, raw)
    assert classify_constraint(constraint) is ConstraintClass.GENERAL


def test_classification_hbfp():
    schema = Schema(
        "P",
        (SetDef("A", "Name"), SetDef("B", "Name")),
        (
            FunctionDef("Name", "A", ScalarType.TEXT),
            FunctionDef("Name", "B", ScalarType.TEXT),
            FunctionDef("f", "A", "B"),
            FunctionDef("g", "A", "B"),
        ),
    )
    raw = _raw("pair", ConstraintKind.COMMUTATIVE, "A", ["f"], ["g"])
    constraint, issues = validate_diagram(schema, raw)
    assert issues == []
    assert classify_constraint(constraint) is ConstraintClass.HBFP


def test_classification_local():
    schema = _capitals_schema()
    raw = _raw(
        "cap",
        ConstraintKind.COMMUTATIVE,
        "STATES",
        ["State", "StateCapital"],
        IDENTITY,
    )
    constraint, issues = validate_diagram(schema, raw)
    assert issues == []
    assert classify_constraint(constraint) is ConstraintClass.LOCAL


def test_schema_refuses_non_general_constraints():
    schema = _capitals_schema()
    raw = _raw(
        "cap", ConstraintKind.COMMUTATIVE, "STATES", ["State", "StateCapital"], IDENTITY
    )
    constraint, _ = validate_diagram(schema, raw)
    with pytest.raises(ValueError, match="local"):
        schema.with_constraints((constraint,))


@given(
    n=st.integers(min_value=1, max_value=6),
    m=st.integers(min_value=1, max_value=6),
    left_identity=st.booleans(),
    right_identity=st.booleans(),
)
def test_classification_matches_direct_predicate(n, m, left_identity, right_identity):
    if left_identity and right_identity:
        return
    candidate = DiagramConstraint(
        "c",
        ConstraintKind.COMMUTATIVE,
        _synthetic_chain(n, left_identity),
        _synthetic_chain(m, right_identity),
    )
    got = classify_constraint(candidate)
    if left_identity != right_identity:
        expected = ConstraintClass.LOCAL
    elif n == 1 and m == 1:
        expected = ConstraintClass.HBFP
    else:
        expected = ConstraintClass.GENERAL
    assert got is expected


def _synthetic_chain(length: int, identity: bool) -> ChainSpec:
    if identity:
        return ChainSpec((), identity_of="D")
    fns = []
    for i in range(length, 0, -1):
        domain = "D" if i == length else f"T{i}"
        codomain = "C" if i == 1 else f"T{i - 1}"
        fns.append(FunctionDef(f"h{i}", domain, codomain))
    return ChainSpec(tuple(reversed(fns)))


def test_chainspec_rejects_empty_non_identity():
    with pytest.raises(ValueError):
        ChainSpec(())


def test_validate_schema_catches_bad_name_attribute():
    schema = Schema(
        "Bad",
        (SetDef("A", "missing"),),
        (FunctionDef("a", "A", ScalarType.TEXT),),
    )
    issues = validate_schema(schema)
    assert [i.code for i in issues] == [IssueCode.MISSING_NAME_ATTRIBUTE]


@pytest.mark.parametrize("seed", range(25))
def test_random_schemas_resolve_and_rewalk(seed):
    schema = make_schema(random.Random(seed))
    for constraint in schema.constraints:
        assert classify_constraint(constraint) is ConstraintClass.GENERAL
        assert verify_resolved_chain(schema, constraint.left, constraint.domain_set)
        assert verify_resolved_chain(schema, constraint.right, constraint.domain_set)
        assert constraint.left.codomain == constraint.right.codomain
        for chain in (constraint.left, constraint.right):
            for fn in chain.functions[1:]:
                assert fn.is_link
