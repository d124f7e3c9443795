"""Brute-force ground truth for the incremental engine.

full_check re-evaluates every constraint at every domain row, with the
same comparison and null semantics the engine uses. oracle_apply judges a
mutation by cloning the database, applying it raw, and asking whether any
new violation appeared. Deliberately O(rows x chain length) per check;
tests lean on it, production paths do not.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import MutableMapping

from .dsl import Action, Mutation
from .engine import (
    MutationResolveError,
    Outcome,
    Verdict,
    Violation,
    _store_violation,
    check_domain_row,
    raw_apply,
    resolve_mutation,
    sort_violations,
)
from .store import Database, RowId, StoreError


@dataclass(frozen=True)
class OracleReport:
    violations: tuple[Violation, ...]
    rows_scanned: int


def full_check(db: Database) -> OracleReport:
    """Evaluate every constraint at every row of its domain set."""
    violations: list[Violation] = []
    scanned = 0
    for constraint in db.schema.constraints:
        for x in sorted(db.rows(constraint.domain_set)):
            scanned += 1
            violations.extend(check_domain_row(db, constraint, x))
    return OracleReport(tuple(sort_violations(violations)), scanned)


def oracle_apply(
    db: Database,
    m: Mutation,
    handles: MutableMapping[str, RowId] | None = None,
) -> Verdict:
    """Decide a mutation by scratch application plus full re-check.

    Violations already present before the mutation are not re-attributed
    to it (keyed by constraint and witness), so seeded-invalid databases
    can still be mutated anywhere the change itself is clean. On
    REJECTED, `db` is untouched.
    """
    handles = handles if handles is not None else {}
    try:
        resolved = resolve_mutation(m, handles)
    except MutationResolveError as exc:
        return Verdict(Outcome.REJECTED, (_store_violation(str(exc)),))

    baseline = _violation_keys(full_check(db).violations)
    scratch = db.clone()
    try:
        raw_apply(scratch, resolved)
    except StoreError as exc:
        return Verdict(Outcome.REJECTED, (_store_violation(str(exc)),))

    post = full_check(scratch)
    new = tuple(
        v for v in post.violations if (v.constraint, v.witness) not in baseline
    )
    if new:
        return Verdict(Outcome.REJECTED, new)

    applied_row = raw_apply(db, resolved)
    if m.action is Action.INSERT and m.handle and applied_row is not None:
        handles[m.handle] = applied_row
    return Verdict(Outcome.APPLIED, (), row=applied_row)


def _violation_keys(violations: tuple[Violation, ...]) -> set:
    return {(v.constraint, v.witness) for v in violations}
