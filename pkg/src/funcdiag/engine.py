"""Incremental enforcement of diagram constraints on mutations.

Every mutation is staged against a read-only hypothetical view of the
store; constraint checks run on that view, and only a fully clean check
commits anything, so a rejected mutation leaves the database bit-identical
to its pre-mutation state.

Checks come in two flavors. A domain-row check fires when a row of a
constraint's domain set is inserted, or updated in either chain's own
column: it evaluates both chains for that row. A link-update check fires
when an interior chain function changes at some row r: it recomputes the
new composed head once (the prefix walk), collects the exact set of
domain rows whose chain passes through r (the reverse-reachability walk
over the staged indexes), and compares the head against the other chain's
value at each of those rows. A null anywhere in a chain makes the
instance vacuously satisfied, so checks drop out as early as possible on
nulls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, MutableMapping

from .dsl import Action, BindingValue, HandleRef, Mutation
from .model import (
    ChainSpec,
    ConstraintKind,
    DiagramConstraint,
    Schema,
    Side,
)
from .store import Database, RowId, StoreError, Value


class Outcome(Enum):
    APPLIED = "applied"
    REJECTED = "rejected"


class ViolationKind(Enum):
    COMMUTATIVE = "commutative"
    ANTI_COMMUTATIVE = "anti-commutative"
    STORE_ERROR = "store-error"


@dataclass(frozen=True)
class ChangedLink:
    """The (set, function, row) whose update triggered a violation."""

    set_name: str
    function: str
    row: RowId


@dataclass(frozen=True)
class Violation:
    constraint: str | None
    kind: ViolationKind
    witness: RowId | None
    left: Value
    right: Value
    changed: ChangedLink | None
    message: str

    def to_json_dict(self) -> dict:
        return {
            "constraint": self.constraint,
            "kind": self.kind.value,
            "witness": _json_row(self.witness),
            "left": _json_value(self.left),
            "right": _json_value(self.right),
            "changed": (
                None
                if self.changed is None
                else {
                    "set": self.changed.set_name,
                    "function": self.changed.function,
                    "x": self.changed.row.x,
                }
            ),
            "message": self.message,
        }

    def render_line(self) -> str:
        parts = [
            f"constraint={self.constraint or '-'}",
            f"kind={self.kind.value}",
            f"witness={_render_opt(self.witness)}",
            f"left={_render_opt(self.left)}",
            f"right={_render_opt(self.right)}",
        ]
        if self.changed is not None:
            parts.append(
                f"changed={self.changed.set_name}.{self.changed.function}"
                f"@{self.changed.row.x}"
            )
        return " ".join(parts) + f" :: {self.message}"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    violations: tuple[Violation, ...]
    row: RowId | None = field(default=None, compare=False)

    @property
    def applied(self) -> bool:
        return self.outcome is Outcome.APPLIED

    @property
    def rejected(self) -> bool:
        return self.outcome is Outcome.REJECTED


@dataclass(frozen=True)
class Occurrence:
    """One chain position of one constraint, keyed by (set, function)."""

    constraint: DiagramConstraint
    side: Side
    position: int

    @property
    def chain(self) -> ChainSpec:
        return self.constraint.chain(self.side)

    @property
    def function_name(self) -> str:
        return self.chain.functions[self.position - 1].name

    @property
    def set_name(self) -> str:
        return self.chain.functions[self.position - 1].domain


def dispatch(schema: Schema) -> dict[tuple[str, str], tuple[Occurrence, ...]]:
    """Static placement of checks: (set, function) -> chain occurrences.

    Every chain position of every admitted constraint appears exactly
    once; a function used by both sides gets one occurrence per side.
    """
    table: dict[tuple[str, str], list[Occurrence]] = {}
    for constraint in schema.constraints:
        for side in (Side.LEFT, Side.RIGHT):
            chain = constraint.chain(side)
            for position, fn in enumerate(chain.functions, start=1):
                occ = Occurrence(constraint, side, position)
                table.setdefault((fn.domain, fn.name), []).append(occ)
    return {key: tuple(occs) for key, occs in table.items()}


# ---------------------------------------------------------------------------
# Hypothetical views
# ---------------------------------------------------------------------------


class _StagedView:
    """Read-only overlay of a database with one mutation staged.

    Lookups and reverse-index walks see the post-mutation state; the
    underlying store is never written. Rows touched are charged to the
    underlying store's counter, whichever layer answers.
    """

    def __init__(
        self,
        db: Database,
        inserted: tuple[RowId, dict[str, Value]] | None = None,
        updated: tuple[RowId, dict[str, Value], dict[str, Value]] | None = None,
    ):
        self._db = db
        self.schema = db.schema
        self._inserted = inserted
        self._updated = updated

    def row_exists(self, row: RowId) -> bool:
        if self._inserted is not None and row == self._inserted[0]:
            return True
        return self._db.row_exists(row)

    def rows(self, set_name: str) -> tuple[RowId, ...]:
        base = self._db.rows(set_name)
        if self._inserted is not None and self._inserted[0].set_name == set_name:
            return base + (self._inserted[0],)
        return base

    def lookup(self, row: RowId, fn_name: str) -> Value:
        if self._inserted is not None and row == self._inserted[0]:
            self._db.counter.touch()
            return self._inserted[1][fn_name]
        if self._updated is not None and row == self._updated[0]:
            new_values = self._updated[1]
            if fn_name in new_values:
                self._db.counter.touch()
                return new_values[fn_name]
        return self._db.lookup(row, fn_name)

    def inverse(self, domain_set: str, fn_name: str, target: RowId) -> frozenset[RowId]:
        result = set(self._db.inverse(domain_set, fn_name, target))
        if self._updated is not None:
            row, new_values, old_values = self._updated
            if row.set_name == domain_set and fn_name in new_values:
                if old_values[fn_name] == target:
                    result.discard(row)
                if new_values[fn_name] == target:
                    result.add(row)
        if self._inserted is not None:
            row, values = self._inserted
            if row.set_name == domain_set and values.get(fn_name) == target:
                result.add(row)
        return frozenset(result)


def _bindings_view(db_or_view, row: RowId, bindings: Mapping[str, Value] | None):
    if bindings is None:
        return db_or_view
    if isinstance(db_or_view, Database):
        base = db_or_view.read_row(row)
        base.update(bindings)
        return _StagedView(db_or_view, updated=(row, dict(base), db_or_view.read_row(row)))
    raise TypeError("hypothetical bindings require a plain Database")


# ---------------------------------------------------------------------------
# Chain evaluation
# ---------------------------------------------------------------------------


def eval_chain(view, chain: ChainSpec, x: RowId) -> Value:
    """Composed chain value at x, innermost function first; null propagates."""
    current: Value = x
    for position in range(chain.length, 0, -1):
        fn = chain.functions[position - 1]
        assert isinstance(current, RowId)
        current = view.lookup(current, fn.name)
        if current is None:
            return None
    return current


def eval_prefix(view, chain: ChainSpec, position: int, start: Value) -> Value:
    """Apply the outer functions (position-1 .. 1) to a value already in
    the codomain of the function at `position`; null propagates."""
    current = start
    for j in range(position - 1, 0, -1):
        if current is None:
            return None
        fn = chain.functions[j - 1]
        assert isinstance(current, RowId)
        current = view.lookup(current, fn.name)
    return current


def affected_rows(view, chain: ChainSpec, position: int, r: RowId) -> frozenset[RowId]:
    """Rows of the domain set whose chain tail reaches r at `position`.

    Walks the reverse indexes outward through positions position+1 .. n;
    for position == n the row is itself in the domain set.
    """
    frontier: frozenset[RowId] = frozenset((r,))
    for j in range(position + 1, chain.length + 1):
        fn = chain.functions[j - 1]
        gathered: set[RowId] = set()
        for target in frontier:
            gathered.update(view.inverse(fn.domain, fn.name, target))
        frontier = frozenset(gathered)
        if not frontier:
            break
    return frontier


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


def check_domain_row(
    view,
    constraint: DiagramConstraint,
    x: RowId,
    bindings: Mapping[str, Value] | None = None,
) -> list[Violation]:
    """Evaluate both chains at x (with optional hypothetical bindings).

    No violation when either side is null; commutative constraints are
    violated by differing values, anti-commutative ones by equal values.
    """
    view = _bindings_view(view, x, bindings)
    left = eval_chain(view, constraint.left, x)
    if left is None:
        return []
    right = eval_chain(view, constraint.right, x)
    if right is None:
        return []
    if constraint.kind is ConstraintKind.COMMUTATIVE:
        violated = left != right
    else:
        violated = left == right
    if not violated:
        return []
    return [_constraint_violation(constraint, x, left, right, None)]


def check_link_update(
    view, occurrence: Occurrence, r: RowId, new_value: Value
) -> list[Violation]:
    """Check every domain row affected by changing the link at r.

    The new composed head is computed once from the new value; each
    affected row is compared against the other chain's value in the
    staged state. All violating rows are reported.
    """
    constraint = occurrence.constraint
    chain = occurrence.chain
    assert occurrence.position < chain.length, "innermost positions are domain checks"
    head = eval_prefix(view, chain, occurrence.position, new_value)
    if head is None:
        return []
    other = constraint.chain(occurrence.side.other)
    changed = ChangedLink(occurrence.set_name, occurrence.function_name, r)
    violations: list[Violation] = []
    for x in sorted(affected_rows(view, chain, occurrence.position, r)):
        other_value = eval_chain(view, other, x)
        if other_value is None:
            continue
        if constraint.kind is ConstraintKind.COMMUTATIVE:
            violated = other_value != head
        else:
            violated = other_value == head
        if violated:
            if occurrence.side is Side.LEFT:
                left, right = head, other_value
            else:
                left, right = other_value, head
            violations.append(
                _constraint_violation(constraint, x, left, right, changed)
            )
    return violations


# ---------------------------------------------------------------------------
# Mutation application
# ---------------------------------------------------------------------------


class MutationResolveError(Exception):
    """A symbolic reference in a mutation has no applied row behind it."""


@dataclass(frozen=True)
class ResolvedMutation:
    action: Action
    set_name: str | None
    row: RowId | None
    values: dict[str, Value]


def resolve_mutation(m: Mutation, handles: Mapping[str, RowId]) -> ResolvedMutation:
    """Replace symbolic handles with concrete rows."""

    def resolve_ref(ref: HandleRef | RowId | None) -> RowId | None:
        if ref is None or isinstance(ref, RowId):
            return ref
        row = handles.get(ref.name)
        if row is None:
            raise MutationResolveError(
                f"handle @{ref.name} does not name an applied insert"
            )
        return row

    values: dict[str, Value] = {}
    for binding in m.bindings:
        value: BindingValue = binding.value
        if isinstance(value, HandleRef):
            value = resolve_ref(value)
        values[binding.function] = value
    row = resolve_ref(m.row_ref)
    if m.action in (Action.UPDATE, Action.DELETE) and row is None:
        raise MutationResolveError(f"{m.action.value} statement names no row")
    set_name = m.set_name if m.action is Action.INSERT else None
    return ResolvedMutation(m.action, set_name, row, values)


def raw_apply(db: Database, resolved: ResolvedMutation) -> RowId | None:
    """Apply a resolved mutation with store-level validation only."""
    if resolved.action is Action.INSERT:
        assert resolved.set_name is not None
        return db.insert_row(resolved.set_name, resolved.values)
    assert resolved.row is not None
    if resolved.action is Action.UPDATE:
        db.set_values(resolved.row, resolved.values)
        return resolved.row
    db.delete_row(resolved.row)
    return None


def apply_mutation(
    db: Database,
    m: Mutation,
    handles: MutableMapping[str, RowId] | None = None,
) -> Verdict:
    """Stage, check, and atomically apply or reject one mutation.

    Store-level failures (missing required values, dangling references,
    RESTRICT on delete, unresolved handles) reject with a store-error
    violation; constraint failures reject with one violation per
    offending witness row. Nothing is written unless the verdict is
    APPLIED. On an applied insert carrying a handle, `handles` gains the
    new row.
    """
    handles = handles if handles is not None else {}
    try:
        resolved = resolve_mutation(m, handles)
    except MutationResolveError as exc:
        return Verdict(Outcome.REJECTED, (_store_violation(str(exc)),))

    try:
        if resolved.action is Action.INSERT:
            assert resolved.set_name is not None
            normalized = db.validate_insert(resolved.set_name, resolved.values)
            row = RowId(resolved.set_name, db.peek_next_id(resolved.set_name))
            view = _StagedView(db, inserted=(row, normalized))
            changedimpl: set[str] = set(normalized)
        elif resolved.action is Action.UPDATE:
            assert resolved.row is not None
            normalized = db.validate_update(resolved.row, resolved.values)
            row = resolved.row
            old_values = db.read_row(row)
            normalized = {
                name: value
                for name, value in normalized.items()
                if old_values[name] != value
            }
            view = _StagedView(db, updated=(row, normalized, old_values))
            changedimpl = set(normalized)
        else:
            assert resolved.row is not None
            db.validate_delete(resolved.row)
            row = resolved.row
            view = _StagedView(db)
            changedimpl = set()
    except StoreError as exc:
        return Verdict(Outcome.REJECTED, (_store_violation(str(exc)),))

    violations: list[Violation] = []
    if resolved.action in (Action.INSERT, Action.UPDATE):
        set_name = row.set_name
        for constraint in db.schema.constraints_on(set_name):
            if resolved.action is Action.INSERT or (
                constraint.left.innermost.name in changedimpl
                or constraint.right.innermost.name in changedimpl
            ):
                violations.extend(check_domain_row(view, constraint, row))
        if resolved.action is Action.UPDATE:
            table = dispatch(db.schema)
            for fn_name in sorted(changedimpl):
                for occ in table.get((set_name, fn_name), ()):
                    if occ.position < occ.chain.length:
                        violations.extend(
                            check_link_update(view, occ, row, normalized[fn_name])
                        )

    violations = _dedupe(violations)
    if violations:
        return Verdict(Outcome.REJECTED, tuple(violations))

    applied_row = raw_apply(db, resolved)
    if m.action is Action.INSERT and m.handle and applied_row is not None:
        handles[m.handle] = applied_row
    return Verdict(Outcome.APPLIED, (), row=applied_row)


def sort_violations(violations: Iterable[Violation]) -> list[Violation]:
    return sorted(
        violations,
        key=lambda v: (
            v.constraint or "",
            v.witness.set_name if v.witness else "",
            v.witness.x if v.witness else 0,
        ),
    )


def _dedupe(violations: list[Violation]) -> list[Violation]:
    seen: set[tuple[str | None, RowId | None]] = set()
    unique: list[Violation] = []
    for violation in sort_violations(violations):
        key = (violation.constraint, violation.witness)
        if key in seen:
            continue
        seen.add(key)
        unique.append(violation)
    return unique


def _constraint_violation(
    constraint: DiagramConstraint,
    witness: RowId,
    left: Value,
    right: Value,
    changed: ChangedLink | None,
) -> Violation:
    kind = (
        ViolationKind.COMMUTATIVE
        if constraint.kind is ConstraintKind.COMMUTATIVE
        else ViolationKind.ANTI_COMMUTATIVE
    )
    template = constraint.message or constraint.default_message()
    context = {
        "left": _render_opt(left),
        "right": _render_opt(right),
        "left_chain": constraint.left.render(),
        "right_chain": constraint.right.render(),
        "witness": repr(witness),
        "constraint": constraint.id,
    }
    try:
        message = template.format(**context)
    except (KeyError, IndexError, ValueError):
        message = template
    return Violation(constraint.id, kind, witness, left, right, changed, message)


def _store_violation(message: str) -> Violation:
    return Violation(None, ViolationKind.STORE_ERROR, None, None, None, None, message)


def _render_opt(value: Value) -> str:
    if value is None:
        return "null"
    if isinstance(value, RowId):
        return repr(value)
    return str(value)


def _json_value(value: Value):
    if isinstance(value, RowId):
        return {"set": value.set_name, "x": value.x}
    return value


def _json_row(row: RowId | None):
    if row is None:
        return None
    return {"set": row.set_name, "x": row.x}
