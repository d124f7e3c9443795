"""In-memory relational store with surrogate keys and reverse link indexes.

Rows live in per-set tables keyed by a surrogate integer that starts at 1,
grows monotonically, and is never reused. Link values are stored as RowId
references and mirrored in a reverse index (target row -> set of source
rows) so preimages are a lookup, not a scan. Referential integrity and
nullability are enforced on every write; deletes are RESTRICT-only.

The store counts rows it touches: +1 for every row whose values are read
(lookups, full-row reads, existence checks performed during validation)
and +1 per reverse-index consultation. The counter measures work done, so
it keeps advancing during mutations that end up rejected; it is not part
of the logical state captured by snapshot().
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union

from .model import FunctionDef, ScalarType, Schema


@dataclass(frozen=True, order=True)
class RowId:
    """Surrogate identifier of one row of one set."""

    set_name: str
    x: int

    def __repr__(self) -> str:
        return f"{self.set_name}#{self.x}"


Value = Union[int, str, RowId, None]


class StoreError(Exception):
    """Raised when a write violates a store-level rule."""


class UnknownSet(StoreError):
    pass


class UnknownRow(StoreError):
    pass


class UnknownFunction(StoreError):
    pass


class MissingRequired(StoreError):
    pass


class DanglingReference(StoreError):
    pass


class ValueTypeMismatch(StoreError):
    pass


class RestrictViolation(StoreError):
    def __init__(self, message: str, referencing: tuple[RowId, ...]):
        super().__init__(message)
        self.referencing = referencing


class RowCounter:
    """Mutable rows-touched tally, shareable between a store and its clones."""

    __slots__ = ("rows_inspected",)

    def __init__(self) -> None:
        self.rows_inspected = 0

    def touch(self, n: int = 1) -> None:
        self.rows_inspected += n


class Database:
    """Mutable row store bound to an immutable schema.

    Single writer per instance; readers may interleave only between
    mutations. clone() shares the counter by default so work done on a
    scratch copy is still attributed to the lineage being measured.
    """

    def __init__(self, schema: Schema, counter: RowCounter | None = None):
        self.schema = schema
        self._tables: dict[str, dict[int, dict[str, Value]]] = {
            s.name: {} for s in schema.sets
        }
        self._reverse: dict[tuple[str, str], dict[int, set[int]]] = {
            (fn.domain, fn.name): {} for fn in schema.functions if fn.is_link
        }
        self._next_id: dict[str, int] = {s.name: 1 for s in schema.sets}
        self.counter = counter if counter is not None else RowCounter()

    @property
    def rows_inspected(self) -> int:
        return self.counter.rows_inspected

    # -- reads ---------------------------------------------------------

    def rows(self, set_name: str) -> tuple[RowId, ...]:
        table = self._tables.get(set_name)
        if table is None:
            raise UnknownSet(f"unknown set {set_name!r}")
        return tuple(RowId(set_name, x) for x in table)

    def row_count(self, set_name: str) -> int:
        return len(self._tables.get(set_name, {}))

    def row_exists(self, row: RowId) -> bool:
        return row.x in self._tables.get(row.set_name, {})

    def lookup(self, row: RowId, fn_name: str) -> Value:
        values = self._row(row)
        self.counter.touch()
        if fn_name not in values:
            raise UnknownFunction(f"no function {fn_name!r} on {row.set_name!r}")
        return values[fn_name]

    def read_row(self, row: RowId) -> dict[str, Value]:
        values = self._row(row)
        self.counter.touch()
        return dict(values)

    def inverse(self, domain_set: str, fn_name: str, target: RowId) -> frozenset[RowId]:
        """Exact preimage of `target` under the link (domain_set, fn_name)."""
        index = self._reverse.get((domain_set, fn_name))
        if index is None:
            raise UnknownFunction(f"no link function {fn_name!r} on {domain_set!r}")
        self.counter.touch()
        sources = index.get(target.x, ())
        return frozenset(RowId(domain_set, x) for x in sources)

    def peek_next_id(self, set_name: str) -> int:
        if set_name not in self._next_id:
            raise UnknownSet(f"unknown set {set_name!r}")
        return self._next_id[set_name]

    # -- validation (read-only, raises StoreError) ----------------------

    def validate_insert(self, set_name: str, values: Mapping[str, Value]) -> dict[str, Value]:
        """Check an insert and return the full normalized row value map."""
        if set_name not in self._tables:
            raise UnknownSet(f"unknown set {set_name!r}")
        normalized: dict[str, Value] = {}
        declared = {fn.name: fn for fn in self.schema.functions_of(set_name)}
        for name, value in values.items():
            fn = declared.get(name)
            if fn is None:
                raise UnknownFunction(f"no function {name!r} on {set_name!r}")
            normalized[name] = self._check_value(fn, value)
        for name, fn in declared.items():
            if name not in normalized:
                if not fn.nullable:
                    raise MissingRequired(
                        f"insert into {set_name!r} misses required {name!r}"
                    )
                normalized[name] = None
        return normalized

    def validate_update(self, row: RowId, values: Mapping[str, Value]) -> dict[str, Value]:
        self._row(row)
        normalized: dict[str, Value] = {}
        for name, value in values.items():
            fn = self.schema.function(row.set_name, name)
            if fn is None:
                raise UnknownFunction(f"no function {name!r} on {row.set_name!r}")
            normalized[name] = self._check_value(fn, value)
        return normalized

    def validate_delete(self, row: RowId) -> None:
        self._row(row)
        referencing: list[RowId] = []
        for fn in self.schema.links_into(row.set_name):
            referencing.extend(sorted(self.inverse(fn.domain, fn.name, row)))
        if referencing:
            listed = ", ".join(repr(r) for r in referencing[:5])
            more = "" if len(referencing) <= 5 else f" and {len(referencing) - 5} more"
            raise RestrictViolation(
                f"cannot delete {row!r}: referenced by {listed}{more}",
                tuple(referencing),
            )

    # -- writes ----------------------------------------------------------

    def insert_row(self, set_name: str, values: Mapping[str, Value]) -> RowId:
        normalized = self.validate_insert(set_name, values)
        x = self._next_id[set_name]
        self._next_id[set_name] = x + 1
        self._tables[set_name][x] = normalized
        self.counter.touch()
        for name, value in normalized.items():
            if isinstance(value, RowId):
                self._reverse[(set_name, name)].setdefault(value.x, set()).add(x)
        return RowId(set_name, x)

    def set_value(self, row: RowId, fn_name: str, value: Value) -> None:
        self.set_values(row, {fn_name: value})

    def set_values(self, row: RowId, values: Mapping[str, Value]) -> None:
        """Replace several values of one row; validates all before writing."""
        normalized = self.validate_update(row, values)
        stored = self._row(row)
        self.counter.touch()
        for name, value in normalized.items():
            old = stored[name]
            if isinstance(old, RowId):
                index = self._reverse[(row.set_name, name)]
                sources = index.get(old.x)
                if sources is not None:
                    sources.discard(row.x)
                    if not sources:
                        del index[old.x]
            stored[name] = value
            if isinstance(value, RowId):
                self._reverse[(row.set_name, name)].setdefault(value.x, set()).add(row.x)

    def delete_row(self, row: RowId) -> None:
        self.validate_delete(row)
        stored = self._tables[row.set_name].pop(row.x)
        self.counter.touch()
        for name, value in stored.items():
            if isinstance(value, RowId):
                index = self._reverse[(row.set_name, name)]
                sources = index.get(value.x)
                if sources is not None:
                    sources.discard(row.x)
                    if not sources:
                        del index[value.x]

    # -- whole-store operations ------------------------------------------

    def clone(self, share_counter: bool = True) -> "Database":
        other = Database(
            self.schema, self.counter if share_counter else RowCounter()
        )
        other._tables = {
            set_name: {x: dict(values) for x, values in table.items()}
            for set_name, table in self._tables.items()
        }
        other._reverse = {
            key: {t: set(sources) for t, sources in index.items()}
            for key, index in self._reverse.items()
        }
        other._next_id = dict(self._next_id)
        return other

    def snapshot(self) -> dict:
        """Deep, comparison-friendly image of the logical state."""
        return {
            "next_ids": dict(self._next_id),
            "tables": {
                set_name: {x: dict(values) for x, values in table.items()}
                for set_name, table in self._tables.items()
            },
            "reverse": {
                f"{d}.{f}": {t: tuple(sorted(s)) for t, s in index.items() if s}
                for (d, f), index in self._reverse.items()
            },
        }

    def dump_text(self) -> str:
        """Line-oriented debugging dump; format is documented but not stable."""
        lines: list[str] = []
        for set_name in sorted(self._tables):
            for x in sorted(self._tables[set_name]):
                values = self._tables[set_name][x]
                parts = " ".join(
                    f"{name}={_render_value(values[name])}" for name in sorted(values)
                )
                lines.append(f"{set_name} x={x} {parts}".rstrip())
        return "\n".join(lines)

    # -- internals ---------------------------------------------------------

    def _row(self, row: RowId) -> dict[str, Value]:
        table = self._tables.get(row.set_name)
        if table is None:
            raise UnknownSet(f"unknown set {row.set_name!r}")
        values = table.get(row.x)
        if values is None:
            raise UnknownRow(f"no row {row!r}")
        return values

    def _check_value(self, fn: FunctionDef, value: Value) -> Value:
        if value is None:
            if not fn.nullable:
                raise MissingRequired(
                    f"{fn.name!r} on {fn.domain!r} does not allow null"
                )
            return None
        if fn.is_link:
            if not isinstance(value, RowId):
                raise ValueTypeMismatch(
                    f"{fn.name!r} on {fn.domain!r} is a link to {fn.codomain!r},"
                    f" got {type(value).__name__}"
                )
            if value.set_name != fn.codomain:
                raise ValueTypeMismatch(
                    f"{fn.name!r} on {fn.domain!r} links to {fn.codomain!r},"
                    f" got row of {value.set_name!r}"
                )
            self.counter.touch()
            if not self.row_exists(value):
                raise DanglingReference(
                    f"{fn.name!r} on {fn.domain!r} references missing {value!r}"
                )
            return value
        if fn.codomain is ScalarType.TEXT:
            if not isinstance(value, str):
                raise ValueTypeMismatch(
                    f"{fn.name!r} on {fn.domain!r} holds text, got {type(value).__name__}"
                )
        else:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueTypeMismatch(
                    f"{fn.name!r} on {fn.domain!r} holds integers, got {type(value).__name__}"
                )
        return value


def brute_force_preimage(
    db: Database, domain_set: str, fn_name: str, target: RowId
) -> frozenset[RowId]:
    """Reference implementation of inverse() by scanning every row."""
    matches: list[RowId] = []
    for row in db.rows(domain_set):
        if db.lookup(row, fn_name) == target:
            matches.append(row)
    return frozenset(matches)


def _render_value(value: Value) -> str:
    if value is None:
        return "null"
    if isinstance(value, RowId):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return str(value)
