"""Schema and constraint model.

A schema is a collection of named sets and the functions defined on them.
A function maps every element of its domain set either to an element of
another set (a link function, realized as a foreign key) or to a scalar
value (an attribute function). Rows of a set are identified by a surrogate
integer, and every set designates one attribute as its display name.

A diagram constraint pairs two composition chains that start on a common
domain set and end in a common codomain, and demands that the composed
values be equal for every row (commutative) or differ for every row
(anti-commutative). Chains are stored outermost-first: the entry at index
0 is applied last, the entry at index n-1 is the function defined on the
common domain and applied first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class ScalarType(Enum):
    """Value domains available to attribute functions."""

    TEXT = "text"
    INTEGER = "integer"


class ConstraintKind(Enum):
    COMMUTATIVE = "commutative"
    ANTI_COMMUTATIVE = "anti-commutative"


class ConstraintClass(Enum):
    """Taxonomy of diagram constraints.

    GENERAL constraints (at least one side composes two or more functions,
    neither side is the identity) are the only class this engine enforces.
    HBFP (both sides are single functions) and LOCAL (one side is the
    identity of the domain) belong to other enforcement families and are
    refused with a classification so callers can point users there.
    """

    GENERAL = "general"
    HBFP = "hbfp"
    LOCAL = "local"


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def other(self) -> "Side":
        return Side.RIGHT if self is Side.LEFT else Side.LEFT


class IssueCode(Enum):
    """Closed enumeration of diagnostic codes shared by model and DSL."""

    SYNTAX = "syntax"
    NO_SCHEMA = "no-schema"
    DUPLICATE_SET = "duplicate-set"
    DUPLICATE_FUNCTION = "duplicate-function"
    DUPLICATE_CONSTRAINT = "duplicate-constraint"
    MISSING_NAME_ATTRIBUTE = "missing-name-attribute"
    DUPLICATE_NAME_ATTRIBUTE = "duplicate-name-attribute"
    BAD_NAME_ATTRIBUTE = "bad-name-attribute"
    UNKNOWN_SET = "unknown-set"
    UNKNOWN_FUNCTION = "unknown-function"
    BROKEN_COMPOSITION = "broken-composition"
    DOMAIN_MISMATCH = "domain-mismatch"
    CODOMAIN_MISMATCH = "codomain-mismatch"
    DEGENERATE_IDENTITY = "degenerate-identity"
    REFUSED_HBFP = "refused-hbfp"
    REFUSED_LOCAL = "refused-local"
    UNBOUND_HANDLE = "unbound-handle"
    DUPLICATE_HANDLE = "duplicate-handle"
    TYPE_MISMATCH = "type-mismatch"


@dataclass(frozen=True)
class Issue:
    """A model-level validation finding.

    Carries no source position; the DSL layer maps `side`/`position` back
    to the offending token when the constraint came from parsed text.
    `position` is 1-based and indexes a chain entry, outermost first.
    """

    code: IssueCode
    message: str
    side: Side | None = None
    position: int | None = None


@dataclass(frozen=True)
class SetDef:
    """A named fundamental set with its designated display attribute."""

    name: str
    name_attribute: str


@dataclass(frozen=True)
class FunctionDef:
    """A function defined on `domain`.

    `codomain` is a set name for link functions and a ScalarType for
    attribute functions. (domain, name) pairs are unique within a schema;
    bare names may repeat across sets.
    """

    name: str
    domain: str
    codomain: str | ScalarType
    nullable: bool = False

    @property
    def is_link(self) -> bool:
        return isinstance(self.codomain, str)

    @property
    def is_attribute(self) -> bool:
        return not self.is_link


@dataclass(frozen=True)
class ChainSpec:
    """An ordered composition of functions, outermost first.

    `functions[0]` is applied last and determines the codomain;
    `functions[-1]` is defined on the common domain and applied first.
    The reserved identity chain carries no functions and names the set it
    is the identity of.
    """

    functions: tuple[FunctionDef, ...]
    identity_of: str | None = None

    def __post_init__(self) -> None:
        if self.identity_of is None and not self.functions:
            raise ValueError("a non-identity chain needs at least one function")
        if self.identity_of is not None and self.functions:
            raise ValueError("an identity chain carries no functions")

    @property
    def is_identity(self) -> bool:
        return self.identity_of is not None

    @property
    def length(self) -> int:
        return len(self.functions)

    @property
    def domain_set(self) -> str:
        if self.identity_of is not None:
            return self.identity_of
        return self.functions[-1].domain

    @property
    def codomain(self) -> str | ScalarType:
        if self.identity_of is not None:
            return self.identity_of
        return self.functions[0].codomain

    @property
    def innermost(self) -> FunctionDef:
        return self.functions[-1]

    @property
    def outermost(self) -> FunctionDef:
        return self.functions[0]

    def render(self) -> str:
        if self.is_identity:
            return "identity"
        return " . ".join(f.name for f in self.functions)


@dataclass(frozen=True)
class DiagramConstraint:
    """A resolved two-chain diagram constraint.

    Only GENERAL constraints are admitted into a Schema; candidates of the
    refused classes still take this shape so that classification and
    refusal messages can be produced uniformly.
    """

    id: str
    kind: ConstraintKind
    left: ChainSpec
    right: ChainSpec
    message: str | None = None

    @property
    def domain_set(self) -> str:
        return self.left.domain_set

    def chain(self, side: Side) -> ChainSpec:
        return self.left if side is Side.LEFT else self.right

    def render(self) -> str:
        op = "=" if self.kind is ConstraintKind.COMMUTATIVE else "/="
        return f"{self.left.render()} {op} {self.right.render()} on {self.domain_set}"

    def default_message(self) -> str:
        verb = (
            "must equal"
            if self.kind is ConstraintKind.COMMUTATIVE
            else "must never equal"
        )
        return (
            f"value of {self.left.render()} {verb} value of {self.right.render()}"
            " (left={left}, right={right})"
        )


@dataclass(frozen=True)
class Schema:
    """An immutable, validated schema plus its admitted constraints."""

    name: str
    sets: tuple[SetDef, ...]
    functions: tuple[FunctionDef, ...]
    constraints: tuple[DiagramConstraint, ...] = ()
    _sets_by_name: dict = field(default_factory=dict, repr=False, compare=False)
    _fns_by_set: dict = field(default_factory=dict, repr=False, compare=False)
    _links_into: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_name = {s.name: s for s in self.sets}
        by_set: dict[str, dict[str, FunctionDef]] = {s.name: {} for s in self.sets}
        links_into: dict[str, list[FunctionDef]] = {s.name: [] for s in self.sets}
        for fn in self.functions:
            by_set.setdefault(fn.domain, {})[fn.name] = fn
            if fn.is_link:
                links_into.setdefault(fn.codomain, []).append(fn)
        object.__setattr__(self, "_sets_by_name", by_name)
        object.__setattr__(self, "_fns_by_set", by_set)
        object.__setattr__(
            self, "_links_into", {k: tuple(v) for k, v in links_into.items()}
        )

    def set_def(self, name: str) -> SetDef | None:
        return self._sets_by_name.get(name)

    def has_set(self, name: str) -> bool:
        return name in self._sets_by_name

    def function(self, set_name: str, fn_name: str) -> FunctionDef | None:
        return self._fns_by_set.get(set_name, {}).get(fn_name)

    def functions_of(self, set_name: str) -> tuple[FunctionDef, ...]:
        return tuple(self._fns_by_set.get(set_name, {}).values())

    def functions_named(self, fn_name: str) -> tuple[FunctionDef, ...]:
        return tuple(fn for fn in self.functions if fn.name == fn_name)

    def links_into(self, set_name: str) -> tuple[FunctionDef, ...]:
        """Link functions whose codomain is `set_name` (for delete RESTRICT)."""
        return self._links_into.get(set_name, ())

    def constraint(self, constraint_id: str) -> DiagramConstraint | None:
        for c in self.constraints:
            if c.id == constraint_id:
                return c
        return None

    def constraints_on(self, domain_set: str) -> tuple[DiagramConstraint, ...]:
        return tuple(c for c in self.constraints if c.domain_set == domain_set)

    def with_constraints(self, constraints: tuple[DiagramConstraint, ...]) -> "Schema":
        for c in constraints:
            cls = classify_constraint(c)
            if cls is not ConstraintClass.GENERAL:
                raise ValueError(
                    f"constraint {c.id!r} classifies as {cls.value}; "
                    "only general diagram constraints are admitted"
                )
        return Schema(self.name, self.sets, self.functions, constraints)


@dataclass(frozen=True)
class RawChain:
    """An unresolved chain: function names outermost-first, or identity."""

    names: tuple[str, ...] = ()
    identity: bool = False


@dataclass(frozen=True)
class RawConstraint:
    """An unresolved constraint as written: names only, plus the domain set."""

    id: str
    kind: ConstraintKind
    domain_set: str
    left: RawChain
    right: RawChain
    message: str | None = None


def validate_schema(schema: Schema) -> list[Issue]:
    """Check structural invariants of a programmatically built schema.

    Duplicate set/function names cannot survive construction of the lookup
    tables, so callers assembling schemas from text must check duplicates
    before building (the DSL does, with source positions).
    """
    issues: list[Issue] = []
    for s in schema.sets:
        fn = schema.function(s.name, s.name_attribute)
        if fn is None:
            issues.append(
                Issue(
                    IssueCode.MISSING_NAME_ATTRIBUTE,
                    f"set {s.name!r} designates missing attribute {s.name_attribute!r} as its name",
                )
            )
        elif not fn.is_attribute:
            issues.append(
                Issue(
                    IssueCode.BAD_NAME_ATTRIBUTE,
                    f"name attribute {s.name_attribute!r} of set {s.name!r} must be an attribute function",
                )
            )
    for fn in schema.functions:
        if not schema.has_set(fn.domain):
            issues.append(
                Issue(
                    IssueCode.UNKNOWN_SET,
                    f"function {fn.name!r} is defined on unknown set {fn.domain!r}",
                )
            )
        if fn.is_link and not schema.has_set(fn.codomain):
            issues.append(
                Issue(
                    IssueCode.UNKNOWN_SET,
                    f"link function {fn.name!r} on {fn.domain!r} targets unknown set {fn.codomain!r}",
                )
            )
    return issues


def resolve_chain(
    schema: Schema, domain_set: str, raw: RawChain, side: Side
) -> tuple[ChainSpec | None, list[Issue]]:
    """Resolve chain entry names by walking domains inward-out.

    The innermost name must be a function on `domain_set`; each preceding
    name must be a function on the codomain of the entry it wraps. Name
    lookup is per-set: when a name is missing on the expected set but
    exists elsewhere in the schema, that is a composition break rather
    than an unknown name. All entries except the outermost must be link
    functions. Every problem is reported; resolution continues past a
    broken entry only when a unique same-named function elsewhere lets the
    walk proceed meaningfully, otherwise it stops.
    """
    if raw.identity:
        return ChainSpec((), identity_of=domain_set), []

    issues: list[Issue] = []
    resolved: list[FunctionDef | None] = [None] * len(raw.names)
    current = domain_set
    for idx in range(len(raw.names) - 1, -1, -1):
        position = idx + 1
        name = raw.names[idx]
        fn = schema.function(current, name)
        if fn is None:
            elsewhere = schema.functions_named(name)
            if elsewhere:
                actual = ", ".join(sorted({f.domain for f in elsewhere}))
                issues.append(
                    Issue(
                        IssueCode.BROKEN_COMPOSITION,
                        f"{side.value} chain entry {name!r} must be defined on"
                        f" {current!r} but is defined on {actual}",
                        side,
                        position,
                    )
                )
                if len(elsewhere) == 1:
                    fn = elsewhere[0]
            else:
                issues.append(
                    Issue(
                        IssueCode.UNKNOWN_FUNCTION,
                        f"{side.value} chain entry {name!r} names no function in the schema",
                        side,
                        position,
                    )
                )
        if fn is None:
            return None, issues
        resolved[idx] = fn
        if idx > 0:
            if fn.is_attribute:
                issues.append(
                    Issue(
                        IssueCode.BROKEN_COMPOSITION,
                        f"{side.value} chain entry {name!r} is an attribute function"
                        " but is composed under further functions",
                        side,
                        position,
                    )
                )
                return None, issues
            current = fn.codomain
    if issues:
        return None, issues
    return ChainSpec(tuple(resolved)), []  # type: ignore[arg-type]


def validate_diagram(
    schema: Schema, raw: RawConstraint
) -> tuple[DiagramConstraint | None, list[Issue]]:
    """Resolve a raw constraint against a validated schema.

    Returns the fully resolved constraint, or every diagnostic found
    (unknown names, composition breaks, codomain disagreement). A resolved
    constraint is not yet admitted: classification decides that.
    """
    issues: list[Issue] = []
    if not schema.has_set(raw.domain_set):
        issues.append(
            Issue(
                IssueCode.UNKNOWN_SET,
                f"constraint {raw.id!r} is declared on unknown set {raw.domain_set!r}",
            )
        )
        return None, issues
    if raw.left.identity and raw.right.identity:
        issues.append(
            Issue(
                IssueCode.DEGENERATE_IDENTITY,
                f"constraint {raw.id!r} declares identity on both sides",
            )
        )
        return None, issues

    left, left_issues = resolve_chain(schema, raw.domain_set, raw.left, Side.LEFT)
    right, right_issues = resolve_chain(schema, raw.domain_set, raw.right, Side.RIGHT)
    issues.extend(left_issues)
    issues.extend(right_issues)
    if left is None or right is None:
        return None, issues

    if left.domain_set != right.domain_set:
        issues.append(
            Issue(
                IssueCode.DOMAIN_MISMATCH,
                f"chains start on different sets: {left.domain_set!r} vs {right.domain_set!r}",
            )
        )
    lcod, rcod = left.codomain, right.codomain
    if lcod != rcod:
        issues.append(
            Issue(
                IssueCode.CODOMAIN_MISMATCH,
                f"chains end in different codomains: {_render_codomain(lcod)}"
                f" vs {_render_codomain(rcod)}",
            )
        )
    if issues:
        return None, issues
    return DiagramConstraint(raw.id, raw.kind, left, right, raw.message), []


def classify_constraint(candidate: DiagramConstraint) -> ConstraintClass:
    """Place a resolved constraint in the taxonomy.

    LOCAL when exactly one side is the identity chain; HBFP when both
    sides are single functions; GENERAL otherwise. Identity detection is
    syntactic: only the reserved identity chain counts, a chain that
    merely ends where it started does not.
    """
    left_id = candidate.left.is_identity
    right_id = candidate.right.is_identity
    if left_id != right_id:
        return ConstraintClass.LOCAL
    if candidate.left.length == 1 and candidate.right.length == 1:
        return ConstraintClass.HBFP
    return ConstraintClass.GENERAL


def refusal_issue(candidate: DiagramConstraint, cls: ConstraintClass) -> Issue:
    """The diagnostic produced when a non-GENERAL constraint is declared."""
    if cls is ConstraintClass.HBFP:
        return Issue(
            IssueCode.REFUSED_HBFP,
            f"constraint {candidate.id!r} composes a single function on each side"
            " (homogeneous binary function product); it is enforced by the"
            " paired-function reflexivity family, not by diagram checking",
        )
    return Issue(
        IssueCode.REFUSED_LOCAL,
        f"constraint {candidate.id!r} compares a chain against the identity of"
        f" {candidate.domain_set!r} (local constraint); it is enforced by the"
        " self-map constraint family, not by diagram checking",
    )


def verify_resolved_chain(schema: Schema, chain: ChainSpec, domain_set: str) -> bool:
    """Re-walk a resolved chain and confirm every structural invariant.

    Used by tests and by defensive callers: composability of consecutive
    entries, link-ness of every interior entry, and the declared domain.
    """
    if chain.is_identity:
        return chain.identity_of == domain_set
    if chain.functions[-1].domain != domain_set:
        return False
    for outer, inner in zip(chain.functions, chain.functions[1:]):
        if not inner.is_link or inner.codomain != outer.domain:
            return False
    for fn in chain.functions:
        if schema.function(fn.domain, fn.name) != fn:
            return False
    return True


def _render_codomain(codomain: str | ScalarType) -> str:
    if isinstance(codomain, ScalarType):
        return f"scalar {codomain.value}"
    return f"set {codomain!r}"
