"""Schemas, full conjunctive queries, database instances and natural-join evaluation.

Everything here is immutable once constructed. Domain values are opaque strings
compared by equality; a tuple is identified by its relation name together with
its full value vector, so ``("R2", ("b1", "c1"))`` names one input tuple.
"""
from __future__ import annotations

import csv
import io
import json
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

TupleRef = tuple[str, tuple[str, ...]]

CONSTANT = "*"

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")


class QueryError(ValueError):
    """Raised for queries outside the class of full CQs without self-joins."""


class QuerySyntaxError(QueryError):
    def __init__(self, message: str, position: int, text: str = "") -> None:
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class SelfJoinError(QueryError):
    pass


class NonFullQueryError(QueryError):
    pass


class InstanceError(ValueError):
    """Raised when tabular data does not conform to the query schema."""


@dataclass(frozen=True)
class RelationSchema:
    name: str
    attrs: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.attrs)) != len(self.attrs):
            raise QueryError(f"relation {self.name} repeats an attribute: {self.attrs}")

    def to_text(self) -> str:
        return f"{self.name}({', '.join(self.attrs)})"


@dataclass(frozen=True)
class QuerySpec:
    """A full conjunctive query without self-joins.

    The head is implicit: it is the union of all relation attributes, listed in
    order of first appearance.
    """

    relations: tuple[RelationSchema, ...]
    name: str = field(default="Q", compare=False)

    def __post_init__(self) -> None:
        names = [r.name for r in self.relations]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise SelfJoinError(f"relation(s) {', '.join(dup)} appear more than once (self-join)")

    @classmethod
    def of(cls, *relations: tuple[str, Sequence[str]], name: str = "Q") -> "QuerySpec":
        """Shorthand: ``QuerySpec.of(("R1", "AB"), ("R2", ["B", "C"]))``."""
        return cls(tuple(RelationSchema(n, tuple(a)) for n, a in relations), name=name)

    @property
    def head(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for rel in self.relations:
            for a in rel.attrs:
                seen.setdefault(a, None)
        return tuple(seen)

    @property
    def attributes(self) -> frozenset[str]:
        return frozenset(self.head)

    @property
    def relation_names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.relations)

    def relation(self, name: str) -> RelationSchema:
        for rel in self.relations:
            if rel.name == name:
                return rel
        raise KeyError(name)

    def rels(self, attr: str) -> frozenset[str]:
        return frozenset(r.name for r in self.relations if attr in r.attrs)

    def restrict(self, names: Iterable[str]) -> "QuerySpec":
        keep = set(names)
        return QuerySpec(tuple(r for r in self.relations if r.name in keep), name=self.name)

    def to_text(self) -> str:
        body = ", ".join(r.to_text() for r in self.relations)
        return f"{self.name}({', '.join(self.head)}) :- {body}"

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class DatabaseInstance:
    """Per-relation sets of value tuples, positionally aligned with the schema."""

    relations: Mapping[str, frozenset[tuple[str, ...]]]

    def __getitem__(self, name: str) -> frozenset[tuple[str, ...]]:
        return self.relations[name]

    @property
    def size(self) -> int:
        return sum(len(ts) for ts in self.relations.values())

    def tuple_refs(self) -> list[TupleRef]:
        """Every input tuple, sorted by (relation name, values)."""
        return sorted((name, t) for name, ts in self.relations.items() for t in ts)

    def __contains__(self, ref: object) -> bool:
        if not (isinstance(ref, tuple) and len(ref) == 2):
            return False
        name, values = ref
        return name in self.relations and values in self.relations[name]


@dataclass(frozen=True)
class OutputTuple:
    """One answer of a full CQ with its provenance.

    ``assignment`` lists (attribute, value) pairs sorted by attribute name;
    ``provenance`` holds one witness per relation, in query order.
    """

    assignment: tuple[tuple[str, str], ...]
    provenance: tuple[TupleRef, ...]

    @property
    def values(self) -> tuple[str, ...]:
        return tuple(v for _, v in self.assignment)

    def value(self, attr: str) -> str:
        for a, v in self.assignment:
            if a == attr:
                return v
        raise KeyError(attr)


@dataclass(frozen=True)
class DeletionSolution:
    deleted: frozenset[TupleRef]
    removed_count: int
    clamped: bool = False

    @property
    def cost(self) -> int:
        return len(self.deleted)

    def sorted_deleted(self) -> list[TupleRef]:
        return sorted(self.deleted)

    def to_dict(self) -> dict[str, Any]:
        return {
            "cost": self.cost,
            "removed_count": self.removed_count,
            "clamped": self.clamped,
            "deleted": [{"relation": r, "tuple": list(t)} for r, t in self.sorted_deleted()],
        }

    def to_json(self, **extra: Any) -> str:
        payload = self.to_dict()
        payload.update(extra)
        return json.dumps(payload, sort_keys=True)


# ---------------------------------------------------------------------------
# Query text


_TOKEN = re.compile(r"\s*(?:(?P<ident>[A-Za-z][A-Za-z0-9_]*)|(?P<op>:-)|(?P<punct>[(),.]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def _peek(self) -> Optional[tuple[str, str, int]]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _expect(self, kind: str, value: Optional[str] = None) -> tuple[str, str, int]:
        tok = self._peek()
        if tok is None:
            want = value or kind
            raise QuerySyntaxError(f"expected {want!r} but input ended", len(self.text), self.text)
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value or kind
            raise QuerySyntaxError(f"expected {want!r}, found {tok[1]!r}", tok[2], self.text)
        self.i += 1
        return tok

    def _atom(self) -> tuple[str, list[str], int]:
        _, name, pos = self._expect("ident")
        self._expect("punct", "(")
        attrs: list[str] = []
        tok = self._peek()
        if tok is not None and tok[1] == ")":
            self.i += 1
            return name, attrs, pos
        while True:
            attrs.append(self._expect("ident")[1])
            tok = self._expect("punct")
            if tok[1] == ")":
                return name, attrs, pos
            if tok[1] != ",":
                raise QuerySyntaxError(f"expected ',' or ')', found {tok[1]!r}", tok[2], self.text)

    def parse(self) -> QuerySpec:
        head_name, head_attrs, _ = self._atom()
        self._expect("op", ":-")
        body = [self._atom()]
        while True:
            tok = self._peek()
            if tok is None:
                break
            if tok[1] == ".":
                self.i += 1
                if self._peek() is not None:
                    t = self._peek()
                    raise QuerySyntaxError(f"unexpected {t[1]!r} after end of query", t[2], self.text)
                break
            self._expect("punct", ",")
            body.append(self._atom())

        seen: set[str] = set()
        for name, attrs, pos in body:
            if name in seen:
                raise SelfJoinError(f"relation {name} appears more than once (self-join), position {pos}")
            seen.add(name)
            if not attrs:
                raise QueryError(f"relation {name} has no attributes")
            if len(set(attrs)) != len(attrs):
                raise QueryError(f"relation {name} repeats an attribute")
        if len(set(head_attrs)) != len(head_attrs):
            raise QueryError("head repeats an attribute")
        body_attrs = {a for _, attrs, _ in body for a in attrs}
        missing = [a for a in head_attrs if a not in body_attrs]
        if missing:
            raise NonFullQueryError(f"head attribute(s) {', '.join(missing)} do not occur in the body")
        projected = sorted(body_attrs - set(head_attrs))
        if projected:
            raise NonFullQueryError(f"body attribute(s) {', '.join(projected)} are projected out; query is not full")
        return QuerySpec(tuple(RelationSchema(n, tuple(a)) for n, a, _ in body), name=head_name)


def parse_query(text: str) -> QuerySpec:
    """Parse ``Q(A,B,C) :- R1(A,B), R2(B,C)`` into a :class:`QuerySpec`."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Instances


def make_instance(spec: QuerySpec, rows: Mapping[str, Iterable[Sequence[str]]]) -> DatabaseInstance:
    """Build an instance from rows already in schema attribute order."""
    unknown = set(rows) - set(spec.relation_names)
    if unknown:
        raise InstanceError(f"unknown relation(s): {', '.join(sorted(unknown))}")
    out: dict[str, frozenset[tuple[str, ...]]] = {}
    for rel in spec.relations:
        if rel.name not in rows:
            raise InstanceError(f"missing data for relation {rel.name}")
        ts = set()
        for row in rows[rel.name]:
            t = tuple(row)
            if len(t) != len(rel.attrs):
                raise InstanceError(f"{rel.name}: row {list(t)} has arity {len(t)}, expected {len(rel.attrs)}")
            for v in t:
                if not isinstance(v, str):
                    raise InstanceError(f"{rel.name}: value {v!r} is not a string")
            ts.add(t)
        out[rel.name] = frozenset(ts)
    return DatabaseInstance(out)


def _read_csv_rows(rel: RelationSchema, text: str, reserve_constant: bool) -> list[tuple[str, ...]]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise InstanceError(f"{rel.name}: missing header row") from None
    if sorted(header) != sorted(rel.attrs) or len(set(header)) != len(header):
        raise InstanceError(f"{rel.name}: header {header} does not match attributes {list(rel.attrs)}")
    order = [header.index(a) for a in rel.attrs]
    rows = []
    for lineno, raw in enumerate(reader, start=2):
        if not raw:
            continue
        if len(raw) != len(header):
            raise InstanceError(f"{rel.name}: line {lineno} has {len(raw)} fields, expected {len(header)}")
        t = tuple(raw[j] for j in order)
        if reserve_constant and CONSTANT in t:
            raise InstanceError(f"{rel.name}: line {lineno} uses the reserved constant {CONSTANT!r}")
        rows.append(t)
    return rows


def parse_instance(
    spec: QuerySpec,
    sources: Mapping[str, str],
    *,
    reserve_constant: bool = False,
) -> DatabaseInstance:
    """Parse one CSV text per relation (first row is the header, in any order).

    Duplicate rows collapse (set semantics). With ``reserve_constant`` the value
    ``"*"`` is rejected, keeping user data apart from generated constants.
    """
    unknown = set(sources) - set(spec.relation_names)
    if unknown:
        raise InstanceError(f"unknown relation(s): {', '.join(sorted(unknown))}")
    rows = {}
    for rel in spec.relations:
        if rel.name not in sources:
            raise InstanceError(f"missing data for relation {rel.name}")
        rows[rel.name] = _read_csv_rows(rel, sources[rel.name], reserve_constant)
    return make_instance(spec, rows)


def parse_instance_json(spec: QuerySpec, text: str, *, reserve_constant: bool = False) -> DatabaseInstance:
    """Parse ``{relation: [[v, ...], ...]}`` with columns in schema order."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise InstanceError("JSON data must be an object keyed by relation name")
    for name, rows in data.items():
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise InstanceError(f"{name}: expected a list of rows")
        if reserve_constant and any(CONSTANT in r for r in rows):
            raise InstanceError(f"{name}: uses the reserved constant {CONSTANT!r}")
    return make_instance(spec, data)


def load_instance(spec: QuerySpec, path: str | Path, *, reserve_constant: bool = False) -> DatabaseInstance:
    """Load a directory of ``<relation>.csv`` files or a single JSON file."""
    path = Path(path)
    if path.is_dir():
        sources = {}
        for f in sorted(path.glob("*.csv")):
            sources[f.stem] = f.read_text(encoding="utf-8")
        return parse_instance(spec, sources, reserve_constant=reserve_constant)
    return parse_instance_json(spec, path.read_text(encoding="utf-8"), reserve_constant=reserve_constant)


def instance_to_csv(spec: QuerySpec, db: DatabaseInstance) -> dict[str, str]:
    out = {}
    for rel in spec.relations:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(rel.attrs)
        for t in sorted(db[rel.name]):
            w.writerow(t)
        out[rel.name] = buf.getvalue()
    return out


def instance_to_json(db: DatabaseInstance) -> str:
    return json.dumps({name: [list(t) for t in sorted(ts)] for name, ts in db.relations.items()}, sort_keys=True)


# ---------------------------------------------------------------------------
# Join evaluation


def natural_join(
    schemas: Sequence[tuple[str, Sequence[str]]],
    rows: Mapping[str, Iterable[tuple[tuple, Any]]],
) -> list[tuple[dict[str, Any], list[Any]]]:
    """Hash-join rows carrying payloads; returns (assignment, payloads) pairs.

    ``rows[name]`` yields ``(values, payload)`` with values aligned to the
    schema's attributes. Relations are joined in the given order.
    """
    partial: list[tuple[dict[str, Any], list[Any]]] = [({}, [])]
    bound: set[str] = set()
    for name, attrs in schemas:
        shared = [a for a in attrs if a in bound]
        pos = {a: i for i, a in enumerate(attrs)}
        index: dict[tuple, list[tuple[tuple, Any]]] = {}
        for values, payload in rows[name]:
            index.setdefault(tuple(values[pos[a]] for a in shared), []).append((values, payload))
        nxt = []
        for assignment, payloads in partial:
            key = tuple(assignment[a] for a in shared)
            for values, payload in index.get(key, ()):
                extended = dict(assignment)
                for a, i in pos.items():
                    extended[a] = values[i]
                nxt.append((extended, payloads + [payload]))
        partial = nxt
        bound.update(attrs)
        if not partial:
            break
    return partial


def evaluate_join(spec: QuerySpec, db: DatabaseInstance) -> list[OutputTuple]:
    """Exact natural-join result with one provenance witness per relation."""
    schemas = [(r.name, r.attrs) for r in spec.relations]
    rows = {r.name: [(t, (r.name, t)) for t in db[r.name]] for r in spec.relations}
    out = []
    for assignment, witnesses in natural_join(schemas, rows):
        out.append(OutputTuple(tuple(sorted(assignment.items())), tuple(witnesses)))
    out.sort(key=lambda o: o.values)
    return out


def output_count(spec: QuerySpec, db: DatabaseInstance) -> int:
    schemas = [(r.name, r.attrs) for r in spec.relations]
    rows = {r.name: [(t, None) for t in db[r.name]] for r in spec.relations}
    return len(natural_join(schemas, rows))


def apply_deletion(db: DatabaseInstance, deleted: DeletionSolution | Iterable[TupleRef]) -> DatabaseInstance:
    """Return a new instance with the given tuples removed."""
    refs = deleted.deleted if isinstance(deleted, DeletionSolution) else frozenset(deleted)
    by_rel: dict[str, set[tuple[str, ...]]] = {}
    for name, values in refs:
        if (name, values) not in db:
            raise InstanceError(f"cannot delete {name}{values}: tuple not in instance")
        by_rel.setdefault(name, set()).add(values)
    return DatabaseInstance({name: ts - by_rel.get(name, set()) for name, ts in db.relations.items()})


def removed_count(spec: QuerySpec, db: DatabaseInstance, deleted: Iterable[TupleRef]) -> int:
    """|Q(db)| - |Q(db minus deleted)|, by re-evaluating the join."""
    return output_count(spec, db) - output_count(spec, apply_deletion(db, deleted))


def provenance_index(outputs: Sequence[OutputTuple]) -> dict[TupleRef, list[int]]:
    """Map each input tuple to the indices of the outputs it witnesses."""
    index: dict[TupleRef, list[int]] = {}
    for i, out in enumerate(outputs):
        for ref in out.provenance:
            index.setdefault(ref, []).append(i)
    return index
