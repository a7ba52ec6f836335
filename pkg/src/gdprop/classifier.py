"""Tractability classification of full CQs without self-joins.

:func:`find_step` tests the seven simplification rules in their fixed order
(Empty, SingleRelation, TwoRelations, Subset, CommonAttribute, CoOccurrence,
Decomposition) and :func:`build_recursion_tree` records every rule applied,
recursively, until each branch ends in a ``true`` or ``false`` leaf. A query is
poly-time solvable for every k and instance iff all leaves are ``true``.

The tree depends on the schema only; no instance is ever inspected here.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

from .relational import QuerySpec, RelationSchema


class StepKind(enum.Enum):
    EMPTY = "Empty"
    SINGLE_RELATION = "SingleRelation"
    TWO_RELATIONS = "TwoRelations"
    SUBSET = "Subset"
    COMMON_ATTRIBUTE = "CommonAttribute"
    CO_OCCURRENCE = "CoOccurrence"
    DECOMPOSITION = "Decomposition"

    @property
    def terminal(self) -> bool:
        """The first four rules close a branch with a ``true`` leaf."""
        return self in _TERMINAL


_TERMINAL = frozenset({StepKind.EMPTY, StepKind.SINGLE_RELATION, StepKind.TWO_RELATIONS, StepKind.SUBSET})


@dataclass(frozen=True)
class SimplificationStep:
    kind: StepKind
    relation: Optional[str] = None  # Subset
    attribute: Optional[str] = None  # CommonAttribute
    pair: Optional[tuple[str, str]] = None  # CoOccurrence
    fresh: Optional[str] = None  # CoOccurrence
    components: tuple[QuerySpec, ...] = ()  # Decomposition

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind.value}
        if self.relation is not None:
            d["relation"] = self.relation
        if self.attribute is not None:
            d["attribute"] = self.attribute
        if self.pair is not None:
            d["pair"] = list(self.pair)
            d["fresh"] = self.fresh
        if self.components:
            d["components"] = [list(c.relation_names) for c in self.components]
        return d


@dataclass
class RecursionTree:
    """A node of the recursion tree.

    Inner nodes carry a query and the step applied to it; leaves carry only a
    verdict. Dead-end queries have ``step=None`` and a single ``false`` leaf.
    """

    query: Optional[QuerySpec]
    step: Optional[SimplificationStep] = None
    children: list["RecursionTree"] = field(default_factory=list)
    verdict: Optional[bool] = None
    node_id: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.query is None

    @property
    def is_ptime(self) -> bool:
        return all(leaf.verdict for leaf in self.leaves())

    def walk(self) -> Iterator["RecursionTree"]:
        yield self
        for child in self.children:
            yield from child.walk()

    def leaves(self) -> list["RecursionTree"]:
        return [n for n in self.walk() if n.is_leaf]

    def dead_ends(self) -> list[QuerySpec]:
        """Queries whose only child is a ``false`` leaf."""
        return [n.query for n in self.walk() if not n.is_leaf and n.step is None]

    def find(self, node_id: int) -> "RecursionTree":
        for n in self.walk():
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)

    def path_to(self, target: "RecursionTree") -> list["RecursionTree"]:
        """Nodes from this root down to ``target`` inclusive."""
        if self is target:
            return [self]
        for child in self.children:
            path = child.path_to(target)
            if path:
                return [self] + path
        return []

    def to_dict(self) -> dict[str, Any]:
        if self.is_leaf:
            return {"verdict": self.verdict}
        return {
            "query": self.query.to_text(),
            "step": self.step.to_dict() if self.step is not None else None,
            "children": [c.to_dict() for c in self.children],
        }

    def shape(self) -> Any:
        """Compact structural signature: step names and leaf verdicts."""
        if self.is_leaf:
            return self.verdict
        label = self.step.kind.value if self.step is not None else "DeadEnd"
        return (label, [c.shape() for c in self.children])


# ---------------------------------------------------------------------------
# Query rewrites


def remove_attribute(q: QuerySpec, attr: str) -> QuerySpec:
    """Q_{-A}: drop ``attr`` from every relation."""
    return QuerySpec(
        tuple(RelationSchema(r.name, tuple(a for a in r.attrs if a != attr)) for r in q.relations),
        name=q.name,
    )


def fresh_attribute(q: QuerySpec, a: str, b: str) -> str:
    base = f"__merge_{a}_{b}"
    taken = q.attributes
    if base not in taken:
        return base
    for i in itertools.count(1):
        cand = f"{base}_{i}"
        if cand not in taken:
            return cand
    raise AssertionError("unreachable")


def merge_attributes(q: QuerySpec, a: str, b: str, fresh: str) -> QuerySpec:
    """Q_{AB->C}: ``fresh`` takes the position of ``a``; ``b`` is dropped."""
    rels = []
    for r in q.relations:
        attrs = []
        for x in r.attrs:
            if x == a:
                attrs.append(fresh)
            elif x != b:
                attrs.append(x)
        rels.append(RelationSchema(r.name, tuple(attrs)))
    return QuerySpec(tuple(rels), name=q.name)


def decompose_components(q: QuerySpec) -> list[QuerySpec]:
    """Maximal attribute-connected components, ordered by smallest relation name."""
    parent = {r.name: r.name for r in q.relations}

    def root(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    owner: dict[str, str] = {}
    for r in q.relations:
        for a in r.attrs:
            if a in owner:
                ra, rb = root(owner[a]), root(r.name)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
            else:
                owner[a] = r.name
    groups: dict[str, list[str]] = {}
    for r in q.relations:
        groups.setdefault(root(r.name), []).append(r.name)
    comps = [q.restrict(names) for names in groups.values()]
    comps.sort(key=lambda c: min(c.relation_names))
    return comps


# ---------------------------------------------------------------------------
# Algorithm


def _subset_relation(q: QuerySpec) -> Optional[str]:
    for r in sorted(q.relations, key=lambda r: r.name):
        mine = set(r.attrs)
        if all(mine <= set(o.attrs) for o in q.relations if o.name != r.name):
            return r.name
    return None


def _common_attribute(q: QuerySpec) -> Optional[str]:
    common = set(q.relations[0].attrs)
    for r in q.relations[1:]:
        common &= set(r.attrs)
    return min(common) if common else None


def _co_occurring_pair(q: QuerySpec) -> Optional[tuple[str, str]]:
    attrs = sorted(q.attributes)
    rels = {a: q.rels(a) for a in attrs}
    for i, a in enumerate(attrs):
        for b in attrs[i + 1:]:
            if rels[a] == rels[b]:
                return a, b
    return None


def find_step(q: QuerySpec) -> Optional[SimplificationStep]:
    """First applicable simplification step, or None for a dead end.

    Ties go to the lexicographically smallest relation or attribute name.
    """
    if not q.relations or not q.attributes:
        return SimplificationStep(StepKind.EMPTY)
    if len(q.relations) == 1:
        return SimplificationStep(StepKind.SINGLE_RELATION)
    if len(q.relations) == 2:
        return SimplificationStep(StepKind.TWO_RELATIONS)
    sub = _subset_relation(q)
    if sub is not None:
        return SimplificationStep(StepKind.SUBSET, relation=sub)
    common = _common_attribute(q)
    if common is not None:
        return SimplificationStep(StepKind.COMMON_ATTRIBUTE, attribute=common)
    pair = _co_occurring_pair(q)
    if pair is not None:
        return SimplificationStep(StepKind.CO_OCCURRENCE, pair=pair, fresh=fresh_attribute(q, *pair))
    comps = decompose_components(q)
    if len(comps) >= 2:
        return SimplificationStep(StepKind.DECOMPOSITION, components=tuple(comps))
    return None


def child_queries(q: QuerySpec, step: SimplificationStep) -> list[QuerySpec]:
    if step.kind.terminal:
        return []
    if step.kind is StepKind.COMMON_ATTRIBUTE:
        return [remove_attribute(q, step.attribute)]
    if step.kind is StepKind.CO_OCCURRENCE:
        return [merge_attributes(q, step.pair[0], step.pair[1], step.fresh)]
    return list(step.components)


def dead_end_violations(q: QuerySpec) -> list[str]:
    """Which of the four dead-end structural properties fail (empty if none)."""
    problems = []
    if len(q.relations) < 3 or any(not r.attrs for r in q.relations):
        problems.append("needs at least three relations, each with at least one attribute")
    if q.relations and _common_attribute(q) is not None:
        problems.append("some attribute occurs in every relation")
    if _co_occurring_pair(q) is not None:
        problems.append("two attributes occur in exactly the same relations")
    if len(decompose_components(q)) != 1:
        problems.append("relations do not form a single connected component")
    return problems


def assert_dead_end_properties(q: QuerySpec) -> bool:
    if find_step(q) is not None:
        raise ValueError(f"not a dead end: {find_step(q).kind.value} applies to {q}")
    problems = dead_end_violations(q)
    if problems:
        raise AssertionError(f"dead end {q} violates: {'; '.join(problems)}")
    return True


def build_recursion_tree(q: QuerySpec) -> RecursionTree:
    counter = itertools.count()

    def build(query: QuerySpec) -> RecursionTree:
        node = RecursionTree(query=query, node_id=next(counter))
        step = find_step(query)
        node.step = step
        if step is None:
            assert_dead_end_properties(query)
            node.children = [RecursionTree(None, verdict=False, node_id=next(counter))]
        elif step.kind.terminal:
            node.children = [RecursionTree(None, verdict=True, node_id=next(counter))]
        else:
            if step.kind is StepKind.CO_OCCURRENCE:
                assert step.fresh not in query.attributes
            node.children = [build(c) for c in child_queries(query, step)]
        return node

    return build(q)


def is_ptime(q: QuerySpec) -> bool:
    return build_recursion_tree(q).is_ptime
