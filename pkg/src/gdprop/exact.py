"""Optimal deletion sets for queries the classifier accepts.

The solver walks the recursion tree bottom-up. Every node returns a
:class:`Profile`: for each target ``s = 0 .. min(k, |Q(D)|)`` the minimum number
of input tuples whose deletion removes at least ``s`` outputs, with one optimal
deletion set per target. Parents combine child profiles instead of calling the
solver again for every target, and profiles are memoized per
(node, partition context), so the whole solve is polynomial in the data.

Tuples inside the solver carry their original identity (relation, values), so
projections and attribute merges never need to be undone.
"""
from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, Optional

from . import kernels
from .classifier import (
    RecursionTree,
    SimplificationStep,
    StepKind,
    build_recursion_tree,
    decompose_components,
    find_step,
    fresh_attribute,
    merge_attributes,
    remove_attribute,
)
from .relational import DatabaseInstance, DeletionSolution, QuerySpec, TupleRef, natural_join, removed_count

Row = tuple[tuple, TupleRef]
Rows = dict[str, list[Row]]


class HardQueryError(ValueError):
    """The query is NP-hard for some instance; use the approximation instead."""


class InfeasibleTargetError(ValueError):
    """The target exceeds the number of removable outputs."""


@dataclass
class Profile:
    outputs: int
    costs: list[int]
    solutions: list[frozenset[TupleRef]]

    @property
    def cap(self) -> int:
        return len(self.costs) - 1


@dataclass
class SubproblemTable:
    """Profiles keyed by (tree node id, partition context)."""

    entries: dict[tuple[int, tuple], Profile] = field(default_factory=dict)
    hits: int = 0
    misses: int = 0

    def lookup(self, key: tuple[int, tuple]) -> Optional[Profile]:
        prof = self.entries.get(key)
        if prof is None:
            self.misses += 1
        else:
            self.hits += 1
        return prof

    def store(self, key: tuple[int, tuple], prof: Profile) -> None:
        self.entries[key] = prof

    def cells(self) -> int:
        return sum(len(p.costs) for p in self.entries.values())


def rows_from_instance(q: QuerySpec, db: DatabaseInstance) -> Rows:
    return {r.name: [(t, (r.name, t)) for t in sorted(db[r.name])] for r in q.relations}


def _join(q: QuerySpec, rows: Rows) -> list[tuple[dict[str, Any], list[TupleRef]]]:
    return natural_join([(r.name, r.attrs) for r in q.relations], rows)


def _prefix_profile(outputs: int, items: Sequence[tuple[int, TupleRef]], cap: int) -> Profile:
    """Profile of a greedy order: delete ``items`` front to back, each removing ``gain`` outputs."""
    top = min(cap, outputs)
    costs = [0]
    sols = [frozenset()]
    chosen: list[TupleRef] = []
    reached = 0
    for gain, ref in items:
        if reached >= top:
            break
        chosen.append(ref)
        reached += gain
        frozen = frozenset(chosen)
        while len(costs) - 1 < min(reached, top):
            costs.append(len(chosen))
            sols.append(frozen)
    assert len(costs) == top + 1, "greedy order cannot reach every target"
    return Profile(outputs, costs, sols)


# ---------------------------------------------------------------------------
# Terminal procedures


def _empty_profile(q: QuerySpec, rows: Rows, cap: int) -> Profile:
    # Only reachable with zero-attribute relations: the join has at most one row.
    present = [rows[r.name] for r in q.relations]
    outputs = 1 if present and all(present) else 0
    items = [(1, min(ref for rs in present for _, ref in rs))] if outputs else []
    return _prefix_profile(outputs, items, cap)


def _single_relation_profile(q: QuerySpec, rows: Rows, cap: int) -> Profile:
    rs = rows[q.relations[0].name]
    return _prefix_profile(len(rs), [(1, ref) for _, ref in sorted(rs, key=lambda r: r[1])], cap)


def _two_relations_profile(q: QuerySpec, rows: Rows, cap: int) -> Profile:
    r1, r2 = q.relations
    rows1 = sorted(rows[r1.name], key=lambda r: r[1])
    rows2 = sorted(rows[r2.name], key=lambda r: r[1])
    shared = [a for a in r1.attrs if a in r2.attrs]
    if not shared:
        n1, n2 = len(rows1), len(rows2)
        small, gain = (rows1, n2) if n1 <= n2 else (rows2, n1)
        return _prefix_profile(n1 * n2, [(gain, ref) for _, ref in small], cap)

    pos1 = [r1.attrs.index(a) for a in shared]
    pos2 = [r2.attrs.index(a) for a in shared]
    g1: dict[tuple, list[TupleRef]] = {}
    g2: dict[tuple, list[TupleRef]] = {}
    for values, ref in rows1:
        g1.setdefault(tuple(values[i] for i in pos1), []).append(ref)
    for values, ref in rows2:
        g2.setdefault(tuple(values[i] for i in pos2), []).append(ref)
    groups = []
    outputs = 0
    for key, left in g1.items():
        right = g2.get(key)
        if not right:
            continue
        m, r = len(left), len(right)
        outputs += m * r
        better = left if m <= r else right
        groups.append((max(m, r), better))
    groups.sort(key=lambda g: (-g[0], g[1][0]))
    items = [(profit, ref) for profit, better in groups for ref in better]
    return _prefix_profile(outputs, items, cap)


def _one_subset_profile(q: QuerySpec, rows: Rows, cap: int, r_sub: str) -> Profile:
    idx = q.relation_names.index(r_sub)
    contrib: dict[TupleRef, int] = {}
    results = _join(q, rows)
    for _, witnesses in results:
        w = witnesses[idx]
        contrib[w] = contrib.get(w, 0) + 1
    items = sorted(((contrib.get(ref, 0), ref) for _, ref in rows[r_sub]), key=lambda it: (-it[0], it[1]))
    return _prefix_profile(len(results), items, cap)


# ---------------------------------------------------------------------------
# Instance rewrites mirroring the query rewrites


def _partition(q: QuerySpec, rows: Rows, attr: str, child: QuerySpec) -> dict[Any, Rows]:
    parts: dict[Any, Rows] = {}
    for rel, crel in zip(q.relations, child.relations):
        pos = {a: i for i, a in enumerate(rel.attrs)}
        at = pos[attr]
        keep = [pos[a] for a in crel.attrs]
        for values, ref in rows[rel.name]:
            part = parts.setdefault(values[at], {r.name: [] for r in q.relations})
            part[rel.name].append((tuple(values[i] for i in keep), ref))
    # partitions missing a relation have no outputs and cannot help
    return {v: p for v, p in parts.items() if all(p.values())}


def _merge_rows(q: QuerySpec, rows: Rows, a: str, b: str, fresh: str, child: QuerySpec) -> Rows:
    out: Rows = {}
    for rel, crel in zip(q.relations, child.relations):
        if a not in rel.attrs:
            out[rel.name] = rows[rel.name]
            continue
        pos = {x: i for i, x in enumerate(rel.attrs)}
        new = []
        for values, ref in rows[rel.name]:
            new.append((tuple((values[pos[a]], values[pos[b]]) if x == fresh else values[pos[x]] for x in crel.attrs), ref))
        out[rel.name] = new
    return out


# ---------------------------------------------------------------------------
# Bottom-up engine


def _combine_partitions(profiles: Sequence[Profile], cap: int) -> Profile:
    costs: list[int] = [0]
    sols: list[frozenset[TupleRef]] = [frozenset()]
    total = 0
    for prof in profiles:
        new_costs, choice = kernels.knapsack_merge(costs, prof.costs, cap)
        sols = [sols[s - m] | prof.solutions[m] for s, m in enumerate(choice)]
        costs = new_costs
        total += prof.outputs
    return Profile(total, costs, sols)


def _combine_components(profiles: Sequence[Profile], cap: int) -> Profile:
    acc = profiles[0]
    for nxt in profiles[1:]:
        costs, k1s, k2s = kernels.cross_fold(acc.costs, acc.outputs, nxt.costs, nxt.outputs, cap)
        sols = [acc.solutions[a] | nxt.solutions[b] for a, b in zip(k1s, k2s)]
        acc = Profile(acc.outputs * nxt.outputs, costs, sols)
    return acc


def _solve(node: RecursionTree, rows: Rows, cap: int, table: SubproblemTable, context: tuple) -> Profile:
    key = (node.node_id, context)
    cached = table.lookup(key)
    if cached is not None:
        return cached
    q, step = node.query, node.step
    if step is None:
        raise HardQueryError(f"no simplification applies to {q}; the query is NP-hard")
    kind = step.kind
    if kind is StepKind.EMPTY:
        prof = _empty_profile(q, rows, cap)
    elif kind is StepKind.SINGLE_RELATION:
        prof = _single_relation_profile(q, rows, cap)
    elif kind is StepKind.TWO_RELATIONS:
        prof = _two_relations_profile(q, rows, cap)
    elif kind is StepKind.SUBSET:
        prof = _one_subset_profile(q, rows, cap, step.relation)
    elif kind is StepKind.COMMON_ATTRIBUTE:
        child = node.children[0]
        parts = _partition(q, rows, step.attribute, child.query)
        profiles = [
            _solve(child, parts[v], cap, table, context + ((step.attribute, v),))
            for v in sorted(parts)
        ]
        prof = _combine_partitions(profiles, cap)
    elif kind is StepKind.CO_OCCURRENCE:
        child = node.children[0]
        a, b = step.pair
        prof = _solve(child, _merge_rows(q, rows, a, b, step.fresh, child.query), cap, table, context)
    else:
        profiles = [
            _solve(c, {n: rows[n] for n in c.query.relation_names}, cap, table, context)
            for c in node.children
        ]
        prof = _combine_components(profiles, cap)
    table.store(key, prof)
    return prof


def _checked_tree(q: QuerySpec) -> RecursionTree:
    tree = build_recursion_tree(q)
    if not tree.is_ptime:
        hard = "; ".join(str(d) for d in tree.dead_ends())
        raise HardQueryError(f"query classified NP-hard; use approx (dead ends: {hard})")
    return tree


def solve_profile(tree: RecursionTree, k: int, db: DatabaseInstance, table: Optional[SubproblemTable] = None) -> Profile:
    """Root profile for all targets ``0 .. min(k, |Q(db)|)``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if not tree.is_ptime:
        raise HardQueryError(f"query classified NP-hard: {tree.query}")
    table = SubproblemTable() if table is None else table
    return _solve(tree, rows_from_instance(tree.query, db), k, table, ())


def solve_bottom_up(
    tree: RecursionTree,
    k: int,
    db: DatabaseInstance,
    table: Optional[SubproblemTable] = None,
    *,
    strict: bool = False,
) -> DeletionSolution:
    prof = solve_profile(tree, k, db, table)
    clamped = k > prof.outputs
    if clamped and strict:
        raise InfeasibleTargetError(f"k={k} exceeds |Q(D)|={prof.outputs}")
    target = min(k, prof.outputs)
    deleted = prof.solutions[target]
    assert len(deleted) == prof.costs[target]
    return DeletionSolution(deleted, removed_count(tree.query, db, deleted), clamped)


def compute_opt(
    q: QuerySpec,
    k: int,
    db: DatabaseInstance,
    *,
    strict: bool = False,
    table: Optional[SubproblemTable] = None,
) -> DeletionSolution:
    """Minimum-cardinality deletion removing at least ``k`` outputs.

    A ``k`` above ``|Q(db)|`` clamps to removing every output and sets
    ``clamped``; with ``strict=True`` it raises :class:`InfeasibleTargetError`.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    return solve_bottom_up(_checked_tree(q), k, db, table, strict=strict)


def cost_profile(q: QuerySpec, db: DatabaseInstance, k: Optional[int] = None) -> list[int]:
    """Optimal costs for every target ``0 .. min(k, |Q(db)|)`` (all targets if k is None)."""
    tree = _checked_tree(q)
    if k is None:
        k = max(1, sum(len(ts) for ts in db.relations.values()) ** max(1, len(q.relations)))
    return solve_profile(tree, k, db).costs


# ---------------------------------------------------------------------------
# Individual procedures


def _renumber(tree: RecursionTree) -> RecursionTree:
    for i, node in enumerate(tree.walk()):
        node.node_id = i
    return tree


def _forced(q: QuerySpec, step: SimplificationStep, children: Sequence[QuerySpec]) -> RecursionTree:
    node = RecursionTree(query=q, step=step)
    if step.kind.terminal:
        node.children = [RecursionTree(None, verdict=True)]
    else:
        for c in children:
            sub = build_recursion_tree(c)
            if not sub.is_ptime:
                raise HardQueryError(f"sub-query {c} is NP-hard")
            node.children.append(sub)
    return _renumber(node)


def _run_forced(tree: RecursionTree, k: int, db: DatabaseInstance) -> DeletionSolution:
    if k < 1:
        raise ValueError("k must be at least 1")
    prof = _solve(tree, rows_from_instance(tree.query, db), k, SubproblemTable(), ())
    if k > prof.outputs:
        raise InfeasibleTargetError(f"k={k} exceeds the {prof.outputs} removable outputs")
    deleted = prof.solutions[k]
    return DeletionSolution(deleted, removed_count(tree.query, db, deleted))


def single_relation(q: QuerySpec, k: int, db: DatabaseInstance) -> DeletionSolution:
    """The ``k`` lexicographically smallest tuples of the only relation."""
    if len(q.relations) != 1:
        raise ValueError("single_relation needs exactly one relation")
    return _run_forced(_forced(q, SimplificationStep(StepKind.SINGLE_RELATION), []), k, db)


def two_relations(q: QuerySpec, k: int, db: DatabaseInstance) -> DeletionSolution:
    if len(q.relations) != 2:
        raise ValueError("two_relations needs exactly two relations")
    return _run_forced(_forced(q, SimplificationStep(StepKind.TWO_RELATIONS), []), k, db)


def one_subset(q: QuerySpec, k: int, db: DatabaseInstance, r_sub: str) -> DeletionSolution:
    mine = set(q.relation(r_sub).attrs)
    if not all(mine <= set(r.attrs) for r in q.relations):
        raise ValueError(f"attributes of {r_sub} are not contained in every other relation")
    return _run_forced(_forced(q, SimplificationStep(StepKind.SUBSET, relation=r_sub), []), k, db)


def common_attr_partition(q: QuerySpec, k: int, db: DatabaseInstance, a: str) -> DeletionSolution:
    if any(a not in r.attrs for r in q.relations):
        raise ValueError(f"attribute {a} is not common to every relation")
    step = SimplificationStep(StepKind.COMMON_ATTRIBUTE, attribute=a)
    return _run_forced(_forced(q, step, [remove_attribute(q, a)]), k, db)


def co_occurrence(q: QuerySpec, k: int, db: DatabaseInstance, a: str, b: str) -> DeletionSolution:
    if q.rels(a) != q.rels(b):
        raise ValueError(f"attributes {a} and {b} do not occur in the same relations")
    fresh = fresh_attribute(q, a, b)
    step = SimplificationStep(StepKind.CO_OCCURRENCE, pair=(a, b), fresh=fresh)
    return _run_forced(_forced(q, step, [merge_attributes(q, a, b, fresh)]), k, db)


def decomp_cross_product(
    q: QuerySpec,
    k: int,
    db: DatabaseInstance,
    components: Optional[Sequence[QuerySpec]] = None,
) -> DeletionSolution:
    comps = list(components) if components is not None else decompose_components(q)
    if len(comps) < 2:
        raise ValueError("need at least two components")
    step = SimplificationStep(StepKind.DECOMPOSITION, components=tuple(comps))
    return _run_forced(_forced(q, step, comps), k, db)


def group_knapsack(child_costs: Sequence[Sequence[int]], cap: int) -> list[list[int]]:
    """The full partition DP table: row ``i`` covers partitions ``1..i``.

    Row 0 is ``[0]`` (no partitions; any positive target is infeasible).
    ``child_costs[i][m]`` is the cheapest way to remove ``m`` outputs inside
    partition ``i`` alone.
    """
    rows = [[0]]
    for child in child_costs:
        new, _ = kernels.knapsack_merge(rows[-1], list(child), cap)
        rows.append(new)
    return rows


# ---------------------------------------------------------------------------
# Literal top-down recursion, kept as an independent cross-check.


def _outputs(q: QuerySpec, rows: Rows) -> int:
    return len(_join(q, rows))


def _topdown(q: QuerySpec, rows: Rows, k: int) -> tuple[int, frozenset[TupleRef]]:
    if k <= 0:
        return 0, frozenset()
    step = find_step(q)
    if step is None:
        raise HardQueryError(f"no simplification applies to {q}")
    if step.kind.terminal:
        leaf = {
            StepKind.EMPTY: lambda: _empty_profile(q, rows, k),
            StepKind.SINGLE_RELATION: lambda: _single_relation_profile(q, rows, k),
            StepKind.TWO_RELATIONS: lambda: _two_relations_profile(q, rows, k),
            StepKind.SUBSET: lambda: _one_subset_profile(q, rows, k, step.relation),
        }[step.kind]()
        return leaf.costs[k], leaf.solutions[k]
    if step.kind is StepKind.CO_OCCURRENCE:
        a, b = step.pair
        child = merge_attributes(q, a, b, step.fresh)
        return _topdown(child, _merge_rows(q, rows, a, b, step.fresh, child), k)
    if step.kind is StepKind.COMMON_ATTRIBUTE:
        child = remove_attribute(q, step.attribute)
        parts = _partition(q, rows, step.attribute, child)
        inf = None
        prev: list[Optional[tuple[int, frozenset]]] = [(0, frozenset())] + [inf] * k
        for v in sorted(parts):
            part = parts[v]
            m_out = _outputs(child, part)
            cur = list(prev)
            for s in range(1, k + 1):
                for m in range(1, min(s, m_out) + 1):
                    if prev[s - m] is None:
                        continue
                    c, sol = _topdown(child, part, m)
                    cand = (prev[s - m][0] + c, prev[s - m][1] | sol)
                    if cur[s] is None or cand[0] < cur[s][0]:
                        cur[s] = cand
            prev = cur
        if prev[k] is None:
            raise InfeasibleTargetError(f"k={k} is not reachable")
        return prev[k]
    comps = list(step.components)
    comp_rows = [{n: rows[n] for n in c.relation_names} for c in comps]
    sizes = [_outputs(c, r) for c, r in zip(comps, comp_rows)]
    memo: dict[tuple[int, int], tuple[int, frozenset]] = {}

    def prefix(i: int, s: int) -> Optional[tuple[int, frozenset]]:
        if s <= 0:
            return 0, frozenset()
        if i == 0:
            return _topdown(comps[0], comp_rows[0], s) if s <= sizes[0] else None
        if (i, s) in memo:
            return memo[(i, s)]
        m1 = 1
        for size in sizes[:i]:
            m1 *= size
        m2 = sizes[i]
        best = None
        for k1, k2 in itertools.product(range(min(s, m1) + 1), range(min(s, m2) + 1)):
            if k1 * m2 + k2 * m1 - k1 * k2 < s:
                continue
            left = prefix(i - 1, k1)
            if left is None:
                continue
            c2, sol2 = _topdown(comps[i], comp_rows[i], k2)
            cand = (left[0] + c2, left[1] | sol2)
            if best is None or cand[0] < best[0]:
                best = cand
        memo[(i, s)] = best
        return best

    res = prefix(len(comps) - 1, k)
    if res is None:
        raise InfeasibleTargetError(f"k={k} is not reachable")
    return res


def compute_opt_topdown(q: QuerySpec, k: int, db: DatabaseInstance) -> DeletionSolution:
    """Direct recursion over the procedures, one target at a time (small inputs only)."""
    _checked_tree(q)
    rows = rows_from_instance(q, db)
    total = _outputs(q, rows)
    target = min(k, total)
    cost, deleted = _topdown(q, rows, target)
    assert cost == len(deleted)
    return DeletionSolution(deleted, removed_count(q, db, deleted), k > total)
