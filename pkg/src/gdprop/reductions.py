"""Brute-force oracles and partial-vertex-cover reductions.

The oracles enumerate subsets by increasing size, lexicographically within a
size, so the first feasible subset is both optimal and canonical. The
generators turn a partial vertex cover instance on a bipartite graph into a
deletion instance whose optimum matches the graph optimum; they serve as test
fixtures for the hardness side of the classifier.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from . import kernels
from .classifier import RecursionTree, StepKind, build_recursion_tree, decompose_components, find_step
from .relational import (
    CONSTANT,
    DatabaseInstance,
    DeletionSolution,
    QuerySpec,
    RelationSchema,
    TupleRef,
    evaluate_join,
    make_instance,
    output_count,
    removed_count,
)


class OracleBoundError(ValueError):
    """The instance is too large for exhaustive search."""


class GeneratorPreconditionError(ValueError):
    """The query does not have the shape a construction needs."""


@dataclass(frozen=True)
class BipartiteGraph:
    U: tuple[str, ...]
    V: tuple[str, ...]
    E: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "U", tuple(sorted(set(self.U))))
        object.__setattr__(self, "V", tuple(sorted(set(self.V))))
        object.__setattr__(self, "E", tuple(sorted(set(self.E))))
        if set(self.U) & set(self.V):
            raise ValueError(f"vertex sets overlap: {sorted(set(self.U) & set(self.V))}")
        if CONSTANT in self.U or CONSTANT in self.V:
            raise ValueError(f"{CONSTANT!r} is reserved and cannot name a vertex")
        us, vs = set(self.U), set(self.V)
        for u, v in self.E:
            if u not in us or v not in vs:
                raise ValueError(f"edge ({u}, {v}) must go from U to V")

    @property
    def vertices(self) -> tuple[str, ...]:
        return self.U + self.V


@dataclass(frozen=True)
class PVCBInstance:
    graph: BipartiteGraph
    k: int

    def __post_init__(self) -> None:
        if not 1 <= self.k <= len(self.graph.E):
            raise ValueError(f"k must lie in 1..{len(self.graph.E)}, got {self.k}")


# ---------------------------------------------------------------------------
# Graph text format: "U: u1 u2 ...", "V: v1 v2 ...", then one "u v" per line.


def parse_graph(text: str) -> BipartiteGraph:
    U: Optional[list[str]] = None
    V: Optional[list[str]] = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        if sep and head.strip() in ("U", "V"):
            names = rest.split()
            if head.strip() == "U":
                U = names
            else:
                V = names
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'u v', got {raw!r}")
        edges.append((parts[0], parts[1]))
    if U is None or V is None:
        raise ValueError("graph text needs 'U:' and 'V:' header lines")
    return BipartiteGraph(tuple(U), tuple(V), tuple(edges))


def graph_to_text(g: BipartiteGraph) -> str:
    lines = ["U: " + " ".join(g.U), "V: " + " ".join(g.V)]
    lines += [f"{u} {v}" for u, v in g.E]
    return "\n".join(lines) + "\n"


def random_bipartite_graph(rng: random.Random, max_vertices: int = 8, edge_prob: float = 0.5) -> BipartiteGraph:
    """At least one vertex per side and at least one edge."""
    total = rng.randint(2, max(2, max_vertices))
    nu = rng.randint(1, total - 1)
    U = tuple(f"u{i}" for i in range(1, nu + 1))
    V = tuple(f"v{i}" for i in range(1, total - nu + 1))
    E = [(u, v) for u in U for v in V if rng.random() < edge_prob]
    if not E:
        E = [(rng.choice(U), rng.choice(V))]
    return BipartiteGraph(U, V, tuple(E))


# ---------------------------------------------------------------------------
# Oracles


def _cover_masks(q: QuerySpec, db: DatabaseInstance) -> tuple[list[TupleRef], list[int], int]:
    refs = [ref for ref in db.tuple_refs() if ref[0] in q.relation_names]
    index = {ref: i for i, ref in enumerate(refs)}
    masks = [0] * len(refs)
    outputs = evaluate_join(q, db)
    for j, out in enumerate(outputs):
        for ref in out.provenance:
            masks[index[ref]] |= 1 << j
    return refs, masks, len(outputs)


def brute_force_profile(q: QuerySpec, db: DatabaseInstance, bound: int = 16) -> list[int]:
    """Optimal cost for every target ``0 .. |Q(db)|`` by exhaustive search."""
    refs, masks, total = _cover_masks(q, db)
    if len(refs) > bound:
        raise OracleBoundError(f"{len(refs)} tuples exceeds the oracle bound {bound}")
    combos = kernels.cover_profile(masks, len(refs))
    assert len(combos) == total
    return [0] + [len(c) for c in combos]


def brute_force_gdp(q: QuerySpec, k: int, db: DatabaseInstance, bound: int = 16) -> DeletionSolution:
    """Exact optimum by enumerating tuple subsets in increasing size.

    Returns the lexicographically first optimal subset (tuples ordered by
    relation name, then values). Targets above ``|Q(db)|`` clamp to all.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    refs, masks, total = _cover_masks(q, db)
    if len(refs) > bound:
        raise OracleBoundError(f"{len(refs)} tuples exceeds the oracle bound {bound}")
    target = min(k, total)
    if target == 0:
        return DeletionSolution(frozenset(), 0, k > total)
    combos = kernels.cover_profile(masks, len(refs), target)
    deleted = frozenset(refs[i] for i in combos[target - 1])
    return DeletionSolution(deleted, removed_count(q, db, deleted), k > total)


def _edge_masks(g: BipartiteGraph) -> list[int]:
    masks = []
    for x in g.vertices:
        m = 0
        for j, (u, v) in enumerate(g.E):
            if x in (u, v):
                m |= 1 << j
        masks.append(m)
    return masks


def pvcb_profile(g: BipartiteGraph, bound: int = 20) -> list[int]:
    """Minimum vertices covering at least t edges, for t = 0 .. |E|."""
    if len(g.vertices) > bound:
        raise OracleBoundError(f"{len(g.vertices)} vertices exceeds the oracle bound {bound}")
    combos = kernels.cover_profile(_edge_masks(g), len(g.vertices))
    return [0] + [len(c) for c in combos]


def brute_force_pvcb(inst: PVCBInstance, bound: int = 20) -> frozenset[str]:
    g = inst.graph
    if len(g.vertices) > bound:
        raise OracleBoundError(f"{len(g.vertices)} vertices exceeds the oracle bound {bound}")
    combos = kernels.cover_profile(_edge_masks(g), len(g.vertices), inst.k)
    return frozenset(g.vertices[i] for i in combos[inst.k - 1])


# ---------------------------------------------------------------------------
# Generators


TWO_PATH = QuerySpec.of(("R1", "A"), ("R2", "AB"), ("R3", "B"), name="Q2path")


def _labelled_rows(rel: RelationSchema, labels: dict[str, str], g: BipartiteGraph) -> list[tuple[str, ...]]:
    """Rows for one relation from per-attribute labels "U", "V" or the constant."""
    kinds = {labels[a] for a in rel.attrs} - {CONSTANT}
    if kinds == {"U"}:
        return [tuple(u if labels[a] == "U" else CONSTANT for a in rel.attrs) for u in g.U]
    if kinds == {"V"}:
        return [tuple(v if labels[a] == "V" else CONSTANT for a in rel.attrs) for v in g.V]
    if kinds == {"U", "V"}:
        return [tuple({"U": u, "V": v}.get(labels[a], CONSTANT) for a in rel.attrs) for u, v in g.E]
    raise AssertionError(f"relation {rel.name} would be all-constant")


def _require_dead_end(q: QuerySpec) -> None:
    step = find_step(q)
    if step is not None:
        raise GeneratorPreconditionError(f"{step.kind.value} applies to {q}; the construction needs a dead end")


def gen_two_path(inst: PVCBInstance) -> tuple[QuerySpec, int, DatabaseInstance]:
    g = inst.graph
    db = make_instance(TWO_PATH, {"R1": [(u,) for u in g.U], "R2": list(g.E), "R3": [(v,) for v in g.V]})
    return TWO_PATH, inst.k, db


def disjoint_pair(q: QuerySpec) -> Optional[tuple[str, str]]:
    names = sorted(q.relation_names)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if not set(q.relation(a).attrs) & set(q.relation(b).attrs):
                return a, b
    return None


def grow_components(q: QuerySpec, ri: str, rj: str) -> tuple[list[str], list[str], list[str]]:
    """Grow the U side from ``ri`` and the V side from ``rj``.

    Unassigned relations are scanned in name order; the first one touching
    exactly one side joins it and the scan restarts. Relations left touching
    both sides carry the edges. Returns (U side, V side, edge relations).
    """
    ci, cj = [ri], [rj]
    ai, aj = set(q.relation(ri).attrs), set(q.relation(rj).attrs)
    rest = sorted(n for n in q.relation_names if n not in (ri, rj))
    changed = True
    while changed:
        changed = False
        for name in rest:
            attrs = set(q.relation(name).attrs)
            ti, tj = bool(attrs & ai), bool(attrs & aj)
            if ti and not tj:
                ci.append(name)
                ai |= attrs
            elif tj and not ti:
                cj.append(name)
                aj |= attrs
            else:
                continue
            rest.remove(name)
            changed = True
            break
    edges = [n for n in rest if set(q.relation(n).attrs) & ai and set(q.relation(n).attrs) & aj]
    return ci, cj, edges


def gen_disjoint_pair(q: QuerySpec, inst: PVCBInstance) -> tuple[int, DatabaseInstance]:
    """Reduction for a dead end with two relations sharing no attribute."""
    _require_dead_end(q)
    pair = disjoint_pair(q)
    if pair is None:
        raise GeneratorPreconditionError(f"every two relations of {q} share an attribute")
    _, cj, _ = grow_components(q, *pair)
    v_attrs = {a for name in cj for a in q.relation(name).attrs}
    labels = {a: ("V" if a in v_attrs else "U") for a in q.attributes}
    rows = {r.name: _labelled_rows(r, labels, inst.graph) for r in q.relations}
    return inst.k, make_instance(q, rows)


@dataclass(frozen=True)
class OverlapRoles:
    u_relation: str
    edge_relation: str
    v_relation: str
    a: str
    b: str


def overlap_roles(q: QuerySpec) -> OverlapRoles:
    """Pick the U, edge and V relations for the overlapping-relations construction.

    The U relation has the fewest attributes (ties: larger total overlap with
    the others, then name). The edge relation has the smallest intersection
    with it (ties: name). ``a`` is the smallest shared attribute missing from
    some other relation, and the V relation is the first such relation by name.
    """
    rels = list(q.relations)
    attrs = {r.name: set(r.attrs) for r in rels}

    def overlap(name: str) -> int:
        return sum(len(attrs[name] & attrs[o]) for o in attrs if o != name)

    r1 = min(rels, key=lambda r: (len(r.attrs), -overlap(r.name), r.name)).name
    r2 = min((r for r in rels if r.name != r1), key=lambda r: (len(attrs[r1] & attrs[r.name]), r.name)).name
    a12 = attrs[r1] & attrs[r2]
    others = sorted(n for n in attrs if n not in (r1, r2))
    for a in sorted(a12):
        for r3 in others:
            if a not in attrs[r3]:
                b_cands = sorted((attrs[r2] & attrs[r3]) - a12)
                assert b_cands, "edge relation was not the minimum-overlap choice"
                return OverlapRoles(r1, r2, r3, a, b_cands[0])
    raise AssertionError(f"an attribute of {sorted(a12)} occurs in every relation")


def gen_overlap(q: QuerySpec, inst: PVCBInstance) -> tuple[int, DatabaseInstance]:
    """Reduction for a dead end in which every two relations share an attribute.

    Attributes shared by the U and V relations are constant, the rest of the
    V relation carries V and everything else carries U. A labelled attribute
    with no path to the seed relation of its label is made constant as well,
    so that outputs stay in one-to-one correspondence with edges.
    """
    _require_dead_end(q)
    if disjoint_pair(q) is not None:
        raise GeneratorPreconditionError(f"{q} has two relations sharing no attribute")
    roles = overlap_roles(q)
    a1 = set(q.relation(roles.u_relation).attrs)
    a3 = set(q.relation(roles.v_relation).attrs)
    a13 = a1 & a3
    labels = {}
    for a in q.attributes:
        if a in a13:
            labels[a] = CONSTANT
        elif a in a3:
            labels[a] = "V"
        else:
            labels[a] = "U"
    _unlink_stray_labels(q, labels, {"U": a1 - a13, "V": a3 - a13})
    for rel in q.relations:
        if all(labels[a] == CONSTANT for a in rel.attrs):
            raise GeneratorPreconditionError(f"relation {rel.name} would be all-constant")
    rows = {r.name: _labelled_rows(r, labels, inst.graph) for r in q.relations}
    return inst.k, make_instance(q, rows)


def _unlink_stray_labels(q: QuerySpec, labels: dict[str, str], seeds: dict[str, set[str]]) -> None:
    """Turn labelled attributes not tied to the seed attributes into the constant.

    Values of one label are equal within a tuple, and equal across relations
    only through shared attributes. An attribute that cannot reach the seed
    through relations carrying the same label would take vertex values
    independently of the seed, multiplying outputs beyond the edge set.
    """
    for label, seed in seeds.items():
        reached = set(seed)
        changed = True
        while changed:
            changed = False
            for rel in q.relations:
                mine = {a for a in rel.attrs if labels[a] == label}
                if mine & reached and not mine <= reached:
                    reached |= mine
                    changed = True
        for a, lab in labels.items():
            if lab == label and a not in reached:
                labels[a] = CONSTANT


def _find_node(tree: RecursionTree, names: frozenset[str]) -> RecursionTree:
    for node in tree.walk():
        if not node.is_leaf and frozenset(node.query.relation_names) == names:
            return node
    raise GeneratorPreconditionError(f"no node of the recursion tree has relations {sorted(names)}")


def _attribute_map(user: QuerySpec, node_q: QuerySpec) -> dict[str, str]:
    mapping: dict[str, str] = {}
    for rel in user.relations:
        target = node_q.relation(rel.name)
        if len(target.attrs) != len(rel.attrs):
            raise GeneratorPreconditionError(f"{rel.name} has arity {len(rel.attrs)}, the tree node has {len(target.attrs)}")
        for mine, theirs in zip(rel.attrs, target.attrs):
            if mapping.setdefault(mine, theirs) != theirs:
                raise GeneratorPreconditionError(f"attribute {mine} maps inconsistently onto the tree node")
    if len(set(mapping.values())) != len(mapping):
        raise GeneratorPreconditionError("two attributes map onto the same tree attribute")
    return mapping


def gen_decomposition_lift(
    q_hard: QuerySpec,
    q_full: QuerySpec,
    k_prime: int,
    db_prime: DatabaseInstance,
) -> tuple[int, DatabaseInstance]:
    """Embed an instance of an intermediate query into the full query.

    Attributes lost on the way down are repopulated bottom-up: a merged
    attribute copies its value into both originals and an attribute removed
    as common becomes the constant. Every relation outside the intermediate
    query gets ``L = P + 1`` aligned rows with ``P = |Q_hard(db')|``, one
    distinct value per free attribute per row, so each padding component
    has ``L`` outputs. Returns ``k = k' * L**s`` for ``s`` padding components.
    """
    tree = build_recursion_tree(q_full)
    node = _find_node(tree, frozenset(q_hard.relation_names))
    mapping = _attribute_map(q_hard, node.query)

    hard_rows: dict[str, list[dict[str, str]]] = {}
    for rel in q_hard.relations:
        hard_rows[rel.name] = [{mapping[a]: v for a, v in zip(rel.attrs, t)} for t in sorted(db_prime[rel.name])]

    path = tree.path_to(node)
    for parent in reversed(path[:-1]):
        step = parent.step
        if step.kind is StepKind.CO_OCCURRENCE:
            a, b = step.pair
            for rows in hard_rows.values():
                for row in rows:
                    if step.fresh in row:
                        row[a] = row[b] = row.pop(step.fresh)
        elif step.kind is StepKind.COMMON_ATTRIBUTE:
            for rows in hard_rows.values():
                for row in rows:
                    row[step.attribute] = CONSTANT

    lifted_attrs = {a for name in hard_rows for a in q_full.relation(name).attrs}
    padding = [r for r in q_full.relations if r.name not in hard_rows]
    P = output_count(q_hard, db_prime)
    L = P + 1

    out_rows: dict[str, list[tuple[str, ...]]] = {}
    for name, rows in hard_rows.items():
        out_rows[name] = [tuple(row[a] for a in q_full.relation(name).attrs) for row in rows]
    for rel in padding:
        free = [a for a in rel.attrs if a not in lifted_attrs]
        if not free:
            raise GeneratorPreconditionError(f"padding relation {rel.name} has no attribute outside the lifted query")
        out_rows[rel.name] = [
            tuple(CONSTANT if a in lifted_attrs else f"{a.lower()}{ell}" for a in rel.attrs) for ell in range(1, L + 1)
        ]

    s = _padding_components(padding, lifted_attrs)
    db = make_instance(q_full, out_rows)
    expected = P * L**s
    got = output_count(q_full, db)
    if got != expected:
        raise GeneratorPreconditionError(f"lifted instance has {got} outputs, expected {expected}")
    return k_prime * L**s, db


def _padding_components(padding: Sequence[RelationSchema], ignore: Iterable[str]) -> int:
    ignore = set(ignore)
    if not padding:
        return 0
    sub = QuerySpec(tuple(RelationSchema(r.name, tuple(a for a in r.attrs if a not in ignore)) for r in padding))
    return len(decompose_components(sub))
