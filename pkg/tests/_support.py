"""Shared fixtures and independent reference implementations for the tests."""
from __future__ import annotations

import itertools
import random
from typing import Iterable, Optional

from gdprop.classifier import is_ptime
from gdprop.relational import DatabaseInstance, QuerySpec, TupleRef, make_instance, parse_query
from gdprop.reductions import BipartiteGraph

# Running example: three-relation chain.
RUNNING_QUERY = parse_query("Q(A,B,C,E) :- R1(A,B), R2(B,C), R3(C,E)")
RUNNING_ROWS = {
    "R1": [("a1", "b1"), ("a2", "b1"), ("a2", "b2"), ("a3", "b3")],
    "R2": [("b1", "c1"), ("b2", "c2"), ("b3", "c2")],
    "R3": [("c1", "e1"), ("c1", "e2"), ("c2", "e3"), ("c3", "c3")],
}
RUNNING_OUTPUTS = [
    ("a1", "b1", "c1", "e1"),
    ("a1", "b1", "c1", "e2"),
    ("a2", "b1", "c1", "e1"),
    ("a2", "b1", "c1", "e2"),
    ("a2", "b2", "c2", "e3"),
    ("a3", "b3", "c2", "e3"),
]


def running_db() -> DatabaseInstance:
    return make_instance(RUNNING_QUERY, RUNNING_ROWS)


Q0 = parse_query("Q0(A,B,C,E,F,G,H) :- R1(A,B), R2(F,G), R3(B,C,E), R4(C,E), R5(G,H)")
Q1 = parse_query("Q1(A,B,C,E,F) :- R1(A), R2(B), R3(A,C), R4(E,B), R5(C,E), R6(C,F)")
Q2 = parse_query(
    "Q2(A,P1,P2,E,F,B,C1,C2,C3) :- R1(A,P1,P2,E,F), R2(B,P1,P2,E,F), R3(P1,C1,C2), R4(P2,C1,C3,F), R5(E,F,C1)"
)
Q3 = parse_query("Q3(A,P,M,G,B,C,E,F) :- R1(A,P), R2(A,P,M), R3(A,P,G), R4(A,B,C), R5(A,C,E), R6(F)")
Q2PATH = parse_query("Q2path(A,B) :- R1(A), R2(A,B), R3(B)")
QTWO = parse_query("Q(A,B,C,D) :- R1(A,B), R2(C,D)")

# Sample bipartite graph with reference tables for both PVCB constructions.
SAMPLE_GRAPH = BipartiteGraph(
    ("u1", "u2", "u3", "u4"),
    ("v1", "v2", "v3", "v4", "v5"),
    (("u1", "v1"), ("u1", "v2"), ("u2", "v3"), ("u3", "v4"), ("u3", "v5"), ("u4", "v4"), ("u4", "v5")),
)

DISJOINT_TABLES = {
    "R1": [("u1",), ("u2",), ("u3",), ("u4",)],
    "R2": [("v1",), ("v2",), ("v3",), ("v4",), ("v5",)],
    "R3": [("u1", "u1"), ("u2", "u2"), ("u3", "u3"), ("u4", "u4")],
    "R4": [("v1", "v1"), ("v2", "v2"), ("v3", "v3"), ("v4", "v4"), ("v5", "v5")],
    "R5": [("u1", "v1"), ("u1", "v2"), ("u2", "v3"), ("u3", "v4"), ("u3", "v5"), ("u4", "v4"), ("u4", "v5")],
    "R6": [("u1", "u1"), ("u2", "u2"), ("u3", "u3"), ("u4", "u4")],
}

_EDGES = SAMPLE_GRAPH.E
# Reference tables for the overlapping-relations construction on the graph above.
OVERLAP_REFERENCE = {
    "R1": [(v, v, v, "*", "*") for v in SAMPLE_GRAPH.V],
    "R2": [(u, v, u, "*", "*") for u, v in _EDGES],
    "R3": [(v, u, u) for u, v in _EDGES],
    "R4": [(v, u, u, "*") for u, v in _EDGES],
    "R5": [("*", "*", u) for u in SAMPLE_GRAPH.U],
}
# What the generator emits. The reference R2 puts u in the P2 column, against the
# stated labelling (P2 gets V), which would empty the join. Relabelling P2 is
# not enough: B occurs only in R2, so its vertex would float free of C1 and the
# join would hold one output per pair of edges sharing a V vertex. B is
# therefore the constant and R2 holds one row per V vertex.
OVERLAP_TABLES = dict(OVERLAP_REFERENCE, R2=[("*", v, v, "*", "*") for v in SAMPLE_GRAPH.V])

# Intermediate dead end below Q0 and its instance.
Q_HARD = parse_query("Qh(A,B,K) :- R1(A,B), R3(B,K), R4(K)")
Q_HARD_ROWS = {
    "R1": [("a1", "b1"), ("a1", "b2"), ("a2", "b1")],
    "R3": [("b1", "k1"), ("b1", "k2"), ("b2", "k1"), ("b2", "k3")],
    "R4": [("k1",), ("k2",), ("k3",), ("k4",)],
}


def rows_as_sets(db: DatabaseInstance) -> dict[str, set]:
    return {name: set(ts) for name, ts in db.relations.items()}


# ---------------------------------------------------------------------------
# Independent references


def naive_join(q: QuerySpec, db: DatabaseInstance) -> list[tuple[dict, tuple[TupleRef, ...]]]:
    """p nested loops over the relations; no hashing."""
    rels = [(r, sorted(db[r.name])) for r in q.relations]
    out = []
    for combo in itertools.product(*[ts for _, ts in rels]):
        assignment: dict = {}
        ok = True
        for (rel, _), t in zip(rels, combo):
            for a, v in zip(rel.attrs, t):
                if assignment.setdefault(a, v) != v:
                    ok = False
        if ok:
            out.append((assignment, tuple((rel.name, t) for (rel, _), t in zip(rels, combo))))
    return out


def naive_removed(q: QuerySpec, db: DatabaseInstance, deleted: Iterable[TupleRef]) -> int:
    gone = set(deleted)
    return sum(1 for _, prov in naive_join(q, db) if any(w in gone for w in prov))


def naive_opt(q: QuerySpec, k: int, db: DatabaseInstance) -> Optional[int]:
    """Smallest subset size removing at least k outputs, by itertools.combinations."""
    outputs = naive_join(q, db)
    refs = sorted((r.name, t) for r in q.relations for t in db[r.name])
    for size in range(len(refs) + 1):
        for combo in itertools.combinations(refs, size):
            gone = set(combo)
            if sum(1 for _, prov in outputs if any(w in gone for w in prov)) >= k:
                return size
    return None


def naive_pvcb(g: BipartiteGraph, k: int) -> int:
    verts = g.vertices
    for size in range(len(verts) + 1):
        for combo in itertools.combinations(verts, size):
            s = set(combo)
            if sum(1 for u, v in g.E if u in s or v in s) >= k:
                return size
    raise AssertionError("k exceeds edge count")


# ---------------------------------------------------------------------------
# Random instances


def random_query(rng: random.Random, max_rels: int = 4, max_attrs: int = 3, pool: str = "ABCDE") -> QuerySpec:
    p = rng.randint(1, max_rels)
    rels = []
    for i in range(1, p + 1):
        attrs = rng.sample(pool, rng.randint(1, max_attrs))
        rels.append((f"R{i}", attrs))
    return QuerySpec.of(*rels)


def random_instance(rng: random.Random, q: QuerySpec, max_tuples: int = 4) -> DatabaseInstance:
    dom = [f"x{i}" for i in range(rng.choice((1, 2, 2, 3)))]
    rows = {}
    for r in q.relations:
        n = rng.randint(1, max_tuples)
        rows[r.name] = [tuple(rng.choice(dom) for _ in r.attrs) for _ in range(n)]
    return make_instance(q, rows)


def random_ptime_case(rng: random.Random, **kw) -> tuple[QuerySpec, DatabaseInstance]:
    while True:
        q = random_query(rng, **kw)
        if is_ptime(q):
            db = random_instance(rng, q)
            return q, db
