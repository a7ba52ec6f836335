import math
import random

import pytest

from gdprop import exact
from gdprop.classifier import build_recursion_tree, remove_attribute
from gdprop.exact import (
    HardQueryError,
    InfeasibleTargetError,
    SubproblemTable,
    co_occurrence,
    common_attr_partition,
    compute_opt,
    compute_opt_topdown,
    cost_profile,
    decomp_cross_product,
    group_knapsack,
    one_subset,
    single_relation,
    solve_bottom_up,
    two_relations,
)
from gdprop.relational import QuerySpec, make_instance, output_count, removed_count
from gdprop.reductions import brute_force_gdp, brute_force_profile

from _support import RUNNING_QUERY, Q3, running_db, naive_opt, random_instance, random_ptime_case


def singles(*values):
    return [(v,) for v in values]


CHAIN_Q = QuerySpec.of(("R2", "FG"), ("R5", "GH"))
CHAIN_DB = make_instance(
    CHAIN_Q,
    {"R2": [(f"f{i}", f"g{i}") for i in range(1, 8)], "R5": [(f"g{i}", f"h{i}") for i in range(1, 8)]},
)

CROSS_Q = QuerySpec.of(("R1", "A"), ("R2", "B"), ("R3", "C"))
CROSS_DB = make_instance(
    CROSS_Q, {"R1": singles("a1", "a2"), "R2": singles("b1", "b2"), "R3": singles("c1", "c2", "c3")}
)

SHARED_Q = QuerySpec.of(("R1", "AB"), ("R2", "BC"))
SHARED_DB = make_instance(
    SHARED_Q, {"R1": [("a1", "b1"), ("a2", "b1"), ("a3", "b2")], "R2": [("b1", "c1"), ("b2", "c1")]}
)

SUBSET_Q = QuerySpec.of(("R1", "A"), ("R2", "AB"), ("R3", "AC"))
SUBSET_DB = make_instance(
    SUBSET_Q,
    {
        "R1": singles("a1", "a2"),
        "R2": [("a1", "b1"), ("a1", "b2"), ("a2", "b1")],
        "R3": [("a1", "c1"), ("a2", "c1"), ("a2", "c2")],
    },
)

STAR_Q = QuerySpec.of(("R1", "AB"), ("R2", "AC"), ("R3", "AE"))
STAR_DB = make_instance(
    STAR_Q,
    {
        "R1": [("a1", "b1"), ("a1", "b2"), ("a2", "b1")],
        "R2": [("a1", "c1"), ("a2", "c1")],
        "R3": [("a1", "e1"), ("a2", "e1"), ("a2", "e2"), ("a2", "e3")],
    },
)

MERGE_Q = QuerySpec.of(("R1", "AB"), ("R2", "CE"), ("R3", "CEF"))
MERGE_DB = make_instance(
    MERGE_Q,
    {
        "R1": [("a1", "b1"), ("a2", "b2")],
        "R2": [("c1", "e1"), ("c1", "e2"), ("c2", "e1")],
        "R3": [("c1", "e1", "f1"), ("c1", "e1", "f2"), ("c1", "e2", "f1"), ("c2", "e1", "f3")],
    },
)


def check(q, db, sol, k):
    assert sol.removed_count == removed_count(q, db, sol.deleted)
    assert sol.removed_count >= min(k, output_count(q, db))
    assert all(ref in db for ref in sol.deleted)


class TestComputeOpt:
    def test_chains_from_padding(self):
        sol = compute_opt(CHAIN_Q, 3, CHAIN_DB)
        assert sol.cost == 3 == brute_force_gdp(CHAIN_Q, 3, CHAIN_DB).cost

    def test_running_example_is_rejected(self):
        with pytest.raises(HardQueryError):
            compute_opt(RUNNING_QUERY, 4, running_db())

    def test_single_attribute(self):
        q = QuerySpec.of(("R1", "A"))
        db = make_instance(q, {"R1": singles("a", "b", "c")})
        assert compute_opt(q, 2, db).cost == 2

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            compute_opt(CROSS_Q, 0, CROSS_DB)

    def test_clamp_and_strict(self):
        sol = compute_opt(SHARED_Q, 10, SHARED_DB)
        assert sol.clamped and sol.removed_count == 3 and sol.cost == 2
        with pytest.raises(InfeasibleTargetError):
            compute_opt(SHARED_Q, 10, SHARED_DB, strict=True)

    def test_empty_output(self):
        db = make_instance(SHARED_Q, {"R1": [("a1", "b1")], "R2": []})
        sol = compute_opt(SHARED_Q, 1, db)
        assert sol.cost == 0 and sol.clamped

    def test_q3_against_oracle(self):
        rng = random.Random(7)
        db = random_instance(rng, Q3, max_tuples=3)
        costs = brute_force_profile(Q3, db, bound=20)
        for k in range(1, len(costs)):
            sol = compute_opt(Q3, k, db)
            check(Q3, db, sol, k)
            assert sol.cost == costs[k]


class TestProcedures:
    def test_single_relation(self):
        q = QuerySpec.of(("R1", "A"))
        db = make_instance(q, {"R1": singles("a3", "a1", "a2")})
        assert single_relation(q, 2, db).sorted_deleted() == [("R1", ("a1",)), ("R1", ("a2",))]
        assert single_relation(q, 3, db).cost == 3
        db2 = make_instance(q, {"R1": singles("a1", "a2")})
        with pytest.raises(InfeasibleTargetError):
            single_relation(q, 3, db2)

    def test_two_relations_disjoint(self):
        q = QuerySpec.of(("R1", "A"), ("R2", "B"))
        db = make_instance(q, {"R1": singles("a1", "a2"), "R2": singles("b1", "b2", "b3")})
        sol = two_relations(q, 4, db)
        assert sol.cost == 2 and sol.removed_count == 6
        assert {name for name, _ in sol.deleted} == {"R1"}
        assert sol.cost == naive_opt(q, 4, db)

    def test_two_relations_disjoint_uses_larger_partner(self):
        q = QuerySpec.of(("R1", "A"), ("R2", "B"))
        db = make_instance(q, {"R1": singles("a1", "a2"), "R2": singles("b1", "b2", "b3")})
        # one tuple of the smaller side already removes three outputs
        assert two_relations(q, 3, db).cost == 1 == naive_opt(q, 3, db)

    def test_two_relations_shared(self):
        sol = two_relations(SHARED_Q, 2, SHARED_DB)
        assert sol.sorted_deleted() == [("R2", ("b1", "c1"))]
        assert two_relations(SHARED_Q, 3, SHARED_DB).cost == 2 == naive_opt(SHARED_Q, 3, SHARED_DB)
        with pytest.raises(InfeasibleTargetError):
            two_relations(SHARED_Q, 4, SHARED_DB)

    def test_one_subset(self):
        assert one_subset(SUBSET_Q, 3, SUBSET_DB, "R1").cost == 2 == naive_opt(SUBSET_Q, 3, SUBSET_DB)
        assert one_subset(SUBSET_Q, 2, SUBSET_DB, "R1").cost == 1 == naive_opt(SUBSET_Q, 2, SUBSET_DB)

    def test_one_subset_skips_idle_tuples(self):
        db = make_instance(
            SUBSET_Q,
            {"R1": singles("a0", "a1"), "R2": [("a1", "b1")], "R3": [("a1", "c1")]},
        )
        assert one_subset(SUBSET_Q, 1, db, "R1").sorted_deleted() == [("R1", ("a1",))]

    def test_one_subset_precondition(self):
        with pytest.raises(ValueError):
            one_subset(SUBSET_Q, 1, SUBSET_DB, "R2")

    def test_common_attr_partition(self):
        for k in range(1, 6):
            sol = common_attr_partition(STAR_Q, k, STAR_DB, "A")
            check(STAR_Q, STAR_DB, sol, k)
            assert sol.cost == naive_opt(STAR_Q, k, STAR_DB)

    def test_common_attr_single_partition_equals_child(self):
        db = make_instance(STAR_Q, {n: [t for t in STAR_DB[n] if t[0] == "a2"] for n in STAR_Q.relation_names})
        child = remove_attribute(STAR_Q, "A")
        child_db = make_instance(child, {n: [t[1:] for t in db[n]] for n in child.relation_names})
        for k in range(1, output_count(STAR_Q, db) + 1):
            assert common_attr_partition(STAR_Q, k, db, "A").cost == compute_opt(child, k, child_db).cost

    def test_common_attr_remove_all_is_sum_of_parts(self):
        total = output_count(STAR_Q, STAR_DB)
        parts = 0
        for value in ("a1", "a2"):
            db = make_instance(STAR_Q, {n: [t for t in STAR_DB[n] if t[0] == value] for n in STAR_Q.relation_names})
            parts += naive_opt(STAR_Q, output_count(STAR_Q, db), db)
        assert common_attr_partition(STAR_Q, total, STAR_DB, "A").cost == parts

    def test_common_attr_precondition(self):
        with pytest.raises(ValueError):
            common_attr_partition(STAR_Q, 1, STAR_DB, "B")

    def test_co_occurrence(self):
        for k in range(1, output_count(MERGE_Q, MERGE_DB) + 1):
            sol = co_occurrence(MERGE_Q, k, MERGE_DB, "C", "E")
            check(MERGE_Q, MERGE_DB, sol, k)
            assert sol.cost == compute_opt(MERGE_Q, k, MERGE_DB).cost == naive_opt(MERGE_Q, k, MERGE_DB)

    def test_co_occurrence_precondition(self):
        with pytest.raises(ValueError):
            co_occurrence(MERGE_Q, 1, MERGE_DB, "C", "F")

    @pytest.mark.parametrize("k, cost", [(7, 2), (6, 1), (12, 2)])
    def test_decomp_cross_product(self, k, cost):
        sol = decomp_cross_product(CROSS_Q, k, CROSS_DB)
        check(CROSS_Q, CROSS_DB, sol, k)
        assert sol.cost == cost == naive_opt(CROSS_Q, k, CROSS_DB)

    def test_decomp_needs_two_components(self):
        with pytest.raises(ValueError):
            decomp_cross_product(SHARED_Q, 1, SHARED_DB)


class TestBottomUp:
    def test_memo_hits_on_reuse(self):
        tree = build_recursion_tree(Q3)
        db = random_instance(random.Random(3), Q3, max_tuples=3)
        table = SubproblemTable()
        first = solve_bottom_up(tree, 3, db, table)
        misses = table.misses
        second = solve_bottom_up(tree, 3, db, table)
        assert table.misses == misses
        assert table.hits >= 1
        assert first == second

    def test_table_size_bound(self):
        tree = build_recursion_tree(STAR_Q)
        table = SubproblemTable()
        k = 5
        solve_bottom_up(tree, k, STAR_DB, table)
        nodes = sum(1 for n in tree.walk() if not n.is_leaf)
        assert len(table.entries) <= nodes * (STAR_DB.size + 1)
        assert table.cells() <= len(table.entries) * (k + 1)

    def test_hard_tree_rejected(self):
        with pytest.raises(HardQueryError):
            solve_bottom_up(build_recursion_tree(RUNNING_QUERY), 1, running_db())

    @pytest.mark.parametrize("seed", [11, 12, 13])
    def test_matches_top_down(self, seed):
        rng = random.Random(seed)
        for _ in range(40):
            q, db = random_ptime_case(rng)
            if db.size > 10:
                continue
            total = output_count(q, db)
            for k in range(1, total + 1):
                assert compute_opt(q, k, db).cost == compute_opt_topdown(q, k, db).cost


@pytest.mark.parametrize("seed", [21, 22, 23])
def test_oracle_equivalence_and_invariants(seed):
    rng = random.Random(seed)
    for _ in range(60):
        q, db = random_ptime_case(rng)
        oracle = brute_force_profile(q, db)
        profile = cost_profile(q, db)
        assert profile == oracle
        for k in range(1, len(oracle)):
            sol = compute_opt(q, k, db)
            check(q, db, sol, k)
            assert sol.cost == oracle[k]
        assert all(a <= b for a, b in zip(profile, profile[1:]))
        if len(profile) > 1:
            assert profile[1] == 1


@pytest.mark.parametrize("seed", [31, 32, 33])
def test_disjoint_pair_prefers_smaller_relation(seed):
    rng = random.Random(seed)
    q = QuerySpec.of(("R1", "A"), ("R2", "B"))
    for _ in range(30):
        n1, n2 = rng.randint(1, 5), rng.randint(1, 5)
        db = make_instance(q, {"R1": singles(*[f"a{i}" for i in range(n1)]), "R2": singles(*[f"b{i}" for i in range(n2)])})
        for k in range(1, n1 * n2 + 1):
            sol = two_relations(q, k, db)
            assert sol.cost == naive_opt(q, k, db) == math.ceil(k / max(n1, n2))
            if n1 != n2:
                small = "R1" if n1 < n2 else "R2"
                assert {name for name, _ in sol.deleted} == {small}


def _recurrence(rows_before, child, cap):
    inf = math.inf
    prev = rows_before + [inf] * (cap + 1 - len(rows_before))
    out = []
    for s in range(cap + 1):
        best = prev[s]
        for m in range(1, min(s, len(child) - 1) + 1):
            best = min(best, prev[s - m] + child[m])
        out.append(best)
    return out


@pytest.mark.parametrize("seed", [41, 42, 43])
def test_partition_dp_recurrence_identity(seed):
    rng = random.Random(seed)
    child_q = QuerySpec.of(("R1", "B"), ("R2", "C"), ("R3", "E"))
    for _ in range(20):
        cap = rng.randint(1, 12)
        child_costs = []
        for _ in range(rng.randint(1, 4)):
            db = random_instance(rng, child_q, max_tuples=3)
            costs = brute_force_profile(child_q, db)
            child_costs.append(costs[: cap + 1])
        table = group_knapsack(child_costs, cap)
        assert table[0] == [0]
        for i, child in enumerate(child_costs, start=1):
            expected = _recurrence(table[i - 1], child, cap)
            row = table[i]
            assert row == expected[: len(row)]
            assert all(v == math.inf for v in expected[len(row):])
