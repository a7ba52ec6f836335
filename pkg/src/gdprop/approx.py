"""Approximation through partial set cover.

Every input tuple becomes a set whose elements are the outputs it witnesses, so
each element lies in exactly ``p`` sets (one per relation). A primal-dual
partial cover algorithm with frequency ``f`` returns a cover of cost at most
``f * OPT``, which gives a ``p``-approximation for any query, hard or not.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Optional, Sequence

from .relational import DatabaseInstance, DeletionSolution, QuerySpec, TupleRef, evaluate_join, removed_count


class EmptyOutputError(ValueError):
    """The query has no outputs, so there is nothing to cover."""


class InfeasibleCoverError(ValueError):
    pass


@dataclass(frozen=True)
class CoverSet:
    set_id: TupleRef
    members: frozenset[int]
    cost: Fraction = Fraction(1)


@dataclass(frozen=True)
class PartialSetCoverInstance:
    universe: frozenset[int]
    sets: tuple[CoverSet, ...]
    target: int

    @property
    def frequency(self) -> int:
        """Largest number of sets sharing one element."""
        counts: dict[int, int] = {}
        for s in self.sets:
            for e in s.members:
                counts[e] = counts.get(e, 0) + 1
        return max(counts.values(), default=0)

    def coverage(self, chosen: Sequence[TupleRef]) -> int:
        by_id = {s.set_id: s for s in self.sets}
        covered: set[int] = set()
        for sid in chosen:
            covered |= by_id[sid].members
        return len(covered)

    def to_dict(self) -> dict[str, Any]:
        return {
            "universe": sorted(self.universe),
            "target": self.target,
            "frequency": self.frequency,
            "sets": [
                {
                    "id": {"relation": s.set_id[0], "tuple": list(s.set_id[1])},
                    "members": sorted(s.members),
                    "cost": str(s.cost),
                }
                for s in self.sets
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def build_psc_instance(q: QuerySpec, k: int, db: DatabaseInstance) -> PartialSetCoverInstance:
    """One set per input tuple, one element per output; the target clamps to ``|Q(db)|``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    outputs = evaluate_join(q, db)
    if not outputs:
        raise EmptyOutputError("the query has no outputs on this instance")
    members: dict[TupleRef, set[int]] = {ref: set() for ref in db.tuple_refs() if ref[0] in q.relation_names}
    for i, out in enumerate(outputs):
        for ref in out.provenance:
            members[ref].add(i)
    sets = tuple(CoverSet(ref, frozenset(m)) for ref, m in sorted(members.items()))
    return PartialSetCoverInstance(frozenset(range(len(outputs))), sets, min(k, len(outputs)))


def _primal_dual(
    sets: Sequence[CoverSet],
    covered: set[int],
    target: int,
) -> Optional[list[int]]:
    """Raise duals of uncovered elements uniformly; add the first set to go tight.

    ``sets`` is in tie-break order. Returns indices into ``sets`` of the sets
    added, or None if the target cannot be reached with them.
    """
    covered = set(covered)
    paid = [Fraction(0)] * len(sets)  # dual mass already charged to each set
    chosen: list[int] = []
    open_sets = set(range(len(sets)))
    while len(covered) < target:
        best: Optional[tuple[Fraction, int]] = None
        for i in sorted(open_sets):
            live = len(sets[i].members - covered)
            if live == 0:
                continue
            rate = (sets[i].cost - paid[i]) / live
            if best is None or rate < best[0]:
                best = (rate, i)
        if best is None:
            return None
        delta, pick = best
        for i in open_sets:
            paid[i] += delta * len(sets[i].members - covered)
        open_sets.discard(pick)
        chosen.append(pick)
        covered |= sets[pick].members
    return chosen


def _prune(sets: Sequence[CoverSet], chosen: list[int], target: int) -> list[int]:
    """Drop redundant sets, most expensive first, ties by id."""
    keep = list(chosen)
    for i in sorted(chosen, key=lambda j: (-sets[j].cost, sets[j].set_id)):
        trial = [j for j in keep if j != i]
        covered: set[int] = set()
        for j in trial:
            covered |= sets[j].members
        if len(covered) >= target:
            keep = trial
    return sorted(keep)


def solve_psc(inst: PartialSetCoverInstance) -> list[TupleRef]:
    """Cover at least ``inst.target`` elements at cost within ``frequency * OPT``.

    For each guessed set ``h`` (the priciest set of some optimum), ``h`` is
    taken outright, sets costing more than ``h`` are discarded and the primal
    dual fills the rest. The cheapest pruned candidate wins; ties go to the
    earliest guess. Sets are processed in id order throughout.
    """
    sets = sorted(inst.sets, key=lambda s: s.set_id)
    target = inst.target
    if target > len(inst.universe):
        raise InfeasibleCoverError(f"target {target} exceeds universe size {len(inst.universe)}")
    if target <= 0:
        return []
    best: Optional[tuple[Fraction, list[int]]] = None
    for h, guess in enumerate(sets):
        allowed = [i for i, s in enumerate(sets) if i != h and s.cost <= guess.cost]
        added = _primal_dual([sets[i] for i in allowed], set(guess.members), target)
        if added is None:
            continue
        chosen = _prune(sets, [h] + [allowed[i] for i in added], target)
        cost = sum((sets[i].cost for i in chosen), Fraction(0))
        if best is None or cost < best[0]:
            best = (cost, chosen)
    if best is None:
        raise InfeasibleCoverError("no family of sets reaches the target")
    return [sets[i].set_id for i in best[1]]


def approx_gdp(q: QuerySpec, k: int, db: DatabaseInstance) -> DeletionSolution:
    """Deletion set removing at least ``min(k, |Q(db)|)`` outputs, cost at most ``p * OPT``."""
    inst = build_psc_instance(q, k, db)
    deleted = frozenset(solve_psc(inst))
    return DeletionSolution(deleted, removed_count(q, db, deleted), k > len(inst.universe))


def ratio_bound(q: QuerySpec) -> int:
    return len(q.relations)
