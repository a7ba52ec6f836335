"""Pure-Python hot kernels; the Cython module ``_ckernels`` mirrors these exactly.

Cost arrays are plain lists of ints. ``costs[s]`` is the minimum number of
deletions that remove at least ``s`` outputs, for ``s = 0 .. len(costs) - 1``.
"""
from __future__ import annotations

IMPLEMENTATION = "python"


def knapsack_merge(prev: list[int], child: list[int], cap: int) -> tuple[list[int], list[int]]:
    """Fold one more partition into a group-knapsack row.

    ``prev`` covers partitions 1..i-1, ``child`` partition i. Returns the new
    row ``new[s] = min_m prev[s - m] + child[m]`` and the minimizing ``m``
    (smallest on ties), for ``s`` up to ``min(cap, len(prev) + len(child) - 2)``.
    """
    top_prev = len(prev) - 1
    top_child = len(child) - 1
    top = min(cap, top_prev + top_child)
    costs = []
    choices = []
    for s in range(top + 1):
        best = -1
        best_m = -1
        lo = max(0, s - top_prev)
        hi = min(s, top_child)
        for m in range(lo, hi + 1):
            c = prev[s - m] + child[m]
            if best < 0 or c < best:
                best = c
                best_m = m
        costs.append(best)
        choices.append(best_m)
    return costs, choices


def cross_fold(c1: list[int], m1: int, c2: list[int], m2: int, cap: int) -> tuple[list[int], list[int], list[int]]:
    """Combine two attribute-disjoint parts whose outputs join by cross product.

    Removing ``k1`` of the ``m1`` outputs on the left and ``k2`` of the ``m2``
    on the right removes ``k1*m2 + k2*m1 - k1*k2`` outputs. ``m1``/``m2`` may be
    pre-clamped to ``2*cap + 1`` without changing any answer.
    """
    top = min(cap, m1 * m2)
    top1 = len(c1) - 1
    top2 = len(c2) - 1
    costs = []
    k1s = []
    k2s = []
    for s in range(top + 1):
        best = -1
        b1 = b2 = 0
        for k1 in range(min(s, top1) + 1):
            if k1 == m1:
                k2 = 0
            else:
                need = s - k1 * m2
                if need <= 0:
                    k2 = 0
                else:
                    rest = m1 - k1
                    k2 = (need + rest - 1) // rest
            if k2 > min(s, top2):
                continue
            c = c1[k1] + c2[k2]
            if best < 0 or c < best:
                best = c
                b1, b2 = k1, k2
        costs.append(best)
        k1s.append(b1)
        k2s.append(b2)
    return costs, k1s, k2s


def cover_profile(masks: list[int], max_size: int, target: int = -1) -> list[tuple[int, ...]]:
    """Brute-force minimum covers for every coverage threshold.

    ``masks[i]`` is the bitset of outputs removed by deleting item ``i``.
    Subsets are enumerated by increasing size, lexicographically within a size.
    Entry ``t - 1`` of the result is the first subset reaching coverage ``>= t``
    (so its size is the optimum for ``t``). Thresholds that need more than
    ``max_size`` items are left out, so the list may be short. A nonnegative
    ``target`` stops the search once that threshold is resolved.
    """
    total = 0
    for m in masks:
        total |= m
    total = bin(total).count("1")
    if 0 <= target < total:
        total = target
    out: list[tuple[int, ...]] = []
    n = len(masks)
    resolved = 0
    r = 1
    while resolved < total and r <= min(max_size, n):
        idx = list(range(r))
        acc = [0] * (r + 1)
        for d in range(r):
            acc[d + 1] = acc[d] | masks[idx[d]]
        while True:
            cov = bin(acc[r]).count("1")
            if cov > total:
                cov = total
            if cov > resolved:
                combo = tuple(idx)
                out.extend([combo] * (cov - resolved))
                resolved = cov
                if resolved >= total:
                    break
            # next combination in lexicographic order
            d = r - 1
            while d >= 0 and idx[d] == n - r + d:
                d -= 1
            if d < 0:
                break
            idx[d] += 1
            for e in range(d + 1, r):
                idx[e] = idx[e - 1] + 1
            for e in range(d, r):
                acc[e + 1] = acc[e] | masks[idx[e]]
        r += 1
    return out
