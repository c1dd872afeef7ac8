"""Compiled search kernel for binary constraints (requires numba).

This module is imported lazily by the solver and only when numba is
installed; everything here mirrors the pure-Python engine bit for bit so
node counts agree exactly.  Domains are uint64 bitmasks, which caps the
compiled path at d <= 63 values; larger domains fall back to Python.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _popcount(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + (
        (x >> np.uint64(2)) & np.uint64(0x3333333333333333)
    )
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)


@njit(cache=True)
def solve_binary(n, d, pair_mask, has_con, budget, count_all, count_limit):
    """Forward-checking backtracker over bitmask domains.

    pair_mask[(u, w, a)] is the mask of values still allowed for w once
    u takes value a (all constraints on the pair merged); has_con marks
    constrained pairs.  Returns (code, count, nodes, witness) with code
    0 = search space exhausted, 1 = returned early at a solution,
    2 = node budget exhausted.  A node is one value-assignment attempt.
    """
    one = np.uint64(1)
    zero = np.uint64(0)
    full = (one << np.uint64(d)) - one
    dom = np.full(n, full, dtype=np.uint64)
    saved = np.zeros((n, n), dtype=np.uint64)
    var_stack = np.full(n, -1, dtype=np.int32)
    cand_stack = np.zeros(n, dtype=np.uint64)
    val_stack = np.zeros(n, dtype=np.int32)
    assigned = np.zeros(n, dtype=np.uint8)
    witness = np.full(n, -1, dtype=np.int32)
    nodes = 0
    count = 0
    depth = 0
    best = -1
    bestc = 1 << 30
    for v in range(n):
        c = _popcount(dom[v])
        if c < bestc:
            bestc = int(c)
            best = v
    var_stack[0] = best
    cand_stack[0] = dom[best]
    assigned[best] = 1
    while True:
        cand = cand_stack[depth]
        if cand == zero:
            assigned[var_stack[depth]] = 0
            depth -= 1
            if depth < 0:
                return 0, count, nodes, witness
            for v in range(n):
                dom[v] = saved[depth, v]
            continue
        low = cand & (~cand + one)
        a = int(_popcount(low - one))
        cand_stack[depth] = cand & (cand - one)
        if nodes >= budget:
            return 2, count, nodes, witness
        nodes += 1
        v = var_stack[depth]
        val_stack[depth] = a
        for w in range(n):
            saved[depth, w] = dom[w]
        dom[v] = one << np.uint64(a)
        ok = True
        for w in range(n):
            if has_con[v, w] and assigned[w] == 0:
                nd = dom[w] & pair_mask[v, w, a]
                dom[w] = nd
                if nd == zero:
                    ok = False
                    break
        if not ok:
            for w in range(n):
                dom[w] = saved[depth, w]
            continue
        if depth + 1 == n:
            count += 1
            if count == 1:
                for i in range(n):
                    witness[var_stack[i]] = val_stack[i]
            if not count_all or (count_limit > 0 and count >= count_limit):
                return 1, count, nodes, witness
            for w in range(n):
                dom[w] = saved[depth, w]
            continue
        depth += 1
        best = -1
        bestc = 1 << 30
        for w in range(n):
            if assigned[w] == 0:
                c = _popcount(dom[w])
                if c < bestc:
                    bestc = int(c)
                    best = w
        var_stack[depth] = best
        cand_stack[depth] = dom[best]
        assigned[best] = 1
