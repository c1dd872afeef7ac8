"""Exact satisfiability decision and solution counting.

The search is chronological backtracking with forward checking: every
assignment prunes the domains of not-yet-assigned variables that share a
constraint with the assigned one, and the branch is abandoned as soon as
any domain empties.  Variable order is minimum-remaining-values with
ties broken by lowest index; values are tried in ascending order.  Both
rules are deterministic, so the node count (number of value-assignment
attempts) is a reproducible hardness measure.

Three engines implement the same search:

* a compiled kernel for k = 2 with d <= 63 (numba, optional),
* a pure-Python bitmask engine for k = 2 with any d,
* a generic engine for k >= 3 that prunes through each constraint once
  exactly one of its variables remains unassigned (for k = 2 this is
  the same propagation, which the tests exploit as a cross-check).

All three visit identical search trees and report identical node counts.

Budgets are expressed in nodes, not wall time, so a TIMEOUT verdict is
itself deterministic.
"""

from __future__ import annotations

import time
from bisect import bisect_left
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ParameterError
from .instances import Assignment, Instance, encode_tuple

__all__ = [
    "Status",
    "SolverConfig",
    "SolveResult",
    "check",
    "solve",
    "count_solutions",
    "brute_force_count",
]


class Status(Enum):
    SAT = "sat"
    UNSAT = "unsat"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class SolverConfig:
    """Search controls.

    node_budget bounds value-assignment attempts.  count_all switches to
    exhaustive counting; count_limit stops counting early (the result is
    then flagged partial).  use_compiled: None picks the compiled kernel
    when available and applicable, True insists on it, False forbids it.
    """

    node_budget: int = 100_000_000
    count_all: bool = False
    count_limit: int | None = None
    use_compiled: bool | None = None


@dataclass(frozen=True)
class SolveResult:
    status: Status
    count: int | None
    nodes: int
    elapsed_ms: float
    witness: Assignment | None = None
    partial: bool = False


def check(assignment: Assignment, instance: Instance) -> bool:
    """True iff no constraint's projection of the assignment is forbidden."""
    if len(assignment) != instance.n:
        raise ParameterError(
            f"assignment has {len(assignment)} values, instance has n={instance.n}"
        )
    d = instance.d
    for v in assignment:
        if not 0 <= v < d:
            raise ParameterError(f"assignment value {v} out of [0, {d})")
    for con in instance.constraints:
        code = encode_tuple((assignment[v] for v in con.scope), d)
        i = bisect_left(con.nogoods, code)
        if i < len(con.nogoods) and con.nogoods[i] == code:
            return False
    return True


# ---------------------------------------------------------------------------
# engines


_kernel_mod = None
_kernel_tried = False


def _load_kernel():
    global _kernel_mod, _kernel_tried
    if not _kernel_tried:
        _kernel_tried = True
        try:
            from . import _kernel

            _kernel_mod = _kernel
        except ImportError:
            _kernel_mod = None
    return _kernel_mod


def _binary_tables_py(inst: Instance):
    n, d = inst.n, inst.d
    full = (1 << d) - 1
    tables: list[dict[int, list[int]]] = [dict() for _ in range(n)]
    for con in inst.constraints:
        u, w = con.scope
        tu = tables[u].setdefault(w, [full] * d)
        tw = tables[w].setdefault(u, [full] * d)
        for code in con.nogoods:
            a, b = divmod(code, d)
            tu[a] &= ~(1 << b)
            tw[b] &= ~(1 << a)
    neighbors = [sorted(tables[v]) for v in range(n)]
    return tables, neighbors


def _run_binary_py(inst: Instance, budget: int, count_all: bool, count_limit: int):
    n, d = inst.n, inst.d
    tables, neighbors = _binary_tables_py(inst)
    full = (1 << d) - 1
    dom = [full] * n
    saved: list[list[int] | None] = [None] * n
    var_stack = [0] * n
    cand_stack = [0] * n
    val_stack = [0] * n
    assigned = [False] * n
    witness = None
    nodes = 0
    count = 0
    depth = 0
    var_stack[0] = 0
    cand_stack[0] = dom[0]
    assigned[0] = True
    while True:
        cand = cand_stack[depth]
        if cand == 0:
            assigned[var_stack[depth]] = False
            depth -= 1
            if depth < 0:
                return 0, count, nodes, witness
            dom = saved[depth][:]  # type: ignore[index]
            continue
        low = cand & -cand
        a = low.bit_length() - 1
        cand_stack[depth] = cand & (cand - 1)
        if nodes >= budget:
            return 2, count, nodes, witness
        nodes += 1
        v = var_stack[depth]
        val_stack[depth] = a
        saved[depth] = dom[:]
        dom[v] = low
        ok = True
        row = tables[v]
        for w in neighbors[v]:
            if not assigned[w]:
                nd = dom[w] & row[w][a]
                dom[w] = nd
                if nd == 0:
                    ok = False
                    break
        if not ok:
            dom = saved[depth][:]  # type: ignore[index]
            continue
        if depth + 1 == n:
            count += 1
            if witness is None:
                wit = [0] * n
                for i in range(n):
                    wit[var_stack[i]] = val_stack[i]
                witness = tuple(wit)
            if not count_all or (count_limit > 0 and count >= count_limit):
                return 1, count, nodes, witness
            dom = saved[depth][:]  # type: ignore[index]
            continue
        depth += 1
        best = -1
        bestc = 1 << 30
        for w in range(n):
            if not assigned[w]:
                c = dom[w].bit_count()
                if c < bestc:
                    bestc = c
                    best = w
        var_stack[depth] = best
        cand_stack[depth] = dom[best]
        assigned[best] = True


def _run_binary_compiled(
    inst: Instance, budget: int, count_all: bool, count_limit: int
):
    kernel = _load_kernel()
    n, d = inst.n, inst.d
    pair_mask = np.full((n, n, d), (1 << d) - 1, dtype=np.uint64)
    has_con = np.zeros((n, n), dtype=np.uint8)
    for con in inst.constraints:
        u, w = con.scope
        has_con[u, w] = 1
        has_con[w, u] = 1
        for code in con.nogoods:
            a, b = divmod(code, d)
            pair_mask[u, w, a] &= ~np.uint64(1 << b)
            pair_mask[w, u, b] &= ~np.uint64(1 << a)
    code, count, nodes, wit = kernel.solve_binary(
        n, d, pair_mask, has_con, budget, count_all, count_limit
    )
    witness = None
    if count > 0:
        witness = tuple(int(x) for x in wit)
    return int(code), int(count), int(nodes), witness


def _run_generic(inst: Instance, budget: int, count_all: bool, count_limit: int):
    n, d, k = inst.n, inst.d, inst.k
    t = inst.t
    scopes = [con.scope for con in inst.constraints]
    ngsets = [frozenset(con.nogoods) for con in inst.constraints]
    weights = [d ** (k - 1 - i) for i in range(k)]
    var2cons: list[list[int]] = [[] for _ in range(n)]
    for ci, scope in enumerate(scopes):
        for v in scope:
            var2cons[v].append(ci)
    unassigned_in = [k] * t
    values = [-1] * n

    full = (1 << d) - 1
    dom = [full] * n
    saved: list[list[int] | None] = [None] * n
    var_stack = [0] * n
    cand_stack = [0] * n
    val_stack = [0] * n
    assigned = [False] * n
    witness = None
    nodes = 0
    count = 0
    depth = 0
    var_stack[0] = 0
    cand_stack[0] = dom[0]
    assigned[0] = True

    def undo(v: int) -> None:
        values[v] = -1
        for ci in var2cons[v]:
            unassigned_in[ci] += 1

    while True:
        cand = cand_stack[depth]
        if cand == 0:
            assigned[var_stack[depth]] = False
            depth -= 1
            if depth < 0:
                return 0, count, nodes, witness
            dom = saved[depth][:]  # type: ignore[index]
            undo(var_stack[depth])
            continue
        low = cand & -cand
        a = low.bit_length() - 1
        cand_stack[depth] = cand & (cand - 1)
        if nodes >= budget:
            return 2, count, nodes, witness
        nodes += 1
        v = var_stack[depth]
        val_stack[depth] = a
        saved[depth] = dom[:]
        dom[v] = low
        values[v] = a
        ok = True
        for ci in var2cons[v]:
            unassigned_in[ci] -= 1
            if not ok or unassigned_in[ci] != 1:
                continue
            scope = scopes[ci]
            base = 0
            wvar = -1
            wweight = 0
            for pos, u in enumerate(scope):
                if values[u] >= 0:
                    base += values[u] * weights[pos]
                else:
                    wvar = u
                    wweight = weights[pos]
            ngs = ngsets[ci]
            m = dom[wvar]
            keep = 0
            while m:
                bit = m & -m
                m ^= bit
                if base + (bit.bit_length() - 1) * wweight not in ngs:
                    keep |= bit
            dom[wvar] = keep
            if keep == 0:
                ok = False
        if not ok:
            dom = saved[depth][:]  # type: ignore[index]
            undo(v)
            continue
        if depth + 1 == n:
            count += 1
            if witness is None:
                wit = [0] * n
                for i in range(n):
                    wit[var_stack[i]] = val_stack[i]
                witness = tuple(wit)
            if not count_all or (count_limit > 0 and count >= count_limit):
                return 1, count, nodes, witness
            dom = saved[depth][:]  # type: ignore[index]
            undo(v)
            continue
        depth += 1
        best = -1
        bestc = 1 << 30
        for w in range(n):
            if not assigned[w]:
                c = dom[w].bit_count()
                if c < bestc:
                    bestc = c
                    best = w
        var_stack[depth] = best
        cand_stack[depth] = dom[best]
        assigned[best] = True


def _dispatch(inst: Instance, cfg: SolverConfig):
    if inst.k == 2:
        want = cfg.use_compiled
        kern = _load_kernel() if want is not False else None
        if want is True:
            if kern is None:
                raise ParameterError("compiled kernel requested but numba is unavailable")
            if inst.d > 63:
                raise ParameterError("compiled kernel supports d <= 63")
            return _run_binary_compiled
        if kern is not None and inst.d <= 63:
            return _run_binary_compiled
        return _run_binary_py
    if cfg.use_compiled is True:
        raise ParameterError("compiled kernel only covers k = 2")
    return _run_generic


def solve(instance: Instance, config: SolverConfig | None = None) -> SolveResult:
    """Decide satisfiability, or count solutions when config.count_all is set."""
    cfg = config or SolverConfig()
    if cfg.node_budget < 1:
        raise ParameterError(f"node_budget must be >= 1, got {cfg.node_budget}")
    if cfg.count_limit is not None and cfg.count_limit < 1:
        raise ParameterError(f"count_limit must be >= 1, got {cfg.count_limit}")
    limit = cfg.count_limit or 0
    engine = _dispatch(instance, cfg)
    start = time.perf_counter()
    code, count, nodes, witness = engine(
        instance, cfg.node_budget, cfg.count_all, limit
    )
    elapsed_ms = (time.perf_counter() - start) * 1000.0

    if cfg.count_all:
        if code == 0:
            status = Status.SAT if count > 0 else Status.UNSAT
            partial = False
        elif code == 1:
            status = Status.SAT
            partial = True
        else:
            status = Status.SAT if count > 0 else Status.TIMEOUT
            partial = True
        result_count: int | None = count
    else:
        if code == 0:
            status = Status.UNSAT
        elif code == 1:
            status = Status.SAT
        else:
            status = Status.TIMEOUT
        result_count = None
        partial = False
    return SolveResult(
        status=status,
        count=result_count,
        nodes=nodes,
        elapsed_ms=elapsed_ms,
        witness=witness,
        partial=partial,
    )


def count_solutions(
    instance: Instance,
    limit: int | None = None,
    node_budget: int = 100_000_000,
    use_compiled: bool | None = None,
) -> SolveResult:
    """Exhaustively count satisfying assignments (early exit at limit)."""
    cfg = SolverConfig(
        node_budget=node_budget,
        count_all=True,
        count_limit=limit,
        use_compiled=use_compiled,
    )
    return solve(instance, cfg)


_digit_cache: dict[tuple[int, int], np.ndarray] = {}
_DIGIT_CACHE_MAX = 1 << 20


def _digits(n: int, d: int, total: int) -> np.ndarray | None:
    """(n, d^n) matrix of variable values per assignment code, cached."""
    if total > _DIGIT_CACHE_MAX:
        return None
    key = (n, d)
    got = _digit_cache.get(key)
    if got is None:
        codes = np.arange(total, dtype=np.int64)
        got = np.empty((n, total), dtype=np.int32)
        for v in range(n):
            got[v] = (codes // d ** (n - 1 - v)) % d
        if len(_digit_cache) > 8:
            _digit_cache.clear()
        _digit_cache[key] = got
    return got


def brute_force_count(instance: Instance) -> int:
    """Count satisfying assignments by enumerating all d^n of them.

    Vectorized over assignment codes; refuses d^n > 10^7.
    """
    n, d = instance.n, instance.d
    total = d**n
    if total > 10**7:
        raise ParameterError(f"d^n = {total} exceeds the 10^7 brute-force guard")
    digits = _digits(n, d, total)
    ok = np.ones(total, dtype=bool)
    for con in instance.constraints:
        if digits is not None:
            sc = digits[con.scope[0]].astype(np.int64)
            for v in con.scope[1:]:
                sc = sc * d + digits[v]
        else:
            codes = np.arange(total, dtype=np.int64)
            sc = (codes // d ** (n - 1 - con.scope[0])) % d
            for v in con.scope[1:]:
                sc = sc * d + (codes // d ** (n - 1 - v)) % d
        bad = np.zeros(d**instance.k, dtype=bool)
        bad[list(con.nogoods)] = True
        ok &= ~bad[sc]
    return int(ok.sum())
