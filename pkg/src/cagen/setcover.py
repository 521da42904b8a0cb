"""Exact unicost set cover by branch-and-bound over a fixed column pool."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .master import GENERATED, Column, RestrictedMaster
from .model import bit_indices, popcount


@dataclass
class CoverResult:
    selected: list[int]  # indices into the input pattern list
    proven_optimal: bool
    nodes: int
    lower_bound: int


class _Stop(Exception):
    pass


def greedy_cover(patterns: list[int], required: int) -> list[int] | None:
    uncovered = required
    chosen = []
    while uncovered:
        best, gain = -1, 0
        for j, pat in enumerate(patterns):
            g = popcount(pat & uncovered)
            if g > gain:
                best, gain = j, g
        if best < 0:
            return None
        chosen.append(best)
        uncovered &= ~patterns[best]
    return drop_redundant(patterns, required, chosen)


def drop_redundant(patterns: list[int], required: int, chosen: list[int]) -> list[int]:
    """Remove selected columns whose rows the others already cover (last first)."""
    kept = list(chosen)
    for j in reversed(chosen):
        rest = 0
        for i in kept:
            if i != j:
                rest |= patterns[i]
        if required & ~rest == 0:
            kept.remove(j)
    return kept


def solve_unicost_cover(
    patterns: list[int],
    required: int,
    node_limit: int = 200_000,
    deadline: float | None = None,
    tolerance: float = 1e-6,
    lp_bounds: bool = True,
    stop_at: int = 0,
) -> CoverResult | None:
    """Minimum number of patterns covering ``required``.

    Rows are branched on: the uncovered row with the fewest candidate
    columns is covered by each candidate in turn, earlier siblings being
    excluded from later subtrees.  Nodes are bounded by a disjoint-row packing
    and, when that fails to prune, by the LP relaxation.  Returns None when
    the pool cannot cover ``required``.  The search ends early once the
    incumbent reaches ``stop_at``, a lower bound known to the caller.
    """
    union = 0
    for pat in patterns:
        union |= pat
    if required & ~union:
        return None
    # dedupe and drop dominated columns
    order = sorted(range(len(patterns)), key=lambda j: (-popcount(patterns[j] & required), j))
    kept: list[int] = []
    for j in order:
        pj = patterns[j] & required
        if pj == 0 or any(pj & ~(patterns[i] & required) == 0 for i in kept):
            continue
        kept.append(j)
    pats = [patterns[j] & required for j in kept]
    n = len(pats)
    rows = bit_indices(required)
    row_cols: dict[int, int] = {}
    for r in rows:
        mask = 0
        for j, pat in enumerate(pats):
            if (pat >> r) & 1:
                mask |= 1 << j
        row_cols[r] = mask

    best = greedy_cover(pats, required) or list(range(n))
    best_len = len(best)
    nodes = 0
    num_rows = max(rows) + 1 if rows else 0

    def packing_bound(uncovered: int, allowed: int) -> int:
        cand = sorted(
            ((popcount(row_cols[r] & allowed), r) for r in bit_indices(uncovered)),
        )
        used = 0
        count = 0
        for _, r in cand:
            cols = row_cols[r] & allowed
            if cols & used == 0:
                used |= cols
                count += 1
        return count

    def lp_bound(uncovered: int, allowed: int) -> tuple[float, dict[int, float]]:
        cols = [j for j in bit_indices(allowed) if pats[j] & uncovered]
        exempt = frozenset(range(num_rows)) - frozenset(bit_indices(uncovered))
        rm = RestrictedMaster(num_rows, exempt, tolerance)
        rm.add_columns(Column(pats[j] & uncovered, 1.0, GENERATED, ()) for j in cols)
        sol = rm.solve(deadline=deadline)
        if not sol.optimal:
            raise _Stop
        return sol.objective, {j: float(sol.primal[i]) for i, j in enumerate(cols)}

    root_lb = 0

    def dfs(uncovered: int, allowed: int, chosen: list[int], depth: int):
        nonlocal best, best_len, nodes, root_lb
        nodes += 1
        if nodes > node_limit or (deadline is not None and time.perf_counter() > deadline):
            raise _Stop
        if best_len <= stop_at:
            raise _Stop
        if not uncovered:
            if len(chosen) < best_len:
                best, best_len = list(chosen), len(chosen)
            return
        for r in bit_indices(uncovered):
            if row_cols[r] & allowed == 0:
                return
        lb = packing_bound(uncovered, allowed)
        xlp: dict[int, float] = {}
        if len(chosen) + lb < best_len and lp_bounds:
            z, xlp = lp_bound(uncovered, allowed)
            lb = max(lb, math.ceil(z - tolerance))
            if all(abs(v - round(v)) <= tolerance for v in xlp.values()):
                sel = [j for j, v in xlp.items() if v > 0.5]
                if len(chosen) + len(sel) < best_len:
                    best, best_len = chosen + sel, len(chosen) + len(sel)
        if depth == 0:
            root_lb = lb
        if len(chosen) + lb >= best_len:
            return
        # branch on the hardest row
        branch_row = min(bit_indices(uncovered), key=lambda r: (popcount(row_cols[r] & allowed), r))
        cands = bit_indices(row_cols[branch_row] & allowed)
        if not cands:
            return
        cands.sort(key=lambda j: (-xlp.get(j, 0.0), -popcount(pats[j] & uncovered), j))
        excluded = 0
        for j in cands:
            chosen.append(j)
            dfs(uncovered & ~pats[j], allowed & ~excluded & ~(1 << j), chosen, depth + 1)
            chosen.pop()
            excluded |= 1 << j
            if len(chosen) + 1 >= best_len:
                return

    proven = True
    try:
        dfs(required, (1 << n) - 1, [], 0)
    except _Stop:
        proven = best_len <= stop_at
    if proven:
        root_lb = best_len
    return CoverResult([kept[j] for j in best], proven, nodes, root_lb)

