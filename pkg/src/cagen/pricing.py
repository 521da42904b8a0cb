"""Pricing: find the test configuration with the largest dual-weighted coverage.

Depth-first branch-and-bound over parameters.  For every combination the dual
weights are held as a t-dimensional array whose axes follow the branching
order; pre-reducing it with ``max`` over the trailing axes gives, for any
partial assignment, the best weight still reachable inside that combination.
The sum of those maxima bounds every completion of the node.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, InvalidArgumentError
from .model import CAInstance, TestConfig, bit_indices, coverage_pattern

EXHAUSTIVE_CAP = 10**6


@dataclass(frozen=True)
class PricingResult:
    test: TestConfig
    objective: float
    reduced_cost: float
    nodes_explored: int


def pattern_weight(instance: CAInstance, test, duals) -> float:
    duals = np.asarray(duals, dtype=float)
    return float(duals[bit_indices(coverage_pattern(instance, test))].sum())


class Pricer:
    """Reusable pricing oracle for one instance.

    ``tie_break="marginal"`` tries values by decreasing bound (lowest index on
    ties); ``"lex"`` tries them in index order, so among equal maxima the
    lexicographically smallest test (in branching order) is returned.
    """

    def __init__(self, instance: CAInstance):
        self.instance = instance
        k = instance.k
        self.order = sorted(range(k), key=lambda i: (-instance.domains[i], i))
        self.depth_of = {p: d for d, p in enumerate(self.order)}
        # per combination: axis permutation into branching order
        self._perm = []
        self._touch: list[list[tuple[int, int]]] = [[] for _ in range(k)]
        for ci, combo in enumerate(instance.combinations):
            perm = sorted(range(len(combo)), key=lambda j: self.depth_of[combo[j]])
            self._perm.append(perm)
            for r, j in enumerate(perm):
                self._touch[combo[j]].append((ci, r))
        # forbidden patterns are checked when their deepest parameter is set
        self._forbidden_at: list[list[tuple[tuple[int, int], ...]]] = [[] for _ in range(k)]
        for pattern in instance.forbidden:
            last = max(pattern, key=lambda pv: self.depth_of[pv[0]])[0]
            self._forbidden_at[last].append(pattern)

    def _tables(self, duals: np.ndarray) -> list[list[np.ndarray]]:
        inst = self.instance
        tables = []
        for combo, offset, size, perm in zip(
            inst.combinations, inst.offsets, inst.combination_sizes, self._perm
        ):
            w = duals[offset: offset + size].reshape([inst.domains[i] for i in combo])
            w = np.transpose(w, perm)
            levels = [w]
            for axis in range(w.ndim - 1, -1, -1):
                levels.append(levels[-1].max(axis=axis))
            levels.reverse()  # levels[r] has the first r axes left
            tables.append(levels)
        return tables

    def price(self, duals, epsilon: float = 1e-6, tie_break: str = "marginal") -> PricingResult:
        inst = self.instance
        duals = np.asarray(duals, dtype=float)
        if duals.shape != (inst.num_interactions,):
            raise InvalidArgumentError(
                f"dual vector has shape {duals.shape}, expected ({inst.num_interactions},)"
            )
        if tie_break not in ("marginal", "lex"):
            raise InvalidArgumentError(f"unknown tie_break {tie_break!r}")
        tables = self._tables(duals)
        ncomb = len(tables)
        contrib = [float(tables[c][0]) for c in range(ncomb)]
        prefix: list[tuple[int, ...]] = [()] * ncomb
        assignment = [-1] * inst.k
        best_value = -np.inf
        best_test: list[int] | None = None
        nodes = 0
        slack = 1e-12
        order = self.order

        def search(depth: int, total: float):
            nonlocal best_value, best_test, nodes
            nodes += 1
            if depth == inst.k:
                if total > best_value + slack or best_test is None:
                    best_value = total
                    best_test = list(assignment)
                return
            q = order[depth]
            touched = self._touch[q]
            child = np.full(inst.domains[q], total)
            for ci, r in touched:
                child += tables[ci][r + 1][prefix[ci]] - contrib[ci]
            if tie_break == "lex":
                values = range(inst.domains[q])
            else:
                values = np.argsort(-child, kind="stable")
            for v in values:
                v = int(v)
                bound = float(child[v])
                if best_test is not None and bound <= best_value + slack:
                    if tie_break == "lex":
                        continue
                    break
                assignment[q] = v
                if any(all(assignment[p] == val for p, val in pat) for pat in self._forbidden_at[q]):
                    assignment[q] = -1
                    continue
                saved = [(ci, contrib[ci], prefix[ci]) for ci, _ in touched]
                for ci, r in touched:
                    prefix[ci] = prefix[ci] + (v,)
                    contrib[ci] = float(tables[ci][r + 1][prefix[ci]])
                search(depth + 1, bound)
                for ci, c_old, p_old in saved:
                    contrib[ci] = c_old
                    prefix[ci] = p_old
                assignment[q] = -1

        search(0, float(sum(contrib)))
        if best_test is None:
            raise InfeasibleError("every complete assignment violates a forbidden pattern")
        test = tuple(best_test)
        objective = pattern_weight(inst, test, duals)
        return PricingResult(test, objective, 1.0 - objective, nodes)

    def enumerate_at_least(self, duals, threshold: float, limit: int = 4096) -> list[TestConfig]:
        """Valid tests whose dual-weighted coverage is >= ``threshold``, best first.

        At most ``limit`` tests are returned; the search aborts (keeping what it
        found) after visiting ``64 * limit`` nodes.
        """
        inst = self.instance
        duals = np.asarray(duals, dtype=float)
        tables = self._tables(duals)
        contrib = [float(tables[c][0]) for c in range(len(tables))]
        prefix: list[tuple[int, ...]] = [()] * len(tables)
        assignment = [-1] * inst.k
        found: list[tuple[float, TestConfig]] = []
        nodes = 0
        node_cap = 64 * limit

        def search(depth: int, total: float) -> bool:
            nonlocal nodes
            nodes += 1
            if nodes > node_cap:
                return False
            if depth == inst.k:
                found.append((total, tuple(assignment)))
                return True
            q = self.order[depth]
            touched = self._touch[q]
            child = np.full(inst.domains[q], total)
            for ci, r in touched:
                child += tables[ci][r + 1][prefix[ci]] - contrib[ci]
            for v in range(inst.domains[q]):
                if child[v] < threshold - 1e-12:
                    continue
                assignment[q] = v
                if any(all(assignment[p] == val for p, val in pat) for pat in self._forbidden_at[q]):
                    assignment[q] = -1
                    continue
                saved = [(ci, contrib[ci], prefix[ci]) for ci, _ in touched]
                for ci, r in touched:
                    prefix[ci] = prefix[ci] + (v,)
                    contrib[ci] = float(tables[ci][r + 1][prefix[ci]])
                ok = search(depth + 1, float(child[v]))
                for ci, c_old, p_old in saved:
                    contrib[ci] = c_old
                    prefix[ci] = p_old
                assignment[q] = -1
                if not ok:
                    return False
            return True

        search(0, float(sum(contrib)))
        found.sort(key=lambda item: (-item[0], item[1]))
        return [test for _, test in found[:limit]]


def price(instance: CAInstance, duals, epsilon: float = 1e-6) -> PricingResult:
    """Best test for ``duals``; the column improves the LP iff objective > 1 + epsilon."""
    return Pricer(instance).price(duals, epsilon)


def price_exhaustive(instance: CAInstance, duals, cap: int = EXHAUSTIVE_CAP) -> PricingResult:
    """Brute-force pricing over every valid test; testing oracle for ``price``."""
    duals = np.asarray(duals, dtype=float)
    if duals.shape != (instance.num_interactions,):
        raise InvalidArgumentError("dual vector length must equal the number of interactions")
    size = instance.exhaustive_size
    if size > cap:
        raise InvalidArgumentError(f"search space {size} exceeds exhaustive cap {cap}")
    grids = np.indices(instance.domains).reshape(instance.k, -1).T  # lexicographic
    scores = np.zeros(len(grids))
    for combo, offset, size_c in zip(instance.combinations, instance.offsets, instance.combination_sizes):
        rank = np.zeros(len(grids), dtype=np.int64)
        for param in combo:
            rank = rank * instance.domains[param] + grids[:, param]
        scores += duals[offset + rank]
    valid = np.ones(len(grids), dtype=bool)
    for pattern in instance.forbidden:
        hit = np.ones(len(grids), dtype=bool)
        for p, v in pattern:
            hit &= grids[:, p] == v
        valid &= ~hit
    if not valid.any():
        raise InfeasibleError("every complete assignment violates a forbidden pattern")
    scores[~valid] = -np.inf
    best = int(np.argmax(scores))
    test = tuple(int(v) for v in grids[best])
    objective = float(scores[best])
    return PricingResult(test, objective, 1.0 - objective, int(valid.sum()))
