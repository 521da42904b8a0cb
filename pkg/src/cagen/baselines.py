"""Reference constructions: a density greedy and an exact CAN search for tiny instances."""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import InfeasibleError, InvalidArgumentError
from .model import (
    CAInstance,
    TestConfig,
    _extendable,
    bit_indices,
    coverage_pattern,
    interaction_from_index,
    popcount,
    valid_tests,
)

ORACLE_SPACE_CAP = 64


@dataclass
class GreedyResult:
    tests: list[TestConfig]
    per_test_new_coverage: list[int]


def _partial_violation(instance: CAInstance, assignment: list[int]) -> bool:
    for pattern in instance.forbidden:
        if all(assignment[p] == v for p, v in pattern):
            return True
    return False


def _marginal_gain(instance: CAInstance, assignment: list[int], param: int, value: int, uncovered: int) -> int:
    gain = 0
    for combo, offset, strides in zip(instance.combinations, instance.offsets, instance._strides):
        if param not in combo:
            continue
        rank = 0
        for p, stride in zip(combo, strides):
            v = value if p == param else assignment[p]
            if v < 0:
                break
            rank += v * stride
        else:
            gain += (uncovered >> (offset + rank)) & 1
    return gain


def _greedy_row(instance: CAInstance, uncovered: int, rng: random.Random) -> TestConfig | None:
    seed_row = bit_indices(uncovered & -uncovered)[0]
    inter = interaction_from_index(instance, seed_row)
    assignment = [-1] * instance.k
    for p, v in zip(inter.combination, inter.values):
        assignment[p] = v
    free = [p for p in range(instance.k) if assignment[p] < 0]
    rng.shuffle(free)

    def fill(i: int) -> bool:
        if i == len(free):
            return True
        q = free[i]
        gains = [(-_marginal_gain(instance, assignment, q, v, uncovered), v) for v in range(instance.domains[q])]
        for _, v in sorted(gains):
            assignment[q] = v
            if not _partial_violation(instance, assignment) and fill(i + 1):
                return True
            assignment[q] = -1
        return False

    if _partial_violation(instance, assignment) or not fill(0):
        return None
    return tuple(assignment)


def greedy_construct(instance: CAInstance, seed: int = 0) -> GreedyResult:
    """One-test-at-a-time density greedy.

    Each row starts from the lowest-index uncovered interaction; the remaining
    parameters are visited in a seeded random order and take the value that
    completes the most uncovered interactions (lowest value on ties).
    """
    if not _extendable(instance, {}):
        raise InfeasibleError("every complete assignment violates a forbidden pattern")
    rng = random.Random(seed)
    uncovered = instance.required_mask
    tests, gains = [], []
    while uncovered:
        test = _greedy_row(instance, uncovered, rng)
        if test is None:
            row = bit_indices(uncovered & -uncovered)[0]
            raise InfeasibleError(
                f"interaction {interaction_from_index(instance, row)} cannot be placed in any valid test"
            )
        new = coverage_pattern(instance, test) & uncovered
        tests.append(test)
        gains.append(popcount(new))
        uncovered &= ~new
    return GreedyResult(tests, gains)


def combination_lower_bound(instance: CAInstance) -> int:
    """Largest number of required tuples inside one combination."""
    required = instance.required_mask
    best = 0
    for offset, size in zip(instance.offsets, instance.combination_sizes):
        block = (required >> offset) & ((1 << size) - 1)
        best = max(best, popcount(block))
    return best


@dataclass
class OracleResult:
    can: int | None  # None when the cap was hit before a cover was found
    witness: list[TestConfig] = field(default_factory=list)
    lower_bound: int = 0
    nodes: int = 0

    @property
    def solved(self) -> bool:
        return self.can is not None


def exact_can_oracle(instance: CAInstance, cap: int = 16, space_cap: int = ORACLE_SPACE_CAP) -> OracleResult:
    """Minimum covering-array size by iterative deepening over sets of rows.

    Rows are chosen in strictly increasing lexicographic order, which removes
    row-permutation symmetry; repeated rows never shorten a cover so sets
    suffice.  If no cover of size <= ``cap`` exists the result carries
    ``can=None`` and the proven lower bound ``cap + 1``.
    """
    if instance.exhaustive_size > space_cap:
        raise InvalidArgumentError(
            f"oracle is limited to {space_cap} candidate tests, instance has {instance.exhaustive_size}"
        )
    tests = list(valid_tests(instance))
    patterns = [coverage_pattern(instance, t) for t in tests]
    required = instance.required_mask
    n = len(tests)
    suffix = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] | patterns[i]
    if required & ~suffix[0]:
        raise InfeasibleError("some required interaction is not covered by any valid test")
    blocks = [
        ((1 << size) - 1) << offset
        for offset, size in zip(instance.offsets, instance.combination_sizes)
    ]
    lb = combination_lower_bound(instance)
    nodes = 0
    chosen: list[int] = []

    def search(start: int, uncovered: int, rows_left: int) -> bool:
        nonlocal nodes
        nodes += 1
        if not uncovered:
            return True
        if rows_left == 0:
            return False
        if uncovered & ~suffix[start]:
            return False
        for block in blocks:
            if popcount(uncovered & block) > rows_left:
                return False
        for i in range(start, n):
            if uncovered & ~suffix[i]:
                break
            if not patterns[i] & uncovered:
                continue
            chosen.append(i)
            if search(i + 1, uncovered & ~patterns[i], rows_left - 1):
                return True
            chosen.pop()
        return False

    for b in range(max(lb, 0), cap + 1):
        chosen.clear()
        if search(0, required, b):
            return OracleResult(b, [tests[i] for i in chosen], b, nodes)
    return OracleResult(None, [], cap + 1, nodes)

