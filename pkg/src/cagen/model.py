"""Covering-array instances, interaction indexing and coverage patterns.

Interactions are indexed canonically: combinations in lexicographic order of
their parameter tuples, and inside one combination the value tuple is ranked
mixed-radix with the first parameter as the most significant digit.  A
coverage pattern is a Python ``int`` used as a bitset over ``[0, P)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

from .errors import InvalidArgumentError, InvalidInstanceError, InvalidSolutionError

# A test configuration is a full assignment, one value index per parameter.
TestConfig = tuple[int, ...]
ForbiddenPattern = tuple[tuple[int, int], ...]


class Interaction(NamedTuple):
    combination: tuple[int, ...]
    values: tuple[int, ...]


def enumerate_combinations(k: int, t: int) -> list[tuple[int, ...]]:
    """All t-subsets of ``range(k)`` in lexicographic order."""
    if not (1 <= t <= k):
        raise InvalidInstanceError(f"strength t={t} must satisfy 1 <= t <= k={k}")
    return list(itertools.combinations(range(k), t))


@dataclass(frozen=True)
class CAInstance:
    strength: int
    domains: tuple[int, ...]
    parameter_names: tuple[str, ...] | None = None
    value_names: tuple[tuple[str, ...], ...] | None = None
    forbidden: tuple[ForbiddenPattern, ...] = field(default=())

    def __post_init__(self):
        domains = tuple(int(v) for v in self.domains)
        object.__setattr__(self, "domains", domains)
        k = len(domains)
        if any(v < 1 for v in domains):
            raise InvalidInstanceError(f"every domain size must be >= 1, got {domains}")
        if not (1 <= self.strength <= k):
            raise InvalidInstanceError(
                f"strength t={self.strength} must satisfy 1 <= t <= k={k}"
            )
        if self.parameter_names is not None:
            names = tuple(self.parameter_names)
            if len(names) != k:
                raise InvalidInstanceError("parameter_names must have one entry per parameter")
            object.__setattr__(self, "parameter_names", names)
        if self.value_names is not None:
            vnames = tuple(tuple(vs) for vs in self.value_names)
            if len(vnames) != k:
                raise InvalidInstanceError("value_names must have one list per parameter")
            for i, vs in enumerate(vnames):
                if len(vs) != domains[i]:
                    raise InvalidInstanceError(
                        f"value_names[{i}] has {len(vs)} entries, domain size is {domains[i]}"
                    )
            object.__setattr__(self, "value_names", vnames)
        patterns = []
        for pattern in self.forbidden:
            pairs = tuple(sorted((int(p), int(v)) for p, v in pattern))
            if not pairs:
                raise InvalidInstanceError("forbidden pattern must not be empty")
            params = [p for p, _ in pairs]
            if len(set(params)) != len(params):
                raise InvalidInstanceError(f"forbidden pattern {pairs} repeats a parameter")
            for p, v in pairs:
                if not (0 <= p < k) or not (0 <= v < domains[p]):
                    raise InvalidInstanceError(f"forbidden pattern {pairs} is out of range")
            if pairs not in patterns:
                patterns.append(pairs)
        object.__setattr__(self, "forbidden", tuple(patterns))

    @property
    def k(self) -> int:
        return len(self.domains)

    @cached_property
    def combinations(self) -> list[tuple[int, ...]]:
        return enumerate_combinations(self.k, self.strength)

    @cached_property
    def combination_sizes(self) -> list[int]:
        return [math.prod(self.domains[i] for i in c) for c in self.combinations]

    @cached_property
    def offsets(self) -> list[int]:
        return list(itertools.accumulate(self.combination_sizes, initial=0))[:-1]

    @cached_property
    def num_interactions(self) -> int:
        return sum(self.combination_sizes)

    @cached_property
    def _combination_position(self) -> dict[tuple[int, ...], int]:
        return {c: i for i, c in enumerate(self.combinations)}

    @cached_property
    def _strides(self) -> list[tuple[int, ...]]:
        strides = []
        for c in self.combinations:
            s, acc = [], 1
            for i in reversed(c):
                s.append(acc)
                acc *= self.domains[i]
            strides.append(tuple(reversed(s)))
        return strides

    @cached_property
    def exhaustive_size(self) -> int:
        return math.prod(self.domains)

    @cached_property
    def exempt_rows(self) -> frozenset[int]:
        """Interactions no valid test can cover; empty without forbidden patterns."""
        if not self.forbidden:
            return frozenset()
        exempt = set()
        for p in range(self.num_interactions):
            inter = interaction_from_index(self, p)
            partial = dict(zip(inter.combination, inter.values))
            if not _extendable(self, partial):
                exempt.add(p)
        return frozenset(exempt)

    @cached_property
    def required_mask(self) -> int:
        full = (1 << self.num_interactions) - 1
        for p in self.exempt_rows:
            full &= ~(1 << p)
        return full

    def value_label(self, param: int, value: int) -> str:
        if self.value_names is not None:
            return self.value_names[param][value]
        return str(value)

    def param_label(self, param: int) -> str:
        if self.parameter_names is not None:
            return self.parameter_names[param]
        return f"p{param}"


def uniform_instance(t: int, k: int, g: int) -> CAInstance:
    """CA(t, k, g): k parameters over a common alphabet of size g."""
    return CAInstance(strength=t, domains=(g,) * k)


def count_interactions(instance: CAInstance) -> tuple[int, list[int]]:
    """Return ``(P, [p_c for each combination])``; forbidden rows are still counted."""
    return instance.num_interactions, list(instance.combination_sizes)


def interaction_index(instance: CAInstance, interaction: Interaction) -> int:
    combo = tuple(interaction.combination)
    values = tuple(interaction.values)
    pos = instance._combination_position.get(combo)
    if pos is None or len(values) != len(combo):
        raise InvalidArgumentError(f"malformed interaction {interaction!r}")
    rank = 0
    for param, val, stride in zip(combo, values, instance._strides[pos]):
        if not (0 <= val < instance.domains[param]):
            raise InvalidArgumentError(f"value {val} out of range for parameter {param}")
        rank += val * stride
    return instance.offsets[pos] + rank


def interaction_from_index(instance: CAInstance, index: int) -> Interaction:
    if not (0 <= index < instance.num_interactions):
        raise InvalidArgumentError(f"interaction index {index} outside [0, {instance.num_interactions})")
    offsets = instance.offsets
    # bisect over offsets
    lo, hi = 0, len(offsets) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if offsets[mid] <= index:
            lo = mid
        else:
            hi = mid - 1
    combo = instance.combinations[lo]
    rank = index - offsets[lo]
    values = []
    for stride in instance._strides[lo]:
        values.append(rank // stride)
        rank %= stride
    return Interaction(combo, tuple(values))


def validate_test(instance: CAInstance, test: Sequence[int]) -> TestConfig:
    test = tuple(int(v) for v in test)
    if len(test) != instance.k:
        raise InvalidArgumentError(f"test {test} has length {len(test)}, expected {instance.k}")
    for i, v in enumerate(test):
        if not (0 <= v < instance.domains[i]):
            raise InvalidArgumentError(f"test {test}: value {v} outside domain of parameter {i}")
    return test


def violated_pattern(instance: CAInstance, test: Sequence[int]) -> ForbiddenPattern | None:
    """First forbidden pattern contained in ``test`` (full or partial), else None."""
    for pattern in instance.forbidden:
        if all(p < len(test) and test[p] == v for p, v in pattern):
            return pattern
    return None


def _violates_partial(instance: CAInstance, partial: dict[int, int]) -> bool:
    for pattern in instance.forbidden:
        if all(partial.get(p) == v for p, v in pattern):
            return True
    return False


def _extendable(instance: CAInstance, partial: dict[int, int]) -> bool:
    """Whether ``partial`` completes to a full test avoiding every forbidden pattern."""
    if _violates_partial(instance, partial):
        return False
    free = [i for i in range(instance.k) if i not in partial]
    relevant = {p for pattern in instance.forbidden for p, _ in pattern}
    # parameters outside every forbidden pattern never cause a violation
    free = [i for i in free if i in relevant]

    def dfs(depth: int) -> bool:
        if depth == len(free):
            return True
        param = free[depth]
        for v in range(instance.domains[param]):
            partial[param] = v
            if not _violates_partial(instance, partial) and dfs(depth + 1):
                del partial[param]
                return True
            del partial[param]
        return False

    return dfs(0)


def coverage_pattern(instance: CAInstance, test: Sequence[int]) -> int:
    """Bitset of the interactions covered by ``test``."""
    bits = 0
    for combo, offset, strides in zip(instance.combinations, instance.offsets, instance._strides):
        rank = 0
        for param, stride in zip(combo, strides):
            rank += test[param] * stride
        bits |= 1 << (offset + rank)
    return bits


def popcount(bits: int) -> int:
    return bin(bits).count("1")


def bit_indices(bits: int) -> list[int]:
    out = []
    while bits:
        low = bits & -bits
        out.append(low.bit_length() - 1)
        bits ^= low
    return out


@dataclass(frozen=True)
class Verdict:
    covering: bool
    uncovered: list[int]

    def __bool__(self):
        return self.covering


def verify_covering_array(instance: CAInstance, tests: Iterable[Sequence[int]]) -> Verdict:
    """Check that ``tests`` cover every non-exempt interaction.

    Raises InvalidSolutionError when a test contains a forbidden pattern.
    """
    covered = 0
    for row, test in enumerate(tests):
        test = validate_test(instance, test)
        bad = violated_pattern(instance, test)
        if bad is not None:
            raise InvalidSolutionError(
                f"test #{row} {list(test)} contains forbidden pattern {list(bad)}"
            )
        covered |= coverage_pattern(instance, test)
    missing = instance.required_mask & ~covered
    uncovered = bit_indices(missing)
    return Verdict(not uncovered, uncovered)


def all_tests(instance: CAInstance) -> Iterable[TestConfig]:
    """Every full assignment in lexicographic order, forbidden ones included."""
    return itertools.product(*(range(v) for v in instance.domains))


def valid_tests(instance: CAInstance) -> Iterable[TestConfig]:
    for test in all_tests(instance):
        if violated_pattern(instance, test) is None:
            yield test


# The running example: five two-valued components, pairwise coverage.
RUNNING_EXAMPLE_PARAMETERS = (
    ("Operating System", ("Windows", "MacOS")),
    ("Browser", ("Explorer", "Firefox")),
    ("Protocol", ("IPv4", "IPv6")),
    ("CPU", ("Intel", "AMD")),
    ("DBMS", ("Oracle DB", "MySQL")),
)

RUNNING_EXAMPLE_SUITE: list[TestConfig] = [
    (0, 0, 0, 0, 0),
    (0, 0, 0, 1, 1),
    (0, 0, 1, 0, 1),
    (0, 1, 0, 0, 1),
    (1, 0, 0, 0, 1),
    (1, 1, 1, 1, 0),
]


def running_example(forbidden: Iterable[ForbiddenPattern] = ()) -> CAInstance:
    return CAInstance(
        strength=2,
        domains=tuple(len(vs) for _, vs in RUNNING_EXAMPLE_PARAMETERS),
        parameter_names=tuple(n for n, _ in RUNNING_EXAMPLE_PARAMETERS),
        value_names=tuple(vs for _, vs in RUNNING_EXAMPLE_PARAMETERS),
        forbidden=tuple(forbidden),
    )
