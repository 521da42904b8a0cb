"""Per-test coverage contribution and test-reduction figures."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

from .model import CAInstance, coverage_pattern, popcount, validate_test


@dataclass
class AnalysisReport:
    per_test_increment_pct: list[float]
    cumulative_pct: list[float]
    reduction_pct: float
    new_interactions: list[int] = field(default_factory=list)
    redundant_tests: list[int] = field(default_factory=list)
    covering: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def analyze(instance: CAInstance, tests: Sequence[Sequence[int]]) -> AnalysisReport:
    """Order-sensitive coverage ledger of a suite.

    Increment i is the share of required interactions first covered by test
    i.  Tests with a zero increment are listed as redundant.
    """
    required = instance.required_mask
    total = popcount(required)
    covered = 0
    increments, cumulative, counts, redundant = [], [], [], []
    for i, test in enumerate(tests):
        test = validate_test(instance, test)
        new = coverage_pattern(instance, test) & required & ~covered
        covered |= new
        n_new = popcount(new)
        counts.append(n_new)
        if n_new == 0:
            redundant.append(i)
        pct = 100.0 * n_new / total if total else 0.0
        increments.append(pct)
        # cumulative from integer counts, so a full cover ends at exactly 100
        cumulative.append(100.0 * popcount(covered) / total if total else 100.0)
    reduction = 100.0 * (1.0 - len(tests) / instance.exhaustive_size)
    return AnalysisReport(
        per_test_increment_pct=increments,
        cumulative_pct=cumulative,
        reduction_pct=reduction,
        new_interactions=counts,
        redundant_tests=redundant,
        covering=covered == required,
    )
