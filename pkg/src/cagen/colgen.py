"""Column generation driver: master LP and pricing alternate until LP optimality,
then the integer cover is solved over the generated pool.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .baselines import combination_lower_bound, greedy_construct
from .errors import InvalidArgumentError, SolverError
from .master import ARTIFICIAL, GENERATED, WARM_START, Column, RestrictedMaster
from .model import CAInstance, TestConfig, bit_indices, coverage_pattern, verify_covering_array
from .pricing import Pricer
from .setcover import greedy_cover, solve_unicost_cover

log = logging.getLogger(__name__)

STALL_ITERATIONS = 50


@dataclass
class CGConfig:
    time_limit_seconds: float = 60.0
    tolerance: float = 1e-6
    columns_per_iteration: int = 1
    warm_start: str = "greedy"  # "none" | "greedy"
    big_m: float | None = None  # None means P + 1
    ip_node_limit: int = 2000
    seed: int = 0
    enrich_pool: bool = False
    enrich_limit: int = 4096

    def __post_init__(self):
        if self.time_limit_seconds <= 0 or self.tolerance <= 0 or self.ip_node_limit <= 0:
            raise InvalidArgumentError("limits and tolerance must be positive")
        if self.columns_per_iteration < 1:
            raise InvalidArgumentError("columns_per_iteration must be >= 1")
        if self.warm_start not in ("none", "greedy"):
            raise InvalidArgumentError(f"unknown warm_start {self.warm_start!r}")
        if self.big_m is not None and self.big_m <= 0:
            raise InvalidArgumentError("big_m must be positive")


@dataclass(frozen=True)
class CGEvent:
    iteration: int
    lp_objective: float
    pricing_objective: float
    pool_size: int
    elapsed: float


@dataclass
class CGResult:
    tests: list[TestConfig]
    lp_bound: float
    ip_objective: int
    lp_optimal: bool
    iterations: int
    columns_generated: int
    wall_time: float
    lower_bound: int = 0
    greedy_size: int | None = None
    lp_history: list[float] = field(default_factory=list)
    pool_size: int = 0
    enriched_columns: int = 0
    ip_proven: bool = False
    final_duals: np.ndarray | None = field(default=None, repr=False)
    artificial_weight: float = 0.0

    @property
    def optimal(self) -> bool:
        """LP optimal and the integer cover meets the rounded-up LP bound."""
        return self.lp_optimal and self.ip_objective == math.ceil(self.lp_bound - 1e-6)


def init_artificial_columns(instance: CAInstance, big_m: float | None = None) -> list[Column]:
    """One big-M singleton column per required interaction."""
    if big_m is None:
        big_m = instance.num_interactions + 1
    exempt = instance.exempt_rows
    return [
        Column(1 << p, float(big_m), ARTIFICIAL)
        for p in range(instance.num_interactions)
        if p not in exempt
    ]


def lower_bound(instance: CAInstance, lp_bound: float | None = None, tolerance: float = 1e-6) -> int:
    """Any cover needs a distinct row per required tuple of one combination; ceil(LP) may improve that."""
    lb = combination_lower_bound(instance)
    if lp_bound is not None:
        lb = max(lb, math.ceil(lp_bound - tolerance))
    return lb


def finalize_ip(
    columns: Sequence[Column],
    exempt_rows,
    config: CGConfig | None = None,
    num_interactions: int | None = None,
    deadline: float | None = None,
    known_lower_bound: int = 0,
) -> list[TestConfig]:
    """Integer unicost cover over the real columns of the pool."""
    tests, _ = _finalize(columns, exempt_rows, config or CGConfig(), num_interactions, deadline, known_lower_bound)
    return tests


def _finalize(columns, exempt_rows, config, num_interactions, deadline, known_lower_bound):
    real = [c for c in columns if not c.is_artificial]
    if num_interactions is None:
        num_interactions = max((c.pattern.bit_length() for c in columns), default=0)
    required = (1 << num_interactions) - 1
    for p in exempt_rows:
        required &= ~(1 << p)
    patterns = [c.pattern for c in real]
    result = solve_unicost_cover(
        patterns,
        required,
        node_limit=config.ip_node_limit,
        deadline=deadline,
        tolerance=config.tolerance,
        stop_at=known_lower_bound,
    )
    if result is None:
        union = 0
        for pat in patterns:
            union |= pat
        raise SolverError(
            "real columns do not cover every required interaction",
            {"uncovered": bit_indices(required & ~union)},
        )
    return [real[j].test for j in result.selected], result


class ColumnGeneration:
    """Stateful driver; ``run()`` performs the whole pipeline once."""

    def __init__(self, instance: CAInstance, config: CGConfig | None = None,
                 on_event: Callable[[CGEvent], None] | None = None):
        self.instance = instance
        self.config = config or CGConfig()
        self.on_event = on_event
        self.pricer = Pricer(instance)
        self.master = RestrictedMaster(
            instance.num_interactions, instance.exempt_rows, self.config.tolerance
        )
        self._patterns: set[int] = set()
        self.columns_generated = 0

    def add_column(self, test: TestConfig, origin: str, count: bool = True) -> bool:
        """Append a real column; duplicates of an existing pattern are rejected."""
        pattern = coverage_pattern(self.instance, test) & self.instance.required_mask
        if pattern in self._patterns or pattern == 0:
            return False
        self._patterns.add(pattern)
        self.master.add_columns([Column(pattern, 1.0, origin, tuple(test))])
        if origin == GENERATED and count:
            self.columns_generated += 1
        return True

    def run(self) -> CGResult:
        inst, cfg = self.instance, self.config
        start = time.perf_counter()
        budget = cfg.time_limit_seconds
        cg_deadline = start + 0.9 * budget
        tol = cfg.tolerance

        self.master.add_columns(init_artificial_columns(inst, cfg.big_m))
        greedy_size = None
        if cfg.warm_start == "greedy":
            greedy = greedy_construct(inst, cfg.seed)
            greedy_size = len(greedy.tests)
            for test in greedy.tests:
                self.add_column(test, WARM_START)

        lp_history: list[float] = []
        iterations = 0
        lp_optimal = False
        tie_break = "marginal"
        stall = 0
        solution = None
        pricing_objective = math.inf
        while True:
            if iterations and time.perf_counter() > cg_deadline:
                log.info("column generation stopped by the time limit")
                break
            # the first solve always completes so that there are duals to report
            current = self.master.solve(deadline=cg_deadline if iterations else None)
            if not current.optimal:
                log.info("column generation stopped by the time limit inside the master")
                break
            solution = current
            if lp_history and solution.objective < lp_history[-1] - tol:
                stall = 0
            elif lp_history:
                stall += 1
            if stall >= STALL_ITERATIONS and tie_break != "lex":
                log.info("LP objective stalled for %d iterations, switching pricing tie-break", stall)
                tie_break = "lex"
            lp_history.append(solution.objective)
            iterations += 1
            result = self.pricer.price(solution.duals, tol, tie_break=tie_break)
            pricing_objective = result.objective
            self._emit(iterations, solution.objective, result.objective, start)
            if result.objective <= 1.0 + tol:
                lp_optimal = True
                break
            added = self.add_column(result.test, GENERATED)
            duals = solution.duals.copy()
            covered = coverage_pattern(inst, result.test)
            for _ in range(cfg.columns_per_iteration - 1):
                duals[bit_indices(covered)] = 0.0
                extra = self.pricer.price(duals, tol, tie_break=tie_break)
                true_value = float(solution.duals[bit_indices(coverage_pattern(inst, extra.test))].sum())
                if true_value <= 1.0 + tol:
                    break
                added = self.add_column(extra.test, GENERATED) or added
                covered |= coverage_pattern(inst, extra.test)
            if not added:
                # pricing returned a pool column: the LP is optimal up to round-off
                log.warning("pricing produced an existing column; treating the LP as optimal")
                lp_optimal = True
                break

        lp_bound = solution.objective if solution is not None else math.inf
        artificial_weight = 0.0
        if solution is not None:
            artificial_weight = float(sum(
                solution.primal[j] for j, c in enumerate(self.master.columns) if c.is_artificial
            ))
        if lp_optimal:
            lp_lower = lp_bound
        elif solution is not None:
            # Farley bound: scaling the duals by the best pricing value keeps them feasible
            lp_lower = float(solution.duals.sum()) / max(1.0, pricing_objective)
        else:
            lp_lower = 0.0
        lb = lower_bound(inst, lp_lower, tol)

        enriched = 0
        if cfg.enrich_pool and lp_optimal and solution is not None:
            enriched = self._enrich(solution.duals, lp_bound, greedy_size, lb)

        finalize_deadline = max(start + budget, time.perf_counter() + 0.1 * budget)
        try:
            tests, cover = _finalize(
                self.master.columns, inst.exempt_rows, cfg, inst.num_interactions,
                finalize_deadline, lb,
            )
        except SolverError as exc:
            exc.diagnostics["pool"] = [c.test for c in self.master.columns if not c.is_artificial]
            raise
        verdict = verify_covering_array(inst, tests)
        if not verdict:
            raise SolverError("integer solution fails verification", {"uncovered": verdict.uncovered})
        wall = time.perf_counter() - start
        return CGResult(
            tests=tests,
            lp_bound=lp_bound,
            ip_objective=len(tests),
            lp_optimal=lp_optimal,
            iterations=iterations,
            columns_generated=self.columns_generated,
            wall_time=wall,
            lower_bound=lb,
            greedy_size=greedy_size,
            lp_history=lp_history,
            pool_size=sum(1 for c in self.master.columns if not c.is_artificial),
            enriched_columns=enriched,
            ip_proven=cover.proven_optimal,
            final_duals=solution.duals if solution is not None else None,
            artificial_weight=artificial_weight,
        )

    def _enrich(self, duals: np.ndarray, lp_bound: float, greedy_size, lb: int) -> int:
        """Add every test whose reduced cost admits it to a cover smaller than the incumbent.

        A cover of size z satisfies z >= lp_bound + sum of its reduced costs, so
        columns with reduced cost above (incumbent - 1) - lp_bound cannot
        appear in any strictly better cover.
        """
        real = [c.pattern for c in self.master.columns if not c.is_artificial]
        chosen = greedy_cover(real, self.instance.required_mask)
        incumbent = len(chosen) if chosen is not None else greedy_size
        if incumbent is None or incumbent <= lb:
            return 0
        gap = (incumbent - 1) - lp_bound + self.config.tolerance
        threshold = 1.0 - gap
        tests = self.pricer.enumerate_at_least(duals, threshold, self.config.enrich_limit)
        added = 0
        for test in tests:
            if self.add_column(test, GENERATED, count=False):
                added += 1
        log.info("pool enrichment added %d columns (threshold %.4f)", added, threshold)
        return added

    def _emit(self, iteration, lp_objective, pricing_objective, start):
        event = CGEvent(iteration, lp_objective, pricing_objective, self.master.n,
                        time.perf_counter() - start)
        if self.on_event is not None:
            self.on_event(event)


def run_column_generation(instance: CAInstance, config: CGConfig | None = None,
                          on_event: Callable[[CGEvent], None] | None = None) -> CGResult:
    return ColumnGeneration(instance, config, on_event).run()
