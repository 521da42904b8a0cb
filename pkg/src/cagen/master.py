"""Restricted master LP: unicost set-covering relaxation with dual prices.

    min  sum_t c_t x_t
    s.t. sum_t a_pt x_t >= 1   for every non-exempt interaction p
         x >= 0

Solved by a revised simplex on ``A x - s = 1``.  The basis is kept
between calls so that appending columns (the column generation step) resumes
from a primal feasible basis instead of starting over.  Internally the
right-hand side is perturbed slightly to avoid long degenerate stalls; a
dual simplex cleanup reports the exact optimum of the unperturbed LP.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentError, SolverError
from .model import TestConfig, bit_indices, popcount

log = logging.getLogger(__name__)

ARTIFICIAL = "artificial"
WARM_START = "warm_start"
GENERATED = "generated"
ORIGINS = (ARTIFICIAL, WARM_START, GENERATED)


@dataclass(frozen=True)
class Column:
    pattern: int
    cost: float
    origin: str
    test: TestConfig | None = None

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise InvalidArgumentError(f"unknown column origin {self.origin!r}")
        if self.cost < 0:
            raise InvalidArgumentError("column cost must be nonnegative")
        if (self.origin == ARTIFICIAL) != (self.test is None):
            raise InvalidArgumentError("exactly the non-artificial columns carry a test")
        if self.origin == ARTIFICIAL and popcount(self.pattern) != 1:
            raise InvalidArgumentError("artificial columns cover exactly one interaction")

    @property
    def is_artificial(self) -> bool:
        return self.origin == ARTIFICIAL


@dataclass
class MasterSolution:
    primal: np.ndarray  # one value per pool column, in pool order
    objective: float
    duals: np.ndarray  # length P, zero on exempt rows
    iterations: int = 0
    phase1_iterations: int = 0
    optimal: bool = True

    def value(self, index: int) -> float:
        return float(self.primal[index])


def reduced_cost(column: Column, duals: Sequence[float]) -> float:
    """``c_t - sum_p a_pt pi_p``."""
    duals = np.asarray(duals, dtype=float)
    if column.pattern.bit_length() > len(duals):
        raise InvalidArgumentError(
            f"pattern spans {column.pattern.bit_length()} rows, dual vector has {len(duals)}"
        )
    idx = bit_indices(column.pattern)
    return float(column.cost - duals[idx].sum())


REFACTOR_EVERY = 256
PIVOT_TOL = 1e-7
MAX_RESTARTS = 3
PERTURB_LOW, PERTURB_HIGH = 1e-6, 1e-5
PRIMAL_TOL = 1e-9


class _SingularBasis(SolverError):
    pass


def _surplus(i: int) -> int:
    return -(i + 1)


@dataclass
class RestrictedMaster:
    """Revised simplex over a growing column pool.

    Variable ids: pool column ``j`` is ``j``; the surplus of row ``i`` is
    ``-(i+1)``; the phase-one artificial of row ``i`` is ``-(m+i+1)``.
    Phase-one artificials are internal only and unrelated to the big-M
    artificial *columns* a caller may place in the pool.
    """

    num_interactions: int
    exempt_rows: frozenset[int] = frozenset()
    tolerance: float = 1e-6
    max_iterations: int | None = None
    bland_after: int = 30

    columns: list[Column] = field(default_factory=list, init=False)

    def __post_init__(self):
        self.exempt_rows = frozenset(self.exempt_rows)
        self.rows = np.array(
            [p for p in range(self.num_interactions) if p not in self.exempt_rows], dtype=int
        )
        self.m = len(self.rows)
        self.row_pos = np.full(self.num_interactions, -1, dtype=int)
        self.row_pos[self.rows] = np.arange(self.m)
        # pool columns covering a single row are kept as (row, cost) only;
        # the others are dense columns of _A, addressed through _slot
        self._A = np.zeros((self.m, 16))
        self._n_dense = 0
        self._cost = np.zeros(16)
        self._unit_row = np.full(16, -1, dtype=int)
        self._slot = np.full(16, -1, dtype=int)
        self._ids = None
        self._basis: np.ndarray | None = None
        self._xb: np.ndarray | None = None
        self._phase2 = False
        self.total_pivots = 0
        # a small fixed perturbation of the right-hand side breaks the heavy
        # primal degeneracy of covering LPs; it is removed before reporting
        self._rhs = 1.0 + np.random.default_rng(0).uniform(PERTURB_LOW, PERTURB_HIGH, self.m)

    @property
    def n(self) -> int:
        return len(self.columns)

    def add_columns(self, columns: Iterable[Column]) -> list[int]:
        added = []
        for col in columns:
            if col.pattern.bit_length() > self.num_interactions:
                raise InvalidArgumentError("column pattern longer than the interaction space")
            j = self.n
            if j == len(self._cost):
                grow = max(16, j)
                self._cost = np.concatenate([self._cost, np.zeros(grow)])
                self._unit_row = np.concatenate([self._unit_row, np.full(grow, -1, dtype=int)])
                self._slot = np.concatenate([self._slot, np.full(grow, -1, dtype=int)])
            pos = self.row_pos[bit_indices(col.pattern)]
            pos = pos[pos >= 0]
            if len(pos) == 1:
                self._unit_row[j] = pos[0]
            else:
                k = self._n_dense
                if k == self._A.shape[1]:
                    self._A = np.hstack([self._A, np.zeros((self.m, max(16, k)))])
                self._A[pos, k] = 1.0
                self._slot[j] = k
                self._n_dense += 1
            self._cost[j] = col.cost
            self.columns.append(col)
            added.append(j)
        return added

    def _pool_ids(self) -> tuple[np.ndarray, np.ndarray]:
        """(unit pool ids, dense pool ids in slot order)."""
        n = self.n
        if self._ids is None or self._ids[0] != n:
            unit = np.flatnonzero(self._unit_row[:n] >= 0)
            dense = np.flatnonzero(self._slot[:n] >= 0)
            self._ids = (n, unit, dense[np.argsort(self._slot[dense])])
        return self._ids[1], self._ids[2]

    def _row_times_pool(self, y: np.ndarray) -> np.ndarray:
        """``y^T a_j`` for every pool column j."""
        out = np.zeros(self.n)
        unit, dense = self._pool_ids()
        out[unit] = y[self._unit_row[unit]]
        out[dense] = y @ self._A[:, : self._n_dense]
        return out

    # ------------------------------------------------------------------ simplex
    #
    # Most basic variables of a covering LP are unit columns: surpluses,
    # phase-one artificials and singleton pool columns.  With U the unit
    # part and S the remaining basic columns, B solves reduce to the square
    # block K = A[R, S] over the rows R that no unit column covers, so only
    # K is ever inverted.

    def _column(self, var: int) -> np.ndarray:
        if var >= 0 and self._slot[var] >= 0:
            return self._A[:, self._slot[var]]
        e = np.zeros(self.m)
        if var >= 0:
            e[self._unit_row[var]] = 1.0
        elif var >= -self.m:
            e[-var - 1] = -1.0
        else:
            e[-var - self.m - 1] = 1.0
        return e

    def _basic_costs(self, phase1: bool) -> np.ndarray:
        b = self._basis
        if phase1:
            return (b < -self.m).astype(float)
        return np.where(b >= 0, self._cost[np.maximum(b, 0)], 0.0)

    def _initial_basis(self):
        """Crash basis from a greedy cover by the multi-row pool columns.

        Each kept column owns a row no other kept column covers, so placing
        it there and a surplus on every other covered row is primal
        feasible.  Rows the dense columns miss fall back to a singleton pool
        column (e.g. a big-M artificial) or a phase-one artificial.
        """
        m = self.m
        A = self._A[:, : self._n_dense]
        uncovered = np.ones(m, dtype=bool)
        kept: list[int] = []
        while uncovered.any() and A.shape[1]:
            gains = uncovered.astype(float) @ A
            k = int(np.argmax(gains))
            if gains[k] == 0:
                break
            kept.append(k)
            uncovered &= A[:, k] == 0
        count = A[:, kept].sum(axis=1) if kept else np.zeros(m)
        for k in reversed(list(kept)):
            col = A[:, k] > 0
            if np.all(count[col] >= 2):
                kept.remove(k)
                count -= A[:, k]
        _, dense_ids = self._pool_ids()
        basis = np.where(count >= 1, -(np.arange(m) + 1), -(m + np.arange(m) + 1))
        for k in kept:
            private = np.flatnonzero((A[:, k] > 0) & (count == 1))
            # the private row with the largest right-hand side keeps the
            # other rows of this column nonnegative in surplus
            basis[private[np.argmax(self._rhs[private])]] = dense_ids[k]
        for j in np.flatnonzero(self._unit_row[: self.n] >= 0):
            i = int(self._unit_row[j])
            if basis[i] < -m:
                basis[i] = j
        self._basis = basis.astype(int)
        self._phase2 = False
        self._refactor()

    def _is_dense(self, var: int) -> bool:
        return var >= 0 and self._slot[var] >= 0

    def _refactor(self):
        """Rebuild the dense block of the basis from scratch."""
        pos = [i for i, v in enumerate(self._basis) if self._is_dense(int(v))]
        self._bs_pos = pos
        self._bs = np.zeros((self.m, max(16, 2 * len(pos))))
        if pos:
            self._bs[:, : len(pos)] = self._A[:, self._slot[self._basis[pos]]]
        self._factor()

    def _swap(self, r: int, q: int):
        """Update the dense block for basis position ``r`` changing to ``q``."""
        leaving = int(self._basis[r])
        self._basis[r] = q
        if self._is_dense(leaving):
            k = self._bs_pos.index(r)
            last = len(self._bs_pos) - 1
            self._bs[:, k] = self._bs[:, last]
            self._bs_pos[k] = self._bs_pos[last]
            self._bs_pos.pop()
        if self._is_dense(q):
            k = len(self._bs_pos)
            if k == self._bs.shape[1]:
                self._bs = np.hstack([self._bs, np.zeros((self.m, k))])
            self._bs[:, k] = self._A[:, self._slot[q]]
            self._bs_pos.append(r)

    def _factor(self):
        b = self._basis
        rows = np.where(b >= 0, self._unit_row[np.maximum(b, 0)], -1)
        rows = np.where(b < -self.m, -b - self.m - 1, rows)
        surplus = (b < 0) & (b >= -self.m)
        rows = np.where(surplus, -b - 1, rows)
        unit = rows >= 0
        self._u_pos = np.flatnonzero(unit)
        self._u_rows = rows[unit]
        self._u_sign = np.where(surplus[unit], -1.0, 1.0)
        covered = np.zeros(self.m, dtype=bool)
        covered[self._u_rows] = True
        if covered.sum() != len(self._u_rows):
            raise _SingularBasis("singular basis: two unit columns on one row", {"pivots": self.total_pivots})
        self._s_pos = np.array(self._bs_pos, dtype=int)
        self._r_rows = np.flatnonzero(~covered)
        r = len(self._s_pos)
        if r != len(self._r_rows):
            raise _SingularBasis("singular basis: block is not square", {"pivots": self.total_pivots})
        self._as = self._bs[:, :r]
        try:
            self._kinv = np.linalg.inv(self._as[self._r_rows])
        except np.linalg.LinAlgError as exc:
            raise _SingularBasis("singular basis during refactorization", {"pivots": self.total_pivots}) from exc
        if self._kinv.size and not np.abs(self._kinv).max() < 1e10:
            raise _SingularBasis("ill-conditioned basis", {"pivots": self.total_pivots})
        self._xb = self._ftran(self._rhs)
        self._xb[np.abs(self._xb) < 1e-12] = 0.0

    def _ftran(self, a: np.ndarray) -> np.ndarray:
        """Solve ``B d = a``; ``d`` is indexed by basis position."""
        d = np.empty(self.m)
        ds = self._kinv @ a[self._r_rows]
        d[self._s_pos] = ds
        d[self._u_pos] = self._u_sign * (a[self._u_rows] - (self._as @ ds)[self._u_rows])
        return d

    def _btran(self, cb: np.ndarray) -> np.ndarray:
        """Solve ``y^T B = cb^T``; ``y`` is indexed by row."""
        y = np.zeros(self.m)
        y[self._u_rows] = self._u_sign * cb[self._u_pos]
        rhs = cb[self._s_pos] - y @ self._as
        y[self._r_rows] = rhs @ self._kinv
        return y

    def _duals(self, phase1: bool) -> np.ndarray:
        return self._btran(self._basic_costs(phase1))

    def _var_key(self, var: int) -> int:
        # pool columns first, then surplus, then phase-one artificials
        return var if var >= 0 else self.n + (-var - 1)

    def _iterate(self, phase1: bool, budget: int, deadline: float | None) -> tuple[int, bool]:
        """Pivot to optimality; returns (pivots, finished)."""
        tol = self.tolerance
        pivots = 0
        degenerate_streak = 0
        restarts = 0
        while True:
            if pivots >= budget:
                raise SolverError(
                    "simplex iteration cap reached",
                    {"pivots": pivots, "phase": 1 if phase1 else 2, "rows": self.m, "columns": self.n},
                )
            if deadline is not None and time.perf_counter() > deadline:
                return pivots, False
            y = self._duals(phase1)
            n = self.n
            cost = np.zeros(n) if phase1 else self._cost[:n]
            d = np.concatenate([cost - self._row_times_pool(y), y])
            scale = np.concatenate([np.maximum(1.0, np.abs(cost)), np.ones(self.m)])
            b = self._basis
            d[b[b >= 0]] = 0.0
            surplus = b[(b < 0) & (b >= -self.m)]
            d[n - surplus - 1] = 0.0
            candidates = np.flatnonzero(d < -tol * scale)
            if candidates.size == 0:
                return pivots, True
            if degenerate_streak >= self.bland_after:
                q_key = int(candidates[0])
            else:
                q_key = int(candidates[np.argmin(d[candidates])])
            q = q_key if q_key < n else -(q_key - n + 1)

            u = self._ftran(self._column(q))
            pos = np.flatnonzero(u > PIVOT_TOL * max(1.0, float(np.abs(u).max())))
            if pos.size == 0:
                raise SolverError("master LP unbounded", {"entering": q})
            ratios = self._xb[pos] / u[pos]
            best = ratios.min()
            bland = degenerate_streak >= self.bland_after
            if bland:
                ties = pos[ratios <= best + 1e-12]
            else:
                # Harris: any row within a small primal slack of the minimum
                # may leave; the largest pivot element among them is kept
                bound = ((self._xb[pos] + 1e-9) / u[pos]).min()
                ties = pos[ratios <= bound]
            # phase-one artificials leave first; then lowest key (Bland) or largest pivot
            if bland:
                r = min(ties, key=lambda i: (self._basis[i] >= -self.m, self._var_key(int(self._basis[i]))))
            else:
                r = min(ties, key=lambda i: (self._basis[i] >= -self.m, -u[i], self._var_key(int(self._basis[i]))))
            theta = max(best, 0.0)
            degenerate_streak = degenerate_streak + 1 if theta <= 1e-12 else 0
            try:
                self._pivot(int(r), q)
            except _SingularBasis:
                restarts += 1
                if restarts > MAX_RESTARTS:
                    raise
                log.warning("singular basis after %d pivots, restarting from a crash basis", self.total_pivots)
                self._restart(phase1)
                degenerate_streak = 0
            pivots += 1

    def _pivot(self, r: int, q: int):
        self._swap(r, q)
        self.total_pivots += 1
        if self.total_pivots % REFACTOR_EVERY == 0:
            self._refactor()
        else:
            self._factor()

    def _restart(self, phase1: bool):
        self._initial_basis()
        if not phase1:
            if np.any(self._basis < -self.m):
                raise SolverError("no feasible crash basis after a singular pivot", {"pivots": self.total_pivots})
            self._phase2 = True

    def _drive_out_artificials(self):
        for r in range(self.m):
            v = int(self._basis[r])
            if v >= -self.m:
                continue
            basic = set(int(b) for b in self._basis)
            e = np.zeros(self.m)
            e[r] = 1.0
            row = self._btran(e)  # row r of the basis inverse
            alpha_pool = self._row_times_pool(row)
            choice = None
            for j in np.flatnonzero(np.abs(alpha_pool) > 1e-9):
                if int(j) not in basic:
                    choice = int(j)
                    break
            if choice is None:
                for i in np.flatnonzero(np.abs(row) > 1e-9):
                    if _surplus(int(i)) not in basic:
                        choice = _surplus(int(i))
                        break
            if choice is None:
                raise SolverError("could not remove phase-one artificial from basis", {"row": r})
            self._pivot(r, choice)

    def solve(self, deadline: float | None = None) -> MasterSolution:
        """Optimize over the current pool, resuming from the last basis.

        With a ``deadline`` (a ``time.perf_counter`` value) the simplex may
        stop early; the result then has ``optimal=False`` and holds the
        current primal feasible basis.  Stopping inside phase one raises.
        """
        if self.max_iterations is None:
            budget = 50 * (self.m + self.n) + 1000
        else:
            budget = self.max_iterations
        phase1_pivots = 0
        if self._basis is None:
            self._initial_basis()
        if not self._phase2:
            if np.any(self._basis < -self.m):
                phase1_pivots, done = self._iterate(phase1=True, budget=budget, deadline=deadline)
                if not done:
                    raise SolverError("time limit reached before a feasible basis", {"pivots": phase1_pivots})
                infeas = sum(self._xb[r] for r in range(self.m) if self._basis[r] < -self.m)
                if infeas > self.tolerance:
                    unit, _ = self._pool_ids()
                    hits = self._A[:, : self._n_dense].sum(axis=1)
                    hits += np.bincount(self._unit_row[unit], minlength=self.m)
                    uncovered = self.rows[hits == 0]
                    # a fresh start is needed once the pool is repaired
                    self._basis = None
                    raise SolverError(
                        "column pool does not cover every required interaction",
                        {"uncovered": uncovered.tolist(), "infeasibility": float(infeas)},
                    )
                self._drive_out_artificials()
            self._phase2 = True
        pivots, done = self._iterate(phase1=False, budget=budget, deadline=deadline)

        if done:
            basis, xb, y = self._unperturbed()
        else:
            # a truncated run reports the perturbed point, which is feasible
            basis, xb, y = self._basis, self._xb, self._duals(phase1=False)
        x = np.zeros(self.n)
        x[basis[basis >= 0]] = np.maximum(xb[basis >= 0], 0.0)
        duals = np.zeros(self.num_interactions)
        # tiny negative prices are round-off from degenerate pivots
        duals[self.rows] = np.where(y < 0, 0.0, y)
        objective = float(self._cost[: self.n] @ x)
        return MasterSolution(x, objective, duals, pivots, phase1_pivots, optimal=done)

    def _unperturbed(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Optimal basis, primal values and duals for the true right-hand side.

        The perturbed optimum is dual feasible for any right-hand side, so a
        few dual simplex pivots restore primal feasibility.  The perturbed
        basis is reinstated afterwards as the warm start of the next solve.
        """
        saved = self._basis.copy()
        perturbed = self._rhs
        self._rhs = np.ones(self.m)
        try:
            self._factor()
            for _ in range(10 * self.m + 100):
                r = int(np.argmin(self._xb)) if self.m else 0
                if not self.m or self._xb[r] >= -PRIMAL_TOL:
                    break
                self._dual_pivot(r)
            else:
                raise SolverError("dual simplex cleanup did not converge", {"rows": self.m})
            return self._basis.copy(), self._xb.copy(), self._duals(phase1=False)
        finally:
            self._rhs = perturbed
            self._basis = saved
            self._refactor()

    def _dual_pivot(self, r: int):
        n = self.n
        e = np.zeros(self.m)
        e[r] = 1.0
        rho = self._btran(e)
        y = self._duals(phase1=False)
        # pool columns, then surplus columns (whose column is -e_i)
        alpha = np.concatenate([self._row_times_pool(rho), -rho])
        d = np.concatenate([self._cost[:n] - self._row_times_pool(y), y])
        b = self._basis
        eligible = alpha < -PIVOT_TOL
        eligible[b[b >= 0]] = False
        surplus = b[(b < 0) & (b >= -self.m)]
        eligible[n - surplus - 1] = False
        cand = np.flatnonzero(eligible)
        if cand.size == 0:
            raise SolverError("master LP infeasible during cleanup", {"row": r})
        ratios = np.maximum(d[cand], 0.0) / -alpha[cand]
        q_key = int(cand[np.argmin(ratios)])
        q = q_key if q_key < n else -(q_key - n + 1)
        self._swap(r, q)
        self.total_pivots += 1
        self._factor()


def master_solve(
    columns: Sequence[Column],
    exempt_rows: Iterable[int] = (),
    tolerance: float = 1e-6,
    num_interactions: int | None = None,
) -> MasterSolution:
    """One-shot solve of the covering LP over ``columns``.

    ``num_interactions`` defaults to the highest bit any column sets.
    """
    if num_interactions is None:
        num_interactions = max((c.pattern.bit_length() for c in columns), default=0)
    rm = RestrictedMaster(num_interactions, frozenset(exempt_rows), tolerance)
    rm.add_columns(columns)
    return rm.solve()
