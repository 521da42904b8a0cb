import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from cagen.colgen import init_artificial_columns
from cagen.errors import InvalidArgumentError, SolverError
from cagen.master import ARTIFICIAL, GENERATED, WARM_START, Column, RestrictedMaster, master_solve, reduced_cost
from cagen.model import coverage_pattern


def vertex_lp(A, cost):
    """Optimum of max 1.pi s.t. A^T pi <= cost, pi >= 0 by vertex enumeration."""
    m, n = A.shape
    G = np.vstack([A.T, -np.eye(m)])
    h = np.concatenate([cost, np.zeros(m)])
    best = -np.inf
    for active in itertools.combinations(range(n + m), m):
        sub = G[list(active)]
        if abs(np.linalg.det(sub)) < 1e-9:
            continue
        pi = np.linalg.solve(sub, h[list(active)])
        if np.all(G @ pi <= h + 1e-9):
            best = max(best, pi.sum())
    return best


def pool_from_matrix(A, cost):
    cols = []
    for j in range(A.shape[1]):
        pattern = sum(1 << i for i in range(A.shape[0]) if A[i, j])
        cols.append(Column(pattern, float(cost[j]), GENERATED, (j,)))
    return cols


@st.composite
def covering_lps(draw, max_rows=20, max_cols=30):
    m = draw(st.integers(1, max_rows))
    n = draw(st.integers(1, max_cols))
    density = draw(st.floats(0.1, 0.7))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    A = (rng.random((m, n)) < density).astype(int)
    for i in range(m):
        if not A[i].any():
            A[i, rng.integers(n)] = 1
    cost = rng.choice([1.0, 1.0, 1.0, 2.0, 0.5], size=n)
    return A, cost


def check_certificates(A, cost, sol, tol=1e-6):
    assert np.all(A @ sol.primal >= 1 - tol)
    assert np.all(sol.primal >= -tol)
    assert np.all(A.T @ sol.duals <= cost + tol)
    assert np.all(sol.duals >= -tol)
    assert abs(sol.duals.sum() - sol.objective) <= tol * max(1.0, sol.objective)


class TestExamples:
    def test_artificial_only(self, example):
        cols = init_artificial_columns(example, big_m=41)
        sol = master_solve(cols, num_interactions=40)
        assert sol.objective == pytest.approx(41 * 40)
        assert np.allclose(sol.primal, 1.0)
        assert np.allclose(sol.duals, 41.0)

    def test_example_suite_with_artificials(self, example, example_suite):
        cols = init_artificial_columns(example, big_m=41)
        cols += [Column(coverage_pattern(example, t), 1.0, WARM_START, t) for t in example_suite]
        sol = master_solve(cols, num_interactions=40)
        A = np.array([[(c.pattern >> p) & 1 for c in cols] for p in range(40)])
        cost = np.array([c.cost for c in cols])
        ref = linprog(cost, A_ub=-A, b_ub=-np.ones(40), bounds=(0, None), method="highs")
        assert sol.objective == pytest.approx(ref.fun, abs=1e-6)
        assert sol.objective == pytest.approx(6.0, abs=1e-6)
        assert np.allclose(sol.primal[:40], 0.0)
        check_certificates(A, cost, sol)

    def test_exempt_rows_have_zero_dual(self):
        cols = [Column(0b011, 1.0, GENERATED, (0,)), Column(0b110, 1.0, GENERATED, (1,))]
        sol = master_solve(cols, exempt_rows={1}, num_interactions=3)
        assert sol.duals[1] == 0.0
        assert sol.objective == pytest.approx(2.0)

    def test_uncovered_row_is_contract_violation(self):
        cols = [Column(0b01, 1.0, GENERATED, (0,))]
        with pytest.raises(SolverError) as info:
            master_solve(cols, num_interactions=2)
        assert info.value.diagnostics["uncovered"] == [1]

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        A = (rng.random((12, 20)) < 0.3).astype(int)
        A[:, 0] = 1
        cols = pool_from_matrix(A, np.ones(20))
        a, b = master_solve(cols), master_solve(cols)
        assert np.array_equal(a.primal, b.primal) and np.array_equal(a.duals, b.duals)


class TestReducedCost:
    def test_zero_duals(self, example):
        col = Column(coverage_pattern(example, (0,) * 5), 1.0, GENERATED, (0,) * 5)
        assert reduced_cost(col, np.zeros(40)) == 1.0

    def test_artificial_at_big_m(self):
        col = Column(1 << 7, 41.0, ARTIFICIAL)
        assert reduced_cost(col, np.full(40, 41.0)) == 0.0

    def test_example_column_against_artificial_duals(self, example, example_suite):
        sol = master_solve(init_artificial_columns(example, big_m=41), num_interactions=40)
        col = Column(coverage_pattern(example, example_suite[0]), 1.0, GENERATED, example_suite[0])
        assert reduced_cost(col, sol.duals) == pytest.approx(1 - 10 * 41)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            reduced_cost(Column(1 << 10, 1.0, GENERATED, (0,)), np.zeros(5))


class TestColumn:
    def test_artificial_needs_singleton(self):
        with pytest.raises(InvalidArgumentError):
            Column(0b11, 5.0, ARTIFICIAL)

    def test_real_needs_test(self):
        with pytest.raises(InvalidArgumentError):
            Column(0b1, 1.0, GENERATED)


class TestProperties:
    @given(covering_lps(max_rows=5, max_cols=8))
    def test_matches_vertex_enumeration(self, lp):
        A, cost = lp
        sol = master_solve(pool_from_matrix(A, cost), num_interactions=A.shape[0])
        assert sol.objective == pytest.approx(vertex_lp(A, cost), abs=1e-6)
        check_certificates(A, cost, sol)

    @given(covering_lps(max_rows=12, max_cols=20))
    def test_matches_reference_lp(self, lp):
        A, cost = lp
        sol = master_solve(pool_from_matrix(A, cost), num_interactions=A.shape[0])
        ref = linprog(cost, A_ub=-A, b_ub=-np.ones(A.shape[0]), bounds=(0, None), method="highs")
        assert sol.objective == pytest.approx(ref.fun, abs=1e-6)
        check_certificates(A, cost, sol)

    @given(covering_lps())
    def test_complementary_slackness(self, lp):
        A, cost = lp
        cols = pool_from_matrix(A, cost)
        sol = master_solve(cols, num_interactions=A.shape[0])
        rc = np.array([reduced_cost(c, sol.duals) for c in cols])
        assert np.all(rc >= -1e-6)
        assert np.all(rc[sol.primal > 1e-6] <= 1e-6)
        slack = A @ sol.primal - 1
        assert np.all(np.abs(slack[sol.duals > 1e-6]) <= 1e-6)

    @settings(max_examples=25)
    @given(covering_lps(max_rows=15, max_cols=30))
    def test_incremental_pool_is_monotone(self, lp):
        A, cost = lp
        m = A.shape[0]
        rm = RestrictedMaster(m)
        rm.add_columns([Column(1 << i, m + 1.0, ARTIFICIAL) for i in range(m)])
        previous = rm.solve().objective
        for col in pool_from_matrix(A, cost):
            rm.add_columns([col])
            sol = rm.solve()
            assert sol.objective <= previous + 1e-9
            previous = sol.objective
        fresh = master_solve(rm.columns, num_interactions=m)
        assert previous == pytest.approx(fresh.objective, abs=1e-6)


class TestBasisHandling:
    def test_crash_basis_skips_phase_one(self, example, example_suite):
        cols = init_artificial_columns(example, big_m=41)
        cols += [Column(coverage_pattern(example, t), 1.0, WARM_START, t) for t in example_suite]
        sol = master_solve(cols, num_interactions=40)
        assert sol.phase1_iterations == 0

    def test_singletons_only(self):
        cols = [Column(1 << i, 1.0 + i, GENERATED, (i,)) for i in range(4)]
        sol = master_solve(cols, num_interactions=4)
        assert sol.objective == pytest.approx(10.0)
        assert np.allclose(sol.duals, [1.0, 2.0, 3.0, 4.0])

    def test_expired_deadline_returns_feasible_point(self):
        rng = np.random.default_rng(11)
        A = (rng.random((15, 25)) < 0.3).astype(int)
        A[:, 0] = 1
        cols = pool_from_matrix(A, np.ones(25))
        rm = RestrictedMaster(15)
        rm.add_columns(cols)
        sol = rm.solve(deadline=0.0)
        assert not sol.optimal
        assert np.all(A @ sol.primal >= 1 - 1e-9)
        # resuming without a deadline finishes the job
        done = rm.solve()
        assert done.optimal
        assert done.objective <= sol.objective + 1e-9
        assert done.objective == pytest.approx(master_solve(cols, num_interactions=15).objective)

    def test_large_warm_started_master_is_quick(self):
        import time

        from cagen import greedy_construct, uniform_instance

        inst = uniform_instance(4, 10, 2)
        cols = init_artificial_columns(inst)
        cols += [Column(coverage_pattern(inst, t), 1.0, WARM_START, t) for t in greedy_construct(inst).tests]
        start = time.perf_counter()
        sol = master_solve(cols, num_interactions=inst.num_interactions)
        assert time.perf_counter() - start < 5.0
        assert sol.phase1_iterations == 0
        assert sol.objective <= len(cols) - inst.num_interactions + 1e-9

    def test_recovers_from_singular_factorization(self, monkeypatch):
        from cagen import master as master_module

        rng = np.random.default_rng(5)
        A = (rng.random((14, 24)) < 0.3).astype(int)
        A[A.sum(axis=1) == 0, 0] = 1
        cost = rng.choice([0.5, 1.0, 2.0], size=24)
        original = master_module.RestrictedMaster._factor
        calls = {"n": 0}

        def flaky(self):
            calls["n"] += 1
            if calls["n"] == 2:
                raise master_module._SingularBasis("forced", {})
            return original(self)

        monkeypatch.setattr(master_module.RestrictedMaster, "_factor", flaky)
        sol = master_solve(pool_from_matrix(A, cost), num_interactions=14)
        ref = linprog(cost, A_ub=-A, b_ub=-np.ones(14), bounds=(0, None), method="highs")
        assert calls["n"] > 3
        assert sol.objective == pytest.approx(ref.fun, abs=1e-6)

    def test_degenerate_pool_regression(self):
        # a column pool on which the unperturbed simplex stalled for >60k pivots
        import json
        from pathlib import Path

        from cagen import uniform_instance

        doc = json.loads((Path(__file__).parent / "data" / "degenerate_pool_4_7_2.json").read_text())
        inst = uniform_instance(doc["strength"], len(doc["domains"]), 2)
        cols = init_artificial_columns(inst)
        cols += [Column(coverage_pattern(inst, tuple(t)), 1.0, GENERATED, tuple(t)) for t in doc["tests"]]
        rm = RestrictedMaster(inst.num_interactions, max_iterations=5000)
        rm.add_columns(cols)
        sol = rm.solve()
        A = np.array([[(c.pattern >> p) & 1 for c in cols] for p in range(inst.num_interactions)])
        cost = np.array([c.cost for c in cols])
        ref = linprog(cost, A_ub=-A, b_ub=-np.ones(len(A)), bounds=(0, None), method="highs")
        assert sol.objective == pytest.approx(ref.fun, abs=1e-6)
        check_certificates(A, cost, sol)
