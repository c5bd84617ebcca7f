import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cemkit.domain import Configuration
from cemkit.errors import ConfigurationError, SolverError
from cemkit.formulation import PeriodProblem, build_period_problem, time_blocks
from cemkit.ingest import sample_weeks
from cemkit.solver import BACKEND_ENV, SolveSettings, infeasible_rows, solve, verify_kkt
from helpers import toy_scenario, toy_system

ALL = ("highs", "scipy", "reference")


def lp(c, rows, senses, rhs, lb=0.0, ub=np.inf, name="lp"):
    """Dense helper: ``rows`` is a list of coefficient lists."""
    p = PeriodProblem(name)
    x = p.add_vars("x", [(j,) for j in range(len(c))], lb, ub)
    for i, (a, s, b) in enumerate(zip(rows, senses, rhs)):
        p.add_row("r", (i,), {int(x[j]): v for j, v in enumerate(a) if v}, s, b)
    p.add_cost("c", "p", x, c)
    return p


def run(p, backend):
    return solve(p, SolveSettings(backend=backend))


@pytest.mark.parametrize("backend", ALL)
def test_single_bound(backend):
    sol = run(lp([1.0], [[1.0]], [">="], [3.0]), backend)
    assert sol.optimal and sol.x[0] == pytest.approx(3.0) and sol.objective == pytest.approx(3.0)
    assert sol.duals[0] == pytest.approx(1.0)


@pytest.mark.parametrize("backend", ALL)
def test_infeasible(backend):
    assert run(lp([1.0], [[1.0], [1.0]], [">=", "<="], [3.0, 1.0]), backend).status == "infeasible"


@pytest.mark.parametrize("backend", ALL)
def test_unbounded(backend):
    assert run(lp([-1.0], [[1.0]], [">="], [0.0]), backend).status == "unbounded"


def beale():
    """The classic cycling example; optimum -1.25 at x = (1, 0, 1, 0)."""
    c = [-0.75, 20.0, -0.5, 6.0]
    rows = [[0.25, -8.0, -1.0, 9.0], [0.5, -12.0, -0.5, 3.0], [0.0, 0.0, 1.0, 0.0]]
    return lp(c, rows, ["<="] * 3, [0.0, 0.0, 1.0])


@pytest.mark.parametrize("backend", ALL)
def test_degenerate_cycling_example(backend):
    sol = run(beale(), backend)
    assert sol.optimal and sol.objective == pytest.approx(-1.25, abs=1e-9)


def test_equality_and_free_variables():
    p = lp([1.0, 1.0], [[1.0, -1.0], [1.0, 1.0]], ["=", ">="], [2.0, -10.0], lb=-np.inf)
    for b in ALL:
        sol = run(p, b)
        assert sol.objective == pytest.approx(-10.0)
        assert sol.x[0] - sol.x[1] == pytest.approx(2.0)


def test_reference_refuses_large_problems():
    with pytest.raises(SolverError, match="reference solver cap"):
        solve(beale(), SolveSettings(backend="reference", reference_max_nnz=5))


def test_backend_from_environment(monkeypatch):
    monkeypatch.setenv(BACKEND_ENV, "reference")
    assert solve(beale()).backend == "reference"
    monkeypatch.setenv(BACKEND_ENV, "cplex")
    with pytest.raises(ConfigurationError):
        solve(beale())


def test_kkt_detects_perturbation():
    p = beale()
    sol = run(p, "highs")
    assert verify_kkt(p, sol).ok()
    sol.x = sol.x + np.array([1e-3, 0, 0, 0])
    assert not verify_kkt(p, sol).ok()


def test_kkt_detects_wrong_dual_sign():
    p = lp([1.0], [[1.0]], [">="], [3.0])
    sol = run(p, "highs")
    sol.duals = -sol.duals
    assert verify_kkt(p, sol).dual_residual > 1e-3


def random_lp(seed, m=6, n=5):
    """Feasible and bounded by construction: a known interior point and finite boxes."""
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1, 1, (m, n)) * (rng.random((m, n)) < 0.7)
    x0 = rng.uniform(0, 1, n)
    slack = rng.uniform(0, 1, m)
    senses = rng.choice(["<=", ">=", "="], m, p=[0.5, 0.3, 0.2])
    rhs = A @ x0 + np.where(senses == "<=", slack, np.where(senses == ">=", -slack, 0.0))
    c = rng.uniform(-5, 5, n)
    return lp(c, A.tolist(), list(senses), rhs.tolist(), 0.0, 10.0, name=f"rand{seed}")


@given(st.integers(0, 10_000))
def test_backends_agree_on_random_lps(seed):
    p = random_lp(seed)
    objs = [run(p, b).objective for b in ALL]
    scale = 1 + abs(objs[0])
    assert max(objs) - min(objs) <= 1e-6 * scale


@given(st.integers(0, 10_000))
def test_permutation_invariance(seed):
    p = random_lp(seed)
    rng = np.random.default_rng(seed + 1)
    pr, pc = rng.permutation(p.n_rows), rng.permutation(p.n_vars)
    A = p.A.toarray()[pr][:, pc]
    q = lp(p.c[pc], A.tolist(), list(p.sense[pr]), p.rhs[pr].tolist(), 0.0, 10.0)
    # the barrier stops at its own tolerance; the simplex lands on the same vertex
    for b, tol in (("highs", 1e-7), ("reference", 1e-9)):
        assert run(q, b).objective == pytest.approx(run(p, b).objective, rel=tol, abs=tol)


def test_two_variable_lp_against_grid():
    # max 3x + 2y  s.t.  x + y <= 4,  x + 3y <= 6,  x <= 3
    p = lp([-3.0, -2.0], [[1, 1], [1, 3], [1, 0]], ["<="] * 3, [4.0, 6.0, 3.0])
    g = np.linspace(0, 4, 801)
    X, Y = np.meshgrid(g, g)
    ok = (X + Y <= 4) & (X + 3 * Y <= 6) & (X <= 3)
    best = (-3 * X - 2 * Y)[ok].min()
    for b in ALL:
        assert run(p, b).objective == pytest.approx(best, rel=1e-3)


def test_iis_isolates_conflict():
    rows = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [1, 0, 0]]
    p = lp([1.0, 1.0, 1.0], rows, ["<=", "<=", "<=", "<=", ">="], [5.0, 5.0, 5.0, 10.0, 7.0])
    assert run(p, "highs").status == "infeasible"
    assert infeasible_rows(p, lambda q: run(q, "highs")) == ["r[0]", "r[4]"]


def test_iis_of_feasible_problem_is_empty():
    assert infeasible_rows(beale(), lambda q: run(q, "highs")) == []


def test_repeat_solves_are_bitwise_identical():
    s = toy_system()
    blocks = time_blocks(s, sample_weeks(s, 4), compress_days=True)
    p = build_period_problem(s, toy_scenario("net_zero"), Configuration("c"), s.horizon.periods[2], blocks=blocks)
    a, b = run(p, "highs"), run(p, "highs")
    assert np.array_equal(a.x, b.x) and np.array_equal(a.duals, b.duals)


def test_reference_matches_highs_on_toy_period():
    s = toy_system()
    blocks = time_blocks(s, sample_weeks(s, 2), compress_days=True)
    p = build_period_problem(s, toy_scenario("net_zero"), Configuration("c"), s.horizon.periods[3], blocks=blocks)
    ref, hi = run(p, "reference"), run(p, "highs")
    assert ref.objective == pytest.approx(hi.objective, rel=1e-6)
    assert verify_kkt(p, ref).ok()


def test_small_vertex_enumeration():
    """Brute force over all bases of a 3x3 box-free LP."""
    c = np.array([-1.0, -2.0, 0.5])
    A = np.array([[1.0, 1.0, 1.0], [1.0, -1.0, 2.0], [0.0, 1.0, -1.0]])
    b = np.array([6.0, 4.0, 2.0])
    # vertices of {A x <= b, x >= 0}: choose 3 active constraints out of the 6
    G = np.vstack([A, -np.eye(3)])
    h = np.concatenate([b, np.zeros(3)])
    best = np.inf
    for act in itertools.combinations(range(6), 3):
        M = G[list(act)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, h[list(act)])
        if np.all(G @ v <= h + 1e-9):
            best = min(best, c @ v)
    p = lp(c.tolist(), A.tolist(), ["<="] * 3, b.tolist())
    for be in ALL:
        assert run(p, be).objective == pytest.approx(best, abs=1e-9)
