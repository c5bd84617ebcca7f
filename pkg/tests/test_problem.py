import highspy
import numpy as np
import pytest

from cemkit.domain import Configuration
from cemkit.formulation import PeriodProblem, build_period_problem, time_blocks
from cemkit.solver import solve
from helpers import toy_scenario, toy_system


def _small():
    p = PeriodProblem("small")
    x = p.add_vars("x", [("a",), ("b",)], lb=0.0, ub=[4.0, np.inf])
    p.add_row("sum", ("ab",), {int(x[0]): 1.0, int(x[1]): 1.0}, ">=", 6.0)
    p.add_row("cap", ("b",), {int(x[1]): 2.0}, "<=", 10.0)
    p.add_cost("energy", "p", x, [1.0, 3.0], weight=2.0)
    p.add_offset("sunk", "p", 5.0, weight=2.0)
    return p


def _highs_read(path):
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    assert h.readModel(str(path)) == highspy.HighsStatus.kOk
    h.run()
    assert h.getModelStatus() == highspy.HighsModelStatus.kOptimal
    return h.getInfo().objective_function_value


def test_hand_problem():
    p = _small()
    sol = solve(p)
    # x_a at its bound 4, x_b = 2: 2 x (4 + 6) + 2 x 5
    assert sol.objective == pytest.approx(30.0)
    assert p.cost_breakdown(sol.x) == {"p": pytest.approx({"energy": 10.0, "sunk": 5.0})}
    assert p.cost_breakdown(sol.x, weighted=True)["p"]["energy"] == pytest.approx(20.0)


def test_lp_export_reads_back(tmp_path):
    p = _small()
    p.write_lp(tmp_path / "small.lp")
    assert _highs_read(tmp_path / "small.lp") == pytest.approx(solve(p).objective, rel=1e-9)


def test_toy_period_export_reads_back(tmp_path):
    s = toy_system()
    p = build_period_problem(s, toy_scenario("net_zero"), Configuration("base"), s.horizon.periods[1],
                             blocks=time_blocks(s, compress_days=True))
    p.write_lp(tmp_path / "toy.lp")
    assert _highs_read(tmp_path / "toy.lp") == pytest.approx(solve(p).objective, rel=1e-7)


def test_tags_name_rows_and_vars():
    p = _small()
    assert p.var_names() == ["x[a]", "x[b]"]
    assert p.row_names() == ["sum[ab]", "cap[b]"]
    assert list(p.find_rows("cap")) == [1]
    assert p.nnz == 3


def test_undeclared_variable_rejected():
    p = PeriodProblem()
    p.add_vars("x", [(1,)])
    with pytest.raises(ValueError, match="undeclared"):
        p.add_rows("r", [(0,)], [0], [3], [1.0], "<=", 1.0)
    with pytest.raises(ValueError, match="bad sense"):
        p.add_rows("r", [(0,)], [0], [0], [1.0], "<", 1.0)


def test_duplicate_entries_sum_and_zeros_vanish():
    p = PeriodProblem()
    x = p.add_vars("x", [(0,), (1,)])
    p.add_rows("r", [(0,)], [0, 0, 0], [x[0], x[0], x[1]], [1.0, 2.0, 0.0], "<=", 1.0)
    assert p.A.toarray().tolist() == [[3.0, 0.0]]


def test_set_bounds_fixes_value():
    p = _small()
    p.set_bounds(0, 1.0, 1.0)
    sol = solve(p)
    assert sol.x[0] == pytest.approx(1.0)
    assert sol.x[1] == pytest.approx(5.0)


def test_subproblem_keeps_objective():
    p = _small()
    sub = p.subproblem_rows(np.array([0]))
    assert sub.n_rows == 1 and sub.row_tags == [("sum", "ab")]
    assert np.array_equal(sub.c, p.c)


def test_lp_names_are_unique():
    p = PeriodProblem()
    p.add_vars("x", [("a b",), ("a_b",)])
    text = p.to_lp()
    assert "x_a_b " in text and "x_a_b__1" in text
