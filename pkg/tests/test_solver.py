import itertools

import numpy as np
import pytest
from scipy import sparse

from evtolplan.errors import Infeasible, IterationLimit
from evtolplan.model import build_extensive_form, build_two_stage
from evtolplan.scenarios import scenario_set_for
from evtolplan.solver import solve_model
from evtolplan.solver.benders import Subproblem, benders_solve
from evtolplan.solver.lp import LinearProgram, solve_lp
from evtolplan.solver.milp import solve_flat, solve_milp

cvxopt = pytest.importorskip("cvxopt")


def glpk_lp(c, A_ub, b_ub):
    """min c'x s.t. A x <= b, x >= 0 through GLPK."""
    n = len(c)
    G = np.vstack([A_ub, -np.eye(n)])
    h = np.concatenate([b_ub, np.zeros(n)])
    from cvxopt import matrix, solvers
    res = solvers.lp(matrix(np.asarray(c, float)), matrix(G), matrix(h), solver="glpk",
                     options={"glpk": {"msg_lev": "GLP_MSG_OFF"}})
    return res["status"], res["primal objective"]


@pytest.mark.parametrize("seed", range(5))
def test_lp_matches_external_oracle(seed):
    rng = np.random.default_rng(seed)
    m, n = 6, 5
    A = rng.uniform(0.1, 2.0, (m, n))
    b = rng.uniform(5, 10, m)
    c = -rng.uniform(1, 3, n)
    sol = solve_lp(LinearProgram(c, A, b))
    status, obj = glpk_lp(c, A, b)
    assert sol.status == "optimal" and status == "optimal"
    assert sol.objective == pytest.approx(obj, rel=1e-7)
    # strong duality: c'x = y'b for a min problem with duals d(obj)/d(b)
    assert sol.duals_ub @ b == pytest.approx(sol.objective, rel=1e-8)
    assert np.all(sol.duals_ub <= 1e-9)


def test_lp_duals_are_rhs_sensitivities():
    c = np.array([-3.0, -2.0])
    A = np.array([[1.0, 1.0], [1.0, 3.0]])
    b = np.array([4.0, 6.0])
    base = solve_lp(LinearProgram(c, A, b))
    for i in range(2):
        bump = b.copy()
        bump[i] += 1e-4
        moved = solve_lp(LinearProgram(c, A, bump))
        assert (moved.objective - base.objective) / 1e-4 == pytest.approx(base.duals_ub[i], abs=1e-6)


def test_lp_max_sense():
    sol = solve_lp(LinearProgram([1.0, 1.0], [[1.0, 2.0], [3.0, 1.0]], [4.0, 6.0], sense="max"))
    assert sol.objective == pytest.approx(2.8)


def test_lp_infeasible_gives_farkas_certificate():
    # x1 + x2 <= 1 and x1 + x2 >= 3 (written as -x1 - x2 <= -3)
    A = np.array([[1.0, 1.0], [-1.0, -1.0]])
    b = np.array([1.0, -3.0])
    sol = solve_lp(LinearProgram([1.0, 1.0], A, b))
    assert sol.status == "infeasible"
    y = sol.ray_ub
    # y <= 0 with y'A >= 0 on the columns and y'b > 0 proves no x >= 0 exists
    assert np.all(y <= 1e-12)
    assert np.all(y @ A >= -1e-9)
    assert y @ b > 1e-9


def test_lp_unbounded_gives_ray():
    sol = solve_lp(LinearProgram([-1.0, 0.0], [[0.0, 1.0]], [1.0]))
    assert sol.status == "unbounded"
    d = sol.primal_ray
    assert d[0] > 0 and abs(d[1]) < 1e-9


def test_lp_rejects_nan():
    with pytest.raises(ValueError):
        LinearProgram([np.nan, 1.0])


def test_milp_rounds_down():
    sol = solve_milp([1.0], sparse.csr_matrix([[1.0]]), [-np.inf], [2.5], [1], sense="max")
    assert sol.objective == pytest.approx(2.0)
    assert sol.x[0] == pytest.approx(2.0)


def test_knapsack_brute_force():
    w = np.array([12, 7, 11, 8, 9, 6], dtype=float)
    v = np.array([24, 13, 23, 15, 16, 11], dtype=float)
    cap = 26
    best = max(sum(v[i] for i in s) for r in range(7) for s in itertools.combinations(range(6), r)
               if sum(w[i] for i in s) <= cap)
    sol = solve_milp(v, sparse.csr_matrix(w), [-np.inf], [cap], np.ones(6), ub=np.ones(6), sense="max")
    assert sol.objective == pytest.approx(best)
    assert w @ np.round(sol.x) <= cap


def test_milp_infeasible():
    A = sparse.csr_matrix([[2.0]])
    with pytest.raises(Infeasible):
        solve_milp([1.0], A, [1.0], [1.0], [1])


@pytest.fixture(scope="module")
def desk_model(desk_prep):
    return build_two_stage(desk_prep, scenario_set_for(desk_prep.inst, 3, 0))


def test_benders_matches_extensive(desk_model):
    ext = solve_model(desk_model, "extensive")
    ben = solve_model(desk_model, "benders")
    assert ben.profit == pytest.approx(ext.profit, rel=1e-4)
    assert ext.bound >= ext.profit - 1e-6 * abs(ext.profit)


def test_benders_bounds_monotone(desk_model):
    x, ys, profit, state = benders_solve(desk_model)
    lowers = [h[1] for h in state.history]
    assert all(b >= a - 1e-9 for a, b in zip(lowers, lowers[1:]))
    assert state.lower <= state.upper + 1e-6 * abs(state.upper)
    kinds = {c.kind for c in state.cuts}
    assert "optimality" in kinds


def test_cuts_are_valid_at_other_first_stage_points(desk_model, desk_prep):
    """Every optimality cut underestimates the true recourse value wherever it is finite."""
    _, _, _, state = benders_solve(desk_model)
    first_pos = {v: n for n, v in enumerate(desk_model.first.vars)}
    subs = [Subproblem(desk_model, s, first_pos) for s in range(len(desk_model.scenarios))]
    # the first-stage block does not depend on the scenarios, so optima under other draws are feasible points
    points = [state.incumbent_x]
    for seed in (1, 2, 3):
        other = build_two_stage(desk_prep, scenario_set_for(desk_prep.inst, 3, seed))
        sol = solve_flat(build_extensive_form(other))
        points.append(sol.x[:len(first_pos)])
    assert any(not np.allclose(p, points[0]) for p in points[1:])
    checked = 0
    for x in points:
        for s, sp in enumerate(subs):
            res, kind, _, _ = sp.solve(x)
            if kind != "optimality":
                continue
            for cut in state.cuts:
                if cut.scenario == s and cut.kind == "optimality":
                    assert cut.value(x, res.objective) >= -1e-6 * max(1.0, abs(res.objective))
                    checked += 1
    assert checked > 0


def test_benders_iteration_limit(desk_model):
    with pytest.raises(IterationLimit) as info:
        benders_solve(desk_model, max_iters=1)
    assert info.value.incumbent is not None


def test_trace_records_cuts(desk_model):
    trace = []
    solve_model(desk_model, "benders", trace=trace)
    assert trace
    assert {"iteration", "scenario", "type", "rhs", "nnz"} <= set(trace[0])


def test_workers_give_same_answer(desk_model):
    a = solve_model(desk_model, "benders")
    b = solve_model(desk_model, "benders", workers=3)
    assert a.profit == pytest.approx(b.profit, rel=1e-9)
