import pytest

from evtolplan.benchmarks import (
    deterministic_solve, heuristic_plan, run_benchmarks, scope_solve, sequential_solve,
)
from evtolplan.evaluate import audit_plan
from evtolplan.scenarios import expected_scenario_set, scenario_set_for


@pytest.fixture(scope="module")
def sset(desk_prep):
    return scenario_set_for(desk_prep.inst, 3, 5)


@pytest.fixture(scope="module")
def results(desk_prep, sset):
    return {r.name: r for r in run_benchmarks(desk_prep, sset)}


def test_all_planners_report(results):
    assert set(results) == {"deterministic", "heuristic", "sequential", "3SCOPE"}
    d2 = results["3SCOPE"].d2
    assert all(r.d2 == d2 for r in results.values())


def test_ordering(results):
    p = {k: r.profit for k, r in results.items()}
    tol = 1e-6 * abs(p["3SCOPE"])
    assert p["deterministic"] >= p["3SCOPE"] - tol
    assert p["3SCOPE"] >= p["sequential"] - tol
    assert p["3SCOPE"] >= p["heuristic"] - tol


def test_plans_are_feasible(results, desk_prep, sset):
    for name in ("3SCOPE", "sequential", "heuristic"):
        assert audit_plan(results[name].plan, desk_prep, sset) == [], name
    ev = expected_scenario_set(sset)
    assert audit_plan(results["deterministic"].plan, desk_prep, ev) == []


def test_sequential_minimises_back_end_first(results):
    def back_end(cb):
        return cb.tppc + cb.ticb + cb.ttcb + cb.tecb

    seq, scope = results["sequential"].cost, results["3SCOPE"].cost
    assert back_end(seq) <= back_end(scope) + 1e-6 * back_end(scope)


def test_heuristic_uses_cheapest_supplier_first(desk_prep, sset, results):
    plan = results["heuristic"].plan
    by_sup = plan.first.receipts_by_supplier()
    for part in desk_prep.inst.parts:
        sups = sorted(desk_prep.inst.suppliers_of(part.id), key=lambda s: s.price)
        used = [s.id for s in sups if by_sup.get((part.id, s.id), 0) > 0]
        if used:
            assert used[0] == sups[0].id


def test_given_uplift_skips_fixed_point(desk_prep, sset):
    r = scope_solve(desk_prep, sset, d2={"c1": 0, "c2": 0})
    assert r.d2 == {"c1": 0, "c2": 0}
    assert deterministic_solve(desk_prep, sset, r.d2).profit >= r.profit - 1e-6 * abs(r.profit)
    assert sequential_solve(desk_prep, sset, r.d2).profit <= r.profit + 1e-6 * abs(r.profit)
    assert heuristic_plan(desk_prep, sset, r.d2).profit <= r.profit + 1e-6 * abs(r.profit)


def test_unknown_model(desk_prep, sset):
    with pytest.raises(ValueError):
        run_benchmarks(desk_prep, sset, models=("scope", "oracle"))
