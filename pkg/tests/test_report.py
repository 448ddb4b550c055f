import pytest

from evtolplan.errors import InconsistentPlan
from evtolplan.evaluate import evaluate_plan
from evtolplan.model import build_two_stage
from evtolplan.report import (
    COST_COLUMNS, EVENTS, SCHEDULE_COLUMNS, export_cost_breakdown, export_schedule, plot_costs, plot_schedule,
    provenance, read_csv, sort_rows, to_csv,
)
from evtolplan.scenarios import scenario_set_for
from evtolplan.solver import solve_model


@pytest.fixture(scope="module")
def solved(desk_prep):
    sset = scenario_set_for(desk_prep.inst, 3, 0)
    res = solve_model(build_two_stage(desk_prep, sset), "extensive")
    return sset, res


def test_schedule_accounts_for_every_unit(solved, desk_prep):
    _, res = solved
    rows = export_schedule(res.plan, desk_prep.inst)
    built = sum(r["quantity"] for r in rows if r["event"] == "manufacture")
    shipped = sum(r["quantity"] for r in rows if r["event"] == "dispatch")
    assert built == shipped == pytest.approx(sum(res.plan.first.r.values()))
    got = sum(r["quantity"] for r in rows if r["event"] == "receive")
    assert got == pytest.approx(sum(res.plan.first.z.values()))
    assert [r["event"] for r in rows if r["event"] == "deadline"] == ["deadline"] * len(desk_prep.inst.customers)


def test_dispatch_reaches_customer_by_deadline(solved, desk_prep):
    _, res = solved
    due = {c.id: c.deadline_fp for c in desk_prep.inst.customers}
    for r in export_schedule(res.plan, desk_prep.inst):
        if r["event"] == "dispatch":
            assert r["ref_day"] <= due[r["customer_id"]]


def test_rows_are_sorted(solved, desk_prep):
    _, res = solved
    rows = export_schedule(res.plan, desk_prep.inst, scenario=1)
    assert rows == sort_rows(rows)
    rank = {e: n for n, e in enumerate(EVENTS)}
    keys = [(r["day"], rank[r["event"]]) for r in rows]
    assert keys == sorted(keys)
    assert max(r["day"] for r in rows) > desk_prep.inst.window[0].end


def test_unknown_customer_rejected(solved, desk_prep):
    import copy
    _, res = solved
    bad = copy.deepcopy(res.plan)
    bad.first.r[(3, "zz", "air")] = 1.0
    with pytest.raises(InconsistentPlan):
        export_schedule(bad, desk_prep.inst)


def test_empty_plan():
    assert export_schedule(None) == []


def test_csv_round_trip(solved, desk_prep):
    sset, res = solved
    rows = export_schedule(res.plan, desk_prep.inst)
    text = to_csv(rows, SCHEDULE_COLUMNS, provenance(0, "abc"))
    assert text.startswith("# engine: evtolplan\n")
    back = read_csv(text)
    assert len(back) == len(rows)
    assert [r["event"] for r in back] == [r["event"] for r in rows]
    cb = evaluate_plan(res.plan, desk_prep, sset)
    costs = export_cost_breakdown({"plan": cb})
    assert float(read_csv(to_csv(costs, COST_COLUMNS))[0]["TP"]) == pytest.approx(cb.profit, abs=1e-6)


def test_figures(tmp_path, solved, desk_prep):
    sset, res = solved
    rows = export_schedule(res.plan, desk_prep.inst)
    plot_schedule(rows, tmp_path / "s.png")
    plot_costs(export_cost_breakdown({"plan": evaluate_plan(res.plan, desk_prep, sset)}), tmp_path / "c.png")
    for name in ("s.png", "c.png"):
        assert (tmp_path / name).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    # same input, same bytes
    plot_schedule(rows, tmp_path / "s2.png")
    assert (tmp_path / "s.png").read_bytes() == (tmp_path / "s2.png").read_bytes()
