import copy
import json

import pytest

from evtolplan.errors import InconsistentPlan
from evtolplan.evaluate import Plan, audit_plan, evaluate_plan, receipts_quality
from evtolplan.model import build_two_stage
from evtolplan.scenarios import scenario_set_for
from evtolplan.solver import solve_model


@pytest.fixture(scope="module")
def solved(desk_prep):
    sset = scenario_set_for(desk_prep.inst, 3, 1)
    res = solve_model(build_two_stage(desk_prep, sset), "extensive")
    return sset, res


def test_solved_plan_passes_audit(solved, desk_prep):
    sset, res = solved
    assert audit_plan(res.plan, desk_prep, sset) == []


def test_objective_replay(solved, desk_prep):
    sset, res = solved
    cb = evaluate_plan(res.plan, desk_prep, sset)
    assert cb.profit == pytest.approx(res.profit, rel=1e-6)
    assert cb.total_cost == pytest.approx(res.cost, rel=1e-6)
    assert cb.tpc == 0.0


def test_quality_floor(solved, desk_prep):
    _, res = solved
    q = receipts_quality(res.plan, desk_prep)
    assert q >= desk_prep.inst.em.base_quality + desk_prep.inst.em.quality_epsilon - 1e-9


def test_missing_receipt_is_caught(solved, desk_prep):
    sset, res = solved
    bad = copy.deepcopy(res.plan)
    key = next(k for k, q in bad.first.z.items() if q > 0)
    bad.first.z[key] -= 1
    msgs = audit_plan(bad, desk_prep, sset)
    assert msgs
    with pytest.raises(InconsistentPlan):
        evaluate_plan(bad, desk_prep, sset)


def test_overbuild_is_caught(solved, desk_prep):
    sset, res = solved
    bad = copy.deepcopy(res.plan)
    key = next(k for k, q in bad.first.r.items() if q > 0)
    bad.first.r[key] += 50
    assert audit_plan(bad, desk_prep, sset)


def test_scenario_capacity_is_caught(solved, desk_prep):
    sset, res = solved
    bad = copy.deepcopy(res.plan)
    sp = bad.scenarios[0]
    (t, i, j, k), q = next((key, q) for key, q in sp.z.items() if q > 0)
    sp.z[(t, i, j, k)] = q + 1000
    assert any("s0" in m for m in audit_plan(bad, desk_prep, sset))


def test_plan_json_round_trip(solved):
    _, res = solved
    doc = json.loads(json.dumps(res.plan.to_dict()))
    again = Plan.from_dict(doc)
    assert again.to_dict() == res.plan.to_dict()
