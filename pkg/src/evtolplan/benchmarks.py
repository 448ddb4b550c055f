"""Comparison planners: deterministic, greedy heuristic and sequential."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .domain import CostBreakdown
from .errors import Infeasible, InfeasibleHeuristic, StageBInfeasible
from .evaluate import Plan, StagePlan, audit_plan, evaluate_plan, first_realization, scenario_realization
from .horizon import demand_fixed_point
from .model import (
    Prepared, _r_unit_cost, _z_unit_cost, build_extensive_form, build_two_stage, model_data,
)
from .scenarios import ScenarioSet, expected_scenario_set
from .solver import plan_from_flat, solve_model
from .solver.milp import solve_milp

FRONT_END = ("r", "rs", "phi")


@dataclass
class BenchmarkResult:
    name: str
    plan: Plan
    profit: float
    cost: CostBreakdown
    runtime: float
    d2: dict


def _d2(prep: Prepared, d2: Mapping[str, int] | None) -> dict:
    return {c.id: int((d2 or {}).get(c.id, 0)) for c in prep.inst.customers}


def scope_solve(prep: Prepared, sset: ScenarioSet, d2: Mapping[str, int] | None = None,
                method: str = "extensive", gap_tol: float | None = None, max_rounds: int = 10) -> BenchmarkResult:
    """The integrated two-stage plan; runs the uplift fixed point when ``d2`` is not given."""
    t0 = time.perf_counter()
    if d2 is None:
        fp = demand_fixed_point(prep, sset, max_rounds=max_rounds, method=method, gap_tol=gap_tol)
        res, d2 = fp.result, fp.d2
    else:
        res = solve_model(build_two_stage(prep, sset, _d2(prep, d2)), method, gap_tol=gap_tol)
    cb = evaluate_plan(res.plan, prep, sset)
    return BenchmarkResult("3SCOPE", res.plan, cb.profit, cb, time.perf_counter() - t0, dict(d2))


def deterministic_solve(prep: Prepared, sset: ScenarioSet, d2: Mapping[str, int] | None = None,
                        gap_tol: float | None = None) -> BenchmarkResult:
    """Single MILP with every uncertain parameter at its probability-weighted mean."""
    t0 = time.perf_counter()
    ev = expected_scenario_set(sset)
    res = solve_model(build_two_stage(prep, ev, _d2(prep, d2)), "extensive", gap_tol=gap_tol)
    cb = evaluate_plan(res.plan, prep, ev)
    return BenchmarkResult("deterministic", res.plan, cb.profit, cb, time.perf_counter() - t0, _d2(prep, d2))


def sequential_solve(prep: Prepared, sset: ScenarioSet, d2: Mapping[str, int] | None = None,
                     gap_tol: float | None = None) -> BenchmarkResult:
    """Procurement first with back-end costs only, then scheduling with receipts fixed."""
    t0 = time.perf_counter()
    model = build_two_stage(prep, sset, _d2(prep, d2))
    flat = build_extensive_form(model)
    gap = 1e-7 if gap_tol is None else gap_tol
    front = np.array([v.kind in FRONT_END for v in flat.vids])
    stage_a = solve_milp(np.where(front, 0.0, flat.c), flat.A, flat.row_lo, flat.row_hi, flat.integer, gap_tol=gap)
    fixed = np.array([v.kind in ("z", "v", "zs", "vs") for v in flat.vids])
    lb = np.where(fixed, np.round(stage_a.x) * flat.integer + stage_a.x * (1 - flat.integer), 0.0)
    ub = np.where(fixed, lb, np.inf)
    try:
        stage_b = solve_milp(flat.c, flat.A, flat.row_lo, flat.row_hi, flat.integer, lb=lb, ub=ub, gap_tol=gap)
    except Infeasible as exc:
        raise StageBInfeasible("no schedule supports the stage-A receipts") from exc
    plan = plan_from_flat(model, stage_b.x)
    cb = evaluate_plan(plan, prep, sset)
    return BenchmarkResult("sequential", plan, cb.profit, cb, time.perf_counter() - t0, _d2(prep, d2))


# ----------------------------------------------------------------------
# greedy heuristic
# ----------------------------------------------------------------------

def _front_modes(inst, md, l: str, deadline: int, earliest: int, hi: int):
    """Customer modes by unit cost whose dispatch day leaves room to build."""
    out = []
    for cr in md.cust_routes:
        if cr.customer != l:
            continue
        due = deadline - cr.tdays
        if due < earliest:
            continue
        out.append((_r_unit_cost(inst, md, cr, min(due, hi), 0.0, 0, 0.0), cr.tdays, cr.mode, due))
    return sorted(out)


def _earliest_build(md, lo: int, stock: Mapping[str, float], parts) -> int:
    if all(stock.get(p.id, 0.0) > 1e-9 for p in parts):
        return lo
    quickest = max(min(sr.lead + sr.tdays for sr in md.sup_routes if sr.part == p.id) for p in parts)
    return lo + quickest + 1


def _build_days(prep: Prepared, md, demand: Mapping[str, float], deadlines: Mapping[str, int], lo: int, hi: int,
                earliest: int, load: dict | None = None):
    """Backward manufacturing fill; returns ``(r, load, shortfall per customer)``."""
    inst = prep.inst
    R = inst.em.daily_mfg_cap
    load = {t: 0 for t in range(lo, hi + 1)} if load is None else load
    r: dict = {}
    short = {}
    plans = []
    for l, q in demand.items():
        if q <= 0:
            continue
        modes = _front_modes(inst, md, l, deadlines[l], earliest, hi)
        if not modes:
            short[l] = int(round(q))
            continue
        plans.append((modes[0][3], l, modes[0][2], q))
    # latest dispatch first, each filling capacity backwards from its dispatch day
    for due, l, k, q in sorted(plans, key=lambda x: (-x[0], x[1])):
        left = int(round(q))
        t = min(due, hi)
        while left > 0 and t >= earliest:
            take = min(R - load[t], left)
            if take > 0:
                load[t] += take
                r[(t, l, k)] = r.get((t, l, k), 0.0) + take
                left -= take
            t -= 1
        if left > 0:
            short[l] = left
    return r, load, short


def _schedule_stage(prep: Prepared, md, demand: Mapping[str, float], deadlines: Mapping[str, int], lo: int,
                    hi: int, prices: Mapping, caps: Mapping, stock: dict, stage: int,
                    prebuild: Mapping[str, float] | None = None) -> StagePlan:
    inst = prep.inst
    theta = {p.id: p.per_evtol for p in inst.parts}
    earliest = _earliest_build(md, lo, stock, inst.parts)
    sp = StagePlan()
    load = None
    if prebuild:
        # units for the next period go in first so they take the latest slots
        sp.r, load, short = _build_days(prep, md, prebuild, md.d2, lo, hi, earliest)
        if short:
            raise InfeasibleHeuristic(f"no room to prebuild {short} in the first period")
    r, load, short = _build_days(prep, md, demand, deadlines, lo, hi, earliest, load)
    if short:
        raise InfeasibleHeuristic(f"manufacturing capacity or transport cannot meet {short} in time")
    for key, q in r.items():
        sp.r[key] = sp.r.get(key, 0.0) + q

    remaining = dict(caps)
    ranked = {}
    for p in inst.parts:
        sups = sorted(inst.suppliers_of(p.id), key=lambda s: prices[(p.id, s.id)])  # stable: lowest index on ties
        ranked[p.id] = sups
    receipts: dict[tuple[int, str], float] = {}
    for t in sorted(d for d, u in load.items() if u > 0):
        for p in inst.parts:
            need = theta[p.id] * load[t]
            use = min(stock.get(p.id, 0.0), need)
            stock[p.id] = stock.get(p.id, 0.0) - use
            need -= use
            recv = t - 1
            for s in ranked[p.id]:
                if need <= 1e-9:
                    break
                cap = remaining[(p.id, s.id)]
                if cap <= 1e-9:
                    continue
                routes = [sr for sr in md.sup_routes if sr.part == p.id and sr.supplier == s.id
                          and recv - sr.lead - sr.tdays >= lo and recv >= lo]
                if not routes:
                    continue
                sr = min(routes, key=lambda r: (_z_unit_cost(inst, md, r, recv, 0.0), r.tdays, r.mode))
                take = min(cap, need)
                if stage == 1:
                    take = float(np.ceil(take - 1e-9))
                    take = min(take, np.floor(cap + 1e-9))
                    if take <= 0:
                        continue
                key = (recv, p.id, s.id, sr.mode)
                sp.z[key] = sp.z.get(key, 0.0) + take
                okey = (recv - sr.lead - sr.tdays, p.id, s.id, sr.mode)
                sp.v[okey] = sp.v.get(okey, 0.0) + take
                remaining[(p.id, s.id)] = cap - take
                receipts[(recv, p.id)] = receipts.get((recv, p.id), 0.0) + take
                need -= take
            if need > 1e-9:
                raise InfeasibleHeuristic(f"part {p.id}: {need:g} units short for production on day {t}")
    return sp


def _replay_alpha(inst, sp: StagePlan, lo: int, hi: int, start: Mapping[str, float]) -> None:
    theta = {p.id: p.per_evtol for p in inst.parts}
    level = {i: float(start.get(i, 0.0)) for i in theta}
    z_day: dict = {}
    for (t, i, j, k), q in sp.z.items():
        z_day[(t, i)] = z_day.get((t, i), 0.0) + q
    r_day: dict = {}
    for (t, l, k), q in sp.r.items():
        r_day[t] = r_day.get(t, 0.0) + q
    for t in range(lo, hi + 1):
        for i in theta:
            level[i] += z_day.get((t, i), 0.0) - theta[i] * r_day.get(t, 0.0)
            sp.alpha[(t, i)] = level[i] + 0.0


def heuristic_plan(prep: Prepared, sset: ScenarioSet | None, d2: Mapping[str, int] | None = None) -> BenchmarkResult:
    """Cheapest-supplier, just-in-time plan evaluated over the shared scenarios."""
    t0 = time.perf_counter()
    inst = prep.inst
    d2 = _d2(prep, d2)
    md = model_data(inst)
    base = first_realization(inst)
    alpha0 = {p.id: float(inst.initial_inventory.get(p.id, 0.0)) for p in inst.parts}

    dem1 = {l: max(0.0, md.D1[l] - md.prebuilt[l]) for l in md.D1}
    phi = {c.id: 0.0 for c in inst.customers}
    if not md.single:
        # whatever the second period cannot build in any scenario is built ahead
        dems = []
        for s in range(len(sset)):
            real = scenario_realization(inst, sset, s)
            dem2 = {l: d2[l] + md.D2[l] + real.extra[l] for l in md.D2}
            dems.append(dem2)
            _, _, short = _build_days(prep, md, dem2, md.d2, md.H + 1, md.T,
                                      _earliest_build(md, md.H + 1, {}, inst.parts))
            for l, q in short.items():
                phi[l] = max(phi[l], float(q))
        for l in phi:
            phi[l] = min(phi[l], min(d[l] for d in dems))
    first = _schedule_stage(prep, md, dem1, md.d1, 1, md.H, base.prices, base.capacities, dict(alpha0), 1,
                            prebuild={l: q for l, q in phi.items() if q > 0})
    _replay_alpha(inst, first, 1, md.H, alpha0)
    plan = Plan(offset=md.offset, H=md.H, T=md.T, single=md.single, first=first,
                phi=phi, d2=d2)
    if not md.single:
        end = {i: first.alpha.get((md.H, i), alpha0[i]) for i in alpha0}
        for s in range(len(sset)):
            real = scenario_realization(inst, sset, s)
            dem2 = {l: d2[l] + md.D2[l] + real.extra[l] - phi[l] for l in md.D2}
            sp = _schedule_stage(prep, md, dem2, md.d2, md.H + 1, md.T, real.prices, real.capacities, dict(end), 2)
            _replay_alpha(inst, sp, md.H + 1, md.T, end)
            plan.scenarios.append(sp)
            plan.probs.append(float(sset.scenarios[s].prob))
    bad = audit_plan(plan, prep, sset)
    if bad:
        raise InfeasibleHeuristic("; ".join(bad[:5]))
    cb = evaluate_plan(plan, prep, sset)
    return BenchmarkResult("heuristic", plan, cb.profit, cb, time.perf_counter() - t0, d2)


MODELS = {"det": "deterministic", "heur": "heuristic", "seq": "sequential", "scope": "3SCOPE"}


def run_benchmarks(prep: Prepared, sset: ScenarioSet, models: Sequence[str] = ("det", "heur", "seq", "scope"),
                   method: str = "extensive", gap_tol: float | None = None) -> list[BenchmarkResult]:
    """All requested planners on one scenario set, sharing the integrated model's uplift."""
    scope = scope_solve(prep, sset, method=method, gap_tol=gap_tol)
    out = []
    for m in models:
        if m == "scope":
            out.append(scope)
        elif m == "det":
            out.append(deterministic_solve(prep, sset, scope.d2, gap_tol))
        elif m == "seq":
            out.append(sequential_solve(prep, sset, scope.d2, gap_tol))
        elif m == "heur":
            out.append(heuristic_plan(prep, sset, scope.d2))
        else:
            raise ValueError(f"unknown model {m!r}")
    return out
