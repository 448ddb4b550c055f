"""Plans, cost replay and conservation audits.

Everything here recomputes from instance data directly and never looks at
solver matrices, so it doubles as an oracle for the model builder.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .domain import CostBreakdown, Instance, emission_cost_on_day, transport_days
from .errors import InconsistentPlan
from .scenarios import ScenarioSet

TOL = 1e-6


@dataclass
class StagePlan:
    z: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    r: dict = field(default_factory=dict)
    alpha: dict = field(default_factory=dict)

    def receipts_by_supplier(self) -> dict:
        out: dict = {}
        for (t, i, j, k), q in self.z.items():
            out[(i, j)] = out.get((i, j), 0.0) + q
        return out

    def to_dict(self) -> dict:
        def enc(d):
            return [list(k) + [v] for k, v in sorted(d.items(), key=lambda kv: tuple(map(str, kv[0])))]
        return {"z": enc(self.z), "v": enc(self.v), "r": enc(self.r), "alpha": enc(self.alpha)}

    @classmethod
    def from_dict(cls, d: dict) -> "StagePlan":
        def dec(rows, n):
            return {tuple(int(x) if m == 0 else x for m, x in enumerate(row[:n])): float(row[n]) for row in rows}
        return cls(z=dec(d["z"], 4), v=dec(d["v"], 4), r=dec(d["r"], 3), alpha=dec(d["alpha"], 2))


@dataclass
class Plan:
    offset: int
    H: int
    T: int
    single: bool
    first: StagePlan
    phi: dict
    scenarios: list = field(default_factory=list)
    probs: list = field(default_factory=list)
    d2: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "offset": self.offset, "H": self.H, "T": self.T, "single": self.single,
            "d2": dict(sorted(self.d2.items())), "phi": dict(sorted(self.phi.items())),
            "probs": [float(p) for p in self.probs],
            "first": self.first.to_dict(),
            "scenarios": [s.to_dict() for s in self.scenarios],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Plan":
        return cls(offset=d["offset"], H=d["H"], T=d["T"], single=d["single"], first=StagePlan.from_dict(d["first"]),
                   phi={k: float(v) for k, v in d["phi"].items()},
                   scenarios=[StagePlan.from_dict(s) for s in d["scenarios"]], probs=list(d["probs"]),
                   d2={k: int(v) for k, v in d["d2"].items()})


# ----------------------------------------------------------------------
# parameters for replay
# ----------------------------------------------------------------------

def _sup_tdays(inst: Instance, i: str, j: str, k: str) -> int:
    s = inst.supplier(i, j)
    r = s.routes[k]
    return transport_days(r.distance_km, inst.modes[k], r.available)


def _cust_tdays(inst: Instance, l: str, k: str) -> int:
    r = inst.customer(l).routes[k]
    return transport_days(r.distance_km, inst.modes[k], r.available)


@dataclass
class Realization:
    prices: dict
    capacities: dict
    mfg_cost: float
    extra: dict


def first_realization(inst: Instance) -> Realization:
    return Realization(prices={(s.part_id, s.id): s.price for s in inst.suppliers},
                       capacities={(s.part_id, s.id): s.capacity for s in inst.suppliers},
                       mfg_cost=inst.em.base_mfg_cost, extra={c.id: 0.0 for c in inst.customers})


def scenario_realization(inst: Instance, sset: ScenarioSet, s: int) -> Realization:
    base = first_realization(inst)
    return Realization(
        prices={k: sset.value(s, "price", *k, default=v) for k, v in base.prices.items()},
        capacities={k: sset.value(s, "capacity", *k, default=v) for k, v in base.capacities.items()},
        mfg_cost=sset.value(s, "mfg_cost", default=base.mfg_cost),
        extra={l: sset.value(s, "extra_demand", l, default=0.0) for l in base.extra},
    )


# ----------------------------------------------------------------------
# cost replay
# ----------------------------------------------------------------------

def stage_costs(inst: Instance, ha: Mapping[str, float], hb: float, plan: Plan, sp: StagePlan,
                real: Realization, stage: int) -> CostBreakdown:
    cb = CostBreakdown()
    for (t, i, j, k), q in sp.z.items():
        if q == 0:
            continue
        g = inst.offset + t
        year = inst.horizon.year_of(g)
        w = inst.part(i).weight
        route = inst.supplier(i, j).routes[k]
        cb.tppc += real.prices[(i, j)] * q
        cb.ttcb += inst.modes[k].freight_cost(year) * w * route.distance_km * q
        cb.tecb += emission_cost_on_day(inst, g) * route.emission_t_per_t * w * q
    we = inst.em.evtol_weight
    for (t, l, k), q in sp.r.items():
        if q == 0:
            continue
        g = inst.offset + t
        year = inst.horizon.year_of(g)
        route = inst.customer(l).routes[k]
        cb.tmc += real.mfg_cost * q
        cb.ttcf += inst.modes[k].freight_cost(year) * we * route.distance_km * q
        cb.tecf += emission_cost_on_day(inst, g) * route.emission_t_per_t * we * q
        cb.ticf += hb * hold_days(inst, plan, l, k, t, stage) * q
    last = plan.H if stage == 1 else plan.T
    for (t, i), q in sp.alpha.items():
        if t < last:
            cb.ticb += ha[i] * q
    return cb


def hold_days(inst: Instance, plan: Plan, l: str, k: str, t: int, stage: int) -> int:
    tp = _cust_tdays(inst, l, k)
    c = inst.customer(l)
    due1 = c.deadline_fp - plan.offset - tp
    due2 = c.deadline_sp - plan.offset - tp
    if stage == 1 and t <= due1:
        return due1 - t
    return due2 - t


def evaluate_stage(inst: Instance, ha, hb, plan: Plan, stage: int, sset: ScenarioSet | None = None,
                   s: int | None = None) -> CostBreakdown:
    eta = inst.em.selling_price
    if stage == 1:
        cb = stage_costs(inst, ha, hb, plan, plan.first, first_realization(inst), 1)
        cb.revenue = eta * sum(c.orders_fp for c in inst.customers)
        cb.tpc = sum(float(inst.delay_penalties.get(c.id, 0.0)) for c in inst.customers)
        return cb
    real = scenario_realization(inst, sset, s)
    cb = stage_costs(inst, ha, hb, plan, plan.scenarios[s], real, 2)
    cb.revenue = eta * sum(plan.d2.get(c.id, 0) + c.orders_sp_initial + real.extra[c.id] for c in inst.customers)
    return cb


def evaluate_plan(plan: Plan, prep, sset: ScenarioSet | None = None, check: bool = True) -> CostBreakdown:
    """Expected cost breakdown: first period plus probability-weighted second."""
    inst = prep.inst
    if check:
        bad = [v for v in audit_plan(plan, prep, sset) if v.startswith(("flow", "lead"))]
        if bad:
            raise InconsistentPlan("; ".join(bad[:5]))
    total = evaluate_stage(inst, prep.ha, prep.hb, plan, 1)
    for s, p in enumerate(plan.probs):
        total = total + evaluate_stage(inst, prep.ha, prep.hb, plan, 2, sset, s).scaled(p)
    return total


# ----------------------------------------------------------------------
# audits
# ----------------------------------------------------------------------

def audit_plan(plan: Plan, prep, sset: ScenarioSet | None = None, tol: float = TOL) -> list[str]:
    """Replay every structural rule of the model on a plan; return violations."""
    inst = prep.inst
    out: list[str] = []
    theta = {p.id: p.per_evtol for p in inst.parts}
    em = inst.em
    H, T = plan.H, plan.T

    def check_stage(sp: StagePlan, stage: int, tag: str, caps: Mapping, start_stock: Mapping):
        lo, hi = (1, H) if stage == 1 else (H + 1, T)
        for key, q in list(sp.z.items()) + list(sp.v.items()) + list(sp.r.items()) + list(sp.alpha.items()):
            if q < -tol:
                out.append(f"sign[{tag}]: negative value {key}={q}")
        if stage == 1:
            for key, q in list(sp.z.items()) + list(sp.v.items()) + list(sp.r.items()):
                if abs(q - round(q)) > tol:
                    out.append(f"integrality[{tag}]: {key}={q}")
        # order/receipt coupling
        for (t, i, j, k), q in sp.z.items():
            if abs(q) <= tol:
                continue
            if not lo <= t <= hi:
                out.append(f"lead[{tag}]: receipt day {t} outside [{lo}, {hi}]")
            t1 = t - inst.supplier(i, j).lead_time_days - _sup_tdays(inst, i, j, k)
            if t1 < lo:
                out.append(f"lead[{tag}]: order day {t1} for receipt {(t, i, j, k)} precedes {lo}")
            if abs(sp.v.get((t1, i, j, k), 0.0) - q) > tol:
                out.append(f"lead[{tag}]: order {(t1, i, j, k)} != receipt {q}")
        for (t1, i, j, k), q in sp.v.items():
            if abs(q) <= tol:
                continue
            t = t1 + inst.supplier(i, j).lead_time_days + _sup_tdays(inst, i, j, k)
            if abs(sp.z.get((t, i, j, k), 0.0) - q) > tol:
                out.append(f"lead[{tag}]: order {(t1, i, j, k)} has no matching receipt")
        # manufacturing capacity
        per_day: dict = {}
        for (t, l, k), q in sp.r.items():
            per_day[t] = per_day.get(t, 0.0) + q
            if not lo <= t <= hi:
                out.append(f"mfg[{tag}]: manufacture day {t} outside [{lo}, {hi}]")
        for t, q in per_day.items():
            if q > em.daily_mfg_cap + tol:
                out.append(f"mfg[{tag}]: day {t} builds {q} > {em.daily_mfg_cap}")
        # part flow, availability and capacity
        rec: dict = {}
        for (t, i, j, k), q in sp.z.items():
            rec[(t, i)] = rec.get((t, i), 0.0) + q
        for i in theta:
            stock = start_stock[i]
            for t in range(lo, hi + 1):
                need_next = theta[i] * per_day.get(t, 0.0)
                if need_next > stock + tol:
                    out.append(f"avail[{tag}]: part {i} day {t} needs {need_next} with {stock} on hand")
                stock = stock + rec.get((t, i), 0.0) - need_next
                a = sp.alpha.get((t, i), 0.0)
                if abs(a - stock) > tol * max(1.0, abs(stock)):
                    out.append(f"flow[{tag}]: alpha[{t},{i}]={a} but replay gives {stock}")
                if stock < -tol:
                    out.append(f"flow[{tag}]: negative stock of {i} on day {t}")
                if a > inst.part(i).inventory_cap + tol:
                    out.append(f"invcap[{tag}]: alpha[{t},{i}]={a} > {inst.part(i).inventory_cap}")
        # eVTOL holding cap (held units times days, per build day)
        held: dict = {}
        for (t, l, k), q in sp.r.items():
            held[t] = held.get(t, 0.0) + hold_days(inst, plan, l, k, t, stage) * q
            if hold_days(inst, plan, l, k, t, stage) < -tol:
                out.append(f"due[{tag}]: build {(t, l, k)} after its dispatch day")
        for t, h in held.items():
            if h > em.evtol_inventory_cap + tol:
                out.append(f"evtolcap[{tag}]: day {t} holds {h} > {em.evtol_inventory_cap}")
        # supplier capacity on orders
        used: dict = {}
        for (t1, i, j, k), q in sp.v.items():
            used[(i, j)] = used.get((i, j), 0.0) + q
        for key, q in used.items():
            if q > caps[key] + tol:
                out.append(f"supcap[{tag}]: {key} ordered {q} > {caps[key]}")

    first_caps = {(s.part_id, s.id): s.capacity for s in inst.suppliers}
    alpha0 = {p.id: float(inst.initial_inventory.get(p.id, 0.0)) for p in inst.parts}
    check_stage(plan.first, 1, "first", first_caps, alpha0)

    # fulfilment and over-manufacture
    for c in inst.customers:
        l = c.id
        need = c.orders_fp - float(inst.prebuilt.get(l, 0.0))
        due, total = 0.0, 0.0
        for (t, ll, k), q in plan.first.r.items():
            if ll != l:
                continue
            total += q
            if t <= c.deadline_fp - plan.offset - _cust_tdays(inst, l, k):
                due += q
        if due < need - tol:
            out.append(f"fulfil[first]: customer {l} gets {due} by deadline, needs {need}")
        if abs(plan.phi.get(l, 0.0) - (total - need)) > tol:
            out.append(f"phi: customer {l} phi={plan.phi.get(l, 0.0)} but builds-need={total - need}")
        if plan.phi.get(l, 0.0) < -tol:
            out.append(f"phi: customer {l} negative over-manufacture")

    # quality floor
    num = den = 0.0
    for (t, i, j, k), q in plan.first.z.items():
        w = prep.weights.omega[i]
        num += w * inst.supplier(i, j).quality * q
        den += w * q
    if den > tol and num / den < em.base_quality + em.quality_epsilon - 1e-9:
        out.append(f"quality: batch quality {num / den} below {em.base_quality} + eps")

    end_stock = {i: plan.first.alpha.get((H, i), 0.0) for i in theta}
    for s, sp in enumerate(plan.scenarios):
        real = scenario_realization(inst, sset, s)
        check_stage(sp, 2, f"s{s}", real.capacities, end_stock)
        for c in inst.customers:
            l = c.id
            got = sum(q for (t, ll, k), q in sp.r.items() if ll == l)
            for (t, ll, k), q in sp.r.items():
                if ll == l and q > tol and t > c.deadline_sp - plan.offset - _cust_tdays(inst, l, k):
                    out.append(f"fulfil[s{s}]: build {(t, l, k)} cannot reach the deadline")
            want = plan.d2.get(l, 0) + c.orders_sp_initial + real.extra[l] - plan.phi.get(l, 0.0)
            if abs(got - want) > tol:
                out.append(f"fulfil[s{s}]: customer {l} gets {got}, needs {want}")
    return out


def receipts_quality(plan: Plan, prep) -> float:
    from .quality import batch_quality
    return batch_quality(plan.first.receipts_by_supplier(), prep.inst, prep.weights)
