"""Two-stage MILP assembly.

Local day 1 is the first day of the current planning horizon; days 1..H form
the first period (integer first stage) and days H+1..T the second period,
one continuous block per scenario.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .domain import (
    Instance,
    Period,
    HorizonLayout,
    contract_value,
    delay_penalty,
    emission_cost_on_day,
    filter_suppliers,
    holding_costs,
    route_days,
    validate_instance,
)
from .errors import DataError, DeadlineBeforeMinimum, InfeasibleStatic
from .quality import QualityWeights, ewm_weights
from .scenarios import ScenarioSet

FIRST_KINDS = ("z", "v", "r", "alpha", "phi")
SECOND_KINDS = ("zs", "vs", "rs", "alphas")
INTEGER_KINDS = ("z", "v", "r")


@dataclass(frozen=True)
class VarId:
    kind: str
    idx: tuple
    scenario: int | None = None

    @property
    def stage(self) -> int:
        return 1 if self.scenario is None else 2

    @property
    def name(self) -> str:
        parts = [self.kind] + [str(x) for x in self.idx]
        if self.scenario is not None:
            parts.append(f"s{self.scenario}")
        return "_".join(parts)


@dataclass(frozen=True)
class LinearConstraint:
    terms: tuple
    sense: str
    rhs: float
    label: str
    key: tuple = ()

    @property
    def name(self) -> str:
        return "_".join([self.label] + [str(x) for x in self.key])


class Block:
    def __init__(self, scenario: int | None = None):
        self.scenario = scenario
        self.vars: list[VarId] = []
        self.cost: list[float] = []
        self.integer: list[bool] = []
        self.rows: list[LinearConstraint] = []
        self._pos: dict[VarId, int] = {}

    def add_var(self, vid: VarId, cost: float = 0.0, integer: bool = False) -> VarId:
        if vid in self._pos:
            raise ValueError(f"duplicate variable {vid.name}")
        self._pos[vid] = len(self.vars)
        self.vars.append(vid)
        self.cost.append(float(cost))
        self.integer.append(bool(integer))
        return vid

    def has(self, vid: VarId) -> bool:
        return vid in self._pos

    def add_row(self, terms, sense: str, rhs: float, label: str, key: tuple = ()):
        merged: dict[VarId, float] = {}
        for v, c in terms:
            merged[v] = merged.get(v, 0.0) + c
        clean = tuple((v, c) for v, c in merged.items() if c != 0.0)
        if sense not in ("<=", "=", ">="):
            raise ValueError(sense)
        self.rows.append(LinearConstraint(clean, sense, float(rhs), label, tuple(key)))

    def cost_of(self, vid: VarId) -> float:
        return self.cost[self._pos[vid]]


@dataclass
class Prepared:
    """Filtered instance together with the parameters derived from it."""

    inst: Instance
    removed: list
    ha: dict
    hb: float
    weights: QualityWeights


def prepare(instance: Instance) -> Prepared:
    bad = validate_instance(instance)
    if bad:
        raise DataError("invalid instance: " + "; ".join(bad[:5]))
    # holding costs average over the full supplier list, before the quality filter
    ha, hb = holding_costs(instance)
    filtered, removed = filter_suppliers(instance)
    return Prepared(inst=filtered, removed=removed, ha=ha, hb=hb, weights=ewm_weights(filtered))


@dataclass(frozen=True)
class SupRoute:
    part: str
    supplier: str
    mode: str
    lead: int
    tdays: int
    dist: float
    ghg: float


@dataclass(frozen=True)
class CustRoute:
    customer: str
    mode: str
    tdays: int
    dist: float
    ghg: float


@dataclass
class ModelData:
    H: int
    T: int
    single: bool
    offset: int
    sup_routes: list
    cust_routes: list
    d1: dict
    d2: dict
    D1: dict
    D2: dict
    prebuilt: dict
    alpha0: dict

    def year(self, inst: Instance, t: int) -> int:
        return inst.horizon.year_of(self.offset + t)


def supplier_routes(inst: Instance) -> list[SupRoute]:
    out = []
    for s in inst.suppliers:
        for mode in sorted(s.available_modes()):
            r = s.routes[mode]
            out.append(SupRoute(s.part_id, s.id, mode, s.lead_time_days, route_days(inst, r, mode),
                                r.distance_km, r.emission_t_per_t))
    return out


def customer_routes(inst: Instance) -> list[CustRoute]:
    out = []
    for c in inst.customers:
        for mode in sorted(c.available_modes()):
            r = c.routes[mode]
            out.append(CustRoute(c.id, mode, route_days(inst, r, mode), r.distance_km, r.emission_t_per_t))
    return out


def model_data(inst: Instance) -> ModelData:
    return ModelData(
        H=inst.first_stage_days,
        T=inst.horizon_days,
        single=inst.is_single_period,
        offset=inst.offset,
        sup_routes=supplier_routes(inst),
        cust_routes=customer_routes(inst),
        d1={c.id: inst.local_deadline_fp(c) for c in inst.customers},
        d2={c.id: inst.local_deadline_sp(c) for c in inst.customers},
        D1={c.id: c.orders_fp for c in inst.customers},
        D2={c.id: c.orders_sp_initial for c in inst.customers},
        prebuilt={c.id: float(inst.prebuilt.get(c.id, 0.0)) for c in inst.customers},
        alpha0={p.id: float(inst.initial_inventory.get(p.id, 0.0)) for p in inst.parts},
    )


def first_stage_dispatch(md: ModelData, cr: CustRoute, t: int) -> int | None:
    """Local dispatch day of an eVTOL built on day ``t`` of the first period."""
    due1 = md.d1[cr.customer] - cr.tdays
    if t <= due1:
        return due1
    if md.single:
        return None
    due2 = md.d2[cr.customer] - cr.tdays
    return due2 if t <= due2 else None


def z_days(md: ModelData, sr: SupRoute, stage: int) -> range:
    """Receipt days whose order day is inside the same period."""
    lo = 1 if stage == 1 else md.H + 1
    hi = md.H if stage == 1 else md.T
    return range(max(lo, lo + sr.lead + sr.tdays), hi + 1)


def _z_unit_cost(inst: Instance, md: ModelData, sr: SupRoute, t: int, price: float) -> float:
    w = inst.part(sr.part).weight
    year = md.year(inst, t)
    freight = inst.modes[sr.mode].freight_cost(year) * w * sr.dist
    ghg = emission_cost_on_day(inst, md.offset + t) * sr.ghg * w
    return price + freight + ghg


def _r_unit_cost(inst: Instance, md: ModelData, cr: CustRoute, t: int, mfg: float, hold_days: int,
                 hb: float) -> float:
    we = inst.em.evtol_weight
    year = md.year(inst, t)
    freight = inst.modes[cr.mode].freight_cost(year) * we * cr.dist
    ghg = emission_cost_on_day(inst, md.offset + t) * cr.ghg * we
    return freight + ghg + mfg + hb * hold_days


def check_static_feasibility(inst: Instance, md: ModelData) -> None:
    need = sum(max(0.0, md.D1[l] - md.prebuilt[l]) for l in md.D1)
    for p in inst.parts:
        cap = sum(s.capacity for s in inst.suppliers_of(p.id))
        if cap + md.alpha0[p.id] < p.per_evtol * need - 1e-9:
            raise InfeasibleStatic(
                f"part {p.id}: supplier capacity {cap:g} cannot cover {p.per_evtol} x {need:g} units"
            )


def build_first_stage_block(prep: Prepared, d2: Mapping[str, int] | None = None,
                            strict: bool = False) -> tuple[Block, ModelData]:
    inst = prep.inst
    md = model_data(inst)
    check_static_feasibility(inst, md)
    H = md.H
    em = inst.em
    b = Block()
    parts = [p.id for p in inst.parts]
    theta = {p.id: p.per_evtol for p in inst.parts}

    z_by_day: dict[tuple[int, str], list[VarId]] = {}
    z_by_sup: dict[tuple[str, str], list[VarId]] = {}
    quality_terms = []
    for sr in md.sup_routes:
        price = inst.supplier(sr.part, sr.supplier).price
        q = inst.supplier(sr.part, sr.supplier).quality
        wq = prep.weights.omega[sr.part] * (q - em.base_quality - em.quality_epsilon)
        for t in z_days(md, sr, 1):
            z = b.add_var(VarId("z", (t, sr.part, sr.supplier, sr.mode)), _z_unit_cost(inst, md, sr, t, price), True)
            t1 = t - sr.lead - sr.tdays
            v = b.add_var(VarId("v", (t1, sr.part, sr.supplier, sr.mode)), 0.0, True)
            b.add_row([(v, 1.0), (z, -1.0)], "=", 0.0, "eq36", (t1, sr.part, sr.supplier, sr.mode))
            z_by_day.setdefault((t, sr.part), []).append(z)
            z_by_sup.setdefault((sr.part, sr.supplier), []).append(v)
            quality_terms.append((z, wq))

    r_by_day: dict[int, list[VarId]] = {}
    r_by_cust: dict[str, list[VarId]] = {}
    r_due: dict[str, list[VarId]] = {}
    hold_terms: dict[int, list] = {}
    for cr in md.cust_routes:
        due1 = md.d1[cr.customer] - cr.tdays
        for t in range(1, H + 1):
            disp = first_stage_dispatch(md, cr, t)
            if disp is None:
                continue
            hold = disp - t
            r = b.add_var(VarId("r", (t, cr.customer, cr.mode)),
                          _r_unit_cost(inst, md, cr, t, em.base_mfg_cost, hold, prep.hb), True)
            r_by_day.setdefault(t, []).append(r)
            r_by_cust.setdefault(cr.customer, []).append(r)
            if t <= due1:
                r_due.setdefault(cr.customer, []).append(r)
            if hold > 0:
                hold_terms.setdefault(t, []).append((r, float(hold)))

    for c in inst.customers:
        l = c.id
        need = md.D1[l] - md.prebuilt[l]
        b.add_row([(r, 1.0) for r in r_due.get(l, [])], ">=", need, "eq20", (l,))
    for c in inst.customers:
        l = c.id
        phi = b.add_var(VarId("phi", (l,)), 0.0, strict)
        need = md.D1[l] - md.prebuilt[l]
        b.add_row([(phi, 1.0)] + [(r, -1.0) for r in r_by_cust.get(l, [])], "=", -need, "eq21", (l,))
    for t in range(1, H + 1):
        if r_by_day.get(t):
            b.add_row([(r, 1.0) for r in r_by_day[t]], "<=", em.daily_mfg_cap, "eq23", (t,))

    for i in parts:
        ha = prep.ha[i]
        prev = None
        for t in range(1, H + 1):
            a = b.add_var(VarId("alpha", (t, i)), ha if t < H else 0.0, strict)
            terms = [(a, 1.0)] + [(z, -1.0) for z in z_by_day.get((t, i), [])]
            terms += [(r, float(theta[i])) for r in r_by_day.get(t, [])]
            if prev is None:
                b.add_row(terms, "=", md.alpha0[i], "eq25", (t, i))
            else:
                b.add_row(terms + [(prev, -1.0)], "=", 0.0, "eq25", (t, i))
            prev = a
        if r_by_day.get(1):
            b.add_row([(r, float(theta[i])) for r in r_by_day[1]], "<=", md.alpha0[i], "eq28", (0, i))
        for t in range(1, H):
            nxt = r_by_day.get(t + 1, [])
            if nxt:
                b.add_row([(r, float(theta[i])) for r in nxt] + [(VarId("alpha", (t, i)), -1.0)], "<=", 0.0,
                          "eq28", (t, i))
        cap = inst.part(i).inventory_cap
        for t in range(1, H + 1):
            b.add_row([(VarId("alpha", (t, i)), 1.0)], "<=", cap, "eq30", (t, i))

    for t in sorted(hold_terms):
        b.add_row(hold_terms[t], "<=", em.evtol_inventory_cap, "eq34", (t,))
    for s in inst.suppliers:
        vs = z_by_sup.get((s.part_id, s.id))
        if vs:
            b.add_row([(v, 1.0) for v in vs], "<=", s.capacity, "eq38", (s.part_id, s.id))
    if quality_terms:
        b.add_row(quality_terms, ">=", 0.0, "eq18", ())
    return b, md


def build_scenario_block(prep: Prepared, md: ModelData, sset: ScenarioSet, s: int,
                         d2: Mapping[str, int]) -> Block:
    inst = prep.inst
    em = inst.em
    H, T = md.H, md.T
    b = Block(scenario=s)
    parts = [p.id for p in inst.parts]
    theta = {p.id: p.per_evtol for p in inst.parts}
    mfg = sset.value(s, "mfg_cost", default=em.base_mfg_cost)

    z_by_day: dict[tuple[int, str], list[VarId]] = {}
    v_by_sup: dict[tuple[str, str], list[VarId]] = {}
    for sr in md.sup_routes:
        price = sset.value(s, "price", sr.part, sr.supplier, default=inst.supplier(sr.part, sr.supplier).price)
        for t in z_days(md, sr, 2):
            z = b.add_var(VarId("zs", (t, sr.part, sr.supplier, sr.mode), s), _z_unit_cost(inst, md, sr, t, price))
            t1 = t - sr.lead - sr.tdays
            v = b.add_var(VarId("vs", (t1, sr.part, sr.supplier, sr.mode), s))
            b.add_row([(v, 1.0), (z, -1.0)], "=", 0.0, "eq37", (t1, sr.part, sr.supplier, sr.mode, f"s{s}"))
            z_by_day.setdefault((t, sr.part), []).append(z)
            v_by_sup.setdefault((sr.part, sr.supplier), []).append(v)

    r_by_day: dict[int, list[VarId]] = {}
    r_by_cust: dict[str, list[VarId]] = {}
    hold_terms: dict[int, list] = {}
    for cr in md.cust_routes:
        due2 = md.d2[cr.customer] - cr.tdays
        for t in range(H + 1, min(T, due2) + 1):
            hold = due2 - t
            r = b.add_var(VarId("rs", (t, cr.customer, cr.mode), s), _r_unit_cost(inst, md, cr, t, mfg, hold, prep.hb))
            r_by_day.setdefault(t, []).append(r)
            r_by_cust.setdefault(cr.customer, []).append(r)
            if hold > 0:
                hold_terms.setdefault(t, []).append((r, float(hold)))

    for c in inst.customers:
        l = c.id
        extra = sset.value(s, "extra_demand", l, default=0.0)
        rhs = d2.get(l, 0) + md.D2[l] + extra
        b.add_row([(r, 1.0) for r in r_by_cust.get(l, [])] + [(VarId("phi", (l,)), 1.0)], "=", rhs,
                  "eq22", (l, f"s{s}"))
    for t in range(H + 1, T + 1):
        if r_by_day.get(t):
            b.add_row([(r, 1.0) for r in r_by_day[t]], "<=", em.daily_mfg_cap, "eq24", (t, f"s{s}"))

    for i in parts:
        prev = VarId("alpha", (H, i))
        for t in range(H + 1, T + 1):
            a = b.add_var(VarId("alphas", (t, i), s), prep.ha[i] if t < T else 0.0)
            terms = [(a, 1.0), (prev, -1.0)] + [(z, -1.0) for z in z_by_day.get((t, i), [])]
            terms += [(r, float(theta[i])) for r in r_by_day.get(t, [])]
            b.add_row(terms, "=", 0.0, "eq27", (t, i, f"s{s}"))
            prev = a
        for t in range(H, T):
            nxt = r_by_day.get(t + 1, [])
            if not nxt:
                continue
            stock = VarId("alpha", (t, i)) if t == H else VarId("alphas", (t, i), s)
            b.add_row([(r, float(theta[i])) for r in nxt] + [(stock, -1.0)], "<=", 0.0, "eq29", (t, i, f"s{s}"))
        cap = inst.part(i).inventory_cap
        for t in range(H + 1, T + 1):
            b.add_row([(VarId("alphas", (t, i), s), 1.0)], "<=", cap, "eq31", (t, i, f"s{s}"))

    for t in sorted(hold_terms):
        b.add_row(hold_terms[t], "<=", em.evtol_inventory_cap, "eq35", (t, f"s{s}"))
    for sup in inst.suppliers:
        vs = v_by_sup.get((sup.part_id, sup.id))
        if vs:
            cap = sset.value(s, "capacity", sup.part_id, sup.id, default=sup.capacity)
            b.add_row([(v, 1.0) for v in vs], "<=", cap, "eq39", (sup.part_id, sup.id, f"s{s}"))
    return b


@dataclass
class TwoStageModel:
    first: Block
    scenarios: list
    probs: np.ndarray
    revenue_first: float
    revenue_scen: list
    penalty_cost: float
    data: ModelData
    d2: dict
    prep: Prepared = field(repr=False, default=None)

    @property
    def expected_revenue(self) -> float:
        return self.revenue_first + float(np.dot(self.probs, self.revenue_scen)) if self.scenarios else self.revenue_first

    @property
    def constant_cost(self) -> float:
        return self.penalty_cost


def build_two_stage(prep: Prepared, sset: ScenarioSet | None, d2: Mapping[str, int] | None = None,
                    strict: bool = False) -> TwoStageModel:
    inst = prep.inst
    d2 = {c.id: int((d2 or {}).get(c.id, 0)) for c in inst.customers}
    first, md = build_first_stage_block(prep, d2, strict=strict)
    blocks, probs, rev_s = [], [], []
    if not md.single:
        if sset is None or len(sset) == 0:
            raise ValueError("a two-period model needs at least one scenario")
        for s in range(len(sset)):
            blocks.append(build_scenario_block(prep, md, sset, s, d2))
            probs.append(sset.scenarios[s].prob)
            extra = sum(sset.value(s, "extra_demand", c.id, default=0.0) for c in inst.customers)
            rev_s.append(inst.em.selling_price * (sum(d2.values()) + sum(md.D2.values()) + extra))
    revenue = inst.em.selling_price * sum(md.D1.values())
    penalty = sum(float(inst.delay_penalties.get(c.id, 0.0)) for c in inst.customers)
    return TwoStageModel(first=first, scenarios=blocks, probs=np.asarray(probs, dtype=float), revenue_first=revenue,
                         revenue_scen=rev_s, penalty_cost=penalty, data=md, d2=d2, prep=prep)


# ----------------------------------------------------------------------
# flattening
# ----------------------------------------------------------------------

@dataclass
class FlatMilp:
    names: list
    vids: list
    c: np.ndarray
    integer: np.ndarray
    A: sparse.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    row_names: list
    row_labels: list


def rows_to_matrix(rows: Sequence[LinearConstraint], pos: Mapping[VarId, int], ncols: int):
    data, ri, ci = [], [], []
    lo = np.empty(len(rows))
    hi = np.empty(len(rows))
    for n, row in enumerate(rows):
        for v, c in row.terms:
            ri.append(n)
            ci.append(pos[v])
            data.append(c)
        lo[n] = row.rhs if row.sense in (">=", "=") else -np.inf
        hi[n] = row.rhs if row.sense in ("<=", "=") else np.inf
    A = sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), ncols))
    return A, lo, hi


def build_extensive_form(model: TwoStageModel) -> FlatMilp:
    vids = list(model.first.vars)
    cost = list(model.first.cost)
    integer = list(model.first.integer)
    rows = list(model.first.rows)
    for p, blk in zip(model.probs, model.scenarios):
        vids += blk.vars
        cost += [p * c for c in blk.cost]
        integer += blk.integer
        rows += blk.rows
    pos = {v: n for n, v in enumerate(vids)}
    A, lo, hi = rows_to_matrix(rows, pos, len(vids))
    return FlatMilp(names=[v.name for v in vids], vids=vids, c=np.asarray(cost), integer=np.asarray(integer),
                    A=A, row_lo=lo, row_hi=hi, row_names=[r.name for r in rows], row_labels=[r.label for r in rows])


def census(model: TwoStageModel) -> dict:
    """Variable and constraint counts per kind / label."""
    vars_: dict[str, int] = {}
    rows: dict[str, int] = {}
    for blk in [model.first] + list(model.scenarios):
        for v in blk.vars:
            vars_[v.kind] = vars_.get(v.kind, 0) + 1
        for r in blk.rows:
            rows[r.label] = rows.get(r.label, 0) + 1
    return {"variables": dict(sorted(vars_.items())), "constraints": dict(sorted(rows.items())),
            "scenarios": len(model.scenarios)}


# ----------------------------------------------------------------------
# horizon extension
# ----------------------------------------------------------------------

def extend_layout(layout: HorizonLayout, first: int, extension: int) -> HorizonLayout:
    """Lengthen each period of the planning window starting at ``first``.

    Every later period shifts right by the accumulated extension.
    """
    if extension <= 0:
        return layout
    window = set(layout.planning_periods(first))
    periods, shift = [], 0
    for n, p in enumerate(layout.periods):
        start = p.start + shift
        if n in window:
            shift += extension
        periods.append(Period(start, p.end + shift, p.year))
    return replace(layout, periods=tuple(periods))


def apply_horizon_extension(inst: Instance, new_deadlines: Mapping[str, int], min_delays: Mapping[str, int] | None = None,
                            max_delays: Mapping[str, int] | None = None) -> Instance:
    """Move first-period deadlines, stretch the window and price the delays.

    ``min_delays``/``max_delays`` come from the delay assessment; a deadline
    earlier than the minimum is rejected.
    """
    customers, penalties = [], dict(inst.delay_penalties)
    latest = 0
    for c in inst.customers:
        new = int(new_deadlines.get(c.id, c.deadline_fp))
        delay = new - c.deadline_fp
        if min_delays is not None and delay < min_delays.get(c.id, 0):
            raise DeadlineBeforeMinimum(
                f"customer {c.id}: deadline {new} is {delay} days late, minimum is {min_delays[c.id]}")
        if delay < 0:
            raise DeadlineBeforeMinimum(f"customer {c.id}: new deadline {new} precedes {c.deadline_fp}")
        penalties[c.id] = delay_penalty(inst.penalty_policy, contract_value(inst, c), delay)
        # second-period orders cannot fall due before the first-period ones
        customers.append(replace(c, deadline_fp=new, deadline_sp=max(c.deadline_sp, new)))
        latest = max(latest, new)
    fp_end = inst.window[0].end
    ext = max(0, latest - fp_end)
    step = max(1, inst.horizon.extension_step)
    ext = int(math.ceil(ext / step) * step)
    layout = extend_layout(inst.horizon, inst.start_period, ext)
    return replace(inst, customers=tuple(customers), delay_penalties=penalties, horizon=layout)
