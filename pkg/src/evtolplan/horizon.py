"""Rolling-horizon controller, delay assessment and the quality/demand fixed point."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

from .domain import CostBreakdown, HorizonLayout, Instance, Period, instance_hash, route_days
from .errors import (
    DataError, EmptyBatch, Infeasible, NoSupplierForPart, OutOfRange, PlanningError,
)
from .evaluate import Plan, evaluate_stage, receipts_quality
from .model import Prepared, apply_horizon_extension, build_two_stage, prepare
from .quality import demand_uplift
from .scenarios import ScenarioSet, scenario_set_for
from .solver import SolveResult, solve_model

log = logging.getLogger(__name__)


# ----------------------------------------------------------------------
# delay assessment
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class DelayAssessment:
    y2: int
    y3: int
    y8: int
    y9: int
    y4: Mapping[str, int]
    y5: Mapping[str, int]
    y10: Mapping[str, int]
    min_delay: Mapping[str, int]
    max_delay: Mapping[str, int]
    min_supplier: tuple[str, str] | None = None
    max_supplier: tuple[str, str] | None = None

    @property
    def needs_extension(self) -> bool:
        return any(v > 0 for v in self.min_delay.values())


def _mode_days(inst: Instance, routes) -> list[int]:
    return [route_days(inst, r, m) for m, r in sorted(routes.items()) if r.available and m in inst.modes]


def assess_delays(inst: Instance) -> DelayAssessment:
    """Earliest and latest feasible first-period delivery delays per customer.

    ``inst`` is expected to be quality-filtered already. Suppliers and parts
    are scanned in declaration order, so ties resolve to the lowest index.
    Prebuilt units and parts already in stock are netted out first: a
    customer whose orders are all built, or a part whose whole requirement
    sits in inventory, imposes no delay.
    """
    open_orders = {c.id: max(0, c.orders_fp - int(round(inst.prebuilt.get(c.id, 0.0)))) for c in inst.customers}
    units = sum(open_orders.values())
    fastest, slowest = [], []
    for p in inst.parts:
        sups = inst.suppliers_of(p.id)
        if not sups:
            raise NoSupplierForPart(f"part {p.id} has no supplier left")
        if p.per_evtol * units <= inst.initial_inventory.get(p.id, 0.0) + 1e-9:
            continue
        fastest.append(min(sups, key=lambda s: s.lead_time_days))
        slowest.append(max(sups, key=lambda s: s.lead_time_days))
    if fastest:
        s2 = max(fastest, key=lambda s: s.lead_time_days)
        s8 = max(slowest, key=lambda s: s.lead_time_days)
        days2 = _mode_days(inst, s2.routes)
        days8 = _mode_days(inst, s8.routes)
        if not days2 or not days8:
            raise NoSupplierForPart(f"supplier {s2.part_id}-{s2.id} has no available transport mode")
        y2, y3 = s2.lead_time_days, min(days2)
        y8, y9 = s8.lead_time_days, max(days8)
        keys = (s2.key, s8.key)
    else:
        y2 = y3 = y8 = y9 = 0
        keys = (None, None)
    R = inst.em.daily_mfg_cap
    y4, y5, y10, lo_d, hi_d = {}, {}, {}, {}, {}
    for c in inst.customers:
        days = _mode_days(inst, c.routes)
        if not days:
            raise DataError(f"customer {c.id} has no available transport mode")
        y4[c.id], y10[c.id] = min(days), max(days)
        y5[c.id] = math.ceil(open_orders[c.id] / R)
        if open_orders[c.id] == 0:
            lo_d[c.id] = hi_d[c.id] = 0
            continue
        # earliest order day is local day 1; parts must be in stock the day before assembly
        slack = inst.local_deadline_fp(c) - 1
        lo_d[c.id] = max(0, y2 + y3 + y4[c.id] + y5[c.id] - slack)
        hi_d[c.id] = max(lo_d[c.id], y8 + y9 + y10[c.id] + y5[c.id] - slack)
    return DelayAssessment(y2, y3, y8, y9, y4, y5, y10, lo_d, hi_d, *keys)


def choose_new_deadlines(assessment: DelayAssessment, inst: Instance,
                         overrides: Mapping[str, int] | None = None) -> dict[str, int]:
    """Earliest feasible deadline per customer unless overridden inside the interval."""
    out = {}
    overrides = overrides or {}
    for c in inst.customers:
        lo = c.deadline_fp + assessment.min_delay[c.id]
        hi = c.deadline_fp + assessment.max_delay[c.id]
        if c.id in overrides:
            d = int(overrides[c.id])
            if not lo <= d <= hi:
                raise OutOfRange(f"customer {c.id}: deadline {d} outside [{lo}, {hi}]")
            out[c.id] = d
        else:
            out[c.id] = lo
    return out


# ----------------------------------------------------------------------
# quality <-> demand fixed point
# ----------------------------------------------------------------------

@dataclass
class FixedPointResult:
    d2: dict
    result: SolveResult
    rounds: int
    converged: bool
    oscillated: bool = False
    history: list = field(default_factory=list)
    q: float | None = None


def _uplifts(q: float | None, prep: Prepared) -> dict[str, int]:
    inst = prep.inst
    if q is None:
        return {c.id: 0 for c in inst.customers}
    return {c.id: demand_uplift(q, c, inst.em.base_quality, inst.em.quality_sensitivity) for c in inst.customers}


def _quality(plan: Plan, prep: Prepared) -> float | None:
    try:
        return receipts_quality(plan, prep)
    except EmptyBatch:
        return None


def demand_fixed_point(prep: Prepared, sset: ScenarioSet | None, max_rounds: int = 10,
                       method: str = "extensive", **solve_kw) -> FixedPointResult:
    """Alternate solve and uplift until the pre-order uplift stops moving.

    On a cycle the visited iterate with the best expected profit is kept.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    d2 = {c.id: 0 for c in prep.inst.customers}
    seen: list[tuple[dict, SolveResult, float | None]] = []
    for k in range(1, max_rounds + 1):
        model = build_two_stage(prep, sset, d2)
        res = solve_model(model, method, **solve_kw)
        q = _quality(res.plan, prep)
        seen.append((dict(d2), res, q))
        nxt = _uplifts(q, prep) if not model.data.single else dict(d2)
        if nxt == d2:
            return FixedPointResult(d2, res, k, True, history=[h[0] for h in seen], q=q)
        if any(h[0] == nxt for h in seen):
            best = max(seen, key=lambda h: h[1].profit)
            log.info("uplift cycle after %d rounds, keeping d2=%s", k, best[0])
            return FixedPointResult(best[0], best[1], k, False, True, [h[0] for h in seen], best[2])
        d2 = nxt
    best = max(seen, key=lambda h: h[1].profit)
    return FixedPointResult(best[0], best[1], max_rounds, False, True, [h[0] for h in seen], best[2])


# ----------------------------------------------------------------------
# updates
# ----------------------------------------------------------------------

def _match(s, part=None, supplier=None) -> bool:
    return (part is None or s.part_id == part) and (supplier is None or s.id == supplier)


def apply_patch(inst: Instance, patch: Mapping) -> Instance:
    """Apply one persistent parameter revision."""
    op = patch["op"]
    part, sup = patch.get("part"), patch.get("supplier")
    if op == "remove_supplier":
        keep = tuple(s for s in inst.suppliers if not (s.part_id == part and s.id == sup))
        if len(keep) == len(inst.suppliers):
            raise DataError(f"no supplier {part}-{sup} to remove")
        return replace(inst, suppliers=keep)
    if op in ("scale_lead_times", "set_lead_time"):
        out = []
        for s in inst.suppliers:
            if _match(s, part, sup):
                if op == "set_lead_time":
                    lead = int(patch["days"])
                else:
                    lead = int(math.ceil(s.lead_time_days * float(patch.get("factor", 1.0)) - 1e-9))
                    lead += int(patch.get("add", 0))
                s = replace(s, lead_time_days=max(0, lead))
            out.append(s)
        return replace(inst, suppliers=tuple(out))
    if op == "scale_capacities":
        f = float(patch["factor"])
        return replace(inst, suppliers=tuple(replace(s, capacity=s.capacity * f) if _match(s, part, sup) else s
                                             for s in inst.suppliers))
    if op == "scale_prices":
        f = float(patch["factor"])
        return replace(inst, suppliers=tuple(replace(s, price=s.price * f) if _match(s, part, sup) else s
                                             for s in inst.suppliers))
    if op == "set_uncertainty":
        fields = {k: float(v) for k, v in patch.items() if k not in ("op", "iteration")}
        return replace(inst, uncertainty=replace(inst.uncertainty, **fields))
    if op == "add_orders":
        h = int(patch["iteration"])
        book = list(inst.order_book)
        if h >= len(book):
            raise DataError(f"no order-book entry for iteration {h}")
        e = book[h]
        l = patch["customer"]
        fp = dict(e.orders_fp)
        sp = dict(e.orders_sp)
        fp[l] = fp.get(l, 0) + int(patch.get("orders_fp", 0))
        sp[l] = sp.get(l, 0) + int(patch.get("orders_sp", 0))
        book[h] = replace(e, orders_fp=fp, orders_sp=sp)
        return replace(inst, order_book=tuple(book))
    if op == "set_period_length":
        return replace(inst, horizon=_resize_periods(inst.horizon, int(patch["iteration"]), int(patch["days"])))
    if op == "override_deadline":
        return inst  # consumed by the deadline policy
    raise DataError(f"unknown update op {op!r}")


def _resize_periods(layout: HorizonLayout, first: int, days: int) -> HorizonLayout:
    if days < 1:
        raise DataError("period length must be positive")
    periods = list(layout.periods[:first])
    start = periods[-1].end + 1 if periods else layout.ah_start
    for p in layout.periods[first:]:
        periods.append(Period(start, start + days - 1, p.year))
        start += days
    return replace(layout, periods=tuple(periods))


def patches_for(updates: Iterable[Mapping] | None, h: int) -> list[Mapping]:
    return [u for u in (updates or []) if int(u["iteration"]) == h]


# ----------------------------------------------------------------------
# rolling horizon
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    fp_period: int
    sp_period: int | None
    plan: Plan
    cost: CostBreakdown
    q: float | None
    d2: Mapping[str, int]
    seed: int
    deadlines: Mapping[str, int]
    extension: int = 0
    assessment: DelayAssessment | None = None
    instance_hash: str = ""
    fixed_point_rounds: int = 1
    converged: bool = True
    instance: Instance | None = field(default=None, repr=False, compare=False)

    @property
    def profit(self) -> float:
        return self.cost.profit

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration, "fp_period": self.fp_period, "sp_period": self.sp_period,
            "seed": self.seed, "instance_hash": self.instance_hash,
            "d2": dict(sorted(self.d2.items())), "q": self.q, "deadlines": dict(sorted(self.deadlines.items())),
            "extension": self.extension, "fixed_point_rounds": self.fixed_point_rounds,
            "converged": self.converged,
            "min_delay": None if self.assessment is None else dict(sorted(self.assessment.min_delay.items())),
            "max_delay": None if self.assessment is None else dict(sorted(self.assessment.max_delay.items())),
            "cost": self.cost.as_dict(),
            "plan": {"offset": self.plan.offset, "H": self.plan.H, "phi": dict(sorted(self.plan.phi.items())),
                     "first": self.plan.first.to_dict()},
        }


@dataclass
class RollingResult:
    records: list
    instance: Instance

    @property
    def profit(self) -> float:
        return sum(r.profit for r in self.records)

    @property
    def cost(self) -> CostBreakdown:
        total = CostBreakdown()
        for r in self.records:
            total = total + r.cost
        return total


def iteration_instance(inst: Instance, h: int, inventory: Mapping[str, float], prebuilt: Mapping[str, float],
                       d2_prev: Mapping[str, int]) -> Instance:
    """Planning instance for iteration ``h`` from the order book and the carried state."""
    book = inst.order_book[h] if h < len(inst.order_book) else None
    custs = []
    for c in inst.customers:
        if book is not None:
            fp = book.orders_fp.get(c.id, 0)
            sp = book.orders_sp.get(c.id, 0)
            dfp = book.deadlines_fp.get(c.id, c.deadline_fp)
            dsp = book.deadlines_sp.get(c.id, c.deadline_sp)
        else:
            fp, sp, dfp, dsp = c.orders_sp_initial, 0, c.deadline_sp, c.deadline_sp
        custs.append(replace(c, orders_fp=int(fp) + int(d2_prev.get(c.id, 0)), orders_sp_initial=int(sp),
                             deadline_fp=int(dfp), deadline_sp=int(dsp)))
    pre = {c.id: min(float(prebuilt.get(c.id, 0.0)), float(c.orders_fp)) for c in custs}
    return replace(inst, customers=tuple(custs), start_period=h, initial_inventory=dict(inventory),
                   prebuilt={k: v for k, v in pre.items() if v > 0}, delay_penalties={})


DeadlinePolicy = Callable[[DelayAssessment, Instance], Mapping[str, int]]


def _solve_iteration(cur: Instance, sset_for, fp_kw: dict):
    prep = prepare(cur)
    sset = None if cur.is_single_period else sset_for(prep.inst)
    fp = demand_fixed_point(prep, sset, **fp_kw)
    return prep, sset, fp


def run_rolling_horizon(instance: Instance, updates: Sequence[Mapping] | None = None, seed: int = 0,
                        n_scenarios: int = 3, method: str = "benders", reduce: bool = False,
                        max_rounds: int = 10, gap_tol: float | None = None, workers: int = 1,
                        deadline_policy: DeadlinePolicy | None = None,
                        max_deadline_retries: int = 30) -> RollingResult:
    """Solve, freeze the first period, roll forward; one record per period."""
    inst = instance
    inventory = dict(instance.initial_inventory)
    prebuilt = dict(instance.prebuilt)
    d2_prev: dict = {}
    records = []
    h = instance.start_period
    while h < len(inst.horizon.periods):
        try:
            for patch in patches_for(updates, h):
                inst = apply_patch(inst, patch)
            cur = iteration_instance(inst, h, inventory, prebuilt, d2_prev)
            it_seed = int(seed) * 100 + h
            sset_for = lambda fi: scenario_set_for(fi, n_scenarios, it_seed, reduce=reduce)
            fp_kw = dict(max_rounds=max_rounds, method=method, gap_tol=gap_tol)
            if method == "benders":
                fp_kw["workers"] = workers

            assessment, ext = None, 0
            filtered = prepare(cur).inst
            a = assess_delays(filtered)
            if a.needs_extension:
                assessment = a
                overrides = {u["customer"]: int(u["deadline"]) for u in patches_for(updates, h)
                             if u["op"] == "override_deadline"}
                if deadline_policy is not None:
                    overrides = {**dict(deadline_policy(a, cur)), **overrides}
                deadlines = choose_new_deadlines(a, cur, overrides)
                base = cur
                for attempt in range(max_deadline_retries + 1):
                    cur = apply_horizon_extension(base, deadlines, a.min_delay, a.max_delay)
                    try:
                        prep, sset, fp = _solve_iteration(cur, sset_for, fp_kw)
                        break
                    except Infeasible:
                        # shared manufacturing capacity can make the earliest deadlines jointly infeasible
                        bumped = {l: d + 1 if l not in overrides and d < base.customer(l).deadline_fp + a.max_delay[l]
                                  and a.max_delay[l] > 0 else d for l, d in deadlines.items()}
                        if bumped == deadlines or attempt == max_deadline_retries:
                            raise
                        log.info("iteration %d: deadlines %s infeasible, moving affected ones by a day", h, deadlines)
                        deadlines = bumped
                ext = cur.window[0].end - base.window[0].end
                inst = replace(inst, horizon=cur.horizon)
            else:
                prep, sset, fp = _solve_iteration(cur, sset_for, fp_kw)
        except PlanningError as exc:
            exc.args = (f"iteration {h}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
            exc.iteration = h
            raise

        plan = fp.result.plan
        frozen = Plan(offset=plan.offset, H=plan.H, T=plan.T, single=plan.single, first=plan.first,
                      phi=dict(plan.phi), d2=dict(fp.d2))
        cost = evaluate_stage(prep.inst, prep.ha, prep.hb, frozen, 1)
        window = cur.horizon.planning_periods(h)
        records.append(IterationRecord(
            iteration=h, fp_period=h, sp_period=window[1] if len(window) > 1 else None, plan=frozen, cost=cost,
            q=fp.q, d2=dict(fp.d2), seed=it_seed, deadlines={c.id: c.deadline_fp for c in cur.customers},
            extension=ext, assessment=assessment, instance_hash=instance_hash(cur),
            fixed_point_rounds=fp.rounds, converged=fp.converged, instance=prep.inst,
        ))
        log.info("iteration %d: profit %.6g d2=%s", h, cost.profit, fp.d2)
        inventory = {i: float(plan.first.alpha.get((plan.H, i), 0.0)) for i in (p.id for p in inst.parts)}
        prebuilt = {l: v for l, v in plan.phi.items() if v > 0}
        d2_prev = dict(fp.d2)
        h += 1
    return RollingResult(records=records, instance=inst)
