"""Domain types, instance validation and deterministic derived parameters."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import DelayExceedsPolicy, NoSupplierForPart, RouteUnavailable

MODES = ("truck", "rail", "ship", "air")


@dataclass(frozen=True)
class Route:
    distance_km: float
    emission_t_per_t: float
    available: bool = True


@dataclass(frozen=True)
class PartSpec:
    id: str
    weight: float
    per_evtol: int
    min_quality: float
    inventory_cap: float


@dataclass(frozen=True)
class SupplierSpec:
    id: str
    part_id: str
    quality: float
    price: float
    capacity: float
    lead_time_days: int
    routes: Mapping[str, Route] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str]:
        return (self.part_id, self.id)

    def available_modes(self) -> list[str]:
        return [m for m, r in self.routes.items() if r.available]


@dataclass(frozen=True)
class CustomerSpec:
    id: str
    orders_fp: int
    orders_sp_initial: int
    deadline_fp: int
    deadline_sp: int
    routes: Mapping[str, Route] = field(default_factory=dict)

    def available_modes(self) -> list[str]:
        return [m for m, r in self.routes.items() if r.available]


@dataclass(frozen=True)
class ModeSpec:
    id: str
    speed_kmh: float
    max_daily_hours: float
    freight_cost_by_year: Mapping[int, float]

    def freight_cost(self, year: int) -> float:
        years = sorted(self.freight_cost_by_year)
        if year in self.freight_cost_by_year:
            return self.freight_cost_by_year[year]
        # outside the tabulated range: hold the nearest year flat
        if year < years[0]:
            return self.freight_cost_by_year[years[0]]
        return self.freight_cost_by_year[max(y for y in years if y <= year)]


@dataclass(frozen=True)
class EmSpec:
    daily_mfg_cap: int
    evtol_inventory_cap: float
    selling_price: float
    base_mfg_cost: float
    holding_rate: float
    base_quality: float
    quality_sensitivity: float
    evtol_weight: float
    emission_cost_base: float
    emission_cost_growth: float
    quality_epsilon: float = 1e-6


@dataclass(frozen=True)
class PenaltyPolicy:
    """Progressive per-day delay penalty.

    ``brackets`` holds ``(upper_day, rate)`` pairs; every delayed day falling
    in a bracket costs ``rate * contract_value``.
    """

    brackets: tuple[tuple[int, float], ...]

    @property
    def max_delay(self) -> int:
        return self.brackets[-1][0] if self.brackets else 0

    def rate_for_day(self, day: int) -> float:
        for upper, rate in self.brackets:
            if day <= upper:
                return rate
        raise DelayExceedsPolicy(f"delay day {day} beyond policy limit {self.max_delay}")


@dataclass(frozen=True)
class Period:
    start: int
    end: int
    year: int

    @property
    def length(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class HorizonLayout:
    periods: tuple[Period, ...]
    lookahead: int = 2
    extension_step: int = 1

    @property
    def days_per_period(self) -> int:
        return self.periods[0].length

    @property
    def ah_start(self) -> int:
        return self.periods[0].start

    @property
    def ah_end(self) -> int:
        return self.periods[-1].end

    def year_of(self, day: int) -> int:
        for p in self.periods:
            if p.start <= day <= p.end:
                return p.year
        if day < self.ah_start:
            return self.periods[0].year
        return self.periods[-1].year

    def planning_periods(self, first: int) -> list[int]:
        last = min(first + self.lookahead - 1, len(self.periods) - 1)
        return list(range(first, last + 1))


@dataclass(frozen=True)
class UncertaintyConfig:
    price_rel_sd: float = 0.10
    capacity_rel_sd: float = 0.10
    mfg_cost_rel_sd: float = 0.10
    extra_demand_ex: float = 4.0
    extra_demand_sd: float = 2.0


@dataclass(frozen=True)
class OrderBookEntry:
    """Pre-orders known at the start of one rolling iteration."""

    orders_fp: Mapping[str, int]
    orders_sp: Mapping[str, int]
    deadlines_fp: Mapping[str, int]
    deadlines_sp: Mapping[str, int]


@dataclass(frozen=True)
class Instance:
    parts: tuple[PartSpec, ...]
    suppliers: tuple[SupplierSpec, ...]
    customers: tuple[CustomerSpec, ...]
    modes: Mapping[str, ModeSpec]
    em: EmSpec
    penalty_policy: PenaltyPolicy
    horizon: HorizonLayout
    uncertainty: UncertaintyConfig = UncertaintyConfig()
    order_book: tuple[OrderBookEntry, ...] = ()
    initial_inventory: Mapping[str, float] = field(default_factory=dict)
    prebuilt: Mapping[str, float] = field(default_factory=dict)
    delay_penalties: Mapping[str, float] = field(default_factory=dict)
    start_period: int = 0
    name: str = "instance"

    # --- lookups -------------------------------------------------------
    def part(self, part_id: str) -> PartSpec:
        for p in self.parts:
            if p.id == part_id:
                return p
        raise KeyError(part_id)

    def customer(self, customer_id: str) -> CustomerSpec:
        for c in self.customers:
            if c.id == customer_id:
                return c
        raise KeyError(customer_id)

    def supplier(self, part_id: str, supplier_id: str) -> SupplierSpec:
        for s in self.suppliers:
            if s.part_id == part_id and s.id == supplier_id:
                return s
        raise KeyError((part_id, supplier_id))

    def suppliers_of(self, part_id: str) -> list[SupplierSpec]:
        return [s for s in self.suppliers if s.part_id == part_id]

    # --- planning window ----------------------------------------------
    @property
    def window(self) -> list[Period]:
        return [self.horizon.periods[i] for i in self.horizon.planning_periods(self.start_period)]

    @property
    def offset(self) -> int:
        """Global day of local day 0 of the current planning horizon."""
        return self.window[0].start - 1

    @property
    def first_stage_days(self) -> int:
        return self.window[0].length

    @property
    def horizon_days(self) -> int:
        return sum(p.length for p in self.window)

    @property
    def is_single_period(self) -> bool:
        return len(self.window) == 1

    def global_day(self, local_day: int) -> int:
        return self.offset + local_day

    def local_deadline_fp(self, c: CustomerSpec) -> int:
        return c.deadline_fp - self.offset

    def local_deadline_sp(self, c: CustomerSpec) -> int:
        return c.deadline_sp - self.offset


@dataclass
class CostBreakdown:
    tppc: float = 0.0
    ticb: float = 0.0
    ticf: float = 0.0
    tmc: float = 0.0
    ttcb: float = 0.0
    ttcf: float = 0.0
    tecb: float = 0.0
    tecf: float = 0.0
    tpc: float = 0.0
    revenue: float = 0.0

    COST_FIELDS = ("tppc", "ticb", "ticf", "tmc", "ttcb", "ttcf", "tecb", "tecf", "tpc")

    @property
    def total_cost(self) -> float:
        return sum(getattr(self, f) for f in self.COST_FIELDS)

    @property
    def profit(self) -> float:
        return self.revenue - self.total_cost

    def __add__(self, other: "CostBreakdown") -> "CostBreakdown":
        fields_ = self.COST_FIELDS + ("revenue",)
        return CostBreakdown(**{f: getattr(self, f) + getattr(other, f) for f in fields_})

    def scaled(self, w: float) -> "CostBreakdown":
        fields_ = self.COST_FIELDS + ("revenue",)
        return CostBreakdown(**{f: w * getattr(self, f) for f in fields_})

    def as_dict(self) -> dict[str, float]:
        out = {f: getattr(self, f) for f in self.COST_FIELDS}
        out["revenue"] = self.revenue
        out["profit"] = self.profit
        return out


# ----------------------------------------------------------------------
# validation and derived parameters
# ----------------------------------------------------------------------

def validate_instance(instance: Instance) -> list[str]:
    """Return human-readable violations; empty when every invariant holds."""
    out: list[str] = []
    part_ids = {p.id for p in instance.parts}
    for p in instance.parts:
        if not p.weight > 0:
            out.append(f"part {p.id}: weight must be > 0")
        if p.per_evtol < 1 or int(p.per_evtol) != p.per_evtol:
            out.append(f"part {p.id}: per_evtol must be an integer >= 1")
        if not 0 <= p.min_quality <= 10:
            out.append(f"part {p.id}: min_quality must lie in [0, 10]")
        if p.inventory_cap < 0:
            out.append(f"part {p.id}: inventory_cap must be >= 0")

    for s in instance.suppliers:
        tag = f"supplier {s.part_id}/{s.id}"
        if s.part_id not in part_ids:
            out.append(f"{tag}: part_id references unknown part")
        if s.price < 0:
            out.append(f"{tag}: price must be >= 0")
        if s.capacity < 0:
            out.append(f"{tag}: capacity must be >= 0")
        if s.lead_time_days < 0 or int(s.lead_time_days) != s.lead_time_days:
            out.append(f"{tag}: lead_time_days must be an integer >= 0")
        if not 0 <= s.quality <= 10:
            out.append(f"{tag}: quality must lie in [0, 10]")
        out.extend(_route_violations(tag, s.routes, instance.modes))

    ah_start, ah_end = instance.horizon.ah_start, instance.horizon.ah_end
    for c in instance.customers:
        tag = f"customer {c.id}"
        for name in ("orders_fp", "orders_sp_initial"):
            v = getattr(c, name)
            if v < 0 or int(v) != v:
                out.append(f"{tag}: {name} must be a non-negative integer")
        if c.deadline_fp > c.deadline_sp:
            out.append(f"{tag}: deadline_fp must not exceed deadline_sp")
        for name in ("deadline_fp", "deadline_sp"):
            d = getattr(c, name)
            if not ah_start <= d <= ah_end:
                out.append(f"{tag}: {name} {d} outside analysis horizon [{ah_start}, {ah_end}]")
        out.extend(_route_violations(tag, c.routes, instance.modes))

    for m in instance.modes.values():
        if not m.speed_kmh > 0:
            out.append(f"mode {m.id}: speed_kmh must be > 0")
        if not 0 < m.max_daily_hours <= 24:
            out.append(f"mode {m.id}: max_daily_hours must lie in (0, 24]")

    em = instance.em
    if em.daily_mfg_cap < 1:
        out.append("em: daily_mfg_cap must be >= 1")
    if not em.selling_price > 0:
        out.append("em: selling_price must be > 0")
    if not 0 <= em.holding_rate <= 1:
        out.append("em: holding_rate must lie in [0, 1]")
    if not 0 <= em.base_quality <= 10:
        out.append("em: base_quality must lie in [0, 10]")
    if em.quality_sensitivity < 0:
        out.append("em: quality_sensitivity must be >= 0")
    if not em.quality_epsilon > 0:
        out.append("em: quality_epsilon must be > 0")

    prev_b, prev_r = 0, -math.inf
    for upper, rate in instance.penalty_policy.brackets:
        if upper <= prev_b:
            out.append("penalty_policy: bracket bounds must be strictly increasing")
        if rate < 0:
            out.append("penalty_policy: rates must be >= 0")
        if rate <= prev_r:
            out.append("penalty_policy: bracket rates must be strictly increasing")
        prev_b, prev_r = upper, rate

    periods = instance.horizon.periods
    if not periods:
        out.append("horizon: at least one period required")
    for a, b in zip(periods, periods[1:]):
        if b.start != a.end + 1:
            out.append(f"horizon: periods must be contiguous ({a.end} -> {b.start})")
    for p in periods:
        if p.end < p.start:
            out.append(f"horizon: period [{p.start}, {p.end}] is empty")
    if instance.horizon.lookahead < 1:
        out.append("horizon: lookahead must be >= 1")
    return out


def _route_violations(tag: str, routes: Mapping[str, Route], modes: Mapping[str, ModeSpec]) -> list[str]:
    out = []
    for mode, r in routes.items():
        if mode not in modes:
            out.append(f"{tag}: route references unknown mode {mode}")
        if r.available and not r.distance_km > 0:
            out.append(f"{tag}: available {mode} route needs distance_km > 0")
    return out


def filter_suppliers(instance: Instance) -> tuple[Instance, list[tuple[str, str]]]:
    """Drop suppliers below their part's minimum quality.

    Returns the filtered instance and the removed ``(part, supplier)`` keys.
    """
    kept, removed = [], []
    for s in instance.suppliers:
        if s.quality >= instance.part(s.part_id).min_quality:
            kept.append(s)
        else:
            removed.append(s.key)
    for p in instance.parts:
        if not any(s.part_id == p.id for s in kept):
            raise NoSupplierForPart(f"part {p.id} has no supplier meeting quality {p.min_quality}")
    return replace(instance, suppliers=tuple(kept)), removed


def transport_days(distance_km: float, mode: ModeSpec, available: bool = True) -> int:
    if not available or distance_km is None or distance_km <= 0:
        raise RouteUnavailable(f"no usable {mode.id} route")
    per_day = mode.speed_kmh * mode.max_daily_hours
    # guard against 2640/880 -> 3.0000000000000004
    days = math.ceil(round(distance_km / per_day, 9))
    return max(1, days)


def route_days(instance: Instance, route: Route, mode_id: str) -> int:
    return transport_days(route.distance_km, instance.modes[mode_id], route.available)


def holding_costs(instance: Instance) -> tuple[dict[str, float], float]:
    """Per-day holding cost for each part and for one finished eVTOL.

    Mean prices come from the instance as given; pass the pre-filter instance
    to reproduce the published per-part averages.
    """
    rate = instance.em.holding_rate
    mean_price = {}
    for p in instance.parts:
        prices = [s.price for s in instance.suppliers_of(p.id)]
        mean_price[p.id] = sum(prices) / len(prices) if prices else 0.0
    ha = {pid: rate * mp / 360.0 for pid, mp in mean_price.items()}
    evtol_value = sum(p.per_evtol * mean_price[p.id] for p in instance.parts)
    hb = rate * evtol_value / 360.0
    return ha, hb


def emission_cost_on_day(instance: Instance, day: int) -> float:
    """Emission price ($/t GHG) on a global day."""
    first_year = instance.horizon.periods[0].year
    year = instance.horizon.year_of(day)
    em = instance.em
    return em.emission_cost_base * (1.0 + em.emission_cost_growth) ** (year - first_year)


def delay_penalty(policy: PenaltyPolicy, contract_value: float, delay_days: int) -> float:
    if delay_days < 0:
        raise ValueError("delay_days must be >= 0")
    if delay_days > policy.max_delay:
        raise DelayExceedsPolicy(f"delay {delay_days} exceeds policy limit {policy.max_delay}")
    total, prev = 0.0, 0
    for upper, rate in policy.brackets:
        if delay_days <= prev:
            break
        n = min(delay_days, upper) - prev
        total += n * rate * contract_value
        prev = upper
    return total


def contract_value(instance: Instance, customer: CustomerSpec) -> float:
    return instance.em.selling_price * customer.orders_fp


# ----------------------------------------------------------------------
# (de)serialisation
# ----------------------------------------------------------------------

def _routes_from(d: Mapping[str, Any] | None) -> dict[str, Route]:
    out = {}
    for mode, r in (d or {}).items():
        out[mode] = Route(
            distance_km=float(r.get("distance_km", 0.0)),
            emission_t_per_t=float(r.get("emission_tons_per_ton", r.get("emission_t_per_t", 0.0))),
            available=bool(r.get("available", True)),
        )
    return out


def _routes_to(routes: Mapping[str, Route]) -> dict[str, Any]:
    return {
        m: {"distance_km": r.distance_km, "emission_tons_per_ton": r.emission_t_per_t, "available": r.available}
        for m, r in routes.items()
    }


def instance_from_dict(d: Mapping[str, Any]) -> Instance:
    parts = tuple(
        PartSpec(
            id=p["id"],
            weight=float(p["weight"]),
            per_evtol=int(p["per_evtol"]),
            min_quality=float(p["min_quality"]),
            inventory_cap=float(p["inventory_cap"]),
        )
        for p in d["parts"]
    )
    suppliers = tuple(
        SupplierSpec(
            id=s["id"],
            part_id=s["part_id"],
            quality=float(s["quality"]),
            price=float(s["price"]),
            capacity=float(s["capacity"]),
            lead_time_days=int(s["lead_time_days"]),
            routes=_routes_from(s.get("route_per_mode")),
        )
        for s in d["suppliers"]
    )
    customers = tuple(
        CustomerSpec(
            id=c["id"],
            orders_fp=int(c["orders_fp"]),
            orders_sp_initial=int(c["orders_sp_initial"]),
            deadline_fp=int(c["deadline_fp"]),
            deadline_sp=int(c["deadline_sp"]),
            routes=_routes_from(c.get("route_per_mode")),
        )
        for c in d["customers"]
    )
    modes = {
        m["id"]: ModeSpec(
            id=m["id"],
            speed_kmh=float(m["speed_kmh"]),
            max_daily_hours=float(m["max_daily_hours"]),
            freight_cost_by_year={int(y): float(v) for y, v in m["freight_cost_per_ton_km_by_year"].items()},
        )
        for m in d["modes"]
    }
    e = d["em"]
    em = EmSpec(
        daily_mfg_cap=int(e["daily_mfg_cap"]),
        evtol_inventory_cap=float(e["evtol_inventory_cap"]),
        selling_price=float(e["selling_price"]),
        base_mfg_cost=float(e["base_mfg_cost"]),
        holding_rate=float(e["holding_rate"]),
        base_quality=float(e["base_quality"]),
        quality_sensitivity=float(e["quality_sensitivity"]),
        evtol_weight=float(e["evtol_weight"]),
        emission_cost_base=float(e["emission_cost_base"]),
        emission_cost_growth=float(e["emission_cost_growth"]),
        quality_epsilon=float(e.get("quality_epsilon", 1e-6)),
    )
    policy = PenaltyPolicy(tuple((int(b[0]), float(b[1])) for b in d["penalty_policy"]["brackets"]))
    h = d["horizon"]
    horizon = HorizonLayout(
        periods=tuple(Period(int(p["start_day"]), int(p["end_day"]), int(p["year"])) for p in h["periods"]),
        lookahead=int(h.get("lookahead", 2)),
        extension_step=int(h.get("extension_step", 1)),
    )
    u = d.get("uncertainty", {})
    uncertainty = UncertaintyConfig(**{k: float(v) for k, v in u.items()})
    book = tuple(
        OrderBookEntry(
            orders_fp={k: int(v) for k, v in b["orders_fp"].items()},
            orders_sp={k: int(v) for k, v in b.get("orders_sp", {}).items()},
            deadlines_fp={k: int(v) for k, v in b["deadlines_fp"].items()},
            deadlines_sp={k: int(v) for k, v in b.get("deadlines_sp", {}).items()},
        )
        for b in d.get("order_book", [])
    )
    return Instance(
        parts=parts,
        suppliers=suppliers,
        customers=customers,
        modes=modes,
        em=em,
        penalty_policy=policy,
        horizon=horizon,
        uncertainty=uncertainty,
        order_book=book,
        initial_inventory={k: float(v) for k, v in d.get("initial_inventory", {}).items()},
        prebuilt={k: float(v) for k, v in d.get("prebuilt", {}).items()},
        delay_penalties={k: float(v) for k, v in d.get("delay_penalties", {}).items()},
        start_period=int(d.get("start_period", 0)),
        name=str(d.get("name", "instance")),
    )


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    u = inst.uncertainty
    return {
        "name": inst.name,
        "start_period": inst.start_period,
        "parts": [
            {"id": p.id, "weight": p.weight, "per_evtol": p.per_evtol, "min_quality": p.min_quality,
             "inventory_cap": p.inventory_cap}
            for p in inst.parts
        ],
        "suppliers": [
            {"id": s.id, "part_id": s.part_id, "quality": s.quality, "price": s.price, "capacity": s.capacity,
             "lead_time_days": s.lead_time_days, "route_per_mode": _routes_to(s.routes)}
            for s in inst.suppliers
        ],
        "customers": [
            {"id": c.id, "orders_fp": c.orders_fp, "orders_sp_initial": c.orders_sp_initial,
             "deadline_fp": c.deadline_fp, "deadline_sp": c.deadline_sp, "route_per_mode": _routes_to(c.routes)}
            for c in inst.customers
        ],
        "modes": [
            {"id": m.id, "speed_kmh": m.speed_kmh, "max_daily_hours": m.max_daily_hours,
             "freight_cost_per_ton_km_by_year": {str(y): v for y, v in sorted(m.freight_cost_by_year.items())}}
            for m in inst.modes.values()
        ],
        "em": {
            "daily_mfg_cap": inst.em.daily_mfg_cap, "evtol_inventory_cap": inst.em.evtol_inventory_cap,
            "selling_price": inst.em.selling_price, "base_mfg_cost": inst.em.base_mfg_cost,
            "holding_rate": inst.em.holding_rate, "base_quality": inst.em.base_quality,
            "quality_sensitivity": inst.em.quality_sensitivity, "evtol_weight": inst.em.evtol_weight,
            "emission_cost_base": inst.em.emission_cost_base, "emission_cost_growth": inst.em.emission_cost_growth,
            "quality_epsilon": inst.em.quality_epsilon,
        },
        "penalty_policy": {"brackets": [list(b) for b in inst.penalty_policy.brackets]},
        "horizon": {
            "periods": [{"start_day": p.start, "end_day": p.end, "year": p.year} for p in inst.horizon.periods],
            "lookahead": inst.horizon.lookahead,
            "extension_step": inst.horizon.extension_step,
        },
        "uncertainty": {
            "price_rel_sd": u.price_rel_sd, "capacity_rel_sd": u.capacity_rel_sd,
            "mfg_cost_rel_sd": u.mfg_cost_rel_sd, "extra_demand_ex": u.extra_demand_ex,
            "extra_demand_sd": u.extra_demand_sd,
        },
        "order_book": [
            {"orders_fp": dict(b.orders_fp), "orders_sp": dict(b.orders_sp),
             "deadlines_fp": dict(b.deadlines_fp), "deadlines_sp": dict(b.deadlines_sp)}
            for b in inst.order_book
        ],
        "initial_inventory": dict(inst.initial_inventory),
        "prebuilt": dict(inst.prebuilt),
        "delay_penalties": dict(inst.delay_penalties),
    }


def load_instance(path: str | Path) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def instance_hash(inst: Instance) -> str:
    blob = json.dumps(instance_to_dict(inst), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
