"""Regenerate the JSON fixtures.

Supplier lead times and route distances are only partly published; the
missing ones are filled in here so that the narrative transport times
(a-s2 ship 1 day, b-s4 rail 1 day, c-s5 rail 2 days, d-s2 ship 3 days,
e-s1 rail 2 days) and the customer transport-time table come out right
under ceiling rounding.
"""

import json
from pathlib import Path

HERE = Path(__file__).parent

# tons of GHG per ton-km, used to turn distances into per-ton route emissions
EMIT = {"truck": 1.0e-4, "rail": 2.5e-5, "ship": 1.2e-5, "air": 7.7e-4}

MODES = [
    {"id": "truck", "speed_kmh": 80, "max_daily_hours": 11,
     "freight_cost_per_ton_km_by_year": {"2026": 12.5521, "2027": 12.8216, "2028": 13.0911}},
    {"id": "rail", "speed_kmh": 120, "max_daily_hours": 24,
     "freight_cost_per_ton_km_by_year": {"2026": 2.9621, "2027": 3.0180, "2028": 3.0739}},
    {"id": "ship", "speed_kmh": 30, "max_daily_hours": 24,
     "freight_cost_per_ton_km_by_year": {"2026": 2.0041, "2027": 2.0479, "2028": 2.0917}},
    {"id": "air", "speed_kmh": 900, "max_daily_hours": 14,
     "freight_cost_per_ton_km_by_year": {"2026": 83.429, "2027": 85.211, "2028": 86.993}},
]


def route(dist, mode, ghg=None):
    return {"distance_km": dist, "emission_tons_per_ton": round(EMIT[mode] * dist, 6) if ghg is None else ghg,
            "available": True}


def domestic(d):
    return {"truck": route(d, "truck"), "rail": route(round(d * 1.05, 2), "rail"), "air": route(round(d * 0.9, 2), "air")}


def overseas(ship, air):
    return {"ship": route(ship, "ship"), "air": route(air, "air")}


def coastal(ship, truck, air):
    return {"ship": route(ship, "ship"), "truck": route(truck, "truck"), "air": route(air, "air")}


def base():
    parts = [
        {"id": "a", "weight": 0.426, "per_evtol": 1, "min_quality": 7.5, "inventory_cap": 15},
        {"id": "b", "weight": 0.0033, "per_evtol": 6, "min_quality": 8.0, "inventory_cap": 60},
        {"id": "c", "weight": 0.128, "per_evtol": 4, "min_quality": 8.5, "inventory_cap": 50},
        {"id": "d", "weight": 0.02, "per_evtol": 6, "min_quality": 8.0, "inventory_cap": 60},
        {"id": "e", "weight": 0.012, "per_evtol": 5, "min_quality": 7.5, "inventory_cap": 50},
    ]
    table2 = {
        "a": ([8.7, 9.0, 7.2, 8.6, 8.7], [30, 29.5, 28.5, 30.3, 30.7], [10, 15, 12, 15, 8]),
        "b": ([8.7, 8.8, 8.6, 8.8, 9.1], [10, 9.8, 11, 9.5, 10.5], [115, 100, 120, 110, 130]),
        "c": ([8.9, 8.5, 9.2, 8.5, 9.2], [22.2, 22, 22.5, 22.9, 21.7], [90, 95, 100, 85, 80]),
        "d": ([8.2, 8.4, 8.1, 9.3, 8.8], [11.2, 11, 10.7, 12, 11.8], [135, 70, 80, 95, 75]),
        "e": ([8.1, 9.4, 8.4, 7.5, 7.0], [9.5, 10.5, 9.8, 9.5, 8.0], [80, 85, 90, 95, 100]),
    }
    leads = {"a": [3, 2, 4, 1, 5], "b": [2, 3, 5, 4, 1], "c": [4, 3, 2, 5, 3], "d": [1, 4, 2, 3, 5],
             "e": [2, 3, 1, 4, 2]}
    routes = {
        "a": [domestic(1500), coastal(700, 650, 600), domestic(2200), domestic(3000), overseas(6000, 6500)],
        "b": [domestic(1200), domestic(2500),
              {"ship": route(10736.94, "ship", 0.13), "air": route(10753.44, "air", 8.31)},
              {"truck": route(1900, "truck"), "rail": route(2000, "rail"), "air": route(1800, "air")},
              domestic(3500)],
        "c": [domestic(2600), domestic(1800), overseas(15500, 9500), domestic(4000),
              {"truck": route(3300, "truck"), "rail": route(3400, "rail"), "air": route(3200, "air")}],
        "d": [domestic(900), coastal(2000, 1900, 1800), domestic(2400), overseas(8000, 8500), domestic(1500)],
        "e": [{"truck": route(2900, "truck"), "rail": route(3000, "rail"), "air": route(2800, "air")},
              domestic(1000), domestic(2000), domestic(3000), overseas(7000, 7500)],
    }
    suppliers = []
    for pid, (q, price, cap) in table2.items():
        for n in range(5):
            suppliers.append({"id": f"s{n + 1}", "part_id": pid, "quality": q[n], "price": price[n] * 1000,
                              "capacity": cap[n], "lead_time_days": leads[pid][n], "route_per_mode": routes[pid][n]})
    cust_dist = {
        "c1": {"truck": 3000, "rail": 3100, "ship": 9800, "air": 2000},
        "c2": {"truck": 4500, "rail": 4600, "ship": 10000, "air": 4000},
        "c3": {"ship": 14000, "air": 2900},
        "c4": {"truck": 600, "rail": 650, "ship": 700, "air": 550},
    }
    book = [
        ((6, 5, 3, 3), (3, 2, 1, 0), (70, 90, 100, 150), (300, 280, 260, 320)),
        ((6, 5, 3, 3), (3, 2, 1, 1), (300, 280, 260, 320), (490, 450, 490, 510)),
        ((8, 7, 4, 4), (3, 2, 2, 1), (490, 450, 490, 510), (700, 600, 655, 635)),
        ((8, 7, 4, 4), (6, 4, 3, 2), (700, 600, 655, 635), (815, 850, 888, 830)),
        ((11, 10, 5, 5), (0, 0, 0, 0), (815, 850, 888, 830), (815, 850, 888, 830)),
    ]
    ids = ["c1", "c2", "c3", "c4"]
    fp, sp, d1, d2 = book[0]
    customers = [
        {"id": l, "orders_fp": fp[n], "orders_sp_initial": sp[n], "deadline_fp": d1[n], "deadline_sp": d2[n],
         "route_per_mode": {m: route(dist, m) for m, dist in cust_dist[l].items()}}
        for n, l in enumerate(ids)
    ]
    order_book = [
        {"orders_fp": dict(zip(ids, b[0])), "orders_sp": dict(zip(ids, b[1])),
         "deadlines_fp": dict(zip(ids, b[2])), "deadlines_sp": dict(zip(ids, b[3]))}
        for b in book
    ]
    return {
        "name": "base",
        "parts": parts,
        "suppliers": suppliers,
        "customers": customers,
        "modes": MODES,
        "em": {
            "daily_mfg_cap": 5, "evtol_inventory_cap": 10000, "selling_price": 1.5e6, "base_mfg_cost": 410000,
            "holding_rate": 0.329, "base_quality": 8.0, "quality_sensitivity": 0.2, "evtol_weight": 1.1128,
            "emission_cost_base": 16.5, "emission_cost_growth": 0.05, "quality_epsilon": 1e-6,
        },
        "penalty_policy": {"brackets": [[15, 0.0005], [30, 0.001], [45, 0.003], [60, 0.005], [75, 0.007],
                                        [90, 0.01]]},
        "horizon": {
            "periods": [
                {"start_day": 1, "end_day": 180, "year": 2026},
                {"start_day": 181, "end_day": 360, "year": 2026},
                {"start_day": 361, "end_day": 540, "year": 2027},
                {"start_day": 541, "end_day": 720, "year": 2027},
                {"start_day": 721, "end_day": 900, "year": 2028},
            ],
            "lookahead": 2,
            "extension_step": 10,
        },
        "uncertainty": {"price_rel_sd": 0.1, "capacity_rel_sd": 0.1, "mfg_cost_rel_sd": 0.1,
                        "extra_demand_ex": 4.0, "extra_demand_sd": 2.0},
        "order_book": order_book,
        "initial_inventory": {},
        "prebuilt": {},
        "start_period": 0,
    }


def case3c():
    d = base()
    d["name"] = "case3c"
    d["start_period"] = 2
    fp, sp, d1, d2 = (8, 7, 4, 4), (3, 2, 2, 1), (490, 450, 490, 510), (700, 600, 655, 635)
    for n, c in enumerate(d["customers"]):
        c.update(orders_fp=fp[n], orders_sp_initial=sp[n], deadline_fp=d1[n], deadline_sp=d2[n])
    # battery suppliers: s5 sanctioned, the rest served through slower secondary channels
    lead = {"s1": 181, "s2": 175, "s3": 165, "s4": 188}
    price = {"s1": 23000, "s2": 23500, "s3": 26000, "s4": 22500}
    keep = []
    for s in d["suppliers"]:
        if s["part_id"] == "c":
            if s["id"] == "s5":
                continue
            s["lead_time_days"] = lead[s["id"]]
            s["price"] = price[s["id"]]
        keep.append(s)
    d["suppliers"] = keep
    # every second-period deadline falls before the earliest battery receipt, so
    # that demand is covered from first-period stock; a fixed extra demand keeps
    # the prebuild decision feasible in every scenario
    d["uncertainty"]["extra_demand_sd"] = 0.0
    return d


def desk():
    sup = lambda pid, sid, q, price, cap, lead, truck, air: {
        "id": sid, "part_id": pid, "quality": q, "price": price, "capacity": cap, "lead_time_days": lead,
        "route_per_mode": {"truck": route(truck, "truck"), "air": route(air, "air")},
    }
    ids = ["c1", "c2"]
    book = [
        ((3, 2), (2, 1), (8, 9), (17, 18)),
        ((4, 3), (3, 2), (17, 18), (27, 28)),
        ((5, 4), (3, 3), (27, 28), (37, 38)),
        ((5, 5), (0, 0), (37, 38), (37, 38)),
    ]
    fp, sp, d1, d2 = book[0]
    cust_dist = {"c1": (800, 700), "c2": (1700, 1500)}
    return {
        "name": "desk",
        "parts": [
            {"id": "p1", "weight": 0.2, "per_evtol": 1, "min_quality": 8.0, "inventory_cap": 30},
            {"id": "p2", "weight": 0.05, "per_evtol": 2, "min_quality": 8.0, "inventory_cap": 60},
        ],
        "suppliers": [
            sup("p1", "s1", 8.5, 100, 6, 1, 800, 900),
            sup("p1", "s2", 9.0, 90, 5, 2, 1600, 1500),
            sup("p1", "s3", 8.2, 80, 4, 3, 1700, 1900),
            sup("p2", "s1", 8.8, 40, 12, 1, 700, 800),
            sup("p2", "s2", 8.1, 35, 10, 2, 1500, 1400),
            sup("p2", "s3", 7.0, 30, 10, 1, 600, 700),
        ],
        "customers": [
            {"id": l, "orders_fp": fp[n], "orders_sp_initial": sp[n], "deadline_fp": d1[n], "deadline_sp": d2[n],
             "route_per_mode": {"truck": route(cust_dist[l][0], "truck"), "air": route(cust_dist[l][1], "air")}}
            for n, l in enumerate(ids)
        ],
        "modes": [
            {"id": "truck", "speed_kmh": 80, "max_daily_hours": 11,
             "freight_cost_per_ton_km_by_year": {"2026": 0.05, "2027": 0.052}},
            {"id": "air", "speed_kmh": 900, "max_daily_hours": 14,
             "freight_cost_per_ton_km_by_year": {"2026": 0.4, "2027": 0.41}},
        ],
        "em": {
            "daily_mfg_cap": 3, "evtol_inventory_cap": 200, "selling_price": 1000, "base_mfg_cost": 300,
            "holding_rate": 0.329, "base_quality": 8.0, "quality_sensitivity": 0.5, "evtol_weight": 0.5,
            "emission_cost_base": 16.5, "emission_cost_growth": 0.05, "quality_epsilon": 1e-6,
        },
        "penalty_policy": {"brackets": [[15, 0.0005], [30, 0.001], [45, 0.003], [60, 0.005], [75, 0.007],
                                        [90, 0.01]]},
        "horizon": {
            "periods": [
                {"start_day": 1, "end_day": 10, "year": 2026},
                {"start_day": 11, "end_day": 20, "year": 2026},
                {"start_day": 21, "end_day": 30, "year": 2027},
                {"start_day": 31, "end_day": 40, "year": 2027},
            ],
            "lookahead": 2,
            "extension_step": 5,
        },
        # uncertainty only on right-hand sides (capacities, extra demand), so the
        # expected-value plan bounds the stochastic one from above
        "uncertainty": {"price_rel_sd": 0.0, "capacity_rel_sd": 0.1, "mfg_cost_rel_sd": 0.0,
                        "extra_demand_ex": 2.0, "extra_demand_sd": 1.0},
        "order_book": [
            {"orders_fp": dict(zip(ids, b[0])), "orders_sp": dict(zip(ids, b[1])),
             "deadlines_fp": dict(zip(ids, b[2])), "deadlines_sp": dict(zip(ids, b[3]))}
            for b in book
        ],
        "initial_inventory": {},
        "prebuilt": {},
        "start_period": 0,
    }


if __name__ == "__main__":
    for name, fn in (("base", base), ("case3c", case3c), ("desk", desk)):
        (HERE / f"{name}.json").write_text(json.dumps(fn(), indent=1) + "\n")
