"""Schedule and cost exports, plus PNG figures of both."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .domain import CostBreakdown, Instance, transport_days
from .errors import InconsistentPlan
from .evaluate import Plan, StagePlan, hold_days

EVENTS = ("order", "receive", "manufacture", "hold", "dispatch", "deadline")
SCHEDULE_COLUMNS = ("day", "event", "part_id", "supplier_id", "customer_id", "mode", "quantity", "ref_day")
COST_COLUMNS = ("run", "TPPC", "TICB", "TICF", "TMC", "TTCB", "TTCF", "TECB", "TECF", "TPC", "revenue", "TP")


def provenance(seed=None, instance_hash: str | None = None, **extra) -> dict:
    out = {"engine": "evtolplan", "version": __version__, "seed": seed, "instance_hash": instance_hash}
    out.update(extra)
    return out


def _num(q: float):
    return int(round(q)) if abs(q - round(q)) < 1e-9 else round(float(q), 9)


def _stage_rows(inst: Instance, plan: Plan, sp: StagePlan, stage: int) -> list[dict]:
    off = plan.offset
    ids = {c.id for c in inst.customers}
    rows = []
    for (t1, i, j, k), q in sp.v.items():
        if q > 1e-9:
            rows.append(dict(day=off + t1, event="order", part_id=i, supplier_id=j, mode=k, quantity=_num(q)))
    recv: dict = {}
    for (t, i, j, k), q in sp.z.items():
        if q > 1e-9:
            recv[(t, i)] = recv.get((t, i), 0.0) + q
    for (t, i), q in recv.items():
        rows.append(dict(day=off + t, event="receive", part_id=i, quantity=_num(q)))
    for (t, l, k), q in sp.r.items():
        if q <= 1e-9:
            continue
        if l not in ids:
            raise InconsistentPlan(f"plan builds for unknown customer {l}")
        c = inst.customer(l)
        if k not in c.routes:
            raise InconsistentPlan(f"customer {l} has no route by {k}")
        wait = hold_days(inst, plan, l, k, t, stage)
        if wait < 0:
            raise InconsistentPlan(f"build on day {off + t} for {l} is past its dispatch day")
        disp = off + t + wait
        tp = transport_days(c.routes[k].distance_km, inst.modes[k], c.routes[k].available)
        rows.append(dict(day=off + t, event="manufacture", customer_id=l, mode=k, quantity=_num(q)))
        if wait > 0:
            rows.append(dict(day=off + t, event="hold", customer_id=l, mode=k, quantity=_num(q), ref_day=disp))
        rows.append(dict(day=disp, event="dispatch", customer_id=l, mode=k, quantity=_num(q), ref_day=disp + tp))
    return rows


def export_schedule(plan: Plan | None, inst: Instance | None = None, scenario: int | None = None,
                    include_deadlines: bool = True) -> list[dict]:
    """Event rows of the first period (and one scenario's second period if asked)."""
    if plan is None:
        return []
    rows = _stage_rows(inst, plan, plan.first, 1)
    if scenario is not None:
        rows += _stage_rows(inst, plan, plan.scenarios[scenario], 2)
    if include_deadlines:
        for c in inst.customers:
            rows.append(dict(day=c.deadline_fp, event="deadline", customer_id=c.id, quantity=c.orders_fp))
    return sort_rows(rows)


def sort_rows(rows: Iterable[dict]) -> list[dict]:
    out = [{col: r.get(col, "") for col in SCHEDULE_COLUMNS} for r in rows]
    rank = {e: n for n, e in enumerate(EVENTS)}
    out.sort(key=lambda r: (r["day"], rank[r["event"]], str(r["part_id"]), str(r["supplier_id"]),
                            str(r["customer_id"]), str(r["mode"])))
    return out


def export_records_schedule(records: Sequence) -> list[dict]:
    """Frozen first-period schedules of a rolling run, concatenated."""
    rows = []
    for rec in records:
        rows += export_schedule(rec.plan, rec.instance)
    return sort_rows(rows)


def export_cost_breakdown(breakdowns: Mapping[str, CostBreakdown] | Sequence[tuple[str, CostBreakdown]]) -> list[dict]:
    items = breakdowns.items() if isinstance(breakdowns, Mapping) else breakdowns
    out = []
    for name, cb in items:
        out.append({
            "run": name, "TPPC": cb.tppc, "TICB": cb.ticb, "TICF": cb.ticf, "TMC": cb.tmc, "TTCB": cb.ttcb,
            "TTCF": cb.ttcf, "TECB": cb.tecb, "TECF": cb.tecf, "TPC": cb.tpc, "revenue": cb.revenue,
            "TP": cb.profit,
        })
    return out


# ----------------------------------------------------------------------
# writers
# ----------------------------------------------------------------------

def to_csv(rows: Sequence[Mapping], columns: Sequence[str], meta: Mapping | None = None) -> str:
    buf = io.StringIO()
    for k, v in (meta or {}).items():
        buf.write(f"# {k}: {v}\n")
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: _fmt(r.get(c, "")) for c in columns})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(round(v, 6)) if np.isfinite(v) else str(v)
    return v


def read_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_json(path: str | Path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


# ----------------------------------------------------------------------
# figures
# ----------------------------------------------------------------------

def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_schedule(rows: Sequence[Mapping], path: str | Path, title: str = "Schedule") -> None:
    """Gantt-style chart: one lane per part receipt stream and per customer."""
    plt = _pyplot()
    lanes: dict[str, list] = {}
    colors = {"receive": "tab:blue", "manufacture": "tab:orange", "hold": "tab:gray", "dispatch": "tab:green",
              "deadline": "tab:red"}
    for r in rows:
        ev = r["event"]
        if ev == "order":
            continue
        lane = f"part {r['part_id']}" if ev == "receive" else f"customer {r['customer_id']}"
        lanes.setdefault(lane, []).append(r)
    names = sorted(lanes)
    fig, ax = plt.subplots(figsize=(10, 0.6 * max(len(names), 2) + 1.5))
    for y, lane in enumerate(names):
        for r in lanes[lane]:
            day, ev = int(r["day"]), r["event"]
            if ev == "deadline":
                ax.plot([day, day], [y - 0.4, y + 0.4], color=colors[ev], lw=2)
            elif ev in ("hold", "dispatch") and r.get("ref_day") not in ("", None):
                ax.broken_barh([(day, int(r["ref_day"]) - day)], (y - 0.15, 0.3), color=colors[ev], alpha=0.6)
            else:
                ax.broken_barh([(day, 1)], (y - 0.3, 0.6), color=colors[ev])
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names)
    ax.set_xlabel("day")
    ax.set_title(title)
    handles = [plt.Rectangle((0, 0), 1, 1, color=c) for c in colors.values()]
    ax.legend(handles, list(colors), loc="upper left", fontsize="small", ncol=len(colors))
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def plot_costs(rows: Sequence[Mapping], path: str | Path, title: str = "Cost breakdown") -> None:
    plt = _pyplot()
    comps = COST_COLUMNS[1:10]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    x = np.arange(len(comps))
    width = 0.8 / max(len(rows), 1)
    for n, r in enumerate(rows):
        ax.bar(x + n * width, [float(r[c]) for c in comps], width, label=str(r["run"]))
    ax.set_xticks(x + width * (len(rows) - 1) / 2)
    ax.set_xticklabels(comps)
    ax.set_ylabel("cost")
    ax.set_title(title)
    if rows:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
