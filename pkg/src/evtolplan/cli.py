"""``scp`` command line: scenarios, solve, rh, benchmark, report, export-mps."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .benchmarks import MODELS, run_benchmarks
from .domain import CostBreakdown, instance_hash, load_instance
from .errors import DataError, PlanningError, SolverError
from .evaluate import Plan, evaluate_plan
from .horizon import demand_fixed_point, run_rolling_horizon
from .model import build_extensive_form, build_two_stage, census, prepare
from .mps import export_mps
from .report import (
    COST_COLUMNS, SCHEDULE_COLUMNS, export_cost_breakdown, export_records_schedule, export_schedule,
    plot_costs, plot_schedule, provenance, read_csv, to_csv, write_json,
)
from .scenarios import ScenarioSet, scenario_set_for

EX_OK, EX_DATA, EX_SOLVER, EX_USAGE = 0, 1, 2, 64

log = logging.getLogger("evtolplan")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> Parser:
    p = Parser(prog="scp", description="Two-stage stochastic eVTOL supply-chain planner")
    p.add_argument("--version", action="version", version=f"scp {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    def scen_source(sp):
        sp.add_argument("--instance", required=True)
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--scenarios", help="scenario file written by `scp scenarios`")
        g.add_argument("--n", type=int, default=3, help="number of scenarios to sample")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--reduce", action="store_true", help="merge near-duplicate scenarios")

    sp = sub.add_parser("scenarios", help="sample (and optionally reduce) a scenario set")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--n", type=int, default=30)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--reduce", action="store_true")
    sp.add_argument("--sim-tol", type=float, default=0.05)
    sp.add_argument("--min-prob", type=float, default=0.001)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("solve", help="solve the two-period model of the current window")
    scen_source(sp)
    sp.add_argument("--method", choices=("benders", "extensive"), default="benders")
    sp.add_argument("--gap", type=float, default=None)
    sp.add_argument("--max-iters", type=int, default=200)
    sp.add_argument("--max-rounds", type=int, default=10, help="uplift fixed-point rounds")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--trace", metavar="FILE", help="write the Benders cut log here")
    sp.add_argument("--dump-census", action="store_true", help="print variable/constraint counts")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("rh", help="run the rolling-horizon controller")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--updates", help="JSON list of per-iteration patches")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--reduce", action="store_true")
    sp.add_argument("--method", choices=("benders", "extensive"), default="benders")
    sp.add_argument("--gap", type=float, default=None)
    sp.add_argument("--max-rounds", type=int, default=10)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("benchmark", help="compare 3SCOPE against the benchmark planners")
    scen_source(sp)
    sp.add_argument("--models", default="det,heur,seq,scope")
    sp.add_argument("--method", choices=("benders", "extensive"), default="extensive")
    sp.add_argument("--gap", type=float, default=None)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("report", help="schedule/cost tables and figures from a plan or a rolling run")
    sp.add_argument("--instance", help="instance the plan was solved on (needed with --plan)")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--plan", help="plan.json written by `scp solve`")
    g.add_argument("--run", help="output directory of `scp rh`")
    sp.add_argument("--scenario", type=int, default=None, help="also list this scenario's second period")
    sp.add_argument("--no-figures", action="store_true")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("export-mps", help="write the extensive form as an MPS file")
    scen_source(sp)
    sp.add_argument("--out", required=True)
    return p


# ----------------------------------------------------------------------

def _scenarios(args, inst) -> ScenarioSet:
    if getattr(args, "scenarios", None):
        return ScenarioSet.from_dict(json.loads(Path(args.scenarios).read_text())["scenario_set"])
    return scenario_set_for(inst, args.n, args.seed, reduce=args.reduce)


def _out_dir(path: str) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _parent(path: str) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def cmd_scenarios(args) -> int:
    inst = prepare(load_instance(args.instance)).inst
    sset = scenario_set_for(inst, args.n, args.seed, reduce=args.reduce, sim_tol=args.sim_tol, min_prob=args.min_prob)
    doc = {"provenance": provenance(args.seed, instance_hash(inst), n=args.n, reduce=args.reduce),
           "scenario_set": sset.to_dict()}
    write_json(_parent(args.out), doc)
    print(f"{len(sset)} scenarios -> {args.out}")
    return EX_OK


def cmd_solve(args) -> int:
    prep = prepare(load_instance(args.instance))
    sset = _scenarios(args, prep.inst)
    trace = [] if args.trace else None
    kw = {"gap_tol": args.gap}
    if args.method == "benders":
        kw.update(max_iters=args.max_iters, trace=trace, workers=args.workers)
    fp = demand_fixed_point(prep, sset, max_rounds=args.max_rounds, method=args.method, **kw)
    res = fp.result
    cb = evaluate_plan(res.plan, prep, sset)
    if args.dump_census:
        print(json.dumps(census(res.model), indent=1, sort_keys=True))
    prov = provenance(args.seed, instance_hash(prep.inst), method=args.method)
    summary = {
        "provenance": prov, "expected_profit": res.profit, "bound": res.bound, "cost": cb.as_dict(),
        "d2": dict(sorted(fp.d2.items())), "q": fp.q, "fixed_point_rounds": fp.rounds, "converged": fp.converged,
        "scenarios": len(sset), "benders_iterations": res.state.iteration if res.state else None,
    }
    out = _parent(args.out)
    write_json(out, {"provenance": prov, "plan": res.plan.to_dict(), "scenario_set": sset.to_dict(),
                     "summary": summary})
    write_json(out.with_name(out.stem + "_summary.json"), summary)
    if trace is not None:
        lines = [" ".join(f"{k}={v}" for k, v in row.items()) for row in trace]
        Path(args.trace).write_text("\n".join(lines) + ("\n" if lines else ""))
    print(f"expected profit {res.profit:.6f} ({args.method}); plan -> {args.out}")
    log.info("solve runtime %.3fs", res.runtime)
    return EX_OK


def cmd_rh(args) -> int:
    inst = load_instance(args.instance)
    updates = json.loads(Path(args.updates).read_text()) if args.updates else None
    res = run_rolling_horizon(inst, updates, seed=args.seed, n_scenarios=args.n, method=args.method,
                              reduce=args.reduce, max_rounds=args.max_rounds, gap_tol=args.gap)
    out = _out_dir(args.out)
    prov = provenance(args.seed, instance_hash(inst), method=args.method, scenarios=args.n)
    for rec in res.records:
        write_json(out / f"iteration_{rec.iteration}.json", {"provenance": prov, "record": rec.to_dict()})
    (out / "schedule.csv").write_text(to_csv(export_records_schedule(res.records), SCHEDULE_COLUMNS, prov))
    write_json(out / "summary.json", {
        "provenance": prov, "profit": res.profit, "cost": res.cost.as_dict(), "iterations": len(res.records),
        "per_iteration": [{"iteration": r.iteration, "profit": r.profit, "d2": dict(sorted(r.d2.items())),
                           "extension": r.extension} for r in res.records],
        "periods": [[p.start, p.end, p.year] for p in res.instance.horizon.periods],
    })
    print(f"{len(res.records)} iterations, aggregate profit {res.profit:.6f} -> {args.out}")
    return EX_OK


def cmd_benchmark(args) -> int:
    prep = prepare(load_instance(args.instance))
    sset = _scenarios(args, prep.inst)
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    bad = [m for m in models if m not in MODELS]
    if bad:
        raise UsageError(f"unknown models {bad}; choose from {sorted(MODELS)}")
    results = run_benchmarks(prep, sset, models, method=args.method, gap_tol=args.gap)
    rows = export_cost_breakdown([(r.name, r.cost) for r in results])
    for row, r in zip(rows, results):
        row["model"] = r.name
        row["expected_profit"] = r.profit
    cols = ("model", "expected_profit") + COST_COLUMNS[1:]
    prov = provenance(args.seed, instance_hash(prep.inst), scenarios=len(sset))
    _parent(args.out).write_text(to_csv(rows, cols, prov))
    for r in results:
        print(f"{r.name:14s} {r.profit:.6f}")
    return EX_OK


def cmd_report(args) -> int:
    out = _out_dir(args.out)
    if args.plan:
        if not args.instance:
            raise UsageError("--plan needs --instance")
        doc = json.loads(Path(args.plan).read_text())
        prep = prepare(load_instance(args.instance))
        plan = Plan.from_dict(doc["plan"])
        sset = ScenarioSet.from_dict(doc["scenario_set"])
        cb = evaluate_plan(plan, prep, sset)
        rows = export_schedule(plan, prep.inst, args.scenario)
        costs = export_cost_breakdown([("plan", cb)])
        prov = doc.get("provenance", {})
    else:
        run = Path(args.run)
        summary = json.loads((run / "summary.json").read_text())
        prov = summary.get("provenance", {})
        rows = read_csv((run / "schedule.csv").read_text())
        for r in rows:
            r["day"] = int(r["day"])
        costs = []
        for path in sorted(run.glob("iteration_*.json"), key=lambda p: int(p.stem.split("_")[1])):
            rec = json.loads(path.read_text())["record"]
            c = rec["cost"]
            cb = CostBreakdown(**{k: c[k] for k in ("tppc", "ticb", "ticf", "tmc", "ttcb", "ttcf", "tecb", "tecf",
                                                    "tpc", "revenue")})
            costs += export_cost_breakdown([(f"iteration {rec['iteration']}", cb)])
    meta = {k: prov.get(k) for k in ("engine", "version", "seed", "instance_hash")}
    (out / "schedule.csv").write_text(to_csv(rows, SCHEDULE_COLUMNS, meta))
    (out / "costs.csv").write_text(to_csv(costs, COST_COLUMNS, meta))
    if not args.no_figures:
        plot_schedule(rows, out / "schedule.png")
        plot_costs(costs, out / "costs.png")
    print(f"report -> {args.out}")
    return EX_OK


def cmd_export_mps(args) -> int:
    prep = prepare(load_instance(args.instance))
    sset = _scenarios(args, prep.inst)
    flat = build_extensive_form(build_two_stage(prep, sset))
    _parent(args.out).write_text(export_mps(flat, name=prep.inst.name.upper()[:8] or "SCOPE"))
    print(f"{len(flat.names)} columns, {flat.A.shape[0]} rows -> {args.out}")
    return EX_OK


COMMANDS = {"scenarios": cmd_scenarios, "solve": cmd_solve, "rh": cmd_rh, "benchmark": cmd_benchmark,
            "report": cmd_report, "export-mps": cmd_export_mps}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EX_USAGE
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EX_SOLVER
    except (DataError, PlanningError, OSError, ValueError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EX_DATA
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
