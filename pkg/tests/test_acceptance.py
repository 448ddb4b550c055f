"""Acceptance criteria, one test per criterion.

Each test records PASS, FAIL or SKIP with a short detail; the lines are
printed in the terminal summary under "acceptance criteria".
"""

import time
import warnings
from contextlib import contextmanager
from dataclasses import replace
from decimal import ROUND_HALF_UP, Decimal

import numpy as np
import pytest

from conftest import ACCEPTANCE, load_updates
from evtolplan.benchmarks import run_benchmarks
from evtolplan.domain import contract_value, delay_penalty
from evtolplan.evaluate import audit_plan, evaluate_plan, receipts_quality
from evtolplan.horizon import assess_delays, demand_fixed_point, run_rolling_horizon
from evtolplan.model import apply_horizon_extension, build_extensive_form, build_two_stage, prepare
from evtolplan.mps import export_mps
from evtolplan.report import export_schedule
from evtolplan.scenarios import discretize_levels, reduce_scenarios, scenario_set_for
from evtolplan.solver import solve_model
from evtolplan.solver.milp import solve_flat
from test_scenarios import merge_oracle

SEEDS = range(10)
TABLE12 = {"c1": (542, 1.23), "c2": (530, 3.12), "c3": (540, 0.56), "c4": (545, 0.23)}


@contextmanager
def criterion(n, title):
    info = {"detail": ""}
    try:
        yield info
    except pytest.skip.Exception as exc:
        ACCEPTANCE[n] = ("SKIP", title, str(exc))
        raise
    except BaseException as exc:
        msg = str(exc).strip().splitlines()
        ACCEPTANCE[n] = ("FAIL", title, msg[0] if msg else type(exc).__name__)
        raise
    else:
        ACCEPTANCE[n] = ("PASS", title, info["detail"])


def _timed(fn, *a, **kw):
    t0 = time.perf_counter()
    out = fn(*a, **kw)
    return out, time.perf_counter() - t0


# ----------------------------------------------------------------------
# shared solves
# ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def desk_solves(desk_prep):
    out = []
    for seed in SEEDS:
        sset = scenario_set_for(desk_prep.inst, 3, seed)
        model = build_two_stage(desk_prep, sset)
        ben, tb = _timed(solve_model, model, "benders")
        flat = build_extensive_form(model)
        ext, te = _timed(solve_flat, flat)
        out.append(dict(seed=seed, sset=sset, model=model, benders=ben, t_benders=tb, flat=flat, ext=ext, t_ext=te))
    return out


@pytest.fixture(scope="module")
def benchmarks(desk_prep):
    out = []
    for seed in SEEDS:
        sset = scenario_set_for(desk_prep.inst, 3, seed)
        out.append((seed, sset, {r.name: r for r in run_benchmarks(desk_prep, sset)}))
    return out


@pytest.fixture(scope="module")
def rh_runs(desk):
    return {
        "plain": run_rolling_horizon(desk, seed=0),
        "3a": run_rolling_horizon(desk, load_updates("updates_desk_3a.json"), seed=0),
        "3c": run_rolling_horizon(desk, load_updates("updates_desk_3c.json"), seed=0),
    }


@pytest.fixture(scope="module")
def case3c_solve(case3c):
    """The published case-3C deadlines applied to the case fixture, then solved."""
    inst = prepare(case3c).inst
    a = assess_delays(inst)
    ext = apply_horizon_extension(inst, {l: d for l, (d, _) in TABLE12.items()}, a.min_delay, a.max_delay)
    prep = prepare(ext)
    sset = scenario_set_for(prep.inst, 3, 0)
    fp = demand_fixed_point(prep, sset)
    return inst, a, prep, sset, fp


# ----------------------------------------------------------------------

def test_c01_penalty_exactness(case3c):
    with criterion(1, "delay penalties reproduce the published case-3C values") as info:
        t0 = time.perf_counter()
        inst = case3c
        raw, shown = {}, {}
        for c in inst.customers:
            new, _ = TABLE12[c.id]
            raw[c.id] = delay_penalty(inst.penalty_policy, contract_value(inst, c), new - c.deadline_fp)
        elapsed = time.perf_counter() - t0
        for l, (_, want) in TABLE12.items():
            dollars = round(raw[l])
            # whole dollars: c3 is 0.555, exactly on the edge of the tolerance band
            assert abs(dollars - round(want * 1e6)) <= 5_000, f"{l}: {dollars} vs {want}M"
            # and the value as the table prints it, $M to two places
            shown[l] = (Decimal(dollars) / Decimal(10**6)).quantize(Decimal("0.01"), ROUND_HALF_UP)
            assert shown[l] == Decimal(str(want)), f"{l}: prints as {shown[l]}, table has {want}"
        printed = sum(shown.values())
        assert abs(printed - Decimal("5.14")) <= Decimal("0.005"), printed
        assert elapsed < 1.0
        info["detail"] = (f"{', '.join(f'{l}={raw[l] / 1e6:.5f}' for l in sorted(raw))}; printed sum {printed}, "
                          f"unrounded sum {sum(raw.values()) / 1e6:.5f}; {elapsed * 1e3:.2f} ms")


def test_c02_decomposition_correctness(desk_solves):
    with criterion(2, "Benders agrees with the extensive form on desk, 10 seeds x 3 scenarios") as info:
        worst = 0.0
        for r in desk_solves:
            revenue = r["model"].expected_revenue - r["model"].constant_cost
            ext_profit = revenue - r["ext"].objective
            rel = abs(r["benders"].profit - ext_profit) / abs(ext_profit)
            worst = max(worst, rel)
            assert rel <= 1e-4, f"seed {r['seed']}: relative gap {rel:.3g}"
            assert r["t_benders"] < 30 and r["t_ext"] < 30
        slow = max(max(r["t_benders"], r["t_ext"]) for r in desk_solves)
        info["detail"] = f"worst relative gap {worst:.2e}, slowest run {slow:.2f} s"


def test_c03_benchmark_ordering(benchmarks):
    with criterion(3, "det >= 3SCOPE >= seq and 3SCOPE >= heur on desk, 10 seeds") as info:
        margins = []
        for seed, _, res in benchmarks:
            p = {k: r.profit for k, r in res.items()}
            tol = 1e-6 * abs(p["3SCOPE"])
            assert p["deterministic"] >= p["3SCOPE"] - tol, f"seed {seed}: {p}"
            assert p["3SCOPE"] >= p["sequential"] - tol, f"seed {seed}: {p}"
            assert p["3SCOPE"] >= p["heuristic"] - tol, f"seed {seed}: {p}"
            margins.append((p["deterministic"] - p["3SCOPE"], p["3SCOPE"] - p["sequential"],
                            p["3SCOPE"] - p["heuristic"]))
        m = np.array(margins)
        info["detail"] = (f"min margins det-scope {m[:, 0].min():.3f}, scope-seq {m[:, 1].min():.3f}, "
                          f"scope-heur {m[:, 2].min():.3f}")


def _p1_suppliers(rec):
    return {j for (i, j), q in rec.plan.first.receipts_by_supplier().items() if i == "p1" and q > 1e-9}


def test_c04_disruption_3a(rh_runs):
    with criterion(4, "removing the selected p1 supplier mid-run") as info:
        plain, hit = rh_runs["plain"], rh_runs["3a"]
        assert "s2" in _p1_suppliers(plain.records[1]), "s2 is not the supplier being removed"
        assert len(hit.records) == len(plain.records)
        later = set()
        for rec in hit.records[1:]:
            used = _p1_suppliers(rec)
            assert "s2" not in used
            later |= used
        assert later and later != {"s2"}
        assert hit.profit < plain.profit
        drop = (plain.profit - hit.profit) / plain.profit
        info["detail"] = (f"p1 from {sorted(later)} after removal; profit {plain.profit:.2f} -> {hit.profit:.2f} "
                          f"({100 * drop:.2f}% lower)")


def test_c05_disruption_3c(desk, rh_runs, case3c_solve):
    with criterion(5, "lead-time inflation extends the horizon and prices the delay") as info:
        run = rh_runs["3c"]
        hit = [r for r in run.records if r.extension > 0]
        assert hit, "no iteration extended the horizon"
        rec = hit[0]
        a = rec.assessment
        old = desk.order_book[rec.iteration].deadlines_fp
        for l, d in rec.deadlines.items():
            assert d == old[l] + a.min_delay[l]
            assert old[l] + a.min_delay[l] <= d <= old[l] + a.max_delay[l]
        # every first-period order is built and arrives by its new deadline
        inst = rec.instance
        assert audit_plan(rec.plan, prepare(inst)) == []
        on_time, later = {}, {}
        for row in export_schedule(rec.plan, inst, include_deadlines=False):
            if row["event"] == "dispatch":
                l = row["customer_id"]
                bucket = on_time if row["ref_day"] <= rec.deadlines[l] else later
                bucket[l] = bucket.get(l, 0) + row["quantity"]
        for c in inst.customers:
            assert on_time.get(c.id, 0) + inst.prebuilt.get(c.id, 0.0) >= c.orders_fp
            # anything arriving after the new deadline is stock built ahead for the next period
            assert on_time.get(c.id, 0) + later.get(c.id, 0) + inst.prebuilt.get(c.id, 0.0) == \
                c.orders_fp + rec.plan.phi.get(c.id, 0.0)
        want = sum(delay_penalty(inst.penalty_policy, contract_value(inst, c), rec.deadlines[c.id] - old[c.id])
                   for c in inst.customers)
        assert rec.cost.tpc == want

        # the published deadlines on the case fixture sit inside the same window, and their penalties are charged
        c3, a3, prep, sset, fp = case3c_solve
        for c in c3.customers:
            assert c.deadline_fp + a3.min_delay[c.id] <= TABLE12[c.id][0] <= c.deadline_fp + a3.max_delay[c.id]
        cb = evaluate_plan(fp.result.plan, prep, sset)
        want3c = sum(delay_penalty(c3.penalty_policy, contract_value(c3, c), TABLE12[c.id][0] - c.deadline_fp)
                     for c in c3.customers)
        assert cb.tpc == want3c
        info["detail"] = (f"desk iteration {rec.iteration}: +{rec.extension} days, deadlines "
                          f"{dict(sorted(rec.deadlines.items()))}, TPC {rec.cost.tpc:g}; case 3C TPC "
                          f"{cb.tpc / 1e6:.5f}M")


def test_c06_conservation(desk_solves, benchmarks, rh_runs, case3c_solve, desk_prep):
    with criterion(6, "conservation audits and objective replay on every solved plan") as info:
        n, worst = 0, 0.0
        for r in desk_solves:
            for name, profit, plan in (
                ("benders", r["benders"].profit, r["benders"].plan),
                ("extensive", None, None),
            ):
                if plan is None:
                    from evtolplan.solver import plan_from_flat
                    plan = plan_from_flat(r["model"], r["ext"].x)
                    profit = r["model"].expected_revenue - r["model"].constant_cost - r["ext"].objective
                assert audit_plan(plan, desk_prep, r["sset"]) == [], (r["seed"], name)
                replay = evaluate_plan(plan, desk_prep, r["sset"]).profit
                rel = abs(replay - profit) / abs(profit)
                worst = max(worst, rel)
                assert rel <= 1e-6, (r["seed"], name, replay, profit)
                q = receipts_quality(plan, desk_prep)
                assert q >= desk_prep.inst.em.base_quality + desk_prep.inst.em.quality_epsilon - 1e-9
                n += 1
        for seed, sset, res in benchmarks:
            for name, b in res.items():
                if name == "deterministic":
                    continue
                assert audit_plan(b.plan, desk_prep, sset) == [], (seed, name)
                n += 1
        for run in rh_runs.values():
            for rec in run.records:
                assert audit_plan(rec.plan, prepare(rec.instance)) == [], rec.iteration
                n += 1
        _, _, prep, sset, fp = case3c_solve
        assert audit_plan(fp.result.plan, prep, sset) == []
        rel = abs(evaluate_plan(fp.result.plan, prep, sset).profit - fp.result.profit) / abs(fp.result.profit)
        assert rel <= 1e-6
        worst = max(worst, rel)
        n += 1
        info["detail"] = f"{n} plans audited clean, worst objective replay {worst:.1e}"


def test_c07_scenario_engine(desk, base):
    with criterion(7, "scenario levels, determinism and reduction") as info:
        t = discretize_levels()
        assert abs(t.probs.sum() - 1.0) <= 1e-12
        checked = 0
        for inst in (desk, prepare(base).inst):
            for seed in range(5):
                a = scenario_set_for(inst, 30, seed)
                assert a.to_dict() == scenario_set_for(inst, 30, seed).to_dict()
                for tol in (0.05, 0.2):
                    red = reduce_scenarios(a, sim_tol=tol)
                    want = merge_oracle(a, tol, 0.001)
                    assert len(red) == len(want)
                    assert np.allclose(red.probs, [p for _, p in want], rtol=0, atol=1e-12)
                    for s, (idx, _) in zip(red.scenarios, want):
                        assert np.array_equal(s.values, a.scenarios[idx].values)
                    assert abs(red.probs.sum() - 1.0) <= 1e-9
                    checked += 1
        info["detail"] = f"{checked} reductions of 30-scenario sets match the pairwise oracle"


def test_c08_scalability(desk_prep):
    with criterion(8, "Benders on desk scales sub-quadratically up to 25 scenarios") as info:
        sizes = (3, 10, 25)
        times = []
        for n in sizes:
            model = build_two_stage(desk_prep, scenario_set_for(desk_prep.inst, n, 0))
            runs = [_timed(solve_model, model, "benders")[1] for _ in range(3)]
            times.append(min(runs))
        assert times[-1] < 60.0
        slope = np.polyfit(np.log(sizes), np.log(times), 1)[0]
        assert slope < 2.0
        info["detail"] = (", ".join(f"{n}: {t:.3f} s" for n, t in zip(sizes, times))
                          + f"; log-log slope {slope:.2f}")


def _uplifts_by_kappa(inst, **em):
    out = {}
    for kappa in (0.15, 0.2, 0.25):
        prep = prepare(replace(inst, em=replace(inst.em, quality_sensitivity=kappa, **em)))
        fp = demand_fixed_point(prep, scenario_set_for(prep.inst, 3, 0), max_rounds=10)
        assert fp.rounds <= 10
        assert fp.converged or fp.oscillated
        out[kappa] = (fp.d2, fp.rounds)
    ks = sorted(out)
    for lo, hi in zip(ks, ks[1:]):
        assert all(out[hi][0][l] >= out[lo][0][l] for l in out[lo][0]), out
    return out


@pytest.mark.slow
def test_c09_fixed_point(base):
    with criterion(9, "uplift fixed point on base for kappa 0.15/0.2/0.25") as info:
        got = _uplifts_by_kappa(base)
        # cost-minimal buying sits on the quality floor in base, so the uplifts there are all zero;
        # a lower base quality exercises the monotone pattern with non-zero uplifts
        low = _uplifts_by_kappa(base, base_quality=7.0)
        assert any(sum(d.values()) > 0 for d, _ in low.values())
        fmt = lambda res: "; ".join(f"{k}: {sum(d.values())} in {r} rounds" for k, (d, r) in sorted(res.items()))
        info["detail"] = f"base {fmt(got)} | base quality 7: {fmt(low)}"


def test_c10_mps_round_trip(desk_solves, tmp_path):
    with criterion(10, "MPS export solved by an external MILP solver") as info:
        pulp = pytest.importorskip("pulp")
        r = desk_solves[0]
        path = tmp_path / "desk.mps"
        path.write_text(export_mps(r["flat"]))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DeprecationWarning)
            _, prob = pulp.LpProblem.fromMPS(str(path), sense=pulp.LpMinimize)
            prob.solve(pulp.PULP_CBC_CMD(msg=0, gapRel=1e-9))
        assert pulp.LpStatus[prob.status] == "Optimal"
        ext = pulp.value(prob.objective)
        rel = abs(ext - r["ext"].objective) / abs(r["ext"].objective)
        assert rel <= 1e-6
        info["detail"] = f"CBC {ext:.6f} vs HiGHS {r['ext'].objective:.6f}, relative difference {rel:.1e}"
