"""Solve entry points returning plans."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..evaluate import Plan, StagePlan
from ..model import TwoStageModel, build_extensive_form
from .benders import BendersState, Cut, benders_solve
from .lp import LinearProgram, LpSolution, solve_lp
from .milp import MilpSolution, solve_flat, solve_milp

__all__ = [
    "BendersState", "Cut", "LinearProgram", "LpSolution", "MilpSolution", "SolveResult", "benders_solve",
    "plan_from_flat", "plan_from_values", "solve_lp", "solve_milp", "solve_model",
]

_STAGE_FIELD = {"z": "z", "v": "v", "r": "r", "alpha": "alpha", "zs": "z", "vs": "v", "rs": "r", "alphas": "alpha"}
_INT = {"z", "v", "r"}


@dataclass
class SolveResult:
    plan: Plan
    profit: float
    cost: float
    method: str
    runtime: float
    model: TwoStageModel
    state: BendersState | None = None
    bound: float | None = None


def _put(sp: StagePlan, vid, val: float, integral: bool):
    if integral:
        val = float(np.round(val))
    elif abs(val) < 1e-9:
        val = 0.0
    if val == 0.0 and vid.kind not in ("alpha", "alphas"):
        return
    getattr(sp, _STAGE_FIELD[vid.kind])[vid.idx] = val


def plan_from_values(model: TwoStageModel, x_first: np.ndarray, y: list | None) -> Plan:
    md = model.data
    first = StagePlan()
    phi = {}
    for vid, val in zip(model.first.vars, x_first):
        if vid.kind == "phi":
            phi[vid.idx[0]] = (float(np.round(val)) if abs(val - np.round(val)) < 1e-6 else float(val)) + 0.0
        else:
            _put(first, vid, float(val), vid.kind in _INT or vid.kind == "alpha" and abs(val - round(val)) < 1e-6)
    scen = []
    for blk, ys in zip(model.scenarios, y or []):
        sp = StagePlan()
        for vid, val in zip(blk.vars, ys):
            _put(sp, vid, float(val), False)
        scen.append(sp)
    return Plan(offset=md.offset, H=md.H, T=md.T, single=md.single, first=first, phi=phi, scenarios=scen,
                probs=[float(p) for p in model.probs], d2=dict(model.d2))


def plan_from_flat(model: TwoStageModel, x: np.ndarray) -> Plan:
    """Plan from a solution vector laid out like the extensive form."""
    n1 = len(model.first.vars)
    ys, off = [], n1
    for blk in model.scenarios:
        ys.append(x[off:off + len(blk.vars)])
        off += len(blk.vars)
    return plan_from_values(model, x[:n1], ys)


def solve_model(model: TwoStageModel, method: str = "extensive", gap_tol: float | None = None,
                max_iters: int = 200, time_limit: float | None = None, trace: list | None = None,
                workers: int = 1) -> SolveResult:
    t0 = time.perf_counter()
    revenue = model.expected_revenue - model.constant_cost
    if method == "benders" and model.scenarios:
        x, ys, profit, state = benders_solve(model, gap_tol=1e-4 if gap_tol is None else gap_tol,
                                             max_iters=max_iters, trace=trace, workers=workers)
        plan = plan_from_values(model, x, ys)
        return SolveResult(plan, profit, revenue - profit, "benders", time.perf_counter() - t0, model, state,
                           bound=revenue - state.lower)
    flat = build_extensive_form(model)
    sol = solve_flat(flat, gap_tol=1e-7 if gap_tol is None else gap_tol, time_limit=time_limit)
    plan = plan_from_flat(model, sol.x)
    return SolveResult(plan, revenue - sol.objective, sol.objective, "extensive", time.perf_counter() - t0, model,
                       bound=revenue - sol.bound)
