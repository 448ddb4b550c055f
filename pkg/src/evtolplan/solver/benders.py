"""Multi-cut L-shaped method: integer master, one LP recourse per scenario."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ..errors import Infeasible, IterationLimit, MasterInfeasible
from ..model import TwoStageModel, rows_to_matrix
from .lp import LinearProgram, farkas_ray, solve_lp
from .milp import solve_milp

log = logging.getLogger(__name__)


@dataclass
class Cut:
    scenario: int
    kind: str  # "optimality" | "feasibility"
    coef: np.ndarray  # over first-stage columns
    rhs: float
    iteration: int

    def value(self, x: np.ndarray, theta: float = 0.0) -> float:
        """Left side minus right side; a point satisfies the cut when >= 0."""
        lhs = float(self.coef @ x) + (theta if self.kind == "optimality" else 0.0)
        return lhs - self.rhs


@dataclass
class BendersState:
    n_first: int
    cuts: list = field(default_factory=list)
    lower: float = -np.inf
    upper: float = np.inf
    iteration: int = 0
    history: list = field(default_factory=list)
    incumbent_x: np.ndarray | None = None
    incumbent_y: list | None = None
    incumbent_q: np.ndarray | None = None


class Subproblem:
    """Recourse LP of one scenario written as W y (<=,=) h - T x."""

    def __init__(self, model: TwoStageModel, s: int, first_pos: dict):
        blk = model.scenarios[s]
        self.s = s
        self.c = np.asarray(blk.cost)
        pos = {v: n for n, v in enumerate(blk.vars)}
        ub_rows, eq_rows = [], []
        for row in blk.rows:
            if row.sense == "=":
                eq_rows.append((row, 1.0))
            else:
                ub_rows.append((row, 1.0 if row.sense == "<=" else -1.0))
        self.W_ub, self.T_ub, self.h_ub = self._split(ub_rows, pos, first_pos, len(blk.vars))
        self.W_eq, self.T_eq, self.h_eq = self._split(eq_rows, pos, first_pos, len(blk.vars))

    @staticmethod
    def _split(rows, pos, first_pos, n):
        wd, wr, wc, td, tr, tc = [], [], [], [], [], []
        h = np.empty(len(rows))
        for m, (row, sgn) in enumerate(rows):
            h[m] = sgn * row.rhs
            for v, c in row.terms:
                if v.scenario is None:
                    td.append(sgn * c); tr.append(m); tc.append(first_pos[v])
                else:
                    wd.append(sgn * c); wr.append(m); wc.append(pos[v])
        W = sparse.csr_matrix((wd, (wr, wc)), shape=(len(rows), n))
        T = sparse.csr_matrix((td, (tr, tc)), shape=(len(rows), len(first_pos)))
        return W, T, h

    def solve(self, x: np.ndarray):
        lp = LinearProgram(self.c, self.W_ub, self.h_ub - self.T_ub @ x, self.W_eq, self.h_eq - self.T_eq @ x)
        sol = solve_lp(lp)
        if sol.status == "optimal":
            mu_ub, mu_eq = sol.duals_ub, sol.duals_eq
            kind = "optimality"
        else:
            mu_ub, mu_eq = sol.ray_ub, sol.ray_eq
            kind = "feasibility"
        # theta + (mu'T) x >= mu'h  (optimality)  /  (mu'T) x >= mu'h  (feasibility)
        coef = np.asarray(self.T_ub.T @ mu_ub + self.T_eq.T @ mu_eq).ravel()
        coef[np.abs(coef) < 1e-10] = 0.0
        rhs = float(mu_ub @ self.h_ub + mu_eq @ self.h_eq)
        return sol, kind, coef, rhs


def _profit_gap(upper: float, lower: float, revenue: float) -> float:
    if not np.isfinite(upper):
        return np.inf
    return (upper - lower) / max(1.0, abs(revenue - upper))


def benders_solve(model: TwoStageModel, gap_tol: float = 1e-4, max_iters: int = 200,
                  master_gap: float = 1e-9, workers: int = 1, trace: list | None = None):
    """Return ``(x, y_per_scenario, expected_profit, state)``.

    Costs are minimised internally; the reported objective is profit.
    """
    first = model.first
    n1 = len(first.vars)
    S = len(model.scenarios)
    first_pos = {v: n for n, v in enumerate(first.vars)}
    A1, lo1, hi1 = rows_to_matrix(first.rows, first_pos, n1)
    c = np.concatenate([np.asarray(first.cost), model.probs])
    integer = np.concatenate([np.asarray(first.integer, dtype=int), np.zeros(S, dtype=int)])
    subs = [Subproblem(model, s, first_pos) for s in range(S)]
    revenue = model.expected_revenue - model.constant_cost
    state = BendersState(n_first=n1)
    c1 = np.asarray(first.cost)

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for it in range(1, max_iters + 1):
            state.iteration = it
            rows = [A1]
            lo, hi = [lo1], [hi1]
            for cut in state.cuts:
                row = np.zeros(n1 + S)
                row[:n1] = cut.coef
                if cut.kind == "optimality":
                    row[n1 + cut.scenario] = 1.0
                rows.append(sparse.csr_matrix(row))
                lo.append([cut.rhs])
                hi.append([np.inf])
            A = sparse.vstack([sparse.hstack([A1, sparse.csr_matrix((A1.shape[0], S))])] + rows[1:]).tocsr()
            try:
                ms = solve_milp(c, A, np.concatenate(lo), np.concatenate(hi), integer, gap_tol=master_gap)
            except Infeasible as exc:
                raise MasterInfeasible(f"master infeasible at iteration {it}") from exc
            x = ms.x[:n1]
            theta = ms.x[n1:]
            state.lower = max(state.lower, ms.bound)

            results = list(pool.map(lambda sp: sp.solve(x), subs)) if pool else [sp.solve(x) for sp in subs]
            new_cuts, feasible, q = [], True, np.zeros(S)
            ys = []
            for s, (sol, kind, coef, rhs) in enumerate(results):
                cut = Cut(s, kind, coef, rhs, it)
                if kind == "feasibility":
                    feasible = False
                    new_cuts.append(cut)
                    ys.append(None)
                    continue
                q[s] = sol.objective
                ys.append(sol.x)
                if theta[s] < q[s] - 1e-9 * max(1.0, abs(q[s])):
                    new_cuts.append(cut)
            if feasible:
                ub = float(c1 @ x + model.probs @ q)
                if ub < state.upper:
                    state.upper = ub
                    state.incumbent_x, state.incumbent_y, state.incumbent_q = x.copy(), ys, q.copy()
            gap = _profit_gap(state.upper, state.lower, revenue)
            state.history.append((it, state.lower, state.upper, len(new_cuts)))
            if trace is not None:
                trace.extend({"iteration": it, "scenario": cu.scenario, "type": cu.kind, "rhs": cu.rhs,
                              "nnz": int(np.count_nonzero(cu.coef))} for cu in new_cuts)
            log.debug("benders it=%d lb=%.6f ub=%.6f cuts=%d", it, state.lower, state.upper, len(new_cuts))
            state.cuts.extend(new_cuts)
            if gap <= gap_tol or (feasible and not new_cuts):
                break
        else:
            raise IterationLimit(f"no convergence in {max_iters} iterations", incumbent=state)
    finally:
        if pool:
            pool.shutdown()
    if state.incumbent_x is None:
        raise IterationLimit("no feasible first stage found", incumbent=state)
    profit = revenue - state.upper
    return state.incumbent_x, state.incumbent_y, profit, state
