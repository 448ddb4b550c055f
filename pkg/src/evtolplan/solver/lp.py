"""LP solves through HiGHS with duals, Farkas rays and unbounded rays."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from ..errors import NumericalBreakdown


@dataclass
class LinearProgram:
    """``sense`` c'x  s.t.  A_ub x <= b_ub, A_eq x = b_eq, lb <= x <= ub."""

    c: np.ndarray
    A_ub: object = None
    b_ub: np.ndarray | None = None
    A_eq: object = None
    b_eq: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    sense: str = "min"

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float)
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float)
        if self.A_ub is None:
            self.A_ub, self.b_ub = sparse.csr_matrix((0, n)), np.zeros(0)
        if self.A_eq is None:
            self.A_eq, self.b_eq = sparse.csr_matrix((0, n)), np.zeros(0)
        self.A_ub = sparse.csr_matrix(self.A_ub)
        self.A_eq = sparse.csr_matrix(self.A_eq)
        self.b_ub = np.asarray(self.b_ub, dtype=float)
        self.b_eq = np.asarray(self.b_eq, dtype=float)
        for arr in (self.c, self.A_ub.data, self.A_eq.data, self.b_ub, self.b_eq):
            if not np.all(np.isfinite(arr)):
                raise ValueError("coefficients must be finite")


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    duals_ub: np.ndarray | None = None
    duals_eq: np.ndarray | None = None
    ray_ub: np.ndarray | None = None
    ray_eq: np.ndarray | None = None
    primal_ray: np.ndarray | None = None


def _bounds(lp: LinearProgram):
    return list(zip([None if not np.isfinite(v) else v for v in lp.lb],
                    [None if not np.isfinite(v) else v for v in lp.ub]))


def _run(c, A_ub, b_ub, A_eq, b_eq, bounds):
    kw = {}
    if A_ub.shape[0]:
        kw.update(A_ub=A_ub, b_ub=b_ub)
    if A_eq.shape[0]:
        kw.update(A_eq=A_eq, b_eq=b_eq)
    return linprog(c, bounds=bounds, method="highs", **kw)


def farkas_ray(lp: LinearProgram) -> tuple[np.ndarray, np.ndarray, float]:
    """Duals of the phase-one problem that minimises total infeasibility.

    Returns ``(y_ub, y_eq, value)``; ``value > 0`` certifies infeasibility and
    ``y'b`` with those multipliers is a valid lower bound on it for any rhs.
    """
    m_ub, m_eq = lp.A_ub.shape[0], lp.A_eq.shape[0]
    n = lp.c.size
    A_ub = sparse.hstack([lp.A_ub, -sparse.identity(m_ub), sparse.csr_matrix((m_ub, 2 * m_eq))]).tocsr()
    A_eq = sparse.hstack([lp.A_eq, sparse.csr_matrix((m_eq, m_ub)), sparse.identity(m_eq),
                          -sparse.identity(m_eq)]).tocsr()
    c = np.concatenate([np.zeros(n), np.ones(m_ub + 2 * m_eq)])
    bounds = _bounds(lp) + [(0, None)] * (m_ub + 2 * m_eq)
    res = _run(c, A_ub, lp.b_ub, A_eq, lp.b_eq, bounds)
    if res.status != 0:
        raise NumericalBreakdown(f"phase-one LP failed: {res.message}")
    y_ub = res.ineqlin.marginals if m_ub else np.zeros(0)
    y_eq = res.eqlin.marginals if m_eq else np.zeros(0)
    return np.asarray(y_ub), np.asarray(y_eq), float(res.fun)


def _primal_ray(lp: LinearProgram, sign: float) -> np.ndarray:
    n = lp.c.size
    lo = np.where(np.isfinite(lp.lb), 0.0, -1.0)
    hi = np.where(np.isfinite(lp.ub), 0.0, 1.0)
    res = _run(sign * lp.c, lp.A_ub, np.zeros(lp.A_ub.shape[0]), lp.A_eq, np.zeros(lp.A_eq.shape[0]),
               list(zip(lo, hi)))
    if res.status != 0 or res.fun >= -1e-12:
        raise NumericalBreakdown("could not extract an unbounded direction")
    return res.x


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Optimal vertex with duals, or a certificate of infeasibility/unboundedness.

    Duals are reported as d(objective)/d(rhs) in the caller's sense.
    """
    sign = 1.0 if lp.sense == "min" else -1.0
    res = _run(sign * lp.c, lp.A_ub, lp.b_ub, lp.A_eq, lp.b_eq, _bounds(lp))
    if res.status == 0:
        du = sign * np.asarray(res.ineqlin.marginals) if lp.A_ub.shape[0] else np.zeros(0)
        de = sign * np.asarray(res.eqlin.marginals) if lp.A_eq.shape[0] else np.zeros(0)
        return LpSolution("optimal", x=res.x, objective=sign * res.fun, duals_ub=du, duals_eq=de)
    if res.status == 2:
        y_ub, y_eq, _ = farkas_ray(lp)
        return LpSolution("infeasible", ray_ub=y_ub, ray_eq=y_eq)
    if res.status == 3:
        return LpSolution("unbounded", primal_ray=_primal_ray(lp, sign))
    raise NumericalBreakdown(f"HiGHS status {res.status}: {res.message}")
