"""Branch-and-bound MILP solves through HiGHS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from ..errors import Infeasible, NodeLimit, NumericalBreakdown


@dataclass
class MilpSolution:
    status: str  # "optimal" or "node_limit"
    x: np.ndarray
    objective: float
    bound: float
    nodes: int
    gap: float


def solve_milp(c, A, row_lo, row_hi, integer, lb=None, ub=None, gap_tol: float = 1e-6,
               node_limit: int | None = None, time_limit: float | None = None,
               sense: str = "min") -> MilpSolution:
    c = np.asarray(c, dtype=float)
    n = c.size
    sign = 1.0 if sense == "min" else -1.0
    lb = np.zeros(n) if lb is None else np.asarray(lb, dtype=float)
    ub = np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float)
    opts = {"mip_rel_gap": gap_tol, "presolve": True}
    if node_limit is not None:
        opts["node_limit"] = int(node_limit)
    if time_limit is not None:
        opts["time_limit"] = float(time_limit)
    cons = []
    A = sparse.csr_matrix(A)
    if A.shape[0]:
        cons.append(LinearConstraint(A, row_lo, row_hi))
    res = milp(sign * c, constraints=cons, integrality=np.asarray(integer, dtype=int), bounds=Bounds(lb, ub),
               options=opts)
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    if res.status == 2:
        raise Infeasible("MILP is infeasible")
    if res.status == 3:
        raise NumericalBreakdown("MILP is unbounded")
    if res.x is None:
        if res.status == 1:
            raise NodeLimit(f"limit reached after {nodes} nodes without an incumbent")
        raise NumericalBreakdown(f"HiGHS status {res.status}: {res.message}")
    obj = sign * float(res.fun)
    bound = getattr(res, "mip_dual_bound", None)
    bound = obj if bound is None or not np.isfinite(bound) else sign * float(bound)
    gap = float(getattr(res, "mip_gap", 0.0) or 0.0)
    status = "optimal" if res.status == 0 else "node_limit"
    return MilpSolution(status=status, x=np.asarray(res.x), objective=obj, bound=bound, nodes=nodes, gap=gap)


def solve_flat(flat, gap_tol: float = 1e-6, node_limit: int | None = None,
               time_limit: float | None = None) -> MilpSolution:
    return solve_milp(flat.c, flat.A, flat.row_lo, flat.row_hi, flat.integer, gap_tol=gap_tol,
                      node_limit=node_limit, time_limit=time_limit)
