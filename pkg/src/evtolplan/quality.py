"""Entropy-weights part importance, batch quality and the quality-driven uplift."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .domain import CustomerSpec, Instance
from .errors import EmptyBatch


@dataclass(frozen=True)
class QualityWeights:
    omega: dict[str, float]
    xi: dict[tuple[str, str], float]
    rho: dict[tuple[str, str], float]
    entropy: dict[str, float]
    divergence: dict[str, float]
    uniform_fallback: bool = False


def ewm_weights(inst: Instance) -> QualityWeights:
    parts = [p.id for p in inst.parts]
    n_parts = len(parts)
    xi, rho, ent, div = {}, {}, {}, {}
    for pid in parts:
        sups = inst.suppliers_of(pid)
        q = np.array([s.quality for s in sups], dtype=float)
        qmax = q.max()
        x = q / qmax if qmax > 0 else np.ones_like(q)
        r = x / x.sum()
        for s, a, b in zip(sups, x, r):
            xi[(pid, s.id)] = float(a)
            rho[(pid, s.id)] = float(b)
        if n_parts > 1:
            terms = [b * math.log(b) for b in r if b > 0]
            e = -sum(terms) / math.log(n_parts)
        else:
            e = 0.0
        ent[pid] = e
        div[pid] = abs(1.0 - e)
    total = sum(div.values())
    if n_parts == 1:
        omega, fallback = {parts[0]: 1.0}, False
    elif total <= 0:
        omega, fallback = {pid: 1.0 / n_parts for pid in parts}, True
    else:
        omega, fallback = {pid: div[pid] / total for pid in parts}, False
    return QualityWeights(omega=omega, xi=xi, rho=rho, entropy=ent, divergence=div, uniform_fallback=fallback)


def batch_quality(receipts: Mapping[tuple[str, str], float], inst: Instance, weights: QualityWeights) -> float:
    """Weighted-average quality of received parts.

    ``receipts`` maps ``(part, supplier)`` to units received over the first
    period (days and modes already summed).
    """
    num = den = 0.0
    for (pid, sid), units in receipts.items():
        if units <= 0:
            continue
        w = weights.omega[pid]
        num += w * inst.supplier(pid, sid).quality * units
        den += w * units
    if den <= 0:
        raise EmptyBatch("no weighted receipts in the first period")
    return num / den


def demand_uplift(q: float, customer: CustomerSpec | int, base_quality: float, kappa: float) -> int:
    d1 = customer.orders_fp if isinstance(customer, CustomerSpec) else int(customer)
    raw = (q - base_quality) * kappa * d1
    # 0.6*0.2*10 lands at 1.2000000000000002 or 0.9999999999 depending on order
    return max(0, int(math.floor(raw + 1e-9)))
