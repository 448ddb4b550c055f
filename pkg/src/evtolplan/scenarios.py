"""Seven-level scenario sampling and similarity-based reduction."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .domain import Instance
from .errors import AllScenariosReduced

KINDS = ("price", "capacity", "mfg_cost", "extra_demand")


@dataclass(frozen=True)
class UncertainSpec:
    kind: str
    key: tuple
    ex: float
    sd: float

    @property
    def target(self) -> tuple:
        return (self.kind,) + tuple(self.key)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown uncertain parameter kind {self.kind!r}")
        if not self.sd >= 0:
            raise ValueError("sd must be >= 0")
        if not math.isfinite(self.ex):
            raise ValueError("ex must be finite")


@dataclass(frozen=True)
class LevelTable:
    levels: np.ndarray
    probs: np.ndarray
    cumulative: np.ndarray


@dataclass
class Scenario:
    values: np.ndarray
    prob: float
    levels: np.ndarray | None = None


@dataclass
class ScenarioSet:
    targets: list[tuple]
    scale: np.ndarray
    scenarios: list[Scenario]
    seed: int | None = None
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self._index = {t: n for n, t in enumerate(self.targets)}

    def __len__(self):
        return len(self.scenarios)

    @property
    def probs(self) -> np.ndarray:
        return np.array([s.prob for s in self.scenarios])

    def value(self, s: int, kind: str, *key, default=None):
        n = self._index.get((kind,) + tuple(key))
        if n is None:
            return default
        return float(self.scenarios[s].values[n])

    def mean_values(self) -> np.ndarray:
        vals = np.array([s.values for s in self.scenarios])
        return self.probs @ vals

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "targets": [list(t) for t in self.targets],
            "scale": [float(x) for x in self.scale],
            "scenarios": [
                {
                    "prob": float(s.prob),
                    "values": [float(v) for v in s.values],
                    "levels": None if s.levels is None else [int(v) for v in s.levels],
                }
                for s in self.scenarios
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSet":
        scen = [
            Scenario(
                values=np.asarray(s["values"], dtype=float),
                prob=float(s["prob"]),
                levels=None if s.get("levels") is None else np.asarray(s["levels"], dtype=int),
            )
            for s in d["scenarios"]
        ]
        return cls(
            targets=[tuple(t) for t in d["targets"]],
            scale=np.asarray(d["scale"], dtype=float),
            scenarios=scen,
            seed=d.get("seed"),
        )


def _phi(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def discretize_levels() -> LevelTable:
    levels = np.arange(-3, 4)
    probs = np.empty(7)
    for n, k in enumerate(levels):
        if abs(k) <= 2:
            probs[n] = _phi(k + 0.5) - _phi(k - 0.5)
        else:
            probs[n] = 1.0 - _phi(2.5)
    probs = probs / probs.sum()
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    return LevelTable(levels=levels, probs=probs, cumulative=cum)


def roulette_draw(table: LevelTable, u: float) -> int:
    if not 0.0 <= u < 1.0:
        raise ValueError("u must lie in [0, 1)")
    n = int(np.searchsorted(table.cumulative, u, side="right"))
    return int(table.levels[min(n, len(table.levels) - 1)])


def stable_hash(target: Iterable) -> int:
    h = hashlib.sha256(repr(tuple(target)).encode()).digest()
    return int.from_bytes(h[:4], "little")


def _realize(spec: UncertainSpec, level: int) -> float:
    v = spec.ex + level * spec.sd
    if spec.kind == "extra_demand":
        v = math.floor(v + 0.5)
    return max(0.0, v)


def generate_scenarios(specs: Sequence[UncertainSpec], n: int, seed: int) -> ScenarioSet:
    """Sample ``n`` scenarios; every parameter draws from its own RNG stream.

    Keying the stream on the parameter means that adding or removing one
    parameter leaves the draws of all others untouched.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    table = discretize_levels()
    m = len(specs)
    lev = np.zeros((n, m), dtype=int)
    for c, spec in enumerate(specs):
        rng = np.random.default_rng([int(seed), stable_hash(spec.target)])
        u = rng.random(n)
        lev[:, c] = [roulette_draw(table, x) for x in u]
    vals = np.zeros((n, m))
    for c, spec in enumerate(specs):
        vals[:, c] = [_realize(spec, k) for k in lev[:, c]]
    p_of = dict(zip(table.levels.tolist(), table.probs.tolist()))
    raw = np.array([math.prod(p_of[k] for k in row) for row in lev.tolist()]) if m else np.ones(n)
    probs = raw / raw.sum()
    scale = np.array([abs(s.ex) if s.ex != 0 else 1.0 for s in specs])
    scen = [Scenario(values=vals[r].copy(), prob=float(probs[r]), levels=lev[r].copy()) for r in range(n)]
    return ScenarioSet(targets=[s.target for s in specs], scale=scale, scenarios=scen, seed=int(seed))


def reduce_scenarios(sset: ScenarioSet, sim_tol: float = 0.05, min_prob: float = 0.001) -> ScenarioSet:
    """Drop improbable scenarios, then merge near-duplicates pairwise.

    The closest pair (max-norm over EX-scaled values) is merged first; the
    more probable scenario survives and absorbs the other's mass, the lower
    index winning ties.
    """
    keep = [s for s in sset.scenarios if s.prob >= min_prob]
    if not keep:
        raise AllScenariosReduced(f"every scenario has probability below {min_prob}")
    vals = np.array([s.values / sset.scale for s in keep]) if keep[0].values.size else np.zeros((len(keep), 0))
    probs = np.array([s.prob for s in keep], dtype=float)
    alive = np.ones(len(keep), dtype=bool)
    if vals.shape[1]:
        dist = np.max(np.abs(vals[:, None, :] - vals[None, :, :]), axis=2)
    else:
        dist = np.zeros((len(keep), len(keep)))
    np.fill_diagonal(dist, np.inf)
    while alive.sum() > 1:
        masked = np.where(alive[:, None] & alive[None, :], dist, np.inf)
        flat = int(np.argmin(masked))  # row-major, so ties resolve to the lowest (i, j)
        i, j = divmod(flat, masked.shape[1])
        if not masked[i, j] <= sim_tol:
            break
        i, j = min(i, j), max(i, j)
        win, lose = (i, j) if probs[i] >= probs[j] else (j, i)
        probs[win] += probs[lose]
        alive[lose] = False
    idx = np.flatnonzero(alive)
    total = probs[idx].sum()
    out = [
        Scenario(values=keep[n].values.copy(), prob=float(probs[n] / total),
                 levels=None if keep[n].levels is None else keep[n].levels.copy())
        for n in idx
    ]
    return ScenarioSet(targets=list(sset.targets), scale=sset.scale.copy(), scenarios=out, seed=sset.seed)


def specs_from_instance(inst: Instance) -> list[UncertainSpec]:
    """Uncertain second-stage parameters centred on the current first-stage values."""
    u = inst.uncertainty
    out = []
    for s in inst.suppliers:
        out.append(UncertainSpec("price", (s.part_id, s.id), s.price, u.price_rel_sd * s.price))
    for s in inst.suppliers:
        out.append(UncertainSpec("capacity", (s.part_id, s.id), s.capacity, u.capacity_rel_sd * s.capacity))
    out.append(UncertainSpec("mfg_cost", (), inst.em.base_mfg_cost, u.mfg_cost_rel_sd * inst.em.base_mfg_cost))
    for c in inst.customers:
        out.append(UncertainSpec("extra_demand", (c.id,), u.extra_demand_ex, u.extra_demand_sd))
    return out


def scenario_set_for(inst: Instance, n: int, seed: int, reduce: bool = False,
                     sim_tol: float = 0.05, min_prob: float = 0.001) -> ScenarioSet:
    sset = generate_scenarios(specs_from_instance(inst), n, seed)
    if reduce:
        sset = reduce_scenarios(sset, sim_tol=sim_tol, min_prob=min_prob)
    return sset


def expected_scenario_set(sset: ScenarioSet) -> ScenarioSet:
    """Single-scenario set holding the probability-weighted means."""
    mean = sset.mean_values()
    return ScenarioSet(targets=list(sset.targets), scale=sset.scale.copy(),
                       scenarios=[Scenario(values=mean, prob=1.0)], seed=sset.seed)
