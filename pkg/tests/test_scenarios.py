import numpy as np
import pytest
from scipy.stats import norm

from evtolplan.errors import AllScenariosReduced
from evtolplan.scenarios import (
    Scenario, ScenarioSet, UncertainSpec, discretize_levels, expected_scenario_set, generate_scenarios,
    reduce_scenarios, roulette_draw, scenario_set_for, specs_from_instance,
)


def merge_oracle(sset, sim_tol, min_prob):
    """Plain double loop over pairs, one merge per sweep."""
    items = [[s.values / sset.scale, s.prob, n] for n, s in enumerate(sset.scenarios) if s.prob >= min_prob]
    while len(items) > 1:
        best = None
        for a in range(len(items)):
            for b in range(a + 1, len(items)):
                d = max(abs(x - y) for x, y in zip(items[a][0], items[b][0])) if len(items[a][0]) else 0.0
                if best is None or d < best[0]:
                    best = (d, a, b)
        d, a, b = best
        if d > sim_tol:
            break
        win, lose = (a, b) if items[a][1] >= items[b][1] else (b, a)
        items[win][1] += items[lose][1]
        del items[lose]
    total = sum(it[1] for it in items)
    return [(it[2], it[1] / total) for it in items]


def test_level_probabilities():
    t = discretize_levels()
    assert list(t.levels) == [-3, -2, -1, 0, 1, 2, 3]
    assert t.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert t.probs[3] == pytest.approx(norm.cdf(0.5) - norm.cdf(-0.5), rel=1e-9)
    assert t.probs[0] == pytest.approx(norm.sf(2.5), rel=1e-9)
    assert np.allclose(t.probs, t.probs[::-1])
    assert t.cumulative[-1] == 1.0


def test_roulette_edges():
    t = discretize_levels()
    assert roulette_draw(t, 0.0) == -3
    assert roulette_draw(t, 0.5) == 0
    assert roulette_draw(t, 1 - 1e-12) == 3
    with pytest.raises(ValueError):
        roulette_draw(t, 1.0)


def test_generation_deterministic(desk):
    a = scenario_set_for(desk, 20, seed=7)
    b = scenario_set_for(desk, 20, seed=7)
    c = scenario_set_for(desk, 20, seed=8)
    assert a.to_dict() == b.to_dict()
    assert a.to_dict() != c.to_dict()
    assert a.probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_streams_are_per_parameter():
    specs = [UncertainSpec("capacity", ("p", "s1"), 10.0, 1.0), UncertainSpec("capacity", ("p", "s2"), 5.0, 2.0)]
    full = generate_scenarios(specs, 15, 3)
    solo = generate_scenarios(specs[1:], 15, 3)
    assert np.array_equal(np.array([s.values[1] for s in full.scenarios]),
                          np.array([s.values[0] for s in solo.scenarios]))


def test_realisation_rules():
    specs = [UncertainSpec("extra_demand", ("c",), 0.0, 0.5), UncertainSpec("price", ("p", "s"), 1.0, 1.0)]
    sset = generate_scenarios(specs, 200, 0)
    vals = np.array([s.values for s in sset.scenarios])
    assert np.all(vals >= 0)
    assert np.all(vals[:, 0] == np.floor(vals[:, 0]))
    lev = np.array([s.levels for s in sset.scenarios])
    expected = np.maximum(0.0, np.floor(0.0 + 0.5 * lev[:, 0] + 0.5))
    assert np.array_equal(vals[:, 0], expected)


def test_zero_sd_collapses():
    sset = generate_scenarios([UncertainSpec("mfg_cost", (), 100.0, 0.0)], 5, 1)
    assert all(s.values[0] == 100.0 for s in sset.scenarios)
    red = reduce_scenarios(sset, sim_tol=0.0, min_prob=0.0)
    assert len(red) == 1 and red.scenarios[0].prob == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("tol", [0.02, 0.1, 0.3])
def test_reduction_matches_oracle(desk, seed, tol):
    sset = scenario_set_for(desk, 30, seed)
    got = reduce_scenarios(sset, sim_tol=tol, min_prob=0.001)
    want = merge_oracle(sset, tol, 0.001)
    kept = [n for n, s in enumerate(sset.scenarios) if s.prob >= 0.001]
    got_idx = []
    for s in got.scenarios:
        got_idx.append(next(n for n in kept if np.array_equal(sset.scenarios[n].values, s.values)))
    assert got_idx == [n for n, _ in want]
    assert np.allclose(got.probs, [p for _, p in want], rtol=0, atol=1e-12)
    assert abs(got.probs.sum() - 1.0) <= 1e-9


def test_reduction_drops_improbable():
    specs = [UncertainSpec("capacity", ("p", "s"), 10.0, 1.0)]
    sset = ScenarioSet([specs[0].target], np.array([10.0]),
                       [Scenario(np.array([10.0]), 0.9995), Scenario(np.array([13.0]), 0.0005)])
    red = reduce_scenarios(sset, sim_tol=0.0, min_prob=0.001)
    assert len(red) == 1 and red.scenarios[0].prob == 1.0
    with pytest.raises(AllScenariosReduced):
        reduce_scenarios(sset, min_prob=1.0)


def test_round_trip_and_expected_set(desk):
    sset = scenario_set_for(desk, 8, 2)
    assert ScenarioSet.from_dict(sset.to_dict()).to_dict() == sset.to_dict()
    ev = expected_scenario_set(sset)
    assert len(ev) == 1
    assert np.allclose(ev.scenarios[0].values, sset.probs @ np.array([s.values for s in sset.scenarios]))


def test_specs_cover_second_stage_parameters(desk):
    specs = specs_from_instance(desk)
    kinds = {s.kind for s in specs}
    assert kinds == {"price", "capacity", "mfg_cost", "extra_demand"}
    assert sum(s.kind == "extra_demand" for s in specs) == len(desk.customers)


def test_bad_specs():
    with pytest.raises(ValueError):
        UncertainSpec("weather", (), 1.0, 1.0)
    with pytest.raises(ValueError):
        UncertainSpec("price", (), 1.0, -1.0)
    with pytest.raises(ValueError):
        generate_scenarios([], 0, 0)
