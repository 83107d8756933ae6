import json

import numpy as np
import pytest

from pnactivity.estimation import MarkedDay, estimate
from pnactivity.geometry import distance_point_to_entity
from pnactivity.simulator import (HOURS, Interval, PatternSpec, Scenario, ScenarioError, Step, Leg, add_noise,
                                  build_schedule, default_scenario_dict, expected_occupation, gen_timestamps,
                                  ground_truth, make_reference_library, realize_position, sample_day_pattern,
                                  sample_durations, simulate_day, simulate_study, truncated_normal,
                                  write_truth_csv)


@pytest.fixture(scope="module")
def scenario():
    return Scenario.default()


def pattern(scenario, name):
    return next(p for p in scenario.patterns if p.name == name)


def test_single_pattern_always_chosen(scenario):
    p = pattern(scenario, "pattern5")
    only = PatternSpec("x", "any", 1.0, p.steps)
    rng = np.random.default_rng(0)
    assert all(sample_day_pattern("any", [only], rng).name == "x" for _ in range(20))


def test_weekday_frequency(scenario):
    rng = np.random.default_rng(1)
    n = 10_000
    hits = sum(sample_day_pattern("weekday", scenario.patterns, rng).name == "pattern1" for _ in range(n))
    p = 15 / 20
    assert abs(hits / n - p) <= 3 * np.sqrt(p * (1 - p) / n)


def test_mixture_probabilities(scenario):
    week = scenario.calendar
    share = {p.name: p.probability * week.count(p.day_type) / len(week) for p in scenario.patterns}
    assert share == pytest.approx({"pattern1": 15 / 28, "pattern2": 5 / 28, "pattern3": 4 / 28,
                                   "pattern4": 1 / 28, "pattern5": 3 / 28})


def test_invalid_scenarios():
    d = default_scenario_dict()
    d["patterns"][0]["probability"] = 0.5
    with pytest.raises(ScenarioError):
        Scenario.from_dict(d)
    d = default_scenario_dict()
    d["patterns"][0]["steps"][0]["legs"][0]["ids"] = ["nope"]
    with pytest.raises(ScenarioError):
        Scenario.from_dict(d)
    d = default_scenario_dict()
    d["patterns"][0]["steps"][0]["q"] = 20
    with pytest.raises(ScenarioError):
        Scenario.from_dict(d)


def test_scenario_json_round_trip(tmp_path, scenario):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(scenario.to_dict()))
    back = Scenario.load(path)
    assert back.pn.ids == scenario.pn.ids and [p.name for p in back.patterns] == [p.name for p in scenario.patterns]
    assert len(back.pn.polygons()) == 6 and len(back.pn.segments()) == 12


def test_degenerate_durations(scenario):
    p = pattern(scenario, "pattern3")
    exact = PatternSpec("x", "weekend", 1.0, tuple(Step(s.legs, s.mu, 0.0, s.q) if not s.final else s
                                                   for s in p.steps))
    z = sample_durations(exact, np.random.default_rng(0))
    mus = [s.mu for s in p.steps[:-1]]
    assert np.allclose(z[:-1] * HOURS, mus) and z[-1] == pytest.approx(1 - sum(mus) / HOURS)


def test_pattern5_is_all_home(scenario):
    p = pattern(scenario, "pattern5")
    z = sample_durations(p, np.random.default_rng(0))
    assert z.tolist() == [1.0]
    occ, visits = ground_truth(build_schedule(p, z, scenario.pn), scenario.pn)
    assert occ[scenario.pn.index_of("P1")] == 1.0 and occ.sum() == 1.0
    assert visits[scenario.pn.index_of("P1")] == 1 and visits.sum() == 1


def test_truncated_normal_window_and_mean():
    rng = np.random.default_rng(2)
    x = np.array([truncated_normal(9.0, 0.3, 0.5, rng) for _ in range(10_000)])
    assert np.all((x > 8.5) & (x < 9.5))
    assert abs(x.mean() - 9.0) <= 3 * x.std() / np.sqrt(len(x))


def test_durations_sum_to_one(scenario):
    rng = np.random.default_rng(3)
    for p in scenario.patterns:
        for _ in range(50):
            z = sample_durations(p, rng)
            assert abs(z.sum() - 1) <= 1e-12 and np.all(z >= 0)


def test_negative_remainder_resamples():
    from pnactivity.geometry import Entity, PNSpace

    pn = PNSpace((Entity.polygon("H", [(0, 0), (1, 0), (1, 1), (0, 1)]),))
    legs = (Leg("stay", ("H",)),)
    p = PatternSpec("x", "d", 1.0, (Step(legs, 12.0, 1.0, 0.9), Step(legs, 12.0, 1.0, 0.9), Step(legs)))
    from pnactivity.simulator import DurationStats

    stats = DurationStats()
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert sample_durations(p, rng, stats)[-1] >= 0
    assert stats.resampled > 0


def _travel_pn():
    from pnactivity.geometry import Entity, PNSpace

    return PNSpace((Entity.polygon("A", [(-1, -1), (0, -1), (0, 0), (-1, 0)]),
                    Entity.segment("s1", [(0, 0), (2, 0)]), Entity.segment("s2", [(2, 0), (2, 3)])))


def test_travel_split_by_length():
    pn = _travel_pn()
    p = PatternSpec("x", "d", 1.0, (Step((Leg("stay", ("A",)),), 10.0, 0.1, 1.0),
                                    Step((Leg("travel", ("s1", "s2")),), 0.5, 0.1, 0.2),
                                    Step((Leg("stay", ("A",)),))))
    z = np.array([10.0, 0.5, 13.5]) / HOURS
    occ, visits = ground_truth(build_schedule(p, z, pn), pn)
    assert occ[pn.index_of("s1")] * HOURS == pytest.approx(0.2)
    assert occ[pn.index_of("s2")] * HOURS == pytest.approx(0.3)
    assert abs(occ.sum() - 1) <= 1e-12
    assert visits[pn.index_of("A")] == 2


def test_realize_position():
    pn = _travel_pn()
    p = PatternSpec("x", "d", 1.0, (Step((Leg("stay", ("A",)),), 10.0, 0.1, 1.0),
                                    Step((Leg("travel", ("s1", "s2")),), 0.5, 0.1, 0.2),
                                    Step((Leg("stay", ("A",)),))))
    z = np.array([10.0, 0.5, 13.5]) / HOURS
    sched = build_schedule(p, z, pn)
    rng = np.random.default_rng(0)
    trav: Interval = sched[1]
    mid = (trav.start + trav.end) / 2
    xy, ids = realize_position(sched, [0.1, trav.start + 1e-12, mid, trav.end - 1e-12, 0.9], pn, rng)
    assert ids[0] == "A" and ids[-1] == "A"
    assert distance_point_to_entity(xy[0], pn["A"]) == 0.0
    assert np.allclose(xy[1], [0, 0], atol=1e-9) and np.allclose(xy[3], [2, 3], atol=1e-9)
    assert np.allclose(xy[2], [2, 0.5])  # half of the 5-unit route
    with pytest.raises(ValueError):
        realize_position(sched, [1.5], pn, rng)


def test_true_positions_lie_in_their_entities(scenario):
    day = simulate_day(scenario.replace(sigma=0.0), 1)
    for p, eid in zip(day.xy_true, day.true_ids):
        assert distance_point_to_entity(p, scenario.pn[eid]) <= 1e-9
    assert np.array_equal(day.xy, day.xy_true)


def test_timestamps():
    rng = np.random.default_rng(0)
    assert np.allclose(gen_timestamps("even", 3, rng), [0.25, 0.5, 0.75])
    lib = make_reference_library(5, 0)
    for ref in lib:
        for m in (50, len(ref), 1439):
            t = gen_timestamps("realistic", m, rng, ref)
            assert len(t) == m and np.all(np.diff(t) > 0) and t[0] >= 0 and t[-1] <= 1
    with pytest.raises(ValueError):
        gen_timestamps("realistic", 10, rng, np.array([]))
    with pytest.raises(ValueError):
        gen_timestamps("even", 1, rng)


def test_thinning_keeps_each_reference_point_equally():
    # subsampling M -> m keeps every reference point with probability m / M
    ref = np.linspace(0.01, 0.99, 40)
    rng = np.random.default_rng(1)
    counts = np.zeros(40)
    trials = 3000
    for _ in range(trials):
        t = gen_timestamps("realistic", 10, rng, ref)
        counts += np.isin(ref, t)
    p = 10 / 40
    se = np.sqrt(p * (1 - p) / trials)
    assert np.all(np.abs(counts / trials - p) <= 4.5 * se)


def test_noise():
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 1, (100, 2))
    assert np.array_equal(add_noise(pts, 0.0, rng), pts)
    n, sigma = 100_000, 0.1
    disp = add_noise(np.zeros((n, 2)), sigma, rng)
    cov = np.cov(disp.T)
    se = sigma**2 * np.sqrt(2 / n)
    assert abs(cov[0, 0] - sigma**2) <= 3 * se and abs(cov[1, 1] - sigma**2) <= 3 * se
    assert abs(cov[0, 1]) <= 3 * sigma**2 / np.sqrt(n)
    with pytest.raises(ValueError):
        add_noise(pts, -1, rng)


def test_study_invariants_and_determinism(scenario):
    a = simulate_study(scenario, 0, n=10)
    b = simulate_study(scenario, 0, n=10, workers=3)
    for x, y in zip(a.days, b.days):
        assert x.t.tobytes() == y.t.tobytes() and x.xy.tobytes() == y.xy.tobytes()
        assert abs(x.durations.sum() - 1) <= 1e-12 and abs(x.occupation.sum() - 1) <= 1e-12
    c = simulate_study(scenario, 1, n=10)
    assert a.days[0].xy.tobytes() != c.days[0].xy.tobytes()


def test_expected_occupation_matches_monte_carlo(scenario):
    st = simulate_study(scenario.replace(timestamps="even", m=10), 0, n=700)
    exp = st.expected_table()
    emp = st.true_table()
    sd = np.std([d.occupation for d in st.days], axis=0) / np.sqrt(st.n)
    assert np.all(np.abs(emp - exp) <= 4 * sd + 1e-12)
    cal = expected_occupation(scenario, ["weekday"] * 5 + ["weekend"] * 2)
    home = cal[scenario.pn.index_of("P1")]
    office = cal[scenario.pn.index_of("P3")]
    assert home > office > max(np.delete(cal, [scenario.pn.index_of("P1"), scenario.pn.index_of("P3")]))


def test_noise_free_weighted_estimate_converges(scenario):
    # without noise, every observation sits inside its true entity, so the
    # weighted estimate approaches the realised occupation as m grows
    sc = scenario.replace(sigma=0.0, timestamps="even")
    errs = []
    for m in (50, 400, 3000):
        st = simulate_study(sc.replace(m=m), 0, n=5)
        tab = estimate(st.marked_days(), sc.pn, "weighted")
        errs.append(np.abs(tab.proportions - st.true_table()).sum())
    assert errs[2] < errs[0] and errs[2] < 0.02


def test_truth_csv(tmp_path, scenario):
    st = simulate_study(scenario, 0, n=3)
    write_truth_csv(st, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "day,pattern,entity_id,occupation,visits,crossings"
    assert len(lines) == 1 + 3 * len(scenario.pn)


def test_marked_day_from_simulation(scenario):
    day = simulate_day(scenario, 2)
    md = day.marked()
    assert isinstance(md, MarkedDay) and abs(md.marks.sum() - 1) <= 1e-12
