import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnactivity.estimation import (MarkedDay, TimeUseTable, adjust_assignments, assign, compute_marks, estimate,
                                   normalize_by_class, table_from_mapping)
from pnactivity.geometry import Entity, PNSpace


@pytest.fixture
def home_road():
    home = Entity.polygon("P1", [(0, -0.5), (1, -0.5), (1, 0.5), (0, 0.5)])
    road = Entity.segment("S2", [(1.1, 0), (3, 0)])
    office = Entity.polygon("P2", [(3.1, -0.5), (4.1, -0.5), (4.1, 0.5), (3.1, 0.5)])
    return PNSpace((home, road, office))


def test_marks_two_points():
    assert np.allclose(compute_marks([0.25, 0.75]), [0.5, 0.5])


def test_marks_three_points():
    assert np.allclose(compute_marks([0.25, 0.5, 0.75]), [0.375, 0.25, 0.375])


@pytest.mark.parametrize("m", [2, 3, 10, 479])
def test_marks_even_spacing_closed_form(m):
    t = np.arange(1, m + 1) / (m + 1)
    w = compute_marks(t)
    assert np.allclose(w[1:-1], 1 / (m + 1))
    assert w[0] == pytest.approx(1.5 / (m + 1)) and w[-1] == pytest.approx(1.5 / (m + 1))
    assert abs(w.sum() - 1) <= 1e-12


def test_marks_edge_cases():
    assert np.array_equal(compute_marks([0.3]), [1.0])
    with pytest.raises(ValueError):
        compute_marks([])
    with pytest.raises(ValueError):
        compute_marks([0.5, 0.5])
    with pytest.raises(ValueError):
        compute_marks([0.2, 1.2])


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=2, max_size=60, unique=True))
def test_marks_positive_and_normalized(ts):
    t = np.sort(np.array(ts))
    if np.any(np.diff(t) <= 0):
        return
    w = compute_marks(t)
    assert abs(w.sum() - 1) <= 1e-12
    assert np.all(w >= 0)


def test_estimators_worked_example():
    pn = PNSpace((Entity.segment("e1", [(0, 0), (1, 0)]), Entity.segment("e2", [(0, 5), (1, 5)])))
    day = MarkedDay.from_records(1, [0.25, 0.5, 0.75], [(0.5, 0), (0.5, 0.1), (0.5, 5)])
    w = estimate([day], pn, "weighted")
    nv = estimate([day], pn, "naive")
    assert w["e1"] == pytest.approx(0.625) and w["e2"] == pytest.approx(0.375)
    assert nv["e1"] == pytest.approx(2 / 3) and nv["e2"] == pytest.approx(1 / 3)


def test_single_entity_gets_everything(home_road):
    day = MarkedDay.from_records(1, [0.1, 0.4, 0.9], [(0.5, 0), (0.2, 0.1), (0.7, -0.3)])
    for mode in ("naive", "weighted", "adjusted"):
        tab = estimate([day], home_road, mode)
        assert tab["P1"] == pytest.approx(1.0)


def test_one_entity_space_assigns_all():
    pn = PNSpace((Entity.segment("s", [(0, 0), (1, 0)]),))
    day = assign(MarkedDay.from_records(1, [0.2, 0.8], [(9, 9), (-3, 2)]), pn)
    assert day.entity_ids(pn) == ["s", "s"]


def test_adjustment_overrides_within_threshold(home_road):
    # middle fix sits on the road 0.12 from home: relabelled for eps 0.15, kept for eps 0.1
    day = assign(MarkedDay.from_records(1, [0.2, 0.5, 0.8], [(0.5, 0), (1.12, 0.0), (0.6, 0.1)]), home_road)
    assert day.entity_ids(home_road) == ["P1", "S2", "P1"]
    assert adjust_assignments(day, home_road, 0.15).entity_ids(home_road) == ["P1", "P1", "P1"]
    assert adjust_assignments(day, home_road, 0.1).entity_ids(home_road) == ["P1", "S2", "P1"]


def test_adjustment_requires_opposite_kinds():
    a = Entity.polygon("A", [(0, 0), (1, 0), (1, 1), (0, 1)])
    b = Entity.polygon("B", [(1.05, 0), (2, 0), (2, 1), (1.05, 1)])
    pn = PNSpace((a, b))
    day = assign(MarkedDay.from_records(1, [0.2, 0.5, 0.8], [(0.5, 0.5), (1.5, 0.5), (0.5, 0.5)]), pn)
    assert adjust_assignments(day, pn, 10.0).entity_ids(pn) == ["A", "B", "A"]


def test_adjustment_endpoints_untouched(home_road):
    day = assign(MarkedDay.from_records(1, [0.2, 0.5], [(1.12, 0), (0.5, 0)]), home_road)
    assert adjust_assignments(day, home_road, 1.0).entity_ids(home_road) == ["S2", "P1"]
    with pytest.raises(ValueError):
        adjust_assignments(day, home_road, -1)


def _reference_adjust(labels, is_poly, dist, eps):
    lab = list(labels)
    for j in range(1, len(lab) - 1):
        e = lab[j - 1]
        if e == lab[j + 1] and is_poly[e] != is_poly[lab[j]] and dist(j, e) < eps:
            lab[j] = e
    return lab


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.5))
def test_adjustment_matches_sequential_rule_and_is_idempotent(seed, eps):
    rng = np.random.default_rng(seed)
    ents = (Entity.polygon("P1", [(0, -0.5), (1, -0.5), (1, 0.5), (0, 0.5)]),
            Entity.segment("S1", [(1.1, 0), (3, 0)]), Entity.segment("S2", [(1.1, 0.2), (1.1, 2)]))
    pn = PNSpace(ents)
    m = int(rng.integers(3, 40))
    xy = rng.uniform([0.6, -0.3], [1.6, 0.6], (m, 2))
    day = assign(MarkedDay.from_records(1, np.arange(1, m + 1) / (m + 1), xy), pn)
    from pnactivity.geometry import distances_to_entity

    def dist(j, e):
        return distances_to_entity(xy[j:j + 1], pn.entities[e])[0]

    once = adjust_assignments(day, pn, eps)
    assert once.labels.tolist() == _reference_adjust(day.labels.tolist(), pn.is_polygon, dist, eps)
    twice = adjust_assignments(once, pn, eps)
    assert np.array_equal(once.labels, twice.labels)


def test_normalize_by_class_example():
    tab = table_from_mapping({"a1": 0.6, "a2": 0.2, "l1": 0.2}, {"l1": "segment"})
    cls = normalize_by_class(tab)
    assert cls.polygons == pytest.approx({"a1": 0.75, "a2": 0.25})
    assert cls.roads == pytest.approx({"l1": 1.0})
    only = normalize_by_class(table_from_mapping({"a1": 1.0}))
    assert only.road_empty and not only.polygon_empty


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=12))
def test_normalized_sides_sum_to_one(vals):
    v = np.array(vals)
    if v.sum() == 0:
        return
    v = v / v.sum()
    kinds = {f"e{i}": ("segment" if i % 2 else "polygon") for i in range(len(v))}
    cls = normalize_by_class(table_from_mapping({f"e{i}": x for i, x in enumerate(v)}, kinds))
    for side, empty in ((cls.polygons, cls.polygon_empty), (cls.roads, cls.road_empty)):
        if not empty:
            assert abs(sum(side.values()) - 1) <= 1e-12


def test_tables_sum_to_one_and_serialize(tmp_path, home_road):
    rng = np.random.default_rng(3)
    days = []
    for d in range(5):
        m = int(rng.integers(5, 40))
        days.append(MarkedDay.from_records(d, np.sort(rng.uniform(0, 1, m)), rng.uniform(-1, 5, (m, 2))))
    for mode in ("naive", "weighted", "adjusted"):
        tab = estimate(days, home_road, mode)
        assert abs(tab.proportions.sum() - 1) <= 1e-9
        assert abs(tab.polygon_total + tab.road_total - 1) <= 1e-9
    tab.to_csv(tmp_path / "t.csv")
    back = TimeUseTable.from_json(tab.to_json())
    assert np.array_equal(back.proportions, tab.proportions) and back.ids == tab.ids
    head = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert head == "entity_id,kind,proportion,normalized_proportion"


def test_even_spacing_naive_weighted_gap(home_road):
    # per day, the naive and weighted tables differ only through the end marks
    rng = np.random.default_rng(4)
    for m in (5, 30, 200):
        t = np.arange(1, m + 1) / (m + 1)
        day = MarkedDay.from_records(1, t, rng.uniform(-1, 5, (m, 2)))
        a = estimate([day], home_road, "naive").proportions
        b = estimate([day], home_road, "weighted").proportions
        assert 0.5 * np.abs(a - b).sum() <= 3 / (m + 1)


def test_worker_count_does_not_change_bits(home_road):
    rng = np.random.default_rng(6)
    days = [MarkedDay.from_records(d, np.sort(rng.uniform(0, 1, 50)), rng.uniform(-1, 5, (50, 2)))
            for d in range(12)]
    a = estimate(days, home_road, "adjusted", workers=1).proportions
    b = estimate(list(reversed(days)), home_road, "adjusted", workers=4).proportions
    assert a.tobytes() == b.tobytes()
