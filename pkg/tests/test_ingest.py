import io

import numpy as np
import pytest

from pnactivity.geometry import Entity, distance_point_to_entity
from pnactivity.ingest import (DataValidationError, aggregate_polygons, apply_thinning, bounding_box_search,
                               parse_gps, privacy_reshape_polygons, privacy_thin_roads, read_decisions_csv,
                               road_coverage, select_polygons, write_decisions_csv, write_gps_csv)


def sq(eid, x, y, s=1.0):
    return Entity.polygon(eid, [(x, y), (x + s, y), (x + s, y + s), (x, y + s)])


def test_parse_iso_timestamps():
    src = io.StringIO("day,timestamp,x,y\n1,2024-03-01T00:00:00,0,0\n1,2024-03-01T12:00:00,1,1\n"
                      "1,2024-03-01T18:00:00,2,2\n")
    (day,) = parse_gps(src)
    assert np.allclose(day.t, [0, 0.5, 0.75])


def test_parse_seconds_duplicates_and_bad_days(caplog):
    src = io.StringIO("day,timestamp,x,y,accuracy\n"
                      "1,100,0,0,5\n1,100,9,9,5\n1,200,1,1,\n"
                      "2,500,0,0,1\n2,400,0,0,1\n"
                      "3,86000,0,0,1\n3,87000,0,0,1\n")
    days = parse_gps(src)
    assert [d.day for d in days] == [1]
    assert np.allclose(days[0].xy[0], [0, 0]) and len(days[0]) == 2
    assert np.isnan(days[0].accuracy[1])
    assert "dropped" in caplog.text


def test_parse_missing_columns():
    with pytest.raises(DataValidationError):
        parse_gps(io.StringIO("day,time,x,y\n1,0,0,0\n"))


def test_gps_csv_round_trip(tmp_path):
    src = io.StringIO("day,timestamp,x,y\n4,3600,0.5,0.25\n4,7200,1.5,0.75\n")
    days = parse_gps(src)
    write_gps_csv(days, tmp_path / "g.csv")
    back = parse_gps(tmp_path / "g.csv")
    assert np.array_equal(back[0].t, days[0].t) and np.array_equal(back[0].xy, days[0].xy)


def _exhaustive_box_weight(xy, w, theta, r):
    x0, y0 = xy.min(axis=0)
    x1, y1 = xy.max(axis=0)
    best = 0.0
    for i in range(int(np.floor((x1 - x0) / r)) + 1):
        for j in range(int(np.floor((y1 - y0) / r)) + 1):
            cx, cy = x0 + i * r, y0 + j * r
            inside = (xy[:, 0] >= cx) & (xy[:, 0] <= cx + theta) & (xy[:, 1] >= cy) & (xy[:, 1] <= cy + theta)
            best = max(best, w[inside].sum())
    return best


def test_bounding_box_beats_every_grid_box():
    rng = np.random.default_rng(0)
    for _ in range(5):
        xy = rng.uniform(0, 0.2, (60, 2))
        w = rng.uniform(0, 1, 60)
        box = bounding_box_search(xy, w, 0.05, 0.01)
        assert box.weight == pytest.approx(_exhaustive_box_weight(xy, w, 0.05, 0.01))
        assert box.weight == pytest.approx(w[box.contains(xy)].sum())


def test_bounding_box_cluster_cases():
    rng = np.random.default_rng(1)
    tight = 10 + rng.uniform(0, 0.01, (50, 2))
    box = bounding_box_search(tight, None, 0.05, 0.001)
    assert box.weight == 50
    two = np.vstack([rng.uniform(0, 0.01, (20, 2)), 1 + rng.uniform(0, 0.01, (20, 2))])
    box = bounding_box_search(two, None, 0.05, 0.001)
    assert box.weight == 20 and box.xmin < 0.5  # equal weights: smallest corner wins
    with pytest.raises(ValueError):
        bounding_box_search(two, None, 0.0, 0.001)


def test_road_coverage():
    roads = [Entity.segment("a", [(0, 0), (10, 0)])]
    on = np.column_stack([np.linspace(0, 10, 11), np.zeros(11)])
    assert road_coverage(on, roads, 0.5) == 1.0
    assert road_coverage(on, [], 0.5) == 0.0
    with pytest.raises(ValueError):
        road_coverage(np.zeros((0, 2)), roads, 0.5)
    rng = np.random.default_rng(2)
    pts = rng.uniform(-5, 15, (200, 2))
    more = roads + [Entity.segment("b", [(0, 5), (10, 5)])]
    assert road_coverage(pts, more, 1.0) >= road_coverage(pts, roads, 1.0)


def test_select_polygons_matches_brute_force():
    rng = np.random.default_rng(3)
    polys = [sq(i, *rng.uniform(0, 20, 2)) for i in range(15)]
    xy = rng.uniform(0, 21, (40, 2))
    got = {p.id for p in select_polygons(xy, polys, 1.0)}
    want = set()
    for p in xy:
        d = [(distance_point_to_entity(p, e), e.id) for e in polys]
        dist, eid = min(d)
        if dist <= 1.0:
            want.add(eid)
    assert got == want
    inside = select_polygons([(0.5, 0.5)], [sq("a", 0, 0), sq("far", 100, 100)], 1.0)
    assert [p.id for p in inside] == ["a"]


def test_aggregate_polygons():
    a, b = sq("A", 0, 0, 0.0001), sq("B", 0.0005, 0, 0.0001)
    assert [p.id for p in aggregate_polygons([a, b], 0.0)] == ["A", "B"]
    merged = aggregate_polygons([a, b], 0.001)
    assert len(merged) == 1 and merged[0].members == ("A", "B")
    chain = [sq("A", 0, 0, 1e-5), sq("B", 0.0008, 0, 1e-5), sq("C", 0.0016, 0, 1e-5)]
    out = aggregate_polygons(chain, 0.001)
    assert len(out) == 1 and set(out[0].members) == {"A", "B", "C"}


def test_aggregate_partitions_ids():
    rng = np.random.default_rng(4)
    polys = [sq(f"p{i:02d}", *rng.uniform(0, 10, 2), 0.2) for i in range(30)]
    out = aggregate_polygons(polys, 1.0)
    ids = [m for e in out for m in (e.members or (e.id,))]
    assert sorted(ids) == sorted(p.id for p in polys)


def test_thinning():
    segs = [Entity.segment(f"s{i}", [(i, 0), (i, 1)]) for i in range(10)]
    xy = np.array([[0, 0.5], [1, 0.5]])
    shown, dec = privacy_thin_roads(segs, xy, 0.1, 0.0, seed=1)
    assert len(shown) == 10
    shown, dec = privacy_thin_roads(segs, xy, 0.1, 0.5, seed=1)
    assert dec["s0"] == dec["s1"] == "kept"
    assert sum(v == "removed" for v in dec.values()) == 4  # half of the 8 eligible
    assert privacy_thin_roads(segs, xy, 0.1, 0.5, seed=1)[1] == dec
    near = np.array([[i, 0.5] for i in range(10)])
    assert len(privacy_thin_roads(segs, near, 0.1, 1.0, seed=1)[0]) == 10


def test_thinning_carries_over_layers(tmp_path):
    primary = [Entity.segment(f"s{i}", [(i, 0), (i, 1)]) for i in range(6)]
    _, dec = privacy_thin_roads(primary, np.array([[100, 100]]), 0.1, 0.5, seed=3)
    other = [Entity.segment(f"t{i}", [(i, 0.2), (i, 0.8)]) for i in range(6)]
    _, dec2 = apply_thinning(other, primary, dec, np.array([[100, 100]]), 0.1, 0.5, seed=4)
    for i in range(6):
        assert dec2[f"t{i}"] == dec[f"s{i}"]
    write_decisions_csv(dec, tmp_path / "d.csv")
    assert read_decisions_csv(tmp_path / "d.csv") == dec


def test_reshape_polygons():
    (out,) = privacy_reshape_polygons([sq("u", 0, 0)], 2.0)
    assert out.id == "u" and out.area == pytest.approx(4.0)
    assert np.allclose(out.centroid, [0.5, 0.5])
    rng = np.random.default_rng(5)
    for _ in range(20):
        ang = np.sort(rng.uniform(0, 2 * np.pi, 7))
        ring = np.column_stack([np.cos(ang), np.sin(ang)]) * rng.uniform(0.5, 2, (7, 1)) + rng.uniform(-5, 5, 2)
        p = Entity.polygon("r", ring, weight=3.0)
        (q,) = privacy_reshape_polygons([p], 0.3)
        assert np.allclose(q.centroid, p.centroid, atol=1e-9) and q.weight == 3.0
