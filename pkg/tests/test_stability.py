import numpy as np
import pytest

from pnactivity.estimation import MarkedDay, day_tables, estimate
from pnactivity.geometry import Entity, PNSpace
from pnactivity.simulator import Scenario, simulate_study
from pnactivity.stability import (cumulative_table, cumulative_tables, lct, lct_curve, stability_series,
                                  sym_diff_ratio, write_lct_csv, write_ratios_csv)


def test_sym_diff_ratio():
    assert sym_diff_ratio({"a", "b"}, {"a", "b"}) == 0
    assert sym_diff_ratio({"e1"}, {"e1", "e2"}) == 0.5
    assert sym_diff_ratio({"e3"}, {"e1", "e2"}) == 1.5
    assert sym_diff_ratio({"e3"}, set()) == 0


def test_lct_definition():
    assert lct([0, 0, 0], 0.1) == 0
    assert lct([0.5, 0.3, 0.0], 0.2) == 2
    assert lct([0.5, 0.1, 0.4, 0.0], 0.2) == 3
    assert lct([0.5, 0.1, 0.4, 0.0], float("inf")) == 0
    with pytest.raises(ValueError):
        lct([0.1], -1)


@pytest.fixture(scope="module")
def study():
    sc = Scenario.default(m=159)
    return sc, simulate_study(sc, 0, n=28)


def test_cumulative_table_identities(study):
    sc, st = study
    days = st.marked_days()
    full = estimate(days, sc.pn, "weighted")
    assert np.allclose(cumulative_table(days, len(days), sc.pn).proportions, full.proportions, atol=1e-15)
    one = estimate(days[:1], sc.pn, "weighted")
    assert np.array_equal(cumulative_table(days, 1, sc.pn).proportions, one.proportions)
    rows = day_tables(days, sc.pn)
    cum = cumulative_tables(rows)
    for D in (3, 11, 28):
        assert np.allclose(cum[D - 1], rows[:D].mean(axis=0), atol=1e-12)
    with pytest.raises(ValueError):
        cumulative_table(days, 0, sc.pn)


def test_series_invariants(study):
    sc, st = study
    levels = [0.3, 0.6, 0.9]
    curves = {}
    for cls in ("polygon", "segment"):
        res, series = lct_curve(st.marked_days(), sc.pn, cls, levels, 0.0)
        for s in series:
            assert s.ratios[-1] == 0 and np.all(s.ratios >= 0)
            xs = [0.0, 0.1, 0.3, 0.6, 1.0, 2.0]
            vals = [s.lct(x) for x in xs]
            assert all(a >= b for a, b in zip(vals, vals[1:]))
        curves[cls] = series


def test_order_invariant_final_space(study):
    sc, st = study
    rev = st.reorder(list(range(st.n))[::-1])
    cum_a = cumulative_tables(day_tables(st.marked_days(), sc.pn))
    cum_b = cumulative_tables(day_tables(rev.marked_days(), sc.pn))
    a = stability_series(cum_a, sc.pn, "polygon", 0.8)
    b = stability_series(cum_b, sc.pn, "polygon", 0.8)
    assert a.members[-1] == b.members[-1]


def test_identical_days_have_zero_lct():
    pn = PNSpace((Entity.polygon("H", [(0, 0), (1, 0), (1, 1), (0, 1)]), Entity.segment("r", [(1.2, 0), (3, 0)])))
    rng = np.random.default_rng(0)
    t = np.sort(rng.uniform(0, 1, 30))
    xy = np.where(rng.random((30, 1)) < 0.7, rng.uniform(0, 1, (30, 2)), rng.uniform([1.3, -0.05], [3, 0.05], (30, 2)))
    days = [MarkedDay.from_records(d, t, xy) for d in range(1, 15)]
    for cls in ("polygon", "segment"):
        res, _ = lct_curve(days, pn, cls, [0.2, 0.5, 0.9, 1.0], 0.0)
        assert all(v == 0 for v in res.values())


def test_csv_outputs(tmp_path, study):
    sc, st = study
    _, series = lct_curve(st.marked_days(), sc.pn, "polygon", [0.5, 0.9], 0.0)
    write_ratios_csv(tmp_path / "r.csv", series)
    write_lct_csv(tmp_path / "l.csv", series, [0.0, 0.2])
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "class,c,D,ratio"
    lines = (tmp_path / "l.csv").read_text().splitlines()
    assert lines[0] == "class,c,xi,lct" and len(lines) == 1 + 4
