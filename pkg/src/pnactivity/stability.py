"""Cumulative activity spaces and last-crossing times."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .activity_space import level_space
from .estimation import DEFAULT_THRESHOLD, MarkedDay, TimeUseTable, day_tables, normalize_by_class
from .geometry import POLYGON, SEGMENT, PNSpace

CLASSES = (POLYGON, SEGMENT)


def cumulative_tables(per_day: np.ndarray) -> np.ndarray:
    """Row D-1 holds the mean of the first D per-day tables."""
    per_day = np.asarray(per_day, dtype=float)
    out = np.empty_like(per_day)
    total = np.zeros(per_day.shape[1])
    for d, row in enumerate(per_day):
        total = total + row
        out[d] = total / (d + 1)
    return out


def cumulative_table(days: Sequence[MarkedDay], D: int, pn: PNSpace, mode: str = "weighted",
                     threshold: float = DEFAULT_THRESHOLD) -> TimeUseTable:
    """Time-use table from the first ``D`` days (in day order)."""
    days = sorted(days, key=lambda d: d.day)
    if not 1 <= D <= len(days):
        raise ValueError(f"D must lie in [1, {len(days)}]")
    rows = day_tables(days[:D], pn, mode, threshold)
    return TimeUseTable.from_pn(pn, cumulative_tables(rows)[-1], D)


def sym_diff_ratio(S, S_final) -> float:
    """|S symmetric-difference S_final| / |S_final|, and 0 for an empty final set."""
    S, S_final = set(S), set(S_final)
    if not S_final:
        return 0.0
    return len(S ^ S_final) / len(S_final)


def lct(ratios: Sequence[float], xi: float) -> int:
    """Largest 1-based D with ratio above ``xi``; 0 when there is none."""
    if xi < 0:
        raise ValueError("xi must be nonnegative")
    above = np.flatnonzero(np.asarray(ratios, dtype=float) > xi)
    return int(above[-1] + 1) if above.size else 0


@dataclass(frozen=True)
class StabilitySeries:
    cls: str
    c: float
    members: tuple  # members[D-1] is AS_c(D)
    ratios: np.ndarray

    def lct(self, xi: float) -> int:
        return lct(self.ratios, xi)


def _class_table(row: np.ndarray, pn: PNSpace, cls: str) -> dict:
    tab = normalize_by_class(TimeUseTable.from_pn(pn, row))
    return tab.polygons if cls == POLYGON else tab.roads


def stability_series(cum: np.ndarray, pn: PNSpace, cls: str, c: float) -> StabilitySeries:
    """Activity-space series over cumulative tables, one row per day count."""
    if cls not in CLASSES:
        raise ValueError(f"class must be one of {CLASSES}")
    members = []
    for row in cum:
        tab = _class_table(row, pn, cls)
        members.append(level_space(tab, c, cls).members if tab else ())
    final = members[-1]
    ratios = np.array([sym_diff_ratio(s, final) for s in members])
    return StabilitySeries(cls, c, tuple(members), ratios)


def lct_curve(days: Sequence[MarkedDay], pn: PNSpace, cls: str, levels: Sequence[float], xi: float,
              mode: str = "weighted", threshold: float = DEFAULT_THRESHOLD,
              workers: int | None = None) -> tuple[dict, list[StabilitySeries]]:
    """LCT at each coverage level; also returns the underlying series."""
    cum = cumulative_tables(day_tables(days, pn, mode, threshold, workers))

    def one(c):
        return stability_series(cum, pn, cls, c)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            series = list(ex.map(one, levels))
    else:
        series = [one(c) for c in levels]
    return {s.c: s.lct(xi) for s in series}, series


def write_ratios_csv(path, series: Sequence[StabilitySeries]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class", "c", "D", "ratio"])
        for s in series:
            for d, r in enumerate(s.ratios, start=1):
                w.writerow([s.cls, repr(float(s.c)), d, repr(float(r))])


def write_lct_csv(path, series: Sequence[StabilitySeries], xis: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class", "c", "xi", "lct"])
        for s in series:
            for xi in xis:
                w.writerow([s.cls, repr(float(s.c)), repr(float(xi)), s.lct(xi)])
