"""Dwell-time marks, nearest-entity assignment and time-use estimators."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .geometry import POLYGON, SEGMENT, PNSpace, distances_to_entity

MODES = ("naive", "weighted", "adjusted")
DEFAULT_THRESHOLD = 0.1


def compute_marks(t) -> np.ndarray:
    """Half-gap dwell marks for one day of rescaled timestamps.

    Interior observations get half the time to their neighbours; the first
    absorbs the stretch from 0 and the last the stretch to 1, so the marks
    always sum to one.  A single observation carries the whole day.
    """
    t = np.asarray(t, dtype=float)
    m = t.size
    if m == 0:
        raise ValueError("cannot mark an empty day")
    if np.any(t < 0) or np.any(t > 1):
        raise ValueError("timestamps must lie in [0, 1]")
    if m == 1:
        return np.ones(1)
    if np.any(np.diff(t) <= 0):
        raise ValueError("timestamps must be strictly increasing")
    w = np.empty(m)
    w[1:-1] = (t[2:] - t[:-2]) / 2.0
    w[0] = (t[0] + t[1]) / 2.0
    w[-1] = 1.0 - (t[-2] + t[-1]) / 2.0
    return w


@dataclass(frozen=True, eq=False)
class MarkedDay:
    """One day of observations with marks and (optionally) entity labels.

    ``labels`` index into the entities of the PN space used for assignment.
    """

    day: int
    t: np.ndarray
    xy: np.ndarray
    marks: np.ndarray
    labels: np.ndarray | None = None
    distance: np.ndarray | None = None
    margin: np.ndarray | None = None

    @classmethod
    def from_records(cls, day: int, t, xy) -> "MarkedDay":
        t = np.asarray(t, dtype=float)
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        if len(t) != len(xy):
            raise ValueError("t and xy lengths differ")
        return cls(day, t, xy, compute_marks(t))

    def __len__(self) -> int:
        return len(self.t)

    def entity_ids(self, pn: PNSpace) -> list:
        ids = pn.ids
        return [ids[k] for k in self.labels]


def assign(day: MarkedDay, pn: PNSpace) -> MarkedDay:
    """Label every observation with its nearest entity and record its margin."""
    res = pn.nearest(day.xy)
    return replace(day, labels=res.index.astype(np.int64), distance=res.distance, margin=res.margin)


def adjust_assignments(day: MarkedDay, pn: PNSpace, threshold: float = DEFAULT_THRESHOLD) -> MarkedDay:
    """Override isolated cross-kind labels flanked by one entity.

    A road label between two observations of the same polygon (or a polygon
    label between two of the same segment) is replaced by the flanking entity
    when the point lies closer than ``threshold`` to it.  One left-to-right
    pass; labels are updated in place so later triples see earlier fixes.
    The first and last observations are never changed.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    if day.labels is None:
        raise ValueError("day has no entity assignments")
    lab = day.labels.copy()
    if len(lab) < 3:
        return replace(day, labels=lab)
    poly = pn.is_polygon
    left, mid, right = lab[:-2], lab[1:-1], lab[2:]
    cand = np.flatnonzero((left == right) & (poly[left] != poly[mid])) + 1
    # a position that fails here can never pass after an earlier override:
    # an override at j-1 copies label j into j-1, so triple j has left == centre
    for j in cand:
        e = lab[j - 1]
        if e != lab[j + 1] or poly[e] == poly[lab[j]]:
            continue
        if distances_to_entity(day.xy[j:j + 1], pn.entities[e])[0] < threshold:
            lab[j] = e
    return replace(day, labels=lab)


def day_proportions(day: MarkedDay, n_entities: int, mode: str = "weighted") -> np.ndarray:
    """Per-entity share of one day under the naive or mark-weighted rule."""
    if day.labels is None:
        raise ValueError("day has no entity assignments")
    if mode == "naive":
        w = np.full(len(day), 1.0 / len(day))
    else:
        w = day.marks
    return np.bincount(day.labels, weights=w, minlength=n_entities)


@dataclass(frozen=True, eq=False)
class TimeUseTable:
    """Mean share of time per entity; ``proportions`` follows ``ids`` order."""

    ids: tuple
    kinds: tuple
    proportions: np.ndarray
    n_days: int = 0

    @classmethod
    def from_pn(cls, pn: PNSpace, proportions, n_days: int = 0) -> "TimeUseTable":
        return cls(tuple(pn.ids), tuple(pn.kinds.tolist()), np.asarray(proportions, dtype=float), n_days)

    def as_dict(self) -> dict:
        return dict(zip(self.ids, self.proportions.tolist()))

    def __getitem__(self, entity_id) -> float:
        return float(self.proportions[self.ids.index(entity_id)])

    def _mask(self, kind: str) -> np.ndarray:
        return np.array([k == kind for k in self.kinds], dtype=bool)

    @property
    def polygon_total(self) -> float:
        return float(self.proportions[self._mask(POLYGON)].sum())

    @property
    def road_total(self) -> float:
        return float(self.proportions[self._mask(SEGMENT)].sum())

    def to_rows(self) -> list[dict]:
        classes = normalize_by_class(self)
        rows = []
        for eid, kind, p in zip(self.ids, self.kinds, self.proportions.tolist()):
            side = classes.polygons if kind == POLYGON else classes.roads
            rows.append({"entity_id": eid, "kind": kind, "proportion": p,
                         "normalized_proportion": side.get(eid, 0.0)})
        return rows

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, ["entity_id", "kind", "proportion", "normalized_proportion"])
            w.writeheader()
            for row in self.to_rows():
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})

    def to_json(self) -> dict:
        return {"n_days": self.n_days, "polygon_total": self.polygon_total,
                "road_total": self.road_total, "entities": self.to_rows()}

    @classmethod
    def from_json(cls, obj) -> "TimeUseTable":
        if not isinstance(obj, dict):
            with open(obj) as fh:
                obj = json.load(fh)
        rows = obj["entities"]
        return cls(tuple(r["entity_id"] for r in rows), tuple(r["kind"] for r in rows),
                   np.array([r["proportion"] for r in rows], dtype=float), int(obj.get("n_days", 0)))


@dataclass(frozen=True)
class ClassTables:
    """Polygon-only and road-only shares, each rescaled to sum to one."""

    polygons: dict
    roads: dict
    polygon_empty: bool
    road_empty: bool


def normalize_by_class(table: TimeUseTable) -> ClassTables:
    out = {}
    for kind in (POLYGON, SEGMENT):
        mask = table._mask(kind)
        total = float(table.proportions[mask].sum())
        ids = [i for i, m in zip(table.ids, mask) if m]
        if total > 0:
            vals = table.proportions[mask] / total
            out[kind] = (dict(zip(ids, vals.tolist())), False)
        else:
            out[kind] = ({}, True)
    return ClassTables(out[POLYGON][0], out[SEGMENT][0], out[POLYGON][1], out[SEGMENT][1])


def prepare_day(day: MarkedDay, pn: PNSpace, mode: str = "weighted",
                threshold: float = DEFAULT_THRESHOLD) -> MarkedDay:
    """Assign (if needed) and, for the adjusted mode, fix borderline labels."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if day.labels is None:
        day = assign(day, pn)
    if mode == "adjusted":
        day = adjust_assignments(day, pn, threshold)
    return day


def day_tables(days: Sequence[MarkedDay], pn: PNSpace, mode: str = "weighted",
               threshold: float = DEFAULT_THRESHOLD, workers: int | None = None) -> np.ndarray:
    """Per-day proportion arrays, shape ``(n_days, n_entities)``, sorted by day."""
    days = sorted(days, key=lambda d: d.day)

    def one(day):
        return day_proportions(prepare_day(day, pn, mode, threshold), len(pn), mode)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = list(ex.map(one, days))
    else:
        rows = [one(d) for d in days]
    return np.vstack(rows) if rows else np.zeros((0, len(pn)))


def estimate(days: Sequence[MarkedDay], pn: PNSpace, mode: str = "weighted",
             threshold: float = DEFAULT_THRESHOLD, workers: int | None = None) -> TimeUseTable:
    """Mean per-day time share of every entity.

    ``naive`` weights each observation 1/m; ``weighted`` uses the dwell marks;
    ``adjusted`` uses the marks after :func:`adjust_assignments`.
    """
    if not days:
        raise ValueError("need at least one day")
    per_day = day_tables(days, pn, mode, threshold, workers)
    # fixed summation order keeps results bit-stable across worker counts
    total = np.zeros(len(pn))
    for row in per_day:
        total += row
    return TimeUseTable.from_pn(pn, total / len(per_day), len(per_day))


def table_from_mapping(values: Mapping, kinds: Mapping | None = None) -> TimeUseTable:
    """Build a table from ``{id: proportion}``; kinds default to polygon."""
    ids = tuple(sorted(values))
    kinds = kinds or {}
    return TimeUseTable(ids, tuple(kinds.get(i, POLYGON) for i in ids),
                        np.array([values[i] for i in ids], dtype=float))


def mark_days(records: Iterable[tuple[int, np.ndarray, np.ndarray]]) -> list[MarkedDay]:
    return [MarkedDay.from_records(d, t, xy) for d, t, xy in records]
