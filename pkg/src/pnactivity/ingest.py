"""GPS parsing and the GIS selection pipeline, plus privacy-preserving rendering layers.

Distances and lengths here are in the coordinate unit of the data; convert
meter thresholds with :meth:`PNSpace.to_units` first.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .estimation import MarkedDay
from .geometry import Entity, PNSpace, distances_to_entity, point_segment_distance

log = logging.getLogger(__name__)

DAY_SECONDS = 86400.0


class DataValidationError(ValueError):
    """Input data that cannot be processed as given."""


@dataclass(frozen=True, eq=False)
class GpsDay:
    day: int
    t: np.ndarray
    xy: np.ndarray
    accuracy: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.t)

    def marked(self) -> MarkedDay:
        return MarkedDay.from_records(self.day, self.t, self.xy)


@dataclass(frozen=True)
class BoundingBox:
    xmin: float
    ymin: float
    xmax: float
    ymax: float
    weight: float = 0.0

    def contains(self, xy) -> np.ndarray:
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        return ((xy[:, 0] >= self.xmin) & (xy[:, 0] <= self.xmax)
                & (xy[:, 1] >= self.ymin) & (xy[:, 1] <= self.ymax))


def _seconds(raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        pass
    try:
        dt = datetime.fromisoformat(raw.strip().replace("Z", "+00:00"))
    except ValueError as exc:
        raise DataValidationError(f"unparseable timestamp {raw!r}") from exc
    midnight = dt.replace(hour=0, minute=0, second=0, microsecond=0)
    # keep the date so days spanning midnight are detected as t > 1
    return dt.toordinal() * DAY_SECONDS + (dt - midnight).total_seconds()


def parse_gps(source, day_length: float = DAY_SECONDS) -> list[GpsDay]:
    """Read a ``day,timestamp,x,y[,accuracy]`` CSV into per-day records.

    Timestamps are seconds (any origin) or ISO-8601 strings.  Each day is
    rescaled so its calendar start maps to 0 and its end to 1.  Repeated
    timestamps keep the first record; a day that is still not increasing,
    is empty, or overruns its end is dropped with a warning.
    """
    fh = open(source, newline="") if not hasattr(source, "read") else source
    try:
        reader = csv.DictReader(fh)
        cols = set(reader.fieldnames or ())
        missing = {"day", "timestamp", "x", "y"} - cols
        if missing:
            raise DataValidationError(f"GPS CSV missing columns: {sorted(missing)}")
        has_acc = "accuracy" in cols
        raw: "OrderedDict[int, list]" = OrderedDict()
        for row in reader:
            day = int(row["day"])
            acc = row.get("accuracy") if has_acc else None
            raw.setdefault(day, []).append((
                _seconds(row["timestamp"]), float(row["x"]), float(row["y"]),
                float(acc) if acc not in (None, "") else math.nan))
    finally:
        if fh is not source:
            fh.close()

    days = []
    for day in sorted(raw):
        rows = raw[day]
        seen = set()
        kept = []
        for r in rows:
            if r[0] in seen:
                continue
            seen.add(r[0])
            kept.append(r)
        if not kept:
            log.warning("day %s: no records, dropped", day)
            continue
        arr = np.array(kept, dtype=float)
        ts = arr[:, 0]
        if np.any(np.diff(ts) <= 0):
            log.warning("day %s: timestamps not increasing after de-duplication, dropped", day)
            continue
        start = math.floor(ts[0] / day_length) * day_length
        t = (ts - start) / day_length
        if t[-1] > 1.0:
            log.warning("day %s: records extend past the end of the day, dropped", day)
            continue
        acc = arr[:, 3] if has_acc else None
        days.append(GpsDay(day, t, arr[:, 1:3].copy(), acc))
    return days


def write_gps_csv(days: Iterable, path, day_length: float = DAY_SECONDS) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["day", "timestamp", "x", "y"])
        for d in days:
            for t, (x, y) in zip(d.t, d.xy):
                w.writerow([d.day, repr(float(t * day_length)), repr(float(x)), repr(float(y))])


def _weights(xy, weights):
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    w = np.ones(len(xy)) if weights is None else np.asarray(weights, dtype=float)
    if len(w) != len(xy):
        raise ValueError("weights and points differ in length")
    return xy, w


def bounding_box_search(xy, weights=None, theta: float = 0.05, r: float = 0.001) -> BoundingBox:
    """The theta-by-theta box holding the most weight over an r-lattice of corners.

    Lower-left corners are ``(xmin + i r, ymin + j r)`` with the lattice
    anchored on the data's minimum corner; boxes are closed.  Equal weights go
    to the smallest x corner, then the smallest y corner.
    """
    if theta <= 0 or r <= 0:
        raise ValueError("theta and r must be positive")
    xy, w = _weights(xy, weights)
    if len(xy) == 0:
        raise ValueError("no records")
    x0, y0 = xy.min(axis=0)
    x1, y1 = xy.max(axis=0)
    nx = int(math.floor((x1 - x0) / r)) + 1
    ny = int(math.floor((y1 - y0) / r)) + 1
    cy = y0 + np.arange(ny) * r
    best = (-math.inf, 0, 0)
    for i in range(nx):
        cx = x0 + i * r
        inx = (xy[:, 0] >= cx) & (xy[:, 0] <= cx + theta)
        if not inx.any():
            continue
        ys = xy[inx, 1]
        order = np.argsort(ys, kind="stable")
        ys = ys[order]
        cum = np.concatenate([[0.0], np.cumsum(w[inx][order])])
        hi = np.searchsorted(ys, cy + theta, side="right")
        lo = np.searchsorted(ys, cy, side="left")
        tot = cum[hi] - cum[lo]
        j = int(np.argmax(tot))
        if tot[j] > best[0]:
            best = (float(tot[j]), i, j)
    bx, by = x0 + best[1] * r, y0 + best[2] * r
    return BoundingBox(bx, by, bx + theta, by + theta, best[0])


def road_coverage(xy, network: Sequence[Entity], d0: float) -> float:
    """Share of records within ``d0`` of their nearest road segment."""
    if d0 <= 0:
        raise ValueError("d0 must be positive")
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    if len(xy) == 0:
        raise ValueError("coverage of zero records is undefined")
    if not network:
        return 0.0
    res = PNSpace(tuple(network)).nearest(xy)
    return float(np.mean(res.distance <= d0))


def select_polygons(xy, polygons: Sequence[Entity], d0: float) -> list[Entity]:
    """Polygons that are the nearest polygon of at least one record within ``d0``."""
    if d0 <= 0:
        raise ValueError("d0 must be positive")
    if not polygons:
        return []
    pn = PNSpace(tuple(polygons))
    res = pn.nearest(np.atleast_2d(np.asarray(xy, dtype=float)))
    hit = np.unique(res.index[res.distance <= d0])
    return [pn.entities[k] for k in hit]


def aggregate_polygons(polygons: Sequence[Entity], cutoff: float) -> list[Entity]:
    """Merge polygons whose centroids chain together below ``cutoff`` (single linkage).

    Each cluster with more than one member becomes a multipolygon entity
    named after its smallest member id, with all member ids recorded.
    """
    if cutoff < 0:
        raise ValueError("cutoff must be nonnegative")
    polys = sorted(polygons, key=lambda e: e.id)
    n = len(polys)
    if n == 0:
        return []
    cents = np.array([p.centroid for p in polys])
    pairs = cKDTree(cents).query_pairs(cutoff, output_type="ndarray") if cutoff > 0 else np.zeros((0, 2), int)
    if len(pairs):
        d = np.hypot(*(cents[pairs[:, 0]] - cents[pairs[:, 1]]).T)
        pairs = pairs[d < cutoff]
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, comp = connected_components(graph, directed=False)
    groups: dict = {}
    for k, c in enumerate(comp):
        groups.setdefault(c, []).append(polys[k])
    out = []
    for members in groups.values():
        if len(members) == 1:
            out.append(members[0])
            continue
        rings = []
        for m in members:
            ext = [p for s, p in zip(m.signs, m.parts) if s > 0]
            holes = [p for s, p in zip(m.signs, m.parts) if s < 0]
            rings.append((ext[0], holes))
            rings.extend((e, []) for e in ext[1:])
        ids = tuple(m.id for m in members)
        out.append(Entity.multipolygon(ids[0], rings, sum(m.weight for m in members), ids))
    return sorted(out, key=lambda e: e.id)


# -- privacy-preserving rendering layers (never used by analysis paths) ----

def _min_distance_to_records(entity: Entity, xy: np.ndarray) -> float:
    if len(xy) == 0:
        return math.inf
    return float(distances_to_entity(xy, entity).min())


def privacy_thin_roads(network: Sequence[Entity], xy, r0: float, q: float,
                       seed: int) -> tuple[list[Entity], dict]:
    """Randomly hide a share ``q`` of segments with no record within ``r0``.

    Returns the displayed segments and ``{segment id: "kept" | "removed"}``.
    """
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    xy = np.atleast_2d(np.asarray(xy, dtype=float)).reshape(-1, 2)
    segs = sorted(network, key=lambda e: e.id)
    eligible = [k for k, s in enumerate(segs) if _min_distance_to_records(s, xy) > r0]
    rng = np.random.default_rng(seed)
    n_remove = int(round(q * len(eligible)))
    removed = set(rng.choice(eligible, size=n_remove, replace=False).tolist()) if n_remove else set()
    decisions = {s.id: ("removed" if k in removed else "kept") for k, s in enumerate(segs)}
    shown = [s for k, s in enumerate(segs) if k not in removed]
    return shown, decisions


def _overlaps(a: Entity, b: Entity, tol: float) -> bool:
    # samples: edge midpoints of ``a`` lying on ``b`` (shared endpoints alone do not count)
    sa, ea = a.edges
    mids = (sa + ea) / 2.0
    sb, eb = b.edges
    return bool((point_segment_distance(mids, sb, eb).min(axis=1) <= tol).any())


def apply_thinning(layer: Sequence[Entity], primary: Sequence[Entity], decisions: dict, xy,
                   r0: float, q: float, seed: int, tol: float = 1e-9) -> tuple[list[Entity], dict]:
    """Carry primary-layer keep/remove decisions over to another road layer.

    Overlap with a removed primary segment removes (this wins over overlap
    with a kept one); overlap with kept segments keeps; the rest is thinned
    like the primary layer with the same share ``q``.
    """
    prim = {p.id: p for p in primary}
    out_dec = {}
    rest = []
    for seg in sorted(layer, key=lambda e: e.id):
        hits = [decisions[pid] for pid, p in prim.items() if _overlaps(seg, p, tol)]
        if "removed" in hits:
            out_dec[seg.id] = "removed"
        elif hits:
            out_dec[seg.id] = "kept"
        else:
            rest.append(seg)
    _, rest_dec = privacy_thin_roads(rest, xy, r0, q, seed)
    out_dec.update(rest_dec)
    shown = [s for s in sorted(layer, key=lambda e: e.id) if out_dec[s.id] == "kept"]
    return shown, out_dec


def write_decisions_csv(decisions: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["segment_id", "decision"])
        for sid in sorted(decisions):
            w.writerow([sid, decisions[sid]])


def read_decisions_csv(path) -> dict:
    with open(path, newline="") as fh:
        return {row["segment_id"]: row["decision"] for row in csv.DictReader(fh)}


def privacy_reshape_polygons(polygons: Sequence[Entity], side: float) -> list[Entity]:
    """Replace every polygon by an axis-aligned square of ``side`` on its centroid."""
    if side <= 0:
        raise ValueError("side must be positive")
    h = side / 2.0
    out = []
    for p in polygons:
        cx, cy = p.centroid
        ring = np.array([[cx - h, cy - h], [cx + h, cy - h], [cx + h, cy + h], [cx - h, cy + h]])
        out.append(Entity.polygon(p.id, ring, weight=p.weight, members=p.members))
    return out
