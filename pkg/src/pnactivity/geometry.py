"""Planar geometry, the polygon-network space and nearest-entity queries.

All distances are planar Euclidean in the coordinate unit of the input.  Inputs
given in degrees carry a declared ``meters_per_unit`` so thresholds written in
meters can be converted with :meth:`PNSpace.to_units`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

POLYGON = "polygon"
SEGMENT = "segment"

# Candidate pruning works on chunks of points so the (points x entities)
# bounding-box matrix stays small for large GIS layers.
_CHUNK = 4096


class GeometryError(ValueError):
    """Raised for invalid entity geometry or an invalid PN space."""


@dataclass(frozen=True, eq=False)
class Entity:
    """A polygon (one exterior ring plus optional holes) or a polyline."""

    id: object
    kind: str
    parts: tuple[np.ndarray, ...]
    weight: float = 1.0
    members: tuple = ()
    # +1 for an exterior ring, -1 for a hole; defaults to one exterior then holes
    signs: tuple = ()

    def __post_init__(self):
        if self.kind not in (POLYGON, SEGMENT):
            raise GeometryError(f"entity {self.id!r}: unknown kind {self.kind!r}")
        parts = tuple(np.asarray(p, dtype=float).reshape(-1, 2) for p in self.parts)
        if not parts:
            raise GeometryError(f"entity {self.id!r}: no geometry")
        for p in parts:
            if not np.all(np.isfinite(p)):
                raise GeometryError(f"entity {self.id!r}: non-finite coordinate")
        if self.kind == POLYGON:
            parts = tuple(_open_ring(p) for p in parts)
            for p in parts:
                if len(p) < 3 or abs(ring_area(p)) <= 0.0:
                    raise GeometryError(f"entity {self.id!r}: degenerate ring")
        else:
            if len(parts) != 1:
                raise GeometryError(f"entity {self.id!r}: polyline must have one part")
            line = parts[0]
            if len(line) < 2:
                raise GeometryError(f"entity {self.id!r}: polyline needs >= 2 vertices")
            seg_len = np.hypot(*np.diff(line, axis=0).T)
            if np.any(seg_len <= 0.0):
                raise GeometryError(f"entity {self.id!r}: zero-length segment")
        if self.weight < 0 or not math.isfinite(self.weight):
            raise GeometryError(f"entity {self.id!r}: weight must be finite and >= 0")
        signs = tuple(self.signs) or (1,) + (-1,) * (len(parts) - 1)
        if len(signs) != len(parts):
            raise GeometryError(f"entity {self.id!r}: one sign per ring required")
        for p in parts:
            p.setflags(write=False)
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "signs", signs)

    @classmethod
    def polygon(cls, id, ring, holes=(), weight=1.0, members=()):
        return cls(id, POLYGON, (ring, *holes), weight, tuple(members))

    @classmethod
    def multipolygon(cls, id, polygons, weight=1.0, members=()):
        """``polygons`` is a sequence of ``(exterior, holes)`` pairs."""
        parts, signs = [], []
        for ext, holes in polygons:
            parts.append(ext)
            signs.append(1)
            for h in holes:
                parts.append(h)
                signs.append(-1)
        return cls(id, POLYGON, tuple(parts), weight, tuple(members), tuple(signs))

    @classmethod
    def segment(cls, id, vertices, weight=1.0):
        return cls(id, SEGMENT, (vertices,), weight)

    @property
    def is_polygon(self) -> bool:
        return self.kind == POLYGON

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Start and end points of every boundary edge, shapes ``(k, 2)``."""
        starts, ends = [], []
        for p in self.parts:
            if self.is_polygon:
                starts.append(p)
                ends.append(np.roll(p, -1, axis=0))
            else:
                starts.append(p[:-1])
                ends.append(p[1:])
        return np.concatenate(starts), np.concatenate(ends)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        allp = np.concatenate(self.parts)
        return (*allp.min(axis=0), *allp.max(axis=0))

    @property
    def length(self) -> float:
        a, b = self.edges
        return float(np.hypot(*(b - a).T).sum())

    @property
    def area(self) -> float:
        if not self.is_polygon:
            return 0.0
        return sum(s * abs(ring_area(p)) for s, p in zip(self.signs, self.parts))

    @property
    def centroid(self) -> np.ndarray:
        if not self.is_polygon:
            a, b = self.edges
            w = np.hypot(*(b - a).T)
            return ((a + b) / 2 * w[:, None]).sum(axis=0) / w.sum()
        total_a = 0.0
        acc = np.zeros(2)
        for sign, ring in zip(self.signs, self.parts):
            a = sign * abs(ring_area(ring))
            total_a += a
            acc += a * ring_centroid(ring)
        return acc / total_a


def _open_ring(ring: np.ndarray) -> np.ndarray:
    if len(ring) > 1 and np.array_equal(ring[0], ring[-1]):
        ring = ring[:-1]
    return ring


def ring_area(ring: np.ndarray) -> float:
    """Signed shoelace area of an open ring."""
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def ring_centroid(ring: np.ndarray) -> np.ndarray:
    x, y = ring[:, 0], ring[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum() / 2.0
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * a)


def point_segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from ``points`` (n, 2) to every segment ``a[k]-b[k]``; shape (n, k)."""
    p = np.asarray(points, dtype=float)[:, None, :]
    ab = (b - a)[None, :, :]
    ap = p - a[None, :, :]
    denom = np.einsum("ijk,ijk->ij", ab, ab)
    s = np.clip(np.einsum("ijk,ijk->ij", ap, ab) / denom, 0.0, 1.0)
    foot = ap - s[..., None] * ab
    return np.hypot(foot[..., 0], foot[..., 1])


def points_in_rings(points: np.ndarray, parts: Sequence[np.ndarray]) -> np.ndarray:
    """Even-odd containment over all rings (holes toggle parity)."""
    p = np.asarray(points, dtype=float)
    inside = np.zeros(len(p), dtype=bool)
    px, py = p[:, 0:1], p[:, 1:2]
    for ring in parts:
        x0, y0 = ring[:, 0], ring[:, 1]
        x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
        straddle = (y0 > py) != (y1 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        hits = straddle & (px < xcross)
        inside ^= (hits.sum(axis=1) % 2).astype(bool)
    return inside


def distances_to_entity(points: np.ndarray, entity: Entity) -> np.ndarray:
    """Vectorised :func:`distance_point_to_entity` for an ``(n, 2)`` array."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a, b = entity.edges
    d = point_segment_distance(pts, a, b).min(axis=1)
    if entity.is_polygon:
        d[points_in_rings(pts, entity.parts)] = 0.0
    return d


def distance_point_to_entity(p, entity: Entity) -> float:
    """Distance from a point to an entity; zero inside a polygon or on a line."""
    return float(distances_to_entity(np.asarray(p, dtype=float).reshape(1, 2), entity)[0])


def misclassification_bound(margin: float, sigma: float) -> float:
    """Gaussian upper bound ``min(1, exp(-margin^2 / (2 sigma^2)))``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    return min(1.0, math.exp(-(margin * margin) / (2.0 * sigma * sigma)))


def radius95(sigma: float) -> float:
    """95% horizontal radius of an isotropic bivariate normal error."""
    return sigma * math.sqrt(2.0 * math.log(20.0))


@dataclass(frozen=True)
class Nearest:
    index: np.ndarray
    distance: np.ndarray
    second: np.ndarray

    @property
    def margin(self) -> np.ndarray:
        return (self.second - self.distance) / 2.0


@dataclass(frozen=True, eq=False)
class PNSpace:
    """Immutable collection of polygons and road segments, sorted by id.

    Sorting by id makes "first index among the minimisers" equal to the
    "smallest id" tie-break.
    """

    entities: tuple[Entity, ...]
    meters_per_unit: float = 1.0
    _bboxes: np.ndarray = field(init=False, repr=False)
    _anchors: np.ndarray = field(init=False, repr=False)
    _pos: dict = field(init=False, repr=False)

    def __post_init__(self):
        ents = tuple(self.entities)
        if not ents:
            raise GeometryError("PN space must contain at least one entity")
        ids = [e.id for e in ents]
        if len(set(ids)) != len(ids):
            raise GeometryError("entity ids must be unique")
        try:
            ents = tuple(sorted(ents, key=lambda e: e.id))
        except TypeError as exc:
            raise GeometryError("entity ids must be mutually comparable") from exc
        if not self.meters_per_unit > 0:
            raise GeometryError("meters_per_unit must be positive")
        object.__setattr__(self, "entities", ents)
        bb = np.array([e.bbox for e in ents], dtype=float)
        bb.setflags(write=False)
        object.__setattr__(self, "_bboxes", bb)
        anchors = np.array([e.parts[0][0] for e in ents], dtype=float)
        object.__setattr__(self, "_anchors", anchors)
        object.__setattr__(self, "_pos", {e.id: k for k, e in enumerate(ents)})

    def __len__(self) -> int:
        return len(self.entities)

    def __iter__(self):
        return iter(self.entities)

    def __getitem__(self, entity_id) -> Entity:
        return self.entities[self._pos[entity_id]]

    def index_of(self, entity_id) -> int:
        return self._pos[entity_id]

    @property
    def ids(self) -> list:
        return [e.id for e in self.entities]

    @property
    def kinds(self) -> np.ndarray:
        return np.array([e.kind for e in self.entities])

    @property
    def is_polygon(self) -> np.ndarray:
        return np.array([e.is_polygon for e in self.entities])

    def polygons(self) -> list[Entity]:
        return [e for e in self.entities if e.is_polygon]

    def segments(self) -> list[Entity]:
        return [e for e in self.entities if not e.is_polygon]

    def to_units(self, meters: float) -> float:
        return meters / self.meters_per_unit

    def subset(self, ids: Iterable) -> "PNSpace":
        keep = set(ids)
        return PNSpace(tuple(e for e in self.entities if e.id in keep), self.meters_per_unit)

    def bbox_distances(self, points: np.ndarray) -> np.ndarray:
        """Lower bounds: distance from each point to each entity's bounding box."""
        p = np.asarray(points, dtype=float)
        bb = self._bboxes
        dx = np.maximum(np.maximum(bb[None, :, 0] - p[:, 0:1], p[:, 0:1] - bb[None, :, 2]), 0.0)
        dy = np.maximum(np.maximum(bb[None, :, 1] - p[:, 1:2], p[:, 1:2] - bb[None, :, 3]), 0.0)
        return np.hypot(dx, dy)

    def distance_matrix(self, points: np.ndarray, k: int = 1) -> np.ndarray:
        """Exact distances to every entity where it can matter, ``inf`` elsewhere.

        An entity is refined exactly only when its bounding-box distance does
        not exceed the ``k``-th smallest upper bound (distance to any of the
        entity's vertices); every other entity is provably farther than the
        ``k`` nearest.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.full((len(pts), len(self)), np.inf)
        for lo in range(0, len(pts), _CHUNK):
            chunk = pts[lo:lo + _CHUNK]
            lower = self.bbox_distances(chunk)
            upper = np.hypot(chunk[:, None, 0] - self._anchors[None, :, 0],
                             chunk[:, None, 1] - self._anchors[None, :, 1])
            kk = min(k, len(self)) - 1
            cutoff = np.partition(upper, kk, axis=1)[:, kk]
            cand = lower <= cutoff[:, None]
            for j, e in enumerate(self.entities):
                rows = np.flatnonzero(cand[:, j])
                if rows.size:
                    out[lo + rows, j] = distances_to_entity(chunk[rows], e)
        return out

    def nearest(self, points: np.ndarray) -> Nearest:
        """Nearest entity index, its distance and the second-nearest distance."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = self.distance_matrix(pts, k=2)
        idx = np.argmin(d, axis=1)  # first minimiser == smallest id
        rows = np.arange(len(pts))
        best = d[rows, idx]
        if len(self) > 1:
            d2 = d.copy()
            d2[rows, idx] = np.inf
            second = d2.min(axis=1)
        else:
            second = np.full(len(pts), np.inf)
        return Nearest(idx, best, second)


def nearest_entity(p, pn: PNSpace) -> tuple[object, float]:
    """Id of the nearest entity to ``p`` and the distance to it."""
    res = pn.nearest(np.asarray(p, dtype=float).reshape(1, 2))
    return pn.entities[int(res.index[0])].id, float(res.distance[0])


def voronoi_margin(p, pn: PNSpace) -> float:
    """Certified lower bound on the distance from ``p`` to the assignment boundary.

    Distance-to-set is 1-Lipschitz, so a displacement shorter than
    ``(d2 - d1) / 2`` cannot change which entity is nearest.
    """
    if len(pn) < 2:
        return math.inf
    res = pn.nearest(np.asarray(p, dtype=float).reshape(1, 2))
    return float(res.margin[0])


def brute_force_nearest(p, entities: Sequence[Entity]) -> tuple[object, float]:
    """Linear scan oracle with the smallest-id tie-break."""
    best = None
    for e in entities:
        d = distance_point_to_entity(p, e)
        key = (d, e.id)
        if best is None or key < best:
            best = key
    return best[1], best[0]


# -- loaders ---------------------------------------------------------------

def _coerce_id(value):
    if isinstance(value, str):
        try:
            return int(value)
        except ValueError:
            return value
    return value


def entities_from_geojson(obj) -> list[Entity]:
    """Entities from a GeoJSON FeatureCollection of Polygon/LineString features.

    ``obj`` is a parsed mapping or a path.  Each feature needs an ``id``
    property; ``weight`` is optional.  MultiLineString features are rejected
    since an entity must be a single connected polyline.
    """
    if not isinstance(obj, dict):
        obj = json.loads(Path(obj).read_text())
    if obj.get("type") != "FeatureCollection":
        raise GeometryError("expected a FeatureCollection")
    out = []
    for feat in obj.get("features", []):
        props = feat.get("properties") or {}
        fid = props.get("id", feat.get("id"))
        if fid is None:
            raise GeometryError("feature without an 'id' property")
        fid = _coerce_id(fid)
        geom = feat.get("geometry") or {}
        gtype = geom.get("type")
        weight = float(props.get("weight", 1.0))
        members = tuple(props.get("members", ()))
        if gtype == "Polygon":
            rings = [np.asarray(r, dtype=float) for r in geom["coordinates"]]
            out.append(Entity.polygon(fid, rings[0], rings[1:], weight, members))
        elif gtype == "MultiPolygon":
            polys = [([np.asarray(r, dtype=float) for r in poly][0],
                      [np.asarray(r, dtype=float) for r in poly][1:]) for poly in geom["coordinates"]]
            out.append(Entity.multipolygon(fid, polys, weight, members))
        elif gtype == "LineString":
            out.append(Entity.segment(fid, np.asarray(geom["coordinates"], dtype=float), weight))
        else:
            raise GeometryError(f"feature {fid!r}: unsupported geometry {gtype!r}")
    return out


def entities_to_geojson(entities: Iterable[Entity]) -> dict:
    feats = []
    for e in entities:
        if e.is_polygon:
            polys = []
            for sign, p in zip(e.signs, e.parts):
                ring = np.vstack([p, p[:1]]).tolist()
                if sign > 0:
                    polys.append([ring])
                else:
                    polys[-1].append(ring)
            if len(polys) == 1:
                geom = {"type": "Polygon", "coordinates": polys[0]}
            else:
                geom = {"type": "MultiPolygon", "coordinates": polys}
        else:
            geom = {"type": "LineString", "coordinates": e.parts[0].tolist()}
        props = {"id": e.id, "kind": e.kind, "weight": e.weight}
        if e.members:
            props["members"] = list(e.members)
        feats.append({"type": "Feature", "properties": props, "geometry": geom})
    return {"type": "FeatureCollection", "features": feats}


def entities_from_csv(path) -> list[Entity]:
    """Entities from a vertex CSV with columns ``id,kind,part,x,y``.

    Vertices are listed in order; ``part`` 0 is the exterior ring and higher
    parts are holes.  ``kind`` is ``polygon`` or ``segment``.
    """
    verts: dict = {}
    kinds: dict = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"id", "kind", "x", "y"} - set(reader.fieldnames or ())
        if missing:
            raise GeometryError(f"vertex CSV missing columns: {sorted(missing)}")
        for row in reader:
            eid = _coerce_id(row["id"])
            kinds.setdefault(eid, row["kind"].strip())
            part = int(row.get("part") or 0)
            verts.setdefault(eid, {}).setdefault(part, []).append((float(row["x"]), float(row["y"])))
    out = []
    for eid, parts in verts.items():
        rings = [np.asarray(parts[k]) for k in sorted(parts)]
        if kinds[eid] == POLYGON:
            out.append(Entity.polygon(eid, rings[0], rings[1:]))
        else:
            out.append(Entity.segment(eid, rings[0]))
    return out


def load_pnspace(*paths, meters_per_unit: float = 1.0) -> PNSpace:
    ents: list[Entity] = []
    for path in paths:
        if str(path).lower().endswith(".csv"):
            ents.extend(entities_from_csv(path))
        else:
            ents.extend(entities_from_geojson(path))
    return PNSpace(tuple(ents), meters_per_unit)
