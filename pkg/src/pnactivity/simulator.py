"""Map-augmented simple movement model: daily patterns, trajectories and GPS samples.

A day is a sequence of steps drawn from one pattern.  Every step lasts a
truncated-normal number of hours (the last step takes what is left of the 24)
and consists of legs: stays inside one polygon or constant-speed travel along
an ordered route of road segments.
"""

from __future__ import annotations

import copy
import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .estimation import MarkedDay
from .geometry import PNSpace, entities_from_geojson, entities_to_geojson, points_in_rings

HOURS = 24.0
WEEK = ("weekday",) * 5 + ("weekend",) * 2


class ScenarioError(ValueError):
    """Invalid scenario or pattern specification."""


@dataclass(frozen=True)
class Leg:
    kind: str  # "stay" or "travel"
    ids: tuple
    share: float = 1.0


@dataclass(frozen=True)
class Step:
    legs: tuple
    mu: float | None = None
    eta: float | None = None
    q: float | None = None
    label: str = ""

    @property
    def final(self) -> bool:
        return self.mu is None


@dataclass(frozen=True)
class PatternSpec:
    name: str
    day_type: str
    probability: float
    steps: tuple

    def action_vector(self) -> list:
        out = []
        for s in self.steps:
            for leg in s.legs:
                out.extend(leg.ids)
        return out


# -- the synthetic six-polygon / twelve-segment map ------------------------

def _square(x0, y0, side=1.0):
    return [[x0, y0], [x0 + side, y0], [x0 + side, y0 + side], [x0, y0 + side], [x0, y0]]


_NODES = {
    "n0": (1.1, 0.0), "n1": (2.5, 0.0), "n4": (4.0, 1.0), "n5": (5.6, 1.0),
    "n6": (2.5, 1.25), "n7": (4.0, -1.0), "n8": (5.6, -1.0), "n9": (2.5, -1.5),
    "n10": (2.5, -2.85), "n11": (5.6, 2.9), "n12": (0.5, -1.5), "n13": (-1.5, -1.5),
}
_SEGMENTS = {
    "S1": ("n9", "n10"), "S2": ("n1", "n9"), "S3": ("n0", "n1"), "S4": ("n9", "n12"),
    "S5": ("n6", "n1"), "S6": ("n12", "n13"), "S7": ("n4", "n6"), "S8": ("n4", "n5"),
    "S9": ("n1", "n4"), "S10": ("n1", "n7"), "S11": ("n7", "n8"), "S12": ("n5", "n11"),
}
_POLYGONS = {
    "P1": ("home", (0.0, -0.5)), "P2": ("restaurant", (5.1, 3.0)), "P3": ("office", (5.7, 0.5)),
    "P4": ("supermarket", (5.7, -1.5)), "P5": ("beach", (-2.6, -2.0)), "P6": ("park", (2.0, -3.95)),
}


def default_map_geojson() -> dict:
    feats = []
    for pid, (name, (x0, y0)) in _POLYGONS.items():
        feats.append({"type": "Feature", "properties": {"id": pid, "name": name},
                      "geometry": {"type": "Polygon", "coordinates": [_square(x0, y0)]}})
    for sid, (a, b) in _SEGMENTS.items():
        feats.append({"type": "Feature", "properties": {"id": sid},
                      "geometry": {"type": "LineString", "coordinates": [list(_NODES[a]), list(_NODES[b])]}})
    return {"type": "FeatureCollection", "features": feats}


def _stay(pid, mu=None, eta=None, q=None, label=""):
    return {"legs": [{"kind": "stay", "ids": [pid]}], "mu": mu, "eta": eta, "q": q, "label": label}


def _travel(route, mu, eta, q, label=""):
    return {"legs": [{"kind": "travel", "ids": list(route)}], "mu": mu, "eta": eta, "q": q, "label": label}


_TO_OFFICE = ["S3", "S9", "S8"]
_FROM_OFFICE = ["S8", "S7", "S5", "S3"]
_PARK_TOUR = {"legs": [{"kind": "travel", "ids": ["S3", "S2", "S1"], "share": 0.25},
                       {"kind": "stay", "ids": ["P6"], "share": 0.5},
                       {"kind": "travel", "ids": ["S1", "S2", "S3"], "share": 0.25}],
              "mu": 1.0, "eta": 0.06, "q": 0.15, "label": "home to park to home"}


def default_patterns() -> list[dict]:
    """The five daily patterns; probabilities are within the day type."""
    p1 = [_stay("P1", 9, 0.15, 0.5, "at home"), _travel(_TO_OFFICE, 0.5, 0.08, 0.25, "home to office"),
          _stay("P3", 2.5, 0.15, 0.5, "at office"), _travel(["S12"], 0.1, 0.03, 0.05, "office to cafe"),
          _stay("P2", 0.5, 0.15, 0.05, "at cafe"), _travel(["S12"], 0.1, 0.03, 0.05, "cafe to office"),
          _stay("P3", 4.8, 0.15, 0.5, "at office"), _travel(_FROM_OFFICE, 0.6, 0.08, 0.25, "office to home"),
          _stay("P1", 2, 0.2, 0.6, "at home"), copy.deepcopy(_PARK_TOUR), _stay("P1", label="home")]
    p2 = [_stay("P1", 8.5, 0.15, 0.5, "home"), _travel(_TO_OFFICE, 0.5, 0.08, 0.25, "home to office"),
          _stay("P3", 3, 0.15, 0.5, "at office"), _travel(["S12"], 0.1, 0.03, 0.05, "office to cafe"),
          _stay("P2", 0.5, 0.15, 0.05, "at cafe"), _travel(["S12"], 0.1, 0.03, 0.05, "cafe to office"),
          _stay("P3", 4.3, 0.15, 0.5, "at office"), _travel(["S12"], 0.75, 0.08, 0.25, "office to restaurant"),
          _stay("P2", 1, 0.08, 0.25, "at restaurant"),
          _travel(["S12", "S8", "S9", "S3"], 0.4, 0.08, 0.25, "restaurant to home"),
          _stay("P1", 0.95, 0.1, 0.3, "at home"), copy.deepcopy(_PARK_TOUR), _stay("P1", label="at home")]
    p3 = [_stay("P1", 11, 0.3, 1, "at home"), _travel(["S3", "S10", "S11"], 0.75, 0.15, 0.45, "home to supermarket"),
          _stay("P4", 2.5, 0.3, 1, "at supermarket"),
          _travel(["S11", "S10", "S3"], 0.75, 0.15, 0.45, "supermarket to home"), _stay("P1", label="at home")]
    p4 = [_stay("P1", 10, 0.3, 1, "at home"), _travel(["S3", "S2", "S4", "S6"], 0.8, 0.3, 0.7, "home to beach"),
          _stay("P5", 5.7, 0.35, 1, "beach"), _travel(["S6", "S4", "S2", "S3"], 0.8, 0.3, 0.7, "beach to home"),
          _stay("P1", label="at home")]
    p5 = [_stay("P1", label="at home")]
    return [
        {"name": "pattern1", "day_type": "weekday", "probability": 0.75, "steps": p1},
        {"name": "pattern2", "day_type": "weekday", "probability": 0.25, "steps": p2},
        {"name": "pattern3", "day_type": "weekend", "probability": 0.5, "steps": p3},
        {"name": "pattern4", "day_type": "weekend", "probability": 0.125, "steps": p4},
        {"name": "pattern5", "day_type": "weekend", "probability": 0.375, "steps": p5},
    ]


def default_scenario_dict(**overrides) -> dict:
    d = {"map": default_map_geojson(), "meters_per_unit": 1.0, "patterns": default_patterns(),
         "calendar": list(WEEK), "n": 90, "m": 1439, "sigma": 0.1, "timestamps": "realistic",
         "seed": 0, "reference": {"n_days": 25, "seed": 0}}
    d.update(overrides)
    return d


# -- scenario ---------------------------------------------------------------

def _parse_patterns(raw: Sequence[dict], pn: PNSpace) -> tuple:
    pats = []
    for p in raw:
        steps = []
        for s in p["steps"]:
            legs = tuple(Leg(l["kind"], tuple(l["ids"]), float(l.get("share", 1.0))) for l in s["legs"])
            steps.append(Step(legs, s.get("mu"), s.get("eta"), s.get("q"), s.get("label", "")))
        pats.append(PatternSpec(p["name"], p["day_type"], float(p["probability"]), tuple(steps)))
    _validate_patterns(pats, pn)
    return tuple(pats)


def _validate_patterns(pats: Sequence[PatternSpec], pn: PNSpace) -> None:
    by_type: dict = {}
    for p in pats:
        by_type[p.day_type] = by_type.get(p.day_type, 0.0) + p.probability
        if not p.steps or not p.steps[-1].final:
            raise ScenarioError(f"{p.name}: last step must absorb the remaining time")
        for s in p.steps:
            if not s.final:
                if s.mu is None or s.eta is None or s.q is None:
                    raise ScenarioError(f"{p.name}: non-final step needs mu, eta and q")
                if s.q <= 0 or s.eta < 0 or s.mu - s.q <= 0:
                    raise ScenarioError(f"{p.name}: truncation window must be positive")
            if abs(sum(l.share for l in s.legs) - 1.0) > 1e-9:
                raise ScenarioError(f"{p.name}: leg shares must sum to 1")
            for leg in s.legs:
                for eid in leg.ids:
                    try:
                        ent = pn[eid]
                    except KeyError:
                        raise ScenarioError(f"{p.name}: unknown entity {eid!r}") from None
                    if (leg.kind == "stay") != ent.is_polygon:
                        raise ScenarioError(f"{p.name}: {leg.kind} leg cannot use {eid!r}")
                if leg.kind == "stay" and len(leg.ids) != 1:
                    raise ScenarioError(f"{p.name}: a stay names exactly one polygon")
    for t, total in by_type.items():
        if abs(total - 1.0) > 1e-9:
            raise ScenarioError(f"pattern probabilities for {t!r} sum to {total}")


@dataclass(frozen=True, eq=False)
class Scenario:
    pn: PNSpace
    patterns: tuple
    calendar: tuple = WEEK
    n: int = 90
    m: int = 1439
    sigma: float = 0.1
    timestamps: str = "realistic"
    seed: int = 0
    reference: dict = field(default_factory=lambda: {"n_days": 25, "seed": 0})
    sigma_by_entity: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        pn = PNSpace(tuple(entities_from_geojson(d["map"])), float(d.get("meters_per_unit", 1.0)))
        pats = _parse_patterns(d["patterns"], pn)
        cal = tuple(d.get("calendar", WEEK))
        types = {p.day_type for p in pats}
        if not set(cal) <= types:
            raise ScenarioError(f"calendar uses day types without patterns: {set(cal) - types}")
        sc = cls(pn, pats, cal, int(d.get("n", 90)), int(d.get("m", 1439)), float(d.get("sigma", 0.1)),
                 d.get("timestamps", "realistic"), int(d.get("seed", 0)),
                 dict(d.get("reference", {"n_days": 25, "seed": 0})),
                 dict(d.get("sigma_by_entity", {})), d)
        if sc.timestamps not in ("even", "realistic"):
            raise ScenarioError(f"unknown timestamp mode {sc.timestamps!r}")
        if sc.n < 1 or sc.m < 2 or sc.sigma < 0:
            raise ScenarioError("need n >= 1, m >= 2 and sigma >= 0")
        return sc

    @classmethod
    def default(cls, **overrides) -> "Scenario":
        return cls.from_dict(default_scenario_dict(**overrides))

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = dict(self.raw) if self.raw else {}
        d.update(map=entities_to_geojson(self.pn.entities), meters_per_unit=self.pn.meters_per_unit,
                 calendar=list(self.calendar), n=self.n, m=self.m, sigma=self.sigma,
                 timestamps=self.timestamps, seed=self.seed, reference=self.reference,
                 sigma_by_entity=self.sigma_by_entity)
        return d

    def replace(self, **kw) -> "Scenario":
        d = self.to_dict()
        d.update(kw)
        return Scenario.from_dict(d)

    def day_type(self, day: int) -> str:
        """Calendar type of 1-based ``day``."""
        return self.calendar[(day - 1) % len(self.calendar)]

    def patterns_for(self, day_type: str) -> list[PatternSpec]:
        return [p for p in self.patterns if p.day_type == day_type]


def sample_day_pattern(day_type: str, patterns: Sequence[PatternSpec], rng) -> PatternSpec:
    """Categorical draw among the patterns of ``day_type``."""
    cands = [p for p in patterns if p.day_type == day_type]
    if not cands:
        raise ScenarioError(f"no patterns for day type {day_type!r}")
    probs = np.array([p.probability for p in cands])
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ScenarioError(f"probabilities for {day_type!r} sum to {probs.sum()}")
    return cands[int(rng.choice(len(cands), p=probs / probs.sum()))]


def truncated_normal(mu: float, eta: float, q: float, rng) -> float:
    """Rejection sample from N(mu, eta^2) restricted to the open window (mu - q, mu + q)."""
    if eta == 0:
        return float(mu)
    while True:
        x = rng.normal(mu, eta)
        if mu - q < x < mu + q:
            return float(x)


@dataclass
class DurationStats:
    resampled: int = 0


def sample_durations(pattern: PatternSpec, rng, stats: DurationStats | None = None) -> np.ndarray:
    """Day fractions of each step; the final step takes the remainder.

    A draw leaving a negative remainder is discarded and the whole day redrawn.
    """
    while True:
        hours = [truncated_normal(s.mu, s.eta, s.q, rng) for s in pattern.steps[:-1]]
        rest = HOURS - sum(hours)
        if rest >= 0:
            return np.array(hours + [rest]) / HOURS
        if stats is not None:
            stats.resampled += 1


# -- schedules ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Interval:
    start: float
    end: float
    kind: str
    ids: tuple
    polyline: np.ndarray | None = None  # travel: concatenated route vertices
    cumlen: np.ndarray | None = None  # travel: arc length at each route vertex
    seg_bounds: np.ndarray | None = None  # travel: arc length at each segment end


def _route_polyline(pn: PNSpace, ids: Sequence, origin) -> tuple[np.ndarray, np.ndarray]:
    lines = [np.asarray(pn[i].parts[0]) for i in ids]
    first = lines[0]
    if len(lines) > 1:
        nxt = lines[1]
        ends = [first[-1], first[0]]
        gaps = [min(np.hypot(*(e - nxt[0])), np.hypot(*(e - nxt[-1]))) for e in ends]
        if gaps[1] < gaps[0]:
            first = first[::-1]
    elif origin is not None and np.hypot(*(first[-1] - origin)) < np.hypot(*(first[0] - origin)):
        first = first[::-1]
    chain = [first]
    for line in lines[1:]:
        end = chain[-1][-1]
        if np.hypot(*(line[-1] - end)) < np.hypot(*(line[0] - end)):
            line = line[::-1]
        chain.append(line)
    verts = [chain[0]] + [c[1:] if np.allclose(c[0], chain[k][-1]) else c for k, c in enumerate(chain[1:])]
    seg_len = np.array([np.hypot(*np.diff(c, axis=0).T).sum() for c in chain])
    return np.vstack(verts), np.cumsum(seg_len)


def build_schedule(pattern: PatternSpec, durations: np.ndarray, pn: PNSpace) -> list[Interval]:
    """Partition [0, 1] into stay and travel intervals for a drawn day."""
    out = []
    t = 0.0
    origin = None
    for step, z in zip(pattern.steps, durations):
        for leg in step.legs:
            dur = z * leg.share
            end = min(1.0, t + dur)
            if leg.kind == "stay":
                out.append(Interval(t, end, "stay", leg.ids))
                origin = pn[leg.ids[0]].centroid
            else:
                poly, bounds = _route_polyline(pn, leg.ids, origin)
                cum = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(poly, axis=0).T))])
                out.append(Interval(t, end, "travel", leg.ids, poly, cum, bounds))
                origin = poly[-1]
            t = end
    if out:
        last = out[-1]
        out[-1] = Interval(last.start, 1.0, last.kind, last.ids, last.polyline, last.cumlen, last.seg_bounds)
    return out


def _uniform_in_polygon(entity, k: int, rng) -> np.ndarray:
    x0, y0, x1, y1 = entity.bbox
    out = np.empty((0, 2))
    while len(out) < k:
        need = max(16, 2 * (k - len(out)))
        cand = np.column_stack([rng.uniform(x0, x1, need), rng.uniform(y0, y1, need)])
        cand = cand[points_in_rings(cand, entity.parts)]
        out = np.vstack([out, cand])
    return out[:k]


def _interval_index(schedule: Sequence[Interval], t: np.ndarray) -> np.ndarray:
    ends = np.array([iv.end for iv in schedule])
    idx = np.searchsorted(ends, t, side="left")
    return np.minimum(idx, len(schedule) - 1)


def realize_position(schedule: Sequence[Interval], t, pn: PNSpace, rng) -> tuple[np.ndarray, list]:
    """True positions and entity ids at times ``t``.

    Stays give a fresh uniform point inside the polygon; travel moves at
    constant speed along the route, so elapsed time maps to arc length.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0) or np.any(t > 1):
        raise ValueError("t must lie in [0, 1]")
    idx = _interval_index(schedule, t)
    xy = np.empty((len(t), 2))
    ids: list = [None] * len(t)
    for k in np.unique(idx):
        rows = np.flatnonzero(idx == k)
        iv = schedule[k]
        if iv.kind == "stay":
            xy[rows] = _uniform_in_polygon(pn[iv.ids[0]], len(rows), rng)
            for r in rows:
                ids[r] = iv.ids[0]
            continue
        span = iv.end - iv.start
        frac = np.clip((t[rows] - iv.start) / span, 0.0, 1.0) if span > 0 else np.zeros(len(rows))
        s = frac * iv.cumlen[-1]
        xy[rows, 0] = np.interp(s, iv.cumlen, iv.polyline[:, 0])
        xy[rows, 1] = np.interp(s, iv.cumlen, iv.polyline[:, 1])
        seg = np.minimum(np.searchsorted(iv.seg_bounds, s, side="right"), len(iv.ids) - 1)
        for r, g in zip(rows, seg):
            ids[r] = iv.ids[g]
    return xy, ids


def _entity_pieces(schedule: Sequence[Interval]) -> list[tuple[float, float, object]]:
    """(start, end, entity) pieces in time order, adjacent equal entities merged."""
    pieces: list = []
    for iv in schedule:
        if iv.kind == "stay":
            parts = [(iv.start, iv.end, iv.ids[0])]
        else:
            total = iv.seg_bounds[-1]
            cuts = np.concatenate([[0.0], iv.seg_bounds]) / total
            span = iv.end - iv.start
            parts = [(iv.start + span * cuts[g], iv.start + span * cuts[g + 1], eid) for g, eid in enumerate(iv.ids)]
        for a, b, e in parts:
            if pieces and pieces[-1][2] == e:
                pieces[-1] = (pieces[-1][0], b, e)
            else:
                pieces.append((a, b, e))
    return pieces


def ground_truth(schedule: Sequence[Interval], pn: PNSpace) -> tuple[np.ndarray, np.ndarray]:
    """Exact share of the day in each entity and the number of visits to each.

    Travel time is split over route segments in proportion to their length.
    Every visit contributes two boundary crossings.
    """
    occ = np.zeros(len(pn))
    visits = np.zeros(len(pn), dtype=int)
    for a, b, e in _entity_pieces(schedule):
        k = pn.index_of(e)
        occ[k] += b - a
        visits[k] += 1
    return occ, visits


def silverman_bandwidth(x: np.ndarray) -> float:
    """0.9 * min(sd, IQR / 1.34) * n^(-1/5)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    sd = x.std(ddof=1) if n > 1 else 0.0
    q75, q25 = np.percentile(x, [75, 25]) if n > 1 else (0.0, 0.0)
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    if spread <= 0:
        spread = 1.0 / math.sqrt(12.0)
    return 0.9 * spread * n ** (-0.2)


def _strictly_increasing(t: np.ndarray) -> np.ndarray:
    t = np.sort(np.clip(t, 0.0, 1.0))
    while np.any(np.diff(t) <= 0):
        dup = np.concatenate([[False], np.diff(t) <= 0])
        t[dup] += 1e-9
        t = np.sort(t)
        if t[-1] > 1.0:
            over = t > 1.0
            t[over] = 1.0 - 1e-9 * np.arange(over.sum(), 0, -1)
            t = np.sort(t)
    return t


def gen_timestamps(mode: str, m: int, rng, reference: np.ndarray | None = None) -> np.ndarray:
    """``m`` strictly increasing timestamps in [0, 1].

    ``even`` spaces them at ``j / (m + 1)``.  ``realistic`` starts from a
    reference day: a larger one is thinned uniformly without replacement to
    ``m`` points, a smaller one is topped up with draws from its Gaussian KDE
    (Silverman bandwidth, reflected at 0 and 1).
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    if mode == "even":
        return np.arange(1, m + 1) / (m + 1)
    if mode != "realistic":
        raise ValueError(f"unknown timestamp mode {mode!r}")
    if reference is None or len(reference) == 0:
        raise ValueError("realistic timestamps need a nonempty reference day")
    ref = np.sort(np.asarray(reference, dtype=float))
    if len(ref) >= m:
        keep = np.sort(rng.choice(len(ref), size=m, replace=False))
        t = ref[keep]
    else:
        h = silverman_bandwidth(ref)
        extra = ref[rng.integers(0, len(ref), m - len(ref))] + rng.normal(0.0, h, m - len(ref))
        extra = np.abs(extra)
        extra = np.where(extra > 1.0, 2.0 - extra, extra)
        t = np.concatenate([ref, extra])
    return _strictly_increasing(t)


def add_noise(points: np.ndarray, sigma, rng) -> np.ndarray:
    """Independent isotropic Gaussian displacement; ``sigma`` may vary per point."""
    pts = np.asarray(points, dtype=float)
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (len(pts),))
    if np.any(sig < 0):
        raise ValueError("sigma must be nonnegative")
    return pts + rng.normal(0.0, 1.0, pts.shape) * sig[:, None]


def make_reference_library(n_days: int = 25, seed: int = 0) -> list[np.ndarray]:
    """Synthetic smartphone-like timestamp days (the real reference data is private).

    Each day mixes a daytime bulk (normal around early afternoon) with a
    uniform background, then removes heavy-tailed gaps overnight (an idle
    phone) and a few short daytime gaps, giving the skewed, clustered
    sampling seen in phone GPS logs.
    """
    rng = np.random.default_rng([seed, 20240])
    days = []
    for _ in range(n_days):
        count = int(rng.integers(150, 430))
        n_bulk = int(round(0.75 * count))
        centre, spread = rng.uniform(12.0, 16.0), rng.uniform(2.5, 4.0)
        bulk = rng.normal(centre, spread, n_bulk)
        bulk = bulk[(bulk >= 0) & (bulk < HOURS)]
        hours = np.concatenate([bulk, rng.uniform(0.0, HOURS, count - n_bulk)])
        gaps = [(rng.uniform(0.0, 6.0), min(4.0, 0.5 * (1.0 + rng.pareto(1.5))))
                for _ in range(int(rng.poisson(1.0)))]
        gaps += [(rng.uniform(6.0, HOURS), rng.uniform(5.0, 20.0) / 60.0) for _ in range(int(rng.poisson(1.0)))]
        for start, length in gaps:
            hours = hours[(hours < start) | (hours >= start + length)]
        t = np.unique(np.round(hours * 3600.0)) / (HOURS * 3600.0)
        days.append(t[(t >= 0) & (t <= 1)])
    return days


def load_reference_csv(path, day_length: float = HOURS * 3600.0) -> list[np.ndarray]:
    from .ingest import parse_gps

    return [d.t for d in parse_gps(path, day_length)]


# -- studies -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SimDay:
    day: int
    day_type: str
    pattern: str
    durations: np.ndarray
    t: np.ndarray
    xy_true: np.ndarray
    xy: np.ndarray
    true_ids: list
    occupation: np.ndarray
    visits: np.ndarray
    missed_visits: int
    resampled: int

    def marked(self) -> MarkedDay:
        return MarkedDay.from_records(self.day, self.t, self.xy)


@dataclass(frozen=True, eq=False)
class SimStudy:
    scenario: Scenario
    replicate: int
    days: tuple

    @property
    def n(self) -> int:
        return len(self.days)

    def marked_days(self) -> list[MarkedDay]:
        return [d.marked() for d in self.days]

    def true_table(self) -> np.ndarray:
        """Mean realised occupation over the simulated days."""
        return np.mean([d.occupation for d in self.days], axis=0)

    def expected_table(self) -> np.ndarray:
        """Expected occupation given this study's calendar of day types."""
        return expected_occupation(self.scenario, [d.day_type for d in self.days])

    def crossings(self) -> np.ndarray:
        return 2 * np.sum([d.visits for d in self.days], axis=0)

    def reorder(self, order: Sequence[int]) -> "SimStudy":
        """Same days in a new order, renumbered 1..n."""
        import dataclasses

        days = tuple(dataclasses.replace(self.days[k], day=i + 1) for i, k in enumerate(order))
        return SimStudy(self.scenario, self.replicate, days)


def _library(scenario: Scenario) -> list[np.ndarray]:
    ref = scenario.reference or {}
    if "csv" in ref:
        return load_reference_csv(ref["csv"])
    return make_reference_library(int(ref.get("n_days", 25)), int(ref.get("seed", 0)))


def simulate_day(scenario: Scenario, day: int, replicate: int = 0,
                 library: Sequence[np.ndarray] | None = None) -> SimDay:
    """One day drawn from its own random stream keyed by (seed, replicate, day)."""
    rng = np.random.default_rng([scenario.seed, replicate, day])
    pn = scenario.pn
    dtype = scenario.day_type(day)
    pattern = sample_day_pattern(dtype, scenario.patterns, rng)
    stats = DurationStats()
    z = sample_durations(pattern, rng, stats)
    schedule = build_schedule(pattern, z, pn)
    ref = None
    if scenario.timestamps == "realistic":
        if library is None:
            library = _library(scenario)
        ref = library[int(rng.integers(0, len(library)))]
    t = gen_timestamps(scenario.timestamps, scenario.m, rng, ref)
    xy_true, ids = realize_position(schedule, t, pn, rng)
    sig = np.array([scenario.sigma_by_entity.get(e, scenario.sigma) for e in ids])
    xy = add_noise(xy_true, sig, rng)
    occ, visits = ground_truth(schedule, pn)
    missed = sum(1 for a, b, _ in _entity_pieces(schedule) if not np.any((t >= a) & (t <= b)))
    return SimDay(day, dtype, pattern.name, z, t, xy_true, xy, ids, occ, visits, missed, stats.resampled)


def simulate_study(scenario: Scenario, replicate: int = 0, n: int | None = None,
                   workers: int | None = None) -> SimStudy:
    n = scenario.n if n is None else n
    library = _library(scenario) if scenario.timestamps == "realistic" else None

    def one(day):
        return simulate_day(scenario, day, replicate, library)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            days = list(ex.map(one, range(1, n + 1)))
    else:
        days = [one(d) for d in range(1, n + 1)]
    return SimStudy(scenario, replicate, tuple(days))


def pattern_expected_occupation(pattern: PatternSpec, pn: PNSpace) -> np.ndarray:
    """Occupation of a pattern at its mean step durations.

    Truncation windows are symmetric, so each step's mean is its ``mu`` and
    occupation is linear in the durations.
    """
    hours = [s.mu for s in pattern.steps[:-1]]
    z = np.array(hours + [HOURS - sum(hours)]) / HOURS
    return ground_truth(build_schedule(pattern, z, pn), pn)[0]


def expected_occupation(scenario: Scenario, day_types: Sequence[str]) -> np.ndarray:
    """Mean expected occupation over a sequence of day types."""
    per_type = {}
    for t in set(day_types):
        per_type[t] = sum(p.probability * pattern_expected_occupation(p, scenario.pn)
                          for p in scenario.patterns_for(t))
    return np.mean([per_type[t] for t in day_types], axis=0)


def write_truth_csv(study: SimStudy, path) -> None:
    ids = study.scenario.pn.ids
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["day", "pattern", "entity_id", "occupation", "visits", "crossings"])
        for d in study.days:
            for eid, occ, v in zip(ids, d.occupation, d.visits):
                w.writerow([d.day, d.pattern, eid, repr(float(occ)), int(v), 2 * int(v)])
