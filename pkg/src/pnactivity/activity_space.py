"""Level-gamma activity spaces over time-use tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .estimation import ClassTables, TimeUseTable, normalize_by_class

# cumulative sums are compared against gamma with this slack so gamma = 1
# is reachable despite rounding in tables that sum to one
MASS_TOL = 1e-9
SUM_TOL = 1e-6
EXACT_LIMIT = 30


class InfeasibleError(ValueError):
    """No subset of entities can reach the requested mass."""


@dataclass(frozen=True)
class ActivitySpace:
    gamma: float
    cls: str
    members: tuple
    mass: float
    weight: float | None = None
    exact: bool = True
    gap: float = 0.0
    parts: dict = field(default_factory=dict)

    def __contains__(self, entity_id) -> bool:
        return entity_id in self.members

    def __len__(self) -> int:
        return len(self.members)

    def to_json(self) -> dict:
        out = {"gamma": self.gamma, "class": self.cls, "members": list(self.members), "mass": self.mass}
        if self.weight is not None:
            out.update(weight=self.weight, exact=self.exact, gap=self.gap)
        return out


def _as_mapping(table) -> dict:
    if isinstance(table, TimeUseTable):
        return table.as_dict()
    return dict(table)


def _check_gamma(gamma: float) -> None:
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")


def level_space(table: Mapping | TimeUseTable, gamma: float, cls: str = "all") -> ActivitySpace:
    """Fewest entities whose shares reach ``gamma``, preferring more mass.

    Sorting by share (descending, then id) and taking the shortest reaching
    prefix gives the minimum cardinality, the largest mass at that
    cardinality, and the lexicographically smallest ids among equal masses.
    """
    _check_gamma(gamma)
    tab = _as_mapping(table)
    total = sum(tab.values())
    if abs(total - 1.0) > SUM_TOL:
        raise ValueError(f"table sums to {total}, not 1")
    order = sorted(tab, key=lambda e: (-tab[e], e))
    members, mass = [], 0.0
    for e in order:
        if mass >= gamma - MASS_TOL:
            break
        members.append(e)
        mass += tab[e]
    return ActivitySpace(gamma, cls, tuple(sorted(members)), mass)


def composed_space(classes: ClassTables | TimeUseTable, gamma: float) -> ActivitySpace:
    """Union of the polygon-level and road-level spaces at the same ``gamma``."""
    if isinstance(classes, TimeUseTable):
        classes = normalize_by_class(classes)
    parts = {}
    if not classes.polygon_empty:
        parts["polygon"] = level_space(classes.polygons, gamma, "polygon")
    if not classes.road_empty:
        parts["road"] = level_space(classes.roads, gamma, "road")
    members = tuple(m for p in parts.values() for m in p.members)
    mass = sum(p.mass for p in parts.values())
    return ActivitySpace(gamma, "composed", members, mass, parts=parts)


def _greedy(ids, T, w, gamma):
    order = sorted(range(len(ids)), key=lambda k: (-(T[k] / w[k]) if w[k] > 0 else -math.inf, ids[k]))
    chosen, mass, weight = [], 0.0, 0.0
    for k in order:
        if mass >= gamma - MASS_TOL:
            break
        chosen.append(k)
        mass += T[k]
        weight += w[k]
    return chosen, mass, weight


def _fractional_bound(T, w, order, start, need):
    """Least extra weight to add ``need`` mass using items ``order[start:]`` fractionally."""
    extra = 0.0
    for k in order[start:]:
        if need <= MASS_TOL:
            return extra
        take = min(1.0, need / T[k])
        extra += take * w[k]
        need -= take * T[k]
    return extra if need <= MASS_TOL else math.inf


def weighted_level_space(table: Mapping | TimeUseTable, weights: Mapping, gamma: float,
                         cls: str = "all", exact_limit: int = EXACT_LIMIT) -> ActivitySpace:
    """Entity set of least total weight whose shares reach ``gamma``.

    Solved exactly by branch and bound when at most ``exact_limit`` entities
    have positive share; ties go to larger mass, then smaller id tuples.
    Larger inputs use the greedy share-per-weight order and report the gap to
    the fractional lower bound (``exact=False``).
    """
    _check_gamma(gamma)
    tab = _as_mapping(table)
    for e, v in weights.items():
        if v < 0:
            raise ValueError(f"negative weight for {e!r}")
    ids = sorted(e for e in tab if tab[e] > 0)
    T = [tab[e] for e in ids]
    w = [float(weights.get(e, 1.0)) for e in ids]
    if sum(T) < gamma - MASS_TOL:
        raise InfeasibleError(f"total share {sum(T)} is below gamma={gamma}")

    if len(ids) > exact_limit:
        chosen, mass, weight = _greedy(ids, T, w, gamma)
        order = sorted(range(len(ids)), key=lambda k: (w[k] / T[k], ids[k]))
        lb = _fractional_bound(T, w, order, 0, gamma)
        members = tuple(sorted(ids[k] for k in chosen))
        return ActivitySpace(gamma, cls, members, mass, weight, exact=False, gap=weight - lb)

    # zero-weight items never hurt and add mass, so they are always taken
    free = [k for k in range(len(ids)) if w[k] == 0]
    paid = [k for k in range(len(ids)) if w[k] > 0]
    base_mass = sum(T[k] for k in free)
    order = sorted(paid, key=lambda k: (w[k] / T[k], ids[k]))
    suffix_mass = np.concatenate([np.cumsum([T[k] for k in order][::-1])[::-1], [0.0]])

    best = {"key": None, "set": None}

    def key(weight, mass, chosen):
        return (weight, -mass, tuple(sorted(ids[k] for k in chosen)))

    def better(cand):
        cur = best["key"]
        if cur is None:
            return True
        if cand[0] < cur[0] - 1e-12:
            return True
        if cand[0] > cur[0] + 1e-12:
            return False
        if cand[1] < cur[1] - 1e-12:
            return True
        if cand[1] > cur[1] + 1e-12:
            return False
        return cand[2] < cur[2]

    def search(pos, chosen, weight, mass):
        if mass >= gamma - MASS_TOL:
            # adding further items cannot reduce weight; it may only add mass at
            # zero cost, which is impossible for paid items
            k = key(weight, mass, free + chosen)
            if better(k):
                best["key"], best["set"] = k, list(free + chosen)
            return
        if pos == len(order) or mass + suffix_mass[pos] < gamma - MASS_TOL:
            return
        lb = weight + _fractional_bound(T, w, order, pos, gamma - mass)
        if best["key"] is not None and lb > best["key"][0] + 1e-12:
            return
        k = order[pos]
        search(pos + 1, chosen + [k], weight + w[k], mass + T[k])
        search(pos + 1, chosen, weight, mass)

    search(0, [], 0.0, base_mass)
    chosen = best["set"]
    mass = sum(T[k] for k in chosen)
    weight = sum(w[k] for k in chosen)
    return ActivitySpace(gamma, cls, tuple(sorted(ids[k] for k in chosen)), mass, weight)


def brute_force_level_space(table: Mapping, gamma: float, weights: Mapping | None = None) -> tuple:
    """Enumeration oracle: min weight (or count), then max mass, then smallest ids."""
    ids = sorted(table)
    best = None
    for mask in range(1, 1 << len(ids)):
        sub = [ids[k] for k in range(len(ids)) if mask >> k & 1]
        mass = sum(table[e] for e in sub)
        if mass < gamma - MASS_TOL:
            continue
        cost = len(sub) if weights is None else sum(weights[e] for e in sub)
        cand = (cost, -mass, tuple(sub))
        if best is None:
            best = cand
            continue
        if cand[0] < best[0] - 1e-12 or (
                abs(cand[0] - best[0]) <= 1e-12 and (cand[1] < best[1] - 1e-12 or (
                abs(cand[1] - best[1]) <= 1e-12 and cand[2] < best[2]))):
            best = cand
    return best[2]
