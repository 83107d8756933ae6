"""Daily action vectors, dwell-time weighted edit distance and single linkage."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .estimation import DEFAULT_THRESHOLD, MarkedDay, adjust_assignments, assign
from .geometry import PNSpace

DEFAULT_TAU = 0.01


@dataclass(frozen=True, eq=False)
class DayPattern:
    """Compressed action vector: visited entities in order with their dwell shares."""

    day: int
    labels: tuple
    dwell: np.ndarray

    def __post_init__(self):
        if len(self.labels) != len(self.dwell):
            raise ValueError("labels and dwell differ in length")
        if any(a == b for a, b in zip(self.labels, self.labels[1:])):
            raise ValueError("adjacent labels must differ")

    def __len__(self) -> int:
        return len(self.labels)


def _runs(labels: Sequence, weights: Sequence[float]) -> tuple[list, list]:
    out_l: list = []
    out_w: list = []
    for lab, w in zip(labels, weights):
        if out_l and out_l[-1] == lab:
            out_w[-1] += w
        else:
            out_l.append(lab)
            out_w.append(float(w))
    return out_l, out_w


def compress(day: MarkedDay, pn: PNSpace | None = None) -> DayPattern:
    """Merge runs of equal consecutive labels, adding their marks."""
    if day.labels is None:
        raise ValueError("day has no entity assignments")
    if len(day) == 0:
        raise ValueError("cannot compress an empty day")
    labels = day.entity_ids(pn) if pn is not None else day.labels.tolist()
    lab, w = _runs(labels, day.marks)
    return DayPattern(day.day, tuple(lab), np.array(w))


def remove_jitter_loops(pattern: DayPattern, tau: float = DEFAULT_TAU) -> DayPattern:
    """Collapse short excursions ``e, x1..xr, e`` whose interior mass is at most ``tau``.

    Loops are resolved leftmost first, closing at the nearest return to ``e``;
    the sequence is re-compressed after each collapse until nothing changes.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    labels = list(pattern.labels)
    dwell = [float(z) for z in pattern.dwell]
    changed = True
    while changed:
        changed = False
        for i in range(len(labels)):
            inner = 0.0
            for k in range(i + 1, len(labels)):
                if labels[k] == labels[i]:
                    if inner <= tau and k > i + 1:
                        merged = sum(dwell[i:k + 1])
                        labels[i:k + 1] = [labels[i]]
                        dwell[i:k + 1] = [merged]
                        labels, dwell = _runs(labels, dwell)
                        changed = True
                    break
                inner += dwell[k]
                if inner > tau:
                    break
            if changed:
                break
    return DayPattern(pattern.day, tuple(labels), np.array(dwell))


def tw_edit_distance(a: DayPattern, b: DayPattern, match_cost: bool = False) -> float:
    """Least dwell time to reallocate to turn day ``a`` into day ``b``.

    Deleting an element of ``a`` costs its dwell, inserting one of ``b``
    costs its dwell, substituting costs both.  Equal labels match for free
    unless ``match_cost`` charges ``|z_a - z_b|``.
    """
    la, lb = a.labels, b.labels
    za, zb = a.dwell.tolist(), b.dwell.tolist()
    prev = [0.0]
    for z in zb:
        prev.append(prev[-1] + z)
    for i in range(len(la)):
        cur = [prev[0] + za[i]]
        ai, zai = la[i], za[i]
        for j in range(len(lb)):
            if ai == lb[j]:
                sub = abs(zai - zb[j]) if match_cost else 0.0
            else:
                sub = zai + zb[j]
            cur.append(min(prev[j] + sub, prev[j + 1] + zai, cur[j] + zb[j]))
        prev = cur
    return prev[-1]


def enumerate_edit_scripts(a: DayPattern, b: DayPattern, match_cost: bool = False) -> float:
    """Exhaustive oracle: cheapest of all edit scripts (delete / insert / align)."""
    la, lb = a.labels, b.labels
    za, zb = a.dwell.tolist(), b.dwell.tolist()
    best = [float("inf")]

    def walk(i, j, cost):
        if i == len(la) and j == len(lb):
            best[0] = min(best[0], cost)
            return
        if i < len(la):
            walk(i + 1, j, cost + za[i])
        if j < len(lb):
            walk(i, j + 1, cost + zb[j])
        if i < len(la) and j < len(lb):
            if la[i] == lb[j]:
                step = abs(za[i] - zb[j]) if match_cost else 0.0
            else:
                step = za[i] + zb[j]
            walk(i + 1, j + 1, cost + step)

    walk(0, 0, 0.0)
    return best[0]


def distance_matrix(patterns: Sequence[DayPattern], match_cost: bool = False,
                    workers: int | None = None) -> np.ndarray:
    """Symmetric matrix of pairwise distances, each unordered pair computed once."""
    n = len(patterns)
    if n < 2:
        raise ValueError("need at least two patterns")
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def one(p):
        return tw_edit_distance(patterns[p[0]], patterns[p[1]], match_cost)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            vals = list(ex.map(one, pairs, chunksize=64))
    else:
        vals = [one(p) for p in pairs]
    D = np.zeros((n, n))
    for (i, j), v in zip(pairs, vals):
        D[i, j] = D[j, i] = v
    return D


@dataclass(frozen=True)
class Dendrogram:
    """Single-linkage merge tree.

    ``merges[k] = (left, right, height, size)``; leaves are ``0..n-1`` and the
    cluster formed by merge ``k`` is ``n + k`` (the scipy linkage convention).
    """

    n: int
    merges: tuple

    def heights(self) -> np.ndarray:
        return np.array([m[2] for m in self.merges])

    def to_linkage(self) -> np.ndarray:
        return np.array(self.merges, dtype=float).reshape(-1, 4)

    def to_json(self) -> list:
        return [[int(l), int(r), float(h)] for l, r, h, _ in self.merges]

    def labels(self, k: int | None = None, height: float | None = None) -> np.ndarray:
        """Flat clusters after cutting at ``k`` clusters or at merge ``height``.

        Cluster numbers follow the smallest day index they contain.
        """
        if (k is None) == (height is None):
            raise ValueError("give exactly one of k or height")
        if k is not None:
            if not 1 <= k <= self.n:
                raise ValueError(f"k must lie in [1, {self.n}]")
            n_merge = self.n - k
        else:
            n_merge = sum(1 for m in self.merges if m[2] <= height)
        parent = list(range(2 * self.n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for idx, (l, r, _, _) in enumerate(self.merges[:n_merge]):
            parent[find(int(l))] = self.n + idx
            parent[find(int(r))] = self.n + idx
        roots = [find(i) for i in range(self.n)]
        relabel: dict = {}
        out = np.empty(self.n, dtype=int)
        for i, root in enumerate(roots):
            out[i] = relabel.setdefault(root, len(relabel))
        return out


def single_linkage(D: np.ndarray) -> Dendrogram:
    """Single-linkage agglomeration via a minimum spanning tree.

    Edges of equal height merge in order of their smallest member index.
    """
    D = np.asarray(D, dtype=float)
    n = len(D)
    if D.shape != (n, n):
        raise ValueError("distance matrix must be square")
    if n == 0:
        raise ValueError("empty distance matrix")
    # Prim, O(n^2); ties resolved toward the smaller vertex index
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = D[0].copy()
    src = np.zeros(n, dtype=int)
    edges = []
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, best)
        v = int(np.argmin(cand))
        edges.append((float(cand[v]), min(src[v], v), max(src[v], v)))
        in_tree[v] = True
        closer = (D[v] < best) & ~in_tree
        best[closer] = D[v][closer]
        src[closer] = v
    edges.sort()
    parent = list(range(n))
    cluster = list(range(n))
    size = [1] * n
    lowest = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    merges = []
    for h, i, j in edges:
        ri, rj = find(i), find(j)
        if lowest[ri] > lowest[rj]:
            ri, rj = rj, ri
        merges.append((cluster[ri], cluster[rj], h, size[ri] + size[rj]))
        parent[rj] = ri
        size[ri] += size[rj]
        cluster[ri] = n + len(merges) - 1
    return Dendrogram(n, tuple(merges))


def flag_outliers(D: np.ndarray, alpha: float = 2.0) -> set[int]:
    """Days whose mean distance to the others exceeds mean + alpha * sd of those means."""
    D = np.asarray(D, dtype=float)
    n = len(D)
    if n < 3:
        raise ValueError("need at least three days")
    means = D.sum(axis=1) / (n - 1)
    cut = means.mean() + alpha * means.std()
    return {int(i) for i in np.flatnonzero(means > cut + 1e-12)}


def day_patterns(days: Sequence[MarkedDay], pn: PNSpace, threshold: float | None = DEFAULT_THRESHOLD,
                 tau: float | None = DEFAULT_TAU) -> list[DayPattern]:
    """Assign, optionally adjust, compress and strip jitter loops for each day."""
    out = []
    for d in sorted(days, key=lambda d: d.day):
        if d.labels is None:
            d = assign(d, pn)
        if threshold is not None:
            d = adjust_assignments(d, pn, threshold)
        p = compress(d, pn)
        if tau is not None:
            p = remove_jitter_loops(p, tau)
        out.append(p)
    return out


def write_labels_csv(path, days: Sequence[int], labels, outliers: set) -> None:
    with open(path, "w") as fh:
        fh.write("day,cluster,outlier\n")
        for d, lab in zip(days, labels):
            fh.write(f"{d},{int(lab)},{int(d in outliers)}\n")


def write_matrix_csv(path, D: np.ndarray, days: Sequence[int]) -> None:
    with open(path, "w") as fh:
        fh.write("day," + ",".join(str(d) for d in days) + "\n")
        for d, row in zip(days, D):
            fh.write(f"{d}," + ",".join(repr(float(v)) for v in row) + "\n")


def write_tree_json(path, tree: Dendrogram) -> None:
    with open(path, "w") as fh:
        json.dump(tree.to_json(), fh)
