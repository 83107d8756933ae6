"""Static SVG figures built from serialized outputs only."""

from __future__ import annotations

import csv
import json
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import LineCollection, PatchCollection  # noqa: E402
from matplotlib.patches import Polygon as MplPolygon  # noqa: E402

from .geometry import entities_from_geojson  # noqa: E402

# fixed hash salt and no date stamp make repeated renders byte-identical
plt.rcParams["svg.hashsalt"] = "pnactivity"


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _load_json(obj):
    if isinstance(obj, (dict, list)):
        return obj
    with open(obj) as fh:
        return json.load(fh)


def plot_time_use(table, map_geojson, path, cmap: str = "viridis") -> None:
    """Map with every entity coloured by log(1 + proportion)."""
    tab = _load_json(table)
    props = {r["entity_id"]: r["proportion"] for r in tab["entities"]}
    ents = entities_from_geojson(_load_json(map_geojson))
    vmax = max(np.log1p(max(props.values(), default=0.0)), 1e-12)
    norm = matplotlib.colors.Normalize(0.0, vmax)
    cm = plt.get_cmap(cmap)
    fig, ax = plt.subplots(figsize=(6, 5))
    patches, pcol, lines, lcol = [], [], [], []
    for e in ents:
        val = np.log1p(props.get(e.id, 0.0))
        if e.is_polygon:
            for sign, ring in zip(e.signs, e.parts):
                if sign > 0:
                    patches.append(MplPolygon(ring, closed=True))
                    pcol.append(val)
        else:
            lines.append(e.parts[0])
            lcol.append(val)
    if patches:
        pc = PatchCollection(patches, cmap=cm, norm=norm, edgecolor="k", linewidth=0.5)
        pc.set_array(np.array(pcol))
        ax.add_collection(pc)
    if lines:
        lc = LineCollection(lines, cmap=cm, norm=norm, linewidth=3)
        lc.set_array(np.array(lcol))
        ax.add_collection(lc)
    for e in ents:
        cx, cy = e.centroid if e.is_polygon else e.parts[0].mean(axis=0)
        ax.annotate(str(e.id), (cx, cy), fontsize=6, ha="center", va="center")
    ax.autoscale_view()
    ax.set_aspect("equal")
    fig.colorbar(plt.cm.ScalarMappable(norm=norm, cmap=cm), ax=ax, label="log(1 + proportion)")
    _save(fig, path)


def plot_dendrogram(tree, path, labels=None) -> None:
    """Single-linkage dendrogram from a ``[[left, right, height], ...]`` merge list."""
    from scipy.cluster.hierarchy import dendrogram

    merges = _load_json(tree)
    n = len(merges) + 1
    size = [1] * n
    Z = []
    for l, r, h in merges:
        s = size[int(l)] + size[int(r)]
        size.append(s)
        Z.append([l, r, h, s])
    fig, ax = plt.subplots(figsize=(10, 4))
    if Z:
        dendrogram(np.array(Z, dtype=float), ax=ax, labels=labels, color_threshold=0, leaf_font_size=5)
    ax.set_ylabel("merge height")
    _save(fig, path)


def plot_lct(lct_csv, path) -> None:
    """LCT against coverage level, one line per class and tolerance."""
    curves = defaultdict(list)
    with open(lct_csv, newline="") as fh:
        for row in csv.DictReader(fh):
            curves[(row["class"], float(row["xi"]))].append((float(row["c"]), int(row["lct"])))
    fig, ax = plt.subplots(figsize=(6, 4))
    for (cls, xi), pts in sorted(curves.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", ms=3, label=f"{cls}, xi={xi:g}")
    ax.set_xlabel("coverage level c")
    ax.set_ylabel("last-crossing time (days)")
    ax.legend(fontsize=7)
    _save(fig, path)


def plot_matrix(matrix_csv, path, order=None) -> None:
    """Heat map of a day-by-day distance matrix, optionally reordered."""
    with open(matrix_csv, newline="") as fh:
        rows = list(csv.reader(fh))
    D = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    if order is not None:
        D = D[np.ix_(order, order)]
    fig, ax = plt.subplots(figsize=(5, 5))
    im = ax.imshow(D, cmap="magma", interpolation="nearest")
    fig.colorbar(im, ax=ax, label="distance")
    _save(fig, path)
