"""Command-line front end: ``pnactivity <subcommand> [--config cfg.json] [flags]``.

Every subcommand writes its outputs and a ``manifest.json`` into ``--out``.
Settings come from built-in defaults, then the JSON config, then flags.
Exit codes: 0 ok, 1 usage, 2 data validation, 3 infeasible computation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .activity_space import InfeasibleError, composed_space, level_space, weighted_level_space
from .clustering import (day_patterns, distance_matrix, flag_outliers, single_linkage, write_labels_csv,
                         write_matrix_csv, write_tree_json)
from .estimation import DEFAULT_THRESHOLD, MODES, TimeUseTable, estimate, normalize_by_class
from .geometry import GeometryError, PNSpace, entities_from_geojson, entities_to_geojson, load_pnspace
from .ingest import (DataValidationError, aggregate_polygons, apply_thinning, bounding_box_search, parse_gps,
                     privacy_reshape_polygons, privacy_thin_roads, road_coverage, select_polygons,
                     write_decisions_csv, write_gps_csv)
from .simulator import Scenario, ScenarioError, simulate_study, write_truth_csv

log = logging.getLogger("pnactivity")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE = 0, 1, 2, 3

DEFAULTS = {
    "ingest": {"gps": None, "polygons": None, "roads": [], "theta": 0.05, "r": 0.001, "d0": 150.0,
               "cutoff": 0.0, "day_length": 86400.0, "meters_per_unit": 1.0},
    "estimate": {"gps": None, "map": [], "mode": "adjusted", "epsilon": DEFAULT_THRESHOLD,
                 "day_length": 86400.0, "meters_per_unit": 1.0},
    "activity-space": {"table": None, "gamma": [0.5, 0.7, 0.9, 0.95, 0.99], "cls": "composed",
                       "weights": None},
    "cluster": {"gps": None, "map": [], "epsilon": DEFAULT_THRESHOLD, "tau": 0.01, "k": 5, "alpha": 2.0,
                "match_cost": False, "day_length": 86400.0, "meters_per_unit": 1.0},
    "stability": {"gps": None, "map": [], "levels": [round(0.05 * i, 2) for i in range(1, 21)],
                  "xi": [0.0, 0.1, 0.25], "classes": ["polygon", "segment"], "mode": "weighted",
                  "epsilon": DEFAULT_THRESHOLD, "day_length": 86400.0, "meters_per_unit": 1.0},
    "simulate": {"scenario": None, "seed": None, "n": None, "m": None, "sigma": None, "timestamps": None,
                 "replicate": 0},
    "evaluate": {"scenario": None, "spacing": "realistic", "n": [7, 30, 90], "m": [159, 479, 1439],
                 "sigma": 0.1, "epsilon": 0.1, "R": 50, "seed": 0, "convergence": False},
    "privacy-render": {"gps": None, "roads": None, "layers": [], "polygons": None, "r0": 50.0, "q": 0.85,
                       "side": 50.0, "seed": 0, "tol": 1e-9, "day_length": 86400.0},
    "plot": {"table": None, "map": None, "tree": None, "lct": None, "matrix": None},
}
# settings that do not influence results and stay out of the manifest hash
_UNHASHED = {"out", "threads", "config", "verbose"}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    p = _Parser(prog="pnactivity", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", default=S, help="JSON config or a previous manifest.json")
        sp.add_argument("--out", default=S, help="output directory (default: out/<command>)")
        sp.add_argument("--threads", type=int, default=S, help="cap on worker threads")
        sp.add_argument("-v", "--verbose", action="store_true", default=S)
        return sp

    sp = common(sub.add_parser("ingest", help="parse GPS and select the PN space from GIS layers"))
    sp.add_argument("--gps", default=S)
    sp.add_argument("--polygons", default=S, help="polygon GeoJSON layer")
    sp.add_argument("--roads", action="append", default=S, help="road layer, repeat in class order")
    for name in ("theta", "r", "d0", "cutoff", "day-length", "meters-per-unit"):
        sp.add_argument(f"--{name}", type=float, default=S)

    sp = common(sub.add_parser("estimate", help="time-use table from GPS and a PN space"))
    sp.add_argument("--gps", default=S)
    sp.add_argument("--map", action="append", default=S, help="GeoJSON or CSV entity layer (repeatable)")
    sp.add_argument("--mode", choices=MODES, default=S)
    sp.add_argument("--epsilon", type=float, default=S, help="adjustment distance threshold")
    sp.add_argument("--day-length", type=float, default=S)
    sp.add_argument("--meters-per-unit", type=float, default=S)

    sp = common(sub.add_parser("activity-space", help="level-gamma activity spaces of a time-use table"))
    sp.add_argument("--table", default=S, help="time_use.json from estimate")
    sp.add_argument("--gamma", action="append", type=_floats, default=S, help="level(s); repeat or comma-separate")
    sp.add_argument("--class", dest="cls", choices=("all", "polygon", "segment", "composed"), default=S)
    sp.add_argument("--weights", default=S, help="JSON {entity id: weight} for the weighted variant")

    sp = common(sub.add_parser("cluster", help="cluster days by time-weighted edit distance"))
    sp.add_argument("--gps", default=S)
    sp.add_argument("--map", action="append", default=S)
    sp.add_argument("--epsilon", type=float, default=S)
    sp.add_argument("--tau", type=float, default=S)
    sp.add_argument("--k", type=int, default=S)
    sp.add_argument("--alpha", type=float, default=S)
    sp.add_argument("--match-cost", action="store_true", default=S, help="charge |z - z'| on matched labels")
    sp.add_argument("--day-length", type=float, default=S)
    sp.add_argument("--meters-per-unit", type=float, default=S)

    sp = common(sub.add_parser("stability", help="cumulative activity spaces and last-crossing times"))
    sp.add_argument("--gps", default=S)
    sp.add_argument("--map", action="append", default=S)
    sp.add_argument("--levels", type=_floats, default=S)
    sp.add_argument("--xi", type=_floats, default=S)
    sp.add_argument("--classes", type=lambda s: s.split(","), default=S)
    sp.add_argument("--mode", choices=MODES, default=S)
    sp.add_argument("--epsilon", type=float, default=S)
    sp.add_argument("--day-length", type=float, default=S)
    sp.add_argument("--meters-per-unit", type=float, default=S)

    sp = common(sub.add_parser("simulate", help="simulate a study from a scenario"))
    sp.add_argument("--scenario", default=S, help="scenario JSON (default: built-in synthetic map)")
    sp.add_argument("--seed", type=int, default=S)
    sp.add_argument("--n", type=int, default=S)
    sp.add_argument("--m", type=int, default=S)
    sp.add_argument("--sigma", type=float, default=S)
    sp.add_argument("--timestamps", choices=("even", "realistic"), default=S)
    sp.add_argument("--replicate", type=int, default=S)

    sp = common(sub.add_parser("evaluate", help="Monte Carlo comparison of the estimators"))
    sp.add_argument("--scenario", default=S)
    sp.add_argument("--spacing", choices=("even", "realistic"), default=S)
    sp.add_argument("--n", type=_ints, default=S)
    sp.add_argument("--m", type=_ints, default=S)
    sp.add_argument("--sigma", type=float, default=S)
    sp.add_argument("--epsilon", type=float, default=S)
    sp.add_argument("--R", type=int, default=S)
    sp.add_argument("--seed", type=int, default=S)
    sp.add_argument("--convergence", action="store_true", default=S, help="also fit the log-log slope in n")

    sp = common(sub.add_parser("privacy-render", help="thinned and reshaped layers for display only"))
    sp.add_argument("--gps", default=S)
    sp.add_argument("--roads", default=S, help="primary road layer")
    sp.add_argument("--layers", action="append", default=S, help="further road layers")
    sp.add_argument("--polygons", default=S)
    for name in ("r0", "q", "side", "tol", "day-length"):
        sp.add_argument(f"--{name}", type=float, default=S)
    sp.add_argument("--seed", type=int, default=S)

    sp = common(sub.add_parser("plot", help="SVG figures from serialized outputs"))
    sp.add_argument("--table", default=S, help="time_use.json")
    sp.add_argument("--map", default=S, help="GeoJSON map for the time-use figure")
    sp.add_argument("--tree", default=S, help="tree.json from cluster")
    sp.add_argument("--lct", default=S, help="lct.csv from stability")
    sp.add_argument("--matrix", default=S, help="matrix.csv from cluster")
    return p


def resolve_config(command: str, flags: dict) -> dict:
    cfg = dict(DEFAULTS[command])
    path = flags.get("config")
    if path:
        with open(path) as fh:
            loaded = json.load(fh)
        if "config" in loaded and "command" in loaded:
            loaded = loaded["config"]
        unknown = set(loaded) - set(cfg) - _UNHASHED
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(loaded)
    if command == "activity-space" and "gamma" in flags:
        flags = dict(flags, gamma=[g for group in flags["gamma"] for g in group])
    cfg.update({k: v for k, v in flags.items() if k != "command"})
    cfg.setdefault("out", os.path.join("out", command))
    cfg.setdefault("threads", 1)
    return cfg


def _validate(command: str, cfg: dict) -> None:
    def need(*keys):
        for k in keys:
            if not cfg.get(k):
                raise UsageError(f"{command}: --{k.replace('_', '-')} is required")

    def positive(*keys):
        for k in keys:
            if cfg[k] is not None and cfg[k] <= 0:
                raise UsageError(f"{command}: {k} must be positive")

    if cfg.get("threads", 1) < 1:
        raise UsageError("--threads must be at least 1")
    if command == "ingest":
        need("gps")
        positive("theta", "r", "d0", "day_length", "meters_per_unit")
        if cfg["cutoff"] < 0:
            raise UsageError("cutoff must be nonnegative")
    elif command in ("estimate", "cluster", "stability"):
        need("gps", "map")
        positive("day_length", "meters_per_unit")
        if cfg["epsilon"] < 0:
            raise UsageError("epsilon must be nonnegative")
        if command == "cluster" and (cfg["k"] < 1 or cfg["tau"] < 0):
            raise UsageError("need k >= 1 and tau >= 0")
        if command == "stability":
            if any(not 0 < c <= 1 for c in cfg["levels"]) or any(x < 0 for x in cfg["xi"]):
                raise UsageError("levels must lie in (0, 1] and xi must be nonnegative")
            if set(cfg["classes"]) - {"polygon", "segment"}:
                raise UsageError("classes are polygon and/or segment")
    elif command == "activity-space":
        need("table")
        if not cfg["gamma"] or any(not 0 < g <= 1 for g in cfg["gamma"]):
            raise UsageError("gamma values must lie in (0, 1]")
    elif command == "evaluate":
        if cfg["R"] < 1 or min(cfg["n"]) < 1 or min(cfg["m"]) < 2 or cfg["sigma"] < 0 or cfg["epsilon"] < 0:
            raise UsageError("need R >= 1, n >= 1, m >= 2, sigma >= 0, epsilon >= 0")
        if cfg["convergence"] and len(cfg["n"]) < 3:
            raise UsageError("convergence needs at least three n values")
    elif command == "privacy-render":
        need("gps")
        positive("r0", "side")
        if not 0 <= cfg["q"] <= 1:
            raise UsageError("q must lie in [0, 1]")
    elif command == "plot":
        if not any(cfg[k] for k in ("table", "tree", "lct", "matrix")):
            raise UsageError("plot needs at least one of --table, --tree, --lct, --matrix")
        if cfg["table"] and not cfg["map"]:
            raise UsageError("--table needs --map")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out: Path, command: str, cfg: dict, outputs: list[str], extra: dict | None = None) -> None:
    import scipy

    hashed = {k: v for k, v in sorted(cfg.items()) if k not in _UNHASHED}
    blob = json.dumps(hashed, sort_keys=True).encode()
    manifest = {
        "command": command,
        "config": hashed,
        "config_hash": hashlib.sha256(blob).hexdigest(),
        "seed": cfg.get("seed"),
        "versions": {"pnactivity": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "outputs": {name: _sha256(out / name) for name in sorted(outputs)},
    }
    if extra:
        manifest.update(extra)
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _dump(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _load_days(cfg):
    days = parse_gps(cfg["gps"], cfg["day_length"])
    if not days:
        raise DataValidationError("no usable days in the GPS file")
    return days


def _load_map(cfg) -> PNSpace:
    paths = cfg["map"] if isinstance(cfg["map"], list) else [cfg["map"]]
    return load_pnspace(*paths, meters_per_unit=cfg["meters_per_unit"])


# -- subcommands --------------------------------------------------------------

def cmd_ingest(cfg, out: Path):
    days = _load_days(cfg)
    xy = np.vstack([d.xy for d in days])
    marks = np.concatenate([d.marked().marks for d in days])
    write_gps_csv(days, out / "records.csv", cfg["day_length"])
    box = bounding_box_search(xy, marks, cfg["theta"], cfg["r"])
    inside = box.contains(xy)
    _dump(out / "bbox.json", {"xmin": box.xmin, "ymin": box.ymin, "xmax": box.xmax, "ymax": box.ymax,
                              "weight": box.weight, "share": box.weight / marks.sum()})
    outputs = ["records.csv", "bbox.json"]
    scale = cfg["meters_per_unit"]
    d0 = cfg["d0"] / scale
    kept_xy = xy[inside]
    entities = []
    coverage = []
    network: list = []
    for layer in cfg["roads"]:
        network = network + entities_from_geojson(layer)
        coverage.append({"layer": str(layer), "segments": len(network),
                         "coverage": road_coverage(kept_xy, network, d0)})
    if cfg["roads"]:
        _dump(out / "coverage.json", coverage)
        outputs.append("coverage.json")
        entities.extend(network)
    if cfg["polygons"]:
        selected = select_polygons(kept_xy, entities_from_geojson(cfg["polygons"]), d0)
        merged = aggregate_polygons(selected, cfg["cutoff"] / scale)
        entities.extend(merged)
        log.info("retained %d polygons, %d after aggregation", len(selected), len(merged))
    if entities:
        _dump(out / "pn.geojson", entities_to_geojson(entities))
        outputs.append("pn.geojson")
    return outputs, {"days": len(days), "records": int(len(xy))}


def cmd_estimate(cfg, out: Path):
    days = [d.marked() for d in _load_days(cfg)]
    pn = _load_map(cfg)
    eps = cfg["epsilon"] / pn.meters_per_unit
    table = estimate(days, pn, cfg["mode"], eps, cfg["threads"])
    table.to_csv(out / "time_use.csv")
    _dump(out / "time_use.json", table.to_json())
    return ["time_use.csv", "time_use.json"], {"days": len(days)}


def cmd_activity_space(cfg, out: Path):
    table = TimeUseTable.from_json(cfg["table"])
    weights = None
    if cfg["weights"]:
        with open(cfg["weights"]) as fh:
            weights = json.load(fh)
    results = []
    classes = normalize_by_class(table)
    for g in cfg["gamma"]:
        if weights is not None:
            if cfg["cls"] == "composed":
                for name, tab, empty in (("polygon", classes.polygons, classes.polygon_empty),
                                         ("segment", classes.roads, classes.road_empty)):
                    if not empty:
                        results.append(weighted_level_space(tab, weights, g, name).to_json())
                continue
            results.append(weighted_level_space(_class_map(table, classes, cfg["cls"]), weights, g,
                                                cfg["cls"]).to_json())
        elif cfg["cls"] == "composed":
            space = composed_space(classes, g)
            entry = space.to_json()
            entry["parts"] = {k: v.to_json() for k, v in space.parts.items()}
            results.append(entry)
        else:
            results.append(level_space(_class_map(table, classes, cfg["cls"]), g, cfg["cls"]).to_json())
    _dump(out / "activity_space.json", results)
    return ["activity_space.json"], None


def _class_map(table, classes, cls):
    if cls == "all":
        return table.as_dict()
    tab = classes.polygons if cls == "polygon" else classes.roads
    if not tab:
        raise InfeasibleError(f"no time recorded in class {cls!r}")
    return tab


def cmd_cluster(cfg, out: Path):
    days = [d.marked() for d in _load_days(cfg)]
    pn = _load_map(cfg)
    eps = cfg["epsilon"] / pn.meters_per_unit
    pats = day_patterns(days, pn, eps, cfg["tau"])
    if len(pats) < 2:
        raise DataValidationError("clustering needs at least two days")
    D = distance_matrix(pats, cfg["match_cost"], cfg["threads"])
    tree = single_linkage(D)
    k = min(cfg["k"], len(pats))
    labels = tree.labels(k=k)
    day_ids = [p.day for p in pats]
    outliers = {day_ids[i] for i in flag_outliers(D, cfg["alpha"])} if len(pats) >= 3 else set()
    write_matrix_csv(out / "matrix.csv", D, day_ids)
    write_tree_json(out / "tree.json", tree)
    write_labels_csv(out / "labels.csv", day_ids, labels, outliers)
    return ["matrix.csv", "tree.json", "labels.csv"], {"days": len(pats), "outliers": sorted(outliers)}


def cmd_stability(cfg, out: Path):
    from .stability import lct_curve, write_lct_csv, write_ratios_csv

    days = [d.marked() for d in _load_days(cfg)]
    pn = _load_map(cfg)
    eps = cfg["epsilon"] / pn.meters_per_unit
    series = []
    for cls in cfg["classes"]:
        _, s = lct_curve(days, pn, cls, cfg["levels"], 0.0, cfg["mode"], eps, cfg["threads"])
        series.extend(s)
    write_ratios_csv(out / "ratios.csv", series)
    write_lct_csv(out / "lct.csv", series, cfg["xi"])
    return ["ratios.csv", "lct.csv"], {"days": len(days)}


def _scenario(cfg) -> Scenario:
    sc = Scenario.load(cfg["scenario"]) if cfg["scenario"] else Scenario.default()
    over = {k: cfg[k] for k in ("seed", "n", "m", "sigma", "timestamps") if cfg.get(k) is not None}
    return sc.replace(**over) if over else sc


def cmd_simulate(cfg, out: Path):
    sc = _scenario(cfg)
    study = simulate_study(sc, cfg["replicate"], workers=cfg["threads"])
    write_gps_csv(study.days, out / "gps.csv")
    write_truth_csv(study, out / "truth.csv")
    _dump(out / "map.geojson", entities_to_geojson(sc.pn.entities))
    _dump(out / "scenario.json", sc.to_dict())
    truth = dict(zip(sc.pn.ids, study.true_table().tolist()))
    expected = dict(zip(sc.pn.ids, study.expected_table().tolist()))
    diag = {
        "days": study.n,
        "patterns": {p.name: sum(d.pattern == p.name for d in study.days) for p in sc.patterns},
        "missed_visits": {str(d.day): d.missed_visits for d in study.days if d.missed_visits},
        "resampled_days": sum(d.resampled for d in study.days),
        "reference_timestamps": ("synthetic library" if "csv" not in sc.reference else sc.reference["csv"])
        if sc.timestamps == "realistic" else None,
        "realised_table": truth,
        "expected_table": expected,
    }
    _dump(out / "diagnostics.json", diag)
    return ["gps.csv", "truth.csv", "map.geojson", "scenario.json", "diagnostics.json"], {"seed": sc.seed}


def cmd_evaluate(cfg, out: Path):
    from .evaluation import ExperimentGrid, fit_slope, run_comparison, write_crossings_csv, write_results_csv

    sc = Scenario.load(cfg["scenario"]) if cfg["scenario"] else Scenario.default()
    grid = ExperimentGrid(tuple(cfg["n"]), tuple(cfg["m"]), cfg["sigma"], cfg["spacing"], cfg["epsilon"],
                          cfg["R"], cfg["seed"])
    cells = run_comparison(grid, sc, cfg["threads"])
    write_results_csv(out / "results.csv", cells)
    write_crossings_csv(out / "crossings.csv", cells, sc.pn.ids)
    outputs = ["results.csv", "crossings.csv"]
    if cfg["convergence"]:
        slopes = {}
        for m in cfg["m"]:
            row = [c for c in cells if c.m == m]
            slopes[str(m)] = {mode: fit_slope([c.n for c in row], [c.rmise[mode] for c in row])
                              for mode in MODES}
        _dump(out / "convergence.json", slopes)
        outputs.append("convergence.json")
    return outputs, None


def cmd_privacy_render(cfg, out: Path):
    xy = np.vstack([d.xy for d in _load_days(cfg)])
    outputs = []
    if cfg["roads"]:
        primary = entities_from_geojson(cfg["roads"])
        shown, dec = privacy_thin_roads(primary, xy, cfg["r0"], cfg["q"], cfg["seed"])
        _dump(out / "roads_display.geojson", entities_to_geojson(shown))
        write_decisions_csv(dec, out / "decisions.csv")
        outputs += ["roads_display.geojson", "decisions.csv"]
        for k, layer in enumerate(cfg["layers"], start=1):
            ents = entities_from_geojson(layer)
            shown_k, dec_k = apply_thinning(ents, primary, dec, xy, cfg["r0"], cfg["q"], cfg["seed"] + k,
                                            cfg["tol"])
            _dump(out / f"layer{k}_display.geojson", entities_to_geojson(shown_k))
            write_decisions_csv(dec_k, out / f"layer{k}_decisions.csv")
            outputs += [f"layer{k}_display.geojson", f"layer{k}_decisions.csv"]
    if cfg["polygons"]:
        squares = privacy_reshape_polygons(entities_from_geojson(cfg["polygons"]), cfg["side"])
        _dump(out / "polygons_display.geojson", entities_to_geojson(squares))
        outputs.append("polygons_display.geojson")
    return outputs, None


def cmd_plot(cfg, out: Path):
    from . import plotting

    outputs = []
    if cfg["table"]:
        plotting.plot_time_use(cfg["table"], cfg["map"], out / "time_use.svg")
        outputs.append("time_use.svg")
    if cfg["tree"]:
        plotting.plot_dendrogram(cfg["tree"], out / "dendrogram.svg")
        outputs.append("dendrogram.svg")
    if cfg["lct"]:
        plotting.plot_lct(cfg["lct"], out / "lct.svg")
        outputs.append("lct.svg")
    if cfg["matrix"]:
        plotting.plot_matrix(cfg["matrix"], out / "matrix.svg")
        outputs.append("matrix.svg")
    return outputs, None


COMMANDS = {
    "ingest": cmd_ingest, "estimate": cmd_estimate, "activity-space": cmd_activity_space,
    "cluster": cmd_cluster, "stability": cmd_stability, "simulate": cmd_simulate,
    "evaluate": cmd_evaluate, "privacy-render": cmd_privacy_render, "plot": cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = vars(ns)
    command = flags.pop("command")
    logging.basicConfig(level=logging.INFO if flags.get("verbose") else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(command, flags)
        _validate(command, cfg)
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        outputs, extra = COMMANDS[command](cfg, out)
        write_manifest(out, command, cfg, outputs, extra)
    except (UsageError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"pnactivity {command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleError as exc:
        print(f"pnactivity {command}: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DataValidationError, GeometryError, ScenarioError, ValueError) as exc:
        print(f"pnactivity {command}: invalid data: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(out / "manifest.json")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
