"""Monte Carlo comparison of the naive, weighted and adjusted estimators."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .estimation import MODES, estimate
from .simulator import Scenario, simulate_study

RESULT_FIELDS = ["spacing", "n", "m", "epsilon", "naive", "weighted", "adjusted",
                 "se_naive", "se_weighted", "se_adjusted", "R"]


def squared_errors(estimates, truths) -> np.ndarray:
    """Per-replicate sum over entities of squared errors."""
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truths, dtype=float)
    if est.shape != tru.shape:
        raise ValueError("estimates and truths must have matching shapes")
    if est.ndim == 1:
        est, tru = est[None], tru[None]
    return ((est - tru) ** 2).sum(axis=1)


def rmise(estimates, truths) -> float:
    """sqrt of the mean over replicates of the summed squared entity errors."""
    return float(math.sqrt(squared_errors(estimates, truths).mean()))


def rmise_se(sq: np.ndarray) -> tuple[float, float]:
    """RMISE and its delta-method standard error from per-replicate squared errors."""
    sq = np.asarray(sq, dtype=float)
    mise = sq.mean()
    r = math.sqrt(mise)
    if len(sq) < 2 or r == 0:
        return r, 0.0
    return r, float(sq.std(ddof=1) / math.sqrt(len(sq)) / (2 * r))


@dataclass(frozen=True)
class ExperimentGrid:
    ns: tuple = (7, 30, 90)
    ms: tuple = (159, 479, 1439)
    sigma: float = 0.1
    spacing: str = "realistic"
    epsilon: float = 0.1
    R: int = 50
    seed: int = 0
    modes: tuple = MODES

    def __post_init__(self):
        if self.R < 1 or min(self.ns) < 1 or min(self.ms) < 2 or self.sigma < 0 or self.epsilon < 0:
            raise ValueError("grid values must be positive and R >= 1")


@dataclass
class CellResult:
    spacing: str
    n: int
    m: int
    epsilon: float
    R: int
    rmise: dict
    se: dict
    sq: dict = field(repr=False)
    crossings: np.ndarray | None = field(default=None, repr=False)

    def row(self) -> dict:
        out = {"spacing": self.spacing, "n": self.n, "m": self.m, "epsilon": self.epsilon, "R": self.R}
        for mode in MODES:
            out[mode] = self.rmise.get(mode, float("nan"))
            out["se_" + mode] = self.se.get(mode, float("nan"))
        return out


def replicate_errors(scenario: Scenario, replicate: int, modes: Sequence[str] = MODES,
                     epsilon: float = 0.1) -> tuple[dict, np.ndarray]:
    """Squared error of each estimator for one simulated study, and its crossing counts.

    The target is the expected occupation given the study's calendar, so the
    error includes both measurement error and day-to-day variability.
    """
    study = simulate_study(scenario, replicate)
    truth = study.expected_table()
    days = study.marked_days()
    out = {}
    for mode in modes:
        est = estimate(days, scenario.pn, mode, epsilon).proportions
        out[mode] = float(((est - truth) ** 2).sum())
    return out, study.crossings()


def run_cell(scenario: Scenario, R: int, modes: Sequence[str] = MODES, epsilon: float = 0.1,
             workers: int | None = None) -> CellResult:
    def one(r):
        return replicate_errors(scenario, r, modes, epsilon)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            res = list(ex.map(one, range(R)))
    else:
        res = [one(r) for r in range(R)]
    sq = {mode: np.array([r[0][mode] for r in res]) for mode in modes}
    stats = {mode: rmise_se(v) for mode, v in sq.items()}
    crossings = np.sum([r[1] for r in res], axis=0)
    return CellResult(scenario.timestamps, scenario.n, scenario.m, epsilon, R,
                      {k: v[0] for k, v in stats.items()}, {k: v[1] for k, v in stats.items()}, sq, crossings)


def run_comparison(grid: ExperimentGrid, scenario: Scenario | None = None,
                   workers: int | None = None) -> list[CellResult]:
    """RMISE of every estimator in every (n, m) cell of the grid.

    The noise scale and the adjustment threshold are both set to ``grid.sigma``
    and ``grid.epsilon`` respectively; each cell reuses the replicate streams
    of ``grid.seed``.
    """
    base = scenario or Scenario.default()
    cells = []
    for n in grid.ns:
        for m in grid.ms:
            sc = base.replace(n=n, m=m, sigma=grid.sigma, timestamps=grid.spacing, seed=grid.seed)
            cells.append(run_cell(sc, grid.R, grid.modes, grid.epsilon, workers))
    return cells


def write_results_csv(path, cells: Sequence[CellResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, RESULT_FIELDS)
        w.writeheader()
        for c in cells:
            w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in c.row().items()})


def write_crossings_csv(path, cells: Sequence[CellResult], ids: Sequence) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["spacing", "n", "m", "entity_id", "crossings", "R"])
        for c in cells:
            for eid, k in zip(ids, c.crossings):
                w.writerow([c.spacing, c.n, c.m, eid, int(k), c.R])


def fit_slope(ns: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against log(ns)."""
    if len(ns) < 3:
        raise ValueError("need at least three n values")
    x, y = np.log(np.asarray(ns, dtype=float)), np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def convergence_check(ns: Sequence[int] = (7, 30, 90), m: int = 1439, sigma: float = 0.01, R: int = 50,
                      seed: int = 0, spacing: str = "even", mode: str = "weighted",
                      scenario: Scenario | None = None, workers: int | None = None) -> tuple[float, list[float]]:
    """Slope of log RMISE on log n for one estimator; about -1/2 when day-to-day variability dominates."""
    grid = ExperimentGrid(tuple(ns), (m,), sigma, spacing, sigma, R, seed, (mode,))
    cells = run_comparison(grid, scenario, workers)
    vals = [c.rmise[mode] for c in cells]
    return fit_slope(ns, vals), vals
