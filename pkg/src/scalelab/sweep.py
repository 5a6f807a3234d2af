"""(eta, alpha) grid sweeps: execution, persistence, ridge-slope fit, and
raster heatmaps.

Each lattice cell is an independent training run whose seed is derived
deterministically from the base seed and the cell indices, so the grid is
reproducible cell by cell and may be filled in parallel.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import Dataset
from .rng import derive_seed
from .training import TrainConfig, TrainReport, train

GRID_CSV_HEADER = [
    "log10_eta",
    "log10_alpha",
    "optimizer",
    "train_acc",
    "eval_acc",
    "consistency",
    "diverged",
    "frozen",
    "final_loss",
    "steps_completed",
]


class InsufficientDataError(ValueError):
    """Not enough qualifying grid columns for the requested fit."""


@dataclass(frozen=True)
class SweepSpec:
    etas: tuple  # learning-rate values, typically log10-spaced
    alphas: tuple  # scaling-factor values, typically log10-spaced
    base: TrainConfig
    shared_init: bool = False  # share theta0 across cells instead of per-cell seeds

    def __post_init__(self):
        if len(self.etas) == 0 or len(self.alphas) == 0:
            raise ValueError("sweep lattice must be nonempty")

    @staticmethod
    def log_spaced(
        eta_range: tuple[float, float],
        eta_count: int,
        alpha_range: tuple[float, float],
        alpha_count: int,
        base: TrainConfig,
        shared_init: bool = False,
    ) -> "SweepSpec":
        """Lattice with log10-uniform spacing; ranges are (log10 min, log10 max)."""
        etas = tuple(np.logspace(eta_range[0], eta_range[1], eta_count))
        alphas = tuple(np.logspace(alpha_range[0], alpha_range[1], alpha_count))
        return SweepSpec(etas=etas, alphas=alphas, base=base, shared_init=shared_init)


@dataclass
class SweepGrid:
    spec: SweepSpec
    reports: dict  # (eta_index, alpha_index) -> TrainReport

    def report(self, i_eta: int, i_alpha: int) -> TrainReport:
        return self.reports[(i_eta, i_alpha)]

    def metric_matrix(self, name: str) -> np.ndarray:
        """len(etas) x len(alphas) array of a report field."""
        out = np.empty((len(self.spec.etas), len(self.spec.alphas)))
        for (i, j), rep in self.reports.items():
            out[i, j] = float(getattr(rep, name))
        return out


def cell_config(spec: SweepSpec, i_eta: int, i_alpha: int) -> TrainConfig:
    seed = spec.base.seed if spec.shared_init else derive_seed(spec.base.seed, i_eta, i_alpha)
    return replace(
        spec.base,
        eta=float(spec.etas[i_eta]),
        alpha=float(spec.alphas[i_alpha]),
        seed=seed,
    )


def _run_cell(args):
    spec, i, j, train_set, eval_set = args
    config = cell_config(spec, i, j)
    return (i, j), train(config, train_set, eval_set).report


def sweep(
    spec: SweepSpec,
    train_set: Dataset,
    eval_set: Dataset | None = None,
    threads: int = 1,
) -> SweepGrid:
    """Train every lattice cell; diverged and frozen cells are recorded, not
    raised."""
    cells = [
        (spec, i, j, train_set, eval_set)
        for i in range(len(spec.etas))
        for j in range(len(spec.alphas))
    ]
    reports = {}
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for key, rep in pool.map(_run_cell, cells):
                reports[key] = rep
    else:
        for args in cells:
            key, rep = _run_cell(args)
            reports[key] = rep
    return SweepGrid(spec=spec, reports=reports)


# ---------------------------------------------------------------------------
# Ridge slope: best eta per alpha column, least-squares fit in log-log.


@dataclass
class RidgeFit:
    slope: float
    intercept: float
    points: list  # (log10_alpha, log10_best_eta, best_eval_acc)


def ridge_slope(grid: SweepGrid, accuracy_floor: float = 0.0) -> RidgeFit:
    """Fit log10(best eta) vs log10(alpha) over qualifying alpha columns.

    A column qualifies when at least one non-diverged cell reaches the
    accuracy floor; ties on accuracy go to the smaller eta.
    """
    spec = grid.spec
    points = []
    for j, alpha in enumerate(spec.alphas):
        best = None
        for i, eta in enumerate(spec.etas):
            rep = grid.report(i, j)
            if rep.diverged or rep.eval_accuracy < accuracy_floor:
                continue
            if best is None or rep.eval_accuracy > best[1] + 1e-15:
                best = (eta, rep.eval_accuracy)
        if best is not None:
            points.append((float(np.log10(alpha)), float(np.log10(best[0])), best[1]))
    if len(points) < 3:
        raise InsufficientDataError(
            f"ridge fit needs >= 3 qualifying alpha columns, found {len(points)}"
        )
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    slope, intercept = np.polyfit(xs, ys, 1)
    return RidgeFit(slope=float(slope), intercept=float(intercept), points=points)


# ---------------------------------------------------------------------------
# Persistence: CSV (eta-major row order) + metadata sidecar + PGM heatmaps.


def write_grid_csv(grid: SweepGrid, path) -> None:
    spec = grid.spec
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GRID_CSV_HEADER)
        for i, eta in enumerate(spec.etas):
            for j, alpha in enumerate(spec.alphas):
                rep = grid.report(i, j)
                writer.writerow(
                    [
                        repr(float(np.log10(eta))),
                        repr(float(np.log10(alpha))),
                        spec.base.optimizer,
                        repr(float(rep.train_accuracy)),
                        repr(float(rep.eval_accuracy)),
                        repr(float(rep.consistency)),
                        int(rep.diverged),
                        int(rep.frozen),
                        repr(float(rep.final_loss)),
                        rep.steps_completed,
                    ]
                )


@dataclass
class GridRow:
    log10_eta: float
    log10_alpha: float
    optimizer: str
    train_acc: float
    eval_acc: float
    consistency: float
    diverged: bool
    frozen: bool
    final_loss: float
    steps_completed: int


def read_grid_csv(path) -> list:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != GRID_CSV_HEADER:
            raise ValueError(f"grid CSV header mismatch in {path}: {header}")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(GRID_CSV_HEADER):
                raise ValueError(f"{path}: row {line_no} has {len(row)} fields")
            try:
                rows.append(
                    GridRow(
                        log10_eta=float(row[0]),
                        log10_alpha=float(row[1]),
                        optimizer=row[2],
                        train_acc=float(row[3]),
                        eval_acc=float(row[4]),
                        consistency=float(row[5]),
                        diverged=bool(int(row[6])),
                        frozen=bool(int(row[7])),
                        final_loss=float(row[8]),
                        steps_completed=int(row[9]),
                    )
                )
            except ValueError as exc:
                raise ValueError(f"{path}: row {line_no}: {exc}") from None
    return rows


def rows_to_fit_input(rows: list, accuracy_floor: float = 0.0) -> RidgeFit:
    """Ridge fit straight from persisted CSV rows."""
    columns: dict[float, list] = {}
    for r in rows:
        columns.setdefault(r.log10_alpha, []).append(r)
    points = []
    for log_alpha in sorted(columns):
        best = None
        for r in sorted(columns[log_alpha], key=lambda r: r.log10_eta):
            if r.diverged or r.eval_acc < accuracy_floor:
                continue
            if best is None or r.eval_acc > best[1] + 1e-15:
                best = (r.log10_eta, r.eval_acc)
        if best is not None:
            points.append((log_alpha, best[0], best[1]))
    if len(points) < 3:
        raise InsufficientDataError(
            f"ridge fit needs >= 3 qualifying alpha columns, found {len(points)}"
        )
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    slope, intercept = np.polyfit(xs, ys, 1)
    return RidgeFit(slope=float(slope), intercept=float(intercept), points=points)


DIVERGED_SHADE = 255  # reserved maximum shade: the grids' "white area"


def write_heatmap_pgm(grid: SweepGrid, metric: str, path) -> None:
    """One pixel per cell, binary PGM; values in [0, 1] map to shades 0..254,
    diverged cells take the reserved shade 255."""
    values = grid.metric_matrix(metric)
    diverged = grid.metric_matrix("diverged") > 0.5
    shades = np.clip(np.round(values * 254.0), 0, 254).astype(np.uint8)
    shades[diverged] = DIVERGED_SHADE
    rows, cols = shades.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode())
        fh.write(shades.tobytes())
