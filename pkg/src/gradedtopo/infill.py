"""Mapping of a grading field onto a manufacturing grid of square infill
holes.

Each grid cell averages the nodal grading values it contains and receives a
square hole whose area fraction is one minus that average, so the per-cell
solid fraction equals the averaged grading value and the global material
index is conserved up to cell-averaging error.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .io import FieldDump

_FULL_DENSITY_EPS = 1e-9


@dataclass(frozen=True)
class InfillGrid:
    """Cell-averaged grading values and hole sizes on a square grid.

    ``chi_avg`` and ``hole_side`` are (n_cells_y, n_cells_x) arrays; hole
    sides satisfy hole = cell * sqrt(max(0, 1 - chi_avg)) and never exceed
    the cell side.
    """

    cell_mm: float
    chi_avg: np.ndarray
    hole_side: np.ndarray

    @property
    def n_cells(self) -> tuple[int, int]:
        return self.chi_avg.shape

    def solid_fraction(self) -> float:
        """Average solid area fraction 1 - (hole/cell)^2 over all cells."""
        return float(np.mean(1.0 - (self.hole_side / self.cell_mm) ** 2))


def infill_map(dump: FieldDump, cell_mm: float) -> InfillGrid:
    """Average a grading-field dump onto cells of the given size.

    The cell must span at least two node spacings in each direction so every
    cell contains interior information.
    """
    if cell_mm <= 0.0:
        raise ValueError(f"cell size must be positive, got {cell_mm}")
    hx = dump.lx / (dump.nx_nodes - 1) if dump.nx_nodes > 1 else dump.lx
    hy = dump.ly / (dump.ny_nodes - 1) if dump.ny_nodes > 1 else dump.ly
    if cell_mm < 2.0 * max(hx, hy):
        raise ValueError(
            f"cell size {cell_mm} mm is below two node spacings "
            f"({2.0 * max(hx, hy):g} mm)")

    ncx = int(np.ceil(dump.lx / cell_mm - 1e-12))
    ncy = int(np.ceil(dump.ly / cell_mm - 1e-12))

    xs = np.arange(dump.nx_nodes) * hx
    ys = np.arange(dump.ny_nodes) * hy
    ix = np.minimum((xs / cell_mm).astype(int), ncx - 1)
    iy = np.minimum((ys / cell_mm).astype(int), ncy - 1)
    cell_of_node = (iy[:, None] * ncx + ix[None, :]).ravel()

    sums = np.bincount(cell_of_node, weights=dump.values, minlength=ncx * ncy)
    counts = np.bincount(cell_of_node, minlength=ncx * ncy)
    chi_avg = (sums / counts).reshape(ncy, ncx)
    chi_avg = np.clip(chi_avg, 0.0, 1.0)

    hole = cell_mm * np.sqrt(np.maximum(0.0, 1.0 - chi_avg))
    hole[chi_avg >= 1.0 - _FULL_DENSITY_EPS] = 0.0
    return InfillGrid(cell_mm=float(cell_mm), chi_avg=chi_avg, hole_side=hole)


def write_infill_csv(path: Path | str, grid: InfillGrid) -> Path:
    path = Path(path)
    ncy, ncx = grid.n_cells
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["cell_i", "cell_j", "chi_avg", "hole_side_mm"])
        for j in range(ncy):
            for i in range(ncx):
                writer.writerow([i, j, f"{grid.chi_avg[j, i]:.12g}",
                                 f"{grid.hole_side[j, i]:.12g}"])
    return path
