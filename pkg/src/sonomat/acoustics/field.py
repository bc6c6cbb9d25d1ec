"""Pressure-field evaluation and field-slice export.

|p| from the linear far-field circular-piston superposition is the haptic
intensity proxy. Slices are sampled at cell centers on a regular grid and can
be exported as plain-text PGM (P2) or CSV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sonomat.acoustics import kernel
from sonomat.acoustics.arrays import PhaseSolution, TransducerArray
from sonomat.geometry import Point3D

MAX_GRID_SAMPLES = 1_000_000

_PLANE_AXES = {"x": ("y", "z"), "y": ("x", "z"), "z": ("x", "y")}


def pressure_at(array: TransducerArray, solution: PhaseSolution, point: Point3D) -> complex:
    """Complex pressure (relative units) at one probe point.

    Raises ValueError when the point coincides with an element center.
    """
    pts = np.array([point.as_tuple()], dtype=np.float64)
    value = kernel.pressure_sum(
        pts,
        array.element_positions(),
        np.asarray(solution.phases, dtype=np.float64),
        np.asarray(solution.amplitudes, dtype=np.float64),
        array.wavenumber,
        array.element_radius,
        array.reference_amplitude,
    )[0]
    if math.isnan(value.real):
        raise ValueError("probe point coincides with an element center")
    return complex(value)


def pressure_at_points(
    array: TransducerArray, solution: PhaseSolution, points: np.ndarray
) -> np.ndarray:
    """Vectorized complex pressure; NaN marks element-coincident points."""
    return kernel.pressure_sum(
        np.ascontiguousarray(points, dtype=np.float64),
        array.element_positions(),
        np.asarray(solution.phases, dtype=np.float64),
        np.asarray(solution.amplitudes, dtype=np.float64),
        array.wavenumber,
        array.element_radius,
        array.reference_amplitude,
    )


@dataclass(frozen=True)
class Grid2D:
    """Row-major |p| samples on a plane slice.

    values[i, j] is the magnitude at (u_coords[j], v_coords[i]); NaN entries
    are "unset" (sample coincided with an element center).
    """

    axis: str            # plane normal: "x", "y" or "z"
    offset: float        # plane coordinate along the normal
    u_coords: np.ndarray
    v_coords: np.ndarray
    values: np.ndarray   # shape (len(v_coords), len(u_coords))

    @property
    def u_axis(self) -> str:
        return _PLANE_AXES[self.axis][0]

    @property
    def v_axis(self) -> str:
        return _PLANE_AXES[self.axis][1]

    @property
    def unset_count(self) -> int:
        return int(np.isnan(self.values).sum())

    def argmax_cell(self) -> tuple[int, int]:
        """(i, j) of the maximum sample, NaN cells excluded."""
        idx = np.nanargmax(self.values)
        return tuple(int(v) for v in np.unravel_index(idx, self.values.shape))


def field_slice(
    array: TransducerArray,
    solution: PhaseSolution,
    plane_axis: str,
    plane_offset: float,
    extent: float,
    resolution: float,
    center: tuple[float, float] | None = None,
) -> Grid2D:
    """Sample |p| on a square slice of side `extent` normal to `plane_axis`.

    Samples sit at cell centers of an n x n grid (n = round(extent/res)),
    aligned so that sample index (n//2, n//2) lands exactly on `center`
    (default: the solution focus projected onto the plane). Cells coinciding
    with an element center are NaN ("unset").
    """
    if plane_axis not in _PLANE_AXES:
        raise ValueError(f"plane axis must be one of x, y, z; got {plane_axis!r}")
    if resolution <= 0:
        raise ValueError("resolution must be > 0")
    n = max(1, round(extent / resolution))
    if n * n > MAX_GRID_SAMPLES:
        raise ValueError(f"grid of {n}x{n} samples exceeds the {MAX_GRID_SAMPLES} limit")

    u_name, v_name = _PLANE_AXES[plane_axis]
    focus = solution.focus.as_tuple()
    by_name = dict(zip("xyz", focus))
    if center is None:
        center = (by_name[u_name], by_name[v_name])

    u = center[0] + (np.arange(n) - n // 2) * resolution
    v = center[1] + (np.arange(n) - n // 2) * resolution
    uu, vv = np.meshgrid(u, v)
    points = np.empty((n * n, 3), dtype=np.float64)
    cols = {u_name: uu.ravel(), v_name: vv.ravel(), plane_axis: np.full(n * n, plane_offset)}
    points[:, 0] = cols["x"]
    points[:, 1] = cols["y"]
    points[:, 2] = cols["z"]

    values = np.abs(pressure_at_points(array, solution, points)).reshape(n, n)
    return Grid2D(axis=plane_axis, offset=plane_offset, u_coords=u, v_coords=v, values=values)


def grid_to_pgm(grid: Grid2D) -> str:
    """Plain-text PGM (P2), linear mapping max -> 255, NaN cells -> 0.

    Rows run top to bottom in *descending* v (image convention).
    """
    finite = grid.values[np.isfinite(grid.values)]
    peak = float(finite.max()) if finite.size and finite.max() > 0 else 0.0
    ny, nx = grid.values.shape
    lines = [
        "P2",
        f"# {grid.u_axis}{grid.v_axis}-slice at {grid.axis}={grid.offset:.9g};"
        f" linear map max={peak:.9g} -> 255; unset -> 0",
        f"{nx} {ny}",
        "255",
    ]
    for i in range(ny - 1, -1, -1):
        row = grid.values[i]
        pixels = [
            "0" if (not math.isfinite(val) or peak == 0.0) else str(round(255 * val / peak))
            for val in row
        ]
        lines.append(" ".join(pixels))
    return "\n".join(lines) + "\n"


def grid_to_csv(grid: Grid2D) -> str:
    """CSV rows (u, v, magnitude) with 9 significant digits; NaN -> 'nan'."""
    lines = [f"{grid.u_axis},{grid.v_axis},magnitude"]
    for i, v in enumerate(grid.v_coords):
        for j, u in enumerate(grid.u_coords):
            val = grid.values[i, j]
            mag = "nan" if not math.isfinite(val) else f"{val:.9g}"
            lines.append(f"{u:.9g},{v:.9g},{mag}")
    return "\n".join(lines) + "\n"


def write_grid(grid: Grid2D, path: str) -> None:
    """Write PGM or CSV depending on the file suffix."""
    text = grid_to_pgm(grid) if path.endswith(".pgm") else grid_to_csv(grid)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
