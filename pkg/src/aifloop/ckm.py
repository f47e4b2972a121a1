"""Position-dependent observation-variance maps.

The tracking system localizes the entity from radio measurements whose
accuracy depends on where the entity is and how many subcarriers k are
allocated to it. Two map flavors provide the per-axis observation variance
sigma_d^2(l, k):

* ``AnalyticCkm``: a smooth synthetic field, floor plus isotropic Gaussian
  bumps, scaled by (k_ref / k)^gamma in the allocation,
* ``GridCkm``: a raster fitted from sampled variances, stored in log domain
  and queried by bilinear interpolation between cell centers.

``fit_grid`` builds a GridCkm from samples; ``save_grid``/``load_grid``
serialize it to a plain-text format that round-trips bit exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import CkmFormatError, ContractViolation, UnknownSensingConfig

__all__ = [
    "GaussianBump",
    "AnalyticCkm",
    "GridCkm",
    "VarianceSample",
    "fit_grid",
    "save_grid",
    "load_grid",
    "sample_field",
    "save_samples_csv",
    "load_samples_csv",
]


@dataclass(frozen=True)
class GaussianBump:
    """Isotropic variance bump: amp_d * exp(-|l - center|^2 / (2 width^2))."""

    center: tuple[float, float]
    amp: tuple[float, float]
    width: float


@dataclass(frozen=True)
class AnalyticCkm:
    """Smooth synthetic variance field with bandwidth scaling.

    Per-axis variance at position l with allocation k:
        sigma_d^2(l, k) = (floor_d + sum_g bump_g,d(l)) * (k_ref / k)^gamma
    """

    floor: tuple[float, float]
    bumps: tuple[GaussianBump, ...]
    gamma: float = 2.0
    k_ref: int = 200

    def __post_init__(self):
        if min(self.floor) <= 0.0:
            raise ContractViolation("variance floor must be positive on both axes")
        if self.k_ref <= 0:
            raise ContractViolation("k_ref must be a positive count")
        for bump in self.bumps:
            if bump.width <= 0.0:
                raise ContractViolation("bump width must be positive")
            if min(bump.amp) < 0.0:
                raise ContractViolation("bump amplitude must be non-negative")

    def base_variance(self, l_x: float, l_y: float) -> np.ndarray:
        """Per-axis variance (2,) at the reference allocation k_ref."""
        var = np.array(self.floor, dtype=float)
        for bump in self.bumps:
            dx = l_x - bump.center[0]
            dy = l_y - bump.center[1]
            var += np.asarray(bump.amp) * np.exp(-(dx * dx + dy * dy) / (2.0 * bump.width**2))
        return var

    def variance_at(self, l_x: float, l_y: float, k: int) -> np.ndarray:
        """Diagonal 2x2 observation covariance at position (l_x, l_y) with allocation k."""
        if k <= 0:
            raise ContractViolation(f"allocation k must be positive, got {k}")
        scale = (self.k_ref / float(k)) ** self.gamma
        return np.diag(self.base_variance(l_x, l_y) * scale)

    def variance_profile(self, l_x: float, l_y: float, ks: np.ndarray) -> np.ndarray:
        """Per-axis variances for every allocation in ks, shape (len(ks), 2)."""
        ks = np.asarray(ks, dtype=float)
        if np.any(ks <= 0.0):
            raise ContractViolation("allocations must be positive")
        base = self.base_variance(l_x, l_y)
        scale = (self.k_ref / ks) ** self.gamma
        return scale[:, None] * base[None, :]

    def scaled(self, factor: float) -> "AnalyticCkm":
        """Copy of the field with every variance multiplied by factor."""
        if factor <= 0.0:
            raise ContractViolation("scale factor must be positive")
        bumps = tuple(
            replace(b, amp=(b.amp[0] * factor, b.amp[1] * factor)) for b in self.bumps
        )
        return replace(self, floor=(self.floor[0] * factor, self.floor[1] * factor), bumps=bumps)


@dataclass(frozen=True)
class VarianceSample:
    """One observed (position, allocation) -> per-axis variance pair."""

    l_x: float
    l_y: float
    k: int
    var_x: float
    var_y: float


@dataclass(frozen=True)
class GridCkm:
    """Raster variance map, one (2, n_y, n_x) log-variance plane per allocation.

    Queries interpolate bilinearly between cell centers and clamp outside the
    bounds; only the stored allocations can be queried.
    """

    bounds: tuple[float, float, float, float]  # x_min, x_max, y_min, y_max
    resolution: tuple[int, int]  # n_x, n_y
    k_values: tuple[int, ...]
    log_grids: dict[int, np.ndarray]  # k -> (2, n_y, n_x), log variances

    def __post_init__(self):
        x_min, x_max, y_min, y_max = self.bounds
        n_x, n_y = self.resolution
        if x_max <= x_min or y_max <= y_min:
            raise ContractViolation(f"degenerate bounds {self.bounds}")
        if n_x < 1 or n_y < 1:
            raise ContractViolation(f"resolution must be >= 1 per axis, got {self.resolution}")
        if tuple(sorted(self.k_values)) != self.k_values or len(set(self.k_values)) != len(self.k_values):
            raise ContractViolation("k_values must be strictly increasing")
        for k in self.k_values:
            grid = self.log_grids.get(k)
            if grid is None or grid.shape != (2, n_y, n_x):
                raise ContractViolation(f"missing or misshaped grid for k={k}")

    def _interp_weights(self, l_x: float, l_y: float):
        x_min, x_max, y_min, y_max = self.bounds
        n_x, n_y = self.resolution
        step_x = (x_max - x_min) / n_x
        step_y = (y_max - y_min) / n_y
        # Continuous cell-center coordinates, clamped so border queries hold the edge value.
        cx = min(max((l_x - x_min) / step_x - 0.5, 0.0), n_x - 1.0)
        cy = min(max((l_y - y_min) / step_y - 0.5, 0.0), n_y - 1.0)
        ix = min(int(cx), n_x - 2) if n_x > 1 else 0
        iy = min(int(cy), n_y - 2) if n_y > 1 else 0
        fx = cx - ix
        fy = cy - iy
        return ix, iy, fx, fy

    def _interp_log(self, grid: np.ndarray, l_x: float, l_y: float) -> np.ndarray:
        ix, iy, fx, fy = self._interp_weights(l_x, l_y)
        n_x, n_y = self.resolution
        jx = min(ix + 1, n_x - 1)
        jy = min(iy + 1, n_y - 1)
        return (
            (1.0 - fx) * (1.0 - fy) * grid[:, iy, ix]
            + fx * (1.0 - fy) * grid[:, iy, jx]
            + (1.0 - fx) * fy * grid[:, jy, ix]
            + fx * fy * grid[:, jy, jx]
        )

    def variance_at(self, l_x: float, l_y: float, k: int) -> np.ndarray:
        """Diagonal 2x2 observation covariance interpolated from the raster."""
        grid = self.log_grids.get(int(k))
        if grid is None:
            raise UnknownSensingConfig(f"allocation k={k} not in stored set {self.k_values}")
        return np.diag(np.exp(self._interp_log(grid, l_x, l_y)))

    def variance_profile(self, l_x: float, l_y: float, ks: np.ndarray) -> np.ndarray:
        """Per-axis variances for every allocation in ks, shape (len(ks), 2)."""
        out = np.empty((len(ks), 2))
        for i, k in enumerate(ks):
            grid = self.log_grids.get(int(k))
            if grid is None:
                raise UnknownSensingConfig(f"allocation k={k} not in stored set {self.k_values}")
            out[i] = np.exp(self._interp_log(grid, l_x, l_y))
        return out


def _cell_index(value: float, lo: float, hi: float, n: int) -> int:
    step = (hi - lo) / n
    idx = int(np.floor((value - lo) / step))
    return min(max(idx, 0), n - 1)


def fit_grid(
    samples: list[VarianceSample],
    bounds: tuple[float, float, float, float],
    resolution: tuple[int, int],
    k_values: tuple[int, ...],
) -> GridCkm:
    """Fit a raster map: per-cell mean of log variances, per allocation.

    Samples outside the bounds land in the clamped border cell. Cells with no
    samples for an allocation are filled from the nearest populated cell
    (breadth-first over the 4-neighbor grid graph; among equally near cells the
    one with the lowest (x, y) index wins).
    """
    if not samples:
        raise ContractViolation("cannot fit a grid from zero samples")
    k_values = tuple(sorted(int(k) for k in set(k_values)))
    x_min, x_max, y_min, y_max = bounds
    n_x, n_y = resolution
    if x_max <= x_min or y_max <= y_min or n_x < 1 or n_y < 1:
        raise ContractViolation(f"bad bounds {bounds} or resolution {resolution}")
    k_index = {k: i for i, k in enumerate(k_values)}

    sums = np.zeros((len(k_values), 2, n_y, n_x))
    counts = np.zeros((len(k_values), n_y, n_x), dtype=int)
    for s in samples:
        ki = k_index.get(int(s.k))
        if ki is None:
            raise ContractViolation(f"sample has allocation k={s.k} outside the fit set {k_values}")
        if s.var_x <= 0.0 or s.var_y <= 0.0:
            raise ContractViolation(f"sample variances must be positive, got ({s.var_x}, {s.var_y})")
        ix = _cell_index(s.l_x, x_min, x_max, n_x)
        iy = _cell_index(s.l_y, y_min, y_max, n_y)
        sums[ki, 0, iy, ix] += np.log(s.var_x)
        sums[ki, 1, iy, ix] += np.log(s.var_y)
        counts[ki, iy, ix] += 1

    log_grids: dict[int, np.ndarray] = {}
    for ki, k in enumerate(k_values):
        plane = np.zeros((2, n_y, n_x))
        filled = counts[ki] > 0
        if not filled.any():
            raise ContractViolation(f"no samples at all for allocation k={k}")
        plane[:, filled] = sums[ki][:, filled] / counts[ki][filled]
        for ix in range(n_x):
            for iy in range(n_y):
                if not filled[iy, ix]:
                    src_x, src_y = _nearest_filled(filled, ix, iy, n_x, n_y)
                    plane[:, iy, ix] = plane[:, src_y, src_x]
        log_grids[k] = plane
    return GridCkm(bounds=tuple(map(float, bounds)), resolution=(n_x, n_y), k_values=k_values, log_grids=log_grids)


def _nearest_filled(filled: np.ndarray, ix: int, iy: int, n_x: int, n_y: int) -> tuple[int, int]:
    # Level-order BFS; the first level holding populated cells decides, lowest
    # (x, y) index breaking ties.
    seen = {(ix, iy)}
    frontier = [(ix, iy)]
    while frontier:
        hits = sorted((x, y) for x, y in frontier if filled[y, x])
        if hits:
            return hits[0]
        nxt = []
        for x, y in frontier:
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nb = (x + dx, y + dy)
                if 0 <= nb[0] < n_x and 0 <= nb[1] < n_y and nb not in seen:
                    seen.add(nb)
                    nxt.append(nb)
        frontier = nxt
    raise ContractViolation("no populated cell found while filling the grid")


_MAGIC = "CKMGRID v1"


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def save_grid(grid: GridCkm, sink) -> None:
    """Write the raster map in the plain-text CKMGRID v1 format.

    sink is a path or a writable text stream. Floats carry 17 significant
    digits so save -> load reproduces every value bit exactly.
    """
    if hasattr(sink, "write"):
        _write_grid(grid, sink)
    else:
        with open(sink, "w") as fh:
            _write_grid(grid, fh)


def _write_grid(grid: GridCkm, fh) -> None:
    fh.write(_MAGIC + "\n")
    fh.write("bounds " + " ".join(_fmt(b) for b in grid.bounds) + "\n")
    fh.write(f"resolution {grid.resolution[0]} {grid.resolution[1]}\n")
    fh.write("k " + " ".join(str(k) for k in grid.k_values) + "\n")
    for k in grid.k_values:
        plane = grid.log_grids[k]
        for axis_idx, axis in enumerate("xy"):
            fh.write(f"grid {k} {axis}\n")
            for row in plane[axis_idx]:
                fh.write(" ".join(_fmt(v) for v in row) + "\n")


def load_grid(source) -> GridCkm:
    """Parse a CKMGRID v1 file (path or readable text stream)."""
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source) as fh:
            lines = fh.read().splitlines()
    cursor = _LineCursor(lines)

    if cursor.next_line() != _MAGIC:
        raise CkmFormatError(f"line 1: expected header {_MAGIC!r}")
    bounds = cursor.floats("bounds", 4)
    n_x, n_y = cursor.ints("resolution", 2)
    if n_x < 1 or n_y < 1:
        raise CkmFormatError(f"line {cursor.line_no}: resolution must be >= 1 per axis")
    k_values = tuple(cursor.ints("k", None))

    log_grids: dict[int, np.ndarray] = {}
    for k in k_values:
        plane = np.empty((2, n_y, n_x))
        for axis_idx, axis in enumerate("xy"):
            header = cursor.next_line()
            if header != f"grid {k} {axis}":
                raise CkmFormatError(
                    f"line {cursor.line_no}: expected 'grid {k} {axis}', got {header!r}"
                )
            for row_idx in range(n_y):
                row = cursor.float_row(n_x)
                if not np.all(np.isfinite(row)):
                    bad = int(np.flatnonzero(~np.isfinite(row))[0])
                    raise CkmFormatError(
                        f"line {cursor.line_no}: non-finite value at column {bad + 1}"
                    )
                plane[axis_idx, row_idx] = row
        log_grids[k] = plane
    if cursor.has_more():
        raise CkmFormatError(f"line {cursor.line_no + 1}: trailing content after last grid")
    try:
        return GridCkm(
            bounds=tuple(bounds), resolution=(n_x, n_y), k_values=k_values, log_grids=log_grids
        )
    except ContractViolation as exc:
        raise CkmFormatError(str(exc)) from exc


class _LineCursor:
    """Sequential reader that keeps 1-based line numbers for error messages."""

    def __init__(self, lines: list[str]):
        self._lines = lines
        self.line_no = 0

    def has_more(self) -> bool:
        return self.line_no < len(self._lines)

    def next_line(self) -> str:
        if not self.has_more():
            raise CkmFormatError(f"line {self.line_no + 1}: unexpected end of file")
        self.line_no += 1
        return self._lines[self.line_no - 1]

    def _tagged(self, tag: str, count):
        parts = self.next_line().split()
        if not parts or parts[0] != tag:
            raise CkmFormatError(f"line {self.line_no}: expected '{tag} ...' line")
        values = parts[1:]
        if count is not None and len(values) != count:
            raise CkmFormatError(
                f"line {self.line_no}: expected {count} values after '{tag}', got {len(values)}"
            )
        if not values:
            raise CkmFormatError(f"line {self.line_no}: '{tag}' line has no values")
        return values

    def floats(self, tag: str, count):
        try:
            return [float(v) for v in self._tagged(tag, count)]
        except ValueError as exc:
            raise CkmFormatError(f"line {self.line_no}: {exc}") from exc

    def ints(self, tag: str, count):
        try:
            return [int(v) for v in self._tagged(tag, count)]
        except ValueError as exc:
            raise CkmFormatError(f"line {self.line_no}: {exc}") from exc

    def float_row(self, expect: int) -> np.ndarray:
        parts = self.next_line().split()
        if len(parts) != expect:
            raise CkmFormatError(
                f"line {self.line_no}: expected {expect} values in grid row, got {len(parts)}"
            )
        try:
            return np.array([float(v) for v in parts])
        except ValueError as exc:
            raise CkmFormatError(f"line {self.line_no}: {exc}") from exc


def sample_field(
    field: AnalyticCkm,
    bounds: tuple[float, float, float, float],
    k_values: tuple[int, ...],
    n: int,
    rng: np.random.Generator,
    resolution: tuple[int, int] | None = None,
    jitter: float = 1.0,
) -> list[VarianceSample]:
    """Draw n noiseless (position, k) -> variance samples of an analytic field.

    With resolution=None positions are uniform over the bounds and allocations
    uniform over k_values. With a resolution, sampling is jitter-stratified:
    it cycles through every (cell, k) bin so each bin is guaranteed coverage
    once n is at least n_x * n_y * len(k_values). jitter scales the in-cell
    spread: 1 covers the whole cell, 0 pins every sample to its cell center.
    """
    x_min, x_max, y_min, y_max = bounds
    out: list[VarianceSample] = []
    if resolution is None:
        xs = rng.uniform(x_min, x_max, size=n)
        ys = rng.uniform(y_min, y_max, size=n)
        ks = rng.choice(np.asarray(k_values), size=n)
        for x, y, k in zip(xs, ys, ks):
            vx, vy = np.diag(field.variance_at(float(x), float(y), int(k)))
            out.append(VarianceSample(float(x), float(y), int(k), float(vx), float(vy)))
        return out
    if not 0.0 <= jitter <= 1.0:
        raise ContractViolation(f"jitter must be in [0, 1], got {jitter}")
    n_x, n_y = resolution
    step_x = (x_max - x_min) / n_x
    step_y = (y_max - y_min) / n_y
    bins = [(ix, iy, k) for k in k_values for iy in range(n_y) for ix in range(n_x)]
    for i in range(n):
        ix, iy, k = bins[i % len(bins)]
        x = x_min + (ix + 0.5 + jitter * (rng.uniform() - 0.5)) * step_x
        y = y_min + (iy + 0.5 + jitter * (rng.uniform() - 0.5)) * step_y
        vx, vy = np.diag(field.variance_at(float(x), float(y), int(k)))
        out.append(VarianceSample(float(x), float(y), int(k), float(vx), float(vy)))
    return out


_SAMPLES_HEADER = "l_x,l_y,k,var_x,var_y"


def save_samples_csv(samples: list[VarianceSample], sink) -> None:
    """Write variance samples as CSV with a fixed header."""
    def _write(fh):
        fh.write(_SAMPLES_HEADER + "\n")
        for s in samples:
            fh.write(f"{_fmt(s.l_x)},{_fmt(s.l_y)},{s.k},{_fmt(s.var_x)},{_fmt(s.var_y)}\n")

    if hasattr(sink, "write"):
        _write(sink)
    else:
        with open(sink, "w") as fh:
            _write(fh)


def load_samples_csv(source) -> list[VarianceSample]:
    """Read variance samples written by save_samples_csv."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source) as fh:
            text = fh.read()
    lines = text.splitlines()
    if not lines or lines[0].strip() != _SAMPLES_HEADER:
        raise CkmFormatError(f"line 1: expected header {_SAMPLES_HEADER!r}")
    out = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise CkmFormatError(f"line {i}: expected 5 comma-separated values")
        try:
            out.append(
                VarianceSample(
                    float(parts[0]), float(parts[1]), int(parts[2]), float(parts[3]), float(parts[4])
                )
            )
        except ValueError as exc:
            raise CkmFormatError(f"line {i}: {exc}") from exc
    return out
