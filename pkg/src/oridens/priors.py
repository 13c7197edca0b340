"""Auxiliary orientation estimators: region-ray prior and position grid.

Both produce :class:`~oridens.core.Density` values ready to be fused
with a primary prediction.

Pixel convention: the mask pixel at (row, col) is centered on the
continuous point (x=col, y=row); a continuous sample (x, y) reads the
pixel (floor(y + 0.5), floor(x + 0.5)). Out-of-image samples read 0.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .core import Density, ConversionConfig, bin_angles, encode


class RegionMask:
    """Binary raster marking the region of interest (1 = inside)."""

    __slots__ = ("_bits",)

    def __init__(self, bits):
        arr = np.array(bits, dtype=bool)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"mask must be a 2-D raster, got shape {arr.shape}")
        arr.setflags(write=False)
        self._bits = arr

    @property
    def bits(self) -> np.ndarray:
        """Row-major boolean array of shape (height, width)."""
        return self._bits

    @property
    def width(self) -> int:
        return self._bits.shape[1]

    @property
    def height(self) -> int:
        return self._bits.shape[0]

    def __repr__(self) -> str:
        return f"RegionMask({self.width}x{self.height})"


@dataclass(frozen=True)
class HandBox:
    """Square region of interest: center (cx, cy) and half side length."""

    cx: float
    cy: float
    half_size: float

    def __post_init__(self):
        if not (math.isfinite(self.cx) and math.isfinite(self.cy)):
            raise ValueError(f"box center must be finite, got ({self.cx!r}, {self.cy!r})")
        if not (math.isfinite(self.half_size) and self.half_size > 0.0):
            raise ValueError(f"half_size must be positive, got {self.half_size!r}")


@dataclass(frozen=True)
class RegionPriorConfig:
    """Radial sweep parameters for the region-ray prior.

    Rays are sampled from radius R out to k_r * R (R = box half size),
    stepping by radial_step pixels, endpoints included when reachable.
    """

    k_r: float = 4.0
    radial_step: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.k_r) and self.k_r > 1.0):
            raise ValueError(f"k_r must be > 1, got {self.k_r!r}")
        if not (math.isfinite(self.radial_step) and self.radial_step > 0.0):
            raise ValueError(f"radial_step must be positive, got {self.radial_step!r}")


class RegionPrior(NamedTuple):
    density: Density
    fallback: bool


def _ray_radii(box: HandBox, cfg: RegionPriorConfig) -> np.ndarray:
    span = (cfg.k_r - 1.0) * box.half_size
    n_steps = int(math.floor(span / cfg.radial_step + 1e-9)) + 1
    return box.half_size + cfg.radial_step * np.arange(n_steps)


def region_prior(mask: RegionMask, box: HandBox, cfg: RegionPriorConfig,
                 n_bins: int) -> RegionPrior:
    """Orientation density from the mask mass along rays out of the box center.

    For each bin angle theta_i the mask is sampled at
    (cx + r*cos(theta_i), cy + r*sin(theta_i)) for radii r from R to
    k_r * R, using nearest-pixel lookup; samples falling outside the
    image contribute 0. Bin sums are normalized to a density.

    Returns the uniform density with ``fallback=True`` when no sample
    hits the region (uniform is the fusion identity, so a degenerate
    prior never biases a fused estimate).
    """
    if n_bins < 4:
        raise ValueError(f"n_bins must be >= 4, got {n_bins}")
    angles = bin_angles(n_bins)
    radii = _ray_radii(box, cfg)
    x = box.cx + np.outer(np.cos(angles), radii)
    y = box.cy + np.outer(np.sin(angles), radii)
    cols = np.floor(x + 0.5).astype(np.int64)
    rows = np.floor(y + 0.5).astype(np.int64)
    inside = (
        (cols >= 0) & (cols < mask.width) & (rows >= 0) & (rows < mask.height)
    )
    hits = np.zeros(x.shape)
    hits[inside] = mask.bits[rows[inside], cols[inside]]
    counts = hits.sum(axis=1)
    total = float(counts.sum())
    if total == 0.0:
        return RegionPrior(Density.uniform(n_bins), True)
    return RegionPrior(Density(counts / total), False)


class DensityGrid:
    """Lattice of orientation densities over normalized image positions.

    Lattice point (a, b) sits at the continuous image coordinate
    (a * image_w / (grid_w - 1), b * image_h / (grid_h - 1)); the
    corner points coincide with the image corners. Cells are stored
    row-major with row 0 at the top.
    """

    __slots__ = ("_cells", "_image_w", "_image_h")

    def __init__(self, cells, image_w: int, image_h: int):
        arr = np.array(cells, dtype=float)
        if arr.ndim != 3:
            raise ValueError(f"cells must have shape (rows, cols, bins), got {arr.shape}")
        if arr.shape[0] < 2 or arr.shape[1] < 2:
            raise ValueError(
                f"grid needs at least 2 points per axis to span the image, "
                f"got {arr.shape[1]}x{arr.shape[0]}"
            )
        if arr.shape[2] < 4:
            raise ValueError(f"grid cells need at least 4 bins, got {arr.shape[2]}")
        if image_w < 1 or image_h < 1:
            raise ValueError(f"image size must be positive, got {image_w}x{image_h}")
        if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
            raise ValueError("grid cells must be finite and nonnegative")
        sums = arr.sum(axis=2)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise ValueError("every grid cell must sum to 1")
        arr.setflags(write=False)
        self._cells = arr
        self._image_w = int(image_w)
        self._image_h = int(image_h)

    @property
    def cells(self) -> np.ndarray:
        """Array of shape (grid_h, grid_w, n_bins)."""
        return self._cells

    @property
    def grid_w(self) -> int:
        return self._cells.shape[1]

    @property
    def grid_h(self) -> int:
        return self._cells.shape[0]

    @property
    def n_bins(self) -> int:
        return self._cells.shape[2]

    @property
    def image_w(self) -> int:
        return self._image_w

    @property
    def image_h(self) -> int:
        return self._image_h

    def lattice_point(self, col: int, row: int) -> tuple[float, float]:
        """Continuous image coordinate of lattice point (col, row)."""
        return (
            col * self._image_w / (self.grid_w - 1),
            row * self._image_h / (self.grid_h - 1),
        )

    def cell_density(self, col: int, row: int) -> Density:
        return Density(self._cells[row, col])

    def __repr__(self) -> str:
        return (
            f"DensityGrid({self.grid_w}x{self.grid_h}, "
            f"image={self._image_w}x{self._image_h}, n_bins={self.n_bins})"
        )


def _bilinear_corner(pos: float, extent: int, n_points: int) -> tuple[int, float]:
    """Lower lattice index and fractional offset for one axis."""
    u = pos * (n_points - 1) / extent
    i0 = int(math.floor(u))
    i0 = min(max(i0, 0), n_points - 2)
    return i0, u - i0


def grid_train(samples: Sequence[tuple[float, float, float]], grid_w: int,
               grid_h: int, image_w: int, image_h: int,
               cfg: ConversionConfig) -> DensityGrid:
    """Build a position-conditioned density grid from ground-truth samples.

    Each sample (x, y, theta_gt) is encoded to a density and scattered
    onto its four enclosing lattice points with the same bilinear
    weights :func:`grid_query` uses, so querying back at an isolated
    sample's position reproduces its encoded density. Accumulated
    weights are renormalized per lattice point; points that received no
    weight hold the uniform density.
    """
    if len(samples) == 0:
        raise ValueError("grid_train needs at least one sample")
    if grid_w < 2 or grid_h < 2:
        raise ValueError(f"grid must be at least 2x2, got {grid_w}x{grid_h}")
    if image_w < 1 or image_h < 1:
        raise ValueError(f"image size must be positive, got {image_w}x{image_h}")

    acc = np.zeros((grid_h, grid_w, cfg.n_bins))
    for k, (x, y, theta) in enumerate(samples):
        if not (0.0 <= x <= image_w and 0.0 <= y <= image_h):
            raise ValueError(
                f"sample {k} at ({x!r}, {y!r}) lies outside the "
                f"{image_w}x{image_h} image"
            )
        p = encode(theta, cfg).bins
        a0, fx = _bilinear_corner(x, image_w, grid_w)
        b0, fy = _bilinear_corner(y, image_h, grid_h)
        acc[b0, a0] += (1.0 - fx) * (1.0 - fy) * p
        acc[b0, a0 + 1] += fx * (1.0 - fy) * p
        acc[b0 + 1, a0] += (1.0 - fx) * fy * p
        acc[b0 + 1, a0 + 1] += fx * fy * p

    cells = np.empty_like(acc)
    for b in range(grid_h):
        for a in range(grid_w):
            total = acc[b, a].sum()
            if total > 0.0:
                cells[b, a] = acc[b, a] / total
            else:
                cells[b, a] = 1.0 / cfg.n_bins
    return DensityGrid(cells, image_w, image_h)


def grid_query(grid: DensityGrid, cx: float, cy: float) -> Density:
    """Interpolate the stored densities at an arbitrary image position.

    Bilinear combination of the four enclosing lattice points,
    renormalized (a no-op for normalized cells, kept for robustness).
    Positions outside the image are clamped to its boundary.
    """
    x = min(max(float(cx), 0.0), float(grid.image_w))
    y = min(max(float(cy), 0.0), float(grid.image_h))
    a0, fx = _bilinear_corner(x, grid.image_w, grid.grid_w)
    b0, fy = _bilinear_corner(y, grid.image_h, grid.grid_h)
    w = (
        (1.0 - fx) * (1.0 - fy),
        fx * (1.0 - fy),
        (1.0 - fx) * fy,
        fx * fy,
    )
    combo = (
        w[0] * grid.cells[b0, a0]
        + w[1] * grid.cells[b0, a0 + 1]
        + w[2] * grid.cells[b0 + 1, a0]
        + w[3] * grid.cells[b0 + 1, a0 + 1]
    ) / sum(w)
    return Density(combo / combo.sum())
