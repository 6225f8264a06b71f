"""Coordinate math for the implicit field.

Conventions, used everywhere downstream:

* Continuous coordinates live in (-1, 1) per axis with the image center at
  the origin; ``x`` runs along columns, ``y`` along rows.
* Pixel i of an n-pixel axis sits at (2i + 1)/n - 1 (pixel centers), so all
  centers are strictly inside (-1, 1) and grids of different resolutions
  share the same continuous frame.
* A query resolves to the 4 pixels of the bilinear cell that contains it;
  outside the outermost centers the indices clamp to the border (duplicates
  allowed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError

# Fractional indices this close to an integer snap onto it, so querying a
# pixel center reproduces that pixel exactly despite normalize/denormalize
# round-off.
_SNAP = 1e-9


@dataclass(frozen=True)
class GridSpec:
    height: int
    width: int

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ContractError(f"grid dims must be >= 1, got {self.height}x{self.width}")


@dataclass(frozen=True)
class PosEncodingConfig:
    """Sine/cosine frequency stack; ``levels`` is the highest exponent."""

    levels: int = 9

    def __post_init__(self):
        if self.levels < 0:
            raise ContractError("levels must be >= 0")

    @property
    def dim_per_scalar(self) -> int:
        return 2 * (self.levels + 1)

    @property
    def dim_2d(self) -> int:
        return 2 * self.dim_per_scalar


@dataclass(frozen=True)
class NeighborSet:
    """4 neighbor pixels of one query: (row, col) indices and coordinate deltas."""

    indices: np.ndarray  # (4, 2) int64, row-major corner order
    deltas: np.ndarray   # (4, 2) float64, (dx, dy) = neighbor center - query
    weights: np.ndarray  # (4,) float64 bilinear coefficients, sum to 1


def normalize_pixel(i: int, n: int) -> float:
    """Center coordinate of pixel i on an n-pixel axis."""
    if not 0 <= i < n:
        raise ContractError(f"pixel index {i} outside [0, {n})")
    return (2 * i + 1) / n - 1.0


def pixel_centers(n: int) -> np.ndarray:
    """All n center coordinates, ascending."""
    return (2.0 * np.arange(n) + 1.0) / n - 1.0


def frac_index(coord: np.ndarray, n: int) -> np.ndarray:
    """Continuous coordinate -> fractional pixel index (0 at pixel 0's center)."""
    f = (np.asarray(coord, dtype=np.float64) + 1.0) * (n / 2.0) - 0.5
    snapped = np.rint(f)
    return np.where(np.abs(f - snapped) < _SNAP, snapped, f)


def _check_coords(coords: np.ndarray) -> np.ndarray:
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ContractError(f"expected (n, 2) coordinates, got {coords.shape}")
    if not np.all(np.abs(coords) < 1.0):
        raise ContractError("coordinates must lie strictly inside (-1, 1)")
    return coords


def neighbors_batch(coords: np.ndarray, grid: GridSpec):
    """Bilinear cells for a batch of queries.

    Returns (rows, cols, deltas, weights):
      rows, cols: (n, 4) int64 clamped pixel indices in corner order
                  (r0c0, r0c1, r1c0, r1c1)
      deltas:     (n, 4, 2) float64 (dx, dy) from query to each (clamped) center
      weights:    (n, 4) float64 bilinear coefficients from the unclamped
                  fractional position; nonnegative, each row sums to 1
    """
    coords = _check_coords(coords)
    fx = frac_index(coords[:, 0], grid.width)
    fy = frac_index(coords[:, 1], grid.height)
    x0 = np.floor(fx)
    y0 = np.floor(fy)
    tx = fx - x0
    ty = fy - y0

    c0 = np.clip(x0.astype(np.int64), 0, grid.width - 1)
    c1 = np.clip(x0.astype(np.int64) + 1, 0, grid.width - 1)
    r0 = np.clip(y0.astype(np.int64), 0, grid.height - 1)
    r1 = np.clip(y0.astype(np.int64) + 1, 0, grid.height - 1)

    rows = np.stack([r0, r0, r1, r1], axis=1)
    cols = np.stack([c0, c1, c0, c1], axis=1)

    cx = (2.0 * cols + 1.0) / grid.width - 1.0
    cy = (2.0 * rows + 1.0) / grid.height - 1.0
    deltas = np.stack([cx - coords[:, 0:1], cy - coords[:, 1:2]], axis=2)

    wx0, wx1 = 1.0 - tx, tx
    wy0, wy1 = 1.0 - ty, ty
    weights = np.stack([wy0 * wx0, wy0 * wx1, wy1 * wx0, wy1 * wx1], axis=1)
    return rows, cols, deltas, weights


def neighbors(coord, grid: GridSpec) -> NeighborSet:
    """Single-query convenience wrapper around :func:`neighbors_batch`."""
    rows, cols, deltas, weights = neighbors_batch(np.asarray([coord]), grid)
    return NeighborSet(
        indices=np.stack([rows[0], cols[0]], axis=1),
        deltas=deltas[0],
        weights=weights[0],
    )


def pos_encode(deltas: np.ndarray, cfg: PosEncodingConfig, dtype=np.float64) -> np.ndarray:
    """Frequency-encode coordinate offsets.

    Each scalar u expands to (sin(2^0 pi u), cos(2^0 pi u), ...,
    sin(2^L pi u), cos(2^L pi u)); the x block precedes the y block, giving
    4(L+1) values per 2-vector.  Accepts (..., 2) input.
    """
    deltas = np.asarray(deltas, dtype=np.float64)
    if deltas.shape[-1] != 2:
        raise ContractError(f"expected trailing axis of size 2, got {deltas.shape}")
    if not np.all(np.isfinite(deltas)):
        raise ContractError("deltas must be finite")
    freqs = np.pi * (2.0 ** np.arange(cfg.levels + 1))
    ang = deltas[..., :, None] * freqs  # (..., 2, L+1)
    enc = np.stack([np.sin(ang), np.cos(ang)], axis=-1)  # (..., 2, L+1, 2)
    return enc.reshape(*deltas.shape[:-1], cfg.dim_2d).astype(dtype)
