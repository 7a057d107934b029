"""Discretized state grids: 1-D (possibly circular) and 2-D product grids.

Bins are half-open on the left: the bin with center c covers (c - h, c + h]
where h is the half-width. On a circular grid the first/last centers wrap,
so the bin centered at 180 covers (175, 180] together with (-180, -175].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .angles import wrap_degrees
from .errors import ValidationError


@dataclass(frozen=True)
class StateGrid:
    """Equally spaced 1-D grid of bin centers (degrees for angular grids).

    centers must be strictly increasing with constant spacing equal to twice
    half_width; a circular grid must span exactly one 360-degree period with
    no duplicated endpoint.
    """

    centers: np.ndarray
    half_width: float
    circular: bool = True

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float)
        object.__setattr__(self, "centers", centers)
        if centers.ndim != 1 or centers.size < 1:
            raise ValidationError("grid centers must be a nonempty 1-D array")
        if self.half_width <= 0:
            raise ValidationError("half_width must be positive")
        spacing = 2.0 * self.half_width
        diffs = np.diff(centers)
        if centers.size > 1 and not np.allclose(diffs, spacing, rtol=0, atol=1e-9):
            raise ValidationError(
                "centers must be strictly increasing with spacing equal to twice half_width"
            )
        if self.circular and not np.isclose(centers.size * spacing, 360.0, rtol=0, atol=1e-9):
            raise ValidationError("circular grid must cover exactly one 360-degree period")

    @property
    def count(self) -> int:
        return int(self.centers.size)

    def bin_index(self, values):
        """Map angle values to bin indices; bins are (c - h, c + h].

        Values on a circular grid are wrapped first; out-of-range values on a
        non-circular grid clip to the end bins.
        """
        values = np.asarray(values, dtype=float)
        spacing = 2.0 * self.half_width
        if self.circular:
            x = (wrap_degrees(values) - self.centers[0]) / spacing
            idx = np.ceil(x - 0.5).astype(int) % self.count
        else:
            x = (values - self.centers[0]) / spacing
            idx = np.clip(np.ceil(x - 0.5).astype(int), 0, self.count - 1)
        return idx if idx.ndim else int(idx)

    def distance(self, a, b):
        """Distance between angles a and b: wrap-aware on circular grids."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.circular:
            return np.abs(wrap_degrees(a - b))
        return np.abs(a - b)


def regular_circular_grid(n_bins: int = 36) -> StateGrid:
    """Circular grid of n_bins equal bins covering (-180, 180].

    For n_bins=36 the centers are -170, -160, ..., 170, 180; the 180 bin is
    the single wrap-around bin covering (175, 180] union (-180, -175].
    """
    if n_bins < 1:
        raise ValidationError("n_bins must be positive")
    spacing = 360.0 / n_bins
    first = -180.0 + spacing
    centers = first + spacing * np.arange(n_bins)
    return StateGrid(centers=centers, half_width=spacing / 2.0, circular=True)


@dataclass(frozen=True)
class StateGrid2D:
    """Product of two circular 1-D grids (local misalignment x target misalignment).

    Flat state indices are local-major: index = local_bin * target.count + target_bin.
    """

    local: StateGrid
    target: StateGrid

    @property
    def count(self) -> int:
        return self.local.count * self.target.count

    def index_of(self, local_bin, target_bin):
        return np.asarray(local_bin) * self.target.count + np.asarray(target_bin)

    def bins_of(self, index):
        index = np.asarray(index)
        return index // self.target.count, index % self.target.count

    @property
    def centers(self) -> np.ndarray:
        """(J, 2) array of (local, target) bin-center pairs, local-major order."""
        lc = np.repeat(self.local.centers, self.target.count)
        tc = np.tile(self.target.centers, self.local.count)
        return np.column_stack([lc, tc])

    def bin_index(self, local_deg, target_deg):
        """Map (local, target) angle pairs to flat state indices."""
        return self.index_of(
            self.local.bin_index(local_deg), self.target.bin_index(target_deg)
        )


def misalignment_grid_2d(n_bins_per_dim: int = 36) -> StateGrid2D:
    """The standard product grid: n^2 states over two circular misalignment axes."""
    return StateGrid2D(
        local=regular_circular_grid(n_bins_per_dim),
        target=regular_circular_grid(n_bins_per_dim),
    )
