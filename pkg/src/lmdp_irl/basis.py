"""Feature matrices mapping basis weights to costs-to-go (v = X @ beta).

Three families: the identity (one weight per state), 1-D Gaussian bumps on a
(possibly circular) grid, and 2-D multiresolution bisquare bases on a product
grid. Distances default to the wrap-aware circular metric; the planar metric
is available as a replication switch for bases built on the real line.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .angles import signed_delta
from .errors import ValidationError
from .grids import StateGrid, StateGrid2D


@dataclass(frozen=True)
class FeatureMatrix:
    """A (J, n_b) basis evaluation with construction metadata."""

    values: np.ndarray
    kind: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", X)
        if X.ndim != 2:
            raise ValidationError("feature matrix must be 2-D")
        zero_cols = np.where(~X.any(axis=0))[0]
        if zero_cols.size:
            raise ValidationError(
                f"basis columns {zero_cols[:5].tolist()} are identically zero; "
                "every basis function must touch at least one state"
            )
        uncovered = np.where(~(X > 0).any(axis=1))[0]
        if uncovered.size:
            warnings.warn(
                f"{uncovered.size} states have no positive basis value "
                f"(first: {uncovered[:5].tolist()}); their costs-to-go are pinned to 0",
                stacklevel=3,
            )

    @property
    def n_states(self) -> int:
        return self.values.shape[0]

    @property
    def n_basis(self) -> int:
        return self.values.shape[1]


def identity_features(n_states: int) -> FeatureMatrix:
    """One independent weight per state: X = I."""
    if n_states < 1:
        raise ValidationError("n_states must be positive")
    return FeatureMatrix(values=np.eye(n_states), kind="identity", metadata={})


def gaussian_basis_1d(
    grid: StateGrid,
    spacing: int = 2,
    bandwidth: float | None = None,
    wrap: bool = True,
) -> FeatureMatrix:
    """Gaussian bumps centered on every spacing-th grid cell.

    X[i, k] = exp(-d(s_i, c_k)^2 / (2 * bandwidth^2)) with d the wrap-aware
    circular distance when the grid is circular and wrap is left on; pass
    wrap=False to replicate bases defined on the real line instead. The
    bandwidth defaults to the grid spacing so adjacent bumps overlap at ~0.6.
    """
    if spacing < 1:
        raise ValidationError("spacing must be at least 1")
    if bandwidth is None:
        bandwidth = 2.0 * grid.half_width
    if bandwidth <= 0:
        raise ValidationError("bandwidth must be positive")
    centers = grid.centers[::spacing]
    if wrap and grid.circular:
        d = np.abs(signed_delta(grid.centers[:, None], centers[None, :]))
    else:
        d = np.abs(grid.centers[:, None] - centers[None, :])
    X = np.exp(-(d**2) / (2.0 * bandwidth**2))
    return FeatureMatrix(
        values=X,
        kind="gaussian_1d",
        metadata={
            "centers": centers.tolist(),
            "bandwidth": float(bandwidth),
            "spacing": int(spacing),
            "wrap": bool(wrap and grid.circular),
        },
    )


def _lattice_1d(n: int) -> np.ndarray:
    # n centers uniform over the circle, offset by half a cell so no center
    # sits on the duplicated -180/180 seam
    return -180.0 + 360.0 * (np.arange(n) + 0.5) / n


def bisquare_basis_2d(
    grid: StateGrid2D,
    resolutions: list[tuple[int, float]] | None = None,
    wrap: bool = True,
) -> FeatureMatrix:
    """Multiresolution compact-support bisquare bases on a 2-D product grid.

    Each level places its centers on a uniform n-by-n lattice over the angular
    domain and contributes columns (1 - (d/aperture)^2)^2 for d < aperture,
    0 beyond, with d the wrap-aware Euclidean distance in degrees (planar with
    wrap=False). Columns are concatenated across levels. Defaults to three
    levels of 7^2 + 15^2 + 24^2 = 850 functions with apertures 1.5x the
    inter-center spacing of each level.
    """
    if resolutions is None:
        resolutions = [(n, 1.5 * 360.0 / n) for n in (7, 15, 24)]
    if not resolutions:
        raise ValidationError("at least one resolution level is required")

    states = grid.centers
    blocks = []
    meta_levels = []
    for n_per_dim, aperture in resolutions:
        if n_per_dim < 1:
            raise ValidationError("n_per_dim must be positive")
        if aperture <= 0:
            raise ValidationError("apertures must be positive")
        lat = _lattice_1d(int(n_per_dim))
        cx = np.repeat(lat, n_per_dim)
        cy = np.tile(lat, n_per_dim)
        if wrap:
            dx = signed_delta(states[:, 0:1], cx[None, :])
            dy = signed_delta(states[:, 1:2], cy[None, :])
        else:
            dx = states[:, 0:1] - cx[None, :]
            dy = states[:, 1:2] - cy[None, :]
        d = np.hypot(dx, dy)
        B = np.where(d < aperture, (1.0 - (d / aperture) ** 2) ** 2, 0.0)
        zero_cols = np.where(~B.any(axis=0))[0]
        if zero_cols.size:
            raise ValidationError(
                f"aperture {aperture:.3g} at level n={n_per_dim} leaves "
                f"{zero_cols.size} basis columns identically zero"
            )
        blocks.append(B)
        meta_levels.append(
            {"n_per_dim": int(n_per_dim), "aperture": float(aperture), "centers_1d": lat.tolist()}
        )
    X = np.hstack(blocks)
    return FeatureMatrix(
        values=X,
        kind="bisquare_2d",
        metadata={"levels": meta_levels, "wrap": bool(wrap)},
    )
