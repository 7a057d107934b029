"""Ingestion of raw positional trajectories onto the 2-D misalignment grid.

The pipeline rescales pixel positions to the unit square, derives headings
from forward displacements, computes local misalignment (against all other
agents in the same experiment, radius unlimited) and target misalignment
(direction to a fixed target point minus heading), bins both onto circular
grids, and pools transition counts over experiments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.special import ndtr

from .angles import signed_delta
from .errors import ValidationError
from .grids import StateGrid, StateGrid2D, misalignment_grid_2d
from .inference import CostToGoSummary

REQUIRED_COLUMNS = ("experiment_id", "agent_id", "t", "x", "y")


@dataclass(frozen=True)
class ExperimentConfig:
    """Arena geometry and discretization settings.

    arena_bounds is (x_min, y_min, x_max, y_max) in raw (pixel) units;
    target_point is in normalized unit-square coordinates.
    """

    target_point: tuple[float, float]
    arena_bounds: tuple[float, float, float, float]
    n_bins_per_dim: int = 36
    include_self: bool = True

    def __post_init__(self):
        x_min, y_min, x_max, y_max = self.arena_bounds
        if not (x_max > x_min and y_max > y_min):
            raise ValidationError("arena_bounds must have positive extent")
        tx, ty = self.target_point
        if not (0.0 <= tx <= 1.0 and 0.0 <= ty <= 1.0):
            raise ValidationError("target_point must lie inside the unit square")
        if self.n_bins_per_dim < 1:
            raise ValidationError("n_bins_per_dim must be positive")

    def grid(self) -> StateGrid2D:
        return misalignment_grid_2d(self.n_bins_per_dim)


@dataclass(frozen=True)
class IngestReport:
    """Validation summary produced alongside the rescaled table."""

    n_rows: int
    n_experiments: int
    n_agents: int
    notes: list[str] = field(default_factory=list)


def ingest(csv_path, config: ExperimentConfig) -> tuple[pd.DataFrame, IngestReport]:
    """Load, validate, and rescale a raw trajectory CSV.

    Requires columns experiment_id, agent_id, t, x, y. Within each
    (experiment, agent) series, t must be strictly increasing in unit steps
    and at least two frames long. Positions are mapped affinely from
    arena_bounds onto the unit square.
    """
    table = pd.read_csv(csv_path, dtype={"experiment_id": str, "agent_id": str})
    missing = [c for c in REQUIRED_COLUMNS if c not in table.columns]
    if missing:
        raise ValidationError(f"input CSV is missing required columns {missing}")
    table = table.loc[:, list(REQUIRED_COLUMNS)].copy()
    table["t"] = table["t"].astype(int)
    table[["x", "y"]] = table[["x", "y"]].astype(float)

    dup = table.duplicated(subset=["experiment_id", "agent_id", "t"])
    if dup.any():
        row = table[dup].iloc[0]
        raise ValidationError(
            f"duplicate frame for experiment {row.experiment_id!r}, agent "
            f"{row.agent_id!r}, t={int(row.t)} (CSV row {int(dup.idxmax()) + 2})"
        )

    for (exp, agent), group in table.groupby(["experiment_id", "agent_id"], sort=False):
        t = group["t"].to_numpy()
        if t.size < 2:
            raise ValidationError(
                f"agent {agent!r} in experiment {exp!r} has fewer than 2 frames"
            )
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise ValidationError(
                f"time is not strictly increasing for agent {agent!r} in experiment {exp!r}"
            )
        if np.any(dt != 1):
            raise ValidationError(
                f"time has gaps for agent {agent!r} in experiment {exp!r}; "
                "frames must advance in unit steps"
            )

    x_min, y_min, x_max, y_max = config.arena_bounds
    table["x"] = (table["x"] - x_min) / (x_max - x_min)
    table["y"] = (table["y"] - y_min) / (y_max - y_min)

    report = IngestReport(
        n_rows=len(table),
        n_experiments=table["experiment_id"].nunique(),
        n_agents=table.groupby("experiment_id")["agent_id"].nunique().sum(),
        notes=[],
    )
    return table.sort_values(["experiment_id", "agent_id", "t"], kind="stable").reset_index(
        drop=True
    ), report


def derive_states(table: pd.DataFrame, config: ExperimentConfig) -> pd.DataFrame:
    """Compute misalignment states per frame from a rescaled table.

    Headings come from the forward displacement t -> t+1, so each agent's
    final frame carries no state; a zero-displacement frame inherits the
    previous frame's heading, and leading stationary frames are dropped.
    Local misalignment uses all other agents of the same experiment with a
    defined heading at the same time (plus the agent itself when
    include_self is set). Returns a frame with columns experiment_id,
    agent_id, t, local_deg, target_deg, state_index.
    """
    grid = config.grid()
    tx, ty = config.target_point
    out = []
    for exp, exp_table in table.groupby("experiment_id", sort=False):
        agents = exp_table["agent_id"].unique()
        t_all = np.arange(exp_table["t"].min(), exp_table["t"].max() + 1)
        n_t = t_all.size
        offset = int(t_all[0])

        heading = np.full((len(agents), n_t), np.nan)
        px = np.full((len(agents), n_t), np.nan)
        py = np.full((len(agents), n_t), np.nan)
        for a_idx, agent in enumerate(agents):
            g = exp_table[exp_table["agent_id"] == agent]
            t = g["t"].to_numpy() - offset
            x = g["x"].to_numpy()
            y = g["y"].to_numpy()
            px[a_idx, t] = x
            py[a_idx, t] = y
            dx, dy = np.diff(x), np.diff(y)
            h = np.degrees(np.arctan2(dy, dx))
            moving = (dx != 0.0) | (dy != 0.0)
            h = np.where(moving, h, np.nan)
            # stationary frames inherit the previous heading; leading ones stay undefined
            for k in range(1, h.size):
                if np.isnan(h[k]) and not np.isnan(h[k - 1]):
                    h[k] = h[k - 1]
            heading[a_idx, t[:-1]] = h

        rad = np.radians(heading)
        sin_sum = np.nansum(np.sin(rad), axis=0)
        cos_sum = np.nansum(np.cos(rad), axis=0)
        defined = ~np.isnan(heading)

        for a_idx, agent in enumerate(agents):
            cols = np.where(defined[a_idx])[0]
            if cols.size == 0:
                continue
            s = sin_sum[cols].copy()
            c = cos_sum[cols].copy()
            if not config.include_self:
                s -= np.sin(rad[a_idx, cols])
                c -= np.cos(rad[a_idx, cols])
                lone = (defined[:, cols].sum(axis=0) - 1) == 0
                s[lone], c[lone] = np.nan, np.nan
            mean_dir = np.degrees(np.arctan2(s, c))
            local = signed_delta(mean_dir, heading[a_idx, cols])
            to_target = np.degrees(
                np.arctan2(ty - py[a_idx, cols], tx - px[a_idx, cols])
            )
            target = signed_delta(to_target, heading[a_idx, cols])
            keep = ~np.isnan(local)
            out.append(
                pd.DataFrame(
                    {
                        "experiment_id": exp,
                        "agent_id": agent,
                        "t": t_all[cols[keep]],
                        "local_deg": local[keep],
                        "target_deg": target[keep],
                        "state_index": grid.bin_index(local[keep], target[keep]),
                    }
                )
            )
    if not out:
        raise ValidationError("no usable frames: every agent was stationary throughout")
    return pd.concat(out, ignore_index=True).sort_values(
        ["experiment_id", "agent_id", "t"], kind="stable"
    ).reset_index(drop=True)


def count_state_transitions(states: pd.DataFrame, n_states: int) -> np.ndarray:
    """Pool transition counts over all (experiment, agent) series.

    Only consecutive frames (t, t+1) within one series contribute.
    """
    counts = np.zeros((n_states, n_states), dtype=np.int64)
    for _, group in states.groupby(["experiment_id", "agent_id"], sort=False):
        t = group["t"].to_numpy()
        s = group["state_index"].to_numpy()
        consecutive = np.diff(t) == 1
        np.add.at(counts, (s[:-1][consecutive], s[1:][consecutive]), 1)
    return counts


def uniform_passive(n_states: int) -> np.ndarray:
    """Discrete-uniform passive dynamics: every entry 1/J."""
    if n_states < 1:
        raise ValidationError("n_states must be positive")
    return np.full((n_states, n_states), 1.0 / n_states)


def _wrapped_normal_kernel(grid: StateGrid, sd_deg: float) -> np.ndarray:
    """Row-stochastic 1-D kernel: normal steps integrated over bins, with the
    tail mass folded across the circular wrap (aliases within two periods)."""
    h = grid.half_width
    delta = signed_delta(grid.centers[None, :], grid.centers[:, None])
    mass = np.zeros_like(delta)
    for k in range(-2, 3):
        shifted = delta + 360.0 * k
        mass += ndtr((shifted + h) / sd_deg) - ndtr((shifted - h) / sd_deg)
    return mass / mass.sum(axis=1, keepdims=True)


def random_walk_passive(grid: StateGrid2D, sd_deg: float = 90.0) -> np.ndarray:
    """Independent wrapped-normal random walk on the 2-D product grid.

    Each dimension moves independently with standard deviation sd_deg; the
    2-D transition probability is the product of the 1-D bin masses. At the
    default 90 degrees every entry is strictly positive.
    """
    if sd_deg <= 0:
        raise ValidationError("sd_deg must be positive")
    k_local = _wrapped_normal_kernel(grid.local, sd_deg)
    k_target = _wrapped_normal_kernel(grid.target, sd_deg)
    P = np.kron(k_local, k_target)
    return P / P.sum(axis=1, keepdims=True)


def marginal_ctg(
    summary: CostToGoSummary, grid: StateGrid2D, dimension: str
) -> tuple[np.ndarray, np.ndarray]:
    """Marginal posterior-mean cost-to-go along one state dimension.

    Averages the mean surface over all bins of the other dimension and shifts
    the curve to minimum 0. Returns (bin centers, curve).
    """
    if dimension not in ("local", "target"):
        raise ValidationError("dimension must be 'local' or 'target'")
    surface = np.asarray(summary.mean).reshape(grid.local.count, grid.target.count)
    if dimension == "local":
        curve = surface.mean(axis=1)
        centers = grid.local.centers
    else:
        curve = surface.mean(axis=0)
        centers = grid.target.centers
    return centers, curve - curve.min()
