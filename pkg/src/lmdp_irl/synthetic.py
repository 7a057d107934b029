"""Synthetic multi-experiment positional data driven by a 2-D grid policy.

Produces trajectory tables in the same CSV schema the ingestion pipeline
consumes, so the full estimate path can be validated end to end without any
real dataset. Agents swim toward-or-around a fixed target point; at every
step each agent samples a next (local, target) misalignment state from the
supplied policy and turns so that, with the neighborhood frozen, its local
misalignment would land on the sampled local bin center.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from .angles import signed_delta, wrap_degrees
from .errors import ValidationError
from .grids import StateGrid2D
from .lmdp import ControlledPolicy
from .pipeline import ExperimentConfig

PIXELS_PER_UNIT = 1000.0


def generate_experiments(
    policy: ControlledPolicy,
    grid: StateGrid2D,
    n_experiments: int = 26,
    n_agents: int = 10,
    n_steps: int = 100,
    speed: float = 0.0075,
    target_point: tuple[float, float] = (1.2, 1.2),
    seed: int = 0,
) -> tuple[pd.DataFrame, ExperimentConfig]:
    """Simulate policy-driven groups and return (raw table, experiment config).

    The simulation runs in continuous coordinates with the given speed per
    step; each experiment starts its agents in a small patch away from the
    target with uniform random headings. Output positions are scaled to
    pixel-like units and the experiment config carries a square arena box
    (data and target, padded) so the ingest rescale is isotropic and
    angle-preserving. Deterministic in the seed.
    """
    if policy.probs.shape != (grid.count, grid.count):
        raise ValidationError("policy dimensions must match the grid")
    tx, ty = target_point

    row_cdf = np.cumsum(policy.probs, axis=1)
    row_cdf[:, -1] = 1.0
    streams = np.random.SeedSequence(seed).spawn(n_experiments)

    frames = []
    for e in range(n_experiments):
        rng = np.random.default_rng(streams[e])
        x = 0.15 + 0.1 * rng.random(n_agents)
        y = 0.15 + 0.1 * rng.random(n_agents)
        theta = wrap_degrees(180.0 - 360.0 * rng.random(n_agents))

        xs = np.empty((n_agents, n_steps + 1))
        ys = np.empty((n_agents, n_steps + 1))
        xs[:, 0], ys[:, 0] = x, y

        for t in range(1, n_steps + 1):
            local, target = _misalignment_components(x, y, theta, tx, ty)
            state = grid.bin_index(local, target)
            u = rng.random(n_agents)
            sampled = (u[:, None] > row_cdf[state]).sum(axis=1)
            local_bin, _ = grid.bins_of(sampled)
            # turn so the local misalignment lands on the sampled bin center
            # if the neighborhood mean stays put
            phi = signed_delta(local, grid.local.centers[local_bin])
            theta = wrap_degrees(theta + phi)
            x = x + speed * np.cos(np.radians(theta))
            y = y + speed * np.sin(np.radians(theta))
            xs[:, t], ys[:, t] = x, y

        for a in range(n_agents):
            frames.append(
                pd.DataFrame(
                    {
                        "experiment_id": f"exp{e:02d}",
                        "agent_id": f"a{a:02d}",
                        "t": np.arange(n_steps + 1),
                        "x": PIXELS_PER_UNIT * xs[a],
                        "y": PIXELS_PER_UNIT * ys[a],
                    }
                )
            )

    table = pd.concat(frames, ignore_index=True)

    # square arena box around data and target, padded, so rescaling is isotropic
    lo = min(table["x"].min(), table["y"].min(), PIXELS_PER_UNIT * tx)
    hi = max(table["x"].max(), table["y"].max(), PIXELS_PER_UNIT * ty)
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    side = hi - lo
    config = ExperimentConfig(
        target_point=((PIXELS_PER_UNIT * tx - lo) / side, (PIXELS_PER_UNIT * ty - lo) / side),
        arena_bounds=(lo, lo, hi, hi),
        n_bins_per_dim=grid.local.count,
    )
    return table, config


def _misalignment_components(x, y, theta, tx, ty):
    """Local (all-others-plus-self mean) and target misalignment for all agents."""
    rad = np.radians(theta)
    mean_dir = np.degrees(np.arctan2(np.sin(rad).sum(), np.cos(rad).sum()))
    local = signed_delta(mean_dir, theta)
    to_target = np.degrees(np.arctan2(ty - y, tx - x))
    target = signed_delta(to_target, theta)
    return local, target
