"""Self-propelled-particle model embedded in the LMDP framework.

Agents move at constant speed on the unbounded plane and align with neighbors
inside a fixed radius. The behavioral state is the local misalignment angle
(circular-mean neighborhood direction minus own heading) discretized onto a
36-bin circular grid; a 13-action turning-angle kernel smoothed with Gaussian
noise defines the passive dynamics over that grid.

Simulation follows the synchronous protocol: every agent samples a target
misalignment state from the policy row of its current state, turns by the
wrap-aware difference between the target bin center and its current
misalignment value, then moves; the realized misalignment is re-derived from
the new neighbor geometry. Trajectories can record either the re-derived
geometric states (default) or the sampled chain states (`record="sampled"`),
which makes the transition counts exact multinomial draws from the policy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .angles import circular_mean_deg, signed_delta, wrap_degrees
from .errors import ValidationError
from .grids import StateGrid, regular_circular_grid
from .lmdp import ControlledPolicy

DEFAULT_TURNING_ANGLES = tuple(float(a) for a in range(-60, 61, 10))


@dataclass(frozen=True)
class SppConfig:
    """Parameters of the particle model and its turning-angle action set."""

    n_agents: int = 200
    n_steps: int = 100
    speed: float = 1.0
    radius_rho: float = 0.1
    sigma_deg: float = 10.0
    turning_angles: tuple[float, ...] = DEFAULT_TURNING_ANGLES
    seed: int = 0

    def __post_init__(self):
        if self.n_agents < 1 or self.n_steps < 1:
            raise ValidationError("n_agents and n_steps must be positive")
        if self.speed <= 0 or self.radius_rho <= 0 or self.sigma_deg <= 0:
            raise ValidationError("speed, radius_rho and sigma_deg must be positive")
        angles = tuple(float(a) for a in self.turning_angles)
        if list(angles) != sorted(angles):
            raise ValidationError("turning_angles must be sorted")
        if not np.allclose(np.asarray(angles) + np.asarray(angles)[::-1], 0.0):
            raise ValidationError("turning_angles must be symmetric about 0")
        object.__setattr__(self, "turning_angles", angles)


@dataclass(frozen=True)
class AgentState:
    """Planar position and heading of one agent; heading lies in (-180, 180]."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(wrap_degrees(self.theta)))


@dataclass(frozen=True)
class Trajectory:
    """State-index sequence of one agent at consecutive time indices from 0."""

    agent_id: int
    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=int)
        s = np.asarray(self.states, dtype=int)
        if t.shape != s.shape:
            raise ValidationError("times and states must have equal length")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)


@dataclass(frozen=True)
class TransitionCounts:
    """Pooled transition frequency table y[i, j] over agents and time."""

    counts: np.ndarray
    total: int = field(init=False)

    def __post_init__(self):
        y = np.asarray(self.counts)
        if y.ndim != 2 or y.shape[0] != y.shape[1]:
            raise ValidationError("counts must be a square table")
        if np.any(y < 0) or not np.issubdtype(y.dtype, np.integer):
            raise ValidationError("counts must be nonnegative integers")
        object.__setattr__(self, "counts", y)
        object.__setattr__(self, "total", int(y.sum()))


def misalignment_grid() -> StateGrid:
    """The 36-bin circular misalignment grid with centers -170, ..., 170, 180."""
    return regular_circular_grid(36)


def local_misalignment(agent: AgentState, others: list[AgentState], rho: float) -> float:
    """Circular-mean neighborhood direction minus the agent's heading, degrees.

    The neighborhood is every agent within Euclidean distance rho inclusive,
    always including the agent itself, so the result is 0 when it is alone.
    """
    headings = [agent.theta]
    for other in others:
        if np.hypot(other.x - agent.x, other.y - agent.y) <= rho:
            headings.append(other.theta)
    return float(signed_delta(circular_mean_deg(headings), agent.theta))


def _misalignments(x: np.ndarray, y: np.ndarray, theta: np.ndarray, rho: float) -> np.ndarray:
    """Vectorized local misalignment for all agents at once (self included)."""
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    within = dx * dx + dy * dy <= rho * rho
    rad = np.radians(theta)
    mean_dir = np.degrees(np.arctan2(within @ np.sin(rad), within @ np.cos(rad)))
    return signed_delta(mean_dir, theta)


def spp_state_costs(grid: StateGrid) -> np.ndarray:
    """Staircase state costs on absolute misalignment: 0 / 2.5 / 4 / 5."""
    s = np.abs(grid.centers)
    return np.select([s <= 5.0, s <= 15.0, s <= 25.0], [0.0, 2.5, 4.0], default=5.0)


def spp_passive_dynamics(grid: StateGrid, config: SppConfig) -> np.ndarray:
    """Passive transition probabilities from the turning-angle mixture.

    Mass from center s_i to the bin around s_j integrates a normal kernel of
    width sigma_deg over the bin, summed over all discrete turning angles,
    with the displacement taken wrap-aware; rows are normalized to sum to 1.
    """
    if not grid.circular:
        raise ValidationError("the misalignment grid must be circular")
    h = grid.half_width
    d = signed_delta(grid.centers[None, :], grid.centers[:, None])  # [i, j] = s_j - s_i
    mass = np.zeros_like(d)
    for phi in config.turning_angles:
        mass += ndtr((d - phi + h) / config.sigma_deg) - ndtr((d - phi - h) / config.sigma_deg)
    return mass / mass.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class SimulationResult:
    """Trajectories, pooled transition counts, and raw (x, y, theta) paths."""

    trajectories: list[Trajectory]
    counts: TransitionCounts
    paths: np.ndarray  # (n_agents, n_steps + 1, 3)


def simulate(
    config: SppConfig,
    policy: ControlledPolicy,
    grid: StateGrid,
    record: str = "geometric",
) -> SimulationResult:
    """Run the synchronous multi-agent simulation under a controlled policy.

    Positions start uniform on the unit square and headings uniform on
    (-180, 180], drawn from per-step random streams derived from the seed so
    results are bit-reproducible and independent of agent iteration order.
    Every step uses only the previous step's neighbor configuration.

    record="geometric" stores the misalignment states re-derived from the
    actual neighbor geometry after everyone moves; record="sampled" stores
    (and conditions the chain on) the policy's sampled target states instead.
    """
    if record not in ("geometric", "sampled"):
        raise ValidationError(f"unknown record mode {record!r}")
    J = grid.count
    if policy.probs.shape != (J, J):
        raise ValidationError("policy dimensions must match the grid")

    streams = np.random.SeedSequence(config.seed).spawn(config.n_steps + 1)
    init_rng = np.random.default_rng(streams[0])
    n = config.n_agents

    x = init_rng.random(n)
    y = init_rng.random(n)
    theta = wrap_degrees(180.0 - 360.0 * init_rng.random(n))

    mis = _misalignments(x, y, theta, config.radius_rho)
    state = grid.bin_index(mis)

    paths = np.empty((n, config.n_steps + 1, 3))
    states = np.empty((n, config.n_steps + 1), dtype=int)
    paths[:, 0, 0], paths[:, 0, 1], paths[:, 0, 2] = x, y, theta
    states[:, 0] = state

    row_cdf = np.cumsum(policy.probs, axis=1)
    row_cdf[:, -1] = 1.0

    for t in range(1, config.n_steps + 1):
        rng = np.random.default_rng(streams[t])
        u = rng.random(n)
        sampled = (u[:, None] > row_cdf[state]).sum(axis=1)

        # turn toward the sampled target: state-update convention, target = current + turn
        phi = signed_delta(grid.centers[sampled], mis)
        x = x + config.speed * np.cos(np.radians(theta))
        y = y + config.speed * np.sin(np.radians(theta))
        theta = wrap_degrees(theta + phi)

        mis = _misalignments(x, y, theta, config.radius_rho)
        geometric = grid.bin_index(mis)
        state = geometric if record == "geometric" else sampled

        paths[:, t, 0], paths[:, t, 1], paths[:, t, 2] = x, y, theta
        states[:, t] = state

    times = np.arange(config.n_steps + 1)
    trajectories = [Trajectory(agent_id=i, times=times, states=states[i]) for i in range(n)]
    return SimulationResult(
        trajectories=trajectories,
        counts=count_transitions(trajectories, J),
        paths=paths,
    )


def count_transitions(trajectories: list[Trajectory], n_states: int) -> TransitionCounts:
    """Pool y[i, j] = number of observed i -> j steps over all trajectories."""
    counts = np.zeros((n_states, n_states), dtype=np.int64)
    for traj in trajectories:
        if traj.times.size == 0:
            continue
        if traj.times.size > 1 and np.any(np.diff(traj.times) != 1):
            raise ValidationError(
                f"trajectory {traj.agent_id} has non-consecutive time indices"
            )
        s = traj.states
        if np.any(s < 0) or np.any(s >= n_states):
            raise ValidationError(f"trajectory {traj.agent_id} has out-of-range states")
        np.add.at(counts, (s[:-1], s[1:]), 1)
    return TransitionCounts(counts=counts)
