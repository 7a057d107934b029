"""Linearly-solvable MDP core: optimal policies, the desirability eigenproblem,
and recovery of immediate state costs from costs-to-go.

Conventions used throughout:

- passive dynamics P are a row-stochastic (J, J) matrix; row i is the
  transition law out of state i under no control;
- costs-to-go v are stored directly (desirability z = exp(-v) is materialized
  only on demand), and exp/sum reductions over v go through log-sum-exp
  centering so large cost scales cannot overflow;
- the eigen solve is the average-cost formulation (discount 1); the discount
  enters only through the policy map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import NumericalError, ValidationError
from .grids import StateGrid, StateGrid2D

ROW_SUM_TOL = 1e-12


def validate_passive(passive: np.ndarray) -> np.ndarray:
    """Check that a matrix is valid passive dynamics and return it as float64.

    Every row must sum to 1 within 1e-12 and all entries must lie in [0, 1];
    an all-zero row is rejected outright.
    """
    P = np.asarray(passive, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValidationError(f"passive dynamics must be square, got shape {P.shape}")
    if np.any(P < 0) or np.any(P > 1):
        raise ValidationError("passive dynamics entries must lie in [0, 1]")
    row_sums = P.sum(axis=1)
    bad = np.where(np.abs(row_sums - 1.0) > ROW_SUM_TOL)[0]
    if bad.size:
        raise ValidationError(
            f"passive dynamics rows {bad[:5].tolist()} do not sum to 1 "
            f"(max deviation {np.abs(row_sums - 1.0).max():.3g})"
        )
    return P


@dataclass(frozen=True)
class LmdpProblem:
    """The LMDP tuple: passive dynamics, discount, optional state costs and grid."""

    passive: np.ndarray
    gamma: float = 1.0
    costs: np.ndarray | None = None
    grid: StateGrid | StateGrid2D | None = None

    def __post_init__(self):
        P = validate_passive(self.passive)
        object.__setattr__(self, "passive", P)
        if not 0.0 <= self.gamma <= 1.0:
            raise ValidationError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.costs is not None:
            r = np.asarray(self.costs, dtype=float)
            if r.shape != (P.shape[0],):
                raise ValidationError("costs length must match the number of states")
            if not np.all(np.isfinite(r)):
                raise ValidationError("costs must be finite")
            if np.any(np.exp(-r) == 0.0):
                raise ValidationError("exp(-costs) underflows to 0; rescale the costs")
            object.__setattr__(self, "costs", r)
        if self.grid is not None and self.grid.count != P.shape[0]:
            raise ValidationError("grid size does not match passive dynamics")

    @property
    def n_states(self) -> int:
        return self.passive.shape[0]


@dataclass(frozen=True)
class ControlledPolicy:
    """Optimal controlled transition probabilities with their log-ratio controls.

    controls[i, j] = log(probs[i, j] / passive[i, j]) on the support of the
    passive dynamics and 0 elsewhere.
    """

    probs: np.ndarray
    controls: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=float))
        object.__setattr__(self, "controls", np.asarray(self.controls, dtype=float))


def optimal_policy(problem: LmdpProblem, v: np.ndarray) -> ControlledPolicy:
    """Reweight the passive dynamics by exp(-gamma * v) and renormalize rows.

    Row i of the result is p_ij * exp(-gamma*v_j) / sum_k p_ik * exp(-gamma*v_k),
    evaluated along a log-sum-exp stabilized path so any finite v is safe.
    Support is preserved exactly: zero passive entries stay zero.
    """
    P = problem.passive
    v = np.asarray(v, dtype=float)
    if v.shape != (problem.n_states,):
        raise ValidationError("costs-to-go length must match the number of states")
    if not np.all(np.isfinite(v)):
        raise ValidationError("costs-to-go must be finite")

    with np.errstate(divide="ignore"):
        log_weights = np.where(P > 0, np.log(P) - problem.gamma * v[None, :], -np.inf)
    log_norm = logsumexp(log_weights, axis=1)
    probs = np.exp(log_weights - log_norm[:, None])
    probs /= probs.sum(axis=1, keepdims=True)

    controls = np.zeros_like(P)
    support = P > 0
    controls[support] = np.log(probs[support] / P[support])
    return ControlledPolicy(probs=probs, controls=controls)


def control_cost(policy_row: np.ndarray, passive_row: np.ndarray) -> float:
    """KL divergence of a controlled row from the passive row.

    Zero policy mass contributes nothing (0 * log 0 = 0); policy mass on a
    state with zero passive mass violates absolute continuity and is an error.
    """
    p = np.asarray(policy_row, dtype=float)
    q = np.asarray(passive_row, dtype=float)
    if p.shape != q.shape:
        raise ValidationError("policy and passive rows must have the same length")
    active = p > 0
    if np.any(q[active] == 0):
        j = int(np.where(active & (q == 0))[0][0])
        raise ValidationError(
            f"policy places mass on state {j} where the passive probability is 0"
        )
    return float(np.sum(p[active] * np.log(p[active] / q[active])))


@dataclass(frozen=True)
class ZIterationResult:
    """Converged solution of the desirability eigenproblem."""

    costs_to_go: np.ndarray
    eigenvalue: float
    n_iterations: int
    average_cost: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "average_cost", -float(np.log(self.eigenvalue)))

    @property
    def desirability(self) -> np.ndarray:
        return np.exp(-self.costs_to_go)


def z_iteration(
    passive: np.ndarray,
    costs: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> ZIterationResult:
    """Power iteration on z = (1/lambda) * diag(exp(-r)) * P * z.

    Starts from z = 1; each sweep estimates lambda as the maximum absolute
    entry of the updated vector before renormalizing by it, and stops once
    successive normalized iterates differ by less than tol in max-norm. The
    returned costs-to-go v = -log z have minimum exactly 0 because z is
    normalized to unit maximum. -log(lambda) is the average cost per step.

    Raises NumericalError if any desirability entry collapses to 0 (a state
    that cannot reach the recurrent class) or the sweep limit is exhausted.
    """
    problem = LmdpProblem(passive=passive, costs=np.asarray(costs, dtype=float))
    G = np.exp(-problem.costs)[:, None] * problem.passive

    z = np.ones(problem.n_states)
    for sweep in range(1, max_iter + 1):
        z_new = G @ z
        lam = float(np.abs(z_new).max())
        if lam == 0.0 or not np.isfinite(lam):
            raise NumericalError("desirability iteration produced a zero or non-finite vector")
        z_new = z_new / lam
        dead = np.where(z_new == 0.0)[0]
        if dead.size:
            raise NumericalError(
                f"desirability collapsed to 0 at state {int(dead[0])}; "
                "the passive dynamics are reducible from that state"
            )
        if np.abs(z_new - z).max() < tol:
            v = -np.log(z_new)
            return ZIterationResult(costs_to_go=v, eigenvalue=lam, n_iterations=sweep)
        z = z_new
    raise NumericalError(f"desirability iteration did not converge in {max_iter} sweeps")


def recover_state_costs(
    v: np.ndarray, passive: np.ndarray, eigenvalue: float
) -> np.ndarray:
    """Invert the eigen relation to get immediate costs from costs-to-go.

    r_i = v_i - log(lambda) + log(sum_j p_ij * exp(-v_j)), with the inner sum
    evaluated by log-sum-exp. This is exact at a z-iteration fixed point, so
    the round trip costs -> (v, lambda) -> costs is the identity.
    """
    P = validate_passive(passive)
    v = np.asarray(v, dtype=float)
    if v.shape != (P.shape[0],):
        raise ValidationError("costs-to-go length must match the passive dynamics")
    if eigenvalue <= 0:
        raise ValidationError("eigenvalue must be positive")
    log_reach = logsumexp(-v[None, :], b=P, axis=1)
    return v - np.log(eigenvalue) + log_reach


def shift_min_zero(v: np.ndarray) -> np.ndarray:
    """Shift costs-to-go so the minimum is exactly 0 (idempotent)."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValidationError("costs-to-go must be finite")
    return v - v.min()


def bellman_residual(problem: LmdpProblem, v: np.ndarray, eigenvalue: float) -> float:
    """Max-norm defect of v in the average-cost optimality equation.

    Computes max_i |v_i - (log(lambda) + r_i + KL_i + E_policy[v])| where the
    KL term and the expectation use the optimal policy for v. Zero exactly at
    the average-cost fixed point.
    """
    if problem.costs is None:
        raise ValidationError("bellman_residual requires the problem's costs")
    v = np.asarray(v, dtype=float)
    policy = optimal_policy(problem, v)
    kl = np.array(
        [control_cost(policy.probs[i], problem.passive[i]) for i in range(problem.n_states)]
    )
    rhs = np.log(eigenvalue) + problem.costs + kl + policy.probs @ v
    return float(np.abs(v - rhs).max())
