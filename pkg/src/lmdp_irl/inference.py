"""Bayesian estimation of costs-to-go from observed transition counts.

The likelihood is the product over observed transitions of the optimal-policy
probabilities induced by v = X @ beta; the prior is hierarchical Gaussian on
the weights with a Gamma(0.1, 0.1) (shape-rate) precision. The precision is
carried on the log scale with the Jacobian term included, so both samplers
work on a fully unconstrained vector [beta, log_tau].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln, logsumexp

from .basis import FeatureMatrix
from .errors import ValidationError
from .lmdp import validate_passive
from .samplers import AdviConfig, HmcConfig, advi_fit, hmc_sample
from .spp import TransitionCounts

GAMMA_SHAPE = 0.1
GAMMA_RATE = 0.1


@dataclass(frozen=True)
class ParameterVector:
    """Basis weights plus the log of the prior precision."""

    beta: np.ndarray
    log_tau: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        object.__setattr__(self, "log_tau", float(self.log_tau))

    @property
    def tau(self) -> float:
        return float(np.exp(self.log_tau))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.beta, [self.log_tau]])

    @classmethod
    def from_array(cls, x: np.ndarray) -> "ParameterVector":
        x = np.asarray(x, dtype=float)
        return cls(beta=x[:-1], log_tau=float(x[-1]))


class IrlModel:
    """Transition counts, passive dynamics, and features bound into one target.

    Construction validates that all shapes agree, that at least one transition
    was observed, and that no observed transition has zero passive probability
    (such a count cannot arise under any policy absolutely continuous with the
    passive dynamics). Row quantities used by the likelihood are precomputed.
    """

    def __init__(
        self,
        counts: TransitionCounts | np.ndarray,
        passive: np.ndarray,
        features: FeatureMatrix,
        gamma: float = 1.0,
    ):
        y = counts.counts if isinstance(counts, TransitionCounts) else np.asarray(counts)
        if y.ndim != 2 or y.shape[0] != y.shape[1]:
            raise ValidationError("counts must be a square table")
        if np.any(y < 0):
            raise ValidationError("counts must be nonnegative")
        P = validate_passive(passive)
        if P.shape != y.shape:
            raise ValidationError("counts and passive dynamics shapes differ")
        if features.n_states != y.shape[0]:
            raise ValidationError("feature matrix rows must match the number of states")
        if not 0.0 <= gamma <= 1.0:
            raise ValidationError(f"gamma must lie in [0, 1], got {gamma}")
        if y.sum() == 0:
            raise ValidationError("counts table has no observed transitions")
        impossible = (y > 0) & (P == 0.0)
        if np.any(impossible):
            i, j = np.argwhere(impossible)[0]
            raise ValidationError(
                f"observed transition ({int(i)}, {int(j)}) has zero passive probability; "
                "the data are incompatible with these passive dynamics"
            )

        self.counts = np.asarray(y, dtype=float)
        self.passive = P
        self.features = features
        self.gamma = float(gamma)

        with np.errstate(divide="ignore"):
            self._log_passive = np.where(P > 0, np.log(P), -np.inf)
        self._row_totals = self.counts.sum(axis=1)
        self._col_totals = self.counts.sum(axis=0)
        self._active = np.where(self._row_totals > 0)[0]
        mask = self.counts > 0
        self._const = float(np.sum(self.counts[mask] * self._log_passive[mask]))

    @property
    def n_states(self) -> int:
        return self.counts.shape[0]

    @property
    def n_basis(self) -> int:
        return self.features.n_basis

    def _row_logweights(self, v: np.ndarray) -> np.ndarray:
        # (n_active, J) log of unnormalized policy over rows that carry data
        return self._log_passive[self._active] - self.gamma * v[None, :]


def log_likelihood(model: IrlModel, params: ParameterVector) -> float:
    """Log probability of the observed transitions under v = X @ beta."""
    v = model.features.values @ params.beta
    A = model._row_logweights(v)
    row_norm = logsumexp(A, axis=1)
    n = model._row_totals[model._active]
    return float(
        model._const - model.gamma * float(model._col_totals @ v) - float(n @ row_norm)
    )


def _log_prior_and_grad(params: ParameterVector, n_basis: int):
    beta, log_tau = params.beta, params.log_tau
    tau = np.exp(log_tau)
    ss = float(beta @ beta)
    logp = (
        0.5 * n_basis * (log_tau - np.log(2.0 * np.pi))
        - 0.5 * tau * ss
        + GAMMA_SHAPE * np.log(GAMMA_RATE)
        - gammaln(GAMMA_SHAPE)
        + (GAMMA_SHAPE - 1.0) * log_tau
        - GAMMA_RATE * tau
        + log_tau  # Jacobian of tau = exp(log_tau)
    )
    grad_beta = -tau * beta
    grad_log_tau = 0.5 * n_basis - 0.5 * tau * ss + (GAMMA_SHAPE - 1.0) - GAMMA_RATE * tau + 1.0
    return float(logp), grad_beta, float(grad_log_tau)


def log_posterior(model: IrlModel, params: ParameterVector) -> float:
    """Log likelihood plus hierarchical prior, on the unconstrained scale."""
    logp, _, _ = _log_prior_and_grad(params, model.n_basis)
    return log_likelihood(model, params) + logp


def grad_log_posterior(model: IrlModel, params: ParameterVector) -> ParameterVector:
    """Analytic gradient of log_posterior w.r.t. (beta, log_tau)."""
    v = model.features.values @ params.beta
    A = model._row_logweights(v)
    row_norm = logsumexp(A, axis=1)
    policy = np.exp(A - row_norm[:, None])
    n = model._row_totals[model._active]
    g_v = model.gamma * (policy.T @ n - model._col_totals)
    _, grad_beta_prior, grad_lt_prior = _log_prior_and_grad(params, model.n_basis)
    return ParameterVector(
        beta=model.features.values.T @ g_v + grad_beta_prior,
        log_tau=grad_lt_prior,
    )


def _posterior_flat(model: IrlModel):
    def logp_grad(x: np.ndarray):
        params = ParameterVector.from_array(x)
        logp = log_posterior(model, params)
        grad = grad_log_posterior(model, params)
        return logp, grad.as_array()

    return logp_grad


@dataclass(frozen=True)
class PosteriorSample:
    """Posterior draws over (beta, log_tau) with sampler diagnostics."""

    beta: np.ndarray  # (n_draws, n_basis)
    log_tau: np.ndarray  # (n_draws,)
    method: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        beta = np.atleast_2d(np.asarray(self.beta, dtype=float))
        log_tau = np.asarray(self.log_tau, dtype=float)
        if beta.shape[0] != log_tau.shape[0] or beta.shape[0] == 0:
            raise ValidationError("posterior sample must be nonempty and consistent")
        if not (np.all(np.isfinite(beta)) and np.all(np.isfinite(log_tau))):
            raise ValidationError("posterior draws must be finite")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "log_tau", log_tau)

    @property
    def n_draws(self) -> int:
        return self.beta.shape[0]


def sample_mcmc(model: IrlModel, config: HmcConfig | None = None) -> PosteriorSample:
    """Posterior draws by Hamiltonian Monte Carlo (see samplers.hmc_sample)."""
    config = config or HmcConfig()
    x0 = np.zeros(model.n_basis + 1)
    draws, diagnostics = hmc_sample(_posterior_flat(model), x0, config)
    return PosteriorSample(
        beta=draws[:, :-1], log_tau=draws[:, -1], method="mcmc", diagnostics=diagnostics
    )


def fit_variational(model: IrlModel, config: AdviConfig | None = None) -> PosteriorSample:
    """Posterior draws from a mean-field Gaussian fit (see samplers.advi_fit)."""
    config = config or AdviConfig()
    x0 = np.zeros(model.n_basis + 1)
    draws, diagnostics = advi_fit(_posterior_flat(model), x0, config)
    return PosteriorSample(
        beta=draws[:, :-1], log_tau=draws[:, -1], method="variational", diagnostics=diagnostics
    )


def map_estimate(model: IrlModel, x0: np.ndarray | None = None) -> ParameterVector:
    """Posterior mode by L-BFGS on the analytic gradient."""
    logp_grad = _posterior_flat(model)

    def neg(x):
        logp, grad = logp_grad(x)
        return -logp, -grad

    x0 = np.zeros(model.n_basis + 1) if x0 is None else np.asarray(x0, dtype=float)
    result = minimize(neg, x0, jac=True, method="L-BFGS-B")
    return ParameterVector.from_array(result.x)


@dataclass(frozen=True)
class CostToGoSummary:
    """Posterior mean and pointwise 95% band for v, under one common shift.

    The shift subtracts the minimum of the posterior mean from the mean and
    from both interval curves, so the stored mean has minimum exactly 0 and
    the band stays aligned with it.
    """

    mean: np.ndarray
    lower95: np.ndarray
    upper95: np.ndarray
    shift: float = 0.0

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        lower = np.asarray(self.lower95, dtype=float)
        upper = np.asarray(self.upper95, dtype=float)
        if not (mean.shape == lower.shape == upper.shape):
            raise ValidationError("summary curves must have equal length")
        if np.any(lower > mean + 1e-9) or np.any(upper < mean - 1e-9):
            raise ValidationError("interval curves must bracket the mean")
        if abs(mean.min()) > 1e-9:
            raise ValidationError("summary mean must be shifted to minimum 0")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "lower95", lower)
        object.__setattr__(self, "upper95", upper)


def summarize(sample: PosteriorSample, features: FeatureMatrix) -> CostToGoSummary:
    """Pointwise posterior mean and 2.5%/97.5% quantiles of v = X @ beta.

    One common constant (the minimum of the mean curve) is subtracted from
    the mean and from both quantile curves.
    """
    v_draws = sample.beta @ features.values.T  # (n_draws, J)
    mean = v_draws.mean(axis=0)
    lower = np.quantile(v_draws, 0.025, axis=0)
    upper = np.quantile(v_draws, 0.975, axis=0)
    shift = float(mean.min())
    return CostToGoSummary(
        mean=mean - shift, lower95=lower - shift, upper95=upper - shift, shift=shift
    )
