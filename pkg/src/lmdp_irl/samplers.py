"""Gradient-based posterior approximation: Hamiltonian Monte Carlo and a
mean-field Gaussian variational fit.

Both routines are generic over a target: they take a callable returning
(log density, gradient) at a point, so the same machinery serves the IRL
posterior and the closed-form sanity targets used in tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

DIVERGENCE_ENERGY = 1000.0


@dataclass
class DualAveraging:
    """Step-size adaptation toward a target acceptance rate."""

    target_accept: float
    mu: float
    gamma: float = 0.05
    t0: float = 10.0
    kappa: float = 0.75
    log_eps: float = 0.0
    log_eps_bar: float = 0.0
    h_bar: float = 0.0
    count: int = 0

    def update(self, accept_prob: float) -> float:
        self.count += 1
        eta = 1.0 / (self.count + self.t0)
        self.h_bar = (1 - eta) * self.h_bar + eta * (self.target_accept - accept_prob)
        self.log_eps = self.mu - np.sqrt(self.count) / self.gamma * self.h_bar
        w = self.count ** (-self.kappa)
        self.log_eps_bar = w * self.log_eps + (1 - w) * self.log_eps_bar
        return float(np.exp(self.log_eps))

    @property
    def adapted(self) -> float:
        return float(np.exp(self.log_eps_bar))


def _leapfrog(logp_grad, q, p, grad, eps, inv_mass, n_steps):
    """Integrate Hamiltonian dynamics; returns (q, p, grad, logp, ok)."""
    p = p + 0.5 * eps * grad
    for step in range(n_steps):
        q = q + eps * inv_mass * p
        logp, grad = logp_grad(q)
        if not (np.isfinite(logp) and np.all(np.isfinite(grad))):
            return q, p, grad, -np.inf, False
        if step < n_steps - 1:
            p = p + eps * grad
    p = p + 0.5 * eps * grad
    return q, p, grad, logp, True


def _initial_step_size(logp_grad, q0, rng, inv_mass):
    """Double/halve until one leapfrog step has acceptance near 0.5."""
    eps = 1.0
    logp0, grad0 = logp_grad(q0)
    p0 = rng.standard_normal(q0.size) / np.sqrt(inv_mass)
    h0 = logp0 - 0.5 * np.sum(inv_mass * p0 * p0)
    q, p, _, logp, ok = _leapfrog(logp_grad, q0, p0, grad0, eps, inv_mass, 1)
    h = logp - 0.5 * np.sum(inv_mass * p * p) if ok else -np.inf
    direction = 1.0 if h - h0 > np.log(0.5) else -1.0
    for _ in range(100):
        eps *= 2.0**direction
        q, p, _, logp, ok = _leapfrog(logp_grad, q0, p0, grad0, eps, inv_mass, 1)
        h = logp - 0.5 * np.sum(inv_mass * p * p) if ok else -np.inf
        if direction * (h - h0) <= direction * np.log(0.5):
            break
    return eps


@dataclass
class HmcConfig:
    n_warmup: int = 1000
    n_samples: int = 1000
    n_chains: int = 4
    target_accept: float = 0.8
    path_length: float = 1.5
    max_leapfrog: int = 1024
    divergence_threshold: float = 0.05
    seed: int = 0


def hmc_sample(logp_grad, x0: np.ndarray, config: HmcConfig) -> tuple[np.ndarray, dict]:
    """Sample with jittered fixed-path-length HMC and dual-averaged step size.

    Warmup adapts the step size to the target acceptance rate; halfway through
    it re-estimates a diagonal mass matrix from the warmup draws and restarts
    the step-size adaptation. Trajectory lengths are jittered uniformly up to
    path_length / step_size leapfrog steps. Chains run sequentially from
    per-chain streams spawned off the seed, so runs are bit-reproducible.

    Returns post-warmup draws stacked over chains, shape
    (n_chains * n_samples, dim), and a diagnostics dict including acceptance
    rates, step sizes, and the post-warmup divergence fraction. A non-finite
    gradient at the start point aborts; divergence above the threshold is
    reported in diagnostics (ok=False), not raised.
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    logp0, grad0 = logp_grad(x0)
    if not (np.isfinite(logp0) and np.all(np.isfinite(grad0))):
        raise NumericalError("log density or gradient is non-finite at the start point")

    chain_streams = np.random.SeedSequence(config.seed).spawn(config.n_chains)
    all_draws = []
    chain_stats = []
    for stream in chain_streams:
        rng = np.random.default_rng(stream)
        draws, stats = _run_chain(logp_grad, x0, rng, config)
        all_draws.append(draws)
        chain_stats.append(stats)

    draws = np.concatenate(all_draws, axis=0)
    divergence_fraction = float(np.mean([s["divergence_fraction"] for s in chain_stats]))
    diagnostics = {
        "method": "hmc",
        "chains": chain_stats,
        "acceptance_rate": float(np.mean([s["acceptance_rate"] for s in chain_stats])),
        "divergence_fraction": divergence_fraction,
        "ok": divergence_fraction <= config.divergence_threshold,
    }
    return draws, diagnostics


def _run_chain(logp_grad, x0, rng, config):
    dim = x0.size
    inv_mass = np.ones(dim)
    q = x0.copy()
    logp, grad = logp_grad(q)

    eps = _initial_step_size(logp_grad, q, rng, inv_mass)
    adapt = DualAveraging(target_accept=config.target_accept, mu=np.log(10.0 * eps))

    half = config.n_warmup // 2
    warmup_buffer = []
    accepts = []
    divergences = 0
    total_kept = 0
    draws = np.empty((config.n_samples, dim))

    for it in range(config.n_warmup + config.n_samples):
        warming = it < config.n_warmup
        if warming and it == half and half > 0:
            buf = np.asarray(warmup_buffer[max(0, len(warmup_buffer) - half // 2):])
            if buf.shape[0] >= 10:
                var = buf.var(axis=0)
                n = buf.shape[0]
                # regularized toward unit scale, as in windowed warmup schemes
                inv_mass = (n / (n + 5.0)) * var + (5.0 / (n + 5.0)) * 1e-3
                inv_mass = np.maximum(inv_mass, 1e-10)
            eps = _initial_step_size(logp_grad, q, rng, inv_mass)
            adapt = DualAveraging(target_accept=config.target_accept, mu=np.log(10.0 * eps))

        p = rng.standard_normal(dim) / np.sqrt(inv_mass)
        h0 = logp - 0.5 * np.sum(inv_mass * p * p)

        n_max = int(np.clip(config.path_length / eps, 1, config.max_leapfrog))
        n_steps = int(rng.integers(1, n_max + 1))

        q_new, p_new, grad_new, logp_new, ok = _leapfrog(
            logp_grad, q, p, grad, eps, inv_mass, n_steps
        )
        if ok:
            h1 = logp_new - 0.5 * np.sum(inv_mass * p_new * p_new)
            delta = h1 - h0
            divergent = not np.isfinite(delta) or -delta > DIVERGENCE_ENERGY
        else:
            delta = -np.inf
            divergent = True

        accept_prob = 0.0 if divergent else min(1.0, float(np.exp(min(delta, 0.0))))
        if not divergent and rng.random() < accept_prob:
            q, logp, grad = q_new, logp_new, grad_new

        if warming:
            eps = adapt.update(accept_prob)
            warmup_buffer.append(q.copy())
            if it == config.n_warmup - 1:
                eps = adapt.adapted
        else:
            draws[total_kept] = q
            total_kept += 1
            accepts.append(accept_prob)
            divergences += int(divergent)

    return draws, {
        "acceptance_rate": float(np.mean(accepts)) if accepts else 0.0,
        "divergence_fraction": divergences / max(1, config.n_samples),
        "step_size": float(eps),
        "inv_mass": inv_mass.tolist(),
    }


def effective_sample_size(draws: np.ndarray) -> np.ndarray:
    """Autocorrelation-based ESS per dimension (initial positive sequence).

    draws has shape (n, dim); treats the draws as one chain.
    """
    x = np.atleast_2d(np.asarray(draws, dtype=float))
    if x.ndim == 2 and x.shape[0] < x.shape[1] and x.shape[0] == 1:
        x = x.T
    n, dim = x.shape
    ess = np.empty(dim)
    for d in range(dim):
        a = x[:, d] - x[:, d].mean()
        var = np.dot(a, a) / n
        if var == 0:
            ess[d] = float(n)
            continue
        # FFT autocorrelation
        size = int(2 ** np.ceil(np.log2(2 * n)))
        f = np.fft.rfft(a, size)
        acf = np.fft.irfft(f * np.conj(f), size)[:n].real / (var * n)
        # sum consecutive pairs until a pair goes nonpositive
        tau = 1.0
        for k in range(1, n - 1, 2):
            pair = acf[k] + acf[k + 1]
            if pair <= 0:
                break
            tau += 2.0 * pair
        ess[d] = n / tau
    return ess


@dataclass
class AdviConfig:
    n_iter: int = 3000
    n_mc_grad: int = 8
    learning_rate: float = 0.05
    lr_decay: float = 0.0
    n_draws: int = 1000
    patience: int = 5
    check_every: int = 100
    seed: int = 0
    init_log_sigma: float = -2.0


def advi_fit(logp_grad, x0: np.ndarray, config: AdviConfig) -> tuple[np.ndarray, dict]:
    """Fit a mean-field Gaussian by stochastic ELBO ascent (reparameterized).

    Each step draws n_mc_grad standard-normal samples, pushes them through
    z = mu + sigma * eps, and follows Adam on (mu, log_sigma) with
    learning_rate / (1 + lr_decay * t). The ELBO estimate
    mean(log p(z)) + entropy is traced every iteration; a sustained decrease
    of its moving average over `patience` consecutive checks aborts with
    NumericalError. Returns n_draws samples from the fitted Gaussian and a
    diagnostics dict with the ELBO trace and the fitted (mu, sigma).
    """
    rng = np.random.default_rng(config.seed)
    mu = np.asarray(x0, dtype=float).copy()
    dim = mu.size
    log_sigma = np.full(dim, config.init_log_sigma)

    m = np.zeros(2 * dim)
    v = np.zeros(2 * dim)
    beta1, beta2, adam_eps = 0.9, 0.999, 1e-8

    elbo_trace = np.empty(config.n_iter)
    entropy_const = 0.5 * dim * (1.0 + np.log(2.0 * np.pi))
    best_avg = -np.inf
    strikes = 0

    for it in range(config.n_iter):
        sigma = np.exp(log_sigma)
        eps = rng.standard_normal((config.n_mc_grad, dim))
        grad_mu = np.zeros(dim)
        grad_ls = np.zeros(dim)
        logp_sum = 0.0
        for k in range(config.n_mc_grad):
            z = mu + sigma * eps[k]
            logp, grad = logp_grad(z)
            if not (np.isfinite(logp) and np.all(np.isfinite(grad))):
                raise NumericalError("non-finite log density or gradient during ELBO ascent")
            grad_mu += grad
            grad_ls += grad * eps[k] * sigma
            logp_sum += logp
        grad_mu /= config.n_mc_grad
        grad_ls = grad_ls / config.n_mc_grad + 1.0  # +1 from the entropy term
        elbo_trace[it] = logp_sum / config.n_mc_grad + entropy_const + log_sigma.sum()

        g = np.concatenate([-grad_mu, -grad_ls])  # Adam minimizes
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1 ** (it + 1))
        v_hat = v / (1 - beta2 ** (it + 1))
        lr = config.learning_rate / (1.0 + config.lr_decay * it)
        step = lr * m_hat / (np.sqrt(v_hat) + adam_eps)
        mu -= step[:dim]
        log_sigma -= step[dim:]

        if (it + 1) % config.check_every == 0:
            window = elbo_trace[it + 1 - config.check_every : it + 1]
            avg = float(window.mean())
            margin = 0.5 * float(window.std()) + 1e-8
            if avg < best_avg - margin:
                strikes += 1
                if strikes >= config.patience:
                    raise NumericalError(
                        f"ELBO diverged: moving average fell from {best_avg:.4g} "
                        f"to {avg:.4g} over {strikes} checks"
                    )
            else:
                strikes = 0
            best_avg = max(best_avg, avg)

    sigma = np.exp(log_sigma)
    draws = mu[None, :] + sigma[None, :] * rng.standard_normal((config.n_draws, dim))
    diagnostics = {
        "method": "advi",
        "elbo_trace": elbo_trace.tolist(),
        "final_elbo": float(elbo_trace[-100:].mean()),
        "mu": mu.tolist(),
        "sigma": sigma.tolist(),
        "ok": True,
    }
    return draws, diagnostics
