"""Exact posterior over activation patterns for small node counts.

Coefficients are integrated analytically: given the pattern and the noise
sd, the response is multivariate normal with covariance
sigma^2 I + X D^2 X', D diagonal with the per-column prior sd.  The noise
sd is either fixed or integrated numerically on a log-spaced grid against
its prior.  Patterns come from exhaustive support enumeration, so the
result is an exact reference for validating the Gibbs sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from . import priors as pr
from .sampler import NoiseVariancePrior, SpikeSlabScales
from .terms import DesignMatrix

_LOG_2PI = math.log(2.0 * math.pi)


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class SigmaMode:
    """Either a fixed noise sd or a log-spaced integration grid."""

    kind: str = "integrate"          # "fixed" | "integrate"
    sigma: float = 1.0               # fixed mode
    count: int = 128                 # grid points
    bounds: tuple[float, float] | None = None  # (lo, hi) sd; data-driven if None

    def __post_init__(self):
        if self.kind not in ("fixed", "integrate"):
            raise OracleError(f"unknown sigma mode {self.kind!r}")
        if self.kind == "fixed" and self.sigma <= 0:
            raise OracleError("fixed sigma must be positive")
        if self.kind == "integrate" and self.count < 32:
            raise OracleError("integration grid needs at least 32 points")
        if self.bounds is not None and not (0 < self.bounds[0] < self.bounds[1]):
            raise OracleError("bounds must satisfy 0 < lo < hi")


@dataclass(frozen=True)
class OracleConfig:
    sigma_mode: SigmaMode = SigmaMode()
    p_limit: int = 14


@dataclass
class ExactPosterior:
    patterns: np.ndarray        # K x p, lexicographic
    probs: np.ndarray           # K, sums to 1
    log_marginals: np.ndarray   # K, integrated log marginal likelihood
    prior_probs: np.ndarray     # K
    labels: tuple[str, ...]

    @property
    def marginals(self) -> np.ndarray:
        return exact_marginals(self)

    def prob_of(self, delta) -> float:
        bits = np.asarray(delta, dtype=np.uint8)
        hit = np.flatnonzero((self.patterns == bits).all(axis=1))
        return float(self.probs[hit[0]]) if hit.size else 0.0


def exact_marginals(ep: ExactPosterior) -> np.ndarray:
    """Per-node inclusion probability under the exact posterior."""
    return (ep.patterns.astype(float) * ep.probs[:, None]).sum(axis=0)


def _log_marginal_grid(Xd_stack: np.ndarray, y: np.ndarray,
                       sigmas: np.ndarray) -> np.ndarray:
    """Log N(y; 0, sigma^2 I + Xd Xd') for a stack of scaled designs.

    Uses the thin SVD of each Xd: the covariance eigenvalues are
    sigma^2 + s_k^2 on the singular directions and sigma^2 elsewhere.
    Returns (K, S) over patterns x grid points.
    """
    n = y.size
    U, s, _ = np.linalg.svd(Xd_stack, full_matrices=False)
    e = s ** 2                             # K x k
    g2 = np.einsum("knj,n->kj", U, y) ** 2
    s2 = sigmas ** 2                       # S
    yty = float(y @ y)
    kk = e.shape[1]
    denom = s2[None, :, None] + e[:, None, :]          # K x S x k
    logdet = (n - kk) * np.log(s2)[None, :] + np.log(denom).sum(axis=2)
    shrink = (g2[:, None, :] * (e[:, None, :] / denom)).sum(axis=2)
    quad = (yty - shrink) / s2[None, :]
    return -0.5 * (n * _LOG_2PI + logdet + quad)


def log_marginal(delta, sigma: float, design: DesignMatrix, response,
                 scales: SpikeSlabScales) -> float:
    """Log marginal likelihood of one pattern at a fixed noise sd."""
    if sigma <= 0:
        raise OracleError("sigma must be positive")
    y = np.asarray(response, dtype=float)
    sd = scales.column_sd(design, delta)
    Xd = design.X * sd
    out = _log_marginal_grid(Xd[None, :, :], y, np.asarray([float(sigma)]))
    val = float(out[0, 0])
    if not np.isfinite(val):
        raise OracleError("marginal likelihood overflowed; check scales")
    return val


def sigma_grid_bounds(design: DesignMatrix, response) -> tuple[float, float]:
    """Data-driven sd bounds: from the full-model residual scale (shrunk
    10x) up to the response scale (inflated 10x)."""
    y = np.asarray(response, dtype=float)
    n = y.size
    beta, _, _, _ = np.linalg.lstsq(design.X, y, rcond=None)
    rss_full = float(np.sum((y - design.X @ beta) ** 2))
    tss = float(np.sum((y - y.mean()) ** 2))
    hi2 = 10.0 * tss / n
    if hi2 <= 0:
        hi2 = 1.0
    lo2 = rss_full / (10.0 * n)
    if lo2 <= hi2 * 1e-12:
        lo2 = hi2 * 1e-8
    return math.sqrt(lo2), math.sqrt(hi2)


def _sigma_nodes(design: DesignMatrix, response, mode: SigmaMode,
                 noise_prior: NoiseVariancePrior) -> tuple[np.ndarray, np.ndarray]:
    """(sigmas, log quadrature weight incl. the sigma prior density)."""
    if mode.kind == "fixed":
        return np.asarray([mode.sigma]), np.zeros(1)
    lo, hi = mode.bounds if mode.bounds is not None \
        else sigma_grid_bounds(design, response)
    t = np.linspace(math.log(lo), math.log(hi), mode.count)
    dt = t[1] - t[0]
    trap = np.full(mode.count, dt)
    trap[0] *= 0.5
    trap[-1] *= 0.5
    logw = np.log(trap)
    # prior on the variance is inverse gamma (improper 1/v for nu = 0),
    # which is flat in log sigma; the proper density in t = log sigma is
    # exp(-nu t - (nu lam / 2) exp(-2t)) up to constants
    if noise_prior.nu > 0:
        logw = logw - noise_prior.nu * t \
            - 0.5 * noise_prior.nu * noise_prior.lam * np.exp(-2.0 * t)
    return np.exp(t), logw


def exact_posterior(spec: pr.PriorSpec, design: DesignMatrix, response,
                    scales: SpikeSlabScales,
                    config: OracleConfig = OracleConfig(),
                    noise_prior: NoiseVariancePrior = NoiseVariancePrior(),
                    prior_only: bool = False,
                    chunk: int = 512) -> ExactPosterior:
    """Exact posterior table over every positive-prior pattern."""
    patterns, prior_probs = pr.enumerate_support(spec)
    if len(patterns) > 2 ** config.p_limit:
        raise OracleError(f"support size {len(patterns)} exceeds "
                          f"2^{config.p_limit}")
    y = np.asarray(response, dtype=float)
    K = len(patterns)

    if prior_only:
        log_m = np.zeros(K)
    else:
        sigmas, logw = _sigma_nodes(design, y, config.sigma_mode, noise_prior)
        log_m = np.empty(K)
        nodes = design.column_to_node[1:]
        for start in range(0, K, chunk):
            pat = patterns[start:start + chunk]
            active = pat[:, nodes] == 1
            sd = np.where(active, (scales.c * scales.tau)[None, :],
                          scales.tau[None, :])
            sd = np.concatenate(
                [np.full((len(pat), 1), scales.intercept_sd), sd], axis=1)
            Xd = design.X[None, :, :] * sd[:, None, :]
            lm = _log_marginal_grid(Xd, y, sigmas)        # Kc x S
            log_m[start:start + len(pat)] = logsumexp(lm + logw[None, :], axis=1)

    lw = np.log(prior_probs) + log_m
    lw -= lw.max()
    probs = np.exp(lw)
    probs /= probs.sum()
    return ExactPosterior(patterns, probs, log_m, prior_probs, spec.labels)
