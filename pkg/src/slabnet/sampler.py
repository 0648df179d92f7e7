"""Gibbs sampler over (coefficients, noise variance, activation pattern).

Coefficients carry a two-component normal prior per column: sd tau when
the column's node is inactive, c*tau when active.  The intercept always
gets a very diffuse prior and no indicator.  The chain cycles a
multivariate-normal coefficient draw, an inverse-gamma noise draw, and a
Bernoulli draw per node conditioned on the rest.

The sweep loop is the hot path: a compiled extension is used when it
built, with a numpy fallback selected at import.  Set
``SLABNET_FORCE_PYTHON_KERNEL=1`` to force the fallback.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from . import priors as pr
from ._kernel_py import SamplerError, run_chain_kernel as _py_kernel
from .terms import Dataset, DesignMatrix, TermSet, build_design

try:
    from ._kernel_cy import run_chain_kernel as _cy_kernel
except ImportError:
    _cy_kernel = None


def active_kernel() -> str:
    """Name of the kernel run_chain will use."""
    if _cy_kernel is not None and not os.environ.get("SLABNET_FORCE_PYTHON_KERNEL"):
        return "cython"
    return "python"


def _kernel_fn(name: str):
    if name == "cython":
        if _cy_kernel is None:
            raise RuntimeError("compiled kernel is not available")
        return _cy_kernel
    return _py_kernel


@dataclass(frozen=True, eq=False)
class SpikeSlabScales:
    """Per-column spike sd tau and slab multiplier c (slab sd = c*tau).

    Columns follow the design matrix order with the intercept excluded;
    columns sharing a node may still carry distinct scales.
    """

    tau: np.ndarray
    c: np.ndarray
    intercept_sd: float = 1e6

    def __post_init__(self):
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=float))
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        if self.tau.shape != self.c.shape:
            raise ValueError("tau and c must have equal length")
        if np.any(self.tau <= 0):
            raise ValueError("tau must be positive")
        if np.any(self.c <= 1):
            raise ValueError("c must exceed 1")
        if self.intercept_sd <= 0:
            raise ValueError("intercept_sd must be positive")

    @classmethod
    def constant(cls, design: DesignMatrix, tau: float = 0.2, c: float = 10.0,
                 intercept_sd: float = 1e6) -> "SpikeSlabScales":
        m = design.q - 1
        return cls(np.full(m, tau), np.full(m, c), intercept_sd)

    @classmethod
    def per_term(cls, design: DesignMatrix, taus: Sequence[float],
                 c: float | Sequence[float] = 10.0,
                 intercept_sd: float = 1e6) -> "SpikeSlabScales":
        """One tau (and optionally c) per node, broadcast to its columns."""
        taus = np.asarray(taus, dtype=float)
        if taus.size != design.p:
            raise ValueError(f"expected {design.p} per-term taus, got {taus.size}")
        cs = np.asarray(c, dtype=float)
        if cs.ndim == 0:
            cs = np.full(design.p, float(c))
        elif cs.size != design.p:
            raise ValueError(f"expected {design.p} per-term c values, got {cs.size}")
        nodes = design.column_to_node[1:]
        return cls(taus[nodes], cs[nodes], intercept_sd)

    @classmethod
    def from_se_multiplier(cls, design: DesignMatrix, response: np.ndarray,
                           k: float = 6.0, c: float = 10.0,
                           intercept_sd: float = 1e6) -> "SpikeSlabScales":
        """tau_j = k * (standard error of the full-model least-squares
        coefficient of column j)."""
        X = design.X
        n, q = X.shape
        beta, _, rank, _ = np.linalg.lstsq(X, response, rcond=None)
        if n <= rank:
            raise ValueError("need n > rank(X) for standard errors")
        rss = float(np.sum((response - X @ beta) ** 2))
        s2 = rss / (n - rank)
        cov = s2 * np.linalg.pinv(X.T @ X)
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))[1:]
        if np.any(se <= 0):
            raise ValueError("zero standard error; cannot scale tau")
        return cls(k * se, np.full(q - 1, c), intercept_sd)

    def column_sd(self, design: DesignMatrix, delta) -> np.ndarray:
        """Prior sd for every design column (intercept included) at delta."""
        delta = np.asarray(delta, dtype=np.uint8)
        nodes = design.column_to_node[1:]
        active = delta[nodes] == 1
        sd = np.where(active, self.c * self.tau, self.tau)
        return np.concatenate(([self.intercept_sd], sd))


@dataclass(frozen=True)
class NoiseVariancePrior:
    """Inverse gamma on the noise variance: shape nu/2, scale nu*lam/2.

    nu = 0 is the improper uninformative prior (lam is ignored then).
    """

    nu: float = 0.0
    lam: float = 1.0

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("nu must be >= 0")
        if self.nu > 0 and self.lam <= 0:
            raise ValueError("lam must be positive for a proper prior")


@dataclass(frozen=True)
class ChainConfig:
    iterations: int
    burn_in: int = 0
    thin: int = 1
    seed: int = 0
    record_coefficients: bool = False
    scan: str = "fixed"  # "fixed" (topological) or "random"

    def __post_init__(self):
        if not (self.iterations > self.burn_in >= 0):
            raise ValueError("need iterations > burn_in >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.scan not in ("fixed", "random"):
            raise ValueError("scan must be 'fixed' or 'random'")

    @property
    def n_records(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass
class SamplerState:
    beta: np.ndarray
    sigma2: float
    delta: np.ndarray


@dataclass
class ChainOutput:
    deltas: np.ndarray                  # records x p
    betas: np.ndarray | None
    sigma2s: np.ndarray | None
    meta: dict

    @property
    def n_records(self) -> int:
        return self.deltas.shape[0]

    def marginals(self) -> np.ndarray:
        return self.deltas.mean(axis=0)


@dataclass
class FlatProblem:
    """Arrays in the fixed positional order both kernels accept."""

    args: tuple
    n: int
    q: int
    p: int


def flatten_problem(design: DesignMatrix, response: np.ndarray,
                    spec: pr.PriorSpec, scales: SpikeSlabScales,
                    noise_prior: NoiseVariancePrior) -> FlatProblem:
    X = np.ascontiguousarray(design.X, dtype=float)
    n, q = X.shape
    p = spec.p
    if design.p != p:
        raise ValueError("design and prior disagree on the node count")
    if scales.tau.size != q - 1:
        raise ValueError(f"scales cover {scales.tau.size} columns, "
                         f"expected {q - 1}")
    y = np.ascontiguousarray(response, dtype=float)
    XtX = np.ascontiguousarray(X.T @ X)
    Xty = np.ascontiguousarray(X.T @ y)
    col_node = np.ascontiguousarray(design.column_to_node, dtype=np.int64)

    idx = [design.columns_of_node(i) for i in range(p)]
    node_col_start = np.zeros(p + 1, dtype=np.int64)
    node_col_start[1:] = np.cumsum([len(ix) for ix in idx])
    node_col_idx = (np.concatenate(idx) if idx else np.zeros(0)).astype(np.int64)

    sd_spike = np.concatenate(([scales.intercept_sd], scales.tau))
    sd_slab = np.concatenate(([scales.intercept_sd], scales.c * scales.tau))
    lr_const = np.concatenate(([0.0], -np.log(scales.c)))
    lr_coef = np.concatenate(([0.0],
                              (1.0 - 1.0 / scales.c ** 2) / (2.0 * scales.tau ** 2)))

    parent_start = np.zeros(p + 1, dtype=np.int64)
    parent_start[1:] = np.cumsum([len(pa) for pa in spec.parents])
    parent_idx = np.asarray([j for pa in spec.parents for j in pa], dtype=np.int64)
    cpt_start = np.zeros(p + 1, dtype=np.int64)
    cpt_start[1:] = np.cumsum([np_.table.size for np_ in spec.node_priors])
    cpt = np.concatenate([np_.table for np_ in spec.node_priors]).astype(float)
    child_start = np.zeros(p + 1, dtype=np.int64)
    child_start[1:] = np.cumsum([len(ch) for ch in spec.children])
    child_idx = np.asarray([c for ch in spec.children for c, _ in ch], dtype=np.int64)
    child_pos = np.asarray([pos for ch in spec.children for _, pos in ch], dtype=np.int64)
    topo = np.asarray(spec.topo_order, dtype=np.int64)

    if spec.competing is None:
        n_blocks = 0
        block_member = np.zeros((0, p), dtype=np.uint8)
        mixing = np.zeros(0)
    else:
        n_blocks = len(spec.competing.members)
        block_member = np.zeros((n_blocks, p), dtype=np.uint8)
        for k, mem in enumerate(spec.competing.members):
            block_member[k, list(mem)] = 1
        mixing = np.ascontiguousarray(spec.competing.mixing, dtype=float)

    if spec.weight is None:
        has_weight = False
        w_subset = np.zeros(p, dtype=np.uint8)
        w_table = np.ones(1)
    else:
        has_weight = True
        w_subset = np.zeros(p, dtype=np.uint8)
        sub = range(p) if spec.weight.subset is None else spec.weight.subset
        w_subset[list(sub)] = 1
        w_table = np.ascontiguousarray(spec.weight.table, dtype=float)

    args = (X, XtX, Xty, y,
            col_node, node_col_start, node_col_idx,
            sd_spike, sd_slab, lr_const, lr_coef,
            parent_start, parent_idx, cpt_start, cpt,
            child_start, child_idx, child_pos, topo,
            n_blocks, block_member, mixing,
            w_subset, w_table, has_weight,
            float(noise_prior.nu), float(noise_prior.lam))
    return FlatProblem(args, n, q, p)


# ---------------------------------------------------------------------------
# reference single-step operations (the kernels implement these same
# computations in their chain loops; exposed for direct testing)


def draw_coefficients(state: SamplerState, design: DesignMatrix, response,
                      scales: SpikeSlabScales, rng: np.random.Generator) -> np.ndarray:
    """One multivariate-normal coefficient draw given (delta, sigma2).

    Samples N(S X'y / sigma2, S) with S = (X'X/sigma2 + D^-2)^-1 and D the
    per-column prior sd at the current activation pattern.
    """
    X = design.X
    q = design.q
    sd = scales.column_sd(design, state.delta)
    M = X.T @ X / state.sigma2
    M[np.diag_indices(q)] += 1.0 / sd ** 2
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise SamplerError("coefficient precision matrix not positive definite")
    half = solve_triangular(L, X.T @ np.asarray(response, dtype=float) / state.sigma2,
                            lower=True)
    mean = solve_triangular(L.T, half, lower=False)
    z = rng.standard_normal(q)
    return mean + solve_triangular(L.T, z, lower=False)


def draw_noise_variance(state: SamplerState, design: DesignMatrix, response,
                        prior: NoiseVariancePrior, rng: np.random.Generator) -> float:
    """Inverse-gamma draw: shape (n+nu)/2, scale (rss + nu*lam)/2."""
    r = np.asarray(response, dtype=float) - design.X @ state.beta
    rss = float(r @ r)
    scale = 0.5 * (rss + prior.nu * prior.lam)
    if scale <= 0.0:
        raise SamplerError("zero residual with the improper noise prior")
    shape = 0.5 * (design.n + prior.nu)
    g = float(rng.standard_gamma(shape))
    if g <= 0.0:
        raise SamplerError("degenerate gamma draw")
    return scale / g


def _column_log_ratio(beta_j: float, tau_j: float, c_j: float) -> float:
    # log N(beta; 0, (c tau)^2) - log N(beta; 0, tau^2)
    return -math.log(c_j) + beta_j * beta_j * (1.0 - 1.0 / c_j ** 2) / (2.0 * tau_j ** 2)


def sweep_activations(state: SamplerState, spec: pr.PriorSpec,
                      scales: SpikeSlabScales, rng: np.random.Generator,
                      column_to_node: np.ndarray | None = None,
                      order: Sequence[int] | None = None) -> np.ndarray:
    """One full pass of Bernoulli updates over the activation bits.

    Each node's odds combine the slab/spike density ratio of its columns
    (grouped nodes multiply the ratios of all their columns) with the
    prior conditional from the activation graph.  ``column_to_node``
    defaults to node j owning column j+1 (intercept at 0).
    """
    delta = np.asarray(state.delta, dtype=np.uint8).copy()
    if column_to_node is None:
        column_to_node = np.concatenate(([-1], np.arange(spec.p)))
    if order is None:
        order = spec.topo_order
    for i in order:
        cols = np.flatnonzero(column_to_node == i)
        llr = 0.0
        for jc in cols:
            llr += _column_log_ratio(float(state.beta[jc]),
                                     float(scales.tau[jc - 1]),
                                     float(scales.c[jc - 1]))
        u0, u1 = pr.conditional_masses(i, delta, spec)
        ud = rng.random()
        if u0 == 0.0 and u1 == 0.0:
            raise SamplerError(f"node {spec.labels[i]}: zero mass for both settings")
        if u1 == 0.0:
            delta[i] = 0
        elif u0 == 0.0:
            delta[i] = 1
        else:
            tval = math.log(u1 / u0) + llr
            if tval >= 0.0:
                prob = 1.0 / (1.0 + math.exp(-tval))
            else:
                et = math.exp(tval)
                prob = et / (1.0 + et)
            delta[i] = 1 if ud < prob else 0
    return delta


# ---------------------------------------------------------------------------
# chain driver


def initial_state(design: DesignMatrix, response, spec: pr.PriorSpec,
                  rng: np.random.Generator, ridge: float = 1e-6) -> SamplerState:
    """Ancestral-prior delta, ridge least-squares beta, residual variance."""
    delta0 = pr.sample_prior(spec, rng)
    X = design.X
    M = X.T @ X + ridge * np.eye(design.q)
    beta0 = np.linalg.solve(M, X.T @ np.asarray(response, dtype=float))
    rss = float(np.sum((response - X @ beta0) ** 2))
    sigma2_0 = max(rss / design.n, 1e-12)
    return SamplerState(beta0, sigma2_0, delta0)


def lag1_autocorrelation(samples: np.ndarray) -> np.ndarray:
    """Per-column lag-1 autocorrelation; NaN for constant columns."""
    x = samples.astype(float)
    out = np.full(x.shape[1], np.nan)
    if x.shape[0] < 2:
        return out
    a = x[:-1] - x[:-1].mean(axis=0)
    b = x[1:] - x[1:].mean(axis=0)
    num = (a * b).sum(axis=0)
    den = np.sqrt((a * a).sum(axis=0) * (b * b).sum(axis=0))
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def run_chain_design(design: DesignMatrix, response, spec: pr.PriorSpec,
                     scales: SpikeSlabScales, noise_prior: NoiseVariancePrior,
                     config: ChainConfig) -> ChainOutput:
    """Run one chain on a prebuilt design matrix."""
    diags = pr.validate(spec)
    if pr.has_errors(diags):
        msgs = "; ".join(d.message for d in diags if d.severity == "error")
        raise pr.PriorGraphError(f"invalid prior spec: {msgs}")
    flat = flatten_problem(design, response, spec, scales, noise_prior)
    rng = np.random.default_rng(config.seed)
    state = initial_state(design, response, spec, rng)
    kernel_name = active_kernel()
    kernel = _kernel_fn(kernel_name)
    deltas, betas, sigma2s = kernel(*flat.args,
                                    state.beta, state.sigma2, state.delta,
                                    rng, config.iterations, config.burn_in,
                                    config.thin, config.record_coefficients,
                                    config.scan == "random")
    meta = {
        "seed": config.seed,
        "iterations": config.iterations,
        "burn_in": config.burn_in,
        "thin": config.thin,
        "scan": config.scan,
        "kernel": kernel_name,
        "n_records": int(deltas.shape[0]),
        "delta_lag1_autocorr": [None if math.isnan(v) else round(float(v), 6)
                                for v in lag1_autocorrelation(deltas)],
    }
    return ChainOutput(deltas, betas, sigma2s, meta)


def run_chain(config: ChainConfig, dataset: Dataset, termset: TermSet,
              spec: pr.PriorSpec, scales: SpikeSlabScales | None = None,
              noise_prior: NoiseVariancePrior = NoiseVariancePrior()) -> ChainOutput:
    """Build the design from the dataset and run one chain.

    Deterministic given the seed: equal inputs give bit-identical output.
    """
    design = build_design(dataset, termset)
    if scales is None:
        scales = SpikeSlabScales.constant(design)
    return run_chain_design(design, dataset.response, spec, scales,
                            noise_prior, config)


def run_chains(config: ChainConfig, dataset: Dataset, termset: TermSet,
               spec: pr.PriorSpec, scales: SpikeSlabScales | None = None,
               noise_prior: NoiseVariancePrior = NoiseVariancePrior(),
               chains: int = 1) -> list[ChainOutput]:
    """Independent chains seeded seed, seed+1, ..."""
    outs = []
    for k in range(chains):
        cfg = replace(config, seed=config.seed + k)
        outs.append(run_chain(cfg, dataset, termset, spec, scales, noise_prior))
    return outs


def max_marginal_discrepancy(outputs: Sequence[ChainOutput]) -> float:
    """Largest between-chain gap in any node's inclusion frequency."""
    margs = np.stack([o.marginals() for o in outputs])
    return float((margs.max(axis=0) - margs.min(axis=0)).max()) if len(outputs) > 1 else 0.0
