"""Bayesian variable selection with structured priors over model terms.

Spike-and-slab selection by Gibbs sampling, with a factored prior over
which terms are active: heredity relations for interactions and
polynomials, grouped dummy variables, competing predictor blocks, and
global model-size weights.  Validated against an exact enumeration
oracle.
"""

from .terms import (BaseVariable, Dataset, DesignMatrix, Term, TermSet,
                    build_design, categorical, continuous, expand_categorical,
                    full_second_order, immediate_parents, inherits, load_csv,
                    order, parse_term, ungroup_categorical)
from .priors import (CompetingBlocks, Diagnostic, GlobalWeight, NodePrior,
                     PriorSpec, conditional_activation, count_strong,
                     count_weak, enumerate_support, heredity_prior, log_prior,
                     sample_prior, support_marginals, validate)
from .sampler import (ChainConfig, ChainOutput, NoiseVariancePrior,
                      SamplerError, SamplerState, SpikeSlabScales,
                      active_kernel, draw_coefficients, draw_noise_variance,
                      run_chain, run_chains, sweep_activations)
from .oracle import (ExactPosterior, OracleConfig, SigmaMode, exact_marginals,
                     exact_posterior, log_marginal)
from .summaries import (MarginalTable, ModelTable, fit_metrics,
                        marginal_inclusion, posterior_prior_odds, tabulate,
                        total_variation)
from .figures import render_model_matrix, render_rss_size, render_trace_matrix

__version__ = "0.1.0"
