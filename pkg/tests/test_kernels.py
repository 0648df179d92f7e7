"""Compiled-vs-fallback kernel agreement on a shared random stream."""

import importlib
import math

import numpy as np
import pytest

import slabnet.priors as pr
import slabnet.sampler as sa
import slabnet.terms as tm
from slabnet._kernel_py import SamplerError, run_chain_kernel as py_kernel
from conftest import random_prior_spec, synthetic_dataset, two_way_termset

cy = pytest.importorskip("slabnet._kernel_cy",
                         reason="compiled kernel not built")


def build_problem(spec, data, ts, taus=None):
    design = tm.build_design(data, ts)
    scales = (sa.SpikeSlabScales.constant(design) if taus is None
              else sa.SpikeSlabScales.per_term(design, taus))
    flat = sa.flatten_problem(design, data.response, spec, scales,
                              sa.NoiseVariancePrior())
    return design, scales, flat


def run_both(flat, design, spec, data, seed, iters=300, burn=50, thin=2,
             record=True, random_scan=False):
    results = []
    for kernel in (py_kernel, cy.run_chain_kernel):
        rng = np.random.default_rng(seed)
        state = sa.initial_state(design, data.response, spec, rng)
        results.append(kernel(*flat.args, state.beta, state.sigma2, state.delta,
                              rng, iters, burn, thin, record, random_scan))
    return results


class TestParity:
    def test_plain_heredity(self):
        ts = two_way_termset()
        data = synthetic_dataset(np.random.default_rng(0), beta={"A": 1.0, "A*B": 1.0})
        spec = pr.heredity_prior(ts, "strong", full=0.5)
        design, scales, flat = build_problem(spec, data, ts)
        (d1, b1, s1), (d2, b2, s2) = run_both(flat, design, spec, data, seed=42)
        assert np.array_equal(d1, d2)
        assert np.allclose(b1, b2, rtol=1e-8, atol=1e-12)
        assert np.allclose(s1, s2, rtol=1e-9)

    def test_random_scan(self):
        ts = two_way_termset()
        data = synthetic_dataset(np.random.default_rng(1), beta={"B": 1.5})
        spec = pr.heredity_prior(ts, "weak", full=0.5, partial=0.25)
        design, scales, flat = build_problem(spec, data, ts)
        (d1, _, _), (d2, _, _) = run_both(flat, design, spec, data, seed=7,
                                          random_scan=True)
        assert np.array_equal(d1, d2)

    def test_competing_blocks(self):
        vs = [tm.continuous(x) for x in ("A", "a", "B")]
        ts = tm.TermSet.parse(vs, ["A", "a", "B", "A*B", "a*B"])
        rng = np.random.default_rng(2)
        cols = {v.name: rng.standard_normal(50) for v in vs}
        y = cols["A"] + 0.5 * cols["B"] + rng.standard_normal(50)
        data = tm.Dataset(y, cols, tuple(vs))
        spec = pr.heredity_prior(
            ts, "strong", full=0.5,
            competing=pr.CompetingBlocks(((0, 2, 3), (1, 2, 4)), [0.6, 0.4]))
        design, scales, flat = build_problem(spec, data, ts)
        (d1, b1, _), (d2, b2, _) = run_both(flat, design, spec, data, seed=3)
        assert np.array_equal(d1, d2)
        # exclusivity holds along the whole trajectory
        assert not ((d1[:, 0] == 1) & (d1[:, 1] == 1)).any()

    def test_global_weight(self):
        ts = two_way_termset()
        data = synthetic_dataset(np.random.default_rng(3), beta={"A": 1.0})
        w = pr.GlobalWeight.size_indicator(2, 6)
        spec = pr.heredity_prior(ts, "strong", full=0.5, weight=w)
        design, scales, flat = build_problem(spec, data, ts)
        (d1, _, _), (d2, _, _) = run_both(flat, design, spec, data, seed=11,
                                          iters=500)
        assert np.array_equal(d1, d2)
        assert d1.sum(axis=1).max() <= 2

    def test_grouped_columns(self):
        from slabnet.cli import ScenarioSpec, generate_scenario, scenario_termset
        ts = scenario_termset("table3")
        data = generate_scenario(ScenarioSpec("table3", sigma_noise=1.0, seed=4))
        spec = pr.heredity_prior(ts, "independent", root_prob=0.5)
        design, scales, flat = build_problem(spec, data, ts, taus=[0.2, 0.2, 0.08])
        (d1, _, _), (d2, _, _) = run_both(flat, design, spec, data, seed=5)
        assert np.array_equal(d1, d2)


class TestKernelSelection:
    def test_env_forces_python(self, monkeypatch):
        monkeypatch.setenv("SLABNET_FORCE_PYTHON_KERNEL", "1")
        assert sa.active_kernel() == "python"
        monkeypatch.delenv("SLABNET_FORCE_PYTHON_KERNEL")
        assert sa.active_kernel() == "cython"

    def test_meta_records_kernel(self, monkeypatch):
        ts = two_way_termset()
        data = synthetic_dataset(np.random.default_rng(5), beta={"A": 1.0})
        spec = pr.heredity_prior(ts, "strong", full=0.5)
        cfg = sa.ChainConfig(iterations=50, seed=0)
        assert sa.run_chain(cfg, data, ts, spec).meta["kernel"] == "cython"
        monkeypatch.setenv("SLABNET_FORCE_PYTHON_KERNEL", "1")
        out = sa.run_chain(cfg, data, ts, spec)
        assert out.meta["kernel"] == "python"


class TestKernelStatistics:
    def test_marginals_agree_between_kernels(self):
        # longer run: both kernels target the same posterior
        ts = two_way_termset()
        data = synthetic_dataset(np.random.default_rng(6),
                                 beta={"A": 1.0, "B": -1.0})
        spec = pr.heredity_prior(ts, "weak", full=0.5, partial=0.25)
        design, scales, flat = build_problem(spec, data, ts)
        margs = []
        for kernel in (py_kernel, cy.run_chain_kernel):
            rng = np.random.default_rng(123)
            state = sa.initial_state(design, data.response, spec, rng)
            deltas, _, _ = kernel(*flat.args, state.beta, state.sigma2,
                                  state.delta, rng, 20_000, 2000, 1, False, False)
            margs.append(deltas.mean(axis=0))
        assert np.abs(margs[0] - margs[1]).max() < 0.02


class TestKernelErrors:
    def test_singular_precision_reported_with_sweep(self):
        # a duplicate of the intercept with effectively no prior precision
        # makes the coefficient system singular in both kernels
        vs = [tm.continuous("A")]
        ts = tm.TermSet.parse(vs, ["A"])
        data = tm.Dataset(np.arange(5.0), {"A": np.ones(5)}, tuple(vs))
        design = tm.build_design(data, ts)
        scales = sa.SpikeSlabScales(np.array([1e150]), np.array([10.0]),
                                    intercept_sd=1e150)
        cfg = sa.ChainConfig(iterations=10, seed=0)
        spec = pr.heredity_prior(ts, "independent", root_prob=0.5)
        with pytest.raises(SamplerError, match=r"sweep \d+.*positive definite"):
            sa.run_chain_design(design, data.response, spec, scales,
                                sa.NoiseVariancePrior(), cfg)
