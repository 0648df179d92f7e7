"""Config-driven entry point.

Subcommands: ``run`` (sample and summarize), ``oracle`` (exact posterior
table), ``count`` (model-space sizes under heredity rules), ``scenario``
(synthetic factorial datasets).  Exit codes: 0 success, 1 config error,
2 runtime error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import figures as fg
from . import priors as pr
from . import summaries as sm
from .oracle import OracleConfig, SigmaMode, exact_posterior
from .sampler import (ChainConfig, NoiseVariancePrior, SpikeSlabScales,
                      active_kernel, max_marginal_discrepancy, run_chains)
from .terms import (BaseVariable, Dataset, DesignMatrix, TermSet, build_design,
                    categorical, continuous, load_csv)

OUTPUT_DIR_ENV = "SLABNET_OUTPUT_DIR"


class ConfigError(Exception):
    """Aggregated configuration problems with field paths."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.issues))


# ---------------------------------------------------------------------------
# config resolution

_DEFAULTS = {
    "prior": {"rule": "strong", "root_prob": 0.5, "full": 0.5, "partial": 0.25,
              "eps_partial": 0.0, "eps_zero": 0.0, "nodes": [], "parents": {},
              "competing": [], "weight": {"kind": "none"}, "max_parents": 8},
    "scales": {"c": 10.0, "intercept_sd": 1e6},
    "sigma_prior": {"nu": 0.0, "lambda": 1.0},
    "sampler": {"iterations": 10000, "burn_in": 0, "thin": 1, "seed": 0,
                "chains": 1, "record_coefficients": False, "scan": "fixed"},
    "oracle": {"enabled": False, "p_limit": 14,
               "sigma": {"kind": "integrate", "count": 128, "bounds": None}},
    "output": {"dir": "slabnet_out", "top_n": 10, "figure_top_models": 100,
               "trace_matrix": False},
}

_SECTION_KEYS = {
    "data": {"path", "response", "categorical"},
    "prior": set(_DEFAULTS["prior"]),
    "scales": set(_DEFAULTS["scales"]) | {"tau", "se_multiplier"},
    "sigma_prior": set(_DEFAULTS["sigma_prior"]),
    "sampler": set(_DEFAULTS["sampler"]),
    "oracle": set(_DEFAULTS["oracle"]),
    "output": set(_DEFAULTS["output"]),
}
_TOP_KEYS = set(_SECTION_KEYS) | {"terms", "standardize"}


def _resolve(raw: dict, issues: list) -> dict:
    cfg = copy.deepcopy(raw)
    for key in cfg:
        if key not in _TOP_KEYS:
            issues.append((key, "unknown section"))
    for section, keys in _SECTION_KEYS.items():
        sub = cfg.get(section)
        if sub is None:
            continue
        if not isinstance(sub, dict):
            issues.append((section, "must be an object"))
            cfg[section] = {}
            continue
        for k in sub:
            if k not in keys:
                issues.append((f"{section}.{k}", "unknown field"))
    for section, defaults in _DEFAULTS.items():
        sub = cfg.setdefault(section, {})
        for k, v in defaults.items():
            sub.setdefault(k, copy.deepcopy(v))

    data = cfg.get("data") or {}
    if not data.get("path"):
        issues.append(("data.path", "required"))
    if not data.get("response"):
        issues.append(("data.response", "required"))
    data.setdefault("categorical", [])
    cfg["data"] = data
    if not cfg.get("terms"):
        issues.append(("terms", "at least one term formula is required"))
    cfg.setdefault("standardize", False)

    sc = cfg["scales"]
    if "tau" in sc and "se_multiplier" in sc:
        issues.append(("scales", "set either tau or se_multiplier, not both"))
    if "tau" not in sc and "se_multiplier" not in sc:
        sc["tau"] = 0.2
    return cfg


def _by_count_map(value):
    if isinstance(value, dict):
        return {int(k): float(v) for k, v in value.items()}
    return float(value)


@dataclass
class RunConfig:
    resolved: dict
    dataset: Dataset
    termset: TermSet
    design: DesignMatrix
    spec: pr.PriorSpec
    scales: SpikeSlabScales
    noise_prior: NoiseVariancePrior
    chain_config: ChainConfig
    chains: int
    oracle_config: OracleConfig
    oracle_enabled: bool

    @property
    def output_dir(self) -> str:
        return os.environ.get(OUTPUT_DIR_ENV) or self.resolved["output"]["dir"]


def _build_prior(ts: TermSet, pcfg: dict, issues: list) -> pr.PriorSpec | None:
    label_index = {lab: i for i, lab in enumerate(ts.labels)}

    def term_idx(lab, path):
        if lab not in label_index:
            issues.append((path, f"unknown term {lab!r}"))
            return None
        return label_index[lab]

    competing = None
    if pcfg["competing"]:
        members, mixing = [], []
        for b, block in enumerate(pcfg["competing"]):
            ixs = [term_idx(m, f"prior.competing[{b}].members") for m in block.get("members", [])]
            if not block.get("members"):
                issues.append((f"prior.competing[{b}].members", "required"))
            if "prob" not in block:
                issues.append((f"prior.competing[{b}].prob", "required"))
            members.append(tuple(i for i in ixs if i is not None))
            mixing.append(float(block.get("prob", 0.0)))
        competing = pr.CompetingBlocks(tuple(members), np.asarray(mixing))

    weight = None
    wcfg = pcfg["weight"]
    kind = wcfg.get("kind", "none")
    if kind == "size_indicator":
        weight = pr.GlobalWeight.size_indicator(int(wcfg["max_terms"]), ts.p)
    elif kind == "size_weights":
        weight = pr.GlobalWeight.size_weights(wcfg["weights"])
    elif kind == "count_in_subset":
        ixs = [term_idx(m, "prior.weight.terms") for m in wcfg.get("terms", [])]
        weight = pr.GlobalWeight.count_in_subset(
            tuple(i for i in ixs if i is not None), wcfg["weights"])
    elif kind != "none":
        issues.append(("prior.weight.kind", f"unknown kind {kind!r}"))

    overrides = {}
    for k, entry in enumerate(pcfg["nodes"]):
        lab = entry.get("term")
        if lab is None or term_idx(lab, f"prior.nodes[{k}].term") is None:
            continue
        if "prob" in entry and "cpt" in entry:
            issues.append((f"prior.nodes[{k}]", "give prob or cpt, not both"))
        elif "prob" in entry:
            overrides[lab] = float(entry["prob"])
        elif "cpt" in entry:
            overrides[lab] = list(entry["cpt"])
        else:
            issues.append((f"prior.nodes[{k}]", "needs prob or cpt"))

    parents_override = {}
    for lab, plist in pcfg["parents"].items():
        if term_idx(lab, "prior.parents") is None:
            continue
        parents_override[lab] = list(plist)

    if issues:
        return None
    try:
        return pr.heredity_prior(
            ts, rule=pcfg["rule"], root_prob=float(pcfg["root_prob"]),
            full=_by_count_map(pcfg["full"]), partial=_by_count_map(pcfg["partial"]),
            eps_partial=float(pcfg["eps_partial"]), eps_zero=float(pcfg["eps_zero"]),
            overrides=overrides, competing=competing, weight=weight,
            parents_override=parents_override or None,
            max_parents=int(pcfg["max_parents"]))
    except (pr.PriorGraphError, ValueError) as exc:
        issues.append(("prior", str(exc)))
        return None


def _build_scales(design: DesignMatrix, response, scfg: dict,
                  issues: list) -> SpikeSlabScales | None:
    try:
        c = scfg["c"]
        intercept_sd = float(scfg["intercept_sd"])
        if "se_multiplier" in scfg:
            if isinstance(c, list):
                issues.append(("scales.c", "must be scalar with se_multiplier"))
                return None
            return SpikeSlabScales.from_se_multiplier(
                design, response, k=float(scfg["se_multiplier"]),
                c=float(c), intercept_sd=intercept_sd)
        tau = scfg["tau"]
        if isinstance(tau, list) or isinstance(c, list):
            taus = tau if isinstance(tau, list) else [tau] * design.p
            cs = c if isinstance(c, list) else float(c)
            return SpikeSlabScales.per_term(design, taus, cs, intercept_sd)
        return SpikeSlabScales.constant(design, float(tau), float(c), intercept_sd)
    except ValueError as exc:
        issues.append(("scales", str(exc)))
        return None


def load_config(path) -> RunConfig:
    """Parse, default-fill and validate a run config, building all pieces."""
    issues: list[tuple[str, str]] = []
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError([("", f"cannot read config: {exc}")])
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"invalid JSON: {exc}")])
    if not isinstance(raw, dict):
        raise ConfigError([("", "config must be a JSON object")])

    cfg = _resolve(raw, issues)
    if issues:
        raise ConfigError(issues)

    try:
        cats = cfg["data"]["categorical"]
        dataset = load_csv(cfg["data"]["path"], cfg["data"]["response"],
                           categorical=cats)
    except Exception as exc:
        raise ConfigError([("data", str(exc))])

    try:
        termset = TermSet.parse(dataset.variables, cfg["terms"])
    except Exception as exc:
        raise ConfigError([("terms", str(exc))])

    try:
        design = build_design(dataset, termset, standardize=bool(cfg["standardize"]))
    except Exception as exc:
        raise ConfigError([("terms", str(exc))])

    spec = _build_prior(termset, cfg["prior"], issues)
    scales = _build_scales(design, dataset.response, cfg["scales"], issues)
    if issues or spec is None or scales is None:
        raise ConfigError(issues)

    try:
        noise_prior = NoiseVariancePrior(float(cfg["sigma_prior"]["nu"]),
                                         float(cfg["sigma_prior"]["lambda"]))
        scfg = cfg["sampler"]
        chain_config = ChainConfig(
            iterations=int(scfg["iterations"]), burn_in=int(scfg["burn_in"]),
            thin=int(scfg["thin"]), seed=int(scfg["seed"]),
            record_coefficients=bool(scfg["record_coefficients"]),
            scan=scfg["scan"])
        chains = int(scfg["chains"])
        if chains < 1:
            raise ValueError("chains must be >= 1")
        ocfg = cfg["oracle"]
        sg = ocfg["sigma"]
        bounds = tuple(sg["bounds"]) if sg.get("bounds") else None
        sigma_mode = SigmaMode(kind=sg.get("kind", "integrate"),
                               sigma=float(sg.get("sigma", 1.0)),
                               count=int(sg.get("count", 128)), bounds=bounds)
        oracle_config = OracleConfig(sigma_mode, int(ocfg["p_limit"]))
    except (ValueError, KeyError) as exc:
        raise ConfigError([("config", str(exc))])

    return RunConfig(cfg, dataset, termset, design, spec, scales, noise_prior,
                     chain_config, chains, oracle_config,
                     bool(cfg["oracle"]["enabled"]))


# ---------------------------------------------------------------------------
# synthetic scenarios

SCENARIO_BETA = {
    "table1": (1.0, 1.0, 0.0, 1.0, 0.0, 0.0),   # A, B, C, AB, AC, BC
    "table3": (1.0, 0.0, 1.0, 1.0, 1.0, 1.0),   # A, B, C[2..5]
}
_SCENARIO_ALIASES = {"table1": "table1", "interaction_table1": "table1",
                     "table3": "table3", "grouping_table3": "table3"}


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: str
    true_beta: tuple[float, ...] | None = None
    sigma_noise: float = 1.0
    n: int = 50
    seed: int = 0

    @property
    def name(self) -> str:
        key = _SCENARIO_ALIASES.get(self.scenario)
        if key is None:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        return key

    @property
    def beta(self) -> np.ndarray:
        b = self.true_beta if self.true_beta is not None else SCENARIO_BETA[self.name]
        b = np.asarray(b, dtype=float)
        if b.size != 6:
            raise ValueError("true_beta needs 6 entries")
        return b


def scenario_variables(name: str) -> tuple[BaseVariable, ...]:
    if name == "table1":
        return (continuous("A"), continuous("B"), continuous("C"))
    return (continuous("A"), continuous("B"),
            categorical("C", ("c1", "c2", "c3", "c4", "c5")))


def scenario_termset(name: str) -> TermSet:
    vs = scenario_variables(name)
    if name == "table1":
        return TermSet.parse(vs, ["A", "B", "C", "A*B", "A*C", "B*C"])
    return TermSet.parse(vs, ["A", "B", "C"])


def generate_scenario(spec: ScenarioSpec) -> Dataset:
    """Synthetic factorial data: predictors and one shared error vector per
    seed, so responses for the two noise levels differ only by the factor
    multiplying the same errors."""
    name = spec.name
    beta = spec.beta
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    a = rng.standard_normal(n)
    b = rng.standard_normal(n)
    if name == "table1":
        c = rng.standard_normal(n)
        eps = rng.standard_normal(n)
        cols = np.column_stack([a, b, c, a * b, a * c, b * c])
        y = cols @ beta + spec.sigma_noise * eps
        return Dataset(y, {"A": a, "B": b, "C": c},
                       scenario_variables(name))
    levels = ("c1", "c2", "c3", "c4", "c5")
    idx = rng.integers(0, 5, size=n)
    eps = rng.standard_normal(n)
    labels = np.asarray([levels[i] for i in idx], dtype=object)
    dummies = np.stack([(idx == k).astype(float) for k in range(1, 5)], axis=1)
    y = a * beta[0] + b * beta[1] + dummies @ beta[2:] + spec.sigma_noise * eps
    return Dataset(y, {"A": a, "B": b, "C": labels}, scenario_variables(name))


def write_scenario_csv(data: Dataset, path, response: str = "Y") -> None:
    names = [v.name for v in data.variables]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + [response])
        for i in range(data.n):
            row = [data.predictors[nm][i] if data.variable(nm).is_categorical
                   else repr(float(data.predictors[nm][i])) for nm in names]
            w.writerow(row + [repr(float(data.response[i]))])


# ---------------------------------------------------------------------------
# analysis runner


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _subscript_cpt(node: pr.NodePrior) -> list[float]:
    """Table back in subscript order (first parent = first subscript)."""
    nb = node.n_parents
    out = []
    for idx in range(2 ** nb):
        rev = int(f"{idx:0{nb}b}"[::-1], 2) if nb else 0
        out.append(float(node.table[rev]))
    return out


def _prior_echo(spec: pr.PriorSpec) -> list[dict]:
    return [{"term": spec.labels[i],
             "parents": [spec.labels[j] for j in spec.parents[i]],
             "cpt": _subscript_cpt(spec.node_priors[i])}
            for i in range(spec.p)]


def _model_entries(table: sm.ModelTable, spec: pr.PriorSpec, top_n: int) -> list[dict]:
    out = []
    normalizable = spec.weight is None or spec.log_weight_norm is not None
    for i in range(min(top_n, len(table))):
        entry = {
            "pattern": table.keys[i],
            "terms": [spec.labels[j] for j in np.flatnonzero(table.patterns[i])],
            "posterior_prob": float(table.posterior[i]),
            "prior_prob": None if table.prior is None else float(table.prior[i]),
            "rss": None if table.rss is None else float(table.rss[i]),
            "r2": None if table.r2 is None else float(table.r2[i]),
            "rank_deficient": None if table.rank_deficient is None
            else bool(table.rank_deficient[i]),
        }
        odds = None
        if normalizable:
            try:
                odds = sm.posterior_prior_odds(table.patterns[i], table, spec)
            except ValueError:
                odds = None
        entry["posterior_prior_odds"] = odds
        out.append(entry)
    return out


def _marginal_entries(marg: sm.MarginalTable) -> list[dict]:
    labels = marg.labels or tuple(f"node_{i}" for i in range(marg.posterior.size))
    return [{"term": labels[i],
             "posterior_incl": float(marg.posterior[i]),
             "prior_incl": None if marg.prior is None else float(marg.prior[i])}
            for i in range(len(labels))]


def _write_outputs(outdir, table, marg, spec, design, response, out_cfg):
    sm.write_models_csv(table, os.path.join(outdir, "models.csv"))
    sm.write_marginals_csv(marg, os.path.join(outdir, "marginals.csv"))
    with open(os.path.join(outdir, "model_matrix.svg"), "w") as fh:
        fh.write(fg.render_model_matrix(table, top_n=out_cfg["figure_top_models"]))
    with open(os.path.join(outdir, "rss_size.svg"), "w") as fh:
        fh.write(fg.render_rss_size(table, design, response,
                                    top_k=out_cfg["top_n"]))


def run_analysis(config: RunConfig) -> dict:
    """Sample, summarize and write all artifacts; returns the summary."""
    diags = pr.validate(config.spec)
    if pr.has_errors(diags):
        raise ConfigError([("prior", d.message) for d in diags
                           if d.severity == "error"])
    warnings = [d.message for d in diags]
    if any((np_.table == 0.0).any() for np_ in config.spec.node_priors):
        warnings.append(
            "prior has exact-zero conditional entries: single-bit moves "
            "cannot cross zero-mass states, which can slow mixing; consider "
            "relaxed heredity or multiple chains")
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)

    outdir = config.output_dir
    os.makedirs(outdir, exist_ok=True)
    labels = config.termset.labels
    response = config.dataset.response

    outs = run_chains(config.chain_config, config.dataset, config.termset,
                      config.spec, config.scales, config.noise_prior,
                      chains=config.chains)
    pooled = np.concatenate([o.deltas for o in outs], axis=0)

    normalizable = (config.spec.weight is None
                    or config.spec.log_weight_norm is not None)
    table = sm.tabulate(pooled, labels)
    if normalizable:
        sm.attach_prior(table, config.spec)
    sm.attach_fit(table, config.design, response)
    marg = sm.marginal_inclusion(pooled, labels)
    if config.spec.p <= pr.ENUMERATION_LIMIT or config.spec.weight is None:
        sm.attach_prior(marg, config.spec)

    out_cfg = config.resolved["output"]
    _write_outputs(outdir, table, marg, config.spec, config.design,
                   response, out_cfg)
    if out_cfg["trace_matrix"]:
        with open(os.path.join(outdir, "trace_matrix.svg"), "w") as fh:
            fh.write(fg.render_trace_matrix(outs[0].deltas, labels))
    if config.chains > 1:
        for k, o in enumerate(outs):
            cdir = os.path.join(outdir, f"chain_{k}")
            os.makedirs(cdir, exist_ok=True)
            tk = sm.tabulate(o.deltas, labels)
            if normalizable:
                sm.attach_prior(tk, config.spec)
            sm.attach_fit(tk, config.design, response)
            mk = sm.marginal_inclusion(o.deltas, labels)
            sm.write_models_csv(tk, os.path.join(cdir, "models.csv"))
            sm.write_marginals_csv(mk, os.path.join(cdir, "marginals.csv"))

    oracle_section = None
    if config.oracle_enabled:
        ep = exact_posterior(config.spec, config.design, response,
                             config.scales, config.oracle_config,
                             config.noise_prior)
        etable = sm.model_table_from_exact(ep)
        sm.attach_fit(etable, config.design, response)
        emarg = sm.MarginalTable(ep.marginals, labels=labels)
        if normalizable:
            pats, probs = pr.enumerate_support(config.spec)
            emarg.prior = pr.support_marginals(pats, probs)
        sm.write_models_csv(etable, os.path.join(outdir, "oracle_models.csv"))
        sm.write_marginals_csv(emarg, os.path.join(outdir, "oracle_marginals.csv"))
        oracle_section = {
            "max_marginal_discrepancy": float(np.abs(
                pooled.mean(axis=0) - ep.marginals).max()),
            "model_total_variation": sm.total_variation(table, etable),
            "support_size": int(len(ep.patterns)),
        }

    resolved = copy.deepcopy(config.resolved)
    resolved["output"]["dir"] = outdir
    summary = {
        "config": resolved,
        "kernel": active_kernel(),
        "chains": [o.meta for o in outs],
        "between_chain_max_marginal_discrepancy":
            max_marginal_discrepancy(outs) if config.chains > 1 else None,
        "marginals": _marginal_entries(marg),
        "top_models": _model_entries(table, config.spec, out_cfg["top_n"]),
        "prior_nodes": _prior_echo(config.spec),
        "prior_normalized": normalizable,
        "warnings": warnings,
        "oracle": oracle_section,
    }
    _write_json(summary, os.path.join(outdir, "summary.json"))
    return summary


def run_oracle(config: RunConfig) -> dict:
    """Exact posterior table only; writes oracle_{models,marginals}.csv."""
    diags = pr.validate(config.spec)
    if pr.has_errors(diags):
        raise ConfigError([("prior", d.message) for d in diags
                           if d.severity == "error"])
    outdir = config.output_dir
    os.makedirs(outdir, exist_ok=True)
    ep = exact_posterior(config.spec, config.design, config.dataset.response,
                         config.scales, config.oracle_config, config.noise_prior)
    etable = sm.model_table_from_exact(ep)
    sm.attach_fit(etable, config.design, config.dataset.response)
    emarg = sm.MarginalTable(ep.marginals, labels=config.termset.labels)
    pats, probs = pr.enumerate_support(config.spec)
    emarg.prior = pr.support_marginals(pats, probs)
    sm.write_models_csv(etable, os.path.join(outdir, "oracle_models.csv"))
    sm.write_marginals_csv(emarg, os.path.join(outdir, "oracle_marginals.csv"))
    return {"support_size": int(len(ep.patterns)), "dir": outdir}


# ---------------------------------------------------------------------------
# entry point


def _cmd_run(args) -> int:
    config = load_config(args.config)
    summary = run_analysis(config)
    print(f"wrote {config.output_dir} "
          f"({len(summary['top_models'])} top models, kernel {summary['kernel']})")
    return 0


def _cmd_oracle(args) -> int:
    config = load_config(args.config)
    info = run_oracle(config)
    print(f"wrote {info['dir']} (exact table over {info['support_size']} models)")
    return 0


def _cmd_count(args) -> int:
    fn = pr.count_strong if args.rule == "strong" else pr.count_weak
    print(fn(args.main_effects))
    return 0


def _cmd_scenario(args) -> int:
    beta = tuple(float(x) for x in args.beta.split(",")) if args.beta else None
    spec = ScenarioSpec(args.name, true_beta=beta, sigma_noise=args.sigma,
                        n=args.n, seed=args.seed)
    data = generate_scenario(spec)
    write_scenario_csv(data, args.out)
    print(f"wrote {args.out} ({data.n} rows)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="slabnet",
        description="Spike-and-slab variable selection with structured priors")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the sampler per a JSON config")
    p.add_argument("config")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("oracle", help="exact posterior table per a JSON config")
    p.add_argument("config")
    p.set_defaults(fn=_cmd_oracle)

    p = sub.add_parser("count", help="model-space size under a heredity rule")
    p.add_argument("--main-effects", type=int, required=True)
    p.add_argument("--rule", choices=["strong", "weak"], required=True)
    p.set_defaults(fn=_cmd_count)

    p = sub.add_parser("scenario", help="write a synthetic factorial dataset")
    p.add_argument("--name", choices=sorted(_SCENARIO_ALIASES), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, choices=[1.0, 3.0], default=1.0)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--beta", default=None,
                   help="comma-separated true coefficients (6 values)")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_scenario)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        for path, msg in exc.issues:
            print(f"config error: {path}: {msg}" if path else f"config error: {msg}",
                  file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
