"""Posterior reporting: model tables, marginal inclusion, odds, fit metrics."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import priors as pr
from .oracle import ExactPosterior
from .terms import DesignMatrix


def pattern_key(bits) -> str:
    """Bit string over nodes, e.g. '110100'."""
    return "".join("1" if b else "0" for b in np.asarray(bits).astype(int))


def parse_pattern_key(key: str) -> np.ndarray:
    if not set(key) <= {"0", "1"}:
        raise ValueError(f"bad pattern key {key!r}")
    return np.frombuffer(key.encode(), dtype=np.uint8) - ord("0")


@dataclass
class ModelTable:
    """Rows over distinct activation patterns, most probable first.

    Ties are broken by lexicographic pattern key.  ``counts`` is None for
    exact tables; prior/fit columns are filled by :func:`attach_prior` and
    :func:`attach_fit`.
    """

    patterns: np.ndarray
    posterior: np.ndarray
    counts: np.ndarray | None = None
    prior: np.ndarray | None = None
    rss: np.ndarray | None = None
    r2: np.ndarray | None = None
    rank_deficient: np.ndarray | None = None
    labels: tuple[str, ...] | None = None

    def __len__(self):
        return len(self.patterns)

    @property
    def keys(self) -> list[str]:
        return [pattern_key(row) for row in self.patterns]

    def row_of(self, pattern) -> int | None:
        bits = np.asarray(pattern, dtype=np.uint8)
        hit = np.flatnonzero((self.patterns == bits).all(axis=1))
        return int(hit[0]) if hit.size else None

    def posterior_of(self, pattern) -> float:
        row = self.row_of(pattern)
        return float(self.posterior[row]) if row is not None else 0.0


@dataclass
class MarginalTable:
    posterior: np.ndarray
    prior: np.ndarray | None = None
    labels: tuple[str, ...] | None = None


def _sorted_table(patterns: np.ndarray, posterior: np.ndarray,
                  counts: np.ndarray | None, labels) -> ModelTable:
    keys = [pattern_key(row) for row in patterns]
    order = sorted(range(len(keys)), key=lambda i: (-posterior[i], keys[i]))
    idx = np.asarray(order, dtype=np.int64)
    return ModelTable(patterns[idx], posterior[idx],
                      counts[idx] if counts is not None else None,
                      labels=tuple(labels) if labels is not None else None)


def tabulate(samples, labels=None) -> ModelTable:
    """Relative-frequency model table from recorded activation patterns."""
    arr = np.asarray(samples, dtype=np.uint8)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("need a non-empty samples x nodes array")
    counter = Counter(pattern_key(row) for row in arr)
    keys = sorted(counter)
    patterns = np.stack([parse_pattern_key(k) for k in keys])
    counts = np.asarray([counter[k] for k in keys], dtype=np.int64)
    posterior = counts / arr.shape[0]
    return _sorted_table(patterns, posterior, counts, labels)


def model_table_from_exact(ep: ExactPosterior) -> ModelTable:
    t = _sorted_table(ep.patterns, ep.probs, None, ep.labels)
    order = [pattern_key(r) for r in t.patterns]
    prior_by_key = {pattern_key(r): p for r, p in zip(ep.patterns, ep.prior_probs)}
    t.prior = np.asarray([prior_by_key[k] for k in order])
    return t


def marginal_inclusion(samples, labels=None) -> MarginalTable:
    """Per-node inclusion frequency (column means of the bit matrix)."""
    arr = np.asarray(samples, dtype=np.uint8)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("need a non-empty samples x nodes array")
    return MarginalTable(arr.mean(axis=0),
                         labels=tuple(labels) if labels is not None else None)


def attach_prior(obj, spec: pr.PriorSpec,
                 mc_samples: int = 100_000, mc_seed: int = 0) -> None:
    """Fill prior probabilities from the spec.

    Model-table rows get exp(log_prior); marginal tables get exact prior
    inclusion by enumeration when feasible, otherwise an ancestral
    Monte-Carlo estimate (deterministic seed).
    """
    if isinstance(obj, ModelTable):
        obj.prior = np.asarray([math.exp(pr.log_prior(row, spec))
                                for row in obj.patterns])
        return
    if isinstance(obj, MarginalTable):
        if spec.p <= pr.ENUMERATION_LIMIT:
            pats, probs = pr.enumerate_support(spec)
            obj.prior = pr.support_marginals(pats, probs)
        else:
            rng = np.random.default_rng(mc_seed)
            draws = pr.sample_prior(spec, rng, size=mc_samples)
            obj.prior = draws.mean(axis=0)
        return
    raise TypeError(f"cannot attach priors to {type(obj).__name__}")


def posterior_prior_odds(pattern, table: ModelTable, spec: pr.PriorSpec) -> float:
    """(posterior odds) / (prior odds) of one pattern.

    Requires a nonzero, normalizable prior; returns 0 for patterns the
    posterior never visits and inf when the posterior is concentrated
    entirely on the pattern.
    """
    if spec.weight is not None and spec.log_weight_norm is None:
        raise ValueError("prior normalizer unavailable; odds undefined")
    prior = math.exp(pr.log_prior(pattern, spec))
    if prior <= 0.0:
        raise ValueError("pattern has zero prior probability; odds undefined")
    if prior >= 1.0:
        raise ValueError("pattern has prior probability 1; odds undefined")
    post = table.posterior_of(pattern)
    if post == 0.0:
        return 0.0
    if post >= 1.0:
        return math.inf
    return (post / (1.0 - post)) / (prior / (1.0 - prior))


@dataclass
class FitMetrics:
    rss: float
    r2: float
    rank_deficient: bool = False


def fit_metrics(pattern, design: DesignMatrix, response) -> FitMetrics:
    """Least squares on intercept + active-node columns.

    Rank-deficient systems are solved minimum-norm and flagged.  R^2 is
    about the mean (0 when the response is constant).
    """
    y = np.asarray(response, dtype=float)
    bits = np.asarray(pattern, dtype=np.uint8)
    cols = [0] + [j for j in range(1, design.q)
                  if bits[design.column_to_node[j]] == 1]
    XS = design.X[:, cols]
    beta, _, rank, _ = np.linalg.lstsq(XS, y, rcond=None)
    rss = float(np.sum((y - XS @ beta) ** 2))
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 0.0 if tss <= 0.0 else 1.0 - rss / tss
    return FitMetrics(rss, r2, rank_deficient=rank < XS.shape[1])


def attach_fit(table: ModelTable, design: DesignMatrix, response) -> None:
    mets = [fit_metrics(row, design, response) for row in table.patterns]
    table.rss = np.asarray([m.rss for m in mets])
    table.r2 = np.asarray([m.r2 for m in mets])
    table.rank_deficient = np.asarray([m.rank_deficient for m in mets])


def total_variation(a: ModelTable, b: ModelTable) -> float:
    """Total variation distance between two model tables."""
    pa = dict(zip(a.keys, a.posterior))
    pb = dict(zip(b.keys, b.posterior))
    keys = set(pa) | set(pb)
    return 0.5 * sum(abs(pa.get(k, 0.0) - pb.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# CSV emission (floats via repr for exact round trips)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_models_csv(table: ModelTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pattern", "count", "posterior_prob", "prior_prob", "rss", "r2"])
        for i, key in enumerate(table.keys):
            w.writerow([
                key,
                _fmt(None if table.counts is None else table.counts[i]),
                _fmt(table.posterior[i]),
                _fmt(None if table.prior is None else table.prior[i]),
                _fmt(None if table.rss is None else table.rss[i]),
                _fmt(None if table.r2 is None else table.r2[i]),
            ])


def read_models_csv(path) -> ModelTable:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["pattern", "count", "posterior_prob",
                               "prior_prob", "rss", "r2"]:
        raise ValueError(f"{path}: not a models.csv file")
    body = rows[1:]
    if not body:
        raise ValueError(f"{path}: empty table")
    patterns = np.stack([parse_pattern_key(r[0]) for r in body])
    opt = lambda vals, conv: (None if all(v == "" for v in vals)
                              else np.asarray([conv(v) for v in vals]))
    return ModelTable(
        patterns,
        np.asarray([float(r[2]) for r in body]),
        counts=opt([r[1] for r in body], int),
        prior=opt([r[3] for r in body], float),
        rss=opt([r[4] for r in body], float),
        r2=opt([r[5] for r in body], float),
    )


def write_marginals_csv(marg: MarginalTable, path) -> None:
    labels = marg.labels or tuple(f"node_{i}" for i in range(marg.posterior.size))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["term", "posterior_incl", "prior_incl"])
        for i, lab in enumerate(labels):
            w.writerow([lab, _fmt(marg.posterior[i]),
                        _fmt(None if marg.prior is None else marg.prior[i])])


def read_marginals_csv(path) -> MarginalTable:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["term", "posterior_incl", "prior_incl"]:
        raise ValueError(f"{path}: not a marginals.csv file")
    body = rows[1:]
    post = np.asarray([float(r[1]) for r in body])
    prior = None if all(r[2] == "" for r in body) \
        else np.asarray([float(r[2]) for r in body])
    return MarginalTable(post, prior, labels=tuple(r[0] for r in body))
