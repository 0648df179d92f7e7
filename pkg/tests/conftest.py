"""Shared helpers: randomized prior specs and small problem builders."""

import numpy as np
import pytest

import slabnet.priors as pr
import slabnet.terms as tm


def random_prior_spec(rng: np.random.Generator, p_min: int = 2, p_max: int = 12,
                      allow_competing: bool = True, allow_weight: bool = True,
                      allow_zeros: bool = True) -> pr.PriorSpec:
    """Random DAG + CPTs, optionally with competing blocks and a weight."""
    p = int(rng.integers(p_min, p_max + 1))
    parents = []
    for i in range(p):
        k = int(rng.integers(0, min(i, 3) + 1))
        parents.append(tuple(sorted(rng.choice(i, size=k, replace=False).tolist()))
                       if k else ())
    node_priors = []
    for pa in parents:
        tab = rng.uniform(0.05, 0.95, size=2 ** len(pa))
        if allow_zeros and rng.random() < 0.3 and len(pa) > 0:
            tab[0] = 0.0
        node_priors.append(pr.NodePrior(tab))
    competing = None
    if allow_competing and rng.random() < 0.4 and p >= 4:
        nb = int(rng.integers(2, 4))
        members = []
        shared = set(rng.choice(p, size=p // 2, replace=False).tolist())
        for _ in range(nb):
            extra = {int(x) for x in rng.choice(p, size=max(1, p // 3), replace=False)}
            members.append(tuple(sorted(shared | extra)))
        mix = rng.uniform(0.2, 1.0, size=nb)
        mix = mix / mix.sum()
        competing = pr.CompetingBlocks(tuple(members), mix)
    weight = None
    if allow_weight and rng.random() < 0.4:
        if rng.random() < 0.5:
            w = rng.uniform(0.1, 2.0, size=p + 1)
            if allow_zeros:
                w[-1] = 0.0
            weight = pr.GlobalWeight.size_weights(w)
        else:
            weight = pr.GlobalWeight.size_indicator(int(rng.integers(1, p + 1)), p)
    spec = pr.PriorSpec(tuple(node_priors), tuple(parents),
                        tuple(f"n{i}" for i in range(p)),
                        competing=competing, weight=weight)
    return spec


def two_way_termset(names: str = "ABC") -> tm.TermSet:
    """Main effects plus all two-way interactions of continuous variables."""
    vs = [tm.continuous(ch) for ch in names]
    formulas = list(names)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            formulas.append(f"{names[i]}*{names[j]}")
    return tm.TermSet.parse(vs, formulas)


def synthetic_dataset(rng: np.random.Generator, names: str = "ABC", n: int = 50,
                      beta: dict | None = None, sigma: float = 1.0) -> tm.Dataset:
    """Continuous predictors with a response from the given term effects."""
    cols = {ch: rng.standard_normal(n) for ch in names}
    y = sigma * rng.standard_normal(n)
    for label, b in (beta or {}).items():
        term = np.ones(n)
        for f in label.split("*"):
            term = term * cols[f]
        y = y + b * term
    return tm.Dataset(y, cols, tuple(tm.continuous(ch) for ch in names))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
