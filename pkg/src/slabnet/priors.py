"""Factored priors over term-activation patterns.

An activation pattern is a 0/1 vector with one bit per selectable node.
The prior factors over a DAG of conditional probability tables (heredity
relations between terms), optionally wrapped in a mixture of competing
blocks (mutually exclusive predictor sets) and reweighted by a global
statistic such as the number of active terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .terms import TermSet

ENUMERATION_LIMIT = 20  # hard cap on exact enumeration, 2^p patterns


class PriorGraphError(ValueError):
    """Structurally unusable prior specification."""


class InconsistentPatternError(ValueError):
    """Both settings of a bit have zero mass: the surrounding pattern is
    unreachable under the prior."""


@dataclass(frozen=True, eq=False)
class NodePrior:
    """Activation probability table for one node.

    ``table[r]`` is Pr(node active | parent bits), where the row index is
    little-endian in the node's parent list: ``r = sum(bit_j << j)`` with
    ``bit_j`` the j-th listed parent's value.  A parentless node has a
    single-entry table (its marginal probability).
    """

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        object.__setattr__(self, "table", t)

    @classmethod
    def marginal(cls, p: float) -> "NodePrior":
        return cls(np.array([p], dtype=float))

    @classmethod
    def from_conditionals(cls, values: Sequence[float]) -> "NodePrior":
        """Build from probabilities listed in subscript order.

        Subscript order enumerates parent-bit combinations counting with
        the first-listed parent as the most significant digit, matching
        the conventional 4-tuple (p00, p01, p10, p11) where the first
        subscript is the first-listed parent.  Converted to the internal
        little-endian row order by reversing each index's bits.
        """
        vals = np.asarray(values, dtype=float)
        k = vals.size
        nb = k.bit_length() - 1
        if k < 1 or 2 ** nb != k:
            raise PriorGraphError(f"conditional table length {k} is not a power of 2")
        table = np.empty(k)
        for idx in range(k):
            rev = int(f"{idx:0{nb}b}"[::-1], 2) if nb else 0
            table[rev] = vals[idx]
        return cls(table)

    @property
    def n_parents(self) -> int:
        return int(self.table.size).bit_length() - 1


@dataclass(frozen=True, eq=False)
class CompetingBlocks:
    """Mixture over mutually exclusive predictor sets.

    Block k keeps its member nodes governed by their usual node priors and
    forces every non-member inactive; the prior over patterns is the
    mixing-weighted sum of the block-restricted priors.
    """

    members: tuple[tuple[int, ...], ...]
    mixing: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "members",
                           tuple(tuple(sorted(set(m))) for m in self.members))
        object.__setattr__(self, "mixing", np.asarray(self.mixing, dtype=float))


@dataclass(frozen=True, eq=False)
class GlobalWeight:
    """Reweighting of the prior by the count of active nodes in a subset.

    ``table[c]`` is the weight applied to patterns with ``c`` active nodes
    among ``subset`` (all nodes when ``subset`` is None).  Covers size
    indicators, per-size weight vectors, and order-restricted counts.
    """

    table: np.ndarray
    subset: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "table", np.asarray(self.table, dtype=float))
        if self.subset is not None:
            object.__setattr__(self, "subset", tuple(sorted(set(self.subset))))

    @classmethod
    def size_indicator(cls, max_terms: int, p: int) -> "GlobalWeight":
        t = np.zeros(p + 1)
        t[: max_terms + 1] = 1.0
        return cls(t)

    @classmethod
    def size_weights(cls, weights: Sequence[float]) -> "GlobalWeight":
        return cls(np.asarray(weights, dtype=float))

    @classmethod
    def count_in_subset(cls, subset: Sequence[int], weights: Sequence[float]) -> "GlobalWeight":
        return cls(np.asarray(weights, dtype=float), tuple(subset))


@dataclass(eq=False)
class PriorSpec:
    """Complete prior over activation patterns.

    ``parents[i]`` lists the nodes conditioning node i (immediate
    inheritance by default; explicit lists support wider conditioning).
    Use :func:`validate` for diagnostics; evaluation functions assume a
    well-formed spec.
    """

    node_priors: tuple[NodePrior, ...]
    parents: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...]
    competing: CompetingBlocks | None = None
    weight: GlobalWeight | None = None
    max_parents: int = 8

    def __post_init__(self):
        self.node_priors = tuple(self.node_priors)
        self.parents = tuple(tuple(pa) for pa in self.parents)
        self.labels = tuple(self.labels)
        if not (len(self.node_priors) == len(self.parents) == len(self.labels)):
            raise PriorGraphError("node_priors, parents and labels must align")

    @property
    def p(self) -> int:
        return len(self.node_priors)

    @cached_property
    def topo_order(self) -> tuple[int, ...]:
        """Parents-first order (stable: ties broken by node index)."""
        indeg = [len(pa) for pa in self.parents]
        children = self.children
        import heapq
        ready = [i for i in range(self.p) if indeg[i] == 0]
        heapq.heapify(ready)
        out = []
        while ready:
            i = heapq.heappop(ready)
            out.append(i)
            for c, _ in children[i]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, c)
        if len(out) != self.p:
            raise PriorGraphError("parent graph contains a cycle")
        return tuple(out)

    @cached_property
    def children(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per node: (child index, this node's position in the child's
        parent list)."""
        ch: list[list[tuple[int, int]]] = [[] for _ in range(self.p)]
        for c, pa in enumerate(self.parents):
            for pos, j in enumerate(pa):
                if not (0 <= j < self.p):
                    raise PriorGraphError(f"node {c} has out-of-range parent {j}")
                ch[j].append((c, pos))
        return tuple(tuple(x) for x in ch)

    @cached_property
    def log_weight_norm(self) -> float | None:
        """Log normalizing constant of the reweighted prior.

        Computed by exact enumeration when feasible; None otherwise (the
        sampler only needs ratios, which are normalizer-free).
        """
        if self.weight is None:
            return None
        if self.p > ENUMERATION_LIMIT:
            return None
        total = 0.0
        for bits in _pattern_chunks(self.p):
            total += float(_raw_mass(bits, self).sum())
        if total <= 0.0:
            raise PriorGraphError("global weight removes all prior mass")
        return math.log(total)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str


def has_errors(diags: Iterable[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diags)


def validate(spec: PriorSpec) -> list[Diagnostic]:
    """Check spec invariants; returns diagnostics instead of raising.

    Errors make the spec unusable; warnings flag suspicious but legal
    choices (e.g. a conditional table where adding an active parent
    lowers the activation probability).
    """
    out: list[Diagnostic] = []
    err = lambda m: out.append(Diagnostic("error", m))
    warn = lambda m: out.append(Diagnostic("warning", m))
    p = spec.p

    for i, (np_, pa) in enumerate(zip(spec.node_priors, spec.parents)):
        lab = spec.labels[i]
        if len(pa) != len(set(pa)):
            err(f"node {lab}: duplicate parents")
        if any(j == i for j in pa):
            err(f"node {lab}: is its own parent")
        if any(not (0 <= j < p) for j in pa):
            err(f"node {lab}: parent index out of range")
            continue
        if len(pa) > spec.max_parents:
            err(f"node {lab}: {len(pa)} parents exceeds cap {spec.max_parents}")
        if np_.table.size != 2 ** len(pa):
            err(f"node {lab}: table has {np_.table.size} rows, "
                f"expected {2 ** len(pa)}")
            continue
        if np.any(np_.table < 0) or np.any(np_.table > 1):
            err(f"node {lab}: probabilities outside [0, 1]")
            continue
        # natural ordering: activating a parent should not lower the
        # child's activation probability
        nb = len(pa)
        if nb >= 1:
            tab = np_.table
            monotone = True
            for r in range(2 ** nb):
                for j in range(nb):
                    if not (r >> j) & 1:
                        if tab[r] > tab[r | (1 << j)] + 1e-12:
                            monotone = False
            if not monotone:
                warn(f"node {lab}: conditional table violates the natural "
                     "ordering (more active parents should not decrease "
                     "the activation probability)")

    try:
        spec.topo_order
    except PriorGraphError as exc:
        err(str(exc))

    cb = spec.competing
    if cb is not None:
        if len(cb.members) != cb.mixing.size:
            err("competing blocks: mixing length does not match block count")
        elif len(cb.members) == 0:
            err("competing blocks: no blocks declared")
        else:
            if np.any(cb.mixing < 0):
                err("competing blocks: negative mixing probability")
            s = float(cb.mixing.sum())
            if abs(s - 1.0) > 1e-12:
                err(f"competing blocks: mixing probabilities sum to {s!r}, not 1")
            for k, mem in enumerate(cb.members):
                if any(not (0 <= j < p) for j in mem):
                    err(f"competing block {k}: member index out of range")

    w = spec.weight
    if w is not None:
        subset = range(p) if w.subset is None else w.subset
        if any(not (0 <= j < p) for j in subset):
            err("global weight: subset index out of range")
        elif w.table.size != len(tuple(subset)) + 1:
            err(f"global weight: table length {w.table.size}, "
                f"expected {len(tuple(subset)) + 1}")
        elif np.any(w.table < 0):
            err("global weight: negative weight")
        elif not np.any(w.table > 0):
            err("global weight: all weights are zero")
        elif p <= ENUMERATION_LIMIT and not has_errors(out):
            try:
                spec.log_weight_norm
            except PriorGraphError:
                err("global weight: no reachable pattern has positive weight")

    return out


# ---------------------------------------------------------------------------
# evaluation


def _pattern_chunks(p: int, chunk_bits: int = 16):
    """Yield all 2^p patterns in lexicographic bit order, chunked."""
    total = 1 << p
    step = 1 << min(chunk_bits, p)
    shifts = np.arange(p - 1, -1, -1, dtype=np.uint64)
    for start in range(0, total, step):
        k = np.arange(start, min(start + step, total), dtype=np.uint64)
        yield ((k[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def _factors(bits: np.ndarray, spec: PriorSpec) -> np.ndarray:
    """Per-node conditional factor for each pattern row."""
    K, p = bits.shape
    f = np.empty((K, p))
    for i in range(p):
        pa = spec.parents[i]
        if pa:
            rows = np.zeros(K, dtype=np.int64)
            for j, pj in enumerate(pa):
                rows |= bits[:, pj].astype(np.int64) << j
            pi = spec.node_priors[i].table[rows]
        else:
            pi = np.full(K, spec.node_priors[i].table[0])
        f[:, i] = np.where(bits[:, i] == 1, pi, 1.0 - pi)
    return f


def _mixture_mass(bits: np.ndarray, spec: PriorSpec) -> np.ndarray:
    """Unweighted prior mass of each pattern (before any global weight)."""
    f = _factors(bits, spec)
    if spec.competing is None:
        return f.prod(axis=1)
    K, p = bits.shape
    mass = np.zeros(K)
    for k, mem in enumerate(spec.competing.members):
        in_block = np.zeros(p, dtype=bool)
        in_block[list(mem)] = True
        prod = np.where(in_block[None, :], f, 1.0).prod(axis=1)
        outside_active = (bits[:, ~in_block] == 1).any(axis=1) if (~in_block).any() \
            else np.zeros(K, dtype=bool)
        mass += spec.competing.mixing[k] * prod * (~outside_active)
    return mass


def _weight_values(bits: np.ndarray, spec: PriorSpec) -> np.ndarray:
    w = spec.weight
    if w is None:
        return np.ones(bits.shape[0])
    cols = bits if w.subset is None else bits[:, list(w.subset)]
    counts = cols.sum(axis=1, dtype=np.int64)
    return w.table[counts]


def _raw_mass(bits: np.ndarray, spec: PriorSpec) -> np.ndarray:
    return _mixture_mass(bits, spec) * _weight_values(bits, spec)


def _as_bits(delta, p: int) -> np.ndarray:
    arr = np.asarray(delta, dtype=np.uint8)
    if arr.shape != (p,):
        raise ValueError(f"pattern has length {arr.size}, expected {p}")
    return arr


def log_prior(delta, spec: PriorSpec) -> float:
    """Log prior mass of one activation pattern; -inf for zero mass.

    When a global weight is present and the normalizer is computable
    (p <= enumeration limit) the value is normalized; otherwise it is the
    unnormalized log mass.
    """
    bits = _as_bits(delta, spec.p)[None, :]
    mass = float(_raw_mass(bits, spec)[0])
    if mass <= 0.0:
        return -math.inf
    lp = math.log(mass)
    norm = spec.log_weight_norm
    if norm is not None:
        lp -= norm
    return lp


def conditional_masses(i: int, delta, spec: PriorSpec) -> tuple[float, float]:
    """Unnormalized masses of the two settings of bit i given the rest.

    Uses the factored structure: only node i's own factor, its children's
    factors and the global-weight count depend on bit i.  With competing
    blocks the per-block products are evaluated in full, since block
    restrictions do not factorize across the sum.
    """
    bits = _as_bits(delta, spec.p).copy()

    if spec.competing is not None:
        u = []
        for b in (0, 1):
            bits[i] = b
            u.append(float(_mixture_mass(bits[None, :], spec)[0]))
        u0, u1 = u
    else:
        u0 = u1 = 1.0
        pa = spec.parents[i]
        row = 0
        for j, pj in enumerate(pa):
            row |= int(bits[pj]) << j
        pi = float(spec.node_priors[i].table[row])
        u0 *= 1.0 - pi
        u1 *= pi
        for c, pos in spec.children[i]:
            rowc = 0
            for j, pj in enumerate(spec.parents[c]):
                if pj != i:
                    rowc |= int(bits[pj]) << j
            pc0 = float(spec.node_priors[c].table[rowc])
            pc1 = float(spec.node_priors[c].table[rowc | (1 << pos)])
            if bits[c] == 1:
                u0 *= pc0
                u1 *= pc1
            else:
                u0 *= 1.0 - pc0
                u1 *= 1.0 - pc1

    w = spec.weight
    if w is not None:
        subset = w.subset
        if subset is None:
            cnt = int(bits.sum()) - int(bits[i])
            u0 *= float(w.table[cnt])
            u1 *= float(w.table[cnt + 1])
        else:
            in_subset = i in subset
            cnt = int(bits[list(subset)].sum()) - (int(bits[i]) if in_subset else 0)
            u0 *= float(w.table[cnt])
            u1 *= float(w.table[cnt + 1]) if in_subset else float(w.table[cnt])
    return u0, u1


def conditional_activation(i: int, delta, spec: PriorSpec) -> float:
    """Pr(bit i = 1 | all other bits) under the prior.

    Returns exact 0 or 1 when one side has zero mass; raises
    :class:`InconsistentPatternError` when both do.
    """
    u0, u1 = conditional_masses(i, delta, spec)
    if u0 == 0.0 and u1 == 0.0:
        raise InconsistentPatternError(
            f"both settings of node {spec.labels[i]} have zero prior mass")
    if u1 == 0.0:
        return 0.0
    if u0 == 0.0:
        return 1.0
    return u1 / (u0 + u1)


# ---------------------------------------------------------------------------
# model-space counting


def count_strong(m: int) -> int:
    """Models with positive mass: m main effects, all two-way interactions,
    an interaction eligible only when both parents are active."""
    if m < 0:
        raise ValueError("m must be non-negative")
    return sum(math.comb(m, i) * 2 ** math.comb(i, 2) for i in range(m + 1))


def count_weak(m: int) -> int:
    """As :func:`count_strong` but an interaction is eligible when at least
    one parent is active."""
    if m < 0:
        raise ValueError("m must be non-negative")
    return sum(math.comb(m, i) * 2 ** (m * i - i * (i + 1) // 2) for i in range(m + 1))


# ---------------------------------------------------------------------------
# enumeration and sampling


def enumerate_support(spec: PriorSpec, p_limit: int = ENUMERATION_LIMIT
                      ) -> tuple[np.ndarray, np.ndarray]:
    """All patterns with positive mass, in lexicographic bit order.

    Returns (patterns, probabilities); probabilities sum to 1 for a valid
    spec (the normalizer of a global weight is applied, everything else is
    normalized by construction).
    """
    if spec.p > p_limit:
        raise PriorGraphError(f"p = {spec.p} exceeds enumeration limit {p_limit}")
    norm = spec.log_weight_norm
    scale = math.exp(-norm) if norm is not None else 1.0
    pats, probs = [], []
    for bits in _pattern_chunks(spec.p):
        mass = _raw_mass(bits, spec)
        keep = mass > 0.0
        if keep.any():
            pats.append(bits[keep])
            probs.append(mass[keep] * scale)
    if not pats:
        raise PriorGraphError("prior has empty support")
    return np.concatenate(pats), np.concatenate(probs)


def support_marginals(patterns: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Per-node inclusion probabilities of an enumerated support."""
    return (patterns.astype(float) * probs[:, None]).sum(axis=0)


def partition_probabilities(spec: PriorSpec) -> tuple[np.ndarray, np.ndarray]:
    """Unweighted prior mass of each global-weight partition cell.

    Reports the mass each count value carries *before* reweighting, which
    is worth inspecting before deciding to reweight at all.  Uses the
    all-node count when no weight is declared.
    """
    if spec.p > ENUMERATION_LIMIT:
        raise PriorGraphError("partition probabilities need exact enumeration")
    subset = None if spec.weight is None else spec.weight.subset
    size = spec.p if subset is None else len(subset)
    acc = np.zeros(size + 1)
    for bits in _pattern_chunks(spec.p):
        mass = _mixture_mass(bits, spec)
        cols = bits if subset is None else bits[:, list(subset)]
        counts = cols.sum(axis=1, dtype=np.int64)
        np.add.at(acc, counts, mass)
    return np.arange(size + 1), acc


def sample_prior(spec: PriorSpec, rng: np.random.Generator, size: int | None = None,
                 max_tries: int = 10000) -> np.ndarray:
    """Ancestral draw(s) from the prior.

    Roots are drawn before children; with competing blocks the block is
    drawn first and non-members forced inactive.  A global weight is
    honored by rejection against the maximum weight.
    """
    single = size is None
    count = 1 if single else size
    out = np.empty((count, spec.p), dtype=np.uint8)
    wmax = None if spec.weight is None else float(spec.weight.table.max())
    for r in range(count):
        for _ in range(max_tries):
            bits = _ancestral_once(spec, rng)
            if spec.weight is None:
                break
            wv = float(_weight_values(bits[None, :], spec)[0])
            if rng.random() < wv / wmax:
                break
        else:
            raise PriorGraphError("could not draw a positive-weight pattern "
                                  f"in {max_tries} tries")
        out[r] = bits
    return out[0] if single else out


def _ancestral_once(spec: PriorSpec, rng: np.random.Generator) -> np.ndarray:
    bits = np.zeros(spec.p, dtype=np.uint8)
    allowed = None
    if spec.competing is not None:
        u = rng.random()
        acc = 0.0
        k = len(spec.competing.members) - 1
        for kk, mk in enumerate(spec.competing.mixing):
            acc += mk
            if u < acc:
                k = kk
                break
        allowed = np.zeros(spec.p, dtype=bool)
        allowed[list(spec.competing.members[k])] = True
    for i in spec.topo_order:
        if allowed is not None and not allowed[i]:
            continue
        row = 0
        for j, pj in enumerate(spec.parents[i]):
            row |= int(bits[pj]) << j
        pi = float(spec.node_priors[i].table[row])
        bits[i] = 1 if rng.random() < pi else 0
    return bits


# ---------------------------------------------------------------------------
# prior construction helpers


def _by_count(value, n_parents: int, what: str) -> float:
    if isinstance(value, Mapping):
        try:
            return float(value[n_parents])
        except KeyError:
            raise PriorGraphError(f"no {what} value for nodes with "
                                  f"{n_parents} parent(s)")
    return float(value)


def heredity_prior(ts: TermSet, rule: str = "strong", root_prob: float = 0.5,
                   full=0.5, partial=0.25, eps_partial: float = 0.0,
                   eps_zero: float = 0.0,
                   overrides: Mapping[str, object] | None = None,
                   competing: CompetingBlocks | None = None,
                   weight: GlobalWeight | None = None,
                   parents_override: Mapping[str, Sequence[str]] | None = None,
                   max_parents: int = 8) -> PriorSpec:
    """Build a PriorSpec over a term set from a heredity rule.

    Rules fill each node's conditional table by the number of active
    parents k out of P:

    * ``strong``: full(P) when k = P, eps_partial when 0 < k < P,
      eps_zero when k = 0.  Strict strong heredity uses zero epsilons;
      the relaxed variant replaces them with a small positive value.
    * ``weak``: full(P) when k = P, partial(P) when 0 < k < P, eps_zero
      when k = 0.
    * ``independent``: the inheritance edges are dropped and each node is
      a Bernoulli whose probability is full(P) (P = the parent count the
      node would have had), so terms of the same kind can share one value.

    ``full`` and ``partial`` accept a scalar or a {parent-count: value}
    mapping.  ``overrides`` maps node labels to a marginal probability, a
    conditional list in subscript order, or a NodePrior.  Explicit parent
    lists (term labels) may be given per node via ``parents_override`` to
    condition beyond immediate inheritance.
    """
    if rule not in ("strong", "weak", "independent"):
        raise PriorGraphError(f"unknown heredity rule {rule!r}")
    labels = ts.labels
    label_index = {lab: i for i, lab in enumerate(labels)}
    parent_lists = [tuple(pa) for pa in ts.parent_indices]
    if parents_override:
        for lab, plabs in parents_override.items():
            if lab not in label_index:
                raise PriorGraphError(f"parents override for unknown term {lab!r}")
            try:
                parent_lists[label_index[lab]] = tuple(sorted(label_index[s] for s in plabs))
            except KeyError as exc:
                raise PriorGraphError(f"unknown parent term {exc.args[0]!r} "
                                      f"for {lab!r}")

    node_priors: list[NodePrior] = []
    final_parents: list[tuple[int, ...]] = []
    for i in range(ts.p):
        pa = parent_lists[i]
        P = len(pa)
        if rule == "independent":
            prob = root_prob if P == 0 else _by_count(full, P, "independent")
            node_priors.append(NodePrior.marginal(prob))
            final_parents.append(())
            continue
        if P == 0:
            node_priors.append(NodePrior.marginal(root_prob))
            final_parents.append(())
            continue
        table = np.empty(2 ** P)
        for r in range(2 ** P):
            k = bin(r).count("1")
            if k == P:
                table[r] = _by_count(full, P, "full")
            elif k == 0:
                table[r] = eps_zero
            elif rule == "strong":
                table[r] = eps_partial
            else:
                table[r] = _by_count(partial, P, "partial")
        node_priors.append(NodePrior(table))
        final_parents.append(pa)

    spec = PriorSpec(tuple(node_priors), tuple(final_parents), labels,
                     competing=competing, weight=weight, max_parents=max_parents)
    if overrides:
        apply_overrides(spec, overrides)
    return spec


def apply_overrides(spec: PriorSpec, overrides: Mapping[str, object]) -> None:
    """Replace node priors by label.  Values: NodePrior, float (constant
    activation probability regardless of parents) or a sequence in
    subscript order sized for the node's parent count."""
    label_index = {lab: i for i, lab in enumerate(spec.labels)}
    priors = list(spec.node_priors)
    for lab, val in overrides.items():
        if lab not in label_index:
            raise PriorGraphError(f"override for unknown term {lab!r}")
        i = label_index[lab]
        P = len(spec.parents[i])
        if isinstance(val, NodePrior):
            np_ = val
        elif isinstance(val, (int, float)):
            np_ = NodePrior(np.full(2 ** P, float(val)))
        else:
            np_ = NodePrior.from_conditionals(val)
        if np_.table.size != 2 ** P:
            raise PriorGraphError(
                f"override for {lab!r} has {np_.table.size} entries, "
                f"expected {2 ** P}")
        priors[i] = np_
    spec.node_priors = tuple(priors)
    spec.__dict__.pop("log_weight_norm", None)  # tables feed the normalizer
