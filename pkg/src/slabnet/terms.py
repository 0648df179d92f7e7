"""Model terms: formula parsing, order/inheritance algebra, design matrices.

A term is a product of base variables raised to positive integer powers,
e.g. ``A^2*B``.  Continuous variables may carry any positive exponent;
categorical variables appear with exponent 1 and expand into a group of
dummy columns that share a single selection indicator.
"""

from __future__ import annotations

import csv
import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

INTERCEPT_NAME = "(intercept)"


class TermError(ValueError):
    """Malformed term formula or undeclared variable."""


class DataError(ValueError):
    """Problem with tabular input data."""


class DesignError(ValueError):
    """Design matrix could not be assembled."""


@dataclass(frozen=True)
class BaseVariable:
    """A named predictor; ``levels`` is None for continuous variables.

    For categorical variables the first declared level is the reference
    level and receives no dummy column.
    """

    name: str
    levels: tuple[str, ...] | None = None

    def __post_init__(self):
        if not _IDENT_RE.fullmatch(self.name):
            raise TermError(f"invalid variable name {self.name!r}")
        if self.levels is not None:
            if len(self.levels) < 2:
                raise TermError(f"categorical {self.name!r} needs >= 2 levels")
            if len(set(self.levels)) != len(self.levels):
                raise TermError(f"duplicate levels for {self.name!r}")
            object.__setattr__(self, "levels", tuple(self.levels))

    @property
    def is_categorical(self) -> bool:
        return self.levels is not None


def continuous(name: str) -> BaseVariable:
    return BaseVariable(name)


def categorical(name: str, levels: Sequence[str]) -> BaseVariable:
    return BaseVariable(name, tuple(levels))


@dataclass(frozen=True)
class Term:
    """Product of base variables with positive integer exponents."""

    exponents: tuple[tuple[str, int], ...]  # sorted by variable name

    def __post_init__(self):
        if not self.exponents:
            raise TermError("empty term")
        items = tuple(sorted(self.exponents))
        for name, e in items:
            if e <= 0:
                raise TermError(f"exponent {e} on {name!r} must be positive")
        object.__setattr__(self, "exponents", items)

    @classmethod
    def of(cls, **exponents: int) -> "Term":
        return cls(tuple(exponents.items()))

    def exponent(self, name: str) -> int:
        return dict(self.exponents).get(name, 0)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.exponents)

    @property
    def label(self) -> str:
        return "*".join(n if e == 1 else f"{n}^{e}" for n, e in self.exponents)

    def __str__(self) -> str:
        return self.label


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_FACTOR_RE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\^\s*([+-]?\d+))?\s*$")


def parse_term(text: str, vars: Sequence[BaseVariable]) -> Term:
    """Parse ``"A^2*B"`` style formulas against declared variables.

    The grammar is identifier, optional ``^`` positive integer exponent,
    ``*`` products.  Repeated factors multiply: ``A*A`` equals ``A^2``.
    """
    by_name = {v.name: v for v in vars}
    combined: dict[str, int] = {}
    if not text.strip():
        raise TermError("empty term formula")
    for factor in text.split("*"):
        m = _FACTOR_RE.match(factor)
        if m is None:
            raise TermError(f"cannot parse factor {factor.strip()!r} in {text!r}")
        name, exp_s = m.group(1), m.group(2)
        exp = 1 if exp_s is None else int(exp_s)
        if name not in by_name:
            raise TermError(f"unknown variable {name!r} in {text!r}")
        if exp <= 0:
            raise TermError(f"exponent {exp} on {name!r} must be positive")
        combined[name] = combined.get(name, 0) + exp
    for name, exp in combined.items():
        if by_name[name].is_categorical and exp != 1:
            raise TermError(f"categorical {name!r} cannot carry exponent {exp}")
    return Term(tuple(combined.items()))


def order(t: Term) -> int:
    """Total exponent across the term's components."""
    return sum(e for _, e in t.exponents)


def inherits(s: Term, t: Term) -> bool:
    """True when s divides t and is of strictly lower order."""
    if order(s) >= order(t):
        return False
    te = dict(t.exponents)
    return all(e <= te.get(name, 0) for name, e in s.exponents)


def immediate_parents(t: Term, ts: "TermSet") -> set[Term]:
    """Members of ``ts`` that t inherits from at the next lowest order."""
    k = order(t) - 1
    return {s for s in ts.terms if order(s) == k and inherits(s, t)}


class TermSet:
    """Ordered collection of distinct terms; one selectable node per term."""

    def __init__(self, variables: Sequence[BaseVariable], terms: Sequence[Term]):
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise TermError("duplicate variable names")
        self.variables = tuple(variables)
        self._vars_by_name = {v.name: v for v in self.variables}
        terms = tuple(terms)
        if len(set(terms)) != len(terms):
            raise TermError("duplicate terms in term set")
        for t in terms:
            for name, e in t.exponents:
                v = self._vars_by_name.get(name)
                if v is None:
                    raise TermError(f"term {t} references undeclared variable {name!r}")
                if v.is_categorical and e != 1:
                    raise TermError(f"categorical {name!r} in {t} must have exponent 1")
        self.terms = terms
        self._index = {t: i for i, t in enumerate(terms)}
        # immediate-inheritance DAG, as node indices
        self.parent_indices: tuple[tuple[int, ...], ...] = tuple(
            tuple(sorted(self._index[s] for s in immediate_parents(t, self)))
            for t in terms
        )
        # stable topological order: by term order, then declaration index
        self.topo_order: tuple[int, ...] = tuple(
            sorted(range(len(terms)), key=lambda i: (order(terms[i]), i))
        )

    @classmethod
    def parse(cls, variables: Sequence[BaseVariable], formulas: Sequence[str]) -> "TermSet":
        return cls(variables, [parse_term(f, variables) for f in formulas])

    @property
    def p(self) -> int:
        return len(self.terms)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(t.label for t in self.terms)

    def variable(self, name: str) -> BaseVariable:
        return self._vars_by_name[name]

    def index_of(self, t: Term) -> int:
        return self._index[t]

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)


def full_second_order(variables: Sequence[BaseVariable]) -> TermSet:
    """Main effects, squares of continuous variables, all two-way products."""
    terms = [Term.of(**{v.name: 1}) for v in variables]
    terms += [Term.of(**{v.name: 2}) for v in variables if not v.is_categorical]
    for a, b in itertools.combinations(variables, 2):
        terms.append(Term(((a.name, 1), (b.name, 1))))
    return TermSet(variables, terms)


@dataclass
class Dataset:
    """Response vector plus named predictor columns.

    Continuous predictors are float arrays; categorical predictors are
    object arrays of level labels.  All columns share the response length
    and contain no missing values.
    """

    response: np.ndarray
    predictors: dict[str, np.ndarray]
    variables: tuple[BaseVariable, ...]

    def __post_init__(self):
        self.response = np.asarray(self.response, dtype=float)
        if self.response.ndim != 1 or self.response.size == 0:
            raise DataError("response must be a non-empty vector")
        if not np.all(np.isfinite(self.response)):
            raise DataError("response contains missing or non-finite values")
        n = self.response.size
        declared = {v.name for v in self.variables}
        if set(self.predictors) != declared:
            raise DataError("predictor columns do not match declared variables")
        for v in self.variables:
            col = self.predictors[v.name]
            if len(col) != n:
                raise DataError(f"column {v.name!r} has length {len(col)}, expected {n}")
            if v.is_categorical:
                seen = set(str(x) for x in col)
                extra = seen - set(v.levels)
                if extra:
                    raise DataError(f"undeclared level(s) {sorted(extra)} in {v.name!r}")
                self.predictors[v.name] = np.asarray([str(x) for x in col], dtype=object)
            else:
                arr = np.asarray(col, dtype=float)
                if not np.all(np.isfinite(arr)):
                    raise DataError(f"column {v.name!r} contains missing or non-finite values")
                self.predictors[v.name] = arr

    @property
    def n(self) -> int:
        return self.response.size

    def variable(self, name: str) -> BaseVariable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)


def load_csv(path, response: str,
             categorical: Mapping[str, Sequence[str] | None] | Sequence[str] = ()) -> Dataset:
    """Read a header-first CSV into a Dataset.

    ``categorical`` names columns to treat as label-valued; levels may be
    given explicitly (first = reference) or inferred in order of first
    appearance.  Blank cells are load errors.
    """
    if isinstance(categorical, Mapping):
        cat_levels = {k: (tuple(v) if v is not None else None) for k, v in categorical.items()}
    else:
        cat_levels = {name: None for name in categorical}

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if response not in header:
            raise DataError(f"{path}: response column {response!r} not in header")
        unknown = set(cat_levels) - set(header)
        if unknown:
            raise DataError(f"{path}: categorical column(s) {sorted(unknown)} not in header")
        raw: dict[str, list[str]] = {h: [] for h in header}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            for h, cell in zip(header, row):
                cell = cell.strip()
                if cell == "":
                    raise DataError(f"{path}:{lineno}: blank cell in column {h!r}")
                raw[h].append(cell)

    if not raw[response]:
        raise DataError(f"{path}: no data rows")

    def parse_numeric(name, cells):
        try:
            return np.array([float(c) for c in cells])
        except ValueError:
            bad = next(c for c in cells if not _is_float(c))
            raise DataError(f"{path}: non-numeric value {bad!r} in column {name!r}")

    y = parse_numeric(response, raw[response])
    variables = []
    predictors = {}
    for h in header:
        if h == response:
            continue
        if h in cat_levels:
            levels = cat_levels[h]
            if levels is None:
                levels = tuple(dict.fromkeys(raw[h]))  # first-appearance order
            if len(levels) < 2:
                raise DataError(f"{path}: column {h!r} has fewer than 2 observed levels")
            variables.append(BaseVariable(h, tuple(levels)))
            predictors[h] = np.asarray(raw[h], dtype=object)
        else:
            variables.append(BaseVariable(h))
            predictors[h] = parse_numeric(h, raw[h])
    return Dataset(y, predictors, tuple(variables))


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


@dataclass
class DummyExpansion:
    """Treatment-coded indicator columns for one categorical variable."""

    names: list[str]        # one per non-reference level
    columns: np.ndarray     # n x l


def expand_categorical(v: BaseVariable, data: Dataset) -> DummyExpansion:
    """Indicator columns for every non-reference level of ``v``.

    All returned columns belong to a single selectable node.
    """
    if not v.is_categorical:
        raise TermError(f"{v.name!r} is not categorical")
    col = data.predictors[v.name]
    observed = set(col)
    extra = observed - set(v.levels)
    if extra:
        raise DataError(f"undeclared level(s) {sorted(extra)} in {v.name!r}")
    if len(observed) < 2:
        raise DataError(f"column {v.name!r} has fewer than 2 observed levels")
    names = [f"{v.name}[{lev}]" for lev in v.levels[1:]]
    cols = np.stack([(col == lev).astype(float) for lev in v.levels[1:]], axis=1)
    return DummyExpansion(names, cols)


@dataclass
class DesignMatrix:
    """n x q design with an always-present, never-selectable intercept.

    ``column_to_node`` maps each column to its selectable node index, with
    -1 for the intercept.  Grouped (dummy-expanded) terms contribute
    several columns mapped to the same node.
    """

    X: np.ndarray
    column_names: list[str]
    column_to_node: np.ndarray
    node_labels: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def q(self) -> int:
        return self.X.shape[1]

    @property
    def p(self) -> int:
        return len(self.node_labels)

    def columns_of_node(self, node: int) -> np.ndarray:
        return np.flatnonzero(self.column_to_node == node)


def build_design(data: Dataset, ts: TermSet, standardize: bool = False) -> DesignMatrix:
    """Assemble the design matrix for a term set over a dataset.

    Term columns are elementwise products of base columns raised to their
    exponents; categorical factors expand into treatment-coded dummies and
    a term touching categoricals yields the product of each dummy
    combination, all bound to the term's single node.  With
    ``standardize=True`` the purely continuous columns are centered and
    scaled to unit variance (products are still formed from the raw
    variables first).
    """
    n = data.n
    cols: list[np.ndarray] = [np.ones(n)]
    names: list[str] = [INTERCEPT_NAME]
    col_node: list[int] = [-1]

    for node, term in enumerate(ts.terms):
        cont = np.ones(n)
        cat_parts: list[DummyExpansion] = []
        for name, e in term.exponents:
            v = ts.variable(name)
            if v.is_categorical:
                cat_parts.append(expand_categorical(v, data))
            else:
                cont = cont * data.predictors[name] ** e
        if not cat_parts:
            combos = [("", np.ones(n))]
        else:
            combos = []
            for picks in itertools.product(*(range(len(cp.names)) for cp in cat_parts)):
                label = "*".join(cp.names[k] for cp, k in zip(cat_parts, picks))
                prod = np.ones(n)
                for cp, k in zip(cat_parts, picks):
                    prod = prod * cp.columns[:, k]
                combos.append((label, prod))
        for label, dummy in combos:
            colvals = cont * dummy
            if not np.all(np.isfinite(colvals)):
                raise DesignError(f"non-finite values in column for term {term} "
                                  "(overflow in powers?)")
            cont_names = [f"{nm}^{e}" if e > 1 else nm
                          for nm, e in term.exponents if not ts.variable(nm).is_categorical]
            base = "*".join(cont_names)
            if label and base:
                names.append(f"{base}*{label}")
            elif label:
                names.append(label)
            else:
                names.append(term.label)
            cols.append(colvals)
            col_node.append(node)

    X = np.column_stack(cols)
    col_node_arr = np.asarray(col_node, dtype=np.int64)

    if standardize:
        has_cat = np.zeros(ts.p, dtype=bool)
        for node, term in enumerate(ts.terms):
            has_cat[node] = any(ts.variable(nm).is_categorical for nm, _ in term.exponents)
        for j in range(1, X.shape[1]):
            node = col_node_arr[j]
            if has_cat[node]:
                continue
            mu = X[:, j].mean()
            sd = X[:, j].std()
            if sd == 0.0:
                raise DesignError(f"cannot standardize constant column {names[j]!r}")
            X[:, j] = (X[:, j] - mu) / sd

    return DesignMatrix(X, names, col_node_arr, ts.labels)


def ungroup_categorical(data: Dataset, name: str) -> Dataset:
    """Replace a categorical variable by its dummy columns as 0/1 continuous
    predictors named ``name[level]`` (reference level dropped).

    Useful for comparing grouped selection against one indicator per dummy.
    """
    v = data.variable(name)
    exp = expand_categorical(v, data)
    predictors = {k: val for k, val in data.predictors.items() if k != name}
    variables = [w for w in data.variables if w.name != name]
    for j, cname in enumerate(exp.names):
        flat = cname.replace("[", "_").replace("]", "")
        predictors[flat] = exp.columns[:, j].copy()
        variables.append(continuous(flat))
    return Dataset(data.response.copy(), predictors, tuple(variables))
