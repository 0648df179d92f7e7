import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import slabnet.terms as tm
from slabnet.terms import (DataError, DesignError, Term, TermError, TermSet,
                           build_design, categorical, continuous,
                           expand_categorical, full_second_order, inherits,
                           immediate_parents, order, parse_term)

ABC = [continuous("A"), continuous("B"), continuous("C")]


class TestParse:
    def test_identifier(self):
        assert parse_term("A", ABC) == Term.of(A=1)

    def test_exponent_product(self):
        assert parse_term("A^2*B", ABC) == Term.of(A=2, B=1)

    def test_commutative(self):
        assert parse_term("B*A", ABC) == parse_term("A*B", ABC)

    def test_repeated_factor_combines(self):
        assert parse_term("A*A", ABC) == Term.of(A=2)
        assert parse_term("A^2*A*B", ABC) == Term.of(A=3, B=1)

    def test_whitespace(self):
        assert parse_term(" A ^ 2 * B ", ABC) == Term.of(A=2, B=1)

    def test_unknown_identifier(self):
        with pytest.raises(TermError, match="unknown variable"):
            parse_term("A*Z", ABC)

    def test_nonpositive_exponent(self):
        with pytest.raises(TermError):
            parse_term("A^0", ABC)
        with pytest.raises(TermError):
            parse_term("A^-2", ABC)

    def test_categorical_exponent(self):
        vs = [continuous("A"), categorical("Q", ["a", "b", "c"])]
        assert parse_term("A*Q", vs) == Term.of(A=1, Q=1)
        with pytest.raises(TermError, match="categorical"):
            parse_term("Q^2", vs)

    def test_garbage(self):
        for bad in ("", "A*", "^2", "A^^2", "A B"):
            with pytest.raises(TermError):
                parse_term(bad, ABC)


class TestOrderInherits:
    def test_order(self):
        assert order(Term.of(A=1)) == 1
        assert order(Term.of(A=2, B=2)) == 4
        assert order(Term.of(A=1, B=2)) == order(Term.of(A=2, B=1)) == 3

    def test_inherits_examples(self):
        assert inherits(Term.of(A=1, B=1), Term.of(A=2, B=1))
        assert not inherits(Term.of(B=2), Term.of(A=2, B=1))
        assert not inherits(Term.of(A=1), Term.of(A=1))
        # A^2*B inherits from A^2, A*B, A, B
        t = Term.of(A=2, B=1)
        for good in (Term.of(A=2), Term.of(A=1, B=1), Term.of(A=1), Term.of(B=1)):
            assert inherits(good, t)

    def test_immediate_parents(self):
        vs = [continuous("A"), continuous("B")]
        ts = TermSet.parse(vs, ["A", "B", "A^2", "A*B", "B^2", "A*B^2"])
        got = immediate_parents(parse_term("A*B^2", vs), ts)
        assert got == {Term.of(A=1, B=1), Term.of(B=2)}

    def test_ab_parents_exclude_c(self):
        ts = TermSet.parse(ABC, ["A", "B", "C", "A*B", "A*C", "B*C"])
        assert immediate_parents(Term.of(A=1, B=1), ts) == {Term.of(A=1), Term.of(B=1)}

    def test_main_effect_has_no_parents(self):
        ts = TermSet.parse(ABC, ["A", "B", "A*B"])
        assert immediate_parents(Term.of(A=1), ts) == set()

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_strict_partial_order(self, data):
        names = ["A", "B", "C"]
        terms = data.draw(st.lists(
            st.builds(lambda d: Term(tuple(d.items())),
                      st.dictionaries(st.sampled_from(names),
                                      st.integers(1, 3), min_size=1)),
            min_size=1, max_size=8, unique=True))
        for s in terms:
            assert not inherits(s, s)
            for t in terms:
                for u in terms:
                    if inherits(s, t) and inherits(t, u):
                        assert inherits(s, u)

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_immediate_parent_order_gap(self, data):
        names = ["A", "B"]
        terms = data.draw(st.lists(
            st.builds(lambda d: Term(tuple(d.items())),
                      st.dictionaries(st.sampled_from(names),
                                      st.integers(1, 4), min_size=1)),
            min_size=1, max_size=10, unique=True))
        ts = TermSet([continuous(n) for n in names], terms)
        for t in terms:
            for s in immediate_parents(t, ts):
                assert inherits(s, t)
                assert order(s) == order(t) - 1


class TestTermSet:
    def test_duplicate_terms_rejected(self):
        with pytest.raises(TermError, match="duplicate"):
            TermSet.parse(ABC, ["A", "A"])

    def test_node_count_full_second_order(self):
        vs = [continuous(n) for n in "ABCDEF"]
        ts = full_second_order(vs)
        m = 6
        assert ts.p == m + m + m * (m - 1) // 2 == 27

    def test_topo_order_parents_first(self):
        ts = TermSet.parse(ABC, ["A*B", "A", "B"])  # child declared first
        pos = {i: k for k, i in enumerate(ts.topo_order)}
        for i, parents in enumerate(ts.parent_indices):
            for j in parents:
                assert pos[j] < pos[i]


class TestCategorical:
    def make_data(self, labels):
        n = len(labels)
        return tm.Dataset(np.zeros(n) + 1.0,
                          {"Q": np.asarray(labels, dtype=object)},
                          (categorical("Q", ["a", "b", "c", "d", "e"]),))

    def test_five_levels_four_dummies(self):
        data = self.make_data(["a", "b", "c", "d", "e", "a"])
        exp = expand_categorical(data.variables[0], data)
        assert exp.names == ["Q[b]", "Q[c]", "Q[d]", "Q[e]"]
        assert exp.columns.shape == (6, 4)
        # reference level rows are all zero
        assert np.all(exp.columns[0] == 0) and np.all(exp.columns[5] == 0)

    def test_two_levels_one_column(self):
        v = categorical("Q", ["a", "b"])
        data = tm.Dataset(np.ones(4), {"Q": np.asarray(list("abab"), dtype=object)}, (v,))
        exp = expand_categorical(v, data)
        assert exp.columns.shape == (4, 1)

    def test_undeclared_level(self):
        v = categorical("Q", ["a", "b"])
        with pytest.raises(DataError, match="undeclared"):
            tm.Dataset(np.ones(3), {"Q": np.asarray(["a", "b", "z"], dtype=object)}, (v,))

    def test_single_observed_level(self):
        data = self.make_data(["a", "a", "a"])
        with pytest.raises(DataError, match="fewer than 2"):
            expand_categorical(data.variables[0], data)

    def test_interaction_with_categorical_group(self):
        rng = np.random.default_rng(0)
        v = categorical("Q", ["a", "b", "c", "d", "e"])
        a = continuous("A")
        labels = np.asarray([["a", "b", "c", "d", "e"][i % 5] for i in range(20)],
                            dtype=object)
        data = tm.Dataset(rng.standard_normal(20),
                          {"A": rng.standard_normal(20), "Q": labels}, (a, v))
        ts = TermSet.parse([a, v], ["A", "Q", "A*Q"])
        design = build_design(data, ts)
        aq = ts.index_of(parse_term("A*Q", [a, v]))
        cols = design.columns_of_node(aq)
        assert len(cols) == 4  # one per non-reference level
        assert immediate_parents(ts.terms[aq], ts) == \
            {Term.of(A=1), Term.of(Q=1)}


class TestBuildDesign:
    def test_product_column(self):
        data = tm.Dataset(np.zeros(2), {"A": [1.0, 2.0], "B": [3.0, 4.0]},
                          (continuous("A"), continuous("B")))
        ts = TermSet.parse(data.variables, ["A*B"])
        design = build_design(data, ts)
        assert np.allclose(design.X[:, 1], [3.0, 8.0])

    def test_power_column(self):
        data = tm.Dataset(np.zeros(3), {"A": [1.0, 2.0, 3.0]}, (continuous("A"),))
        design = build_design(data, TermSet.parse(data.variables, ["A^2"]))
        assert np.allclose(design.X[:, 1], [1.0, 4.0, 9.0])

    def test_intercept_first_and_unselectable(self):
        data = tm.Dataset(np.zeros(2), {"A": [1.0, 2.0]}, (continuous("A"),))
        design = build_design(data, TermSet.parse(data.variables, ["A"]))
        assert design.column_names[0] == tm.INTERCEPT_NAME
        assert design.column_to_node[0] == -1
        assert np.all(design.X[:, 0] == 1.0)

    def test_overflow_detected(self):
        data = tm.Dataset(np.zeros(2), {"A": [1e300, 2.0]}, (continuous("A"),))
        with pytest.raises(DesignError, match="non-finite"):
            build_design(data, TermSet.parse(data.variables, ["A^2"]))

    def test_product_equals_elementwise_product_of_factors(self, rng):
        data = tm.Dataset(np.zeros(30),
                          {"A": rng.standard_normal(30), "B": rng.standard_normal(30)},
                          (continuous("A"), continuous("B")))
        ts = TermSet.parse(data.variables, ["A", "B", "A*B"])
        design = build_design(data, ts)
        assert np.allclose(design.X[:, 3], design.X[:, 1] * design.X[:, 2])

    def test_standardize_continuous_only(self, rng):
        v = categorical("Q", ["a", "b"])
        labels = np.asarray(list("ab") * 10, dtype=object)
        data = tm.Dataset(rng.standard_normal(20),
                          {"A": rng.standard_normal(20) * 7 + 3, "Q": labels},
                          (continuous("A"), v))
        ts = TermSet.parse(data.variables, ["A", "Q"])
        design = build_design(data, ts, standardize=True)
        a = design.X[:, 1]
        assert abs(a.mean()) < 1e-12 and abs(a.std() - 1) < 1e-12
        assert set(np.unique(design.X[:, 2])) == {0.0, 1.0}


class TestLoadCsv:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("A,Q,Y\n1.5,red,2.0\n-2,blue,0.5\n3,red,1\n")
        data = tm.load_csv(path, "Y", categorical=["Q"])
        assert data.n == 3
        assert np.allclose(data.response, [2.0, 0.5, 1.0])
        assert data.variable("Q").levels == ("red", "blue")
        assert np.allclose(data.predictors["A"], [1.5, -2.0, 3.0])

    def test_explicit_levels_set_reference(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("Q,Y\nred,1\nblue,2\n")
        data = tm.load_csv(path, "Y", categorical={"Q": ["blue", "red"]})
        assert data.variable("Q").levels == ("blue", "red")

    def test_blank_cell_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("A,Y\n1,2\n,3\n")
        with pytest.raises(DataError, match="blank"):
            tm.load_csv(path, "Y")

    def test_non_numeric_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("A,Y\nx,2\n")
        with pytest.raises(DataError, match="non-numeric"):
            tm.load_csv(path, "Y")

    def test_missing_response(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("A,B\n1,2\n")
        with pytest.raises(DataError, match="response"):
            tm.load_csv(path, "Y")


def _orthonormal_basis(X):
    q, _ = np.linalg.qr(X)
    r = np.linalg.matrix_rank(X)
    return q[:, :r]


def spans_equal(X1, X2, tol=1e-8):
    if np.linalg.matrix_rank(X1) != np.linalg.matrix_rank(X2):
        return False
    q1, q2 = _orthonormal_basis(X1), _orthonormal_basis(X2)
    resid = q2 - q1 @ (q1.T @ q2)
    return float(np.abs(resid).max()) < tol


class TestSpanInvariance:
    """Strong-heredity models keep their column space under affine maps of
    the base variables; the {A, A*B} counterexample does not."""

    def setup_method(self):
        rng = np.random.default_rng(99)
        self.raw = {ch: rng.standard_normal(40) for ch in "AB"}
        self.affine = {"A": 2.0 * self.raw["A"] + 1.0,
                       "B": (self.raw["B"] + 1.0) / 3.0}
        self.vs = [continuous("A"), continuous("B")]
        self.ts = TermSet.parse(self.vs, ["A", "B", "A*B"])

    def _design(self, cols, active):
        data = tm.Dataset(np.zeros(40), dict(cols), tuple(self.vs))
        design = build_design(data, self.ts)
        keep = [0] + [j for j in range(1, design.q)
                      if active[design.column_to_node[j]]]
        return design.X[:, keep]

    def test_strong_model_invariant(self):
        X1 = self._design(self.raw, [1, 1, 1])
        X2 = self._design(self.affine, [1, 1, 1])
        assert spans_equal(X1, X2)

    def test_weak_model_not_invariant(self):
        X1 = self._design(self.raw, [1, 0, 1])   # {A, A*B}
        X2 = self._design(self.affine, [1, 0, 1])
        assert not spans_equal(X1, X2)
