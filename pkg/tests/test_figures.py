import re

import numpy as np
import pytest

import slabnet.summaries as sm
import slabnet.terms as tm
from slabnet.figures import (render_model_matrix, render_rss_size,
                             render_trace_matrix)
from conftest import synthetic_dataset, two_way_termset


def make_table(probs, patterns=None, labels=None, p=3):
    probs = np.asarray(probs, dtype=float)
    if patterns is None:
        rng = np.random.default_rng(0)
        patterns = rng.integers(0, 2, size=(len(probs), p)).astype(np.uint8)
    return sm.ModelTable(np.asarray(patterns, dtype=np.uint8), probs,
                         labels=labels)


def cell_heights(svg):
    return [float(h) for h in re.findall(r'class="cell" [^/]*height="([0-9.]+)"', svg)]


class TestModelMatrix:
    def test_byte_deterministic(self):
        t = make_table([0.5, 0.3, 0.2])
        assert render_model_matrix(t) == render_model_matrix(t)

    def test_cell_count(self, rng):
        p = 5
        t = make_table(rng.dirichlet(np.ones(12)), p=p)
        svg = render_model_matrix(t, top_n=7)
        assert svg.count('class="cell"') == 7 * p

    def test_heights_proportional(self):
        t = make_table([0.3, 0.2, 0.1],
                       patterns=[[1, 0, 0], [0, 1, 0], [0, 0, 1]])
        svg = render_model_matrix(t, plot_height=600.0)
        hs = sorted(set(cell_heights(svg)), reverse=True)
        assert len(hs) == 3
        assert abs(hs[0] / hs[1] - 3.0 / 2.0) < 0.01
        assert abs(hs[1] / hs[2] - 2.0) < 0.01

    def test_single_model_full_height(self):
        t = make_table([1.0], patterns=[[1, 1, 0]])
        svg = render_model_matrix(t, plot_height=300.0)
        assert set(cell_heights(svg)) == {300.0}

    def test_separator_lines_for_top_models(self):
        t = make_table(np.full(20, 0.05))
        svg = render_model_matrix(t, top_n=20, separators=10)
        # 10 separators plus two axis lines from the frame rect (frame is a
        # rect, so only the separators are line elements)
        assert svg.count("<line") == 10

    def test_labels_present(self):
        t = make_table([0.6, 0.4], labels=("A", "B", "A*B"))
        svg = render_model_matrix(t)
        assert ">A*B</text>" in svg

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            render_model_matrix(make_table([]))


class TestTraceMatrix:
    def test_rows_in_sampling_order_equal_heights(self, rng):
        samples = rng.integers(0, 2, size=(50, 4))
        svg = render_trace_matrix(samples)
        hs = set(cell_heights(svg))
        assert len(hs) == 1

    def test_long_chains_strided(self, rng):
        samples = rng.integers(0, 2, size=(5000, 3))
        svg = render_trace_matrix(samples, max_rows=100)
        assert svg.count('class="cell"') <= 100 * 3 * 2


class TestRssSize:
    def _table_with_fit(self, seed=0):
        ts = two_way_termset()
        data = synthetic_dataset(np.random.default_rng(seed), beta={"A": 2.0})
        design = tm.build_design(data, ts)
        pats = np.zeros((3, 6), dtype=np.uint8)
        pats[1, 0] = 1
        pats[2, :2] = 1
        t = sm.ModelTable(pats, np.array([0.5, 0.3, 0.2]), labels=ts.labels)
        sm.attach_fit(t, design, data.response)
        return t, design, data

    def test_byte_deterministic(self):
        t, design, data = self._table_with_fit()
        a = render_rss_size(t, design, data.response, top_k=3)
        assert a == render_rss_size(t, design, data.response, top_k=3)

    def test_point_count_and_empty_model_at_tss(self):
        t, design, data = self._table_with_fit()
        svg = render_rss_size(t, design, data.response, top_k=3)
        assert svg.count('class="pt"') == 3
        y = data.response
        tss = float(np.sum((y - y.mean()) ** 2))
        # row 0 is the empty model: its rss equals the total sum of squares
        assert abs(t.rss[0] - tss) < 1e-9

    def test_overlay_polyline(self):
        t, design, data = self._table_with_fit()
        svg = render_rss_size(t, design, data.response, top_k=3,
                              overlay=[(0, 100.0), (1, 50.0), (2, 25.0)])
        assert svg.count('class="overlay"') == 1
