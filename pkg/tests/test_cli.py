import json
import os

import numpy as np
import pytest

import slabnet.cli as cli
import slabnet.summaries as sm
from slabnet.cli import (ConfigError, ScenarioSpec, generate_scenario,
                         load_config, main, run_analysis, scenario_termset,
                         write_scenario_csv)


def write_config(tmp_path, data_path, **over):
    cfg = {
        "data": {"path": str(data_path), "response": "Y"},
        "terms": ["A", "B", "C", "A*B", "A*C", "B*C"],
        "prior": {"rule": "strong", "full": 0.5},
        "sampler": {"iterations": 3000, "burn_in": 500, "thin": 5, "seed": 3},
        "output": {"dir": str(tmp_path / "out")},
    }
    for key, val in over.items():
        if isinstance(val, dict):
            cfg.setdefault(key, {}).update(val)
        else:
            cfg[key] = val
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture
def table1_csv(tmp_path):
    data = generate_scenario(ScenarioSpec("table1", sigma_noise=1.0, seed=2))
    path = tmp_path / "t1.csv"
    write_scenario_csv(data, path)
    return path


class TestScenario:
    def test_shared_error_coupling(self):
        lo = generate_scenario(ScenarioSpec("table1", sigma_noise=1.0, seed=4))
        hi = generate_scenario(ScenarioSpec("table1", sigma_noise=3.0, seed=4))
        for name in ("A", "B", "C"):
            assert np.array_equal(lo.predictors[name], hi.predictors[name])
        eps = hi.response - lo.response
        base = lo.response - sum(  # residual from the true mean is 1*eps
            b * c for b, c in zip(
                (1.0, 1.0, 0.0, 1.0, 0.0, 0.0),
                (lo.predictors["A"], lo.predictors["B"], lo.predictors["C"],
                 lo.predictors["A"] * lo.predictors["B"],
                 lo.predictors["A"] * lo.predictors["C"],
                 lo.predictors["B"] * lo.predictors["C"])))
        assert np.allclose(eps, 2.0 * base)

    def test_zero_beta_gives_pure_error(self):
        d = generate_scenario(ScenarioSpec("table1", true_beta=(0.0,) * 6,
                                           sigma_noise=1.0, seed=8))
        d3 = generate_scenario(ScenarioSpec("table1", true_beta=(0.0,) * 6,
                                            sigma_noise=3.0, seed=8))
        assert np.allclose(d3.response, 3.0 * d.response)

    def test_interaction_scenario_node_count(self):
        ts = scenario_termset("table1")
        assert ts.p == 6
        assert ts.labels == ("A", "B", "C", "A*B", "A*C", "B*C")

    def test_grouping_scenario_has_five_levels(self):
        d = generate_scenario(ScenarioSpec("table3", sigma_noise=1.0, seed=0))
        assert d.variable("C").levels == ("c1", "c2", "c3", "c4", "c5")

    def test_unknown_scenario(self):
        with pytest.raises(ValueError):
            generate_scenario(ScenarioSpec("table9"))


class TestLoadConfig:
    def test_minimal_defaults(self, tmp_path, table1_csv):
        path = tmp_path / "min.json"
        path.write_text(json.dumps({
            "data": {"path": str(table1_csv), "response": "Y"},
            "terms": ["A", "B"]}))
        config = load_config(path)
        assert config.resolved["scales"]["tau"] == 0.2
        assert config.resolved["scales"]["c"] == 10.0
        assert config.resolved["sampler"]["thin"] == 1
        assert np.allclose(config.scales.tau, 0.2)
        assert np.allclose(config.scales.c, 10.0)

    def test_unknown_term_variable(self, tmp_path, table1_csv):
        path = write_config(tmp_path, table1_csv, terms=["A", "Z"])
        with pytest.raises(ConfigError, match="unknown variable"):
            load_config(path)

    def test_tau_and_se_multiplier_conflict(self, tmp_path, table1_csv):
        path = write_config(tmp_path, table1_csv,
                            scales={"tau": 0.2, "se_multiplier": 6.0})
        with pytest.raises(ConfigError, match="not both"):
            load_config(path)

    def test_unknown_section_and_field(self, tmp_path, table1_csv):
        path = write_config(tmp_path, table1_csv, bogus={"x": 1})
        with pytest.raises(ConfigError, match="unknown section"):
            load_config(path)
        path2 = write_config(tmp_path, table1_csv, sampler={"iters": 5})
        with pytest.raises(ConfigError, match="unknown field"):
            load_config(path2)

    def test_prior_node_override(self, tmp_path, table1_csv):
        path = write_config(tmp_path, table1_csv, prior={
            "rule": "strong", "full": 0.5,
            "nodes": [{"term": "A*B", "cpt": [0.0, 0.0, 0.0, 0.25]},
                      {"term": "C", "prob": 0.2}]})
        config = load_config(path)
        ab = config.spec.labels.index("A*B")
        assert config.spec.node_priors[ab].table.tolist() == [0, 0, 0, 0.25]
        c = config.spec.labels.index("C")
        assert config.spec.node_priors[c].table.tolist() == [0.2]

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_config(path)


class TestRunAnalysis:
    def test_outputs_and_roundtrip(self, tmp_path, table1_csv):
        config = load_config(write_config(tmp_path, table1_csv,
                                          oracle={"enabled": True}))
        summary = run_analysis(config)
        out = tmp_path / "out"
        for f in ("models.csv", "marginals.csv", "summary.json",
                  "model_matrix.svg", "rss_size.svg",
                  "oracle_models.csv", "oracle_marginals.csv"):
            assert (out / f).exists(), f
        table = sm.read_models_csv(out / "models.csv")
        assert abs(table.posterior.sum() - 1.0) < 1e-9
        marg = sm.read_marginals_csv(out / "marginals.csv")
        assert marg.labels == ("A", "B", "C", "A*B", "A*C", "B*C")
        assert summary["oracle"]["max_marginal_discrepancy"] < 0.1
        echoed = json.loads((out / "summary.json").read_text())["config"]
        assert echoed["sampler"]["seed"] == 3

    def test_rerun_from_echoed_config_identical(self, tmp_path, table1_csv):
        config = load_config(write_config(tmp_path, table1_csv))
        run_analysis(config)
        out = tmp_path / "out"
        first = {f: (out / f).read_bytes() for f in os.listdir(out)}
        echo_path = tmp_path / "echo.json"
        echo_path.write_text(json.dumps(
            json.loads((out / "summary.json").read_text())["config"]))
        run_analysis(load_config(echo_path))
        second = {f: (out / f).read_bytes() for f in os.listdir(out)}
        assert first == second

    def test_multi_chain_outputs(self, tmp_path, table1_csv):
        config = load_config(write_config(tmp_path, table1_csv,
                                          sampler={"chains": 2,
                                                   "iterations": 2000,
                                                   "burn_in": 200}))
        summary = run_analysis(config)
        assert (tmp_path / "out" / "chain_0" / "models.csv").exists()
        assert (tmp_path / "out" / "chain_1" / "models.csv").exists()
        assert summary["between_chain_max_marginal_discrepancy"] is not None
        assert summary["chains"][0]["seed"] == 3
        assert summary["chains"][1]["seed"] == 4

    def test_env_output_override(self, tmp_path, table1_csv, monkeypatch):
        override = tmp_path / "elsewhere"
        monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(override))
        config = load_config(write_config(tmp_path, table1_csv))
        run_analysis(config)
        assert (override / "summary.json").exists()

    def test_prior_echo_shows_conditionals(self, tmp_path, table1_csv):
        config = load_config(write_config(tmp_path, table1_csv, prior={
            "rule": "strong", "full": 0.25}))
        summary = run_analysis(config)
        ab = [n for n in summary["prior_nodes"] if n["term"] == "A*B"][0]
        assert ab["cpt"] == [0.0, 0.0, 0.0, 0.25]
        assert ab["parents"] == ["A", "B"]

    def test_trace_matrix_option(self, tmp_path, table1_csv):
        config = load_config(write_config(tmp_path, table1_csv,
                                          output={"trace_matrix": True,
                                                  "dir": str(tmp_path / "out")}))
        run_analysis(config)
        assert (tmp_path / "out" / "trace_matrix.svg").exists()


class TestMainExitCodes:
    def test_success(self, tmp_path, table1_csv, capsys):
        cfg = write_config(tmp_path, table1_csv)
        assert main(["run", str(cfg)]) == 0

    def test_config_error_is_1(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"terms": ["A"]}))
        assert main(["run", str(cfg)]) == 1
        assert "config error" in capsys.readouterr().err

    def test_runtime_error_is_2(self, tmp_path, table1_csv, capsys):
        # oracle on a support larger than the limit is a runtime failure
        cfg = write_config(tmp_path, table1_csv,
                           oracle={"enabled": True, "p_limit": 2})
        assert main(["oracle", str(cfg)]) == 2

    def test_count_command(self, capsys):
        assert main(["count", "--main-effects", "3", "--rule", "strong"]) == 0
        assert capsys.readouterr().out.strip() == "18"
        assert main(["count", "--main-effects", "3", "--rule", "weak"]) == 0
        assert capsys.readouterr().out.strip() == "45"

    def test_scenario_command(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        assert main(["scenario", "--name", "table3", "--seed", "1",
                     "--sigma", "1", "--out", str(out)]) == 0
        import slabnet.terms as tm
        data = tm.load_csv(out, "Y", categorical=["C"])
        assert data.n == 50

    def test_scenario_csv_roundtrips_exactly(self, tmp_path):
        import slabnet.terms as tm
        d = generate_scenario(ScenarioSpec("table1", sigma_noise=1.0, seed=5))
        path = tmp_path / "x.csv"
        write_scenario_csv(d, path)
        back = tm.load_csv(path, "Y")
        assert np.array_equal(back.response, d.response)
        for name in ("A", "B", "C"):
            assert np.array_equal(back.predictors[name], d.predictors[name])

    def test_oracle_command(self, tmp_path, table1_csv):
        cfg = write_config(tmp_path, table1_csv)
        assert main(["oracle", str(cfg)]) == 0
        assert (tmp_path / "out" / "oracle_models.csv").exists()
