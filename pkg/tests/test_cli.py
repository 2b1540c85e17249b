import json

import numpy as np
import pytest

from dynkin.cli import main
from dynkin.config import (load_config, parse_config, read_value_csv,
                           write_value_csv)
from dynkin.errors import ValidationError


def test_corpus_size_and_contents(corpus):
    assert len(corpus) == 6
    assert set(corpus) == {"ex_4_2", "ex_4_3", "ex_4_4", "ex_5_1", "ex_5_2",
                           "ex_5_4"}


def test_ex_4_3_payoffs_at_zero(ex_4_3):
    assert ex_4_3.payoffs.f(0.0) == 0.0
    assert ex_4_3.payoffs.g(0.0) == -4.0
    assert ex_4_3.payoffs.h(0.0) == 2.0


def test_ex_5_4_payoffs(ex_5_4):
    assert ex_5_4.payoffs.f(0.5) == 2.0
    assert ex_5_4.payoffs.g(0.5) == 3.25


class TestConfig:
    def test_parse_roundtrip(self):
        doc = {
            "diffusion": {"mu": "0", "sigma": "1", "r": 0.1,
                          "alpha": "-inf", "beta": "inf"},
            "payoffs": {"f": "x**2", "g": "x**2 + 10", "h": "x**2 - 5"},
            "grid": {"n": 501, "alpha_num": -4.0, "beta_num": 4.0},
        }
        cfg = parse_config(doc)
        assert cfg.r == 0.1 and cfg.grid_n == 501

    def test_missing_section(self):
        with pytest.raises(ValidationError, match="grid"):
            parse_config({"diffusion": {"mu": "0", "sigma": "1", "r": 0.0},
                          "payoffs": {"f": "0", "g": "0", "h": "0"}})

    def test_bad_number(self):
        with pytest.raises(ValidationError, match="diffusion.r"):
            parse_config({"diffusion": {"mu": "0", "sigma": "1", "r": "soon"},
                          "payoffs": {"f": "0", "g": "0", "h": "0"},
                          "grid": {"n": 11, "alpha_num": 0, "beta_num": 1}})

    def test_malformed_json_diagnostics(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"diffusion": }')
        with pytest.raises(ValidationError, match="line"):
            load_config(path)

    def test_value_csv_bit_roundtrip(self, ex_4_4, tmp_path):
        sol = ex_4_4.solve()
        path = tmp_path / "v.csv"
        write_value_csv(path, sol, ex_4_4.payoffs)
        back = read_value_csv(path)
        assert np.array_equal(back["v"], sol.v)
        assert np.array_equal(back["x"], sol.grid)
        assert np.array_equal(back["in_d1"], sol.d1_mask)


class TestCli:
    def test_solve_mode(self, tmp_path):
        rc = main(["--mode", "solve", "--example", "ex_4_4", "--grid-n", "1001",
                   "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "ex_4_4_value.csv").exists()
        bounds = json.loads((tmp_path / "ex_4_4_boundaries.json").read_text())
        assert len(bounds["d1_boundaries"]) == 2

    def test_strategies_mode(self, tmp_path):
        rc = main(["--mode", "strategies", "--example", "ex_4_3",
                   "--grid-n", "1001", "--out", str(tmp_path)])
        assert rc == 0
        doc = json.loads((tmp_path / "ex_4_3_strategy_player2.json").read_text())
        assert doc["atoms"] == [[2.0, 0.25]]
        assert doc["epsilon"] is None

    def test_simulate_mode(self, tmp_path):
        rc = main(["--mode", "simulate", "--example", "ex_4_2",
                   "--grid-n", "601", "--paths", "400", "--dt", "1e-2",
                   "--out", str(tmp_path)])
        assert rc == 0
        rep = json.loads((tmp_path / "ex_4_2_report.json").read_text())
        assert rep["estimate"] == pytest.approx(1.5, abs=1e-7)
        assert sum(rep["counts"].values()) == 400

    def test_verify_mode(self, tmp_path):
        rc = main(["--mode", "verify", "--example", "ex_5_2",
                   "--grid-n", "2001", "--epsilon", "0.25",
                   "--out", str(tmp_path)])
        assert rc == 0
        doc = json.loads((tmp_path / "ex_5_2_verdict.json").read_text())
        assert doc["sufficient"] is True

    def test_auto_truncation_for_unbounded_domain(self, tmp_path):
        cfg = {
            "diffusion": {"mu": "0", "sigma": "1", "r": 0.2},
            "payoffs": {"f": "x**2", "g": "x**2 + 5", "h": "x**2 - 1"},
            "grid": {"n": 801},
        }
        from dynkin.config import parse_config
        from dynkin.problem import build_problem
        prob = build_problem(parse_config(cfg))
        assert prob.diffusion.lo < -2 and prob.diffusion.hi > 2

    def test_config_file_pipeline(self, tmp_path):
        cfg = {
            "name": "toy",
            "diffusion": {"mu": "0", "sigma": "1", "r": 0.2},
            "payoffs": {"f": "-x**2 - 1", "g": "x**2 + 1", "h": "0"},
            "grid": {"n": 801, "alpha_num": -3.0, "beta_num": 3.0},
        }
        path = tmp_path / "toy.json"
        path.write_text(json.dumps(cfg))
        rc = main(["--mode", "solve", "--config", str(path),
                   "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "toy_value.csv").exists()

    def test_validation_exit_code(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"diffusion": {}}))
        rc = main(["--mode", "solve", "--config", str(path),
                   "--out", str(tmp_path)])
        assert rc == 1

    def test_unknown_example_exit_code(self, tmp_path):
        rc = main(["--mode", "solve", "--example", "nope", "--out", str(tmp_path)])
        assert rc == 1

    def test_examples_mode_filtered(self, tmp_path):
        rc = main(["--mode", "examples", "--example", "ex_5_4",
                   "--out", str(tmp_path)])
        assert rc == 0
        text = (tmp_path / "examples_summary.csv").read_text()
        assert "C8_pure_ne_verdict,ex_5_4,pass" in text
