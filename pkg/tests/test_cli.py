import json

import numpy as np
import pytest

from parmaj import MajorantBreakdown
from parmaj import cli
from parmaj.reporting import format_value, write_csv

FAST = ["--tol-q", "1e-4", "--base-cells", "24", "--max-levels", "8"]


def read_rows(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


class TestCsvContract:
    def test_header_only_for_empty_rows(self, tmp_path):
        path = write_csv([], tmp_path / "empty.csv", columns=["a", "b"])
        assert path.read_text() == "a,b\n"

    def test_formatting(self):
        assert format_value(1234567.0) == "1.23457e+06"
        assert format_value(0.333333333) == "0.333333"
        assert format_value(None) == ""
        assert format_value(float("nan")) == ""
        assert format_value(float("inf")) == "inf"
        assert format_value(True) == "true"

    def test_lf_and_separator(self, tmp_path):
        path = write_csv([{"x": 0.5, "y": 1}], tmp_path / "one.csv")
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert raw == b"x,y\n0.5,1\n"


class TestTablesCommand:
    def test_table2_layout_and_determinism(self, tmp_path):
        out = tmp_path / "t2.csv"
        code = cli.main(["tables", "--which", "2", "--out", str(out),
                         "--no-figures", "--no-optimize"])
        assert code == 0
        rows = read_rows(out)
        assert len(rows) == 6
        for col in ("eps", "lhs_a1", "rhs_a1", "ieff_a1", "lhs_a2", "rhs_a2",
                    "ieff_a2", "lhs_a1_ref", "lhs_a1_dev"):
            assert col in rows[0]
        first = out.read_bytes()
        code = cli.main(["tables", "--which", "2", "--out", str(out),
                         "--no-figures", "--no-optimize"])
        assert code == 0
        assert out.read_bytes() == first

    def test_table3_row_count(self, tmp_path):
        out = tmp_path / "t3.csv"
        code = cli.main(["tables", "--which", "3", "--out", str(out),
                         "--no-figures", "--no-optimize"])
        assert code == 0
        assert len(read_rows(out)) == 4

    def test_table5_absent_cells_are_absent_rows(self, tmp_path):
        out = tmp_path / "t5.csv"
        code = cli.main(["tables", "--which", "5", "--out", str(out),
                         "--no-figures"])
        assert code == 0
        rows = read_rows(out)
        assert len(rows) == 6
        keys = {(r["family"], float(r["delta"])) for r in rows}
        assert ("v_eps", 0.5) not in keys
        assert ("w_delta", 0.1) not in keys

    def test_figures_rendered(self, tmp_path):
        out = tmp_path / "t1.csv"
        code = cli.main(["tables", "--which", "1", "--out", str(out)])
        assert code == 0
        assert (tmp_path / "t1_fig.png").exists()

    def test_unknown_table_is_config_error(self, tmp_path):
        assert cli.main(["tables", "--which", "9", "--out",
                         str(tmp_path / "x.csv"), "--no-figures"]) == 1


class TestMajorantCommand:
    def test_exact_approximation_all_zero(self, tmp_path, capsys):
        out = tmp_path / "m.csv"
        code = cli.main(["majorant", "--family", "v_eps", "--eps", "0",
                         "--tau", "exact", "--alpha", "1", "--out", str(out),
                         "--no-figures"])
        assert code == 0
        row = read_rows(out)[0]
        assert float(row["lhs"]) < 1e-10
        assert float(row["rhs"]) < 1e-10

    def test_reference_row(self, tmp_path):
        out = tmp_path / "m.csv"
        code = cli.main(["majorant", "--family", "v_eps", "--eps", "0.35",
                         "--tau", "exact", "--alpha", "2", "--out", str(out),
                         "--no-figures"])
        assert code == 0
        row = read_rows(out)[0]
        assert float(row["lhs"]) == pytest.approx(1.69, rel=0.02)
        assert float(row["rhs"]) == pytest.approx(3.95, rel=0.02)
        assert float(row["i_eff"]) == pytest.approx(1.529, rel=0.02)

    def test_missing_parameter_is_config_error(self):
        assert cli.main(["majorant", "--family", "v_eps", "--tau", "exact",
                         "--no-figures"]) == 1

    def test_out_of_range_parameter_is_config_error(self):
        assert cli.main(["majorant", "--family", "v_eps", "--eps", "0.9",
                         "--tau", "exact", "--no-figures"]) == 1

    def test_unknown_flag_is_config_error(self):
        assert cli.main(["majorant", "--family", "v_eps", "--eps", "0.1",
                         "--bogus"]) == 1

    def test_guarantee_violation_exit_code(self, tmp_path, monkeypatch):
        # force a broken bound to exercise the loud-failure contract
        def fake_majorant(v, tau, data, alpha, classifier, cfg):
            return MajorantBreakdown(e0_sq=0.0, flux_gap=0.0, residual_norm=0.0,
                                     alpha=alpha, C_F=data.C_F, total=0.0)

        monkeypatch.setattr(cli, "majorant", fake_majorant)
        code = cli.main(["majorant", "--family", "v_eps", "--eps", "0.5",
                         "--tau", "exact", "--no-figures",
                         "--out", str(tmp_path / "m.csv")] + FAST)
        assert code == 2


class TestOtherCommands:
    def test_coarsen_constant_mode(self, tmp_path):
        out = tmp_path / "c.csv"
        code = cli.main(["coarsen", "--mode", "constant", "--shift", "1.0",
                         "--out", str(out), "--no-figures"] + FAST)
        assert code == 0
        row = read_rows(out)[0]
        assert row["sharp_bound"] == ""
        assert float(row["coarse_bound"]) == pytest.approx(
            (2 / np.pi) ** 2, rel=1e-2)

    def test_coarsen_indicator_mode(self, tmp_path):
        out = tmp_path / "ci.csv"
        code = cli.main(["coarsen", "--mode", "indicator", "--shift", "1.0",
                         "--out", str(out), "--no-figures"] + FAST)
        assert code == 0
        row = read_rows(out)[0]
        assert float(row["sharp_bound"]) < 1e-8
        assert float(row["coarse_bound"]) > 0.05

    def test_signorini(self, tmp_path):
        out = tmp_path / "s.csv"
        code = cli.main(["signorini", "--perturb", "0.5", "--out", str(out),
                         "--no-figures"] + FAST)
        assert code == 0
        row = read_rows(out)[0]
        assert float(row["rhs"]) >= float(row["lhs"])

    def test_solve(self, tmp_path):
        out = tmp_path / "solve.csv"
        code = cli.main(["solve", "--steps", "4", "--nodes", "41",
                         "--out", str(out), "--no-figures"] + FAST)
        assert code == 0
        rows = read_rows(out)
        assert len(rows) == 5
        assert all(float(r["min_gap"]) >= -1e-12 for r in rows)

    def test_increment_exact_traces(self, tmp_path):
        out = tmp_path / "inc.csv"
        code = cli.main(["increment", "--steps", "4", "--nodes", "81",
                         "--source", "exact", "--majorant", "simple",
                         "--out", str(out), "--no-figures"] + FAST)
        assert code == 0
        row = read_rows(out)[0]
        assert float(row["majorant"]) >= float(row["true_error"])

    def test_config_file_defaults(self, tmp_path):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({"tol_q": 1e-3, "base_cells": 16,
                                        "figures": False}))
        out = tmp_path / "m.csv"
        code = cli.main(["--config", str(cfg_file), "majorant", "--family",
                         "v_eps", "--eps", "0.25", "--tau", "exact",
                         "--out", str(out)])
        assert code == 0
        assert not (tmp_path / "m_profiles.png").exists()
        # flags still override the file
        code = cli.main(["--config", str(cfg_file), "majorant", "--family",
                         "v_eps", "--eps", "0.25", "--tau", "exact",
                         "--out", str(out), "--figures"])
        assert code == 0
        assert (tmp_path / "m_profiles.png").exists()

    def test_bad_config_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("not json")
        assert cli.main(["--config", str(bad), "solve", "--steps", "2",
                         "--nodes", "11", "--no-figures"]) == 1
