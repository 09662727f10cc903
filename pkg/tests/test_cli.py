"""Command-line surface: smoke runs, determinism, exit codes, manifests."""

import json

import numpy as np
import pytest

from tailvc.cli import main
from tailvc.reportio import read_csv, read_manifest


def run(args):
    return main([str(a) for a in args])


class TestSimulate:
    def test_smoke_and_line_count(self, tmp_path):
        out = tmp_path / "o"
        code = run(["simulate", "--model", "independence", "--n", 100, "--d", 2,
                    "--seed", 1, "--out", out])
        assert code == 0
        lines = (out / "sample.csv").read_text().strip().splitlines()
        assert len(lines) == 101  # header + 100 observations

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["simulate", "--model", "logistic(2)", "--n", 50, "--d", 2,
                        "--seed", 42, "--out", out]) == 0
        assert (a / "sample.csv").read_bytes() == (b / "sample.csv").read_bytes()

    def test_missing_seed_is_usage_error(self, tmp_path, capsys):
        code = run(["simulate", "--model", "independence", "--n", 10, "--d", 2,
                    "--out", tmp_path])
        assert code == 2
        assert "seed" in capsys.readouterr().err

    def test_bad_model_is_usage_error(self, tmp_path):
        code = run(["simulate", "--model", "weibull", "--n", 10, "--d", 2,
                    "--seed", 1, "--out", tmp_path])
        assert code == 2

    def test_manifest_replay_reproduces_outputs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(["simulate", "--model", "comonotone", "--n", 30, "--d", 3,
                    "--seed", 7, "--out", a]) == 0
        manifest = a / "simulate_manifest.json"
        assert run(["simulate", "--config", manifest, "--out", b]) == 0
        assert (a / "sample.csv").read_bytes() == (b / "sample.csv").read_bytes()

    def test_env_var_default_outdir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TAILVC_OUT", str(tmp_path / "envout"))
        assert run(["simulate", "--model", "independence", "--n", 5, "--d", 1,
                    "--seed", 3]) == 0
        assert (tmp_path / "envout" / "sample.csv").exists()


class TestEstimate:
    def test_comonotone_surface_is_lattice_max(self, tmp_path):
        sim, est = tmp_path / "sim", tmp_path / "est"
        run(["simulate", "--model", "comonotone", "--n", 200, "--d", 2,
             "--seed", 11, "--out", sim])
        code = run(["estimate", "--data", sim / "sample.csv", "--k", 10,
                    "--T", 2.0, "--out", est])
        assert code == 0
        header, rows = read_csv(est / "surface.csv")
        assert header == ["x1", "x2", "l_n"]
        k = 10
        for row in rows:
            x1, x2, ln = map(float, row)
            assert ln == pytest.approx(
                max(np.floor(k * x1), np.floor(k * x2)) / k, abs=1e-12
            )

    def test_origin_row_zero_and_monotone_axes(self, tmp_path):
        sim, est = tmp_path / "sim", tmp_path / "est"
        run(["simulate", "--model", "independence", "--n", 300, "--d", 2,
             "--seed", 12, "--out", sim])
        run(["estimate", "--data", sim / "sample.csv", "--k", 15, "--T", 1.5,
             "--out", est])
        _, rows = read_csv(est / "surface.csv")
        vals = {}
        for row in rows:
            x1, x2, ln = map(float, row)
            vals[(round(x1 * 15), round(x2 * 15))] = ln
        assert vals[(0, 0)] == 0.0
        side = max(m for m, _ in vals) + 1
        for m1 in range(side - 1):
            for m2 in range(side):
                assert vals[(m1, m2)] <= vals[(m1 + 1, m2)] + 1e-12
                assert vals[(m2, m1)] <= vals[(m2, m1 + 1)] + 1e-12

    def test_ties_are_data_errors(self, tmp_path, capsys):
        data = tmp_path / "tied.csv"
        data.write_text("x1,x2\n1.0,2.0\n1.0,3.0\n2.0,4.0\n")
        code = run(["estimate", "--data", data, "--k", 1, "--T", 1.0,
                    "--out", tmp_path / "e"])
        assert code == 3
        assert "column 0" in capsys.readouterr().err


class TestConverge:
    def test_tiny_smoke_emits_reports(self, tmp_path):
        import time

        out = tmp_path / "c"
        started = time.time()
        code = run(["converge", "--model", "independence", "--n", 2000, "--d", 2,
                    "--k-schedule", "20,40", "--T", 1.5, "--delta", "0.05",
                    "--trials", 5, "--seed", 21, "--workers", 1, "--out", out])
        assert code == 0
        assert time.time() - started < 10
        header, rows = read_csv(out / "trials.csv")
        assert header == ["trial_id", "n", "k", "d", "T", "delta",
                          "statistic_name", "value"]
        stats = {r[6] for r in rows}
        assert "sup_stdf_deviation" in stats
        assert "order_stat_event" in stats
        _, summary = read_csv(out / "summary.csv")
        assert len(summary) == 2
        manifest = read_manifest(out / "converge_manifest.json")
        assert "slope" in manifest["results"]

    def test_replay_reproduces_reports(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["converge", "--model", "comonotone", "--n", 2000, "--d", 2,
                "--k-schedule", "20,40", "--T", 1.5, "--delta", "0.05",
                "--trials", 3, "--seed", 5]
        assert run(args + ["--out", a]) == 0
        assert run(["converge", "--config", a / "converge_manifest.json",
                    "--out", b]) == 0
        assert (a / "trials.csv").read_bytes() == (b / "trials.csv").read_bytes()
        assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()

    def test_budget_violation_surfaces_verbatim(self, tmp_path, capsys):
        code = run(["converge", "--model", "independence", "--n", 1000, "--d", 2,
                    "--k-schedule", "100", "--T", 15.0, "--delta", "0.05",
                    "--trials", 2, "--seed", 1, "--out", tmp_path])
        assert code == 2
        assert "k T exceeds n" in capsys.readouterr().err


class TestBound:
    def test_stdf_reference_value(self, tmp_path):
        out = tmp_path / "b"
        code = run(["bound", "--kind", "stdf", "--k", 100, "--d", 2, "--T", 4.0,
                    "--delta", "0.05", "--out", out])
        assert code == 0
        _, rows = read_csv(out / "bound.csv")
        assert float(rows[0][1]) == pytest.approx(0.8583864105157389, rel=1e-12)

    def test_stdf_guard_exit_code_and_message(self, tmp_path, capsys):
        code = run(["bound", "--kind", "stdf", "--k", 100, "--d", 1, "--T", 3.0,
                    "--delta", "0.05", "--out", tmp_path])
        assert code == 4
        err = capsys.readouterr().err
        assert "T=3.0" in err and "required >= 3.5" in err

    def test_vc_kinds(self, tmp_path):
        for kind, expected in (
            ("vc", 0.0027473200580362157),
            ("vc-simple", 0.0024477468306808164),
            ("vc-classical", 0.00996046331826512),
        ):
            out = tmp_path / kind
            assert run(["bound", "--kind", kind, "--n", 10_000, "--V", 2,
                        "--p", "0.01", "--delta", "0.05", "--out", out]) == 0
            _, rows = read_csv(out / "bound.csv")
            assert float(rows[0][1]) == pytest.approx(expected, rel=1e-12)

    def test_compare_table(self, tmp_path):
        out = tmp_path / "cmp"
        assert run(["bound", "--kind", "vc-compare", "--n-grid",
                    "100,1000,10000,100000", "--V", 2, "--p", "0.01",
                    "--delta", "0.05", "--out", out]) == 0
        _, rows = read_csv(out / "bound.csv")
        ratios = [float(r[3]) for r in rows]
        assert all(b > a for a, b in zip(ratios, ratios[1:]))

    def test_unknown_kind_is_usage_error(self, tmp_path):
        assert run(["bound", "--kind", "hoeffding", "--delta", "0.05",
                    "--out", tmp_path]) == 2


class TestRademacher:
    def test_smoke_rows(self, tmp_path):
        out = tmp_path / "r"
        code = run(["rademacher", "--model", "uniform", "--n", 500, "--d", 2,
                    "--k", 10, "--T", 2.0, "--statistic", "both", "--trials", 5,
                    "--pairs", 2000, "--seed", 3, "--out", out])
        assert code == 0
        _, rows = read_csv(out / "rademacher.csv")
        stats = {r[6] for r in rows}
        assert {"relative_rademacher_mean", "pair_separation_q",
                "union_mass"} <= stats

    def test_dimension_three_demands_grid(self, tmp_path, capsys):
        code = run(["rademacher", "--model", "uniform", "--n", 100, "--d", 3,
                    "--k", 10, "--T", 1.0, "--trials", 3, "--seed", 1,
                    "--out", tmp_path])
        assert code == 2
        assert "grid" in capsys.readouterr().err


class TestClassify:
    def test_rate_smoke(self, tmp_path):
        out = tmp_path / "cl"
        code = run(["classify", "--mode", "rate", "--alpha", "0.1",
                    "--n-alpha-grid", "50,100", "--trials", 4, "--seed", 9,
                    "--out", out])
        assert code == 0
        manifest = read_manifest(out / "classify_manifest.json")
        assert "slope" in manifest["results"]
        _, rows = read_csv(out / "classify_summary.csv")
        assert len(rows) == 2

    def test_decomposition_smoke(self, tmp_path):
        out = tmp_path / "dc"
        code = run(["classify", "--mode", "decomposition", "--n", 500,
                    "--alpha", "0.1", "--trials", 5, "--seed", 10, "--out", out])
        assert code == 0
        manifest = read_manifest(out / "classify_manifest.json")
        assert manifest["results"]["decomposition_holds"] == 5

    def test_unknown_mode_usage_error(self, tmp_path):
        assert run(["classify", "--mode", "cluster", "--seed", 1,
                    "--out", tmp_path]) == 2

    def test_rate_replay_reproduces_outputs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(["classify", "--mode", "rate", "--alpha", "0.1",
                    "--n-alpha-grid", "50,100", "--trials", 3,
                    "--family-size", 4, "--seed", 13, "--out", a]) == 0
        assert run(["classify", "--config", a / "classify_manifest.json",
                    "--out", b]) == 0
        for name in ("classify_trials.csv", "classify_summary.csv", "family.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestConfigPrecedence:
    def test_flags_win_over_config_file(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"model": "independence", "n": 10, "d": 2,
                                   "seed": 1}))
        out = tmp_path / "o"
        assert run(["simulate", "--config", cfg, "--n", 25, "--out", out]) == 0
        lines = (out / "sample.csv").read_text().strip().splitlines()
        assert len(lines) == 26
