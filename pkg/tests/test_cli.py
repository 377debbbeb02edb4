import csv
import json

import numpy as np
import pytest

from dfflow.cli import load_config_file, main
from dfflow.run import CSV_COLUMNS, ExperimentConfig, run_experiment

TINY_2D = [
    "--nx", "12", "--ny", "12", "--nb", "8", "--test-2d", "21",
]


def _read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestSolveCommand:
    def test_stokes_solve_writes_csv_and_json(self, tmp_path):
        out = tmp_path / "res.csv"
        code = main(
            ["solve", "stokes2d", "--nu", "1e-2", "--m", "80,120", "--seed", "7",
             "--out", str(out)] + TINY_2D
        )
        assert code == 0
        rows = _read_rows(out)
        assert [set(r) == set(CSV_COLUMNS) for r in rows]
        assert len(rows) == 2
        assert [int(r["m"]) for r in rows] == [80, 120]
        for r in rows:
            assert float(r["error_div"]) <= 1e-10
            assert float(r["error_u"]) < 1.0
            assert int(r["rows"]) == 12 * 12 + 2 * 4 * 8
            assert int(r["cols"]) == int(r["m"]) + 1
        summary = json.loads((tmp_path / "res.json").read_text())
        assert len(summary["rows"]) == 2

    def test_numeric_determinism(self, tmp_path):
        args = ["solve", "stokes2d", "--nu", "1e-2", "--m", "60", "--seed", "3"] + TINY_2D
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        rows1, rows2 = _read_rows(out1), _read_rows(out2)
        skip = {c for c in CSV_COLUMNS if c.endswith("_seconds")}
        for r1, r2 in zip(rows1, rows2):
            for col in CSV_COLUMNS:
                if col not in skip:
                    assert r1[col] == r2[col], col

    def test_nonlinear_solve_converges(self, tmp_path):
        # strongly viscous: the convection correction is tiny, so the sweep
        # settles in a couple of iterations even on a coarse basis
        out = tmp_path / "ns.csv"
        code = main(
            ["solve", "ns2d", "--nu", "10.0", "--m", "60", "--seed", "1",
             "--warmup", "0", "--max-iters", "10", "--update-tol", "1e-4",
             "--out", str(out)] + TINY_2D
        )
        assert code == 0
        (row,) = _read_rows(out)
        assert row["status"] == "converged"
        assert int(row["iters"]) <= 10
        assert float(row["error_div"]) <= 1e-10

    def test_unknown_case_exits_1(self, tmp_path, capsys):
        code = main(["solve", "backward-step", "--out", str(tmp_path / "x.csv")])
        assert code == 1
        assert "unknown case" in capsys.readouterr().err

    def test_missing_case_exits_1(self, tmp_path, capsys):
        code = main(["solve", "--out", str(tmp_path / "x.csv")])
        assert code == 1

    def test_coupled_method(self, tmp_path):
        out = tmp_path / "coupled.csv"
        code = main(
            ["solve", "stokes2d", "--nu", "1e-2", "--m", "60", "--method", "both",
             "--out", str(out)] + TINY_2D
        )
        assert code == 0
        rows = _read_rows(out)
        assert {r["method"] for r in rows} == {"decoupled", "coupled"}
        by_method = {r["method"]: float(r["error_div"]) for r in rows}
        assert by_method["decoupled"] < by_method["coupled"]

    def test_dump_system(self, tmp_path):
        dump_dir = tmp_path / "systems"
        out = tmp_path / "r.csv"
        code = main(
            ["solve", "stokes2d", "--nu", "1e-2", "--m", "40",
             "--dump-system", str(dump_dir), "--out", str(out)] + TINY_2D
        )
        assert code == 0
        dumps = list(dump_dir.glob("*.npz"))
        assert len(dumps) == 1
        data = np.load(dumps[0])
        assert data["matrix"].shape == (12 * 12 + 2 * 4 * 8, 41)


class TestSweepCommand:
    def test_idempotent_rerun(self, tmp_path):
        out = tmp_path / "sweep.csv"
        args = ["sweep", "stokes2d", "--nu", "1e-2,1e-3", "--m", "50",
                "--out", str(out)] + TINY_2D
        assert main(args) == 0
        first = out.read_text()
        assert main(args) == 0
        assert out.read_text() == first  # completed cells skipped

    def test_product_guard(self, tmp_path, capsys):
        ms = ",".join(str(m) for m in range(10, 10 + 300))
        code = main(
            ["sweep", "stokes2d", "--m", ms, "--out", str(tmp_path / "g.csv")]
        )
        assert code == 1
        assert "guard" in capsys.readouterr().err

    def test_solve_reruns_overwrite(self, tmp_path):
        out = tmp_path / "res.csv"
        args = ["solve", "stokes2d", "--nu", "1e-2", "--m", "50",
                "--out", str(out)] + TINY_2D
        assert main(args) == 0
        assert main(args) == 0
        assert len(_read_rows(out)) == 1


class TestConfigFile:
    def test_round_trip(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# tiny smoke configuration\n"
            "case = stokes2d\n"
            "nu = 1e-2\n"
            "m = 40\n"
            "nx = 12\nny = 12\nnb = 8\ntest-2d = 21\n"
        )
        out = tmp_path / "cfg.csv"
        code = main(["solve", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        (row,) = _read_rows(out)
        assert int(row["m"]) == 40

    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("case = stokes2d\nnu = 1e-2\nm = 40\n")
        out = tmp_path / "over.csv"
        code = main(
            ["solve", "--config", str(cfg), "--m", "30", "--out", str(out)] + TINY_2D
        )
        assert code == 0
        (row,) = _read_rows(out)
        assert int(row["m"]) == 30

    def test_malformed_config_exits_1(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("case stokes2d\n")
        assert main(["solve", "--config", str(cfg)]) == 1
        assert "key=value" in capsys.readouterr().err

    def test_parse_helper(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("a = 1\n# comment\nb-c = x  # trailing\n")
        assert load_config_file(cfg) == {"a": "1", "b_c": "x"}


class TestOtherCommands:
    def test_identity_check_2d(self, capsys):
        code = main(["identity-check", "--dim", "2", "--seeds", "2",
                     "--points", "40", "--m", "25"])
        assert code == 0
        assert "max relative discrepancy" in capsys.readouterr().out

    def test_identity_check_fails_on_tight_tol(self):
        code = main(["identity-check", "--dim", "2", "--seeds", "1",
                     "--points", "40", "--m", "25", "--tol", "1e-18"])
        assert code == 1

    def test_dims_table(self, capsys):
        code = main(["dims", "--dim", "2", "--interior", "2500",
                     "--boundary", "200", "--m", "1000"])
        assert code == 0
        out = capsys.readouterr().out
        assert "2900" in out and "1001" in out and "7901" in out


class TestSweepExtras:
    def test_gamma_sweep_rows(self, tmp_path):
        out = tmp_path / "gamma.csv"
        code = main(
            ["sweep", "stokes2d", "--nu", "1e-2", "--m", "40",
             "--gamma", "1.5,2.5", "--out", str(out)] + TINY_2D
        )
        assert code == 0
        rows = _read_rows(out)
        assert sorted(float(r["gamma"]) for r in rows) == [1.5, 2.5]

    def test_parallel_workers(self, tmp_path):
        out = tmp_path / "par.csv"
        code = main(
            ["sweep", "stokes2d", "--nu", "1e-2,2e-2", "--m", "40,60",
             "--workers", "2", "--out", str(out)] + TINY_2D
        )
        assert code == 0
        assert len(_read_rows(out)) == 4

    def test_row_dims_match_cost_formulas(self, tmp_path):
        from dfflow.metrics import expected_dimensions

        out = tmp_path / "dims.csv"
        assert main(
            ["solve", "stokes2d", "--nu", "1e-2", "--m", "50",
             "--method", "both", "--out", str(out)] + TINY_2D
        ) == 0
        for row in _read_rows(out):
            dims = expected_dimensions(
                2, int(row["n_interior"]), int(row["n_boundary"]),
                int(row["m"]), row["method"],
            )
            if row["method"] == "decoupled":
                assert (int(row["rows"]), int(row["cols"])) == dims["velocity"]
                assert (
                    int(row["pressure_rows"]), int(row["pressure_cols"])
                ) == dims["pressure"]
            else:
                assert (int(row["rows"]), int(row["cols"])) == dims["coupled"]


class TestRunModule:
    def test_coupled_nonlinear_rejected(self, tmp_path):
        config = ExperimentConfig(
            case="ns2d", ms=[40], method="coupled", out=str(tmp_path / "x.csv"),
            nx=10, ny=10, nb=6, n_test_2d=11,
        )
        with pytest.raises(ValueError, match="Stokes"):
            run_experiment(config)

    def test_cell_keys_echo_parameters(self, tmp_path):
        config = ExperimentConfig(
            case="stokes2d", nus=[1e-2], ms=[30], seeds=[4, 5],
            out=str(tmp_path / "e.csv"), nx=10, ny=10, nb=6, n_test_2d=11,
        )
        assert run_experiment(config) == 0
        rows = _read_rows(tmp_path / "e.csv")
        assert [int(r["seed"]) for r in rows] == [4, 5]
        assert all(r["case"] == "stokes2d-kovasznay" for r in rows)
