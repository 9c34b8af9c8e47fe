import io
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from densemimo import cli
from densemimo.exceptions import ConfigError, NumericalFailure
from densemimo.harness import (
    CSV_COLUMNS,
    SweepConfig,
    SweepRow,
    emit_csv,
    oracle_tolerance,
    read_csv,
    run_downlink_sweep,
    run_uplink_sweep,
    validate_model,
)

DATA = Path(__file__).parent / "data"
HEADER = "scenario,variant,M,a_over_lambda,mean_rate,stderr,alpha,sigma_d2,p_r_ratio,leakage"
SMALL = SweepConfig(element_counts=(25, 49), realizations=3, seed=7)


def csv_text(rows):
    buf = io.StringIO()
    emit_csv(rows, buf)
    return buf.getvalue()


class TestConfig:
    def test_defaults_valid(self):
        cfg = SweepConfig().validate()
        assert cfg.element_counts == (25, 49, 100, 196, 400)
        assert cfg.users == 2 and cfg.snr == 2.0 and cfg.noise_figure == 2.0
        assert cfg.realizations == 100 and cfg.dither_ratio == pytest.approx(1 / 3)

    @pytest.mark.parametrize("change,needle", [
        (dict(element_counts=(25, 50)), "square"),
        (dict(users=30, element_counts=(25,)), "users"),
        (dict(noise_figure=0.5), "noise figure"),
        (dict(delta=0.0), "delta"),
        (dict(delta=-1.0), "delta"),
        (dict(realizations=0), "realization"),
        (dict(workers=0), "worker"),
        (dict(element_counts=()), "element"),
    ])
    def test_rejects(self, change, needle):
        with pytest.raises(ConfigError, match=f"(?i){needle}"):
            replace(SweepConfig(), **change).validate()


class TestCsv:
    def test_header_only_for_no_rows(self, tmp_path):
        path = tmp_path / "empty.csv"
        emit_csv([], path)
        assert path.read_text() == HEADER + "\n"
        assert ",".join(CSV_COLUMNS) == HEADER

    def test_round_trip(self, tmp_path):
        rows = [SweepRow("downlink", "onebit_exact", 100, 0.25, 3.123456789, 0.0123456789,
                         alpha=1.1, sigma_d2=5.333333333, p_r_ratio=0.3, leakage=1e-4),
                SweepRow("uplink", "ideal", 25, 0.5, 4.5, 0.1)]
        path = tmp_path / "rows.csv"
        emit_csv(rows, path)
        back = read_csv(path)
        assert csv_text(back) == path.read_text()
        assert back[0].mean_rate == pytest.approx(rows[0].mean_rate, rel=5e-9)
        assert back[1] == rows[1]

    def test_nine_significant_digits(self):
        text = csv_text([SweepRow("uplink", "ideal", 25, 0.5, 1 / 3, 2 / 3)])
        assert "0.333333333,0.666666667,,,," in text

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OSError, match="missing"):
            emit_csv([], tmp_path / "missing" / "x.csv")


class TestSweeps:
    def test_uplink_shape(self):
        rows = run_uplink_sweep(SMALL)
        assert [(r.M, r.variant) for r in rows] == [
            (M, v) for M in (25, 49) for v in ("ideal", "onebit_exact", "onebit_uqn")]
        assert all(r.mean_rate >= 0 and r.stderr >= 0 for r in rows)

    def test_downlink_shape(self):
        rows = run_downlink_sweep(SMALL)
        variants = [r.variant for r in rows if r.M == 25]
        assert variants == ["ideal", "onebit_exact", "onebit_exact_noleak", "onebit_uqn", "onebit_nodither"]

    def test_downlink_without_dither(self):
        rows = run_downlink_sweep(replace(SMALL, dither=False))
        assert {r.variant for r in rows} == {"ideal", "onebit_nodither"}

    def test_nodither_matches_dithered_sweep(self):
        a = [r for r in run_downlink_sweep(SMALL) if r.variant == "onebit_nodither"]
        b = [r for r in run_downlink_sweep(replace(SMALL, dither=False)) if r.variant == "onebit_nodither"]
        assert a == b

    @pytest.mark.parametrize("scenario", ["uplink", "downlink"])
    def test_golden(self, scenario):
        sweep = run_uplink_sweep if scenario == "uplink" else run_downlink_sweep
        assert csv_text(sweep(SMALL)) == (DATA / f"golden_{scenario}.csv").read_text()

    def test_deterministic(self):
        assert csv_text(run_uplink_sweep(SMALL)) == csv_text(run_uplink_sweep(SMALL))

    def test_worker_count_invariant(self):
        serial = csv_text(run_downlink_sweep(SMALL))
        parallel = csv_text(run_downlink_sweep(replace(SMALL, workers=2)))
        assert serial == parallel

    def test_seed_changes_output(self):
        assert csv_text(run_uplink_sweep(SMALL)) != csv_text(run_uplink_sweep(replace(SMALL, seed=8)))


class TestValidation:
    def test_tolerance_schedule(self):
        assert oracle_tolerance(512) == oracle_tolerance(256) == 1e-6
        assert oracle_tolerance(16) > oracle_tolerance(32)
        assert oracle_tolerance(8) > oracle_tolerance(16)

    def test_default_passes(self):
        report = validate_model(SweepConfig(element_counts=(25, 100)), mc_samples=50_000)
        assert report.passed, str(report)

    def test_fault_injection_reports_passivity(self):
        report = validate_model(SweepConfig(element_counts=(25, 100)), coupling_scale=1.01, mc_samples=50_000)
        names = {c.name for c in report.failures()}
        assert "passivity" in names
        assert "[FAIL] passivity" in str(report)

    def test_coarse_grid_uses_relaxed_tolerance(self):
        report = validate_model(SweepConfig(element_counts=(25,), quad_points=(8, 16)), mc_samples=20_000)
        oracle = next(c for c in report.checks if c.name == "oracle_equivalence")
        assert oracle.passed and "0.01" in oracle.expected


class TestCli:
    def test_uplink_to_stdout(self, capsys):
        rc = cli.main(["uplink", "--elements", "25,49", "--realizations", "3", "--seed", "7"])
        assert rc == 0
        assert capsys.readouterr().out == (DATA / "golden_uplink.csv").read_text()

    def test_downlink_to_file(self, tmp_path):
        out = tmp_path / "dl.csv"
        rc = cli.main(["downlink", "--elements", "25,49", "--realizations", "3", "--seed", "7",
                       "--workers", "2", "--out", str(out)])
        assert rc == 0
        assert out.read_text() == (DATA / "golden_downlink.csv").read_text()

    @pytest.mark.parametrize("argv", [["uplink", "--elements", "24"], ["downlink", "--users", "0"],
                                      ["uplink", "--noise-figure", "0.9"], ["validate", "--delta", "0"]])
    def test_config_error(self, argv, capsys):
        assert cli.main(argv) == cli.EXIT_CONFIG
        assert "configuration error" in capsys.readouterr().err

    def test_unwritable_output(self, tmp_path, capsys):
        rc = cli.main(["uplink", "--elements", "25", "--realizations", "2",
                       "--out", str(tmp_path / "nope" / "x.csv")])
        assert rc == cli.EXIT_CONFIG

    def test_numerical_failure(self, monkeypatch, capsys):
        def boom(cfg):
            raise NumericalFailure("every realization failed")

        monkeypatch.setattr(cli, "run_uplink_sweep", boom)
        assert cli.main(["uplink", "--elements", "25"]) == cli.EXIT_NUMERICAL
        assert "numerical failure" in capsys.readouterr().err

    def test_validate_fault_injection_exit_code(self, capsys):
        rc = cli.main(["validate", "--elements", "25,49", "--inject-coupling-scale", "1.01"])
        assert rc == cli.EXIT_PROPERTY
        assert "[FAIL] passivity" in capsys.readouterr().out

    def test_validate_ok(self, capsys):
        assert cli.main(["validate", "--elements", "25,49"]) == cli.EXIT_OK

    def test_quad_points_parsing(self):
        assert cli._quad("64") == (64, 128)
        assert cli._quad("64x100") == (64, 100)

    def test_module_entry(self):
        import subprocess
        import sys
        proc = subprocess.run([sys.executable, "-m", "densemimo", "uplink", "--elements", "24"],
                              capture_output=True, text=True)
        assert proc.returncode == 1
