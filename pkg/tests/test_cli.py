"""End-to-end CLI tests on a deliberately small scenario.

Five channels over two short spans keep every invocation around a second;
the shipped full-size configs are exercised by the acceptance suite, not
here.  Runs go through main() in-process so exit codes and output files
can be asserted directly; one subprocess test proves the module entry
point works outside the test process.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from ramanlink.budget import read_csv_columns
from ramanlink.cli import main, resolve_config_path

TINY = {
    "grid": {
        "center_wavelength_nm": 1550.0,
        "n_channels": 5,
        "symbol_rate_ghz": 100.0,
        "total_power_dbm": 5.0,
    },
    "fibre": {
        "span_length_km": 20.0,
        "dispersion_ps_nm_km": 21.0,
        "dispersion_slope_ps_nm2_km": 0.067,
        "gamma_per_w_km": 0.55,
        "effective_area_um2": 150.0,
    },
    "pumps": [],
    "amplifier": {
        "temperature_k": 300.0,
        "bands": [{"name": "C+", "min_wavelength_nm": 1520.0, "max_wavelength_nm": 1580.0, "noise_figure_db": 5.0}],
    },
    "n_spans": 2,
    "nli": {"quadrature_points_per_axis": 32},
}


def _write_cfg(directory, name, **overrides):
    data = json.loads(json.dumps(TINY))
    for key, value in overrides.items():
        data[key] = value
    path = directory / name
    path.write_text(json.dumps(data, indent=1))
    return path


@pytest.fixture(scope="module")
def cfgs(tmp_path_factory):
    d = tmp_path_factory.mktemp("cfg")
    return {
        "plain": _write_cfg(d, "tiny.cfg"),
        "pumped": _write_cfg(d, "tiny_pumped.cfg", pumps=[{"wavelength_nm": 1470.0, "power_mw": 150.0}]),
        "optimize": _write_cfg(
            d,
            "tiny_opt.cfg",
            optimizer={
                "encoding": "powers-only",
                # the encoding pins six pump slots; a low cap keeps the
                # boundary-value solves cheap for this smoke problem
                "pump_wavelengths_nm": [1470.0, 1480.0, 1490.0, 1500.0, 1510.0, 1520.0],
                "launch_power_bounds_dbm": [0.0, 10.0],
                "pump_power_cap_mw": 20.0,
                "n_particles": 3,
                "max_iterations": 2,
            },
        ),
        "narrow": _write_cfg(d, "tiny_narrow.cfg", grid={**TINY["grid"], "n_channels": 3}),
        "over_cap": _write_cfg(d, "tiny_cap.cfg", pumps=[{"wavelength_nm": 1470.0, "power_mw": 600.0}]),
        "stiff": _write_cfg(
            d,
            "tiny_stiff.cfg",
            pumps=[{"wavelength_nm": 1470.0, "power_mw": 400.0}],
            solver={"bvp_max_iterations": 1},
        ),
        "dir": d,
    }


class TestConfigResolution:
    def test_existing_path_wins(self, cfgs):
        assert resolve_config_path(str(cfgs["plain"])) == cfgs["plain"]

    @pytest.mark.parametrize("name", ["paper_hybrid.cfg", "paper_lumped.cfg", "paper_pso.cfg"])
    def test_shipped_names_resolve(self, name):
        path = resolve_config_path(name)
        assert path is not None and path.exists()

    def test_unknown_name_is_a_usage_error(self, tmp_path):
        assert resolve_config_path("no_such_file.cfg") is None
        with pytest.raises(SystemExit) as excinfo:
            main(["simulate", "--config", "no_such_file.cfg", "--out", str(tmp_path / "o")])
        assert excinfo.value.code == 2


class TestSimulate:
    def test_report_files_and_summary(self, cfgs, tmp_path, capsys):
        out = tmp_path / "report"
        code = main(["simulate", "--config", str(cfgs["plain"]), "--out", str(out), "--fidelity", "reference"])
        assert code == 0
        assert "Tbit/s" in capsys.readouterr().out
        for name in ("snr_per_channel.csv", "gain_spectrum.csv", "summary.json", "manifest.json"):
            assert (out / name).exists()

        summary = json.loads((out / "summary.json").read_text())
        assert summary["n_channels"] == 5
        assert summary["n_spans"] == 2
        assert summary["throughput_tbps"] > 0
        assert summary["pumps"] == []

        cols = read_csv_columns(out / "snr_per_channel.csv")
        assert len(cols["wavelength_nm"]) == 5
        # total is below both constituents in dB
        assert np.all(cols["snr_total_db"] < cols["snr_nli_db"])
        assert np.all(cols["snr_total_db"] < cols["snr_ase_db"])

    def test_gain_spectrum_lumped_case(self, cfgs, tmp_path):
        out = tmp_path / "report"
        assert main(["simulate", "--config", str(cfgs["plain"]), "--out", str(out), "--fidelity", "fast"]) == 0
        cols = read_csv_columns(out / "gain_spectrum.csv")
        # no pumps: on-off gain vanishes and the EDFA supplies the whole span
        np.testing.assert_allclose(cols["raman_on_off_gain_db"], 0.0, atol=1e-6)
        assert np.all(cols["edfa_gain_db"] > 0)
        np.testing.assert_allclose(
            cols["total_gain_db"], cols["raman_on_off_gain_db"] + cols["edfa_gain_db"], atol=2e-6
        )

    def test_optional_trace_files(self, cfgs, tmp_path):
        out = tmp_path / "report"
        code = main(
            [
                "simulate",
                "--config",
                str(cfgs["pumped"]),
                "--out",
                str(out),
                "--fidelity",
                "fast",
                "--trace-power-evolution",
                "--nli-breakdown",
            ]
        )
        assert code == 0
        header = (out / "power_evolution.csv").read_text().splitlines()[0].split(",")
        assert header[0] == "z_km"
        assert sum(h.startswith("channel_") for h in header) == 5
        assert sum(h.startswith("pump_") for h in header) == 1
        cols = read_csv_columns(out / "nli_breakdown.csv")
        assert len(cols["snr_nli_db"]) == 5

    def test_pumped_span_shows_on_off_gain(self, cfgs, tmp_path):
        out = tmp_path / "report"
        assert main(["simulate", "--config", str(cfgs["pumped"]), "--out", str(out), "--fidelity", "fast"]) == 0
        cols = read_csv_columns(out / "gain_spectrum.csv")
        assert np.all(cols["raman_on_off_gain_db"] > 0.1)

    def test_manifest_records_the_run(self, cfgs, tmp_path):
        out = tmp_path / "report"
        main(["simulate", "--config", str(cfgs["plain"]), "--out", str(out), "--fidelity", "fast", "--seed", "11", "--threads", "2"])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["seed"] == 11
        assert manifest["fidelity"] == "fast"
        assert manifest["threads"] == 2
        assert manifest["config_path"].endswith("tiny.cfg")
        assert manifest["tool_version"]

    def test_module_entry_point(self, cfgs, tmp_path):
        out = tmp_path / "report"
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "ramanlink.cli",
                "simulate",
                "--config",
                str(cfgs["plain"]),
                "--out",
                str(out),
                "--fidelity",
                "fast",
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (out / "summary.json").exists()


class TestOptimize:
    def test_same_seed_same_trace(self, cfgs, tmp_path):
        outs = []
        for label in ("a", "b"):
            out = tmp_path / label
            code = main(["optimize", "--config", str(cfgs["optimize"]), "--out", str(out), "--seed", "7", "--threads", "1"])
            assert code == 0
            outs.append(out)
        assert (outs[0] / "trace.csv").read_bytes() == (outs[1] / "trace.csv").read_bytes()
        final_a = json.loads((outs[0] / "final.json").read_text())
        final_b = json.loads((outs[1] / "final.json").read_text())
        assert final_a["best_vector"] == final_b["best_vector"]
        assert final_a["evaluations"] == final_b["evaluations"]

    def test_flag_overrides_and_outputs(self, cfgs, tmp_path, capsys):
        out = tmp_path / "opt"
        code = main(
            [
                "optimize",
                "--config",
                str(cfgs["optimize"]),
                "--out",
                str(out),
                "--seed",
                "3",
                "--particles",
                "2",
                "--iterations",
                "1",
            ]
        )
        assert code == 0
        assert "best throughput" in capsys.readouterr().out
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["particles"] == 2
        assert manifest["iterations"] == 1
        final = json.loads((out / "final.json").read_text())
        assert final["evaluations"] == 4  # 2 particles, initial batch + 1 iteration
        assert final["search_fidelity"] == "fast"
        assert final["best_throughput_reference_tbps"] > 0
        trace_rows = (out / "trace.csv").read_text().strip().splitlines()
        assert len(trace_rows) == 3  # header + iterations 0..1
        # the winning scenario is re-reported like a simulate run
        assert (out / "snr_per_channel.csv").exists()
        assert (out / "summary.json").exists()


class TestCompare:
    def test_self_comparison_is_zero_delta(self, cfgs, tmp_path, capsys):
        out = tmp_path / "cmp"
        code = main(
            [
                "compare",
                "--config",
                str(cfgs["plain"]),
                "--baseline",
                str(cfgs["plain"]),
                "--out",
                str(out),
                "--fidelity",
                "fast",
            ]
        )
        assert code == 0
        assert "+0.0%" in capsys.readouterr().out
        record = json.loads((out / "comparison.json").read_text())
        assert record["delta_percent"] == 0.0
        assert record["throughput_tbps"] == record["baseline_throughput_tbps"]
        cols = read_csv_columns(out / "comparison.csv")
        assert len(cols["delta_snr_total_db"]) == 5
        np.testing.assert_allclose(cols["delta_snr_total_db"], 0.0, atol=1e-12)

    def test_mismatched_grids_fail_validation(self, cfgs, tmp_path, capsys):
        code = main(
            [
                "compare",
                "--config",
                str(cfgs["plain"]),
                "--baseline",
                str(cfgs["narrow"]),
                "--out",
                str(tmp_path / "cmp"),
            ]
        )
        assert code == 3
        assert "channel grid" in capsys.readouterr().err

    def test_missing_baseline_is_a_usage_error(self, cfgs, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            main(["compare", "--config", str(cfgs["plain"]), "--baseline", "ghost.cfg", "--out", str(tmp_path / "x")])
        assert excinfo.value.code == 2


class TestExitCodes:
    def test_validation_error_is_3(self, cfgs, tmp_path, capsys):
        code = main(["simulate", "--config", str(cfgs["over_cap"]), "--out", str(tmp_path / "o")])
        assert code == 3
        assert "error:" in capsys.readouterr().err

    def test_numerical_failure_is_4(self, cfgs, tmp_path, capsys):
        code = main(["simulate", "--config", str(cfgs["stiff"]), "--out", str(tmp_path / "o"), "--fidelity", "fast"])
        assert code == 4
        assert "numerical failure" in capsys.readouterr().err

    def test_unknown_subcommand_is_2(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["annihilate", "--config", "x"])
        assert excinfo.value.code == 2


class TestThreadsOverride:
    def test_environment_wins_over_flag(self, cfgs, tmp_path, monkeypatch):
        monkeypatch.setenv("RAMANLINK_THREADS", "3")
        out = tmp_path / "report"
        main(["simulate", "--config", str(cfgs["plain"]), "--out", str(out), "--fidelity", "fast", "--threads", "1"])
        assert json.loads((out / "manifest.json").read_text())["threads"] == 3

    def test_garbage_environment_value_is_rejected(self, cfgs, tmp_path, monkeypatch):
        monkeypatch.setenv("RAMANLINK_THREADS", "many")
        with pytest.raises(SystemExit) as excinfo:
            main(["simulate", "--config", str(cfgs["plain"]), "--out", str(tmp_path / "o")])
        assert excinfo.value.code == 2

    def test_zero_threads_rejected(self, cfgs, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            main(["simulate", "--config", str(cfgs["plain"]), "--out", str(tmp_path / "o"), "--threads", "0"])
        assert excinfo.value.code == 2
