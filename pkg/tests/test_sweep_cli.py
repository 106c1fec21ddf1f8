import csv
import io
import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from sideband_sim import (ConfigError, SweepSpec, dump_config, load_config, run_point, run_sweep,
                          sideband_cooling_limit)
from sideband_sim.cli import main

from conftest import DEMO_CONFIGS, make_config


@pytest.fixture(autouse=True)
def _fixed_epoch(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")


def _write(tmp_path, cfg, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(dump_config(cfg))
    return path


def _read_csv(text):
    meta = [ln for ln in text.splitlines() if ln.startswith("#")]
    body = "\n".join(ln for ln in text.splitlines() if not ln.startswith("#"))
    return meta, list(csv.DictReader(io.StringIO(body)))


class TestSweepSpec:
    def test_grid(self):
        spec = SweepSpec("delta", 1.0, 100.0, 3, spacing="log")
        np.testing.assert_allclose(spec.grid(), [1, 10, 100])
        assert SweepSpec("delta", 0, 1, 5).grid()[-1] == 1

    @pytest.mark.parametrize("kwargs", [
        dict(parameter="delta", start=1.0, stop=0.0, points=3),
        dict(parameter="delta", start=0.0, stop=1.0, points=1),
        dict(parameter="delta", start=0.0, stop=1.0, points=3, spacing="log"),
        dict(parameter="phase", start=0.0, stop=1.0, points=3),
        dict(parameter="delta", start=0.0, stop=1.0, points=3, engines=("magic",)),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            SweepSpec(**kwargs)


class TestRunSweep:
    def test_optimum_at_resonance(self, tmp_path):
        cfg = make_config(omega_b=1.0, gamma_a=1.0, gamma_b=0.01, amplitude=3.0, n_b=100.0)
        path = _write(tmp_path, cfg)
        spec = SweepSpec("delta", 1.0 - 5.0, 1.0 + 5.0, 41, engines=("closed_form", "rate"))
        out = tmp_path / "sweep.csv"
        res = run_sweep(path, spec, out)
        _, rows = _read_csv(out.read_text())
        grid = np.array([float(r["delta"]) for r in rows])
        for engine in ("closed_form", "rate"):
            nb = np.array([float(r[f"n_b_{engine}"]) for r in rows])
            assert abs(grid[np.argmin(nb)] - 1.0) <= grid[1] - grid[0] + 1e-12
        assert res.column("n_b_rate") == pytest.approx(res.column("n_b_closed_form"), rel=1e-8)
        assert all(r["reason"] == "" for r in rows)

    def test_decoupled_closed_form(self, tmp_path):
        path = _write(tmp_path, make_config(amplitude=0.0, n_b=37.0))
        res = run_sweep(path, SweepSpec("delta", 0.0, 2.0, 5, engines=("closed_form",)))
        assert res.column("n_b_closed_form").tolist() == [37.0] * 5
        assert "n_b_rate" not in res.columns and "n_b_lindblad" not in res.columns

    def test_engine_columns_present_iff_requested(self, tmp_path):
        path = _write(tmp_path, make_config(amplitude=1.0, n_b=0.5, gamma_b=0.05))
        res = run_sweep(path, SweepSpec("amplitude", 0.5, 1.0, 2,
                                        engines=("lindblad", "closed_form")))
        for engine in ("closed_form", "lindblad"):
            assert f"n_b_{engine}" in res.columns and f"n_a_{engine}" in res.columns
        assert "lindblad_residual" in res.columns
        assert not any("rate" in c or "langevin" in c for c in res.columns)
        np.testing.assert_allclose(res.column("n_b_lindblad"), res.column("n_b_closed_form"),
                                   rtol=2e-2)

    def test_full_coupling_unsupported_engines(self, tmp_path):
        from sideband_sim import Full
        path = _write(tmp_path, make_config(amplitude=0.02, n_b=0.5, gamma_a=0.2, gamma_b=1e-4,
                                            coupling=Full()))
        res = run_sweep(path, SweepSpec("delta", 0.9, 1.1, 2, engines=("closed_form",)))
        assert all(math.isnan(v) for v in res.column("n_b_closed_form"))
        assert all(r["reason"] for r in res.rows)
        assert res.all_failed

    def test_deterministic_across_runs_and_threads(self, tmp_path):
        path = _write(tmp_path, make_config(amplitude=2.0, gamma_b=0.05, n_b=1.0))
        spec = SweepSpec("delta", 0.0, 2.0, 7, engines=("closed_form", "rate", "langevin"))
        from sideband_sim.sweep import EngineOptions
        opts = EngineOptions(n_traj=64, seed=5)
        texts = []
        for threads in (1, 1, 3):
            out = tmp_path / f"s{len(texts)}.csv"
            run_sweep(path, spec, out, options=opts, threads=threads)
            texts.append(out.read_bytes())
        assert texts[0] == texts[1] == texts[2]
        other = tmp_path / "seed.csv"
        run_sweep(path, spec, other, options=EngineOptions(n_traj=64, seed=6))
        assert other.read_bytes() != texts[0]

    def test_csv_dialect(self, tmp_path):
        path = _write(tmp_path, make_config())
        out = tmp_path / "s.csv"
        run_sweep(path, SweepSpec("delta", 0.0, 2.0, 3, engines=("closed_form",)), out)
        meta, rows = _read_csv(out.read_text())
        keys = {ln[2:].split(":")[0] for ln in meta}
        assert {"tool", "timestamp", "config_hash", "seed"} <= keys
        assert any("2023-11-14T22:13:20Z" in ln for ln in meta)
        assert len(rows) == 3


class TestRunPoint:
    def test_strong_drive_report(self):
        rep = run_point(DEMO_CONFIGS / "resonant_strong_drive.toml", ("closed_form", "rate"))
        cf = rep["engines"]["closed_form"]["n_b"]
        assert abs(rep["engines"]["rate"]["n_b"] - cf) < 1e-3
        # γ_a = 1, γ_b = 0.01, n̄_b = 100, n̄_a = 0
        assert cf == pytest.approx(0.01 * 100 / 1.01, abs=2e-3)
        assert "xi" in rep and "t_eff" in rep and "limits" in rep

    def test_decoupled_flag(self):
        rep = run_point(DEMO_CONFIGS / "decoupled.toml", ("closed_form",))
        assert "no cooling (decoupled)" in rep["flags"]


class TestCli:
    def _run(self, capsys, *argv):
        code = main(list(argv))
        out, err = capsys.readouterr()
        return code, out, err

    def test_steady_text_and_json(self, capsys):
        cfg = str(DEMO_CONFIGS / "moderate_drive.toml")
        code, out, _ = self._run(capsys, "steady", "--config", cfg)
        assert code == 0 and "xi" in out
        code, out, _ = self._run(capsys, "steady", "--config", cfg, "--json")
        rep = json.loads(out)
        assert rep["engines"]["closed_form"]["n_b"] == pytest.approx(0.0489, abs=1e-4)

    def test_invalid_config_exit_2(self, tmp_path, capsys):
        path = _write(tmp_path, make_config())
        path.write_text(path.read_text().replace("decay_rate = 1.0", "decay_rate = -1.0", 1))
        code, _, err = self._run(capsys, "steady", "--config", str(path))
        assert code == 2 and "decay_rate" in err

    def test_parse_error_exit_2_with_location(self, tmp_path, capsys):
        path = tmp_path / "bad.toml"
        path.write_text("[mode_a]\nfrequency = = 1\n")
        code, _, err = self._run(capsys, "steady", "--config", str(path))
        assert code == 2 and "line 2" in err

    def test_all_points_fail_exit_3(self, tmp_path, capsys):
        cfg = str(DEMO_CONFIGS / "resolved_sideband_full.toml")
        code, out, _ = self._run(capsys, "sweep", "--config", cfg, "--parameter", "delta",
                                 "--start", "0.9", "--stop", "1.1", "--points", "3",
                                 "--engines", "closed_form")
        assert code == 3 and "nan" in out

    def test_capacity_exit_4(self, capsys):
        cfg = str(DEMO_CONFIGS / "moderate_drive.toml")
        code, _, err = self._run(capsys, "lindblad", "--config", cfg, "--dims", "100x100")
        assert code == 4 and err

    def test_sweep_out_file(self, tmp_path, capsys):
        out = tmp_path / "x.csv"
        cfg = str(DEMO_CONFIGS / "moderate_drive.toml")
        args = ["sweep", "--config", cfg, "--parameter", "amplitude", "--start", "0.1",
                "--stop", "10", "--points", "4", "--spacing", "log", "--out", str(out)]
        assert self._run(capsys, *args)[0] == 0
        first = out.read_bytes()
        assert self._run(capsys, *args, "--threads", "2")[0] == 0
        assert out.read_bytes() == first

    def test_evolve(self, capsys):
        cfg = str(DEMO_CONFIGS / "moderate_drive.toml")
        code, out, _ = self._run(capsys, "evolve", "--config", cfg, "--points", "11",
                                 "--n-b0", "1.0", "--n-a0", "0.0")
        _, rows = _read_csv(out)
        assert code == 0 and len(rows) == 11
        assert float(rows[0]["n_b"]) == 1.0
        assert float(rows[-1]["n_b"]) == pytest.approx(0.0489, abs=2e-3)

    def test_lindblad(self, capsys):
        cfg = str(DEMO_CONFIGS / "moderate_drive.toml")
        code, out, _ = self._run(capsys, "lindblad", "--config", cfg)
        meta, rows = _read_csv(out)
        assert code == 0
        nb = next(ln for ln in meta if ln.startswith("# n_b:"))
        assert float(nb.split(":")[1]) == pytest.approx(0.0489, rel=1e-2)
        assert sum(float(r["p_b"]) for r in rows) == pytest.approx(1.0, abs=1e-10)

    def test_ensemble(self, capsys):
        code, out, _ = self._run(capsys, "ensemble", "--atoms", "3,5", "--excitations", "0,2",
                                 "--points", "41")
        meta, rows = _read_csv(out)
        dev = {int(ln.split("N=")[1].split(":")[0]): float(ln.split(":")[-1])
               for ln in meta if "max_deviation" in ln}
        assert code == 0 and dev[5] < dev[3]
        code, out, _ = self._run(capsys, "ensemble", "--atoms", "1,2,3,4,5,6",
                                 "--excitations", "0,1")
        meta, _ = _read_csv(out)
        assert all(float(ln.split(":")[-1]) < 1e-10 for ln in meta if "max_deviation" in ln)
        code, out, _ = self._run(capsys, "ensemble", "--atoms", "2", "--excitations", "0,0")
        _, rows = _read_csv(out)
        assert all(float(r["n_b_atomic"]) == 0 and float(r["n_b_bosonic"]) == 0 for r in rows)

    def test_linearize_number_preset(self, capsys):
        code, out, _ = self._run(capsys, "linearize", "--config",
                                 str(DEMO_CONFIGS / "number_preset.toml"))
        _, rows = _read_csv(out)
        default = [r for r in rows if r["default"] == "yes"]
        assert code == 0 and len(default) == 1
        d = default[0]
        assert float(d["alpha_re"]) == pytest.approx(-0.50025, abs=1e-5)
        assert float(d["beta_re"]) == pytest.approx(-0.025025, abs=1e-6)
        assert float(d["delta_eff"]) == pytest.approx(0.99950, abs=1e-5)
        assert float(d["g_eff"]) == pytest.approx(-0.0050025, abs=1e-6)

    def test_linearize_multistable(self, capsys):
        code, out, _ = self._run(capsys, "linearize", "--config",
                                 str(DEMO_CONFIGS / "multistable.toml"))
        _, rows = _read_csv(out)
        assert code == 0 and len(rows) == 3
        assert [r["default"] for r in rows].count("yes") == 1

    def test_linearize_uncoupled(self, tmp_path, capsys):
        cfg = load_config(DEMO_CONFIGS / "number_preset.toml")
        text = dump_config(cfg).replace("g_prime = 0.01", "g_prime = 0.0")
        path = tmp_path / "g0.toml"
        path.write_text(text)
        code, out, _ = self._run(capsys, "linearize", "--config", str(path))
        _, rows = _read_csv(out)
        (row,) = rows
        delta0 = cfg.mode_a.frequency - cfg.drive.drive_frequency
        assert float(row["alpha_re"]) == pytest.approx(-0.5 / delta0, abs=1e-12)
        assert float(row["beta_re"]) == 0.0
        assert float(row["stationarity_residual"]) < 1e-12

    def test_linearize_requires_generalized(self, capsys):
        code, _, err = self._run(capsys, "linearize", "--config",
                                 str(DEMO_CONFIGS / "moderate_drive.toml"))
        assert code != 0 and err

    def test_console_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "sideband_sim", "--version"],
                              capture_output=True, text=True, check=False)
        assert proc.returncode == 0 and "0.1.0" in proc.stdout

    def test_threads_env_fallback(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("SIDEBAND_SIM_THREADS", "2")
        cfg = str(DEMO_CONFIGS / "moderate_drive.toml")
        code, out, _ = self._run(capsys, "sweep", "--config", cfg, "--parameter", "delta",
                                 "--start", "0", "--stop", "2", "--points", "4")
        monkeypatch.delenv("SIDEBAND_SIM_THREADS")
        code2, out2, _ = self._run(capsys, "sweep", "--config", cfg, "--parameter", "delta",
                                   "--start", "0", "--stop", "2", "--points", "4")
        assert code == code2 == 0 and out == out2


def test_full_lindblad_sweep_near_sideband_limit(tmp_path):
    path = DEMO_CONFIGS / "resolved_sideband_full.toml"
    cfg = load_config(path)
    res = run_sweep(path, SweepSpec("delta", 0.8, 1.2, 5, engines=("lindblad",)))
    limit = sideband_cooling_limit(cfg)
    nb = np.array(res.column("n_b_lindblad"))
    assert np.all(np.isfinite(nb))
    assert abs(nb.min() - limit.limit) < 0.3 * limit.limit
