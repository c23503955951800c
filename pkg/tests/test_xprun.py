import json
import os

import numpy as np
import pytest

from dqchain.cli import main as cli_main
from dqchain.xprun import (
    ExperimentConfig,
    TimeSeriesTable,
    WalkTable,
    derive_seeds,
    export,
    load_config,
    run_scenario,
    steady_window,
    verify_manifest,
)


def tiny_single_qubit(**over):
    values = {"M": 6, "duration_us": 0.3, "base_seed": 77}
    values.update(over)
    return ExperimentConfig("single_qubit", values)


class TestConfig:
    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown config keys"):
            ExperimentConfig("single_qubit", {"gamm_per_us": 1.0})

    def test_unknown_scenario_rejected(self):
        with pytest.raises(ValueError, match="unknown scenario"):
            ExperimentConfig("walk", {})

    def test_defaults_match_published_values(self):
        cfg = ExperimentConfig("nine_chain", {})
        assert cfg["gamma_per_us"] == 1.0
        assert cfg["dt_section_ns"] == 7.5
        assert cfg["M"] == 10
        assert cfg["T1_us"] == 30.0
        assert cfg["Tphi_us"] == 20.0
        assert cfg["J_over_2pi_MHz"] == 11.0
        assert cfg["duration_us"] == 5.0

    def test_defaults_overridable(self):
        cfg = ExperimentConfig("nine_chain", {"gamma_per_us": 2 * np.pi, "M": 3})
        assert cfg["gamma_per_us"] == 2 * np.pi
        assert cfg["M"] == 3

    def test_seed_derivation_deterministic_and_distinct(self):
        a = derive_seeds(1, "curve/x", 50)
        b = derive_seeds(1, "curve/x", 50)
        c = derive_seeds(1, "curve/y", 50)
        assert a == b
        assert a != c
        assert len(set(a)) == 50


class TestTables:
    def test_time_series_round_trip(self, tmp_path):
        t = TimeSeriesTable([(0.0, "sz", 1.0, 0.0, 5), (0.1, "sz", 0.5, 0.01, 5)])
        path = tmp_path / "t.csv"
        path.write_bytes(t.to_csv_bytes())
        back = TimeSeriesTable.from_csv(path)
        assert back.rows == t.rows

    def test_header_is_exact(self):
        t = TimeSeriesTable([(0.0, "sz", 1.0, 0.0, 5)])
        assert t.to_csv_bytes().decode().splitlines()[0] == \
            "time_us,observable_id,mean,sem,M"

    def test_negative_sem_rejected(self):
        with pytest.raises(ValueError):
            TimeSeriesTable([(0.0, "sz", 1.0, -0.1, 5)]).validate()

    def test_non_monotone_time_rejected(self):
        with pytest.raises(ValueError):
            TimeSeriesTable([(0.2, "sz", 1.0, 0.0, 5),
                             (0.1, "sz", 1.0, 0.0, 5)]).validate()

    def test_walk_round_trip(self, tmp_path):
        t = WalkTable([(0.0, 1, 0.5), (0.0, 2, 0.25)])
        path = tmp_path / "w.csv"
        path.write_bytes(t.to_csv_bytes())
        assert WalkTable.from_csv(path).rows == t.rows

    def test_steady_window(self):
        ts = np.linspace(0, 10, 101)
        vals = 0.2 + np.exp(-2 * ts)
        value, drift, ok = steady_window(ts, vals)
        assert ok
        assert value == pytest.approx(0.2, abs=1e-4)
        value, drift, ok = steady_window(ts, 0.5 * ts)
        assert not ok


class TestExportAndManifest:
    def test_files_written_and_hashed(self, tmp_path):
        cfg = tiny_single_qubit()
        result = run_scenario(cfg)
        manifest = export(result, cfg, tmp_path, force=False)
        assert set(manifest["hashes"]) == {
            "single_qubit_sse.csv", "single_qubit_lme.csv", "single_qubit_mcwf.csv"}
        assert all(verify_manifest(tmp_path).values())

    def test_refuses_overwrite_without_force(self, tmp_path):
        cfg = tiny_single_qubit()
        result = run_scenario(cfg)
        export(result, cfg, tmp_path)
        with pytest.raises(FileExistsError):
            export(result, cfg, tmp_path)
        export(result, cfg, tmp_path, force=True)

    def test_hash_detects_flipped_byte(self, tmp_path):
        cfg = tiny_single_qubit()
        export(run_scenario(cfg), cfg, tmp_path)
        target = tmp_path / "single_qubit_sse.csv"
        data = bytearray(target.read_bytes())
        data[len(data) // 2] ^= 0x01
        target.write_bytes(bytes(data))
        status = verify_manifest(tmp_path)
        assert status["single_qubit_sse.csv"] is False

    def test_rerun_from_manifest_is_byte_identical(self, tmp_path):
        cfg = tiny_single_qubit()
        out1 = tmp_path / "a"
        export(run_scenario(cfg), cfg, out1)
        cfg2 = load_config(out1 / "manifest.json")
        out2 = tmp_path / "b"
        export(run_scenario(cfg2), cfg2, out2)
        for name in ("single_qubit_sse.csv", "single_qubit_lme.csv",
                     "single_qubit_mcwf.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_worker_count_invisible_in_output(self, tmp_path):
        base = tiny_single_qubit()
        res1 = run_scenario(base)
        cfg2 = tiny_single_qubit(workers=3)
        res2 = run_scenario(cfg2)
        a = export(res1, base, tmp_path / "w1")
        b = export(res2, cfg2, tmp_path / "w2")
        assert a["hashes"] == b["hashes"]


class TestScenarios:
    def test_quantum_walk_reports_interference_metrics(self, tmp_path):
        cfg = ExperimentConfig("quantum_walk", {"duration_us": 0.2})
        result = run_scenario(cfg)
        rep = result["report"]
        assert rep["max_center_density"] <= 1e-8
        assert rep["max_mirror_asymmetry"] <= 1e-8
        export(result, cfg, tmp_path)
        ts, sites, data = WalkTable.from_csv(tmp_path / "walk_phi_1pi.csv").grid()
        assert list(sites) == list(range(1, 10))
        assert not np.any(np.isnan(data))

    def test_symmetry_check_small(self):
        cfg = ExperimentConfig("symmetry_check",
                               {"sizes": [3], "drift_duration_us": 0.5})
        result = run_scenario(cfg)
        rep = result["report"]
        assert result.get("failed") is False
        entry = rep["sizes"]["3"]
        assert entry["candidate"] == "exchange-hermitian"
        assert max(entry["commutator_norms"].values()) <= 1e-10
        assert entry["null_space_dimension"] >= 2
        assert entry["sector_weight_drift"] < 1e-6
        assert entry["asymmetric_flagged"]

    def test_nine_chain_single_variant_smoke(self):
        cfg = ExperimentConfig("nine_chain", {
            "L": 5, "M": 2, "duration_us": 0.2, "variants": ["ideal"]})
        result = run_scenario(cfg)
        table = result["tables"]["nine_chain_ideal.csv"]
        ts, means, sems = table.series("szsz_1_5_phi_0")
        assert means[0] == pytest.approx(1.0)

    def test_phase_sweep_smoke(self):
        cfg = ExperimentConfig("five_chain_phase_sweep", {
            "M": 2, "duration_us": 0.2, "phases_over_pi": [0.0, 1.0],
            "eval_times_us": [0.1]})
        result = run_scenario(cfg)
        assert "phase_sweep_eval.csv" in result["tables"]
        late = result["report"]["late_values"]
        assert set(late) == {"0", "1"}


class TestCli:
    def test_cli_roundtrip(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "scenario": "single_qubit", "M": 3, "duration_us": 0.2,
            "base_seed": 5}))
        out = tmp_path / "out"
        rc = cli_main(["single_qubit", "--config", str(cfg_path),
                       "--out", str(out)])
        assert rc == 0
        assert (out / "manifest.json").exists()
        # second run without --force must fail cleanly
        rc = cli_main(["single_qubit", "--config", str(cfg_path),
                       "--out", str(out)])
        assert rc == 2
        rc = cli_main(["single_qubit", "--config", str(cfg_path),
                       "--out", str(out), "--force"])
        assert rc == 0

    def test_cli_scenario_mismatch(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"scenario": "single_qubit"}))
        rc = cli_main(["quantum_walk", "--config", str(cfg_path)])
        assert rc == 2

    def test_cli_lab_frame_only_for_walk(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"scenario": "single_qubit"}))
        rc = cli_main(["single_qubit", "--config", str(cfg_path), "--lab-frame"])
        assert rc == 2
