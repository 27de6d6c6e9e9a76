import json
import subprocess
import sys

import numpy as np
import pytest

from dmimo import config as cf
from dmimo import harness


def _cfg(**kw):
    scen = kw.pop("scenario", cf.ScenarioParams(num_rus=2, num_ues=1, seed=3))
    return cf.ExperimentConfig(scenario=scen, **kw)


class TestConfig:
    def test_validate_good(self):
        assert _cfg().validate() == []

    def test_bad_sweep_variable(self):
        cfg = _cfg(sweep_variable="nonsense")
        assert any("sweep variable" in p for p in cfg.validate())

    def test_bad_mobility_values(self):
        cfg = _cfg(sweep_variable="mobility", sweep_values=("low", "warp"))
        assert cfg.validate()

    def test_load_ini(self, tmp_path):
        p = tmp_path / "exp.ini"
        p.write_text(
            "[scenario]\nnum_rus = 3\nseed = 9\n\n[ofdm]\nfc_hz = 2.6e9\n\n"
            "[mobility]\nlabel = high\n\n[sweep]\nvariable = distance_m\n"
            "values = 50, 150\ntrials = 4\n\n[sync]\nru_cfo_hz = 100\n"
        )
        cfg = cf.load_config(str(p))
        assert cfg.scenario.num_rus == 3
        assert cfg.scenario.ofdm.fc_hz == 2.6e9
        assert cfg.scenario.mobility == "high"
        assert cfg.sweep_values == (50.0, 150.0)
        assert cfg.sync.cfo(cf.RU_ID_BASE) == 100.0
        assert cfg.validate() == []

    def test_hash_stable_and_sensitive(self):
        a, b = _cfg(), _cfg()
        assert cf.config_hash(a) == cf.config_hash(b)
        c = _cfg(trials=7)
        assert cf.config_hash(a) != cf.config_hash(c)

    def test_build_scenario_geometry(self):
        scen = cf.build_scenario(cf.ScenarioParams(num_rus=4, num_ues=2, ue_distance_m=300))
        assert len(scen.rus()) == 4
        for ue in scen.ues():
            assert np.linalg.norm(ue.position_m) == pytest.approx(300.0)
        # RUs travel with the gNB (coherent cluster moves as a convoy)
        for ru in scen.rus():
            assert ru.velocity_mps == scen.gnb().velocity_mps

    def test_mobility_speeds_from_table(self):
        scen = cf.build_scenario(cf.ScenarioParams(mobility="high"))
        assert scen.mobility.gnb_speed_kmh == 10.0
        assert scen.mobility.ue_relative_speed_kmh == 1.0


class TestEmit:
    def test_empty_records_header_only(self, tmp_path):
        out = tmp_path / "r.csv"
        harness.emit_results([], "csv", str(out))
        assert out.read_text() == "sweep_value,seed,metric_name,metric_value,units\n"

    def test_one_record_two_lines(self, tmp_path):
        out = tmp_path / "r.csv"
        rec = harness.ResultRecord(100.0, 0, "m", 1.5, "dB")
        harness.emit_results([rec], "csv", str(out))
        assert out.read_text().count("\n") == 2

    def test_float_repr_round_trips(self, tmp_path):
        out = tmp_path / "r.csv"
        val = 1.0 / 3.0
        harness.emit_results([harness.ResultRecord(1.0, 0, "m", val, "dB")], "csv", str(out))
        got = float(out.read_text().splitlines()[1].split(",")[3])
        assert got == val

    def test_csv_json_values_equal(self, tmp_path):
        recs = [
            harness.ResultRecord(float(i), t, "m", np.pi * i * (t + 1), "dB")
            for i in range(3)
            for t in range(2)
        ]
        harness.emit_results(recs, "csv", str(tmp_path / "r.csv"))
        harness.emit_results(recs, "json", str(tmp_path / "r.json"))
        jr = json.load(open(tmp_path / "r.json"))["records"]
        jmap = {(r["sweep_value"], r["seed"], r["metric_name"]): r["metric_value"] for r in jr}
        for line in (tmp_path / "r.csv").read_text().splitlines()[1:]:
            sv, seed, name, val, _ = line.split(",")
            assert jmap[(float(sv), int(seed), name)] == float(val)

    def test_manifest_sidecar_and_mismatch_warning(self, tmp_path):
        out = tmp_path / "r.csv"
        rec = [harness.ResultRecord(1.0, 0, "m", 2.0, "dB")]
        harness.emit_results(rec, "csv", str(out), {"config_hash": "aaaa"})
        assert json.load(open(str(out) + ".manifest.json"))["config_hash"] == "aaaa"
        with pytest.warns(UserWarning, match="different config"):
            harness.emit_results(rec, "csv", str(out), {"config_hash": "bbbb"})

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            harness.emit_results([], "xml", str(tmp_path / "r.xml"))


class TestCaseStudies:
    def test_downlink_records_and_determinism(self, tmp_path):
        cfg = _cfg(sweep_variable="distance_m", sweep_values=(100.0, 300.0), trials=2)
        a = harness.run_downlink_case_study(cfg, workers=1)
        b = harness.run_downlink_case_study(cfg, workers=3)
        assert a == b
        names = {r.metric_name for r in a}
        assert "baseline_capacity_bpshz" in names
        assert "relative_gain[rus=4]" in names
        assert any(r.seed == "mean" for r in a) and any(r.seed == "ci95" for r in a)

    def test_downlink_zero_rus_gain_one(self):
        cfg = _cfg(sweep_variable="distance_m", sweep_values=(100.0,), trials=2)
        recs = harness.run_downlink_case_study(cfg, ru_counts=(0,))
        gains = [r.metric_value for r in recs if r.metric_name == "relative_gain[rus=0]"
                 and not isinstance(r.seed, str)]
        assert gains and all(g == pytest.approx(1.0) for g in gains)

    def test_downlink_requires_distance_sweep(self):
        with pytest.raises(ValueError):
            harness.run_downlink_case_study(_cfg(sweep_variable="num_rus", sweep_values=(2,)))

    def test_uplink_records(self):
        cfg = _cfg(
            scenario=cf.ScenarioParams(num_ues=2, seed=3),
            sweep_variable="num_rus", sweep_values=(0, 2), trials=2,
        )
        recs = harness.run_uplink_case_study(cfg, mobilities=("low",), num_groups=2)
        names = {r.metric_name for r in recs}
        assert {"throughput_mbps[mobility=low]", "mcs_index[mobility=low]",
                "fused_snr_db[mobility=low]"} <= names

    def test_mobility_records(self):
        cfg = _cfg(
            scenario=cf.ScenarioParams(num_rus=2, seed=3, duration_slots=8),
            sweep_variable="mobility", sweep_values=("low",), trials=1,
        )
        recs = harness.run_mobility_sweep(
            cfg, ue_counts=(1,), num_groups=1, predictor_size=16, min_history_slots=60
        )
        assert any(r.metric_name == "bitrate_mbps[ues=1]" for r in recs)
        assert all(np.isfinite(r.metric_value) for r in recs)

    def test_rc_benchmark_rows(self, tmp_path):
        rows = harness.run_rc_benchmark([0, 1], fd_dt_values=(0.01,),
                                        train_steps=600, eval_steps=150)
        assert len(rows) == 2
        out = tmp_path / "rc.csv"
        harness.emit_rc_benchmark(rows, str(out))
        header = out.read_text().splitlines()[0]
        assert header == "seed,f_d_dt,nmse_predictor_db,nmse_persistence_db"


class TestCli:
    def _run(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "dmimo.cli", *args],
            capture_output=True, text=True,
        )

    def test_validate_ok(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text("[sweep]\nvariable = distance_m\nvalues = 100\ntrials = 1\n")
        r = self._run("validate", "--config", str(p))
        assert r.returncode == 0 and "ok" in r.stdout

    def test_validate_bad(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text("[sweep]\nvariable = bogus\nvalues = 1\n")
        r = self._run("validate", "--config", str(p))
        assert r.returncode != 0 and "ERROR" in r.stdout

    def test_downlink_end_to_end(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text(
            "[scenario]\nnum_rus = 2\nseed = 5\n\n"
            "[sweep]\nvariable = distance_m\nvalues = 100\ntrials = 1\n"
        )
        out = tmp_path / "dl.csv"
        r = self._run("downlink", "--config", str(p), "--out", str(out), "--plot")
        assert r.returncode == 0, r.stderr
        assert out.exists()
        assert (tmp_path / "dl.png").exists()
        assert (tmp_path / "dl.csv.manifest.json").exists()

    def test_seed_override_changes_manifest(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text("[sweep]\nvariable = distance_m\nvalues = 100\ntrials = 1\n")
        out = tmp_path / "a.csv"
        self._run("downlink", "--config", str(p), "--out", str(out), "--seed", "77")
        man = json.load(open(str(out) + ".manifest.json"))
        assert man["seed_root"] == 77
