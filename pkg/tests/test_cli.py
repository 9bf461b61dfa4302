import csv
import json

import pytest

from hammersim.cli import (
    EXIT_CONFIG_ERROR,
    EXIT_SIMULATION_ERROR,
    SWEEP_CSV_HEADER,
    main,
)
from hammersim.config import ConfigError, build_config, load_config


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


SMALL_GEO = {"banks": 1, "rows_per_bank": 32, "cols_per_row": 64}
# desk-scale density over 2048 cells yields ~1 victim; pin it higher so
# the flip-producing CLI tests always have something to work with
DENSE_FAULTS = {"victim_density": 0.02}


class TestConfig:
    def test_defaults_desk_scale(self):
        cfg = build_config({})
        assert cfg.timing.t_refw == 640_000
        assert cfg.fault.threshold_min == 1_390
        assert cfg.sweep["points"] == [0.08, 0.16, 0.32, 0.64, 1.28]

    def test_paper_scale(self):
        cfg = build_config({}, paper_scale=True)
        assert cfg.timing.t_refw == 64_000_000
        assert cfg.fault.threshold_min == 139_000
        assert cfg.sweep["points"] == [8, 16, 32, 64, 128]

    def test_unknown_top_level_key_named(self):
        with pytest.raises(ConfigError, match="voltage"):
            build_config({"voltage": 1.5})

    def test_unknown_nested_key_named(self):
        with pytest.raises(ConfigError, match="geometry.ranks"):
            build_config({"geometry": {"ranks": 2}})

    def test_invalid_values_become_config_errors(self):
        with pytest.raises(ConfigError):
            build_config({"geometry": {"rows_per_bank": 1}})
        with pytest.raises(ConfigError):
            build_config({"mitigation": {"kind": "voodoo"}})
        with pytest.raises(ConfigError):
            build_config({"pattern": "checkers"})

    def test_seed_override(self):
        assert build_config({"seed": 5}).seed == 5
        assert build_config({"seed": 5}, seed=9).seed == 9

    def test_missing_file_is_config_error(self):
        with pytest.raises(ConfigError):
            load_config("/nonexistent/config.json")


class TestExitCodes:
    def test_unknown_key_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"banana": 1})
        code = main(["sweep", "--config", cfg, "--out", str(tmp_path)])
        assert code == EXIT_CONFIG_ERROR
        assert "banana" in capsys.readouterr().err

    def test_simulation_error_exits_3(self, tmp_path, capsys):
        # hammer interval below tRC is a simulation-level error
        cfg = write_config(tmp_path, {
            "geometry": SMALL_GEO,
            "hammer": {"act_interval_ns": 10, "x_row": 2},
        })
        code = main(["characterize", "--config", cfg, "--out", str(tmp_path)])
        assert code == EXIT_SIMULATION_ERROR

    def test_success_exits_0(self, tmp_path):
        cfg = write_config(tmp_path, {"geometry": SMALL_GEO})
        assert main(["characterize", "--config", cfg,
                     "--out", str(tmp_path)]) == 0


class TestArtifacts:
    def test_empty_sweep_writes_header_only(self, tmp_path):
        cfg = write_config(tmp_path, {"geometry": SMALL_GEO,
                                      "sweep": {"points": []}})
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "sweep_refresh_interval.csv")
        assert rows == [SWEEP_CSV_HEADER]

    def test_sidecar_reproduces_run(self, tmp_path):
        cfg = write_config(tmp_path, {"geometry": SMALL_GEO, "seed": 3})
        main(["sweep", "--config", cfg, "--out", str(tmp_path)])
        meta = json.loads(
            (tmp_path / "sweep_refresh_interval.csv.meta.json").read_text())
        assert meta["tool"] == "hammersim"
        assert meta["seed"] == 3
        assert meta["config"]["geometry"]["rows_per_bank"] == 32
        assert "version" in meta

    def test_characterize_csv_schema(self, tmp_path):
        cfg = write_config(tmp_path, {"geometry": SMALL_GEO,
                              "fault": DENSE_FAULTS})
        main(["characterize", "--config", cfg, "--out", str(tmp_path)])
        rows = read_csv(tmp_path / "characterize_flips.csv")
        assert rows[0] == ["bank", "row", "col", "direction", "time_ns",
                           "hammered_row"]
        assert len(rows) > 1  # desk-scale defaults produce flips
        for bank, row, col, direction, _, hammered in rows[1:]:
            assert direction in ("1->0", "0->1")
            assert abs(int(row) - int(hammered)) == 1

    def test_hammer_writes_spec_to_sidecar(self, tmp_path):
        cfg = write_config(tmp_path, {"geometry": SMALL_GEO,
                              "fault": DENSE_FAULTS})
        assert main(["hammer", "--config", cfg, "--out", str(tmp_path)]) == 0
        meta = json.loads(
            (tmp_path / "hammer_flips.csv.meta.json").read_text())
        spec = meta["hammer_spec"]
        assert spec["mode"] == "pair"
        assert spec["x_row"] != spec["y_row"]

    def test_mitigate_eval_compares_all_mechanisms(self, tmp_path):
        cfg = write_config(tmp_path, {"geometry": SMALL_GEO, "seed": 1,
                              "fault": DENSE_FAULTS})
        assert main(["mitigate-eval", "--config", cfg,
                     "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "mitigate_eval.csv")
        mechanisms = [r[0] for r in rows[1:]]
        assert mechanisms == ["none", "para", "counter", "refresh", "ecc"]
        flips = {r[0]: int(r[1]) for r in rows[1:]}
        assert flips["none"] > 0
        assert flips["counter"] == 0  # threshold_min - 1 always preempts
        assert flips["refresh"] == 0  # 8x faster refresh outpaces thresholds
        assert flips["ecc"] <= flips["none"]

    def test_para_analysis_grid(self, tmp_path):
        cfg = write_config(tmp_path, {
            "geometry": SMALL_GEO,
            "analysis": {"p_grid": [0.05], "n_th_grid": [50, 200],
                         "closes": 2_000, "trials": 50},
        })
        assert main(["para-analysis", "--config", cfg,
                     "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "para_analysis.csv")
        assert len(rows) == 3
        for _, _, _, _, bound, exact, *_ in rows[1:]:
            assert float(bound) >= float(exact)

    def test_mitigation_flag_overrides_config(self, tmp_path):
        cfg = write_config(tmp_path, {"geometry": SMALL_GEO,
                              "fault": DENSE_FAULTS})
        assert main(["hammer", "--config", cfg, "--out", str(tmp_path),
                     "--mitigation", "refresh", "--trefw-ms", "0.08"]) == 0
        meta = json.loads(
            (tmp_path / "hammer_flips.csv.meta.json").read_text())
        assert meta["flips_total"] == 0


class TestDeterminismAndJobs:
    def test_sweep_byte_identical_across_runs(self, tmp_path):
        cfg = write_config(tmp_path, {"geometry": SMALL_GEO, "seed": 7})
        for sub in ("a", "b"):
            (tmp_path / sub).mkdir()
            main(["sweep", "--config", cfg, "--out", str(tmp_path / sub)])
        a = (tmp_path / "a" / "sweep_refresh_interval.csv").read_bytes()
        b = (tmp_path / "b" / "sweep_refresh_interval.csv").read_bytes()
        assert a == b

    def test_jobs_do_not_change_output(self, tmp_path):
        cfg = write_config(tmp_path, {"geometry": SMALL_GEO, "seed": 7})
        for sub, jobs in (("serial", "1"), ("parallel", "3")):
            (tmp_path / sub).mkdir()
            main(["sweep", "--config", cfg, "--out", str(tmp_path / sub),
                  "--jobs", jobs])
        a = (tmp_path / "serial" / "sweep_refresh_interval.csv").read_bytes()
        b = (tmp_path / "parallel" / "sweep_refresh_interval.csv").read_bytes()
        assert a == b

    def test_golden_sweep(self, tmp_path):
        """Fixed seed reproduces the checked-in CSV byte-identically."""
        from pathlib import Path

        cfg = write_config(tmp_path, {"geometry": SMALL_GEO, "seed": 0,
                              "fault": DENSE_FAULTS})
        main(["sweep", "--config", cfg, "--out", str(tmp_path)])
        golden = Path(__file__).parent / "golden" / "sweep_refresh_interval.csv"
        assert (tmp_path / "sweep_refresh_interval.csv").read_bytes() == \
            golden.read_bytes()

    def test_golden_mitigate_eval(self, tmp_path):
        from pathlib import Path

        cfg = write_config(tmp_path, {"geometry": SMALL_GEO, "seed": 1,
                              "fault": DENSE_FAULTS})
        main(["mitigate-eval", "--config", cfg, "--out", str(tmp_path)])
        golden = Path(__file__).parent / "golden" / "mitigate_eval.csv"
        assert (tmp_path / "mitigate_eval.csv").read_bytes() == \
            golden.read_bytes()
