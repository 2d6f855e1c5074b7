import json
import subprocess
import sys

from spdelab.cli import main


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


SMALL_CONVERGENCE = {
    "dim": 1,
    "gammas": [0.5],
    "axis": "space",
    "coarse_levels": [2, 3, 4],
    "ref_level": 5,
    "time_exp": 6,
    "n_paths": 2,
    "master_seed": 99,
    "n_modes": 100,
}


class TestAssembleCheck:
    def test_default_passes(self, capsys):
        assert main(["assemble-check"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out

    def test_corruption_fails(self, capsys):
        assert main(["assemble-check", "--dim", "1", "--level", "2",
                     "--inject-corruption"]) == 1
        assert "FAIL" in capsys.readouterr().out

    def test_2d_level_3(self, capsys):
        assert main(["assemble-check", "--dim", "2", "--level", "3"]) == 0


class TestConvergenceCommand:
    def test_dry_run_echoes_config(self, tmp_path, capsys):
        cfg = write_config(tmp_path, SMALL_CONVERGENCE)
        assert main(["convergence", "--config", cfg, "--dry-run"]) == 0
        echoed = json.loads(capsys.readouterr().out)
        assert echoed["coarse_levels"] == [2, 3, 4]

    def test_missing_key_is_validation_error(self, tmp_path, capsys):
        doc = dict(SMALL_CONVERGENCE)
        del doc["ref_level"]
        cfg = write_config(tmp_path, doc)
        assert main(["convergence", "--config", cfg]) == 1

    def test_outputs_and_determinism(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_CONVERGENCE)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["convergence", "--config", cfg, "--out", str(out_a)]) == 0
        assert main(["convergence", "--config", cfg, "--out", str(out_b)]) == 0
        for name in ("errors.csv", "summary.csv", "convergence.svg", "manifest.json"):
            assert (out_a / name).exists()
        assert (out_a / "errors.csv").read_bytes() == (out_b / "errors.csv").read_bytes()
        assert (out_a / "summary.csv").read_bytes() == (out_b / "summary.csv").read_bytes()

    def test_seed_override_changes_errors(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_CONVERGENCE)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["convergence", "--config", cfg, "--out", str(out_a)]) == 0
        assert main(
            ["convergence", "--config", cfg, "--out", str(out_b), "--seed", "123"]
        ) == 0
        assert (out_a / "errors.csv").read_bytes() != (out_b / "errors.csv").read_bytes()

    def test_csv_headers(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_CONVERGENCE)
        out = tmp_path / "o"
        main(["convergence", "--config", cfg, "--out", str(out)])
        lines = (out / "errors.csv").read_text().splitlines()
        assert lines[0] == "axis,gamma,resolution,path_seed,error"
        assert len(lines) == 1 + 3 * 2  # header + levels x paths
        summary = (out / "summary.csv").read_text().splitlines()
        assert summary[0].startswith("axis,dim,gamma,fitted_rate,theoretical_rate")

    def test_svg_contains_dashed_guides(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_CONVERGENCE)
        out = tmp_path / "o"
        main(["convergence", "--config", cfg, "--out", str(out)])
        svg = (out / "convergence.svg").read_text()
        assert "stroke-dasharray" in svg
        assert "rate" in svg

    def test_gnuplot_script(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_CONVERGENCE)
        out = tmp_path / "o"
        main(["convergence", "--config", cfg, "--out", str(out)])
        script = (out / "convergence.gp").read_text()
        assert "set logscale xy" in script
        assert "dashtype 2" in script
        assert script.count("<< EOD") == 1  # one gamma curve

    def test_manifest_records_stream_tags(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_CONVERGENCE)
        out = tmp_path / "o"
        main(["convergence", "--config", cfg, "--out", str(out)])
        manifest = json.loads((out / "manifest.json").read_text())
        assert set(manifest["stream_tags"]) == {
            "wiener", "driver", "analysis_wiener", "analysis_mark",
        }
        assert manifest["config"]["master_seed"] == 99


class TestVerifyCommand:
    def test_reduced_paths_policy(self, tmp_path, capsys):
        # statistical power warning, pass/fail suppressed, exit 0
        assert main(
            ["verify", "--paths", "100", "--out", str(tmp_path), "--seed", "1"]
        ) == 0
        out = capsys.readouterr().out
        assert "warning" in out
        assert (tmp_path / "verify_bdg.csv").exists()
        assert (tmp_path / "alarms.log").read_text() == ""

    def test_alarm_exit_code(self, tmp_path, monkeypatch):
        from spdelab import l0
        from spdelab.exceptions import StatisticalAlarm

        def boom(*args, **kwargs):
            raise StatisticalAlarm("synthetic alarm")

        monkeypatch.setattr(l0, "bdg_ratio", boom)
        assert main(
            ["verify", "--paths", "1000", "--out", str(tmp_path), "--seed", "1"]
        ) == 3
        assert "synthetic alarm" in (tmp_path / "alarms.log").read_text()


class TestHolderCommand:
    def test_small_run(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            {
                "space_level": 3,
                "time_exp": 6,
                "m_max": 4,
                "m_min": 1,
                "n_seeds": 2,
                "n_modes": 50,
                "master_seed": 5,
            },
        )
        assert main(["holder", "--config", cfg, "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "holder.csv").read_text().splitlines()
        assert lines[0] == "kind,seed,exponent"
        assert len(lines) == 1 + 4  # 2 seeds x (spde + brownian)

    def test_snapshot_resolution_validated(self, tmp_path):
        cfg = write_config(tmp_path, {"time_exp": 4, "m_max": 6})
        assert main(["holder", "--config", cfg, "--out", str(tmp_path)]) == 1


class TestSimulateCommand:
    def test_writes_state(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            {
                "dim": 1,
                "gamma": 0.5,
                "space_level": 3,
                "time_exp": 5,
                "master_seed": 17,
                "n_modes": 50,
            },
        )
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "final_state.txt").read_text().splitlines()
        assert len(lines) == 9  # one line per vertex
        float(lines[0])  # parses
        manifest = json.loads((tmp_path / "simulate_manifest.json").read_text())
        assert manifest["command"] == "simulate"

    def test_snapshot_dump(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {
                "dim": 1,
                "gamma": 0.5,
                "space_level": 2,
                "time_exp": 4,
                "snapshot_level": 2,
                "master_seed": 17,
                "n_modes": 50,
            },
        )
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0
        text = (tmp_path / "snapshots.txt").read_text().splitlines()
        headers = [ln for ln in text if ln.startswith("# t = ")]
        assert len(headers) == 5  # dyadic times 0, 1/4, ..., 1
        assert len(text) == 5 * (1 + 5)  # header + one line per vertex

    def test_capacity_guard_exit_code(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {
                "dim": 1,
                "gamma": 0.5,
                "space_level": 15,
                "time_exp": 3,
                "master_seed": 1,
            },
        )
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 1


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    import spdelab.cli as cli
    from spdelab.exceptions import NumericalError

    def explode(*args, **kwargs):
        raise NumericalError("synthetic solver failure")

    monkeypatch.setattr(cli, "simulate_path", explode)
    cfg = write_config(
        tmp_path,
        {"dim": 1, "gamma": 0.5, "space_level": 2, "time_exp": 3, "master_seed": 1},
    )
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "spdelab.cli", "assemble-check", "--dim", "1",
         "--level", "2"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "PASS" in proc.stdout
