import math
import shutil
import subprocess
import time

import numpy as np
import pytest

from cpsense import cli, experiment
from cpsense.experiment import (
    ExperimentConfig,
    PAPER_FIG1_PRESET,
    parse_config,
    read_summary_csv,
    run_experiment,
    run_trial,
    summarize,
    write_csv,
)

FAST = """
dims = 3,3,3
rank = 1
kappa_grid = 1.0,10.0
trials = 2
m = 30
restarts = 2
base_seed = 7
"""


class TestParseConfig:
    def test_basic(self):
        config = parse_config(FAST)
        assert config.dims == (3, 3, 3)
        assert config.rank == 1
        assert config.kappa_grid == (1.0, 10.0)
        assert config.trials == 2
        assert config.m == (30,)
        assert config.base_seed == 7

    def test_comments_and_blank_lines(self):
        config = parse_config("# header\n\ndims=4,4 # inline\nrank=2\n"
                              "kappa_grid=1\n")
        assert config.dims == (4, 4)

    def test_preset_fields(self):
        config = parse_config("preset = paper-fig1\ndims = 10,10,10\n"
                              "kappa_grid = 1,10\nrank = 3\n")
        assert config.trials == 100
        assert config.rank == 3
        assert config.success_mse_threshold == 1e-10
        assert config.distribution == "gaussian"
        assert config.alpha == 1.0
        assert PAPER_FIG1_PRESET["trials"] == 100

    def test_preset_can_be_overridden(self):
        config = parse_config("preset = paper-fig1\ndims = 4,4,4\n"
                              "kappa_grid = 1\nrank = 2\ntrials = 5\n")
        assert config.trials == 5 and config.rank == 2

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown config key"):
            parse_config("dims=4,4\nrank=1\nkappa_grid=1\nbogus=3\n")

    def test_missing_required(self):
        with pytest.raises(ValueError, match="missing required"):
            parse_config("dims=4,4\nrank=1\n")

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="unknown preset"):
            parse_config("preset=nope\ndims=4,4\nrank=1\nkappa_grid=1\n")

    def test_bad_line(self):
        with pytest.raises(ValueError, match="line 1"):
            parse_config("this is not a key value pair\n")


class TestMeasurementCount:
    def test_default_uses_factor_times_params(self):
        config = ExperimentConfig(dims=(8, 8, 8), rank=3, kappa_grid=(1.0,))
        assert config.m_for(0) == math.ceil(1.5 * 24 * 3)  # 108

    def test_explicit_single_value_applies_everywhere(self):
        config = ExperimentConfig(dims=(4, 4, 4), rank=2,
                                  kappa_grid=(1.0, 10.0), m=(50,))
        assert config.m_for(0) == 50 and config.m_for(1) == 50

    def test_explicit_per_grid_point(self):
        config = ExperimentConfig(dims=(4, 4, 4), rank=2,
                                  kappa_grid=(1.0, 10.0), m=(40, 60))
        assert config.m_for(1) == 60

    def test_wrong_m_length_rejected(self):
        with pytest.raises(ValueError):
            ExperimentConfig(dims=(4, 4, 4), rank=2,
                             kappa_grid=(1.0, 10.0, 100.0), m=(40, 60))


class TestRunTrial:
    def test_deterministic_modulo_wall_time(self):
        config = parse_config(FAST)
        a = run_trial(config, 0, 0)
        b = run_trial(config, 0, 0)
        assert (a.kappa_tilde, a.m, a.trial_index, a.seed_used, a.mse,
                a.success, a.iterations) == \
               (b.kappa_tilde, b.m, b.trial_index, b.seed_used, b.mse,
                b.success, b.iterations)

    def test_distinct_trials_use_distinct_seeds(self):
        config = parse_config(FAST)
        seeds = {run_trial(config, gi, ti).seed_used
                 for gi in range(2) for ti in range(2)}
        assert len(seeds) == 4

    def test_easy_instance_succeeds(self):
        config = parse_config(FAST)
        row = run_trial(config, 0, 0)
        assert row.success and row.mse < config.success_mse_threshold


class TestSummaries:
    def test_counts_conserved(self):
        config = parse_config(FAST)
        rows, summary = run_experiment(config)
        assert len(rows) == len(config.kappa_grid) * config.trials
        for s in summary:
            assert s.trials == config.trials
            matching = [r for r in rows if r.kappa_tilde == s.kappa_tilde]
            assert s.success_count == sum(r.success for r in matching)
            assert s.success_rate == pytest.approx(s.success_count / s.trials)

    def test_summarize_median(self):
        config = parse_config(FAST)
        rows, _ = run_experiment(config)
        summary = summarize(config, rows)
        first = sorted(r.mse for r in rows if r.kappa_tilde == 1.0)
        assert summary[0].median_mse == pytest.approx(
            (first[0] + first[1]) / 2.0)


class TestCsv:
    def test_round_trip_and_format(self, tmp_path):
        config = parse_config(FAST)
        rows, summary = run_experiment(config)
        rows_path, summary_path = write_csv(rows, summary,
                                            str(tmp_path / "out"))
        lines = open(rows_path).read().splitlines()
        assert lines[0] == ",".join(experiment.ROWS_HEADER)
        assert len(lines) == 1 + len(rows)
        assert all(line.split(",")[5] in ("true", "false")
                   for line in lines[1:])
        again = read_summary_csv(summary_path)
        assert again == summary

    def test_bad_summary_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError):
            read_summary_csv(path)

    def test_empty_rows_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv([], [], str(tmp_path / "out"))


class TestPlotScript:
    def test_script_contents(self, tmp_path):
        config = parse_config(FAST)
        rows, summary = run_experiment(config)
        _, summary_path = write_csv(rows, summary, str(tmp_path / "out"))
        script = tmp_path / "plot.gp"
        experiment.emit_plot_script(summary_path, str(script))
        text = script.read_text()
        assert "set logscale x" in text
        assert summary_path in text
        assert "pngcairo" in text

    def test_missing_csv_rejected(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            experiment.emit_plot_script(str(tmp_path / "nope.csv"),
                                        str(tmp_path / "plot.gp"))

    @pytest.mark.skipif(shutil.which("gnuplot") is None,
                        reason="gnuplot not installed")
    def test_gnuplot_accepts_script(self, tmp_path):
        config = parse_config(FAST)
        rows, summary = run_experiment(config)
        _, summary_path = write_csv(rows, summary, str(tmp_path / "out"))
        script = tmp_path / "plot.gp"
        experiment.emit_plot_script(summary_path, str(script))
        proc = subprocess.run(["gnuplot", script.name], cwd=tmp_path,
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "recovery_success.png").exists()


class TestSelftest:
    def test_all_checks_pass_quickly(self):
        start = time.perf_counter()
        results = experiment.selftest()
        elapsed = time.perf_counter() - start
        assert results and all(results.values())
        assert elapsed < 30.0

    def test_fault_injection_breaks_only_adjoint(self):
        results = experiment.selftest(corrupt_adjoint=True)
        assert not results["adjoint"]
        others = {k: v for k, v in results.items() if k != "adjoint"}
        assert all(others.values())


class TestCli:
    def test_gen_kappa_sense_recover_round_trip(self, tmp_path, capsys):
        model_path = tmp_path / "model.txt"
        y_path = tmp_path / "y.txt"
        out_path = tmp_path / "recovered.txt"
        assert cli.main(["gen", "--dims", "3,3,3", "--rank", "1",
                         "--kappa", "2.0", "--seed", "5",
                         "--out", str(model_path)]) == 0
        assert cli.main(["kappa", "--model", str(model_path)]) == 0
        out = capsys.readouterr().out
        assert "status=finite" in out
        assert cli.main(["sense", "--model", str(model_path), "--m", "30",
                         "--seed", "9", "--out", str(y_path)]) == 0
        assert cli.main(["recover", "--y", str(y_path), "--m", "30",
                         "--shape", "3,3,3", "--rank", "1", "--op-seed", "9",
                         "--seed", "3", "--out", str(out_path)]) == 0
        out = capsys.readouterr().out
        assert "objective=" in out and "trace=" in out
        from cpsense.io_text import read_cpmodel
        from cpsense.tensor_core import mse, reconstruct
        truth = reconstruct(read_cpmodel(model_path))
        found = reconstruct(read_cpmodel(out_path))
        assert mse(truth, found) < 1e-10

    def test_recover_reports_mse_against_truth(self, tmp_path, capsys):
        from cpsense.io_text import read_cpmodel, write_tensor
        from cpsense.tensor_core import reconstruct
        model_path = tmp_path / "model.txt"
        y_path = tmp_path / "y.txt"
        truth_path = tmp_path / "truth.txt"
        cli.main(["gen", "--dims", "3,3,3", "--rank", "1", "--seed", "6",
                  "--out", str(model_path)])
        write_tensor(truth_path, reconstruct(read_cpmodel(model_path)))
        cli.main(["sense", "--model", str(model_path), "--m", "30",
                  "--seed", "2", "--out", str(y_path)])
        capsys.readouterr()
        report_path = tmp_path / "report.txt"
        assert cli.main(["recover", "--y", str(y_path), "--m", "30",
                         "--shape", "3,3,3", "--rank", "1", "--op-seed", "2",
                         "--truth", str(truth_path),
                         "--out", str(tmp_path / "rec.txt"),
                         "--report", str(report_path)]) == 0
        text = report_path.read_text()
        assert "mse=" in text
        mse_val = float([ln for ln in text.splitlines()
                         if ln.startswith("mse=")][0].split("=")[1])
        assert mse_val < 1e-10

    def test_bound_and_cover(self, capsys):
        assert cli.main(["bound", "--dims", "10,10,10", "--rank", "3",
                         "--tau", "8", "--eta", "0.01", "--delta", "0.5"]) == 0
        out = capsys.readouterr().out
        t1 = float([ln for ln in out.splitlines()
                    if ln.startswith("theorem1_bound=")][0].split("=")[1])
        assert t1 == pytest.approx(181.0 * math.log(96.0), rel=1e-12)
        assert "prop2_bound=" in out
        assert cli.main(["cover", "--dims", "4,5", "--rank", "2",
                         "--tau", "2", "--eps", "0.1"]) == 0
        out = capsys.readouterr().out
        val = float(out.split("=")[1])
        assert val == pytest.approx(19.0 * math.log(180.0), rel=1e-12)

    def test_rip_probe(self, capsys):
        assert cli.main(["rip-probe", "--dims", "4,4,4", "--rank", "2",
                         "--m", "100", "--samples", "50", "--op-seed", "1",
                         "--seed", "7"]) == 0
        out = capsys.readouterr().out
        assert "delta_hat=" in out and "mean_ratio=" in out

    def test_experiment_subcommand(self, tmp_path, capsys):
        config_path = tmp_path / "sweep.cfg"
        config_path.write_text(FAST)
        assert cli.main(["experiment", "--config", str(config_path),
                         "--out", str(tmp_path / "run"),
                         "--plot-script", str(tmp_path / "plot.gp")]) == 0
        out = capsys.readouterr().out
        assert "successes=" in out
        assert (tmp_path / "run_rows.csv").exists()
        assert (tmp_path / "run_summary.csv").exists()
        assert (tmp_path / "plot.gp").exists()

    def test_selftest_exit_code(self, capsys):
        assert cli.main(["selftest"]) == 0
        assert "pass" in capsys.readouterr().out

    def test_error_exit_code(self, tmp_path, capsys):
        assert cli.main(["kappa", "--model", str(tmp_path / "missing.txt")]) == 1
        assert "error:" in capsys.readouterr().err
