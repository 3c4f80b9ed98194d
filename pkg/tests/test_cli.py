"""Exit codes, artifacts, and resume behavior of the command-line interface."""

import numpy as np
import pytest

from conftest import write_config
from hdpan.cli import main


def run_train(synth_root, tmp_path, out_name="run", **extra):
    keys = dict(
        data=synth_root,
        out=tmp_path / out_name,
        alpha=2.0,
        lr=0.5,
        n_positive=15,
        max_epochs=3,
        batch=16,
    )
    keys["lambda"] = 0.1
    keys.update(extra)
    cfg = write_config(tmp_path / f"{out_name}.cfg", **keys)
    return main(["train", cfg]), tmp_path / out_name


class TestArgumentHandling:
    def test_no_arguments_is_usage_error(self, capsys):
        assert main([]) == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_unknown_command_is_usage_error(self, capsys):
        assert main(["transmogrify"]) == 1

    def test_unknown_config_key_rejected(self, synth_root, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.cfg", data=synth_root, out=tmp_path / "o",
                           alpha=2.0, lr=0.5, n_positive=5, turbo="yes")
        assert main(["train", cfg]) == 1
        assert "turbo" in capsys.readouterr().err

    def test_missing_config_file_rejected(self, tmp_path, capsys):
        assert main(["train", str(tmp_path / "absent.cfg")]) == 1

    def test_config_errors_are_collected_not_first_only(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.cfg", alpha="fast", lr="loose")
        assert main(["train", cfg]) == 1
        err = capsys.readouterr().err
        assert "alpha" in err and "lr" in err


class TestMakePu:
    def test_writes_index_files_and_manifest(self, synth_root, tmp_path, capsys):
        out = tmp_path / "split"
        code = main(["make-pu", f"data={synth_root}", f"out={out}",
                     "n_positive=12", "seed=3"])
        assert code == 0
        positives = (out / "positives.idx").read_text().split()
        unlabeled = (out / "unlabeled.idx").read_text().split()
        assert len(positives) == 12
        assert len(unlabeled) == 120 - 12
        manifest = (out / "manifest").read_text()
        assert "n_positive = 12" in manifest
        assert "seed = 3" in manifest
        assert "12 positives" in capsys.readouterr().out

    def test_deterministic_across_runs(self, synth_root, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["make-pu", f"data={synth_root}", f"out={out}",
                         "n_positive=10", "seed=9"]) == 0
        assert (a / "positives.idx").read_bytes() == (b / "positives.idx").read_bytes()
        assert (a / "unlabeled.idx").read_bytes() == (b / "unlabeled.idx").read_bytes()

    def test_missing_required_key(self, synth_root, tmp_path, capsys):
        assert main(["make-pu", f"data={synth_root}", "n_positive=5"]) == 1
        assert "out" in capsys.readouterr().err

    def test_missing_dataset_is_data_error(self, tmp_path, capsys):
        assert main(["make-pu", f"data={tmp_path / 'no_ds'}",
                     f"out={tmp_path / 's'}", "n_positive=5"]) == 2

    def test_infeasible_count_is_data_error(self, synth_root, tmp_path):
        assert main(["make-pu", f"data={synth_root}", f"out={tmp_path / 's'}",
                     "n_positive=5000"]) == 2

    def test_parity_binarization_for_multiclass_source(self, tenclass_root, tmp_path):
        out = tmp_path / "split"
        assert main(["make-pu", f"data={tenclass_root}", f"out={out}",
                     "n_positive=8"]) == 0
        assert len((out / "positives.idx").read_text().split()) == 8


class TestTrain:
    def test_writes_history_checkpoint_summary(self, synth_root, tmp_path, capsys):
        code, out = run_train(synth_root, tmp_path)
        assert code == 0
        history = (out / "history.csv").read_text()
        assert history.splitlines()[0] == "epoch,value,accuracy,precision,recall,f1"
        assert len(history.splitlines()) == 4  # header + 3 epochs
        assert (out / "checkpoint.bin").stat().st_size > 0
        summary = (out / "summary.txt").read_text()
        for key in ("command = train", "config_hash = ", "epochs_run = 3",
                    "best_epoch = ", "val_f1 = ", "test_f1 = ",
                    "wall_time_s = ", "finished_at = "):
            assert key in summary
        assert "best epoch" in capsys.readouterr().out

    def test_history_is_byte_identical_across_runs(self, synth_root, tmp_path):
        _, out_a = run_train(synth_root, tmp_path, out_name="a")
        _, out_b = run_train(synth_root, tmp_path, out_name="b")
        assert (out_a / "history.csv").read_bytes() == (out_b / "history.csv").read_bytes()
        assert (out_a / "checkpoint.bin").read_bytes() == (out_b / "checkpoint.bin").read_bytes()

    def test_command_line_overrides_win_over_file(self, synth_root, tmp_path):
        keys = dict(data=synth_root, out=tmp_path / "o", alpha=2.0, lr=0.5,
                    n_positive=15, max_epochs=5, batch=16)
        keys["lambda"] = 0.1
        cfg = write_config(tmp_path / "c.cfg", **keys)
        assert main(["train", cfg, "max_epochs=2"]) == 0
        assert "epochs_run = 2" in (tmp_path / "o" / "summary.txt").read_text()

    def test_train_from_stored_split_directory(self, synth_root, tmp_path):
        split_dir = tmp_path / "split"
        assert main(["make-pu", f"data={synth_root}", f"out={split_dir}",
                     "n_positive=14", "seed=0"]) == 0
        code, out = run_train(synth_root, tmp_path, out_name="fromsplit",
                              n_positive=None, split_dir=split_dir)
        assert code == 0
        assert (out / "summary.txt").exists()

    def test_split_source_must_be_exactly_one(self, synth_root, tmp_path, capsys):
        split_dir = tmp_path / "split"
        main(["make-pu", f"data={synth_root}", f"out={split_dir}", "n_positive=5"])
        code, _ = run_train(synth_root, tmp_path, out_name="both",
                            split_dir=split_dir)  # n_positive also set
        assert code == 1
        code, _ = run_train(synth_root, tmp_path, out_name="neither",
                            n_positive=None)
        assert code == 1

    def test_kl_objective_via_config(self, synth_root, tmp_path):
        code, out = run_train(synth_root, tmp_path, out_name="kl", objective="kl")
        assert code == 0
        assert "objective = kl" in (out / "summary.txt").read_text()

    def test_divergent_run_exits_numeric(self, synth_root, tmp_path):
        with np.errstate(all="ignore"):
            code, _ = run_train(synth_root, tmp_path, out_name="blow", lr=1e20)
        assert code == 3

    def test_multiclass_dataset_is_binarized(self, tenclass_root, tmp_path):
        code, out = run_train(tenclass_root, tmp_path, out_name="ten",
                              n_positive=10, max_epochs=2)
        assert code == 0
        assert (out / "summary.txt").exists()


class TestGrid:
    def grid_config(self, synth_root, tmp_path, **extra):
        keys = dict(
            data=synth_root, out=tmp_path / "grid", n_positive=15,
            max_epochs=2, batch=16, alphas="1.5,2.0", lrs="0.5",
        )
        keys["lambda"] = 0.1
        keys.update(extra)
        return write_config(tmp_path / "grid.cfg", **keys)

    def test_sweep_writes_grid_csv_and_summary(self, synth_root, tmp_path, capsys):
        cfg = self.grid_config(synth_root, tmp_path)
        assert main(["grid", cfg]) == 0
        out = tmp_path / "grid"
        rows = (out / "grid.csv").read_text().splitlines()
        assert rows[0].startswith("alpha,lr,best_epoch")
        assert len(rows) == 3  # header + 2 cells
        summary = (out / "summary.txt").read_text()
        assert "cells = 2" in summary
        assert "cells_failed = 0" in summary
        assert summary.count("best_for_alpha") == 2

    def test_resume_skips_completed_cells(self, synth_root, tmp_path):
        cfg = self.grid_config(synth_root, tmp_path)
        assert main(["grid", cfg]) == 0
        out = tmp_path / "grid"
        first = (out / "grid.csv").read_text()
        assert main(["grid", cfg]) == 0
        assert (out / "grid.csv").read_text() == first
        assert "cells_resumed = 2" in (out / "summary.txt").read_text()

    def test_partial_grid_restarts_only_missing_cells(self, synth_root, tmp_path):
        cfg = self.grid_config(synth_root, tmp_path)
        assert main(["grid", cfg]) == 0
        out = tmp_path / "grid"
        full = (out / "grid.csv").read_text()
        lines = full.splitlines()
        (out / "grid.csv").write_text("\n".join(lines[:2]) + "\n")  # keep one cell
        assert main(["grid", cfg]) == 0
        assert (out / "grid.csv").read_text() == full
        assert "cells_resumed = 1" in (out / "summary.txt").read_text()

    def test_scalar_alpha_key_is_rejected_for_grid(self, synth_root, tmp_path, capsys):
        cfg = self.grid_config(synth_root, tmp_path, alpha=2.0)
        assert main(["grid", cfg]) == 1
        assert "alpha" in capsys.readouterr().err


class TestEvalAndSaliency:
    @pytest.fixture
    def trained(self, synth_root, tmp_path):
        code, out = run_train(synth_root, tmp_path, out_name="model")
        assert code == 0
        return out / "checkpoint.bin"

    def test_eval_reports_metrics(self, trained, synth_root, tmp_path, capsys):
        code = main(["eval", f"checkpoint={trained}", f"data={synth_root}",
                     "split=test"])
        assert code == 0
        report = capsys.readouterr().out
        for key in ("split = test", "n = 40", "threshold = 0.5",
                    "accuracy = ", "f1 = ", "tp = "):
            assert key in report

    def test_eval_writes_report_file(self, trained, synth_root, tmp_path, capsys):
        report_path = tmp_path / "report.txt"
        code = main(["eval", f"checkpoint={trained}", f"data={synth_root}",
                     "split=val", f"out={report_path}"])
        assert code == 0
        assert report_path.read_text() == capsys.readouterr().out

    def test_eval_split_restricted_to_val_or_test(self, trained, synth_root):
        assert main(["eval", f"checkpoint={trained}", f"data={synth_root}",
                     "split=train"]) == 1

    def test_eval_missing_checkpoint(self, synth_root, tmp_path):
        assert main(["eval", f"checkpoint={tmp_path / 'no.bin'}",
                     f"data={synth_root}", "split=test"]) == 2

    def test_eval_checkpoint_dataset_mismatch(self, trained, tenclass_root):
        # dim-2 classifier against 4x4 images
        assert main(["eval", f"checkpoint={trained}", f"data={tenclass_root}",
                     "split=test"]) == 2

    def test_saliency_writes_pgm(self, trained, synth_root, tmp_path):
        out = tmp_path / "map.pgm"
        code = main(["saliency", f"checkpoint={trained}", f"data={synth_root}",
                     "split=test", "index=0", f"out={out}"])
        assert code == 0
        blob = out.read_bytes()
        assert blob.startswith(b"P5\n2 1\n255\n")  # images are 1x2 pixels
        assert len(blob) == len(b"P5\n2 1\n255\n") + 2

    def test_saliency_index_out_of_range(self, trained, synth_root, tmp_path):
        assert main(["saliency", f"checkpoint={trained}", f"data={synth_root}",
                     "split=test", "index=999", f"out={tmp_path / 'm.pgm'}"]) == 2
