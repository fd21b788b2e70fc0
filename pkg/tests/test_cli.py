import csv
import subprocess
import sys

import numpy as np
import pytest

from dalrtc.cli import main
from dalrtc.data import load_image, save_image, tensor_load


@pytest.fixture()
def synth_file(tmp_path):
    path = tmp_path / "fixture.dtct"
    code = main(["synth", "--shape", "10x8x3", "--ranks", "2,2,2",
                 "--levels", "8", "--seed", "3", "--output", str(path)])
    assert code == 0
    return path


def test_synth_writes_tensor_and_preview(synth_file):
    t = tensor_load(synth_file)
    assert t.shape == (10, 8, 3)
    assert t.min() >= 0.0 and t.max() <= 7.0
    assert synth_file.with_suffix(".png").exists()


def test_complete_on_tensor_input(tmp_path, synth_file, capsys):
    out = tmp_path / "out"
    code = main(["complete", "--input", str(synth_file), "--method", "dalrtc",
                 "--ratio", "0.6", "--levels", "8", "--lambda", "1.0",
                 "--tmax", "20", "--eps", "1e-6", "--out-dir", str(out)])
    assert code == 0
    assert "nmse=" in capsys.readouterr().out
    estimate = tensor_load(out / "dalrtc_estimate.dtct")
    assert estimate.shape == (10, 8, 3)
    assert (out / "dalrtc_trace.csv").exists()
    assert (out / "dalrtc_trace.png").stat().st_size > 0


def test_complete_on_image_input(tmp_path):
    rng = np.random.default_rng(0)
    img = tmp_path / "input.png"
    low = rng.integers(0, 2, (12, 9, 1)) * 200.0
    save_image(np.repeat(low, 3, axis=2), img)
    out = tmp_path / "out"
    code = main(["complete", "--input", str(img), "--method", "silrtc",
                 "--ratio", "0.7", "--tmax", "10", "--out-dir", str(out)])
    assert code == 0
    recon = load_image(out / "silrtc_estimate.png")
    assert recon.shape == (12, 9, 3)


def test_sweep_outputs_and_report(tmp_path, synth_file):
    out = tmp_path / "sweep"
    code = main(["sweep", "--input", str(synth_file),
                 "--method", "dalrtc,silrtc", "--ratios", "0.4:0.6:0.2",
                 "--levels", "8", "--lambda", "1.0", "--tmax", "10",
                 "--eps", "1e-6", "--seed", "5", "--out-dir", str(out)])
    assert code == 0
    with open(out / "report.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1 + 2 * 2
    assert (out / "nmse_vs_ratio.png").stat().st_size > 0


def test_sweep_failure_exit_code(tmp_path, synth_file):
    out = tmp_path / "sweep"
    code = main(["sweep", "--input", str(synth_file), "--method", "soft-impute",
                 "--ratios", "0.5:0.5:0.1", "--tmax", "5",
                 "--out-dir", str(out)])
    assert code == 2  # matrix-only method on a 3-mode tensor: data failure


def test_convergence_outputs(tmp_path, synth_file):
    out = tmp_path / "conv"
    code = main(["convergence", "--input", str(synth_file),
                 "--method", "dalrtc,tmac", "--ratio", "0.6", "--levels", "8",
                 "--lambda", "1.0", "--ranks", "2,2,2", "--tmax", "10",
                 "--out-dir", str(out)])
    assert code == 0
    assert (out / "trace_dalrtc.csv").exists()
    assert (out / "trace_tmac.csv").exists()
    assert (out / "convergence.png").stat().st_size > 0
    assert (out / "convergence_report.csv").exists()


def test_usage_error_exit_code():
    assert main(["complete", "--input", "x.dtct", "--method", "nonsense"]) == 1
    assert main(["sweep"]) == 1  # missing --input
    assert main(["nope"]) == 1


def test_missing_input_exit_code(tmp_path):
    assert main(["complete", "--input", str(tmp_path / "absent.png")]) == 2


def test_corrupt_tensor_exit_code(tmp_path):
    bad = tmp_path / "bad.dtct"
    bad.write_bytes(b"DTCT\x01" + bytes(10))
    assert main(["complete", "--input", str(bad)]) == 2


def test_module_entry_point(tmp_path, synth_file):
    result = subprocess.run(
        [sys.executable, "-m", "dalrtc", "complete", "--input", str(synth_file),
         "--method", "tmac", "--ranks", "2,2,2", "--ratio", "0.6",
         "--tmax", "5", "--out-dir", str(tmp_path / "cli_out")],
        capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
    assert "method=tmac" in result.stdout
