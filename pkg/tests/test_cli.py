from pathlib import Path

import pytest

from gradlab.cli import main


def test_synth_then_run_with_flags(tmp_path, capsys):
    data_dir = tmp_path / "data"
    assert (
        main(
            [
                "synth",
                "--out-dir",
                str(data_dir),
                "--n-train",
                "300",
                "--n-test",
                "60",
                "--seed",
                "5",
            ]
        )
        == 0
    )
    assert (data_dir / "train-images-idx3-ubyte").exists()
    out_dir = tmp_path / "run"
    code = main(
        [
            "run",
            "--data-dir",
            str(data_dir),
            "--hidden",
            "16",
            "--steps",
            "40",
            "--minibatch",
            "30",
            "--noise",
            "0.25",
            "--seed",
            "3",
            "--sample-coords",
            "30",
            "--out-dir",
            str(out_dir),
        ]
    )
    assert code == 0
    for name in ("metrics.csv", "coherence.csv", "learned.csv", "config.resolved"):
        assert (out_dir / name).exists()
    printed = capsys.readouterr().out
    assert "ta=" in printed and "va=" in printed


def test_run_from_config_file(tmp_path, capsys):
    data_dir = tmp_path / "data"
    main(["synth", "--out-dir", str(data_dir), "--n-train", "200", "--n-test", "40"])
    config = tmp_path / "run.cfg"
    config.write_text(
        "\n".join(
            [
                f"train_images = {data_dir / 'train-images-idx3-ubyte'}",
                f"train_labels = {data_dir / 'train-labels-idx1-ubyte'}",
                f"test_images = {data_dir / 't10k-images-idx3-ubyte'}",
                f"test_labels = {data_dir / 't10k-labels-idx1-ubyte'}",
                "hidden = 12",
                "total_steps = 20",
                "minibatch_size = 40",
                "sample_coords = 20",
            ]
        )
    )
    assert main(["run", "--config", str(config), "--steps", "10"]) == 0


def test_run_requires_data_paths():
    with pytest.raises(SystemExit):
        main(["run", "--steps", "10"])


def test_verify_passes(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out
