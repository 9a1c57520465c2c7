"""End-to-end runs of the emlp command line tool on synthetic IDX files."""

import os
import random
import struct
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("EMLP_CLI", "emlp")
CLASSES = 47
PER_CLASS = 12


def run(*args, ok=True):
    proc = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if ok:
        assert proc.returncode == 0, proc.stderr
    return proc


def write_idx(images_path, labels_path, seed):
    rng = random.Random(seed)
    # One bright 4x4 patch per class, at a class-specific spot, plus noise.
    pixels = bytearray()
    labels = bytearray()
    for i in range(CLASSES * PER_CLASS):
        c = i % CLASSES
        r0, c0 = 4 * (c // 7), 4 * (c % 7)
        img = [rng.randrange(0, 40) for _ in range(784)]
        for r in range(r0, r0 + 4):
            for col in range(c0, c0 + 4):
                img[r * 28 + col] = 200 + rng.randrange(0, 56)
        pixels.extend(img)
        labels.append(c)
    n = CLASSES * PER_CLASS
    images_path.write_bytes(struct.pack(">IIII", 0x00000803, n, 28, 28) + bytes(pixels))
    labels_path.write_bytes(struct.pack(">II", 0x00000801, n) + bytes(labels))


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    write_idx(root / "a-images", root / "a-labels", 1)
    write_idx(root / "b-images", root / "b-labels", 2)
    out = root / "splits"
    proc = run("ingest", "--images", root / "a-images", root / "b-images",
               "--labels", root / "a-labels", root / "b-labels",
               "--train-count", 752, "--valid-count", 188, "--test-count", 188,
               "--seed", 1, "--out-dir", out)
    assert "train=752" in proc.stdout
    return out


def read_text(path):
    data = Path(path).read_bytes()
    assert b"\r" not in data
    return data.decode()


def small_train(data_dir, out, *extra):
    return run("train", "--data-dir", data_dir, "--architecture", "784,32,47",
               "--epochs", 3, "--learning-rate", 0.01, "--seed", 4, "--quiet",
               "--out-dir", out, *extra)


def test_ingest_writes_three_splits(data_dir):
    for name in ("train", "valid", "test"):
        rows = {"train": 752, "valid": 188, "test": 188}[name]
        assert (data_dir / f"{name}.emds").stat().st_size == 15 + rows * (784 * 4 + 1)


def test_train_artifacts_and_determinism(data_dir, tmp_path):
    small_train(data_dir, tmp_path / "a")
    small_train(data_dir, tmp_path / "b")
    for f in ("model.mlpm", "curves.csv", "config.txt", "summary.txt"):
        assert (tmp_path / "a" / f).exists(), f
    a = read_text(tmp_path / "a" / "curves.csv").splitlines()
    b = read_text(tmp_path / "b" / "curves.csv").splitlines()
    assert a[0] == "epoch,train_loss,train_acc,valid_loss,valid_acc,epoch_seconds"
    assert len(a) == 4
    assert [r.rsplit(",", 1)[0] for r in a] == [r.rsplit(",", 1)[0] for r in b]
    summary = read_text(tmp_path / "a" / "summary.txt")
    assert "status=completed" in summary
    assert "test_acc=" in summary


def test_config_file_and_override(data_dir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("architecture=784,16,47\nepochs=5\nbatch_size=50\n")
    run("train", "--config", cfg, "--epochs", 2, "--data-dir", data_dir, "--quiet",
        "--out-dir", tmp_path / "out")
    text = read_text(tmp_path / "out" / "config.txt")
    assert "epochs=2" in text
    assert "architecture=784,16,47" in text
    assert len(read_text(tmp_path / "out" / "curves.csv").splitlines()) == 3


def test_eval_matches_model(data_dir, tmp_path):
    small_train(data_dir, tmp_path)
    proc = run("eval", "--model", tmp_path / "model.mlpm", "--data", data_dir / "test.emds")
    assert proc.stdout.startswith("samples=188 ")
    assert "accuracy=" in proc.stdout


def test_pca_transform_and_eval(data_dir, tmp_path):
    proc = run("pca", "--data-dir", data_dir, "--components", 12, "--transform", "--out-dir", tmp_path)
    assert "components=12" in proc.stdout
    evr = read_text(tmp_path / "evr.csv").splitlines()
    assert evr[0] == "components,eigenvalue,cumulative_evr"
    cumulative = [float(r.split(",")[2]) for r in evr[1:]]
    assert cumulative == sorted(cumulative)
    assert (tmp_path / "train.emds").stat().st_size == 15 + 752 * (12 * 4 + 1)

    run("train", "--data-dir", tmp_path, "--architecture", "12,16,47", "--epochs", 1, "--quiet",
        "--out-dir", tmp_path / "run")
    proc = run("eval", "--model", tmp_path / "run" / "model.mlpm", "--data", data_dir / "test.emds",
               "--pca", tmp_path / "pca.pcam")
    assert "samples=188" in proc.stdout


def test_prune_counts(data_dir, tmp_path):
    proc = run("prune", "--train", data_dir / "train.emds", "--method", "mean-distance", "--keep", 10,
               "--out-dir", tmp_path)
    assert "kept=470" in proc.stdout
    report = read_text(tmp_path / "prune_report.csv").splitlines()
    assert report[0] == "class,rank,sample_index,score,kept"
    assert len(report) == 753
    assert sum(r.endswith(",1") for r in report[1:]) == 470
    assert (tmp_path / "train.emds").stat().st_size == 15 + 470 * (784 * 4 + 1)

    proc = run("prune", "--train", data_dir / "train.emds", "--method", "reconstruction-rmse",
               "--keep", 8, "--pca-components", 20, "--chain-after-mean", "--mean-keep", 14,
               "--out-dir", tmp_path / "chain")
    assert "kept=376" in proc.stdout
    assert (tmp_path / "chain" / "mean_prune_report.csv").exists()


def test_grid_csv(data_dir, tmp_path):
    grid = tmp_path / "grid.txt"
    grid.write_text("learning_rate=0.01|0.001\ndropout_keep=none|0\n")
    run("grid", "--data-dir", data_dir, "--architecture", "784,16,47", "--epochs", 1,
        "--grid", grid, "--out-dir", tmp_path)
    rows = read_text(tmp_path / "grid.csv").splitlines()
    assert rows[0].startswith("rank,learning_rate,dropout_keep,status,")
    assert len(rows) == 5
    assert sum(",invalid," in r for r in rows) == 2


def test_flops():
    proc = run("flops", "--architecture", "784,128,128,128,47", "--conv", 28, 7, 3, 2, 64)
    assert "dense_multiplications=139136" in proc.stdout
    assert "conv_out_dim=14" in proc.stdout
    assert "conv_multiplications=614656" in proc.stdout


def test_errors_exit_nonzero(data_dir, tmp_path):
    proc = run("train", "--data-dir", data_dir, "--lambda", "-1", "--penalty", "l1", "--quiet",
               "--out-dir", tmp_path, ok=False)
    assert proc.returncode != 0
    assert "emlp: error:" in proc.stderr
    proc = run("eval", "--model", data_dir / "train.emds", "--data", data_dir / "test.emds", ok=False)
    assert proc.returncode != 0
    proc = run("no-such-command", ok=False)
    assert proc.returncode != 0
