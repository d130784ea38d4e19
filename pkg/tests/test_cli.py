import os
import subprocess
import sys

import numpy as np
import pytest

from tripnorm.cli import main
from tripnorm.cloud import load_cloud
from tripnorm.nn import EncoderNet

TINY = """
train_shapes = cube:600:1, plane:400:2
val_shapes = cube:600:9
noise_levels = 0
patches_per_shape = 20
val_patches_per_shape = 8
k = 12
r_fraction = 0.1
encoder_epochs = 1
estimator_epochs = 2
batch_size = 8
"""


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "tiny.cfg").write_text(TINY)
    return tmp_path


def run(*argv):
    return main(list(argv))


def test_generate_writes_xyzn(work):
    assert run("generate", "--kind", "cube", "--n", "5000", "--out", "cube.xyzn", "--seed", "7") == 0
    lines = (work / "cube.xyzn").read_text().splitlines()
    assert len(lines) == 5000 and len(lines[0].split()) == 6
    run("generate", "--kind", "cube", "--n", "5000", "--out", "again.xyzn", "--seed", "7")
    assert (work / "again.xyzn").read_bytes() == (work / "cube.xyzn").read_bytes()


def test_usage_errors_exit_2(work, capsys):
    assert run("estimate") == 2
    assert "--model-encoder" in capsys.readouterr().err
    assert run("frobnicate") == 2
    assert run("generate", "--kind", "torus", "--n", "10", "--out", "x.xyz") == 2
    assert run("generate", "--kind", "cube", "--n", "-5", "--out", "x.xyz") == 2
    assert run("generate", "--kind", "cube", "--n", "50", "--out", "x.xyz") == 2  # n < 100
    assert run("generate", "--kind", "cube", "--n", "500", "--out", "nodir/x.xyz") == 2
    assert run("evaluate", "--methods", "ours", "--shapes", "cube:300:1") == 2
    assert run("train-estimator", "--out", "e.bin") == 2


def test_bad_config_is_a_usage_error(work):
    (work / "bad.cfg").write_text("learning_rate = 3\n")
    assert run("train-encoder", "--config", "bad.cfg", "--out", "e.bin") == 2


def test_data_errors_exit_3(work, capsys):
    assert run("estimate", "--model-encoder", "a", "--model-estimator", "b",
               "--input", "none.xyz", "--out", "o.xyzn") == 3
    (work / "bad.xyz").write_text("1 2 3\n4 5\n")
    assert run("corrupt", "--input", "bad.xyz", "--level", "0.01", "--out", "o.xyz") == 3
    assert "bad.xyz:2" in capsys.readouterr().err
    (work / "w.bin").write_bytes(b"junk")
    run("generate", "--kind", "sphere", "--n", "200", "--out", "s.xyz")
    assert run("estimate", "--model-encoder", "w.bin", "--model-estimator", "w.bin",
               "--input", "s.xyz", "--out", "o.xyzn") == 3


def test_evaluate_pca_without_model(work, capsys):
    run("generate", "--kind", "cube", "--n", "1000", "--out", "cube.xyzn")
    capsys.readouterr()
    assert run("evaluate", "--methods", "pca-baseline", "--shapes", "cube.xyzn",
               "--noise", "0,0.005") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("method,shape,noise_level,n_points,msae_rad2")
    assert len(out) == 3


def test_corrupt_is_seeded(work):
    run("generate", "--kind", "sphere", "--n", "300", "--out", "s.xyzn")
    for name in ("a", "b"):
        assert run("corrupt", "--input", "s.xyzn", "--level", "0.01", "--out", f"{name}.xyzn",
                   "--seed", "3") == 0
    assert (work / "a.xyzn").read_bytes() == (work / "b.xyzn").read_bytes()
    a, s = load_cloud(work / "a.xyzn"), load_cloud(work / "s.xyzn")
    assert np.array_equal(a.normals, s.normals) and not np.array_equal(a.points, s.points)


def test_full_pipeline_and_no_stray_files(work, capsys):
    steps = [
        ("train-encoder", "--config", "tiny.cfg", "--out", "enc.bin", "--history", "enc.csv"),
        ("train-estimator", "--config", "tiny.cfg", "--encoder", "enc.bin", "--out", "est.bin",
         "--checkpoint", "est.ckpt"),
        ("train-estimator", "--config", "tiny.cfg", "--no-encoder", "--out", "abl.bin",
         "--out-encoder", "abl_enc.bin"),
        ("generate", "--kind", "cube", "--n", "600", "--out", "test.xyzn", "--seed", "42"),
        ("estimate", "--config", "tiny.cfg", "--model-encoder", "enc.bin",
         "--model-estimator", "est.bin", "--input", "test.xyzn", "--out", "pred.xyzn",
         "--flags-out", "flags.txt"),
        ("evaluate", "--config", "tiny.cfg", "--methods", "ours,ours-no-encoder,pca-baseline",
         "--shapes", "test.xyzn", "--noise", "0", "--model-encoder", "enc.bin",
         "--model-estimator", "est.bin", "--ablation-encoder", "abl_enc.bin",
         "--ablation-estimator", "abl.bin", "--csv", "eval.csv"),
    ]
    for argv in steps:
        assert run(*argv) == 0, argv
    produced = {p.name for p in work.iterdir()}
    assert produced == {"tiny.cfg", "enc.bin", "enc.csv", "est.bin", "est.ckpt", "abl.bin",
                        "abl_enc.bin", "test.xyzn", "pred.xyzn", "flags.txt", "eval.csv"}
    pred = load_cloud(work / "pred.xyzn")
    assert len(pred) == 600 and np.allclose(np.linalg.norm(pred.normals, axis=1), 1, atol=1e-6)
    assert len((work / "eval.csv").read_text().splitlines()) == 4
    assert "MSAE" in capsys.readouterr().out


def test_training_is_deterministic_and_seed_flag_wins(work):
    for name in ("a.bin", "b.bin"):
        assert run("train-encoder", "--config", "tiny.cfg", "--out", name, "--seed", "5") == 0
    assert (work / "a.bin").read_bytes() == (work / "b.bin").read_bytes()
    (work / "seeded.cfg").write_text(TINY + "seed = 5\n")
    assert run("train-encoder", "--config", "seeded.cfg", "--out", "c.bin", "--seed", "6") == 0
    assert EncoderNet.load(work / "c.bin").digest() != EncoderNet.load(work / "a.bin").digest()
    assert run("train-encoder", "--config", "seeded.cfg", "--out", "d.bin") == 0
    assert (work / "d.bin").read_bytes() == (work / "a.bin").read_bytes()


def test_ablations(work, capsys):
    assert run("ablate-exponent", "--config", "tiny.cfg", "--exponents", "2,8") == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 3 and "exponent" in out[0]
    assert run("ablate-exponent", "--config", "tiny.cfg", "--exponents", "3") == 2
    assert run("ablate-patch-size", "--config", "tiny.cfg", "--sizes", "0.1:8",
               "--shapes", "cube:500:77", "--noise", "0") == 0
    assert len(capsys.readouterr().out.splitlines()) == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "tripnorm", "--version"], capture_output=True,
                         text=True, env=dict(os.environ))
    assert out.returncode == 0 and out.stdout.startswith("tripnorm ")


def test_divergent_training_exits_4(work, capsys):
    (work / "hot.cfg").write_text(TINY.replace("encoder_epochs = 1", "encoder_epochs = 3")
                                  + "lr = 1e200\n")
    with np.errstate(all="ignore"):
        code = run("train-encoder", "--config", "hot.cfg", "--out", "e.bin")
    assert code == 4
    assert "numeric" in capsys.readouterr().err
    assert not (work / "e.bin").exists()
