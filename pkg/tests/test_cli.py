import numpy as np
import pytest

from mpgi.cli import EXIT_CONFIG, EXIT_IO, EXIT_NO_TARGET, main
from mpgi.io import read_config, read_float_csv, read_pgm, read_record_csv, write_pgm
from mpgi.metrics import block_average
from mpgi.simulate import synthetic_scene


def outputs(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "manifest.ini"}


def test_acquire_minimal(tmp_path):
    assert main(["acquire", "--synthetic", "square", "--K", "3", "--M", "4", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "record.csv").read_text().splitlines()
    assert lines[0] == "m,bucket_value" and len(lines) == 5
    man = read_config(tmp_path / "manifest.ini")
    assert man["config"]["M"] == "4"
    assert man["outputs"]["files"] == "record.csv"
    assert "acquire_s" in man["timings"] and man["run"]["version"]


def test_acquire_deterministic(tmp_path):
    args = ["acquire", "--synthetic", "aircraft", "--K", "5", "--dsnr", "20", "--seed", "4"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert outputs(tmp_path / "a") == outputs(tmp_path / "b")


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[scene]\nsynthetic = bars\nK = 4\n[acquisition]\nM = 16\nmode = signed\n")
    assert main(["acquire", "--config", str(cfg), "--M", "8", "--out", str(tmp_path / "o")]) == 0
    man = read_config(tmp_path / "o" / "manifest.ini")["config"]
    assert man["M"] == "8" and man["mode"] == "signed" and man["synthetic"] == "bars"


def test_noisy_run_requires_seed(tmp_path):
    out = tmp_path / "o"
    assert main(["acquire", "--synthetic", "square", "--K", "3", "--dsnr", "10", "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()


@pytest.mark.parametrize("argv", [
    ["acquire", "--K", "3"],
    ["acquire", "--synthetic", "square", "--K", "3", "--M", "65"],
    ["acquire", "--synthetic", "teapot", "--K", "3"],
    ["acquire", "--scene", "missing.pgm"],
    ["acquire", "--synthetic", "square", "--K", "20"],
    ["acquire", "--config", "nope.ini", "--synthetic", "square", "--K", "3"],
])
def test_config_errors_write_nothing(tmp_path, argv):
    out = tmp_path / "o"
    assert main(argv + ["--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()


def test_pgm_scene_and_padding(tmp_path):
    img = np.zeros((6, 5))
    img[2:4, 1:3] = 1
    write_pgm(tmp_path / "s.pgm", img, 0, 1)
    out = tmp_path / "o"
    assert main(["acquire", "--scene", str(tmp_path / "s.pgm"), "--out", str(out)]) == 0
    assert read_config(out / "manifest.ini")["config"]["K"] == "3"
    assert main(["acquire", "--scene", str(tmp_path / "s.pgm"), "--K", "4", "--out", str(tmp_path / "p")]) == EXIT_CONFIG


def test_reconstruct_progressive_and_report(tmp_path):
    sc = synthetic_scene("aircraft", 5)
    write_pgm(tmp_path / "ref.pgm", sc.reflectance, 0, 1)
    assert main(["acquire", "--scene", str(tmp_path / "ref.pgm"), "--out", str(tmp_path / "a")]) == 0
    snap = tmp_path / "snaps"
    assert main(["reconstruct", str(tmp_path / "a" / "record.csv"), "--progressive",
                 "--snapshot-dir", str(snap), "--reference", str(tmp_path / "ref.pgm")]) == 0
    names = {p.name for p in snap.iterdir()}
    for t in range(6):
        assert f"tier_{t}_M{4 ** t}.pgm" in names and f"tier_{t}_M{4 ** t}.csv" in names
    assert "report.csv" in names
    ref = read_pgm(tmp_path / "ref.pgm")
    np.testing.assert_allclose(read_float_csv(snap / "tier_3_M64.csv"), block_average(ref, 3), atol=1e-12)
    report = (snap / "report.csv").read_text().splitlines()
    assert "tier,M,mse,psnr_db,pearson_r,achieved_dsnr_db" in report


def test_reconstruct_fast_vs_naive(tmp_path):
    assert main(["acquire", "--synthetic", "aircraft", "--K", "4", "--out", str(tmp_path / "a")]) == 0
    rec = str(tmp_path / "a" / "record.csv")
    assert main(["reconstruct", rec, "--fast", "--out", str(tmp_path / "f")]) == 0
    assert main(["reconstruct", rec, "--naive", "--out", str(tmp_path / "n")]) == 0
    f = read_float_csv(tmp_path / "f" / "tier_4_M256.csv")
    n = read_float_csv(tmp_path / "n" / "tier_4_M256.csv")
    assert np.corrcoef(f.ravel(), n.ravel())[0, 1] >= 1 - 1e-9
    assert not (tmp_path / "f" / "report.csv").exists()


def test_reconstruct_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("m,bucket_value\n0,1\n3,2\n")
    assert main(["reconstruct", str(bad), "--out", str(tmp_path / "o")]) == EXIT_IO
    bad.write_text("garbage\n")
    assert main(["reconstruct", str(bad), "--out", str(tmp_path / "o")]) == EXIT_IO
    assert main(["reconstruct", str(tmp_path / "none.csv")]) == EXIT_CONFIG
    assert not (tmp_path / "o").exists()


def test_roi_run_budget_and_exact_interior(tmp_path):
    img = np.full((128, 128), 0.05)
    img[36:60, 68:92] = 1.0
    write_pgm(tmp_path / "t.pgm", img, 0, 1)
    out = tmp_path / "roi"
    assert main(["roi-run", "--scene", str(tmp_path / "t.pgm"), "--lock-tier", "2", "--out", str(out)]) == 0
    budget = (out / "budget.csv").read_text()
    assert "mpgi_roi_total,1040" in budget and "full_frame_progressive,16384" in budget
    roi = read_config(out / "manifest.ini")["roi"]
    assert (roi["origin_row"], roi["origin_col"], roi["side"]) == ("32", "64", "32")
    comp = read_float_csv(out / "composite.csv")
    np.testing.assert_allclose(comp[32:64, 64:96], read_pgm(tmp_path / "t.pgm")[32:64, 64:96], atol=1e-12)


def test_roi_run_blank_scene(tmp_path):
    write_pgm(tmp_path / "b.pgm", np.full((32, 32), 0.5), 0, 1)
    out = tmp_path / "o"
    assert main(["roi-run", "--scene", str(tmp_path / "b.pgm"), "--out", str(out)]) == EXIT_NO_TARGET
    assert not out.exists()


def test_diagnose(capsys, tmp_path):
    assert main(["diagnose", "--K", "2"]) == 0
    assert capsys.readouterr().out.splitlines() == ["kappa,M,fwhm", "1,4,4", "2,16,1"]
    assert main(["diagnose", "--K", "3", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "fwhm.csv").read_text().splitlines()[1:] == ["1,4,16", "2,16,4", "3,64,1"]
    assert main(["diagnose", "--K", "6"]) == EXIT_CONFIG


def test_gen_patterns(tmp_path):
    assert main(["gen-patterns", "--K", "2", "--M", "4", "--mode", "differential", "--out", str(tmp_path)]) == 0
    pos = read_pgm(tmp_path / "pattern_000001_pos.pgm")
    neg = read_pgm(tmp_path / "pattern_000001_neg.pgm")
    assert np.array_equal(pos + neg, np.ones((4, 4)))
    assert len(list(tmp_path.glob("*.pgm"))) == 8
    assert main(["gen-patterns", "--K", "2", "--M", "4", "--mode", "binary_offset", "--out", str(tmp_path / "b")]) == 0
    assert len(list((tmp_path / "b").glob("*.pgm"))) == 4


def test_sweep(tmp_path):
    out = tmp_path / "s"
    assert main(["sweep", "--synthetic", "aircraft", "--K", "4", "--dsnr-list", "10,40",
                 "--seeds", "2", "--out", str(out)]) == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "dsnr_db,seed,tier,M,mse,psnr_db,pearson_r,achieved_dsnr_db"
    assert len(lines) == 1 + 2 * 2 * 5
    assert main(["sweep", "--synthetic", "aircraft", "--K", "4", "--seeds", "1", "--out", str(out / "x")]) == EXIT_CONFIG


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("MPGI_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["acquire", "--synthetic", "square", "--K", "2"]) == 0
    assert (tmp_path / "env" / "record.csv").is_file()


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "mpgi", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "mpgi" in res.stdout
