import json

import numpy as np
import pytest

from wake_radon.cli import main
from wake_radon.image_io import read_image

FAST = ["--max-iter", "5", "--set", "size=32"]


@pytest.fixture
def scenes(tmp_path):
    out = tmp_path / "scenes"
    assert main(["simulate", "-o", str(out), "--set", "size=32"]) == 0
    return out


def test_simulate_writes_suite(scenes):
    files = sorted(p.name for p in scenes.iterdir())
    assert files == ["manifest.json"] + [f"row{i}.raw" for i in range(1, 7)]
    manifest = json.loads((scenes / "manifest.json").read_text())
    rows = [sum(s["visibility"].values()) for s in manifest["scenes"]]
    assert rows == [2, 2, 3, 3, 2, 2]


def test_seed_changes_pixels_not_manifest(tmp_path, scenes):
    other = tmp_path / "other"
    assert main(["simulate", "-o", str(other), "--seed", "9", "--set", "size=32"]) == 0
    assert (scenes / "manifest.json").read_bytes() == (other / "manifest.json").read_bytes()
    assert not np.array_equal(read_image(scenes / "row1.raw"), read_image(other / "row1.raw"))


def test_simulate_blank(tmp_path):
    out = tmp_path / "blank"
    assert main(["simulate", "-o", str(out), "--set", "scene=blank", "--set", "size=32"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["scenes"][0]["visibility"] == dict.fromkeys(
        ["turbulent", "narrow_v_1", "narrow_v_2", "kelvin_1", "kelvin_2"], 0)


def test_simulate_png(tmp_path):
    out = tmp_path / "png"
    assert main(["simulate", "-o", str(out), "--image-format", "png", "--set", "size=32"]) == 0
    assert read_image(out / "row1.png").shape == (32, 32)


def test_detect_is_byte_identical(tmp_path, scenes):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    args = ["detect", str(scenes / "row4.raw"), "--max-iter", "5"]
    assert main(args + ["-o", str(a), "--overlay", str(tmp_path / "ov.png")]) == 0
    assert main(args + ["-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "ov.png").exists()
    text = a.read_text()
    for section in ("[run]", "[slots]", "[solver]", "[config]"):
        assert section in text
    assert "wall_time" not in text


def test_detect_json_and_replay(tmp_path, scenes):
    rep = tmp_path / "r.json"
    assert main(["detect", str(scenes / "row3.raw"), "--format", "json", "--seed", "4",
                 "--max-iter", "7", "-o", str(rep)]) == 0
    doc = json.loads(rep.read_text())
    assert doc["config"]["seed"] == 4 and doc["config"]["max_iter"] == 7
    assert set(doc["detection"]["detected"]) == {
        "turbulent", "narrow_v_1", "narrow_v_2", "kelvin_1", "kelvin_2"}
    # replay from the embedded configuration alone
    cfg = tmp_path / "replay.cfg"
    cfg.write_text("".join(f"{k} = {v}\n" for k, v in doc["config"].items()))
    rep2 = tmp_path / "r2.json"
    assert main(["detect", str(scenes / "row3.raw"), "--config", str(cfg),
                 "--format", "json", "-o", str(rep2)]) == 0
    assert rep.read_bytes() == rep2.read_bytes()


def test_truncated_input(tmp_path, scenes, capsys):
    data = (scenes / "row1.raw").read_bytes()
    bad = tmp_path / "bad.raw"
    bad.write_bytes(data[:100])
    out = tmp_path / "rep.txt"
    assert main(["detect", str(bad), "-o", str(out)]) == 2
    assert not out.exists()
    assert "truncated" in capsys.readouterr().err


def test_non_square_input(tmp_path):
    p = tmp_path / "wide.pgm"
    p.write_bytes(b"P5\n4 2\n255\n" + bytes(8))
    assert main(["detect", str(p)]) == 2


@pytest.mark.parametrize("argv", [
    [],
    ["detect"],
    ["frobnicate"],
    ["detect", "x.raw", "--delta-over-L", "0.5"],
    ["benchmark", "--set", "nokey=1"],
    ["benchmark", "--set", "gamma"],
])
def test_usage_errors(argv, tmp_path, capsys):
    assert main(argv) == 1


def test_help_documents_defaults(capsys):
    with pytest.raises(SystemExit) as info:
        main(["detect", "--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    assert "delta_over_L" in out and "default 0.04" in out and "turbulent_margin" in out


def test_stage_failure_exit_code(tmp_path, scenes, capsys):
    rc = main(["detect", str(scenes / "row1.raw"), "--set", "mask_radius=100"])
    assert rc == 1
    assert "mask_ship" in capsys.readouterr().err


def test_selftest_exit_codes(capsys):
    assert main(["selftest"]) == 0
    assert "PASS prox_oracle" in capsys.readouterr().out
    assert main(["selftest", "--perturb-prox", "0.01"]) == 3
    err = capsys.readouterr().err
    assert "cauchy_prox_scalar" in err


def test_benchmark_small(tmp_path):
    out = tmp_path / "bench.json"
    assert main(["benchmark", "--seeds", "0", "--format", "json", "-o", str(out)] + FAST) == 0
    doc = json.loads(out.read_text())
    b = doc["benchmark"]
    assert b["evaluated_slots"] == 30
    assert sum(b["counts"].values()) == 30
    assert len(b["scenes"]) == 6
