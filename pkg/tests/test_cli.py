import json
import subprocess
import sys

import numpy as np
import pytest

from subspace_superpixels.cli import (
    EXIT_INPUT,
    EXIT_NUMERICAL,
    EXIT_OK,
    build_parser,
    main,
    resolve_config,
)
from subspace_superpixels.io import read_image, read_labels, write_image, write_labels


@pytest.fixture
def quadrant_file(tmp_path, quadrants):
    path = tmp_path / "quad.png"
    write_image(path, quadrants.rgb)
    return path


def test_segment_success(tmp_path, quadrant_file, quadrant_gt, capsys):
    gt = tmp_path / "quad.gt0.png"
    write_labels(gt, quadrant_gt)
    out = tmp_path / "labels.csv"
    code = main([
        "segment", "--image", str(quadrant_file), "--k", "4", "--out", str(out),
        "--overlay", str(tmp_path / "ov.png"), "--overlay-color", "00ff00",
        "--gt", str(gt), "--plot",
    ])
    assert code == EXIT_OK
    stdout = capsys.readouterr().out
    assert "ASA 1.0000" in stdout and "BR 1.0000" in stdout
    labels = read_labels(out)
    assert labels.shape == (64, 64)
    report = json.loads((tmp_path / "labels.json").read_text())
    assert report["metrics"]["asa"] == 1.0
    overlay = read_image(tmp_path / "ov.png").rgb
    np.testing.assert_array_equal(overlay[31, 5], [0.0, 1.0, 0.0])
    assert (tmp_path / "labels.convergence.png").exists()


def test_overlay_command(tmp_path, quadrant_file, quadrant_gt):
    labels = tmp_path / "l.png"
    write_labels(labels, quadrant_gt)
    out = tmp_path / "o.png"
    assert main(["overlay", "--image", str(quadrant_file), "--labels", str(labels),
                 "--out", str(out)]) == EXIT_OK
    np.testing.assert_array_equal(read_image(out).rgb[10, 31], [1.0, 0.0, 0.0])


def test_missing_image_exits_2(tmp_path, capsys):
    code = main(["segment", "--image", str(tmp_path / "nope.png"), "--k", "4",
                 "--out", str(tmp_path / "l.png")])
    assert code == EXIT_INPUT
    assert capsys.readouterr().err.startswith("error [")


def test_invalid_config_exits_2(tmp_path, quadrant_file, capsys):
    code = main(["segment", "--image", str(quadrant_file), "--k", "4", "--rho", "0.5",
                 "--out", str(tmp_path / "l.png")])
    assert code == EXIT_INPUT
    assert "rho" in capsys.readouterr().err


def test_too_large_k_exits_2(tmp_path, quadrant_file, capsys):
    code = main(["segment", "--image", str(quadrant_file), "--k", "5000",
                 "--out", str(tmp_path / "l.png")])
    assert code == EXIT_INPUT


def test_numerical_failure_exits_3(tmp_path, quadrant_file, capsys):
    # explosive penalty growth overflows the Sylvester right-hand side
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"alpha_max": 1e308}))
    code = main(["segment", "--image", str(quadrant_file), "--k", "4", "--rho", "1e100",
                 "--config", str(config), "--out", str(tmp_path / "l.png")])
    err = capsys.readouterr().err
    assert code == EXIT_NUMERICAL, err
    assert err.startswith("error [U-update]")
    assert not (tmp_path / "l.png").exists()


def test_config_precedence(tmp_path):
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"k_superpixels": 9, "lambda1": 0.5, "seed": 4, "unit_ratio": 2}))
    parser = build_parser()

    from_file = resolve_config(parser.parse_args(
        ["segment", "--image", "x", "--out", "y", "--config", str(config)]))
    assert (from_file.k_superpixels, from_file.admm.lambda1, from_file.seed) == (9, 0.5, 4)
    assert from_file.admm.lambda2 == 1e-4

    flags = resolve_config(parser.parse_args(
        ["segment", "--image", "x", "--out", "y", "--config", str(config),
         "--k", "7", "--lambda1", "0.25", "--no-texture"]))
    assert (flags.k_superpixels, flags.admm.lambda1, flags.seed) == (7, 0.25, 4)
    assert flags.unit_ratio == 2 and flags.texture_features is False


def test_k_required(tmp_path, quadrant_file):
    assert main(["segment", "--image", str(quadrant_file),
                 "--out", str(tmp_path / "l.png")]) == EXIT_INPUT


def test_bad_config_file(tmp_path, quadrant_file):
    bad = tmp_path / "c.json"
    bad.write_text("{not json")
    assert main(["segment", "--image", str(quadrant_file), "--k", "4", "--config", str(bad),
                 "--out", str(tmp_path / "l.png")]) == EXIT_INPUT


def test_benchmark_command(tmp_path, quadrants, quadrant_gt, capsys):
    data = tmp_path / "data"
    data.mkdir()
    write_image(data / "q.png", quadrants.rgb)
    write_labels(data / "q.gt0.png", quadrant_gt)
    write_image(data / "lonely.png", quadrants.rgb)
    out = tmp_path / "bench"
    code = main(["benchmark", "--dataset", str(data), "--k-list", "4,8", "--out", str(out),
                 "--br-tol", "1", "--no-plot"])
    assert code == EXIT_OK
    captured = capsys.readouterr()
    assert "K=4" in captured.out and "K=8" in captured.out
    assert "skipped lonely.png" in captured.err
    result = json.loads((out / "benchmark.json").read_text())
    assert result["config"]["br_tolerance"] == 1
    assert [r["k"] for r in result["per_image"]] == [4, 8]
    assert not (out / "metrics_vs_k.png").exists()


@pytest.mark.parametrize("k_list", ["", "4,x", "0,3"])
def test_bad_k_list_is_a_usage_error(tmp_path, k_list):
    with pytest.raises(SystemExit) as info:
        main(["benchmark", "--dataset", str(tmp_path), "--k-list", k_list, "--out", str(tmp_path)])
    assert info.value.code == 2


def test_module_entry_point(tmp_path, quadrant_file):
    out = tmp_path / "l.png"
    proc = subprocess.run(
        [sys.executable, "-m", "subspace_superpixels", "segment", "--image", str(quadrant_file),
         "--k", "4", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
