import json
import subprocess
import sys

import pytest

from rlmtrack import geometry as geo
from rlmtrack import io as rio
from rlmtrack import synth
from rlmtrack.cli import main

CAM = synth.DEFAULT_CAMERA


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


@pytest.fixture
def scene(tmp_path, capsys):
    gt, dets, cam = tmp_path / "gt.txt", tmp_path / "dets.txt", tmp_path / "cam.txt"
    code, summary, _ = run(capsys, "synth", "--preset", "crossing", "--gt", gt, "--dets", dets, "--camera-out", cam)
    assert code == 0
    return tmp_path, summary


def test_synth_summary_and_determinism(scene, capsys):
    tmp, summary = scene
    assert summary["agents"] == 2 and summary["frames"] == 60
    assert len(summary["occluded_frames"]) == 5
    code, _, _ = run(capsys, "synth", "--preset", "crossing", "--gt", tmp / "gt2.txt", "--dets", tmp / "d2.txt")
    assert code == 0
    assert (tmp / "d2.txt").read_bytes() == (tmp / "dets.txt").read_bytes()
    assert rio.parse_camera_config((tmp / "cam.txt").read_text()) == CAM


def test_synth_from_spec(tmp_path, capsys):
    spec = {
        "agents": [{"start": [0, 5], "velocity": [0.01, 0]}, {"start": [1, 8], "velocity": [-0.01, 0]}],
        "n_frames": 12,
        "seed": 4,
    }
    (tmp_path / "s.json").write_text(json.dumps(spec))
    code, summary, _ = run(capsys, "synth", "--spec", tmp_path / "s.json", "--gt", tmp_path / "g", "--dets", tmp_path / "d")
    assert code == 0 and summary["gt_rows"] == 24 and summary["seed"] == 4
    (tmp_path / "p.json").write_text('{"preset": "lanes", "seed": 1}')
    code, summary, _ = run(capsys, "synth", "--spec", tmp_path / "p.json", "--gt", tmp_path / "g", "--dets", tmp_path / "d")
    assert code == 0 and summary["agents"] == 5


def test_synth_bad_spec(tmp_path, capsys):
    (tmp_path / "s.json").write_text('{"agents": [{}], "n_frames": 3}')
    code, _, err = run(capsys, "synth", "--spec", tmp_path / "s.json", "--gt", tmp_path / "g", "--dets", tmp_path / "d")
    assert code == 1 and "error" in err


def test_track_and_eval(scene, capsys):
    tmp, _ = scene
    code, summary, _ = run(capsys, "track", tmp / "dets.txt", "--camera", tmp / "cam.txt", "--out", tmp / "res.txt")
    assert code == 0
    assert summary["runs"][0]["tracks"] == 2
    assert summary["runs"][0]["frames"] == 60
    assert summary["ablation"] == {"no_density_modulation": False, "no_rlm": False, "threshold_mode": "as_written"}
    code, report, err = run(capsys, "eval", tmp / "gt.txt", tmp / "res.txt")
    assert code == 0 and report["id_switches"] == 0
    assert "mota" in err  # human table on stderr


def test_eval_identical_files(scene, capsys):
    tmp, _ = scene
    gt = rio.parse_mot_rows((tmp / "gt.txt").read_text(), gt=True)
    rio.write_text(tmp / "same.txt", rio.write_mot_results(sorted(gt, key=lambda r: (r.frame, r.id))))
    code, report, _ = run(capsys, "eval", tmp / "gt.txt", tmp / "same.txt")
    assert code == 0 and report["mota"] == 1.0 and report["idf1"] == 1.0


def test_eval_hand_case(tmp_path, capsys):
    box_a, box_b = "0,0,10,10", "100,0,10,10"
    gt = [f"{f},1,{box_a},1,1,1" for f in range(1, 6)] + [f"{f},2,{box_b},1,1,1" for f in range(1, 6)]
    hyp = (
        [f"{f},1,{box_a},1" for f in range(1, 6)]
        + [f"{f},2,{box_b},1" for f in (1, 2)]
        + [f"{f},3,{box_b},1" for f in (4, 5)]
        + ["5,4,500,0,10,10,1"]
    )
    (tmp_path / "gt").write_text("\n".join(gt) + "\n")
    (tmp_path / "hyp").write_text("\n".join(hyp) + "\n")
    code, report, _ = run(capsys, "eval", tmp_path / "gt", tmp_path / "hyp")
    assert code == 0
    assert report["mota"] == pytest.approx(0.7)
    assert report["id_switches"] == 1


def test_eval_missing_gt(tmp_path, capsys):
    (tmp_path / "res").write_text("")
    code, out, err = run(capsys, "eval", tmp_path / "nope.txt", tmp_path / "res")
    assert code == 1 and out is None
    assert "nope.txt" in err


def test_track_ablation_flags_echoed(scene, capsys):
    tmp, _ = scene
    code, summary, _ = run(
        capsys,
        "track",
        tmp / "dets.txt",
        "--camera",
        tmp / "cam.txt",
        "--out",
        tmp / "res.txt",
        "--no-rlm",
        "--no-density-modulation",
        "--threshold-mode",
        "inverse",
    )
    assert code == 0
    assert summary["ablation"] == {"no_density_modulation": True, "no_rlm": True, "threshold_mode": "inverse"}
    assert summary["config"]["use_rlm"] is False
    assert summary["config"]["noise"]["kappa_rho"] == 0.0


def test_track_config_file(scene, capsys):
    tmp, _ = scene
    (tmp / "cfg.json").write_text('{"max_age": 10, "stdbox": {"w_max": 150.0}}')
    code, summary, _ = run(
        capsys, "track", tmp / "dets.txt", "--camera", tmp / "cam.txt", "--out", tmp / "r.txt", "--config", tmp / "cfg.json"
    )
    assert code == 0 and summary["config"]["max_age"] == 10
    (tmp / "bad.json").write_text('{"max_agee": 10}')
    code, _, err = run(
        capsys, "track", tmp / "dets.txt", "--camera", tmp / "cam.txt", "--out", tmp / "r.txt", "--config", tmp / "bad.json"
    )
    assert code == 1 and "max_agee" in err


def test_track_empty_dets(scene, capsys):
    tmp, _ = scene
    (tmp / "empty.txt").write_text("")
    code, summary, _ = run(capsys, "track", tmp / "empty.txt", "--camera", tmp / "cam.txt", "--out", tmp / "r.txt")
    assert code == 0
    assert (tmp / "r.txt").read_text() == ""
    assert summary["runs"][0]["tracks"] == 0


def test_track_missing_camera(scene, capsys):
    tmp, _ = scene
    code, out, err = run(capsys, "track", tmp / "dets.txt", "--camera", tmp / "missing.cam", "--out", tmp / "r.txt")
    assert code == 1 and out is None
    assert "missing.cam" in err


def test_track_bad_dets_line(scene, capsys):
    tmp, _ = scene
    (tmp / "bad.txt").write_text("1,-1,0,0,10,10,0.9\n2,-1,x,0,10,10,0.9\n")
    code, _, err = run(capsys, "track", tmp / "bad.txt", "--camera", tmp / "cam.txt", "--out", tmp / "r.txt")
    assert code == 1 and "line 2" in err


def test_track_several_sequences_in_parallel(tmp_path, capsys):
    for seed in (0, 1):
        run(capsys, "synth", "--seed", seed, "--gt", tmp_path / f"gt{seed}", "--dets", tmp_path / f"seq{seed}.txt",
            "--camera-out", tmp_path / "cam.txt")
    dets = [tmp_path / "seq0.txt", tmp_path / "seq1.txt"]
    code, par, _ = run(capsys, "track", *dets, "--camera", tmp_path / "cam.txt", "--out", tmp_path / "out", "--jobs", 2)
    assert code == 0 and len(par["runs"]) == 2
    code, ser, _ = run(capsys, "track", *dets, "--camera", tmp_path / "cam.txt", "--out", tmp_path / "out1")
    for name in ("seq0.txt", "seq1.txt"):
        assert (tmp_path / "out" / name).read_text() == (tmp_path / "out1" / name).read_text()


def test_project_centerline_bottom(scene, capsys):
    tmp, _ = scene
    code, out, _ = run(capsys, "project", "--camera", tmp / "cam.txt", CAM.img_w / 2, 0)
    assert code == 0
    assert out["map"] == pytest.approx([CAM.img_w * geo.phi_max(CAM) / 2, 0.0])
    code, back, _ = run(capsys, "project", "--camera", tmp / "cam.txt", "--inverse", *out["map"])
    assert back["pixel"] == pytest.approx([CAM.img_w / 2, 0.0], abs=1e-6)


def test_project_above_horizon(scene, capsys):
    tmp, _ = scene
    code, _, err = run(capsys, "project", "--camera", tmp / "cam.txt", 10, CAM.img_h)
    assert code == 1 and "horizon" in err


def test_plot_one_polyline_per_id(scene, capsys):
    tmp, _ = scene
    run(capsys, "track", tmp / "dets.txt", "--camera", tmp / "cam.txt", "--out", tmp / "res.txt")
    code, out, _ = run(capsys, "plot", tmp / "res.txt", "--camera", tmp / "cam.txt", "--svg", tmp / "p.svg", "--csv", tmp / "p.csv")
    assert code == 0 and out["ids"] == [1, 2]
    svg = (tmp / "p.svg").read_text()
    assert svg.count("<polyline") == 2 * len(out["ids"])
    assert "image plane" in svg and "map plane" in svg
    lines = (tmp / "p.csv").read_text().splitlines()
    assert lines[0] == "id,frame,img_x,img_y,map_x,map_y"
    assert len(lines) - 1 == len(rio.parse_mot_rows((tmp / "res.txt").read_text()))


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rlmtrack", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "rlmtrack" in res.stdout
    res = subprocess.run([sys.executable, "-m", "rlmtrack"], capture_output=True, text=True)
    assert res.returncode != 0
