import json
import math
from pathlib import Path

import numpy as np
import pytest

import msense

ROOT = Path(__file__).resolve().parents[2]


def test_backproject_and_project():
    k = msense.Intrinsics(100, 100, 50, 50, 100, 100)
    p = msense.backproject(150, 150, 2.0, k)
    assert np.allclose(p, [2, 2, 2])
    u, v, z = msense.project(p, k)
    assert (u, v, z) == pytest.approx((150, 150, 2))


def test_invalid_depth_raises_with_code():
    k = msense.Intrinsics(700, 700, 640, 360, 1280, 720)
    with pytest.raises(msense.Error) as info:
        msense.backproject(640, 360, 25.0, k)
    assert info.value.code == "invalid-depth"


def test_estimate_rigid_quarter_turn():
    src = np.eye(3)
    src = np.vstack([src, [[0, 0, 0]]])
    rz = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]], dtype=float)
    t = msense.estimate_rigid(src, src @ rz.T)
    assert np.allclose(t.rotation, rz, atol=1e-12)
    assert np.allclose(t.translation, 0, atol=1e-12)


def test_icp_identity():
    rng = np.random.default_rng(0)
    pts = np.vstack([
        np.column_stack([rng.uniform(0, 2, 2000), np.zeros(2000), rng.uniform(0, 1.5, 2000)]),
        np.column_stack([np.zeros(2000), rng.uniform(0, 2, 2000), rng.uniform(0, 1.5, 2000)]),
        np.column_stack([rng.uniform(0, 2, 2000), rng.uniform(0, 1.5, 2000), np.zeros(2000)]),
    ])
    r = msense.icp_refine(pts, pts)
    assert r.converged
    assert r.rms_residual == pytest.approx(0.0, abs=1e-12)


def test_tracker_confirms_one_track():
    tr = msense.Tracker()
    for f in range(3):
        tracks = tr.step(np.array([[1.0, 2.0, 0.9]]), 0.1 * f)
    assert len(tracks) == 1
    assert tracks[0].status == "confirmed"


def test_rule_traces():
    appr = msense.Rule("a", "approach")
    appr.window_k = 3
    appr.min_step = 0.1
    ev = msense.eval_approach(appr, [3.0, 2.5, 2.1, 1.8])
    assert len(ev) == 1 and ev[0]["kind"] == "ApproachDetected"

    lvl = msense.Rule("l", "distance_level")
    lvl.d_min, lvl.d_max = 0.5, 5.0
    assert msense.distance_level(lvl, 0.5) == 0.0
    assert msense.distance_level(lvl, 5.0) == 1.0
    assert msense.distance_level(lvl, 2.75) == pytest.approx(0.5)


def test_zone_contains():
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    assert msense.zone_contains(sq, 0, 2, [0.5, 0.5, 1])
    assert not msense.zone_contains(sq, 0, 2, [0.5, 0.5, 2.0])


def test_render_and_depth_file_round_trip(tmp_path):
    k = msense.Intrinsics(700, 700, 640, 360, 1280, 720)
    depth = msense.render_spheres(k, msense.Transform(), [(0, 0, 5, 0.5)])
    assert depth.shape == (720, 1280)
    assert depth[360, 640] == pytest.approx(4.5, rel=1e-6)
    path = tmp_path / "d.dpt"
    msense.write_depth(str(path), depth)
    assert path.stat().st_size == 12 + 4 * 1280 * 720
    back = msense.read_depth(str(path))
    assert np.array_equal(np.isnan(back), np.isnan(depth))
    assert np.array_equal(back[~np.isnan(back)], depth[~np.isnan(depth)])
    c = msense.bbox_to_centroid(depth, (640 - 20, 360 - 20, 40, 40), k)
    # median over a curved patch lies just behind the nearest point
    assert 4.5 < c[2] < 4.52


def test_heat_colors():
    assert msense.heat_color(0.1) == (0, 255, 0)
    assert msense.heat_color(1.5) == (255, 0, 0)


def test_simulate_and_replay(tmp_path):
    code, out, err = msense.cli_simulate(str(ROOT / "configs" / "site.json"), str(tmp_path / "sim"), duration=3.0)
    assert code == 0, err
    stats = json.loads((tmp_path / "sim" / "stats.json").read_text())
    assert stats["frames"] == 31
    code, out, err = msense.cli_run(str(ROOT / "configs" / "site.json"), str(tmp_path / "sim" / "input"),
                                    str(tmp_path / "replay"))
    assert code == 0, err
    assert (tmp_path / "replay" / "events.jsonl").read_bytes() == (tmp_path / "sim" / "events.jsonl").read_bytes()


def test_unknown_key_is_a_config_error(tmp_path):
    cfg = json.loads((ROOT / "configs" / "site.json").read_text())
    cfg["zonez"] = []
    (tmp_path / "bad.json").write_text(json.dumps(cfg))
    code, _, err = msense.cli_run(str(tmp_path / "bad.json"), str(tmp_path), str(tmp_path / "out"))
    assert code == 2
    assert "zonez" in err


def test_accuracy_noise_off_all_green():
    res = msense.run_accuracy()
    assert set(res) >= {"noise_off", "average"}
    assert all(c["abs_error"] < 0.3 for c in res["noise_off"])
    assert not any(math.isnan(c["abs_error"]) for c in res["noise_off"])
