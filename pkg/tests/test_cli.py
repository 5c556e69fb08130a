import json

import numpy as np
import pytest
from scipy.integrate import quad

from fisherpose import body, cli, fileio, so3
from fisherpose.body import forward_kinematics
from fisherpose.pipeline import eval_report, modes_and_kappa


def run(*argv):
    return cli.main([str(a) for a in argv])


def write_pose(path, rotations, skeleton="default", beta=None):
    doc = {"skeleton": skeleton, "frames": [{"rotations": fileio.matrices_to_rows(r)} for r in rotations]}
    if beta is not None:
        doc["beta"] = list(beta)
    fileio.write_json(path, doc)
    return path


def write_fisher(path, params):
    fileio.write_json(path, fileio.fisher_doc(np.asarray(params)))
    return path


TWO_JOINT = {"joints": [
    {"name": "root", "parent": None, "rest_offset": [0, 0, 0]},
    {"name": "tip", "parent": 0, "rest_offset": [1, 0, 0]},
]}


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / "synth"
    assert run("synth", "--n-frames", 20, "--seed", 7, "--out", out) == 0
    return out


class TestFisher:
    def test_fit_round_trip(self, tmp_path):
        f = write_fisher(tmp_path / "f.json", [[5 * np.eye(3)]])
        assert run("fisher", "sample", f, "-n", 10_000, "--seed", 1, "--out", tmp_path / "s.json") == 0
        assert run("fisher", "fit", tmp_path / "s.json", "--out", tmp_path / "fit.json", "--log", tmp_path / "log.csv") == 0
        fitted = fileio.load_fisher_file(tmp_path / "fit.json")[0, 0]
        mode, kappa = modes_and_kappa(fitted)
        assert np.rad2deg(so3.geodesic_distance(mode, np.eye(3))) < 2
        np.testing.assert_allclose(kappa, 10, rtol=0.1)
        trace = np.loadtxt(tmp_path / "log.csv", delimiter=",", skiprows=1)[:, 1]
        assert np.all(np.diff(trace) <= 0)

    def test_fit_degenerate_warns(self, tmp_path, caplog):
        r0 = so3.rot_from_axis_angle([0, 0, 1], 0.7)
        fileio.write_json(tmp_path / "s.json", {"rotations": fileio.matrices_to_rows([r0] * 20)})
        code = run("fisher", "fit", tmp_path / "s.json", "--out", tmp_path / "fit.json")
        assert code in (0, 3)
        assert "cap" in caplog.text
        mode, _ = modes_and_kappa(fileio.load_fisher_file(tmp_path / "fit.json")[0, 0])
        assert so3.geodesic_distance(mode, r0) < 1e-3

    def test_fit_nonconvergence_exit_code(self, tmp_path):
        f = write_fisher(tmp_path / "f.json", [[5 * np.eye(3)]])
        run("fisher", "sample", f, "-n", 500, "--out", tmp_path / "s.json")
        assert run("fisher", "fit", tmp_path / "s.json", "--max-iters", 1, "--out", tmp_path / "fit.json") == 3
        assert (tmp_path / "fit.json").exists()

    def test_sample_uniform_mean(self, tmp_path):
        f = write_fisher(tmp_path / "f.json", [[np.zeros((3, 3))]])
        run("fisher", "sample", f, "-n", 100_000, "--seed", 3, "--out", tmp_path / "s.json")
        r = fileio.load_rotation_samples(tmp_path / "s.json")
        assert np.abs(r.mean(axis=0)).max() < 0.01

    def test_sample_concentrated(self, tmp_path):
        s = 50.0
        f = write_fisher(tmp_path / "f.json", [[s * np.eye(3)]])
        run("fisher", "sample", f, "-n", 20_000, "--seed", 4, "--out", tmp_path / "s.json")
        ang = so3.geodesic_distance(fileio.load_rotation_samples(tmp_path / "s.json"), np.eye(3))
        # angle density under exp(s tr R) with Haar weight (1 - cos t)
        w = lambda t: np.exp(2 * s * (np.cos(t) - 1)) * (1 - np.cos(t))
        expected = quad(lambda t: t * w(t), 0, np.pi)[0] / quad(w, 0, np.pi)[0]
        assert abs(ang.mean() - expected) < 4 * ang.std() / np.sqrt(ang.size)

    def test_info(self, tmp_path, rng):
        rand = rng.normal(size=(3, 3)) * 4
        f = write_fisher(tmp_path / "f.json", [[np.zeros((3, 3)), np.diag([3.0, 2, 1]), rand]])
        run("fisher", "info", f, "--out", tmp_path / "i.json")
        zero, diag, r = json.loads((tmp_path / "i.json").read_text())["frames"][0]["joints"]
        assert zero["kappa"] == [0, 0, 0] and zero["total_concentration"] == 0 and zero["log_c"] == 0
        np.testing.assert_allclose(diag["kappa"], [3, 4, 5])
        assert diag["total_concentration"] == pytest.approx(12)
        s = so3.proper_svd(rand).s
        assert r["total_concentration"] == pytest.approx(2 * s.sum(), abs=1e-9)
        assert r["negative_s3"] == bool(s[2] < 0)

    def test_info_reports_bad_joint(self, tmp_path):
        f = write_fisher(tmp_path / "f.json", [[np.eye(3), 1000 * np.eye(3)]])
        assert run("fisher", "info", f, "--out", tmp_path / "i.json") == 0
        joints = json.loads((tmp_path / "i.json").read_text())["frames"][0]["joints"]
        assert "kappa" in joints[0] and "error" in joints[1]


class TestFK:
    def test_identity_default(self, tmp_path):
        tree = body.default_tree()
        p = write_pose(tmp_path / "p.json", [np.tile(np.eye(3), (len(tree), 1, 1))])
        run("fk", p, "--out", tmp_path / "o.json")
        pos = np.array(json.loads((tmp_path / "o.json").read_text())["frames"][0]["positions"])
        # identity pose: cumulative offsets along the parent chain
        cum = np.zeros_like(pos)
        for i, j in enumerate(tree.joints):
            cum[i] = j.rest_offset + (cum[j.parent] if j.parent is not None else 0)
        np.testing.assert_allclose(pos, cum, atol=1e-15)

    def test_two_joint_quarter_turn(self, tmp_path):
        rz = so3.rot_from_axis_angle([0, 0, 1], np.pi / 2)
        p = write_pose(tmp_path / "p.json", [[rz, np.eye(3)]], skeleton=TWO_JOINT)
        run("fk", p, "--out", tmp_path / "o.json")
        pos = json.loads((tmp_path / "o.json").read_text())["frames"][0]["positions"]
        np.testing.assert_allclose(pos[1], [0, 1, 0], atol=1e-15)

    def test_matches_library(self, tmp_path, rng):
        tree = body.default_tree()
        rot = so3.random_uniform_rotation(rng, (3, len(tree)))
        beta = rng.uniform(-2, 2, 10)
        p = write_pose(tmp_path / "p.json", rot, beta=beta)
        run("fk", p, "--out", tmp_path / "o.json")
        frames = json.loads((tmp_path / "o.json").read_text())["frames"]
        lib = forward_kinematics(tree, fileio.load_pose_file(p).rotations, beta).positions
        np.testing.assert_array_equal(np.array([f["positions"] for f in frames]), lib)

    def test_bad_skeleton_exit_code(self, tmp_path):
        bad = {"joints": [{"name": "a", "parent": 1, "rest_offset": [0, 0, 0]},
                          {"name": "b", "parent": 0, "rest_offset": [0, 0, 0]}]}
        p = write_pose(tmp_path / "p.json", [[np.eye(3), np.eye(3)]], skeleton=bad)
        assert run("fk", p) == 2

    def test_non_rotation_exit_code(self, tmp_path):
        p = write_pose(tmp_path / "p.json", [[2 * np.eye(3), np.eye(3)]], skeleton=TWO_JOINT)
        assert run("fk", p) == 2

    def test_reprojects_small_deviation(self, tmp_path, caplog):
        r = np.eye(3) + 1e-8 * np.arange(9).reshape(3, 3)
        p = write_pose(tmp_path / "p.json", [[r, np.eye(3)]], skeleton=TWO_JOINT)
        assert run("fk", p, "--out", tmp_path / "o.json") == 0
        assert "re-orthonormalized" in caplog.text


class TestEval:
    def test_equal_files(self, synth_dir, tmp_path):
        gt = synth_dir / "gt_pose.json"
        run("eval", gt, gt, "--out", tmp_path / "e.json")
        rep = json.loads((tmp_path / "e.json").read_text())
        for metric in ("mpjpe", "pa_mpjpe"):
            assert all(v < 1e-9 for v in rep["aggregate"][metric].values())
        assert set(rep["aggregate"]["mpjpe"]) == {"overall", "upper", "lower", "hands"}

    def test_aggregate_is_frame_mean(self, tmp_path, rng):
        tree = body.default_tree()
        a, b = (write_pose(tmp_path / f"{n}.json", so3.random_uniform_rotation(rng, (4, len(tree)))) for n in "ab")
        run("eval", a, b, "--out", tmp_path / "e.json")
        rep = json.loads((tmp_path / "e.json").read_text())
        for metric, groups in rep["aggregate"].items():
            for g, v in groups.items():
                assert v == pytest.approx(np.mean([f[metric][g] for f in rep["frames"]]), abs=1e-9)

    def test_similarity_injection(self, rng):
        tree = body.default_tree()
        gt = forward_kinematics(tree, so3.random_uniform_rotation(rng, (3, len(tree))), None).positions
        g = so3.random_uniform_rotation(rng)
        pred = 1.3 * gt @ g.T + [0.1, 0.2, 0.3]
        rep = eval_report(tree, pred, gt)
        assert all(v < 1e-6 for v in rep["aggregate"]["pa_mpjpe"].values())
        assert all(v > 0 for v in rep["aggregate"]["mpjpe"].values())

    def test_rigid_flag(self, rng):
        tree = body.default_tree()
        gt = forward_kinematics(tree, so3.random_uniform_rotation(rng, (1, len(tree))), None).positions
        rep = eval_report(tree, 1.3 * gt, gt, with_scale=False)
        assert rep["aggregate"]["pa_mpjpe"]["overall"] > 1

    def test_skeleton_mismatch(self, tmp_path, synth_dir):
        other = write_pose(tmp_path / "o.json", [[np.eye(3), np.eye(3)]], skeleton=TWO_JOINT)
        assert run("eval", other, synth_dir / "gt_pose.json") == 2

    def test_zero_noise_profile(self, tmp_path):
        out = tmp_path / "z"
        run("synth", "--n-frames", 5, "--noise-profile", "c=0", "--out", out)
        params = fileio.load_fisher_file(out / "pred_fisher.json")
        gt = fileio.load_pose_file(out / "gt_pose.json")
        modes, _ = modes_and_kappa(params)
        np.testing.assert_allclose(modes, gt.rotations, atol=1e-12)
        fk = lambda r: forward_kinematics(gt.tree, r, None).positions
        assert eval_report(gt.tree, fk(modes), fk(gt.rotations))["aggregate"]["mpjpe"]["overall"] < 1e-9

    def test_synth_eval_positive(self, synth_dir, tmp_path):
        params = fileio.load_fisher_file(synth_dir / "pred_fisher.json")
        modes, _ = modes_and_kappa(params)
        write_pose(tmp_path / "pred.json", modes)
        run("eval", tmp_path / "pred.json", synth_dir / "gt_pose.json", "--out", tmp_path / "e.json")
        assert json.loads((tmp_path / "e.json").read_text())["aggregate"]["mpjpe"]["overall"] > 0


class TestReliability:
    def test_two_pairs_via_files(self, tmp_path):
        # one root joint, so rotation error is the only error; K = 6s for F = s I
        tree = {"joints": [{"name": "r", "parent": None, "rest_offset": [0, 0, 0]}]}
        gt = [[so3.rot_from_axis_angle([0, 0, 1], np.deg2rad(10))], [so3.rot_from_axis_angle([0, 0, 1], np.deg2rad(20))]]
        write_pose(tmp_path / "gt.json", gt, skeleton=tree)
        write_fisher(tmp_path / "f.json", [[np.zeros((3, 3))], [np.eye(3) / 6]])
        run("reliability", tmp_path / "f.json", tmp_path / "gt.json", "--bins", 2, "--k-range", 0, 2,
            "--error", "rotation", "--out", tmp_path / "r.csv")
        rows = [r.split(",") for r in (tmp_path / "r.csv").read_text().splitlines()[1:]]
        assert [int(r[2]) for r in rows] == [1, 1]
        np.testing.assert_allclose([float(r[4]) for r in rows], [10, 20], atol=1e-9)

    def test_single_bin(self, synth_dir, tmp_path):
        run("reliability", synth_dir / "pred_fisher.json", synth_dir / "gt_pose.json", "--bins", 1, "--out", tmp_path / "r.csv")
        rows = (tmp_path / "r.csv").read_text().splitlines()
        assert len(rows) == 2 and int(rows[1].split(",")[2]) == 20 * 54

    def test_whole_body_mode(self, synth_dir, tmp_path, capsys):
        run("reliability", synth_dir / "pred_fisher.json", synth_dir / "gt_pose.json", "--mode", "whole-body",
            "--out", tmp_path / "r.csv")
        stats = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert stats["pairs"] == 20

    def test_rotation_error_correlates(self, synth_dir, tmp_path, capsys):
        run("reliability", synth_dir / "pred_fisher.json", synth_dir / "gt_pose.json", "--error", "rotation",
            "--out", tmp_path / "r.csv")
        stats = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert stats["spearman"] < -0.5


class TestPropagate:
    def test_zero_offset_root(self, tmp_path):
        tree = {"joints": [{"name": "r", "parent": None, "rest_offset": [0, 0, 0]}]}
        sk = tmp_path / "sk.json"
        sk.write_text(json.dumps(tree))
        f = write_fisher(tmp_path / "f.json", [[np.eye(3)]])
        run("propagate", f, "--skeleton", sk, "--out", tmp_path / "p.json")
        assert json.loads((tmp_path / "p.json").read_text())["frames"][0]["pos_std_mm"] == [0.0]

    def test_joint_count_mismatch(self, tmp_path):
        f = write_fisher(tmp_path / "f.json", [[np.eye(3)]])
        assert run("propagate", f) == 2


class TestSynth:
    def test_files(self, synth_dir):
        gt = fileio.load_pose_file(synth_dir / "gt_pose.json")
        assert gt.rotations.shape == (20, 54, 3, 3)
        assert fileio.load_fisher_file(synth_dir / "pred_fisher.json").shape == (20, 54, 3, 3)

    def test_bad_profile(self, tmp_path):
        assert run("synth", "--noise-profile", "bogus=1", "--out", tmp_path) == 2


def test_every_command_is_byte_identical(tmp_path, synth_dir):
    gt, pred = synth_dir / "gt_pose.json", synth_dir / "pred_fisher.json"
    small = write_fisher(tmp_path / "small.json", fileio.load_fisher_file(pred)[:2, :3])
    commands = [
        ("fisher", "sample", small, "-n", 50, "--seed", 5),
        ("fisher", "info", small),
        ("fk", gt),
        ("eval", gt, gt),
        ("reliability", pred, gt),
        ("propagate", pred, "--seed", 5),
    ]
    for i, cmd in enumerate(commands):
        outs = []
        for rep in range(2):
            out = tmp_path / f"{i}_{rep}.out"
            assert run(*cmd, "--out", out) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1], cmd
    run("fisher", "sample", small, "-n", 200, "--out", tmp_path / "s.json")
    fits = []
    for rep in range(2):
        run("fisher", "fit", tmp_path / "s.json", "--out", tmp_path / f"fit{rep}.json", "--log", tmp_path / f"log{rep}.csv")
        fits.append((tmp_path / f"fit{rep}.json").read_bytes() + (tmp_path / f"log{rep}.csv").read_bytes())
    assert fits[0] == fits[1]
    run("synth", "--n-frames", 20, "--seed", 7, "--out", tmp_path / "again")
    for name in ("gt_pose.json", "pred_fisher.json"):
        assert (tmp_path / "again" / name).read_bytes() == (synth_dir / name).read_bytes()
