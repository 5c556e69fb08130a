"""Frame-batched evaluation routines shared by the CLI and notebooks.

Everything here works on stacked arrays: Fisher parameters ``(T, N, 3, 3)``,
rotations ``(T, N, 3, 3)`` and positions ``(T, N, 3)`` in meters.
"""

import numpy as np

from . import fisher, so3
from .body import forward_kinematics
from .errors import InvalidArgumentError
from .metrics import MM, mpjpe, pa_mpjpe, propagate_uncertainty

GROUPS = (("upper", "upper"), ("lower", "lower"), ("hands", "hand"))


def modes_and_kappa(params):
    """Modes ``(..., 3, 3)`` and per-axis concentrations ``(..., 3)`` without building distributions."""
    f = so3.proper_svd(params)
    modes = f.u @ np.swapaxes(f.v, -1, -2)
    s = f.s
    kappa = np.stack([s[..., 1] + s[..., 2], s[..., 0] + s[..., 2], s[..., 0] + s[..., 1]], axis=-1)
    return modes, kappa


def joint_groups(tree):
    groups = {"overall": list(range(len(tree)))}
    for name, tag in GROUPS:
        idx = tree.indices_with_tag(tag)
        if idx:
            groups[name] = idx
    return groups


def eval_report(tree, pred_pos, gt_pos, with_scale=True, align_exclude=("hand",)):
    """MPJPE and PA-MPJPE (mm) per frame and per joint group, plus frame means.

    The alignment is fitted on joints carrying none of ``align_exclude``
    tags and applied to all joints.
    """
    pred_pos = np.asarray(pred_pos, dtype=float)
    gt_pos = np.asarray(gt_pos, dtype=float)
    if pred_pos.shape != gt_pos.shape:
        raise InvalidArgumentError(f"prediction/ground-truth shape mismatch {pred_pos.shape} vs {gt_pos.shape}")
    excluded = set(align_exclude or ())
    align = [i for i, j in enumerate(tree.joints) if not (j.tags & excluded)]
    groups = joint_groups(tree)
    frames = []
    for p, g in zip(pred_pos, gt_pos):
        frames.append(
            {
                "mpjpe": {k: mpjpe(p, g, idx) for k, idx in groups.items()},
                "pa_mpjpe": {k: pa_mpjpe(p, g, align, idx, with_scale) for k, idx in groups.items()},
            }
        )
    aggregate = {
        metric: {k: float(np.mean([f[metric][k] for f in frames])) for k in groups}
        for metric in ("mpjpe", "pa_mpjpe")
    }
    return {
        "units": "mm",
        "with_scale": bool(with_scale),
        "align_exclude_tags": sorted(excluded),
        "n_frames": len(frames),
        "aggregate": aggregate,
        "frames": frames,
    }


def reliability_pairs(tree, beta, params, gt_rotations, mode="per-joint", error="position"):
    """(confidence, error) pairs for reliability analysis.

    ``mode="per-joint"`` pairs every joint's total concentration with that
    joint's error; ``mode="whole-body"`` pairs the frame-mean total
    concentration with the frame error (MPJPE, or mean rotation error).
    ``error="position"`` measures world joint position error in mm after
    forward kinematics of the modes; ``error="rotation"`` measures the
    geodesic error of each joint's local rotation in degrees.
    """
    params = np.asarray(params, dtype=float)
    gt_rotations = np.asarray(gt_rotations, dtype=float)
    if params.shape != gt_rotations.shape:
        raise InvalidArgumentError(f"Fisher/pose shape mismatch {params.shape} vs {gt_rotations.shape}")
    modes, kappa = modes_and_kappa(params)
    k_total = kappa.sum(axis=-1)
    if error == "position":
        p = forward_kinematics(tree, modes, beta).positions
        g = forward_kinematics(tree, gt_rotations, beta).positions
        err = np.linalg.norm(p - g, axis=-1) * MM
    elif error == "rotation":
        err = np.rad2deg(so3.geodesic_distance(modes, gt_rotations))
    else:
        raise InvalidArgumentError(f"unknown error measure {error!r}")
    if mode == "per-joint":
        return k_total.ravel(), err.ravel()
    if mode == "whole-body":
        return k_total.mean(axis=1), err.mean(axis=1)
    raise InvalidArgumentError(f"unknown reliability mode {mode!r}")


def fisher_info(params):
    """Per-frame, per-joint summaries as plain dicts; failures are reported per joint."""
    out = []
    for frame in np.asarray(params, dtype=float):
        joints = []
        for f in frame:
            try:
                joints.append(fisher.summary(fisher.MatrixFisher(f)).to_dict())
            except (ValueError, RuntimeError) as exc:
                joints.append({"error": f"{type(exc).__name__}: {exc}"})
        out.append({"joints": joints})
    return out


def propagate_frames(tree, beta, params, num_samples, rng):
    out = []
    for frame in np.asarray(params, dtype=float):
        dists = [fisher.MatrixFisher(f) for f in frame]
        u = propagate_uncertainty(tree, beta, dists, num_samples, rng)
        out.append({"mean_pos": u.mean_pos.tolist(), "pos_std_mm": u.pos_std.tolist(), "mean_dist_mm": u.mean_dist.tolist()})
    return out
