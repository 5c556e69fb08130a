"""Command-line interface.

Exit codes: 0 success, 2 input/validation error, 3 numerical non-convergence.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import fileio, fisher, synth
from .body import check_beta, forward_kinematics
from .errors import ConvergenceError, InvalidArgumentError
from .metrics import reliability_bins, spearman
from .pipeline import eval_report, fisher_info, propagate_frames, reliability_pairs

log = logging.getLogger("fisherpose")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


def _emit(args, text):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _rng(args):
    return np.random.default_rng(args.seed)


def cmd_fisher_fit(args):
    samples = fileio.load_rotation_samples(args.samples, args.frame, args.joint)
    init = None
    if args.init:
        init = fileio.load_fisher_file(args.init)[0, 0]
    res = fisher.fit(samples, init=init, lr=args.lr, max_iters=args.max_iters, tol=args.tol)
    if args.log:
        with open(args.log, "w") as fh:
            fh.write("iteration,nll\n")
            for i, v in enumerate(res.nll_trace):
                fh.write(f"{i},{v!r}\n")
    if res.at_cap:
        log.warning("singular values reached the cap |s| = %g; MLE is degenerate", fisher.S_MAX)
    _emit(args, fileio.dumps(fileio.fisher_doc(res.dist.f[None, None])))
    if not res.converged:
        log.error("fit did not converge in %d iterations (projected gradient %.3g)", res.iterations, res.grad_norm)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_fisher_sample(args):
    params = fileio.load_fisher_file(args.fisher)
    rng = _rng(args)
    frames = []
    for frame in params:
        joints = [fileio.matrices_to_rows(fisher.sample(fisher.MatrixFisher(f), rng, args.n)) for f in frame]
        frames.append({"samples": joints})
    _emit(args, fileio.dumps({"frames": frames}))
    return EXIT_OK


def cmd_fisher_info(args):
    params = fileio.load_fisher_file(args.fisher)
    _emit(args, json.dumps({"frames": fisher_info(params)}, indent=1) + "\n")
    return EXIT_OK


def cmd_fk(args):
    pose = fileio.load_pose_file(args.pose, args.skeleton)
    fk = forward_kinematics(pose.tree, pose.rotations, pose.beta)
    doc = {"units": "m", "frames": [{"positions": p.tolist()} for p in fk.positions]}
    _emit(args, fileio.dumps(doc))
    return EXIT_OK


def _load_pair(args):
    pred = fileio.load_pose_file(args.pred, args.skeleton)
    gt = fileio.load_pose_file(args.gt, args.skeleton)
    if pred.tree.to_dict() != gt.tree.to_dict():
        raise InvalidArgumentError("prediction and ground truth use different skeletons")
    if pred.n_frames != gt.n_frames:
        raise InvalidArgumentError(f"frame count mismatch: {pred.n_frames} vs {gt.n_frames}")
    return pred, gt


def cmd_eval(args):
    pred, gt = _load_pair(args)
    # both passes use the ground-truth shape
    p = forward_kinematics(gt.tree, pred.rotations, gt.beta).positions
    g = forward_kinematics(gt.tree, gt.rotations, gt.beta).positions
    tags = [t for t in args.align_exclude_tags.split(",") if t]
    report = eval_report(gt.tree, p, g, with_scale=args.with_scale, align_exclude=tags)
    _emit(args, json.dumps(report, indent=1) + "\n")
    return EXIT_OK


def cmd_reliability(args):
    params = fileio.load_fisher_file(args.fisher)
    gt = fileio.load_pose_file(args.gt, args.skeleton)
    k, err = reliability_pairs(gt.tree, gt.beta, params, gt.rotations, args.mode, args.error)
    report = reliability_bins(k, err, args.bins, args.k_range)
    _emit(args, report.to_csv())
    try:
        rho = spearman(k, err)
    except ValueError:
        rho = None
    sys.stderr.write(json.dumps({"pairs": int(len(k)), "spearman": rho}) + "\n")
    return EXIT_OK


def cmd_propagate(args):
    params = fileio.load_fisher_file(args.fisher)
    tree = fileio.resolve_skeleton(args.skeleton)
    beta = check_beta(args.beta)
    if params.shape[1] != len(tree):
        raise InvalidArgumentError(f"{params.shape[1]} joints in Fisher file, skeleton has {len(tree)}")
    frames = propagate_frames(tree, beta, params, args.n_samples, _rng(args))
    _emit(args, fileio.dumps({"units": {"mean_pos": "m", "pos_std_mm": "mm"}, "frames": frames}))
    return EXIT_OK


def cmd_synth(args):
    tree = fileio.resolve_skeleton(args.skeleton)
    profile = synth.NoiseProfile.parse(args.noise_profile)
    data = synth.generate(len(tree), args.n_frames, _rng(args), profile)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    ref = "default" if args.skeleton in (None, "default") else str(Path(args.skeleton).resolve())
    pose = fileio.PoseFile(tree, data.gt_rotations, None, ref)
    fileio.write_json(out / "gt_pose.json", pose.to_dict())
    fileio.write_json(out / "pred_fisher.json", fileio.fisher_doc(data.fisher_params))
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--skeleton", default=None, help="skeleton JSON path or 'default'")
    common.add_argument("--seed", type=int, default=0, help="random seed (unsigned 64-bit)")
    common.add_argument("--out", default=None, help="output path (stdout if omitted)")
    common.add_argument("--tol", type=float, default=1e-6, help="convergence tolerance")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="fisherpose", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    fp = sub.add_parser("fisher", help="matrix Fisher tools")
    fsub = fp.add_subparsers(dest="fisher_command", required=True)

    q = fsub.add_parser("fit", parents=[common], help="maximum-likelihood fit to rotation samples")
    q.add_argument("samples")
    q.add_argument("--init", default=None, help="Fisher file with an initial F (frame 0, joint 0)")
    q.add_argument("--lr", type=float, default=0.05)
    q.add_argument("--max-iters", type=int, default=2000)
    q.add_argument("--frame", type=int, default=0)
    q.add_argument("--joint", type=int, default=0)
    q.add_argument("--log", default=None, help="CSV path for the per-iteration NLL trace")
    q.set_defaults(func=cmd_fisher_fit)

    q = fsub.add_parser("sample", parents=[common], help="draw rotations per joint and frame")
    q.add_argument("fisher")
    q.add_argument("-n", type=int, default=100)
    q.set_defaults(func=cmd_fisher_sample)

    q = fsub.add_parser("info", parents=[common], help="mode, concentrations and log c per joint")
    q.add_argument("fisher")
    q.set_defaults(func=cmd_fisher_info)

    q = sub.add_parser("fk", parents=[common], help="forward kinematics of a pose file")
    q.add_argument("pose")
    q.set_defaults(func=cmd_fk)

    q = sub.add_parser("eval", parents=[common], help="MPJPE / PA-MPJPE report")
    q.add_argument("pred")
    q.add_argument("gt")
    q.add_argument("--with-scale", action=argparse.BooleanOptionalAction, default=True)
    q.add_argument("--align-exclude-tags", default="hand")
    q.set_defaults(func=cmd_eval)

    q = sub.add_parser("reliability", parents=[common], help="binned confidence/error CSV")
    q.add_argument("fisher")
    q.add_argument("gt")
    q.add_argument("--bins", type=int, default=10)
    q.add_argument("--k-range", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    q.add_argument("--mode", choices=("per-joint", "whole-body"), default="per-joint")
    q.add_argument("--error", choices=("position", "rotation"), default="position",
                   help="position error in mm (default) or local rotation error in degrees")
    q.set_defaults(func=cmd_reliability)

    q = sub.add_parser("propagate", parents=[common], help="sampled joint-position uncertainty")
    q.add_argument("fisher")
    q.add_argument("--beta", type=float, nargs=10, default=None)
    q.add_argument("--n-samples", type=int, default=50)
    q.set_defaults(func=cmd_propagate)

    q = sub.add_parser("synth", parents=[common], help="synthetic ground truth and predictions")
    q.add_argument("--n-frames", type=int, default=100)
    q.add_argument("--noise-profile", default="", help="e.g. 'c=20,kmin=2,kmax=200,max_angle=90'")
    q.set_defaults(func=cmd_synth)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConvergenceError as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except (InvalidArgumentError, ValueError, KeyError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
