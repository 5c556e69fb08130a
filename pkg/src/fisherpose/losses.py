"""Training objectives as plain batch functions.

Additive normalization constants (the ``2 pi`` terms) are dropped from every
Gaussian NLL. Sums are taken with ``numpy.sum`` over a fixed-order array, so
a given input always produces the same float.
"""

import numpy as np

from . import fisher
from .body import forward_kinematics, project
from .errors import InvalidArgumentError


def _positive(sigma, name="sigma"):
    sigma = np.asarray(sigma, dtype=float)
    if np.any(~(sigma > 0)):
        raise InvalidArgumentError(f"{name} must be strictly positive")
    return sigma


def _same_length(a, b):
    if len(a) != len(b):
        raise InvalidArgumentError(f"length mismatch: {len(a)} vs {len(b)}")


def fnll(dists, targets):
    """Sum over joints of ``log c(F_i) - tr(F_i^T R_i)``."""
    _same_length(dists, targets)
    terms = np.array([fisher.nll(d, r) for d, r in zip(dists, targets)])
    return float(np.sum(terms))


def joint_loss(tree, beta, pred_rotations, gt_rotations):
    """Squared L2 distance between world joints of two poses at the same ``beta`` (m^2)."""
    p = forward_kinematics(tree, pred_rotations, beta).positions
    g = forward_kinematics(tree, gt_rotations, beta).positions
    return float(np.sum((p - g) ** 2))


def rot_l2(pred, gt):
    """Sum of squared Frobenius distances between rotation matrices."""
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    _same_length(pred, gt)
    return float(np.sum((pred - gt) ** 2))


def gnll3d(mu, sigma, targets):
    """Isotropic 3D Gaussian NLL: ``sum 3 log s_i + |x_i - mu_i|^2 / (2 s_i^2)``."""
    mu = np.asarray(mu, dtype=float).reshape(-1, 3)
    targets = np.asarray(targets, dtype=float).reshape(-1, 3)
    sigma = _positive(sigma).reshape(-1)
    _same_length(mu, targets)
    _same_length(mu, sigma)
    sq = np.sum((targets - mu) ** 2, axis=1)
    return float(np.sum(3.0 * np.log(sigma) + sq / (2.0 * sigma**2)))


def gnll2d_visible(mu, sigma, visible, targets):
    """Visibility-masked 2D landmark NLL with a single ``log sigma`` term per joint.

    The single log term (rather than ``2 log sigma`` for a 2D isotropic
    Gaussian) is kept deliberately.
    """
    mu = np.asarray(mu, dtype=float).reshape(-1, 2)
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    sigma = _positive(sigma).reshape(-1)
    v = np.asarray(visible, dtype=bool).reshape(-1)
    _same_length(mu, targets)
    _same_length(mu, sigma)
    _same_length(mu, v)
    sq = np.sum((mu - targets) ** 2, axis=1)
    terms = np.log(sigma) + sq / (2.0 * sigma**2)
    return float(np.sum(np.where(v, terms, 0.0)))


def reproj_loss(camera, pred_joints, gt_2d, visible):
    """Masked squared reprojection error in pixels^2.

    Returns ``(loss, n_invalid)``; joints behind the camera contribute 0 and
    are counted in ``n_invalid``.
    """
    pred_joints = np.asarray(pred_joints, dtype=float).reshape(-1, 3)
    gt_2d = np.asarray(gt_2d, dtype=float).reshape(-1, 2)
    v = np.asarray(visible, dtype=bool).reshape(-1)
    _same_length(pred_joints, gt_2d)
    _same_length(pred_joints, v)
    pixels, valid = project(camera, pred_joints)
    mask = v & valid
    diff = np.where(mask[:, None], pixels - gt_2d, 0.0)
    return float(np.sum(diff**2)), int(np.sum(v & ~valid))


def shape_nll(mu_beta, sigma_beta, beta):
    """Diagonal Gaussian NLL of shape coefficients, ``2 pi`` constant dropped."""
    mu_beta = np.asarray(mu_beta, dtype=float)
    beta = np.asarray(beta, dtype=float)
    sigma_beta = _positive(sigma_beta, "sigma_beta")
    _same_length(mu_beta, beta)
    _same_length(mu_beta, sigma_beta)
    return float(np.sum(np.log(sigma_beta) + (beta - mu_beta) ** 2 / (2.0 * sigma_beta**2)))


def total_loss(fnll_term, joint_term, w_fnll=1.0, w_j=1.0):
    return float(w_fnll * fnll_term + w_j * joint_term)
