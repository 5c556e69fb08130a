"""Pose metrics, reliability statistics and sampled uncertainty.

Positions are meters on input; reported errors are millimeters.
"""

import csv
import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import rankdata

from . import fisher, so3
from .body import forward_kinematics
from .errors import (
    DegenerateConfigurationError,
    InvalidArgumentError,
    UndefinedCorrelationError,
)

MM = 1000.0


def _subset(subset, n):
    if subset is None:
        return np.arange(n)
    idx = np.asarray(sorted(set(int(i) for i in subset)), dtype=int)
    if idx.size == 0:
        raise InvalidArgumentError("joint subset is empty")
    if idx[0] < 0 or idx[-1] >= n:
        raise InvalidArgumentError(f"joint subset indices must lie in [0, {n})")
    return idx


def subset_excluding(tree, tag):
    return tree.indices_without_tag(tag)


def mpjpe(pred, gt, subset=None):
    """Mean per-joint position error in mm over ``subset`` (all joints by default)."""
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape != gt.shape:
        raise InvalidArgumentError(f"shape mismatch {pred.shape} vs {gt.shape}")
    idx = _subset(subset, len(pred))
    return float(np.mean(np.linalg.norm(pred[idx] - gt[idx], axis=1)) * MM)


@dataclass(frozen=True)
class SimilarityTransform:
    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def apply(self, points):
        return self.scale * np.asarray(points, dtype=float) @ self.rotation.T + self.translation


def procrustes_align(pred, gt, with_scale=True):
    """Least-squares ``T(p) = scale * R p + t`` mapping ``pred`` onto ``gt``.

    ``R`` is the proper-SVD projection of the centered cross-covariance
    ``sum (g - g_mean)(p - p_mean)^T``, so ``det R = +1``.
    """
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape != gt.shape or pred.ndim != 2 or pred.shape[1] != 3:
        raise InvalidArgumentError(f"expected matching (K, 3) arrays, got {pred.shape}, {gt.shape}")
    if len(pred) < 3:
        raise InvalidArgumentError("Procrustes alignment needs at least 3 points")
    mp, mg = pred.mean(axis=0), gt.mean(axis=0)
    pc, gc = pred - mp, gt - mg
    cross = gc.T @ pc
    f = so3.proper_svd(cross)
    scale_ref = max(np.linalg.norm(pc), np.linalg.norm(gc)) ** 2
    if scale_ref == 0 or f.s[1] <= 1e-12 * scale_ref:
        raise DegenerateConfigurationError("centered cross-covariance has rank < 2")
    rot = f.u @ f.v.T
    scale = float(np.sum(f.s) / np.sum(pc**2)) if with_scale else 1.0
    return SimilarityTransform(scale, rot, mg - scale * rot @ mp)


def pa_mpjpe(pred, gt, align_subset=None, report_subset=None, with_scale=True):
    """MPJPE (mm) after Procrustes alignment fitted on ``align_subset``.

    The transform is applied to every joint before reporting on
    ``report_subset``. Callers following the usual protocol pass all joints
    except hands as ``align_subset``.
    """
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    a = _subset(align_subset, len(pred))
    t = procrustes_align(pred[a], gt[a], with_scale)
    return mpjpe(t.apply(pred), gt, report_subset)


@dataclass
class ReliabilityBin:
    lo: float
    hi: float
    count: int
    mean: float
    median: float
    q1: float
    q3: float
    whisker_lo: float
    whisker_hi: float


@dataclass
class ReliabilityReport:
    bins: list
    k_range: tuple

    CSV_HEADER = (
        "bin_lo",
        "bin_hi",
        "count",
        "mean_mm",
        "median_mm",
        "q1_mm",
        "q3_mm",
        "whisker_lo_mm",
        "whisker_hi_mm",
    )

    @property
    def bin_count(self):
        return len(self.bins)

    @property
    def medians(self):
        return np.array([b.median for b in self.bins])

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_HEADER)
        for b in self.bins:
            w.writerow(
                [repr(float(b.lo)), repr(float(b.hi)), b.count]
                + [repr(float(x)) for x in (b.mean, b.median, b.q1, b.q3, b.whisker_lo, b.whisker_hi)]
            )
        return buf.getvalue()


def _box_stats(values):
    if values.size == 0:
        nan = float("nan")
        return nan, nan, nan, nan, nan, nan
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    iqr = q3 - q1
    lo = values[values >= q1 - 1.5 * iqr].min()
    hi = values[values <= q3 + 1.5 * iqr].max()
    return float(values.mean()), float(med), float(q1), float(q3), float(lo), float(hi)


def bin_indices(k, bins, k_range):
    """Equal-width bin index per value; -1 outside ``k_range``.

    Values on an interior edge go to the upper bin; the range maximum goes
    to the last bin.
    """
    k = np.asarray(k, dtype=float)
    lo, hi = k_range
    idx = np.full(k.shape, -1, dtype=int)
    inside = (k >= lo) & (k <= hi)
    if hi > lo:
        raw = np.floor((k[inside] - lo) / (hi - lo) * bins).astype(int)
        idx[inside] = np.minimum(raw, bins - 1)
    else:
        idx[inside] = bins - 1
    return idx


def reliability_bins(k_total, errors, bins=10, k_range=None):
    """Bin (confidence, error) pairs into equal-width confidence intervals.

    Per bin: count, mean, median, quartiles (linear interpolation) and
    whiskers at 1.5 IQR clipped to the data. Empty bins carry NaN statistics.
    """
    k_total = np.asarray(k_total, dtype=float).ravel()
    errors = np.asarray(errors, dtype=float).ravel()
    if bins < 1:
        raise InvalidArgumentError("bin count must be >= 1")
    if k_total.size == 0 or k_total.size != errors.size:
        raise InvalidArgumentError("need at least one (k, error) pair and matching lengths")
    if k_range is None:
        k_range = (float(k_total.min()), float(k_total.max()))
    lo, hi = float(k_range[0]), float(k_range[1])
    if hi < lo:
        raise InvalidArgumentError("k_range must satisfy lo <= hi")
    idx = bin_indices(k_total, bins, (lo, hi))
    edges = np.linspace(lo, hi, bins + 1)
    out = []
    for b in range(bins):
        vals = errors[idx == b]
        out.append(ReliabilityBin(float(edges[b]), float(edges[b + 1]), int(vals.size), *_box_stats(vals)))
    return ReliabilityReport(out, (lo, hi))


def spearman(x, y):
    """Spearman rank correlation (Pearson on average ranks)."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size or x.size < 2:
        raise InvalidArgumentError("spearman needs two equal-length inputs of length >= 2")
    rx, ry = rankdata(x), rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    den = np.sqrt(np.sum(rx**2) * np.sum(ry**2))
    if den == 0:
        raise UndefinedCorrelationError("correlation undefined for constant input")
    return float(np.sum(rx * ry) / den)


class Uncertainty(NamedTuple):
    mean_pos: np.ndarray
    pos_std: np.ndarray
    mean_dist: np.ndarray


def sample_poses(dists, num_samples, rng):
    """``(num_samples, N, 3, 3)`` independent per-joint draws."""
    out = np.empty((num_samples, len(dists), 3, 3))
    for i, d in enumerate(dists):
        out[:, i] = fisher.sample(d, rng, num_samples)
    return out


def propagate_uncertainty(tree, beta, dists, num_samples=50, rng=None):
    """Joint-position spread from sampled poses.

    Each sample draws every joint independently from its distribution and
    runs forward kinematics. Per joint, ``pos_std`` is the root-mean-square
    Euclidean distance from the sample mean (``n - 1`` normalization) and
    ``mean_dist`` its plain average, both in mm.
    """
    if num_samples < 2:
        raise InvalidArgumentError("num_samples must be >= 2")
    if len(dists) != len(tree):
        raise InvalidArgumentError(f"need {len(tree)} distributions, got {len(dists)}")
    rng = np.random.default_rng() if rng is None else rng
    poses = sample_poses(dists, num_samples, rng)
    pos = forward_kinematics(tree, poses, beta).positions
    mean = pos.mean(axis=0)
    dist = np.linalg.norm(pos - mean, axis=-1)
    std = np.sqrt(np.sum(dist**2, axis=0) / (num_samples - 1)) * MM
    return Uncertainty(mean, std, dist.mean(axis=0) * MM)
