"""Kinematic body model and pinhole camera.

A :class:`KinematicTree` maps per-joint local rotations and a 10-dimensional
shape vector to world joint positions. Shape enters linearly through
per-joint offset bases; there is no mesh or skinning.

Skeleton JSON schema (meters)::

    {"joints": [{"name": str, "parent": int | null, "rest_offset": [x, y, z],
                 "shape_basis": [[10 reals] x 3],   # optional, default zeros
                 "tags": [str]}]}
"""

import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import so3
from .errors import InvalidArgumentError

N_SHAPE = 10
BETA_BOUND = 10.0


@dataclass(frozen=True)
class Joint:
    name: str
    parent: "int | None"
    rest_offset: np.ndarray
    shape_basis: np.ndarray = field(default_factory=lambda: np.zeros((3, N_SHAPE)))
    tags: frozenset = frozenset()

    def to_dict(self):
        return {
            "name": self.name,
            "parent": self.parent,
            "rest_offset": np.asarray(self.rest_offset, dtype=float).tolist(),
            "shape_basis": np.asarray(self.shape_basis, dtype=float).tolist(),
            "tags": sorted(self.tags),
        }


class KinematicTree:
    """Ordered joints; joint 0 is the root and parents precede children.

    Construction does not validate; use :func:`validate_tree` or
    :func:`load_tree` (which raises on invalid input).
    """

    def __init__(self, joints):
        self.joints = tuple(joints)

    def __len__(self):
        return len(self.joints)

    def __repr__(self):
        return f"KinematicTree(N={len(self)})"

    @property
    def names(self):
        return [j.name for j in self.joints]

    @cached_property
    def parents(self):
        return np.array([-1 if j.parent is None else j.parent for j in self.joints])

    @cached_property
    def offsets(self):
        return np.array([np.asarray(j.rest_offset, dtype=float) for j in self.joints])

    @cached_property
    def shape_basis(self):
        return np.array([np.asarray(j.shape_basis, dtype=float) for j in self.joints])

    def indices_with_tag(self, tag):
        return [i for i, j in enumerate(self.joints) if tag in j.tags]

    def indices_without_tag(self, tag):
        return [i for i, j in enumerate(self.joints) if tag not in j.tags]

    def to_dict(self):
        return {"joints": [j.to_dict() for j in self.joints]}

    @classmethod
    def from_dict(cls, doc):
        joints = []
        for k, item in enumerate(doc["joints"]):
            basis = item.get("shape_basis")
            joints.append(
                Joint(
                    name=str(item.get("name", f"joint{k}")),
                    parent=item.get("parent"),
                    rest_offset=np.asarray(item["rest_offset"], dtype=float),
                    shape_basis=(
                        np.zeros((3, N_SHAPE)) if basis is None else np.asarray(basis, dtype=float)
                    ),
                    tags=frozenset(item.get("tags", ())),
                )
            )
        return cls(joints)


def validate_tree(tree):
    """Return a list of every structural problem found (empty when valid)."""
    problems = []
    joints = tree.joints
    if len(joints) < 1:
        return ["tree has no joints"]
    roots = [i for i, j in enumerate(joints) if j.parent is None]
    if len(roots) != 1:
        problems.append(f"expected exactly one root, found {len(roots)} at {roots}")
    if joints[0].parent is not None:
        problems.append("joint 0 must be the root (parent null)")
    for i, j in enumerate(joints):
        if j.parent is not None:
            if not isinstance(j.parent, (int, np.integer)) or isinstance(j.parent, bool):
                problems.append(f"joint {i} ({j.name}): parent must be an integer, got {j.parent!r}")
            elif not 0 <= j.parent < i:
                problems.append(
                    f"joint {i} ({j.name}): parent {j.parent} violates topological order"
                )
        offset = np.asarray(j.rest_offset, dtype=float)
        if offset.shape != (3,):
            problems.append(f"joint {i} ({j.name}): rest_offset must have 3 entries, got {offset.shape}")
        elif not np.all(np.isfinite(offset)):
            problems.append(f"joint {i} ({j.name}): rest_offset is not finite")
        basis = np.asarray(j.shape_basis, dtype=float)
        if basis.shape != (3, N_SHAPE):
            problems.append(f"joint {i} ({j.name}): shape_basis must be 3x{N_SHAPE}, got {basis.shape}")
        elif not np.all(np.isfinite(basis)):
            problems.append(f"joint {i} ({j.name}): shape_basis is not finite")
    return problems


def load_tree(source):
    """Load and validate a skeleton from a path, JSON string or dict."""
    if isinstance(source, KinematicTree):
        tree = source
    elif isinstance(source, dict):
        tree = KinematicTree.from_dict(source)
    else:
        text = Path(source).read_text()
        tree = KinematicTree.from_dict(json.loads(text))
    problems = validate_tree(tree)
    if problems:
        raise InvalidArgumentError("invalid skeleton:\n  " + "\n  ".join(problems))
    return tree


def default_tree():
    """The shipped 54-joint stand-in skeleton (not a reproduction of any licensed model)."""
    text = resources.files("fisherpose").joinpath("data/default_skeleton.json").read_text()
    return load_tree(json.loads(text))


def chain_tree(n, offset=(1.0, 0.0, 0.0), root_offset=(0.0, 0.0, 0.0)):
    """Straight serial chain of ``n`` joints, handy for tests and demos."""
    joints = [Joint("j0", None, np.asarray(root_offset, dtype=float))]
    for i in range(1, n):
        joints.append(Joint(f"j{i}", i - 1, np.asarray(offset, dtype=float)))
    return KinematicTree(joints)


def check_beta(beta, bound=BETA_BOUND):
    beta = np.zeros(N_SHAPE) if beta is None else np.asarray(beta, dtype=float)
    if beta.shape != (N_SHAPE,):
        raise InvalidArgumentError(f"beta must have {N_SHAPE} entries, got {beta.shape}")
    if not np.all(np.isfinite(beta)) or np.any(np.abs(beta) > bound):
        raise InvalidArgumentError(f"beta must be finite with |beta_i| <= {bound:g}")
    return beta


def check_pose(tree, rotations, tol=so3.ROTATION_TOL):
    rotations = np.asarray(rotations, dtype=float)
    if rotations.shape != (len(tree), 3, 3):
        raise InvalidArgumentError(f"pose must have shape ({len(tree)}, 3, 3), got {rotations.shape}")
    for i, r in enumerate(rotations):
        if not so3.is_rotation(r, tol):
            raise InvalidArgumentError(f"pose entry {i} is not a rotation")
    return rotations


def rest_joints(tree, beta=None):
    """Parent-relative offsets ``rest_offset + shape_basis @ beta``, shape (N, 3)."""
    beta = check_beta(beta)
    return tree.offsets + tree.shape_basis @ beta


class FKResult(NamedTuple):
    positions: np.ndarray
    orientations: np.ndarray


def forward_kinematics(tree, rotations, beta=None):
    """World joint positions and orientations.

    ``rotations`` has shape ``(..., N, 3, 3)`` (local rotations, entry 0 the
    global orientation). Leading dimensions are batched.

    root: ``p0 = offset0``, ``W0 = R0``; child: ``W_i = W_parent R_i`` and
    ``p_i = p_parent + W_parent offset_i``.
    """
    rotations = np.asarray(rotations, dtype=float)
    n = len(tree)
    if rotations.shape[-3:] != (n, 3, 3):
        raise InvalidArgumentError(f"rotations must end in ({n}, 3, 3), got {rotations.shape}")
    offsets = rest_joints(tree, beta)
    batch = rotations.shape[:-3]
    world = np.empty(rotations.shape)
    pos = np.empty(batch + (n, 3))
    world[..., 0, :, :] = rotations[..., 0, :, :]
    pos[..., 0, :] = offsets[0]
    for i, p in enumerate(tree.parents[1:], start=1):
        wp = world[..., p, :, :]
        world[..., i, :, :] = wp @ rotations[..., i, :, :]
        pos[..., i, :] = pos[..., p, :] + wp @ offsets[i]
    return FKResult(pos, world)


@dataclass(frozen=True)
class PinholeCamera:
    """Pinhole camera: pixel ~ C (R p + t) with perspective divide."""

    intrinsics: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        c = np.asarray(self.intrinsics, dtype=float)
        if c.shape != (3, 3) or np.any(np.tril(c, -1) != 0):
            raise InvalidArgumentError("intrinsics must be an upper-triangular 3x3 matrix")
        if c[0, 0] <= 0 or c[1, 1] <= 0:
            raise InvalidArgumentError("focal lengths must be positive")
        object.__setattr__(self, "intrinsics", c)
        object.__setattr__(self, "rotation", so3.as_rotation(self.rotation))
        t = np.asarray(self.translation, dtype=float)
        if t.shape != (3,):
            raise InvalidArgumentError("translation must be a 3-vector")
        object.__setattr__(self, "translation", t)

    @classmethod
    def simple(cls, focal, cx, cy, rotation=None, translation=None):
        c = np.array([[focal, 0.0, cx], [0.0, focal, cy], [0.0, 0.0, 1.0]])
        return cls(
            c,
            np.eye(3) if rotation is None else rotation,
            np.zeros(3) if translation is None else translation,
        )


MIN_DEPTH = 1e-6


def project(camera, points):
    """Project ``(K, 3)`` world points to pixels.

    Returns ``(pixels (K, 2), valid (K,))``; points with camera depth
    ``<= 1e-6`` m are flagged invalid and get finite placeholder pixels.
    """
    points = np.asarray(points, dtype=float)
    x_cam = points @ camera.rotation.T + camera.translation
    h = x_cam @ camera.intrinsics.T
    depth = x_cam[..., 2]
    valid = depth > MIN_DEPTH
    safe = np.where(valid, h[..., 2], 1.0)
    pixels = h[..., :2] / safe[..., None]
    pixels = np.where(valid[..., None], pixels, 0.0)
    return pixels, valid
