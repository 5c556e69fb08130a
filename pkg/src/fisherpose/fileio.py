"""JSON/CSV file formats used by the command-line tools.

Rotations and Fisher parameters are stored as 9 row-major reals. Positions
are meters, errors millimeters.

Pose file::

    {"skeleton": "path.json" | "default" | {inline skeleton},
     "beta": [10 reals],
     "frames": [{"rotations": [[9 reals] x N]}]}

Fisher file::

    {"frames": [{"F": [[9 reals] x N]}]}
"""

import json
import logging
from pathlib import Path

import numpy as np

from . import so3
from .body import N_SHAPE, check_beta, default_tree, load_tree
from .errors import InvalidArgumentError

log = logging.getLogger(__name__)

LOAD_TOL = 1e-6
REPROJECT_TOL = 1e-9


def dumps(doc):
    return json.dumps(doc, separators=(",", ":")) + "\n"


def write_json(path, doc):
    Path(path).write_text(dumps(doc))


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidArgumentError(f"cannot read {path}: {exc}") from exc


def matrices_from_rows(rows, what="matrix"):
    m = np.asarray(rows, dtype=float)
    if m.ndim != 2 or m.shape[1] != 9:
        raise InvalidArgumentError(f"{what} entries must be lists of 9 reals, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidArgumentError(f"{what} entries must be finite")
    return m.reshape(-1, 3, 3)


def matrices_to_rows(m):
    return np.asarray(m, dtype=float).reshape(-1, 9).tolist()


def clean_rotations(m, where=""):
    """Check rotation invariants at ``LOAD_TOL``; re-project small deviations."""
    m = np.array(m, dtype=float)
    ortho = np.linalg.norm(np.swapaxes(m, -1, -2) @ m - np.eye(3), axis=(-2, -1))
    dev = np.maximum(ortho, np.abs(np.linalg.det(m) - 1.0))
    bad = np.flatnonzero(dev > LOAD_TOL)
    if bad.size:
        i = int(bad[0])
        raise InvalidArgumentError(f"{where}rotation {i} is not a rotation (deviation {dev[i]:.3g})")
    for i in np.flatnonzero(dev > REPROJECT_TOL):
        log.warning("%srotation %d re-orthonormalized (deviation %.3g)", where, i, dev[i])
        m[i] = so3.project_to_so3(m[i])
    return m


def resolve_skeleton(source, base_dir=None):
    if source is None or source == "default":
        return default_tree()
    if isinstance(source, dict):
        return load_tree(source)
    path = Path(source)
    if not path.is_absolute() and base_dir is not None and (Path(base_dir) / path).exists():
        path = Path(base_dir) / path
    try:
        return load_tree(path)
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read skeleton {source}: {exc}") from exc


class PoseFile:
    def __init__(self, tree, rotations, beta=None, skeleton_ref="default"):
        self.tree = tree
        self.rotations = np.asarray(rotations, dtype=float)
        self.beta = check_beta(beta)
        self.skeleton_ref = skeleton_ref

    @property
    def n_frames(self):
        return len(self.rotations)

    def to_dict(self):
        return {
            "skeleton": self.skeleton_ref,
            "beta": self.beta.tolist(),
            "frames": [{"rotations": matrices_to_rows(r)} for r in self.rotations],
        }


def load_pose_file(path, skeleton=None):
    """Load a pose file; ``skeleton`` (path or tree) overrides the file's reference."""
    doc = read_json(path)
    base = Path(path).parent
    if skeleton is None:
        ref = doc.get("skeleton", "default")
        tree = resolve_skeleton(ref, base)
    else:
        ref = str(skeleton)
        tree = resolve_skeleton(skeleton, None)
    beta = doc.get("beta")
    beta = np.zeros(N_SHAPE) if beta is None else beta
    frames = []
    for t, frame in enumerate(doc.get("frames", [])):
        r = matrices_from_rows(frame["rotations"], "rotation")
        if len(r) != len(tree):
            raise InvalidArgumentError(f"frame {t}: {len(r)} rotations for a {len(tree)}-joint skeleton")
        frames.append(clean_rotations(r, f"frame {t} "))
    rotations = np.array(frames) if frames else np.zeros((0, len(tree), 3, 3))
    return PoseFile(tree, rotations, beta, ref)


def load_fisher_file(path):
    """Return Fisher parameters as ``(T, N, 3, 3)``."""
    doc = read_json(path)
    frames = [matrices_from_rows(f["F"], "F") for f in doc.get("frames", [])]
    if not frames:
        raise InvalidArgumentError(f"{path}: no frames")
    if len({len(f) for f in frames}) != 1:
        raise InvalidArgumentError(f"{path}: frames have differing joint counts")
    return np.array(frames)


def fisher_doc(params):
    return {"frames": [{"F": matrices_to_rows(f)} for f in np.asarray(params)]}


def load_rotation_samples(path, frame=0, joint=0):
    """Read ``{"rotations": [...]}`` or the sampler's ``{"frames": [{"samples": ...}]}`` format."""
    doc = read_json(path)
    if "rotations" in doc:
        rows = doc["rotations"]
    else:
        try:
            rows = doc["frames"][frame]["samples"][joint]
        except (KeyError, IndexError, TypeError) as exc:
            raise InvalidArgumentError(f"{path}: no samples for frame {frame}, joint {joint}") from exc
    return clean_rotations(matrices_from_rows(rows, "rotation"))
