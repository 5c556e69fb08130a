"""Synthetic (ground truth, prediction) pairs for calibration experiments.

Ground-truth local rotations perturb the rest pose by a random axis-angle
per joint (angle uniform on ``[0, max_angle]``). Each "prediction" is
``F_i = kappa_i R_i E_i`` with ``kappa_i`` log-uniform and ``E_i`` a random
rotation whose angle is Gaussian with standard deviation ``c / kappa_i``.
Rotation error therefore shrinks with concentration by construction; this is
a test fixture, not a model of any network.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import so3
from .errors import InvalidArgumentError


@dataclass(frozen=True)
class NoiseProfile:
    c_deg: float = 20.0
    kappa_min: float = 2.0
    kappa_max: float = 200.0
    max_angle_deg: float = 90.0

    @classmethod
    def parse(cls, text):
        """Parse ``"c=20,kmin=2,kmax=200,max_angle=90"`` (any subset, any order)."""
        if not text:
            return cls()
        keys = {"c": "c_deg", "kmin": "kappa_min", "kmax": "kappa_max", "max_angle": "max_angle_deg"}
        kwargs = {}
        for part in text.split(","):
            name, _, value = part.partition("=")
            name = name.strip()
            if name not in keys or not value:
                raise InvalidArgumentError(f"bad noise-profile entry {part!r}; keys: {sorted(keys)}")
            kwargs[keys[name]] = float(value)
        profile = cls(**kwargs)
        if not 0 < profile.kappa_min <= profile.kappa_max or profile.c_deg < 0:
            raise InvalidArgumentError(f"invalid noise profile {profile}")
        return profile


class SynthSet(NamedTuple):
    gt_rotations: np.ndarray
    fisher_params: np.ndarray
    kappa: np.ndarray


def _random_axes(rng, shape):
    v = rng.standard_normal(shape + (3,))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def generate(n_joints, n_frames, rng, profile=NoiseProfile()):
    """Return ``SynthSet`` with arrays of shape ``(T, N, 3, 3)`` and ``(T, N)``."""
    shape = (n_frames, n_joints)
    gt_angle = rng.uniform(0.0, np.deg2rad(profile.max_angle_deg), shape)
    gt = so3.rot_from_rotvec(_random_axes(rng, shape) * gt_angle[..., None])
    kappa = np.exp(rng.uniform(np.log(profile.kappa_min), np.log(profile.kappa_max), shape))
    err_angle = rng.standard_normal(shape) * np.deg2rad(profile.c_deg) / kappa
    err = so3.rot_from_rotvec(_random_axes(rng, shape) * err_angle[..., None])
    f = kappa[..., None, None] * (gt @ err)
    return SynthSet(gt, f, kappa)
