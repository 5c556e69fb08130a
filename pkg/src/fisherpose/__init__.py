"""Matrix Fisher rotation distributions, kinematic joint regression and pose uncertainty."""

from . import body, fisher, losses, metrics, so3
from .body import KinematicTree, PinholeCamera, default_tree, forward_kinematics, load_tree
from .fisher import MatrixFisher

__all__ = [
    "KinematicTree",
    "MatrixFisher",
    "PinholeCamera",
    "body",
    "default_tree",
    "fisher",
    "forward_kinematics",
    "load_tree",
    "losses",
    "metrics",
    "so3",
]

__version__ = "0.1.0"
