# %% [markdown]
# # Training losses
#
# The losses are plain functions of predictions and targets, so they can be
# checked against first principles without a network.

# %%
import numpy as np

from fisherpose import body, losses, so3
from fisherpose.fisher import MatrixFisher

rng = np.random.default_rng(4)
tree = body.default_tree()
gt = so3.random_uniform_rotation(rng, len(tree))

# %% [markdown]
# Fisher NLL sums the per-joint likelihood terms. It rewards confident
# predictions only when they are right.

# %%
noise = so3.rot_from_rotvec(rng.normal(size=(len(tree), 3)) * 0.1)
pred_modes = gt @ noise
for s in (1.0, 10.0, 100.0):
    dists = [MatrixFisher.from_mode(m, [s] * 3) for m in pred_modes]
    print(f"s = {s:>5}: FNLL {losses.fnll(dists, gt):9.2f}")

# %% [markdown]
# The joint loss compares world positions after forward kinematics, so an
# error near the root costs more than the same error at a fingertip.

# %%
def one_joint_error(name, angle=0.2):
    pred = gt.copy()
    i = tree.names.index(name)
    pred[i] = gt[i] @ so3.rot_from_axis_angle([1, 0, 0], angle)
    return losses.joint_loss(tree, None, pred, gt)

for name in ("pelvis", "left_shoulder", "left_wrist"):
    print(f"{name:>14}: {one_joint_error(name):.4f} m^2")

# %% [markdown]
# The squared Frobenius loss on rotations depends only on the angle between
# them.

# %%
for deg in (10, 90, 180):
    r = so3.rot_from_axis_angle([0, 0, 1], np.deg2rad(deg))
    print(f"{deg:>3} deg: rot_l2 {losses.rot_l2([np.eye(3)], [r]):.4f}")

# %% [markdown]
# Gaussian heads for 3D joints, 2D landmarks and shape follow the same
# pattern; a combined objective weights FNLL against the joint term.

# %%
print(losses.gnll3d([[0, 0, 0]], [1.0], [[1, 0, 0]]))
print(losses.shape_nll(np.zeros(10), np.ones(10), np.full(10, 0.5)))
print(losses.total_loss(2.0, 3.0, w_fnll=1.0, w_j=0.5))
