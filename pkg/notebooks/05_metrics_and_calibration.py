# %% [markdown]
# # Pose metrics and reliability diagrams
#
# MPJPE averages joint distances in millimetres. PA-MPJPE first removes the
# best similarity transform, fitted on the body without the hands.

# %%
import numpy as np

from fisherpose import body, metrics, so3, synth
from fisherpose.pipeline import reliability_pairs

rng = np.random.default_rng(5)
tree = body.default_tree()
gt = body.forward_kinematics(tree, so3.random_uniform_rotation(rng, len(tree))).positions
pred = 1.1 * gt @ so3.rot_from_axis_angle([0, 1, 0], 0.3).T + [0.05, 0, 0]
pred += rng.normal(size=pred.shape) * 0.01
align = metrics.subset_excluding(tree, "hand")
print(f"MPJPE    {metrics.mpjpe(pred, gt):7.2f} mm")
print(f"PA-MPJPE {metrics.pa_mpjpe(pred, gt, align):7.2f} mm")

# %% [markdown]
# For calibration we need predictions whose confidence means something. The
# synthetic generator builds them so that rotation error shrinks with the
# concentration by construction.

# %%
data = synth.generate(len(tree), 300, rng)
k_rot, e_rot = reliability_pairs(tree, None, data.fisher_params, data.gt_rotations, error="rotation")
rep = metrics.reliability_bins(k_rot, e_rot, bins=8)
print("Spearman (K, rotation error):", round(metrics.spearman(k_rot, e_rot), 3))
print(rep.to_csv())

# %% [markdown]
# Pairing a joint's own confidence with its world position error gives no
# correlation here: a joint's position depends on its ancestors, not on its
# own local rotation.

# %%
k_pos, e_pos = reliability_pairs(tree, None, data.fisher_params, data.gt_rotations)
print("Spearman (K, position error):", round(metrics.spearman(k_pos, e_pos), 3))
