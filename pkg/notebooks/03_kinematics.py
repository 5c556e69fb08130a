# %% [markdown]
# # Skeletons and forward kinematics
#
# A kinematic tree stores each joint's parent and rest offset, plus a linear
# shape basis so body proportions move with `beta`. The bundled 54-joint
# skeleton is a stand-in with plausible human proportions.

# %%
import numpy as np

from fisherpose import body, so3

tree = body.default_tree()
print(len(tree), "joints;", len(tree.indices_with_tag("hand")), "hand joints")
print("first few:", tree.names[:6])

# %% [markdown]
# With every local rotation at identity the joints sit at their cumulative
# rest offsets.

# %%
rest = body.forward_kinematics(tree, np.tile(np.eye(3), (len(tree), 1, 1)))
head = tree.names.index("head")
print("head at rest (m):", rest.positions[head])

# %% [markdown]
# Local rotations compose down each chain. Bending the left shoulder moves
# everything below it and nothing else.

# %%
pose = np.tile(np.eye(3), (len(tree), 1, 1))
sh = tree.names.index("left_shoulder")
pose[sh] = so3.rot_from_axis_angle([0, 0, 1], np.pi / 3)
bent = body.forward_kinematics(tree, pose)
moved = np.linalg.norm(bent.positions - rest.positions, axis=1) > 1e-12
print("joints that moved:", [tree.names[i] for i in np.flatnonzero(moved)][:8], "...")

# %% [markdown]
# Shape enters linearly through the offsets.

# %%
tall = np.zeros(10)
tall[0] = 2.0
p = body.forward_kinematics(tree, pose, tall).positions
print("head height, beta0 = 0 vs 2:", rest.positions[head, 1], p[head, 1])

# %% [markdown]
# A pinhole camera maps the joints to pixels; points behind the camera are
# flagged rather than projected.

# %%
cam = body.PinholeCamera.simple(500, 320, 240, translation=np.array([0, -1.0, 3.0]))
px, ok = body.project(cam, bent.positions)
print("all in front:", ok.all(), " head pixel:", px[head])
