# %% [markdown]
# # Drawing samples and fitting them back
#
# Sampling goes through a Bingham distribution on unit quaternions, drawn by
# rejection from an angular central Gaussian envelope. Draws are exact, so the
# sample mean should match the analytic `E[R]`.

# %%
import numpy as np

from fisherpose import fisher, so3
from fisherpose.fisher import MatrixFisher

rng = np.random.default_rng(1)
d = MatrixFisher.from_mode(so3.random_uniform_rotation(rng), [12.0, 6.0, 2.0])
x = fisher.sample(d, rng, 50_000)
print("max |mean - E[R]|:", np.abs(x.mean(axis=0) - d.mean).max())

# %% [markdown]
# Acceptance stays well above the worst case of the envelope.

# %%
b = fisher.bingham_from_s(d.s)
_, proposed = fisher.sample_bingham(b.a, rng, 10_000)
print(f"acceptance rate {10_000 / proposed:.2f}")

# %% [markdown]
# The angle to the mode tightens as s grows.

# %%
for s in (1, 10, 100):
    ang = so3.geodesic_distance(fisher.sample(MatrixFisher(s * np.eye(3)), rng, 5000), np.eye(3))
    print(f"s = {s:>3}: median angle {np.rad2deg(np.median(ang)):6.2f} deg")

# %% [markdown]
# Maximum likelihood runs projected gradient descent with backtracking, so
# the NLL trace never goes up.

# %%
samples = fisher.sample(MatrixFisher(5 * np.eye(3)), rng, 10_000)
res = fisher.fit(samples)
print("converged:", res.converged, "after", res.iterations, "iterations")
print("kappa:", np.round(res.dist.kappa, 3), "(true 10, 10, 10)")
print("mode error deg:", np.rad2deg(so3.geodesic_distance(res.dist.mode, np.eye(3))))
print("monotone trace:", bool(np.all(np.diff(res.nll_trace) <= 0)))

# %% [markdown]
# Identical samples have no finite MLE: the fit pushes the spectrum to the
# cap and says so.

# %%
r0 = so3.rot_from_axis_angle([0, 1, 0], 0.4)
res = fisher.fit(np.tile(r0, (50, 1, 1)))
print("at cap:", res.at_cap, " s =", res.dist.s)
