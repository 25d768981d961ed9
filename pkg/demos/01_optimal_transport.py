# # Exact optimal transport between point clouds
#
# The transport layer has two exact solvers. Equal-size uniform clouds are an
# assignment problem; anything with weights goes through a linear program.
# Both are checked here against each other and against the closed form for
# Gaussians.

# %%
import numpy as np

from attnot.ot import (
    GaussianSpec,
    PointCloud,
    build_cost_matrix,
    gaussian_wasserstein2,
    push_forward,
    solve_assignment,
    solve_kantorovich,
    wasserstein,
)

rng = np.random.default_rng(0)

# %% [markdown]
# ## Assignment
#
# Six points are matched to six shifted and shuffled copies. With the
# Euclidean cost the optimal assignment undoes the shuffle.

# %%
x = rng.normal(size=(6, 2))
perm = rng.permutation(6)
y = x[perm] + np.array([0.5, -0.25])
a = solve_assignment(build_cost_matrix(x, y, 1.0))
print("shuffle  ", perm)
print("recovered", np.argsort(a.sigma))
print("mean cost", round(a.total_cost, 6), "= shift length", round(np.hypot(0.5, 0.25), 6))

# %% [markdown]
# Pushing the source cloud through the assignment relocates every atom onto
# its partner and keeps its mass.

# %%
moved = push_forward(a, PointCloud(x), PointCloud(y))
print("push-forward hits the target:", np.allclose(np.sort(moved.points, 0), np.sort(y, 0)))

# %% [markdown]
# ## Kantorovich relaxation
#
# With unequal weights mass has to split. Uniform weights give back the
# assignment cost.

# %%
c = build_cost_matrix(x, y, 2.0)
u = np.full(6, 1 / 6)
print("LP on uniform weights:", solve_kantorovich(u, u, c).total_cost, "assignment:", solve_assignment(c).total_cost)
w = rng.dirichlet(np.ones(6))
plan = solve_kantorovich(w, u, c).plan
print("row sums match the weights:", np.allclose(plan.sum(1), w))

# %% [markdown]
# ## Gaussians
#
# For Gaussian measures the 2-Wasserstein distance has a closed form. A
# sampled estimate with 1500 points per side lands within a few percent.

# %%
g1 = GaussianSpec([0.0, 0.0], [[1.0, 0.3], [0.3, 0.5]])
g2 = GaussianSpec([3.0, 1.0], [[0.6, -0.2], [-0.2, 1.4]])
closed = gaussian_wasserstein2(g1, g2)
sampled = wasserstein(g1.sample(rng, 1500), g2.sample(rng, 1500), 2.0)
print(f"closed form {closed:.4f}, sampled {sampled:.4f}, relative gap {abs(sampled - closed) / closed:.3f}")
