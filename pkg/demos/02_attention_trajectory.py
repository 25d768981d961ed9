# # Following self-attention through training
#
# A small transformer classifier is trained on two Gaussian clouds. After
# every epoch the encoder output is recorded, which gives each input point a
# path through feature space. The transport diagnostics then ask two
# questions: does the final position pair each point the way optimal
# transport would, and how direct was the route there?

# %%
import numpy as np

from attnot.analysis import TrajectoryRecord, compute_report
from attnot.data import make_layout, sample_dataset, standardize
from attnot.nn import TrainConfig, train_full_batch

layout = make_layout(2, 8.0, 2)
data, scaler = standardize(sample_dataset(layout, 30, 10, seed=0))
print("data", data.shape, "labels", np.bincount(data.labels))

# %% [markdown]
# ## Training with a trace
#
# The trace holds the scaled input as epoch 0 and the inference-mode encoder
# output after every update. The model that comes back is the one from the
# epoch with the lowest loss.

# %%
model, trace = train_full_batch(data, TrainConfig(epochs=60, seed=0))
print("best epoch", trace.best_epoch, "loss", round(float(trace.loss[trace.best_epoch - 1]), 4))

# %% [markdown]
# ## Diagnostics
#
# Matching is the share of points whose own image is also their optimal
# transport partner. Optimality compares the optimal cost with the distance
# actually travelled, and efficiency compares that distance with the length
# of the path taken.

# %%
probs, _ = model.predict_proba(data.data)
report = compute_report(TrajectoryRecord.from_trace(trace), probs, data.labels)
for key, value in report.as_dict(include_time=False).items():
    print(f"{key:24s} {value:.4f}")

# %% [markdown]
# The per-epoch step lengths show where the path length comes from.

# %%
steps = [np.linalg.norm(trace.projection(e) - trace.projection(e - 1), axis=-1).mean() for e in range(1, 11)]
print("mean step per point, epochs 1-10:", np.round(steps, 3))
