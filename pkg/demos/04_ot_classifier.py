# # Classifying by transport to dummy clouds
#
# The OT classifier skips attention. Each label gets a dummy Gaussian, real
# points are matched to dummy points of their label by exact assignment, and
# a small network learns that map so unseen points can be carried over too.
# A point is then scored by its distance to each dummy centre.

# %%
import time

import numpy as np

from attnot.data import make_layout, sample_dataset, standardize
from attnot.nn import TrainConfig, train_full_batch
from attnot.otclassifier import OTClassifier, OTFitConfig

train, scaler = standardize(sample_dataset(make_layout(2, 4.0, 2), 30, 10, seed=1))
test, _ = standardize(sample_dataset(make_layout(2, 4.0, 2), 30, 10, seed=2), scaler)

# %% [markdown]
# ## Fit and predict
#
# Point probabilities use each point's own distances; instance probabilities
# add the distances over an instance's timesteps first.

# %%
model = OTClassifier(OTFitConfig(seed=0)).fit(train, scaler)
point, inst = model.predict_proba(test.data)
print("point accuracy   ", np.mean(point.argmax(-1) == test.labels[:, None]))
print("instance accuracy", np.mean(inst.argmax(-1) == test.labels))
print("centroids\n", model.centroids)

# %% [markdown]
# Batched matching solves many small assignment problems instead of one
# large one. It is a little less optimal and much cheaper on big tables.

# %%
batched = OTClassifier(OTFitConfig(seed=0, ot_batch_size=25)).fit(train)
print("batched instance accuracy", np.mean(batched.predict(test.data) == test.labels))

# %% [markdown]
# ## Cost against the transformer
#
# Both models are trained on the same data on the same machine.

# %%
start = time.perf_counter()
OTClassifier().fit(train)
t_ot = time.perf_counter() - start
start = time.perf_counter()
train_full_batch(train, TrainConfig(epochs=60), record_trace=False)
t_tr = time.perf_counter() - start
print(f"OT classifier {t_ot:.2f} s, transformer {t_tr:.2f} s")
