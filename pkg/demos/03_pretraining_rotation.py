# # Pretraining the classifier head on dummy data
#
# The pretrained pipeline first trains the whole model on easy dummy clouds,
# freezes the classification head, and then trains only the encoder on the
# real clouds. The encoder then has to carry real points to where the frozen
# head expects each class. Rotating the dummy layout by 180 degrees swaps
# those places, so the encoder has to move the classes past each other.

# %%
from dataclasses import replace

from attnot.experiments import default_config, run_experiment

base = default_config("pretrained", separations=(8.0,), reps=5)
for rotation in (0.0, 180.0):
    result = run_experiment(replace(base, rotation=rotation))
    med = {m: result.median(m, 8.0) for m in ("accuracy_pointwise", "matching", "efficiency", "transformer_distance")}
    print(f"rotation {rotation:5.1f}: " + ", ".join(f"{k} {v:.3f}" for k, v in med.items()))

# %% [markdown]
# The same study from the command line writes every repetition to disk:
#
#     attnot simulate --pipeline pretrained --rotation 180 --separations 8 --out results_rot180
