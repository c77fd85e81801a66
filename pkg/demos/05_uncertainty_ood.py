"""Monte Carlo dropout calibration: does uncertainty flag the held-out scenarios?

Trains on six scenario kinds, keeps two obstacle placements fully out of
training, then scatters tip uncertainty against tip error for both test
distributions.  Points in the lower-right region would be false positives:
confident but wrong.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cdmshape import mlp
from cdmshape.config import small_config
from cdmshape.dataset import (feature_matrix, fit_normalizer, generate_dataset,
                              split_by_bend, target_matrix)
from cdmshape.evaluation import false_positive_count, spearman_tip
from cdmshape.uncertainty import mc_predict

cfg = small_config()
result = generate_dataset(cfg.scenario_list(), cfg.cdm_config(), cfg.fiber_spec())
parts = split_by_bend(result.samples, train_fraction=0.7, seed=7)
x, y = feature_matrix(parts["train"]), target_matrix(parts["train"])

model = mlp.init_mlp((8, 512, 256, 60), dropout_rate=0.3, seed=11,
                     normalizer=fit_normalizer(x))
mlp.train(model, x, y, epochs=40, batch_size=128, seed=11, val_fraction=0.05)

table = []
for tag, rows in (("id", parts["test_id"]), ("ood", parts["test_ood"])):
    for i, s in enumerate(rows):
        pred = mc_predict(model, s.features, k=50, seed=1000 + i)
        tip_std = float(np.hypot(pred.std[58], pred.std[59]))
        tip_err = float(np.linalg.norm(pred.mean[58:60] - s.target.markers[29]))
        table.append((tip_std, tip_err, tag))

fig, ax = plt.subplots(figsize=(6.5, 5))
for tag, color in (("id", "C0"), ("ood", "C3")):
    pts = np.array([(s, e) for s, e, t in table if t == tag])
    ax.scatter(pts[:, 0], pts[:, 1], s=4, alpha=0.35, color=color, label=tag)
ax.axhline(1.5, color="k", lw=0.8, ls="--")
ax.axvline(1.0, color="k", lw=0.8, ls="--")
ax.set_xlabel("tip uncertainty (std) [mm]")
ax.set_ylabel("tip error [mm]")
ax.set_title("false-positive region: below the error line, left of the std line")
ax.legend()
out = pathlib.Path(__file__).with_name("uncertainty_scatter.png")
fig.savefig(out, dpi=130, bbox_inches="tight")
print(f"wrote {out}")

mean_std = {tag: np.mean([s for s, _, t in table if t == tag]) for tag in ("id", "ood")}
print(f"mean tip std: id {mean_std['id']:.3f} mm, ood {mean_std['ood']:.3f} mm")
print(f"spearman(tip_std, tip_error): {spearman_tip(table):.3f}")
print(f"false positives (err > 1.5 mm, std < 1.0 mm): "
      f"{false_positive_count(table, 1.5, 1.0)} of {len(table)}")
