"""Train the dropout MLP on a small synthetic dataset and compare baselines.

A short run on reduced data; the full-scale reproduction lives in the
acceptance suite (tests/test_acceptance.py) and the CLI pipeline.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cdmshape import baselines, mlp
from cdmshape.config import small_config
from cdmshape.dataset import (feature_matrix, fit_normalizer, generate_dataset,
                              split_by_bend, target_matrix)
from cdmshape.evaluation import evaluate, render_report_text

cfg = small_config()
result = generate_dataset(cfg.scenario_list(), cfg.cdm_config(), cfg.fiber_spec())
parts = split_by_bend(result.samples, train_fraction=0.7, seed=7)
x, y = feature_matrix(parts["train"]), target_matrix(parts["train"])
print(f"training on {len(x)} rows from {len({s.bend_id for s in parts['train']})} bends")

model = mlp.init_mlp((8, 512, 256, 60), dropout_rate=0.3, seed=11,
                     normalizer=fit_normalizer(x))
curve = mlp.train(model, x, y, epochs=30, batch_size=128, seed=11, val_fraction=0.1)

fig, ax = plt.subplots(figsize=(7, 4))
epochs = [c[0] for c in curve]
ax.semilogy(epochs, [c[1] for c in curve], label="train (dropout on)")
ax.semilogy(epochs, [c[2] for c in curve], label="validation (dropout off)")
ax.set_xlabel("epoch")
ax.set_ylabel("MSE [mm$^2$]")
ax.legend()
out = pathlib.Path(__file__).with_name("loss_curve.png")
fig.savefig(out, dpi=130, bbox_inches="tight")
print(f"wrote {out}")

lin = baselines.fit(x, y, "identity")
poly = baselines.fit(x, y, "poly2")
report = evaluate(model, {"lin": lin, "poly": poly},
                  parts["test_id"], parts["test_ood"], k=25, seed=13)
print()
print(render_report_text(report))
