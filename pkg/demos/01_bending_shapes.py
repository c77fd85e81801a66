"""Gallery of simulated manipulator shapes: free bending and obstacle contact.

Sweeps the cable from neutral to full pull, once unobstructed and once
against a rigid disc, and draws the resulting 30-marker shapes.  Run with
`python3 demos/01_bending_shapes.py`; writes bending_shapes.png next to it.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cdmshape import CdmConfig, constrained_bend, default_obstacle, free_bend_curvature, shape_from_curvatures

cfg = CdmConfig()
fig, (ax_free, ax_obs) = plt.subplots(1, 2, figsize=(11, 5), sharey=True)

# Free bending: uniform curvature, tip sweeps up to 81 degrees.
for delta in np.linspace(0.0, 5.0, 6):
    frame = shape_from_curvatures(free_bend_curvature(delta, cfg), cfg)
    ax_free.plot(frame.markers[:, 0], frame.markers[:, 1], "o-", ms=2.5,
                 label=f"{delta:.0f} mm")
ax_free.set_title("free bending (cable 0..5 mm)")
ax_free.legend(fontsize=8)

# The same sweep pressed against a disc at the center-left position.
obstacle = default_obstacle("CenterLeft", cfg)
circle = plt.Circle(obstacle.center, obstacle.radius, color="0.8")
ax_obs.add_patch(circle)
warm = None
for delta in np.linspace(0.0, 5.0, 6):
    profile = constrained_bend(delta, obstacle, cfg, warm_start=warm)
    warm = profile
    frame = shape_from_curvatures(profile, cfg)
    ax_obs.plot(frame.markers[:, 0], frame.markers[:, 1], "o-", ms=2.5)
ax_obs.set_title(f"constrained by {obstacle.label} disc")

for ax in (ax_free, ax_obs):
    ax.set_aspect("equal")
    ax.set_xlabel("x [mm]")
ax_free.set_ylabel("y [mm]")
out = pathlib.Path(__file__).with_name("bending_shapes.png")
fig.savefig(out, dpi=130, bbox_inches="tight")
print(f"wrote {out}")
