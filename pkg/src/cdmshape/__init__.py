"""Simulation-backed shape sensing for a planar continuum manipulator.

Generates wavelength-shift / marker-shape pairs from a constant-curvature
bending model, trains an uncertainty-aware MLP and least-squares baselines,
and evaluates shape accuracy and Monte Carlo dropout calibration, including
out-of-distribution scenarios.
"""

from .baselines import LinearModel, polynomial_features
from .checkpoint import load_model, save_model
from .config import RunConfig, benchmark_config, small_config
from .dataset import (Normalizer, Sample, Scenario, fit_normalizer,
                      generate_dataset, read_csv, repair_markers,
                      split_by_bend, write_csv)
from .evaluation import (EvalReport, aggregate_errors, evaluate,
                         false_positive_count, marker_errors,
                         uncertainty_error_table)
from .fbg import (FiberSpec, add_measurement_noise, common_mode_correct,
                  node_strains, strain_from_shift, wavelength_shift)
from .kinematics import (CdmConfig, Obstacle, ShapeFrame, SolverOptions,
                         constrained_bend, default_obstacle,
                         free_bend_curvature, shape_from_curvatures, tip_angle)
from .mlp import MlpModel, adam_step, forward, gradient_check, init_mlp, train
from .uncertainty import McPrediction, confidence_interval, mc_predict

__version__ = "0.1.0"
