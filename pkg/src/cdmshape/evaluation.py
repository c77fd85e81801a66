"""Error metrics, per-scenario tables, and uncertainty-calibration reports.

Tip point estimation (TPE) scores the last marker; direct shape estimation
(DSE) pools the Euclidean errors of all 30 markers.  Medians use the lower-
median convention for even pools.  The calibration report pairs the tip
uncertainty (norm of the tip x/y standard deviations) with the tip error for
every test row, tagged in-distribution or out-of-distribution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import spearmanr

from .baselines import predict as baseline_predict
from .dataset import feature_matrix
from .kinematics import OBSTACLE_LABELS, ShapeFrame
from .uncertainty import mc_predict

ROW_ORDER = ("Freespace", "Obstacles", "BaseRight", "CenterRight", "TipRight",
             "BaseLeft", "CenterLeft", "TipLeft")
MODEL_ORDER = ("lin", "poly", "dnn")


def as_markers(obj) -> np.ndarray:
    """Coerce a ShapeFrame, (30, 2) array, or flat 60-vector to (30, 2)."""
    if isinstance(obj, ShapeFrame):
        return obj.markers
    arr = np.asarray(obj, dtype=float)
    if arr.shape == (60,):
        return arr.reshape(30, 2)
    if arr.shape == (30, 2):
        return arr
    raise ValueError(f"cannot interpret shape {arr.shape} as 30 markers")


def marker_errors(pred, truth) -> np.ndarray:
    """Euclidean distance (mm) between predicted and true position per marker."""
    p, t = as_markers(pred), as_markers(truth)
    return np.linalg.norm(p - t, axis=1)


def lower_median(values) -> float:
    """Median with the lower of the two middle values for even-size pools."""
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise ValueError("empty error pool")
    return float(np.sort(values)[(values.size - 1) // 2])


def aggregate_errors(errors) -> dict:
    """Median/max TPE (tip marker) and DSE (all markers pooled) statistics.

    ``errors`` is an (N, 30) array of per-sample marker errors.
    """
    errors = np.atleast_2d(np.asarray(errors, dtype=float))
    if errors.size == 0:
        raise ValueError("no samples to aggregate")
    if errors.shape[1] != 30:
        raise ValueError(f"expected 30 errors per sample, got {errors.shape[1]}")
    tpe = errors[:, -1]
    return {"tpe_median": lower_median(tpe), "tpe_max": float(tpe.max()),
            "dse_median": lower_median(errors), "dse_max": float(errors.max()),
            "count": int(errors.shape[0])}


def uncertainty_error_table(mc_preds, truths, tags) -> list:
    """Rows (tip_std mm, tip_error mm, tag) for the calibration scatter."""
    if not (len(mc_preds) == len(truths) == len(tags)):
        raise ValueError("prediction/truth/tag lists disagree in length")
    rows = []
    for pred, truth, tag in zip(mc_preds, truths, tags):
        tip_std = float(np.hypot(pred.std[58], pred.std[59]))
        tip_err = float(np.linalg.norm(pred.mean[58:60] - as_markers(truth)[29]))
        rows.append((tip_std, tip_err, tag))
    return rows


def false_positive_count(table, error_threshold: float, std_threshold: float) -> int:
    """Confidently wrong rows: error above threshold with uncertainty below it."""
    if error_threshold <= 0 or std_threshold <= 0:
        raise ValueError("thresholds must be positive")
    return sum(1 for tip_std, tip_err, _ in table
               if tip_err > error_threshold and tip_std < std_threshold)


def spearman_tip(table) -> float:
    """Rank correlation between tip uncertainty and tip error over all rows."""
    if len(table) < 2:
        return float("nan")
    stds = [r[0] for r in table]
    errs = [r[1] for r in table]
    return float(spearmanr(stds, errs).statistic)


@dataclass
class EvalReport:
    tables: dict                    # model -> row label -> stats dict
    summaries: dict                 # model -> {"id", "ood"} -> stats dict
    uncertainty: list               # (tip_std, tip_error, tag) rows
    fp_counts: dict                 # "err>E_std<S" -> count
    spearman: float
    mean_tip_std: dict = field(default_factory=dict)  # tag -> mean tip std


def _row_label_masks(scenarios) -> dict:
    kinds = np.array(scenarios)
    masks = {}
    free = np.isin(kinds, ("FreespaceLeft", "FreespaceRight"))
    if free.any():
        masks["Freespace"] = free
    obst = np.isin(kinds, OBSTACLE_LABELS)
    if obst.any():
        masks["Obstacles"] = obst
    for label in OBSTACLE_LABELS:
        m = kinds == label
        if m.any():
            masks[label] = m
    return masks


def evaluate(mlp_model, baseline_models: dict, samples_id, samples_ood,
             k: int = 100, omega: float = 3.0, seed: int = 0,
             fp_thresholds=((1.5, 1.0),)) -> EvalReport:
    """Score the network (Monte Carlo mean) and baselines on a tagged test set.

    The per-row Monte Carlo seed is ``seed + row_index`` so a rerun with the
    same inputs reproduces the report exactly.
    """
    samples = list(samples_id) + list(samples_ood)
    if not samples:
        raise ValueError("no test samples")
    tags = ["id"] * len(samples_id) + ["ood"] * len(samples_ood)
    scen = [s.scenario for s in samples]
    truth = np.stack([s.target.markers for s in samples])
    feats = feature_matrix(samples)

    preds = {}
    for name, bl in baseline_models.items():
        preds[name] = baseline_predict(bl, feats).reshape(-1, 30, 2)

    means = np.empty((len(samples), 60))
    stds = np.empty((len(samples), 60))
    for i, f in enumerate(feats):
        p = mc_predict(mlp_model, f, k=k, seed=seed + i, omega=omega)
        means[i] = p.mean
        stds[i] = p.std
    preds["dnn"] = means.reshape(-1, 30, 2)

    errors = {name: np.linalg.norm(p - truth, axis=2) for name, p in preds.items()}

    tables = {}
    summaries = {}
    tag_arr = np.array(tags)
    for name, err in errors.items():
        tables[name] = {label: aggregate_errors(err[mask])
                        for label, mask in _row_label_masks(scen).items()}
        summaries[name] = {tag: aggregate_errors(err[tag_arr == tag])
                           for tag in ("id", "ood") if (tag_arr == tag).any()}

    tip_std = np.hypot(stds[:, 58], stds[:, 59])
    tip_err = errors["dnn"][:, 29]
    table = list(zip(tip_std.tolist(), tip_err.tolist(), tags))
    fp = {f"err>{et:g}_std<{st:g}": false_positive_count(table, et, st)
          for et, st in fp_thresholds}
    mean_tip_std = {tag: float(tip_std[tag_arr == tag].mean())
                    for tag in ("id", "ood") if (tag_arr == tag).any()}
    return EvalReport(tables=tables, summaries=summaries, uncertainty=table,
                      fp_counts=fp, spearman=spearman_tip(table),
                      mean_tip_std=mean_tip_std)


def render_report_text(report: EvalReport) -> str:
    """Human-readable error tables plus the calibration summary."""
    models = [m for m in MODEL_ORDER if m in report.tables]
    labels = [l for l in ROW_ORDER
              if any(l in report.tables[m] for m in models)]
    lines = []
    for title, med_key, max_key in (("Tip point estimation error [mm]", "tpe_median", "tpe_max"),
                                    ("Shape estimation error [mm]", "dse_median", "dse_max")):
        lines.append(title)
        header = f"{'':14s}" + "".join(f"{m + ' med':>12s}" for m in models)
        header += "".join(f"{m + ' max':>12s}" for m in models)
        lines.append(header)
        for label in labels:
            row = f"{label:14s}"
            row += "".join(f"{report.tables[m][label][med_key]:12.3f}" for m in models)
            row += "".join(f"{report.tables[m][label][max_key]:12.3f}" for m in models)
            lines.append(row)
        lines.append("")
    for m in models:
        for tag, stats in sorted(report.summaries[m].items()):
            lines.append(f"summary {m}/{tag}: tpe_median={stats['tpe_median']:.4f} "
                         f"dse_median={stats['dse_median']:.4f} "
                         f"tpe_max={stats['tpe_max']:.4f} n={stats['count']}")
    for key, count in sorted(report.fp_counts.items()):
        lines.append(f"false positives {key}: {count} of {len(report.uncertainty)}")
    for tag, val in sorted(report.mean_tip_std.items()):
        lines.append(f"mean tip std ({tag}): {val:.5f} mm")
    lines.append(f"spearman(tip_std, tip_error): {report.spearman:.4f}")
    return "\n".join(lines) + "\n"


def report_to_json(report: EvalReport) -> str:
    payload = {"tables": report.tables, "summaries": report.summaries,
               "fp_counts": report.fp_counts, "spearman": report.spearman,
               "mean_tip_std": report.mean_tip_std,
               "n_uncertainty_rows": len(report.uncertainty)}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_uncertainty_csv(table, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("tip_std_mm,tip_error_mm,tag\n")
        for tip_std, tip_err, tag in table:
            fh.write("%.17g,%.17g,%s\n" % (tip_std, tip_err, tag))
