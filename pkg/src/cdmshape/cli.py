"""Command-line entry point: gen / train / eval / infer / report / verify.

Every run is driven by a JSON config (see config.py) plus a few path flags;
no environment variables are consulted.  Failures print one machine-parsable
line ``error:<kind>:<message>`` to stderr and exit with a kind-specific
code: 2 usage, 3 missing path, 4 invalid config, 5 runtime failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import baselines, evaluation, mlp
from .checkpoint import CheckpointError, load_model, save_model
from .config import ConfigError, RunConfig
from .dataset import (clearance_audit, feature_matrix, fit_normalizer,
                      generate_dataset, read_csv, split_by_bend, target_matrix)
from .fbg import common_mode_correct, fiber_pair, strain_from_shift, wavelength_shift
from .kinematics import (SolverError, constrained_bend, default_obstacle,
                         free_bend_curvature, max_penetration, tip_angle)
from .uncertainty import confidence_interval, mc_predict

EXIT_OK = 0
EXIT_MISSING_PATH = 3
EXIT_BAD_CONFIG = 4
EXIT_RUNTIME = 5

MLP_DIMS = (8, 512, 256, 60)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdmshape",
        description="Simulated continuum-manipulator shape sensing pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate datasets and write train/test CSVs")
    p.add_argument("--config", required=True, help="JSON run config")
    p.add_argument("--out-dir", default=None, help="output directory (default: config paths.data_dir)")

    p = sub.add_parser("train", help="train the network and baselines from train.csv")
    p.add_argument("--config", required=True)
    p.add_argument("--data", default=None, help="training CSV (default: <data_dir>/train.csv)")
    p.add_argument("--out-dir", default=None, help="checkpoint directory (default: config paths.model_dir)")

    p = sub.add_parser("eval", help="score checkpoints on the test CSVs and write reports")
    p.add_argument("--config", required=True)
    p.add_argument("--data-dir", default=None)
    p.add_argument("--model-dir", default=None)
    p.add_argument("--out-dir", default=None, help="report directory (default: config paths.report_dir)")

    p = sub.add_parser("infer", help="predict shapes and intervals from a wavelength CSV")
    p.add_argument("--model", required=True, help="network checkpoint")
    p.add_argument("--input", required=True, help="CSV with dl1..dl8 columns")
    p.add_argument("--output", required=True, help="destination CSV")
    p.add_argument("--k", type=int, default=100, help="Monte Carlo samples per row")
    p.add_argument("--omega", type=float, default=3.0, help="interval scale factor")
    p.add_argument("--seed", type=int, default=0, help="base seed (row i uses seed+i)")

    p = sub.add_parser("report", help="write the uncertainty table and false-positive summary")
    p.add_argument("--config", required=True)
    p.add_argument("--data-dir", default=None)
    p.add_argument("--model-dir", default=None)
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("verify", help="run self-checks: gradients, physics, solver clearance")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"{what} not found: {path}")
    return path


def _load_config(path_str: str) -> RunConfig:
    return RunConfig.load(_require(Path(path_str), "config file"))


def _cmd_gen(args) -> int:
    cfg = _load_config(args.config)
    if not cfg.scenario_list():
        raise ConfigError("config has no scenarios")
    out_dir = Path(args.out_dir or cfg.values["paths"]["data_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    noise = cfg.values["noise"]
    result = generate_dataset(cfg.scenario_list(), cfg.cdm_config(), cfg.fiber_spec(),
                              noise_sigma=float(noise["sigma_nm"]),
                              temp_range=float(noise["temp_range_c"]),
                              solver_opts=cfg.solver_options())
    split = cfg.values["split"]
    parts = split_by_bend(result.samples, ood_labels=tuple(split["ood_labels"]),
                          train_fraction=float(split["train_fraction"]),
                          seed=int(split["seed"]))
    from .dataset import write_csv
    for name, rows in parts.items():
        write_csv(rows, out_dir / f"{name}.csv")
    worst = clearance_audit(result.samples, cfg.cdm_config())
    stats = {"n_train": len(parts["train"]), "n_test_id": len(parts["test_id"]),
             "n_test_ood": len(parts["test_ood"]), "n_skipped": result.n_skipped,
             "skip_fraction": result.skip_fraction, "max_penetration_mm": worst}
    import json
    (out_dir / "gen_stats.json").write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n")
    print(f"gen: {len(result.samples)} samples -> {out_dir} "
          f"(train {stats['n_train']}, test_id {stats['n_test_id']}, "
          f"test_ood {stats['n_test_ood']}, skipped {result.n_skipped})")
    return EXIT_OK


def _cmd_train(args) -> int:
    cfg = _load_config(args.config)
    data_dir = Path(cfg.values["paths"]["data_dir"])
    data = _require(Path(args.data or data_dir / "train.csv"), "training CSV")
    out_dir = Path(args.out_dir or cfg.values["paths"]["model_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    samples = read_csv(data)
    x, y = feature_matrix(samples), target_matrix(samples)
    tr = cfg.values["training"]
    model = mlp.init_mlp(MLP_DIMS, dropout_rate=float(tr["dropout"]),
                         seed=int(tr["seed"]), normalizer=fit_normalizer(x))
    curve = mlp.train(model, x, y, epochs=int(tr["epochs"]),
                      batch_size=int(tr["batch_size"]), seed=int(tr["seed"]),
                      val_fraction=float(tr["validation_fraction"]),
                      learning_rate=float(tr["learning_rate"]))
    save_model(model, out_dir / "dnn.ckpt")
    with open(out_dir / "loss_curve.csv", "w", newline="") as fh:
        fh.write("epoch,train_mse,val_mse\n")
        for epoch, train_mse, val_mse in curve:
            fh.write("%d,%.17g,%.17g\n" % (epoch, train_mse, val_mse))

    for name, feature_map in (("lin", "identity"), ("poly", "poly2")):
        save_model(baselines.fit(x, y, feature_map), out_dir / f"{name}.ckpt")
    final = curve[-1][1] if curve else math.nan
    print(f"train: {len(samples)} rows, {len(curve)} epochs, "
          f"final train mse {final:.6g} -> {out_dir}")
    return EXIT_OK


def _load_test_sets(cfg: RunConfig, data_dir):
    data_dir = Path(data_dir or cfg.values["paths"]["data_dir"])
    test_id = read_csv(_require(data_dir / "test_id.csv", "test_id CSV"))
    test_ood = read_csv(_require(data_dir / "test_ood.csv", "test_ood CSV"))
    return test_id, test_ood


def _load_models(cfg: RunConfig, model_dir):
    model_dir = Path(model_dir or cfg.values["paths"]["model_dir"])
    dnn = load_model(_require(model_dir / "dnn.ckpt", "network checkpoint"))
    if not isinstance(dnn, mlp.MlpModel):
        raise CheckpointError("dnn.ckpt does not contain a network model")
    blms = {}
    for name in ("lin", "poly"):
        path = model_dir / f"{name}.ckpt"
        if path.exists():
            blms[name] = load_model(path)
    return dnn, blms


def _run_evaluation(cfg: RunConfig, data_dir, model_dir) -> evaluation.EvalReport:
    test_id, test_ood = _load_test_sets(cfg, data_dir)
    dnn, blms = _load_models(cfg, model_dir)
    uq = cfg.values["uncertainty"]
    thresholds = tuple(tuple(pair) for pair in cfg.values["report"]["fp_thresholds"])
    return evaluation.evaluate(dnn, blms, test_id, test_ood, k=int(uq["k"]),
                               omega=float(uq["omega"]), seed=int(uq["seed"]),
                               fp_thresholds=thresholds)


def _cmd_eval(args) -> int:
    cfg = _load_config(args.config)
    out_dir = Path(args.out_dir or cfg.values["paths"]["report_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    report = _run_evaluation(cfg, args.data_dir, args.model_dir)
    (out_dir / "report.txt").write_text(evaluation.render_report_text(report))
    (out_dir / "report.json").write_text(evaluation.report_to_json(report))
    evaluation.write_uncertainty_csv(report.uncertainty, out_dir / "uncertainty.csv")
    print(f"eval: {len(report.uncertainty)} test rows -> {out_dir}")
    return EXIT_OK


def _cmd_report(args) -> int:
    cfg = _load_config(args.config)
    out_dir = Path(args.out_dir or cfg.values["paths"]["report_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    report = _run_evaluation(cfg, args.data_dir, args.model_dir)
    evaluation.write_uncertainty_csv(report.uncertainty, out_dir / "uncertainty.csv")
    import json
    summary = {"fp_counts": report.fp_counts, "spearman": report.spearman,
               "mean_tip_std": report.mean_tip_std,
               "n_rows": len(report.uncertainty)}
    (out_dir / "fp_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"report: {len(report.uncertainty)} rows, "
          f"fp={report.fp_counts}, spearman={report.spearman:.4f} -> {out_dir}")
    return EXIT_OK


def _read_wavelength_csv(path) -> np.ndarray:
    """Extract dl1..dl8 columns (by name) from a CSV."""
    with open(path, "r", newline="") as fh:
        header = fh.readline().rstrip("\n").split(",")
        want = [f"dl{i}" for i in range(1, 9)]
        try:
            idx = [header.index(c) for c in want]
        except ValueError as exc:
            raise ValueError(f"input CSV is missing a wavelength column: {exc}") from None
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            try:
                rows.append([float(parts[i]) for i in idx])
            except (ValueError, IndexError):
                raise ValueError(f"line {lineno}: cannot parse wavelength row") from None
    return np.asarray(rows, dtype=float).reshape(-1, 8)


def _cmd_infer(args) -> int:
    model = load_model(_require(Path(args.model), "model checkpoint"))
    if not isinstance(model, mlp.MlpModel):
        raise CheckpointError("infer needs a network checkpoint (dropout sampling)")
    rows = _read_wavelength_csv(_require(Path(args.input), "input CSV"))
    cols = ([f"p{i}{c}" for i in range(1, 31) for c in "xy"]
            + [f"u{i}{c}" for i in range(1, 31) for c in "xy"])
    with open(args.output, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for i, feats in enumerate(rows):
            pred = mc_predict(model, feats, k=args.k, seed=args.seed + i, omega=args.omega)
            u = confidence_interval(pred, args.omega)
            fh.write(",".join("%.17g" % v for v in np.concatenate([pred.mean, u])) + "\n")
    print(f"infer: {len(rows)} rows -> {args.output} (k={args.k}, omega={args.omega})")
    return EXIT_OK


def _cmd_verify(args) -> int:
    """Self-checks covering the calibration, physics, gradients, and solver."""
    from .config import _DEFAULTS  # defaults double as the verification fixture
    cfg = RunConfig.from_dict({})
    cdm = cfg.cdm_config()
    failures = []

    deg = math.degrees(tip_angle(free_bend_curvature(cdm.max_cable_disp, cdm), cdm))
    ok = abs(deg - 81.0) < 1e-9
    print(f"verify calibration: full-pull tip angle {deg:.12f} deg "
          f"({'ok' if ok else 'FAIL'})")
    if not ok:
        failures.append("calibration")

    rng = np.random.default_rng(args.seed)
    worst_tip = 0.0
    from .kinematics import shape_from_curvatures
    for kappa in rng.uniform(-cdm.kappa_bound, cdm.kappa_bound, size=5):
        frame = shape_from_curvatures(np.full(30, kappa), cdm)
        s = np.linspace(0.0, cdm.dexterous_length, 100001)
        tip = np.array([np.trapezoid(np.cos(kappa * s), s),
                        np.trapezoid(np.sin(kappa * s), s)])
        worst_tip = max(worst_tip, float(np.linalg.norm(frame.tip - tip)))
    ok = worst_tip < 1e-6
    print(f"verify kinematics: max tip deviation vs quadrature {worst_tip:.3e} mm "
          f"({'ok' if ok else 'FAIL'})")
    if not ok:
        failures.append("kinematics")

    fiber = cfg.fiber_spec()
    eps = rng.uniform(-0.012, 0.012, size=1000)
    worst_rel = 0.0
    for node in range(1, 5):
        back = strain_from_shift(wavelength_shift(eps, 0.0, fiber, node), fiber, node)
        worst_rel = max(worst_rel, float(np.max(np.abs(back - eps) / np.maximum(np.abs(eps), 1e-300))))
    raw = rng.normal(0.0, 0.5, size=8)
    lams = np.concatenate([fiber.base_wavelengths, fiber.base_wavelengths])
    shifted = raw + lams * fiber.temp_coeff * 7.5
    resid = float(np.max(np.abs(common_mode_correct(shifted) - common_mode_correct(raw))))
    ok = worst_rel < 1e-15 and resid < 1e-12
    print(f"verify physics: strain round-trip rel err {worst_rel:.3e}, "
          f"temperature residual {resid:.3e} nm ({'ok' if ok else 'FAIL'})")
    if not ok:
        failures.append("physics")

    dev = max(mlp.gradient_check((8, 5, 4, 6), seed=args.seed),
              mlp.gradient_check((6, 7, 3, 2), seed=args.seed + 1))
    ok = dev < 1e-5
    print(f"verify gradients: max relative deviation {dev:.3e} ({'ok' if ok else 'FAIL'})")
    if not ok:
        failures.append("gradients")

    obstacle = default_obstacle("CenterLeft", cdm)
    profile = constrained_bend(4.5, obstacle, cdm, cfg.solver_options())
    pen = max_penetration(profile, obstacle, cdm)
    ok = pen <= cfg.solver_options().penetration_tol
    print(f"verify solver: constrained-bend penetration {pen:.4f} mm "
          f"({'ok' if ok else 'FAIL'})")
    if not ok:
        failures.append("solver")

    if failures:
        raise RuntimeError(f"verification failed: {', '.join(failures)}")
    print("verify: all checks passed")
    return EXIT_OK


_COMMANDS = {"gen": _cmd_gen, "train": _cmd_train, "eval": _cmd_eval,
             "infer": _cmd_infer, "report": _cmd_report, "verify": _cmd_verify}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error:missing-path:{exc}", file=sys.stderr)
        return EXIT_MISSING_PATH
    except ConfigError as exc:
        print(f"error:config:{exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except (SolverError, mlp.TrainingDiverged, CheckpointError) as exc:
        print(f"error:{type(exc).__name__}:{exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, RuntimeError) as exc:
        print(f"error:runtime:{exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
