"""Versioned run configuration: one JSON file drives the whole pipeline.

Every stochastic stage carries an explicit seed.  Unknown keys are rejected;
missing keys fall back to the defaults below, so a saved config always
round-trips losslessly through its text form.
"""

from __future__ import annotations

import copy
import json
import math

from .dataset import Scenario
from .fbg import FiberSpec
from .kinematics import CdmConfig, SolverOptions

CONFIG_VERSION = 1


class ConfigError(ValueError):
    """Invalid or unparsable run configuration."""


_DEFAULTS = {
    "config_version": CONFIG_VERSION,
    "geometry": {
        "dexterous_length": 35.0,
        "outer_radius": 3.0,
        "max_cable_disp": 5.0,
        "max_tip_angle_deg": 81.0,
        "fbg_node_arclengths": [4.0, 12.0, 20.0, 28.0],
        "fiber_offset": 0.25,
    },
    "fiber": {
        "base_wavelengths": [1532.0, 1542.0, 1552.0, 1562.0],
        "photoelastic_coeff": 0.22,
        "thermal_expansion": 0.55e-6,
        "thermo_optic": 8.6e-6,
    },
    "noise": {"sigma_nm": 0.002, "temp_range_c": 2.0},
    "scenarios": [],
    "split": {"ood_labels": ["CenterLeft", "TipLeft"], "train_fraction": 0.8, "seed": 7},
    # 200 epochs: below ~150 the fit is rough enough that the dropout
    # uncertainty stops tracking the error ranking on the synthetic benchmark.
    "training": {"epochs": 200, "batch_size": 256, "learning_rate": 1e-3,
                 "dropout": 0.3, "seed": 11, "validation_fraction": 0.05},
    "uncertainty": {"k": 100, "omega": 3.0, "seed": 13},
    "solver": {"gamma": 10.0, "beta": 1.0e4, "max_iters": 500, "fd_step": 1.0e-6,
               "penetration_tol": 0.05, "rel_tol": 1.0e-8},
    "report": {"fp_thresholds": [[1.5, 1.0]]},
    "paths": {"data_dir": "data", "model_dir": "models", "report_dir": "reports"},
}


class RunConfig:
    """Merged, validated configuration with typed accessors."""

    def __init__(self, values: dict):
        self.values = values
        # Building the domain objects validates the numeric content eagerly.
        self.cdm_config()
        self.fiber_spec()
        self.solver_options()
        self.scenario_list()

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        merged = copy.deepcopy(_DEFAULTS)
        if not isinstance(data, dict):
            raise ConfigError("config root must be an object")
        for key, value in data.items():
            if key not in merged:
                raise ConfigError(f"unknown config key {key!r}")
            if isinstance(merged[key], dict):
                if not isinstance(value, dict):
                    raise ConfigError(f"config section {key!r} must be an object")
                for sub, subval in value.items():
                    if sub not in merged[key]:
                        raise ConfigError(f"unknown config key {key}.{sub}")
                    merged[key][sub] = subval
            else:
                merged[key] = value
        if merged["config_version"] != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {merged['config_version']}")
        try:
            return cls(merged)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, "r") as fh:
            return cls.from_json(fh.read())

    def to_json(self) -> str:
        return json.dumps(self.values, indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    # Typed views -----------------------------------------------------------

    def cdm_config(self) -> CdmConfig:
        g = self.values["geometry"]
        return CdmConfig(dexterous_length=float(g["dexterous_length"]),
                         outer_radius=float(g["outer_radius"]),
                         max_cable_disp=float(g["max_cable_disp"]),
                         max_tip_angle=math.radians(float(g["max_tip_angle_deg"])),
                         fbg_node_arclengths=tuple(float(s) for s in g["fbg_node_arclengths"]),
                         fiber_offset=float(g["fiber_offset"]))

    def fiber_spec(self) -> FiberSpec:
        f = self.values["fiber"]
        return FiberSpec(base_wavelengths=tuple(float(w) for w in f["base_wavelengths"]),
                         photoelastic_coeff=float(f["photoelastic_coeff"]),
                         thermal_expansion=float(f["thermal_expansion"]),
                         thermo_optic=float(f["thermo_optic"]),
                         radial_offset=float(self.values["geometry"]["fiber_offset"]))

    def solver_options(self) -> SolverOptions:
        s = self.values["solver"]
        return SolverOptions(gamma=float(s["gamma"]), beta=float(s["beta"]),
                             max_iters=int(s["max_iters"]), fd_step=float(s["fd_step"]),
                             penetration_tol=float(s["penetration_tol"]),
                             rel_tol=float(s["rel_tol"]))

    def scenario_list(self) -> list:
        out = []
        for i, sc in enumerate(self.values["scenarios"]):
            extra = set(sc) - {"kind", "velocity", "sample_rate", "seed"}
            if extra:
                raise ConfigError(f"scenario {i}: unknown keys {sorted(extra)}")
            out.append(Scenario(kind=sc["kind"], velocity=float(sc["velocity"]),
                                sample_rate=float(sc.get("sample_rate", 50.0)),
                                seed=int(sc.get("seed", i))))
        return out


def benchmark_scenarios(bends_per_kind: int = 7, ood_bends_per_kind: int = 4,
                        sample_rate: float = 50.0, seed0: int = 100) -> list:
    """Roughly 50 bends over all eight scenario kinds with cycling velocities."""
    velocities = (0.2, 0.3, 0.4)
    spec = ([("FreespaceLeft", bends_per_kind), ("FreespaceRight", bends_per_kind),
             ("BaseRight", bends_per_kind), ("CenterRight", bends_per_kind),
             ("TipRight", bends_per_kind), ("BaseLeft", bends_per_kind)]
            + [("CenterLeft", ood_bends_per_kind), ("TipLeft", ood_bends_per_kind)])
    out = []
    i = 0
    for kind, count in spec:
        for _ in range(count):
            out.append({"kind": kind, "velocity": velocities[i % len(velocities)],
                        "sample_rate": sample_rate, "seed": seed0 + i})
            i += 1
    return out


def benchmark_config() -> RunConfig:
    """Default end-to-end benchmark: ~50 bends, dropout 0.3, K=100."""
    return RunConfig.from_dict({"scenarios": benchmark_scenarios()})


def small_config(sample_rate: float = 10.0) -> RunConfig:
    """Tiny but complete pipeline config for smoke tests and demos."""
    kinds = ["FreespaceLeft", "FreespaceRight", "BaseRight", "CenterRight",
             "TipRight", "BaseLeft", "CenterLeft", "TipLeft"]
    scenarios = [{"kind": k, "velocity": 0.4, "sample_rate": sample_rate, "seed": 40 + i}
                 for i, k in enumerate(kinds)]
    # Two bends per in-distribution kind so a whole-bend split is possible.
    scenarios += [{"kind": k, "velocity": 0.3, "sample_rate": sample_rate, "seed": 60 + i}
                  for i, k in enumerate(kinds[:6])]
    return RunConfig.from_dict({
        "scenarios": scenarios,
        "split": {"train_fraction": 0.7, "seed": 7},
        "training": {"epochs": 8, "batch_size": 64, "seed": 11},
        "uncertainty": {"k": 25, "omega": 3.0, "seed": 13},
    })
