"""Fiber Bragg grating wavelength model for the two-fiber sensing assembly.

Each fiber carries four gratings at fixed arclengths.  Bending strain at a
grating is the fiber's radial offset times the local segment curvature;
tension raises the reflected wavelength, compression lowers it.  A uniform
temperature change shifts both fibers identically and is removed by
subtracting the per-node mean of the paired shifts (common-mode correction),
leaving an antisymmetric 8-value feature frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import CdmConfig


@dataclass(frozen=True)
class FiberSpec:
    """Optical and placement constants of one sensing fiber.

    Standard silica values; ``radial_offset`` is signed so the two fibers of
    the assembly are +0.25 mm and -0.25 mm from the neutral axis.
    """

    base_wavelengths: tuple = (1532.0, 1542.0, 1552.0, 1562.0)  # nm
    photoelastic_coeff: float = 0.22
    thermal_expansion: float = 0.55e-6   # 1/degC
    thermo_optic: float = 8.6e-6         # 1/degC
    radial_offset: float = 0.25          # mm, signed

    def __post_init__(self):
        if not 0.0 < self.photoelastic_coeff < 1.0:
            raise ValueError("photoelastic coefficient must be in (0, 1)")
        if len(self.base_wavelengths) != 4:
            raise ValueError("need one base wavelength per node (4)")

    @property
    def temp_coeff(self) -> float:
        return self.thermal_expansion + self.thermo_optic


def fiber_pair(spec: FiberSpec = FiberSpec()) -> tuple[FiberSpec, FiberSpec]:
    """The two assembly fibers: same gratings, opposite radial offsets."""
    r = abs(spec.radial_offset)
    return (FiberSpec(spec.base_wavelengths, spec.photoelastic_coeff,
                      spec.thermal_expansion, spec.thermo_optic, +r),
            FiberSpec(spec.base_wavelengths, spec.photoelastic_coeff,
                      spec.thermal_expansion, spec.thermo_optic, -r))


def node_segment_indices(config: CdmConfig) -> np.ndarray:
    """Index of the segment containing each grating arclength.

    An arclength exactly on a boundary belongs to the segment starting there.
    """
    s = np.asarray(config.fbg_node_arclengths, dtype=float)
    idx = np.floor(s / config.seg_len).astype(int)
    return np.minimum(idx, config.n_segments - 1)


def node_strains(profile, fiber: FiberSpec, config: CdmConfig) -> np.ndarray:
    """Bending strain at the 4 grating locations: radial offset times curvature."""
    kappa = np.asarray(profile, dtype=float)
    if kappa.shape != (config.n_segments,):
        raise ValueError(f"expected a {config.n_segments}-segment profile, got {kappa.shape}")
    s = np.asarray(config.fbg_node_arclengths, dtype=float)
    if s[0] < 0 or s[-1] > config.dexterous_length:
        raise ValueError("grating arclength outside the dexterous length")
    return fiber.radial_offset * kappa[node_segment_indices(config)]


def wavelength_shift(strain, delta_t: float, fiber: FiberSpec, node: int):
    """Reflected-peak shift (nm) from mechanical strain and temperature change.

    shift = base * ((1 - p_e) * strain + (alpha_expansion + alpha_thermo) * dT)
    """
    if not 1 <= node <= 4:
        raise ValueError("node index must be in 1..4")
    lam = fiber.base_wavelengths[node - 1]
    return lam * ((1.0 - fiber.photoelastic_coeff) * np.asarray(strain)
                  + fiber.temp_coeff * delta_t)


def strain_from_shift(delta_lambda, fiber: FiberSpec, node: int):
    """Invert the strain-shift relation; assumes temperature already compensated."""
    if not 1 <= node <= 4:
        raise ValueError("node index must be in 1..4")
    lam = fiber.base_wavelengths[node - 1]
    return np.asarray(delta_lambda) / (lam * (1.0 - fiber.photoelastic_coeff))


def common_mode_correct(raw) -> np.ndarray:
    """Remove the shared (temperature) component from 8 raw shifts.

    Input order is (fiber 1 nodes 1-4, fiber 2 nodes 1-4).  For each node the
    mean of the paired shifts is subtracted from both, which cancels any
    component common to the two fibers exactly.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.shape[-1] != 8:
        raise ValueError(f"expected 8 raw shifts, got shape {raw.shape}")
    mean = 0.5 * (raw[..., :4] + raw[..., 4:])
    return np.concatenate([raw[..., :4] - mean, raw[..., 4:] - mean], axis=-1)


def profile_shifts(profile, config: CdmConfig, fibers=None, delta_t: float = 0.0) -> np.ndarray:
    """Raw 8-value shift frame for a curvature profile at temperature change delta_t."""
    if fibers is None:
        fibers = fiber_pair()
    out = np.empty(8)
    for f, fiber in enumerate(fibers):
        eps = node_strains(profile, fiber, config)
        lam = np.asarray(fiber.base_wavelengths, dtype=float)
        out[4 * f:4 * f + 4] = lam * ((1.0 - fiber.photoelastic_coeff) * eps
                                      + fiber.temp_coeff * delta_t)
    return out


def add_measurement_noise(frame, sigma: float, rng) -> np.ndarray:
    """Add i.i.d. Gaussian interrogator noise; ``rng`` is a seed or Generator."""
    if sigma < 0:
        raise ValueError("noise sigma must be non-negative")
    frame = np.asarray(frame, dtype=float)
    if sigma == 0:
        return frame.copy()
    gen = np.random.default_rng(rng)
    return frame + gen.normal(0.0, sigma, size=frame.shape)
