"""Planar constant-curvature simulator for a cable-driven continuum manipulator.

The bendable region is discretized into 30 circular arcs of equal length.
A curvature profile is a plain float array of 30 signed curvatures in 1/mm
(positive bends toward +y, the "left" side).  Marker ``j`` (0-based) sits at
arclength ``j * seg_len``, so ``markers[0]`` is the base origin and the chord
between consecutive markers is the chord of the arc between them.  The frame
also carries the endpoint of the full bendable length ("tip") and the tip
tangent angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

OBSTACLE_LABELS = ("BaseLeft", "CenterLeft", "TipLeft",
                   "BaseRight", "CenterRight", "TipRight")

# Arclength fraction and cable displacement at first contact used to place
# the six default obstacles (tangent-circle construction, see default_obstacle).
_PLACEMENT_FRACTION = {"Base": 0.30, "Center": 0.55, "Tip": 0.85}
_PLACEMENT_CONTACT_DISP = {"Base": 2.6, "Center": 2.8, "Tip": 3.0}


@dataclass(frozen=True)
class CdmConfig:
    """Geometry and actuation calibration of the manipulator.

    ``max_tip_angle`` / ``max_cable_disp`` anchors the linear cable-to-bend
    calibration (5 mm of cable equals an 81 degree tip deflection).
    """

    dexterous_length: float = 35.0            # mm
    n_segments: int = 30
    outer_radius: float = 3.0                 # mm (6 mm OD tube)
    max_cable_disp: float = 5.0               # mm
    max_tip_angle: float = math.radians(81.0) # rad
    fbg_node_arclengths: tuple = (4.0, 12.0, 20.0, 28.0)  # mm, 8 mm spacing
    fiber_offset: float = 0.25                # mm from sensor-assembly neutral axis

    def __post_init__(self):
        if self.n_segments != 30:
            raise ValueError(f"n_segments must be 30, got {self.n_segments}")
        nodes = np.asarray(self.fbg_node_arclengths, dtype=float)
        if nodes.shape != (4,) or np.any(np.diff(nodes) <= 0):
            raise ValueError("fbg_node_arclengths must be 4 strictly increasing values")
        if nodes[0] < 0 or nodes[-1] > self.dexterous_length:
            raise ValueError("fbg_node_arclengths must lie within the dexterous length")
        if self.max_cable_disp <= 0 or self.dexterous_length <= 0:
            raise ValueError("lengths and displacements must be positive")

    @property
    def seg_len(self) -> float:
        return self.dexterous_length / self.n_segments

    @property
    def kappa_bound(self) -> float:
        """Sanity bound on per-segment curvature magnitude."""
        return 2.0 * self.max_tip_angle / self.dexterous_length


@dataclass(frozen=True)
class Obstacle:
    """Rigid disc obstacle in the bending plane."""

    center: tuple  # (x, y) mm
    radius: float = 10.0
    label: str = ""

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("obstacle radius must be positive")


@dataclass
class ShapeFrame:
    """30 planar marker positions (mm) plus the bendable-length endpoint.

    ``markers[0]`` is exactly (0, 0); ``tip`` is the endpoint of the last arc
    and ``tip_angle`` the tangent angle there.  Frames deserialized from CSV
    carry markers only (``tip``/``tip_angle`` set to None).
    """

    markers: np.ndarray             # (30, 2)
    tip_angle: float | None = None  # rad
    tip: np.ndarray | None = None   # (2,)


@dataclass(frozen=True)
class SolverOptions:
    """Penalty-solver settings for obstacle-constrained bending."""

    gamma: float = 10.0        # smoothness weight
    beta: float = 1.0e4        # penetration penalty weight
    max_iters: int = 500
    fd_step: float = 1.0e-6    # central-difference step, 1/mm
    penetration_tol: float = 0.05  # mm
    rel_tol: float = 1.0e-8    # relative objective decrease at termination
    init_step: float = 1.0e-9  # first line-search trial step
    armijo_c: float = 1.0e-4


class SolverError(RuntimeError):
    """Constrained solve failed to reach the clearance tolerance."""

    def __init__(self, message: str, penetration: float):
        super().__init__(message)
        self.penetration = penetration


def check_profile(profile, config: CdmConfig) -> np.ndarray:
    """Validate a curvature profile and return it as a float array."""
    kappa = np.asarray(profile, dtype=float)
    if kappa.shape != (config.n_segments,):
        raise ValueError(f"curvature profile must have shape ({config.n_segments},), "
                         f"got {kappa.shape}")
    if not np.all(np.isfinite(kappa)):
        raise ValueError("curvature profile contains non-finite values")
    bound = config.kappa_bound
    if np.any(np.abs(kappa) > bound):
        raise ValueError(f"curvature magnitude exceeds sanity bound {bound:.6g} 1/mm")
    return kappa


def free_bend_curvature(delta: float, config: CdmConfig) -> np.ndarray:
    """Uniform curvature profile for unobstructed bending at cable displacement delta.

    Linear calibration through the single published anchor: the maximum
    displacement produces the maximum tip angle.  Positive delta bends left.
    """
    if abs(delta) > config.max_cable_disp:
        raise ValueError(f"cable displacement {delta} mm out of range "
                         f"[-{config.max_cable_disp}, {config.max_cable_disp}] mm")
    kappa = (config.max_tip_angle / config.max_cable_disp) * delta / config.dexterous_length
    return np.full(config.n_segments, kappa, dtype=float)


def tip_angle(profile, config: CdmConfig) -> float:
    """Tangent angle at the end of the bendable region: sum of per-arc turns."""
    kappa = check_profile(profile, config)
    return float(np.sum(kappa * config.seg_len))


def _points_from_curvatures(kappa_batch: np.ndarray, config: CdmConfig) -> np.ndarray:
    """Polyline points for a (B, 30) batch of profiles, unchecked.

    Returns (B, 31, 2): the base origin, then the endpoint of each arc.
    Closed-form per-arc update; exact straight-segment limit at kappa == 0.
    """
    ell = config.seg_len
    kl = kappa_batch * ell
    theta = np.cumsum(kl, axis=1)
    theta_prev = theta - kl

    straight = kappa_batch == 0.0
    safe = np.where(straight, 1.0, kappa_batch)
    dx_local = np.where(straight, ell, np.sin(kl) / safe)
    dy_local = np.where(straight, 0.0, (1.0 - np.cos(kl)) / safe)

    c, s = np.cos(theta_prev), np.sin(theta_prev)
    dx = c * dx_local - s * dy_local
    dy = s * dx_local + c * dy_local

    pts = np.zeros((kappa_batch.shape[0], kappa_batch.shape[1] + 1, 2))
    pts[:, 1:, 0] = np.cumsum(dx, axis=1)
    pts[:, 1:, 1] = np.cumsum(dy, axis=1)
    return pts


def shape_from_curvatures(profile, config: CdmConfig) -> ShapeFrame:
    """Integrate the piecewise-arc forward kinematics into a marker frame.

    Base tangent along +x.  Marker j (0-based) is the start of arc j, i.e.
    arclength j * seg_len; ``tip`` is the endpoint of arc 30.
    """
    kappa = check_profile(profile, config)
    pts = _points_from_curvatures(kappa[None, :], config)[0]
    return ShapeFrame(markers=pts[:-1].copy(),
                      tip_angle=float(np.sum(kappa * config.seg_len)),
                      tip=pts[-1].copy())


def _penetrations(pts: np.ndarray, obstacle: Obstacle, config: CdmConfig) -> np.ndarray:
    """Signed penetration depth (mm) of each polyline point into the obstacle."""
    center = np.asarray(obstacle.center, dtype=float)
    clearance = obstacle.radius + config.outer_radius
    d = np.linalg.norm(pts - center, axis=-1)
    return clearance - d


def max_penetration(profile, obstacle: Obstacle, config: CdmConfig) -> float:
    """Largest penetration of the 30 markers and the tip point; negative = clear."""
    kappa = np.asarray(profile, dtype=float)
    pts = _points_from_curvatures(kappa[None, :], config)[0]
    return float(np.max(_penetrations(pts, obstacle, config)))


def _objective_batch(kappa_batch, kappa_free, obstacle, config, opts):
    """Penalty objective for a (B, 30) batch of curvature profiles."""
    dev = kappa_batch - kappa_free
    prox = np.sum(dev * dev, axis=1)
    diff = kappa_batch[:, 1:] - kappa_batch[:, :-1]
    smooth = opts.gamma * np.sum(diff * diff, axis=1)
    pts = _points_from_curvatures(kappa_batch, config)
    viol = np.maximum(0.0, _penetrations(pts, obstacle, config))
    pen = opts.beta * np.sum(viol * viol, axis=1)
    return prox + smooth + pen


def constrained_bend(delta: float, obstacle: Obstacle, config: CdmConfig,
                     opts: SolverOptions = SolverOptions(),
                     warm_start=None) -> np.ndarray:
    """Curvature profile for bending at displacement delta against an obstacle.

    Minimizes the penalized deviation from the free-bend profile: proximity +
    smoothness + quadratic penetration penalty, by gradient descent with
    backtracking line search and central finite-difference gradients.  If the
    free-bend shape already clears the obstacle it is returned exactly.

    ``warm_start`` seeds the iteration (used when tracking a displacement
    sweep); it does not change the objective.

    Raises SolverError (carrying the final penetration) when the clearance
    tolerance is not met within ``max_iters``.
    """
    kappa_free = free_bend_curvature(delta, config)
    if max_penetration(kappa_free, obstacle, config) <= 0.0:
        return kappa_free

    n = config.n_segments
    kappa = np.array(kappa_free if warm_start is None else warm_start, dtype=float)

    def objective(batch):
        return _objective_batch(batch, kappa_free, obstacle, config, opts)

    j_cur = float(objective(kappa[None, :])[0])
    step = opts.init_step
    h = opts.fd_step
    eye = np.eye(n)

    for _ in range(opts.max_iters):
        # Central finite differences, evaluated as one 2n-row batch.
        batch = np.concatenate([kappa + h * eye, kappa - h * eye], axis=0)
        vals = objective(batch)
        grad = (vals[:n] - vals[n:]) / (2.0 * h)
        gnorm2 = float(grad @ grad)
        if gnorm2 == 0.0:
            break

        # Backtracking line search with step carried across iterations.
        step = min(step * 4.0, 1.0)
        accepted = False
        while step > 1e-18:
            trial = kappa - step * grad
            j_new = float(objective(trial[None, :])[0])
            if j_new <= j_cur - opts.armijo_c * step * gnorm2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break

        kappa = trial
        pen = max_penetration(kappa, obstacle, config)
        rel_drop = (j_cur - j_new) / max(j_cur, 1e-300)
        j_cur = j_new
        if pen <= opts.penetration_tol and rel_drop < opts.rel_tol:
            break

    pen = max_penetration(kappa, obstacle, config)
    if pen > opts.penetration_tol:
        raise SolverError(
            f"constrained bend did not converge: penetration {pen:.4f} mm "
            f"exceeds {opts.penetration_tol} mm", penetration=pen)
    return kappa


def default_obstacle(label: str, config: CdmConfig) -> Obstacle:
    """Disc placed tangent to the free-bend shape partway through the sweep.

    The disc touches the circle swept by the point at a fixed arclength
    fraction when the cable reaches the placement's contact displacement, so
    deeper bends are deflected while shallow ones stay free.  Right-side
    placements mirror the left-side construction across the x axis.
    """
    if label not in OBSTACLE_LABELS:
        raise ValueError(f"unknown obstacle placement {label!r}; "
                         f"expected one of {OBSTACLE_LABELS}")
    region = label.replace("Left", "").replace("Right", "")
    side = 1.0 if label.endswith("Left") else -1.0

    delta_c = _PLACEMENT_CONTACT_DISP[region]
    s = _PLACEMENT_FRACTION[region] * config.dexterous_length
    kappa = (config.max_tip_angle / config.max_cable_disp) * delta_c / config.dexterous_length
    th = kappa * s
    px, py = math.sin(th) / kappa, (1.0 - math.cos(th)) / kappa
    # Unit normal toward the center of curvature (the side being bent into).
    nx, ny = -math.sin(th), math.cos(th)
    reach = 10.0 + config.outer_radius
    cx, cy = px + reach * nx, py + reach * ny

    obstacle = Obstacle(center=(cx, side * cy), radius=10.0, label=label)
    # Placement must clear the straight pose.
    if max_penetration(np.zeros(config.n_segments), obstacle, config) > 0:
        raise ValueError(f"placement {label!r} intersects the undeflected shape")
    return obstacle
