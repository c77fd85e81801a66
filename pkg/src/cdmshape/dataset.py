"""Synthetic bend-trajectory dataset generation, splitting, and CSV storage.

A scenario is one bend: the cable sweeps 0 -> 5 mm -> 0 as a triangle wave at
a fixed velocity, sampled at a fixed rate.  Freespace scenarios use the
uniform free-bend profile; obstacle scenarios run the penalty solver with
warm starting along the sweep.  Features are the 8 mode-corrected wavelength
shifts (noise and a per-sample uniform temperature change applied before
correction); targets are the noiseless marker frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fbg import FiberSpec, common_mode_correct, fiber_pair, profile_shifts
from .kinematics import (OBSTACLE_LABELS, CdmConfig, ShapeFrame, SolverError,
                         SolverOptions, constrained_bend, default_obstacle,
                         free_bend_curvature, max_penetration,
                         shape_from_curvatures)

SCENARIO_KINDS = ("FreespaceLeft", "FreespaceRight") + OBSTACLE_LABELS
VELOCITY_RANGE = (0.1, 0.4)  # mm/s
DEFAULT_OOD_LABELS = ("CenterLeft", "TipLeft")

CSV_COLUMNS = (["bend_id", "t", "scenario"]
               + [f"dl{i}" for i in range(1, 9)]
               + [c for i in range(1, 31) for c in (f"p{i}x", f"p{i}y")])


class CsvFormatError(ValueError):
    """Malformed dataset CSV; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Scenario:
    """One bend: kind, cable velocity, sampling rate, and RNG seed."""

    kind: str
    velocity: float
    sample_rate: float = 50.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        lo, hi = VELOCITY_RANGE
        if not lo <= self.velocity <= hi:
            raise ValueError(f"velocity {self.velocity} mm/s outside [{lo}, {hi}]")
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")


@dataclass
class Sample:
    features: np.ndarray   # (8,) mode-corrected shifts, nm
    target: ShapeFrame
    scenario: str
    bend_id: int
    t: float               # seconds since bend start


@dataclass(frozen=True)
class Normalizer:
    """Per-feature min-max scaling fitted on training features only.

    Test-set values may fall outside [0, 1]; they are deliberately not
    clipped so distribution shift stays visible in the features.
    A constant feature maps to 0.
    """

    lo: np.ndarray
    hi: np.ndarray

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        span = self.hi - self.lo
        safe = np.where(span == 0.0, 1.0, span)
        return np.where(span == 0.0, 0.0, (x - self.lo) / safe)

    def inverse(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x * (self.hi - self.lo) + self.lo


def fit_normalizer(features) -> Normalizer:
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[0] < 2:
        raise ValueError("normalizer needs at least 2 training rows")
    return Normalizer(lo=features.min(axis=0), hi=features.max(axis=0))


def bend_schedule(velocity: float, sample_rate: float, max_disp: float = 5.0) -> np.ndarray:
    """Cable-displacement magnitudes for one triangle-wave bend (0 -> max -> 0)."""
    step = velocity / sample_rate
    n = int(round(2.0 * max_disp / velocity * sample_rate))
    k = np.arange(n)
    return np.minimum(np.minimum(k, n - k) * step, max_disp)


@dataclass
class GenResult:
    samples: list
    n_skipped: int

    @property
    def skip_fraction(self) -> float:
        total = len(self.samples) + self.n_skipped
        return self.n_skipped / total if total else 0.0


def generate_dataset(scenarios, config: CdmConfig = CdmConfig(),
                     fiber: FiberSpec = FiberSpec(), noise_sigma: float = 0.002,
                     temp_range: float = 2.0,
                     solver_opts: SolverOptions = SolverOptions()) -> GenResult:
    """Simulate every scenario and pair feature frames with marker frames.

    Deterministic per scenario seed: the temperature and noise draws for a
    bend are generated up front, so a skipped sample never shifts the stream.
    Solver failures skip the sample and are counted in the result.
    """
    if not scenarios:
        raise ValueError("scenario list is empty")
    fibers = fiber_pair(fiber)
    samples: list[Sample] = []
    skipped = 0

    for bend_id, sc in enumerate(scenarios):
        deltas = bend_schedule(sc.velocity, sc.sample_rate, config.max_cable_disp)
        side = 1.0 if sc.kind.endswith("Left") else -1.0
        obstacle = default_obstacle(sc.kind, config) if sc.kind in OBSTACLE_LABELS else None

        rng = np.random.default_rng(sc.seed)
        n = len(deltas)
        temps = rng.uniform(-temp_range, temp_range, size=n)
        noise = rng.normal(0.0, noise_sigma, size=(n, 8)) if noise_sigma > 0 else np.zeros((n, 8))

        cache: dict[float, np.ndarray] = {}
        warm = None
        for k in range(n):
            delta = side * deltas[k]
            try:
                if obstacle is None:
                    profile = free_bend_curvature(delta, config)
                else:
                    profile = cache.get(deltas[k])
                    if profile is None:
                        profile = constrained_bend(delta, obstacle, config,
                                                   solver_opts, warm_start=warm)
                        cache[deltas[k]] = profile
                        warm = profile
                frame = shape_from_curvatures(profile, config)
            except (SolverError, ValueError):
                skipped += 1
                continue
            raw = profile_shifts(profile, config, fibers, delta_t=temps[k])
            feats = common_mode_correct(raw + noise[k])
            samples.append(Sample(features=feats, target=frame, scenario=sc.kind,
                                  bend_id=bend_id, t=k / sc.sample_rate))
    return GenResult(samples=samples, n_skipped=skipped)


def clearance_audit(samples, config: CdmConfig = CdmConfig()) -> float:
    """Largest obstacle penetration (mm) over all obstacle-scenario samples."""
    worst = -np.inf
    obstacles = {}
    for s in samples:
        if s.scenario not in OBSTACLE_LABELS:
            continue
        obs = obstacles.get(s.scenario)
        if obs is None:
            obs = obstacles[s.scenario] = default_obstacle(s.scenario, config)
        center = np.asarray(obs.center)
        pts = s.target.markers
        if s.target.tip is not None:
            pts = np.vstack([pts, s.target.tip])
        d = np.linalg.norm(pts - center, axis=1)
        worst = max(worst, float(np.max(obs.radius + config.outer_radius - d)))
    return worst


def repair_markers(markers, outlier_flags):
    """Repair a single flagged marker on the local constant-curvature arc.

    Returns a ShapeFrame, or None when the sample must be rejected (more than
    one outlier, or an outlier at either end of the chain where the arc is
    underdetermined).  With no outliers the markers pass through unchanged.
    """
    markers = np.asarray(markers, dtype=float)
    flags = np.asarray(outlier_flags, dtype=bool)
    if markers.shape != (flags.size, 2):
        raise ValueError("markers and outlier flags disagree in length")
    bad = np.flatnonzero(flags)
    if bad.size == 0:
        return ShapeFrame(markers=markers.copy())
    if bad.size > 1:
        return None
    i = int(bad[0])
    if i == 0 or i == len(markers) - 1:
        return None

    a, b = markers[i - 1], markers[i + 1]
    c = markers[i - 2] if i >= 2 else markers[i + 2]
    repaired = markers.copy()
    repaired[i] = _arc_midpoint(a, b, c)
    return ShapeFrame(markers=repaired)


def _arc_midpoint(a, b, c) -> np.ndarray:
    """Midpoint of the arc from a to b on the circle through a, b, c.

    Falls back to the straight-line midpoint when the three points are
    (nearly) collinear.
    """
    ab, ac = b - a, c - a
    denom = 2.0 * (ab[0] * ac[1] - ab[1] * ac[0])
    scale = max(np.abs(ab).max(), np.abs(ac).max(), 1e-30)
    if abs(denom) < 1e-9 * scale ** 2:
        return 0.5 * (a + b)
    # Circumcenter of (a, b, c).
    na, nb = ab @ ab, ac @ ac
    ux = a[0] + (ac[1] * na - ab[1] * nb) / denom
    uy = a[1] + (ab[0] * nb - ac[0] * na) / denom
    center = np.array([ux, uy])
    va, vb = a - center, b - center
    half = 0.5 * np.arctan2(va[0] * vb[1] - va[1] * vb[0], va @ vb)
    rot = np.array([[np.cos(half), -np.sin(half)],
                    [np.sin(half), np.cos(half)]])
    return center + rot @ va


def split_by_bend(samples, ood_labels=DEFAULT_OOD_LABELS, train_fraction: float = 0.8,
                  seed: int = 0) -> dict:
    """Partition samples into train / test_id / test_ood, never splitting a bend.

    All samples of OOD-labelled scenarios go to test_ood.  The remaining bend
    ids are shuffled (seeded) and the first ``train_fraction`` of whole bends
    form the training set.
    """
    ood_labels = set(ood_labels)
    test_ood = [s for s in samples if s.scenario in ood_labels]
    rest = [s for s in samples if s.scenario not in ood_labels]

    ids = sorted({s.bend_id for s in rest})
    order = np.random.default_rng(seed).permutation(len(ids))
    n_train = int(train_fraction * len(ids))
    if n_train == 0:
        raise ValueError("train split is empty; raise train_fraction or add bends")
    train_ids = {ids[i] for i in order[:n_train]}

    train = [s for s in rest if s.bend_id in train_ids]
    test_id = [s for s in rest if s.bend_id not in train_ids]
    return {"train": train, "test_id": test_id, "test_ood": test_ood}


def feature_matrix(samples) -> np.ndarray:
    return np.array([s.features for s in samples], dtype=float).reshape(len(samples), 8)


def target_matrix(samples) -> np.ndarray:
    return np.array([s.target.markers.ravel() for s in samples], dtype=float)


def write_csv(samples, path) -> None:
    """Write samples with full float precision (17 significant digits)."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for s in samples:
            row = [str(s.bend_id), "%.17g" % s.t, s.scenario]
            row += ["%.17g" % v for v in s.features]
            row += ["%.17g" % v for v in s.target.markers.ravel()]
            fh.write(",".join(row) + "\n")


def read_csv(path) -> list:
    """Read samples written by write_csv; inverse up to float parsing (exact)."""
    with open(path, "r", newline="") as fh:
        header = fh.readline().rstrip("\n")
        if not header:
            raise CsvFormatError("empty file, expected a header", line=1)
        cols = header.split(",")
        for want in CSV_COLUMNS:
            if want not in cols:
                raise CsvFormatError(f"missing column {want!r}", line=1)
        if cols != CSV_COLUMNS:
            raise CsvFormatError("unexpected column layout", line=1)

        samples = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(CSV_COLUMNS):
                raise CsvFormatError(
                    f"expected {len(CSV_COLUMNS)} fields, got {len(parts)}", line=lineno)
            try:
                bend_id = int(parts[0])
                t = float(parts[1])
                values = np.array([float(v) for v in parts[3:]], dtype=float)
            except ValueError as exc:
                raise CsvFormatError(str(exc), line=lineno) from None
            samples.append(Sample(features=values[:8],
                                  target=ShapeFrame(markers=values[8:].reshape(30, 2)),
                                  scenario=parts[2], bend_id=bend_id, t=t))
    return samples
