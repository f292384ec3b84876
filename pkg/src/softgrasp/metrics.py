"""Grasp quality metrics on the contact-centered wrench space.

Three per-frame metrics: epsilon (largest origin-centered ball inside the
wrench hull), volume (hull hypervolume), and a gravity-resistant quality
that measures, over a set of sampled gravity directions, the smallest
boundary distance of the wrench hull capped by the physical gravity wrench
magnitude.  An analytic instability proxy (mean resistible acceleration)
serves as benchmark ground truth, compared via rank correlation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .contact import TrajectoryFrame, WrenchSpaceConfig, build_gws, contact_centroid
from .errors import InvalidInputError, UndefinedCorrelationWarning
from .geom import Polytope, convex_hull, min_facet_distance, polytope_volume, ray_exit_distances

METRIC_NAMES = ("epsilon", "volume", "gravity")
TRACE_METRICS = METRIC_NAMES + ("proxy",)
# A trace counts as saturated once later values stop exceeding the current
# one by more than this relative margin.
SATURATION_REL_MARGIN = 0.01


def fibonacci_sphere(count: int) -> np.ndarray:
    """count near-uniform unit directions on S^2 (deterministic lattice)."""
    if count < 1:
        raise InvalidInputError("need at least one direction")
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    theta = math.pi * (3.0 - math.sqrt(5.0)) * i
    dirs = np.column_stack([r * np.cos(theta), r * np.sin(theta), z])
    return dirs / np.linalg.norm(dirs, axis=1)[:, None]


def _unit_rows(arr, name: str) -> np.ndarray:
    a = np.atleast_2d(np.asarray(arr, dtype=float))
    if a.ndim != 2 or a.shape[1] != 3 or a.shape[0] == 0:
        raise InvalidInputError(f"{name} must be a nonempty (k, 3) array")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite entries")
    if np.any(np.abs(np.linalg.norm(a, axis=1) - 1.0) > 1e-6):
        raise InvalidInputError(f"{name} rows must be unit vectors")
    return a


@dataclass(frozen=True)
class GravityConfig:
    """How gravity directions are sampled and scaled."""

    num_directions: int = 16
    gravity_accel: float = 9.81
    direction_set: str = "fibonacci-sphere"
    custom_directions: np.ndarray | None = None

    def __post_init__(self):
        if self.direction_set not in ("fibonacci-sphere", "custom"):
            raise InvalidInputError(
                f"direction_set must be 'fibonacci-sphere' or 'custom', got {self.direction_set!r}"
            )
        if not (np.isfinite(self.gravity_accel) and self.gravity_accel > 0.0):
            raise InvalidInputError("gravity_accel must be > 0")
        if self.direction_set == "custom":
            if self.custom_directions is None:
                raise InvalidInputError("custom direction_set needs custom_directions")
            dirs = _unit_rows(self.custom_directions, "custom_directions")
            if dirs.shape[0] < 4:
                raise InvalidInputError("need at least 4 gravity directions")
            object.__setattr__(self, "custom_directions", dirs)
            object.__setattr__(self, "num_directions", dirs.shape[0])
        else:
            if self.custom_directions is not None:
                raise InvalidInputError("custom_directions given without direction_set='custom'")
            if int(self.num_directions) < 4:
                raise InvalidInputError("need at least 4 gravity directions")
            object.__setattr__(self, "num_directions", int(self.num_directions))


def gravity_directions(gcfg: GravityConfig) -> np.ndarray:
    if gcfg.direction_set == "custom":
        return gcfg.custom_directions
    return fibonacci_sphere(gcfg.num_directions)


@dataclass(frozen=True)
class QualityTrace:
    """Per-frame metric values over a trajectory plus the saturation point."""

    times: np.ndarray
    values: np.ndarray
    metric_name: str
    saturation_force: float | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise InvalidInputError("times and values must be equal-length 1D arrays")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


def epsilon_metric(frame: TrajectoryFrame, cfg: WrenchSpaceConfig) -> float:
    """Radius of the largest origin-centered ball inside the wrench hull."""
    return min_facet_distance(build_gws(frame, cfg))


def volume_metric(frame: TrajectoryFrame, cfg: WrenchSpaceConfig) -> float:
    """Hypervolume of the wrench hull."""
    return polytope_volume(build_gws(frame, cfg))


def gravity_polytope(mass: float, com, centroid, rho: float, gcfg: GravityConfig) -> Polytope:
    """Hull of the gravity wrenches m*g*d_k (torque about the contact centroid).

    Gravity acts at the center of mass; the zero wrench is always included.
    A zero mass collapses everything to the origin (degenerate polytope).
    """
    m = float(mass)
    if not (np.isfinite(m) and m >= 0.0):
        raise InvalidInputError("mass must be >= 0")
    if not (np.isfinite(rho) and rho > 0.0):
        raise InvalidInputError("rho must be > 0")
    dirs = gravity_directions(gcfg)
    forces = m * gcfg.gravity_accel * dirs
    arm = np.asarray(com, dtype=float) - np.asarray(centroid, dtype=float)
    torques = np.cross(np.broadcast_to(arm, forces.shape), forces) / rho
    wrenches = np.vstack([np.hstack([forces, torques]), np.zeros((1, 6))])
    return convex_hull(wrenches, 6)


def _inertial_rays(arm: np.ndarray, dirs: np.ndarray, rho: float):
    """Unit 6D rays (d, (arm x d)/rho) plus the pre-normalization norms."""
    v = np.hstack([dirs, np.cross(np.broadcast_to(arm, dirs.shape), dirs) / rho])
    norms = np.linalg.norm(v, axis=1)
    return v / norms[:, None], norms


def gravity_resistant_quality(
    frame: TrajectoryFrame, cfg: WrenchSpaceConfig, gcfg: GravityConfig
) -> float:
    """Smallest survivable gravity wrench over the sampled directions.

    For each direction the wrench hull's boundary distance along the
    gravity-wrench ray is capped by the physical wrench magnitude m*g*||v||;
    the quality is the minimum over directions.  Zero when the hull is
    degenerate or fails to surround the origin in some sampled direction.
    """
    if frame.mass <= 0.0:
        raise InvalidInputError("mass must be > 0")
    gws = build_gws(frame, cfg)
    if not gws.is_full_dimensional:
        return 0.0
    arm = frame.com - contact_centroid(frame)
    rays, norms = _inertial_rays(arm, gravity_directions(gcfg), cfg.torque_scale_rho)
    exits = ray_exit_distances(gws, rays)
    caps = frame.mass * gcfg.gravity_accel * norms
    return float(np.min(np.minimum(exits, caps)))


def instability_proxy(frame: TrajectoryFrame, cfg: WrenchSpaceConfig, dirs) -> float:
    """Mean resistible acceleration over inertial pull directions, m/s^2.

    Analytic stand-in for a dynamic shake test: along each direction the
    wrench hull's exit distance is the largest force magnitude the grasp
    balances, and dividing by mass turns it into an acceleration.
    """
    if frame.mass <= 0.0:
        raise InvalidInputError("mass must be > 0")
    d = _unit_rows(dirs, "dirs")
    gws = build_gws(frame, cfg)
    if not gws.is_full_dimensional:
        return 0.0
    arm = frame.com - contact_centroid(frame)
    rays, _ = _inertial_rays(arm, d, cfg.torque_scale_rho)
    exits = ray_exit_distances(gws, rays)
    return float(np.mean(exits) / frame.mass)


def monotonicity(metric_values, ground_truth) -> float:
    """Spearman rank correlation scaled to [-100, 100], average-rank ties.

    Constant input on either side leaves ranks undefined: that returns NaN
    and raises UndefinedCorrelationWarning instead of failing.
    """
    a = np.asarray(metric_values, dtype=float)
    b = np.asarray(ground_truth, dtype=float)
    if a.ndim != 1 or a.shape != b.shape or a.size < 3:
        raise InvalidInputError("need two equal-length series of at least 3 values")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InvalidInputError("non-finite values in series")
    if np.all(a == a[0]) or np.all(b == b[0]):
        warnings.warn(
            "rank correlation undefined for a constant series",
            UndefinedCorrelationWarning,
            stacklevel=2,
        )
        return float("nan")
    return float(stats.spearmanr(a, b).statistic * 100.0)


def saturation_index(values: np.ndarray) -> int | None:
    """First index whose later values never exceed it by the relative margin.

    The last frame alone never counts (nothing after it to witness the
    plateau), so a trace still rising at the end reports no saturation.
    """
    v = np.asarray(values, dtype=float)
    n = v.size
    if n < 2:
        return None
    suffix_max = np.maximum.accumulate(v[::-1])[::-1]
    for i in range(n - 1):
        later = suffix_max[i + 1]
        if v[i] > 0.0:
            if later <= v[i] * (1.0 + SATURATION_REL_MARGIN):
                return i
        elif later <= 0.0:
            return i
    return None


def desired_force_index(trajectory, desired_force: float) -> int | None:
    """Index of the first frame whose squeeze force reaches the target."""
    for i, frame in enumerate(trajectory):
        if frame.squeeze_force >= desired_force:
            return i
    return None


def quality_trace(
    trajectory,
    metric: str,
    cfg: WrenchSpaceConfig,
    gcfg: GravityConfig | None = None,
    proxy_directions=None,
) -> QualityTrace:
    """Evaluate one metric on every frame of a trajectory.

    metric is one of epsilon | volume | gravity | proxy.  saturation_force
    is the squeeze force of the first frame after which the metric never
    rises by more than 1% relative (None when the trace never settles).
    """
    frames = list(trajectory)
    if len(frames) == 0:
        raise InvalidInputError("empty trajectory")
    times = np.array([f.time for f in frames])
    if np.any(np.diff(times) <= 0.0):
        raise InvalidInputError("frame times must be strictly increasing")
    if metric not in TRACE_METRICS:
        raise InvalidInputError(f"unknown metric {metric!r}, expected one of {TRACE_METRICS}")

    if gcfg is None:
        gcfg = GravityConfig()
    if metric == "proxy":
        dirs = gravity_directions(gcfg) if proxy_directions is None else _unit_rows(
            proxy_directions, "proxy_directions"
        )
        values = np.array([instability_proxy(f, cfg, dirs) for f in frames])
    elif metric == "gravity":
        values = np.array([gravity_resistant_quality(f, cfg, gcfg) for f in frames])
    elif metric == "volume":
        values = np.array([volume_metric(f, cfg) for f in frames])
    else:
        values = np.array([epsilon_metric(f, cfg) for f in frames])

    sat = saturation_index(values)
    sat_force = float(frames[sat].squeeze_force) if sat is not None else None
    return QualityTrace(times=times, values=values, metric_name=metric, saturation_force=sat_force)
