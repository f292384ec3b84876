"""Command line front end: simulate | metric | rank | bench | hull-info.

Data tables go to stdout (tab-separated, '#' for summary lines); diagnostics
go to stderr.  Exit codes: 0 success, 1 partial per-item failure, 2 config
or I/O error.  All sampling is seeded, so equal inputs and seeds produce
byte-identical outputs, regardless of --jobs.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fileio
from .contact import WrenchSpaceConfig, contact_centroid, default_torque_scale, orthonormal_tangents
from .errors import ConfigError, ParseError, SoftGraspError, SolverError
from .fem import (
    GraspCandidate,
    MaterialParams,
    SimConfig,
    TetMesh,
    generate_primitive_mesh,
    mesh_center_of_mass,
    run_squeeze,
)
from .geom import min_facet_distance, polytope_volume
from .metrics import (
    GravityConfig,
    desired_force_index,
    epsilon_metric,
    fibonacci_sphere,
    gravity_resistant_quality,
    instability_proxy,
    monotonicity,
    quality_trace,
    volume_metric,
)

logger = logging.getLogger(__name__)

METRIC_CHOICES = ("epsilon", "volume", "gravity")


# ---------------------------------------------------------------------------
# Run configuration (flat key=value file).


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of the pipeline with its default.

    torque_scale_rho None means "auto": the maximum distance from the first
    contact centroid to any mesh node, resolved per trajectory.
    """

    friction_mu: float = 0.8
    cone_edges: int = 8
    torque_scale_rho: float | None = None
    force_normalization: str = "unit-edge"
    num_directions: int = 16
    gravity_accel: float = 9.81
    youngs_modulus: float = 2e5
    poisson_ratio: float = 0.3
    density: float = 500.0
    penalty_stiffness: float = 1e6
    max_fixedpoint_iters: int = 80
    displacement_increment: float = 1e-4
    convergence_tol: float = 1e-3
    platform_height: float = 0.0
    dt: float = 0.01
    desired_force: float = 5.0
    proxy_directions: int = 32
    seed: int = 0

    def material(self) -> MaterialParams:
        return MaterialParams(
            youngs_modulus=self.youngs_modulus,
            poisson_ratio=self.poisson_ratio,
            friction_mu=self.friction_mu,
            density=self.density,
        )

    def sim_config(self) -> SimConfig:
        return SimConfig(
            penalty_stiffness=self.penalty_stiffness,
            max_fixedpoint_iters=self.max_fixedpoint_iters,
            displacement_increment=self.displacement_increment,
            convergence_tol=self.convergence_tol,
            platform_height=self.platform_height,
            dt=self.dt,
        )

    def gravity_config(self) -> GravityConfig:
        return GravityConfig(
            num_directions=self.num_directions, gravity_accel=self.gravity_accel
        )

    def wrench_config(self, rho: float) -> WrenchSpaceConfig:
        return WrenchSpaceConfig(
            friction_mu=self.friction_mu,
            cone_edges=self.cone_edges,
            torque_scale_rho=rho,
            force_normalization=self.force_normalization,
        )

    def resolve_rho(self, mesh_nodes, centroid) -> float:
        if self.torque_scale_rho is not None:
            return self.torque_scale_rho
        return default_torque_scale(mesh_nodes, centroid)


_INT_KEYS = {"cone_edges", "num_directions", "max_fixedpoint_iters", "proxy_directions", "seed"}
_STR_KEYS = {"force_normalization"}


def parse_run_config(text: str) -> RunConfig:
    """Parse the flat key=value config format ('#' comments, last key wins)."""
    allowed = {f.name for f in dataclasses.fields(RunConfig)}
    overrides = {}
    for lineno_raw, raw in enumerate(text.splitlines()):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        lineno = lineno_raw + 1
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key=value, got {body!r}")
        key, _, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in allowed:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            if key in _STR_KEYS:
                overrides[key] = value
            elif key == "torque_scale_rho":
                overrides[key] = None if value == "auto" else float(value)
            elif key in _INT_KEYS:
                overrides[key] = int(value)
            else:
                overrides[key] = float(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value {value!r} for {key}") from None
    return validate_run_config(RunConfig(**overrides))


def validate_run_config(rc: RunConfig) -> RunConfig:
    """Instantiate every sub-config so bad values surface as ConfigError."""
    try:
        rc.material()
        rc.sim_config()
        rc.gravity_config()
        rc.wrench_config(rc.torque_scale_rho if rc.torque_scale_rho is not None else 1.0)
        if rc.desired_force <= 0.0 or not np.isfinite(rc.desired_force):
            raise ConfigError("desired_force must be > 0")
        if int(rc.proxy_directions) < 1:
            raise ConfigError("proxy_directions must be >= 1")
        if int(rc.seed) < 0:
            raise ConfigError("seed must be >= 0")
    except (ValueError, SoftGraspError) as exc:
        raise ConfigError(str(exc)) from None
    return rc


def load_run_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_run_config(fh.read())


# ---------------------------------------------------------------------------
# Shared evaluation plumbing.


@dataclass
class GraspEvaluation:
    """Metrics of one candidate at its evaluation frame."""

    index: int
    status: str  # ok | empty | failed
    frames: int
    reached: bool
    eval_force: float
    epsilon: float
    volume: float
    gravity: float
    proxy: float
    message: str = ""


def evaluate_frames(frames, mesh_nodes, rc: RunConfig, index: int) -> GraspEvaluation:
    """Score a finished squeeze at the desired-force frame (or the last one).

    A trajectory that never reaches the desired force is evaluated at its
    final frame and marked not reached; an empty trajectory scores zero.
    """
    if not frames:
        return GraspEvaluation(
            index=index, status="empty", frames=0, reached=False, eval_force=0.0,
            epsilon=0.0, volume=0.0, gravity=0.0, proxy=0.0,
            message="no contact frames",
        )
    centroid0 = contact_centroid(frames[0])
    rho = rc.resolve_rho(mesh_nodes, centroid0)
    wcfg = rc.wrench_config(rho)
    gcfg = rc.gravity_config()
    idx = desired_force_index(frames, rc.desired_force)
    reached = idx is not None
    frame = frames[idx] if reached else frames[-1]
    proxy_dirs = fibonacci_sphere(rc.proxy_directions)
    return GraspEvaluation(
        index=index,
        status="ok",
        frames=len(frames),
        reached=reached,
        eval_force=frame.squeeze_force,
        epsilon=epsilon_metric(frame, wcfg),
        volume=volume_metric(frame, wcfg),
        gravity=gravity_resistant_quality(frame, wcfg, gcfg),
        proxy=instability_proxy(frame, wcfg, proxy_dirs),
    )


def _run_candidate(payload) -> GraspEvaluation:
    index, mesh, cand, rc = payload
    try:
        frames = run_squeeze(mesh, rc.material(), cand, rc.sim_config())
    except SolverError as exc:
        return GraspEvaluation(
            index=index, status="failed", frames=0, reached=False, eval_force=0.0,
            epsilon=0.0, volume=0.0, gravity=0.0, proxy=0.0, message=str(exc),
        )
    return evaluate_frames(frames, mesh.nodes, rc, index)


def _map_jobs(func, payloads, jobs: int):
    """Run payloads through func, in order, optionally with worker processes."""
    if jobs <= 1 or len(payloads) <= 1:
        return [func(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, payloads))


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def _emit(columns) -> None:
    print("\t".join(_fmt(c) for c in columns))


# ---------------------------------------------------------------------------
# simulate


def _simulate_worker(payload):
    index, mesh, cand, rc, out_path, object_name = payload
    mat = rc.material()
    mass = mat.density * mesh.volume()
    try:
        frames = run_squeeze(mesh, mat, cand, rc.sim_config())
    except SolverError as exc:
        return (index, "failed", 0, str(exc), "")
    if frames:
        centroid0 = contact_centroid(frames[0])
    else:
        centroid0 = mesh_center_of_mass(mesh.nodes, mesh.tets)
    rho = rc.resolve_rho(mesh.nodes, centroid0)
    header = fileio.TrajectoryHeader(
        object_name=object_name, mass=mass, material=mat, torque_scale_rho=rho
    )
    fileio.save_trajectory(out_path, frames, header)
    status = "ok" if frames else "empty"
    message = "" if frames else "no contact frames"
    return (index, status, len(frames), message, str(out_path))


def cmd_simulate(args, rc: RunConfig) -> int:
    mesh = fileio.load_tet_mesh(args.node, args.ele)
    candidates = fileio.load_grasp_candidates(args.grasps)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    object_name = args.object_name or Path(args.node).stem
    payloads = [
        (i, mesh, cand, rc, out_dir / f"grasp_{i:03d}.jsonl", object_name)
        for i, cand in enumerate(candidates)
    ]
    results = _map_jobs(_simulate_worker, payloads, args.jobs)
    _emit(("candidate", "status", "frames", "file"))
    failures = 0
    for index, status, n_frames, message, path in results:
        if status != "ok":
            failures += 1
            logger.warning("candidate %d: %s (%s)", index, status, message)
        _emit((index, status, n_frames, path))
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# metric


def cmd_metric(args, rc: RunConfig) -> int:
    traj = fileio.load_trajectory(args.trajectory)
    frames = list(traj.frames)
    if not frames:
        print("# empty trajectory", file=sys.stdout)
        return 0
    rho = rc.torque_scale_rho if rc.torque_scale_rho is not None else traj.header.torque_scale_rho
    wcfg = rc.wrench_config(rho)
    gcfg = rc.gravity_config()
    names = list(METRIC_CHOICES) if args.metric == "all" else [args.metric]
    desired = rc.desired_force

    traces = {name: quality_trace(frames, name, wcfg, gcfg) for name in names}
    _emit(["frame", "time", "squeeze_force"] + names)
    for i, frame in enumerate(frames):
        _emit([i, frame.time, frame.squeeze_force] + [float(traces[n].values[i]) for n in names])
    idx = desired_force_index(frames, desired)
    print(f"# desired_force\t{_fmt(float(desired))}")
    print(f"# desired_force_frame\t{idx if idx is not None else 'none'}")
    for name in names:
        at = float(traces[name].values[idx]) if idx is not None else float("nan")
        sat = traces[name].saturation_force
        print(f"# {name}_at_desired\t{_fmt(at)}")
        print(f"# {name}_saturation_force\t{_fmt(sat) if sat is not None else 'none'}")
    return 0


# ---------------------------------------------------------------------------
# rank


def cmd_rank(args, rc: RunConfig) -> int:
    mesh = fileio.load_tet_mesh(args.node, args.ele)
    candidates = fileio.load_grasp_candidates(args.grasps)
    payloads = [(i, mesh, cand, rc) for i, cand in enumerate(candidates)]
    evals = _map_jobs(_run_candidate, payloads, args.jobs)
    key = args.metric
    order = sorted(evals, key=lambda e: (-getattr(e, key), e.index))
    _emit((
        "rank", "candidate", "center_x", "center_y", "center_z",
        "axis_x", "axis_y", "axis_z", "epsilon", "volume", "gravity", "proxy",
        "eval_force", "reached", "status",
    ))
    failures = 0
    for rank, ev in enumerate(order):
        cand = candidates[ev.index]
        if ev.status != "ok":
            failures += 1
            logger.warning("candidate %d: %s (%s)", ev.index, ev.status, ev.message)
        _emit(
            [rank, ev.index]
            + [float(v) for v in cand.grasp_center]
            + [float(v) for v in cand.approach_axis]
            + [ev.epsilon, ev.volume, ev.gravity, ev.proxy, ev.eval_force,
               int(ev.reached), ev.status]
        )
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# bench


BENCH_OBJECTS = {
    # resolutions keep node spacing under half the smallest sampled pad span,
    # otherwise pads often trap a single line of nodes (flat wrench sets)
    "box": ("box", (0.06, 0.06, 0.06), 6),
    "slab": ("box", (0.10, 0.07, 0.025), 5),
    "cylinder": ("cylinder", (0.03, 0.08), 3),
    "sphere": ("sphere-ish", (0.035,), 5),
}


def bench_mesh(name: str) -> TetMesh:
    if name not in BENCH_OBJECTS:
        raise ConfigError(
            f"unknown bench object {name!r} (available: {', '.join(sorted(BENCH_OBJECTS))})"
        )
    kind, dims, resolution = BENCH_OBJECTS[name]
    mesh = generate_primitive_mesh(kind, dims, resolution)
    # seat the object on the platform plane z = 0
    lift = -float(mesh.nodes[:, 2].min())
    return mesh.translated((0.0, 0.0, lift))


def sample_grasps(mesh: TetMesh, count: int, rng, rc: RunConfig) -> list[GraspCandidate]:
    """Seeded antipodal candidates: surface point, jittered outward axis.

    The grasp center sits mid-span along the approach line with tangential
    jitter up to a full pad halfwidth, so the sampled centers spread around
    the center of mass; pad sizes vary, covering contact geometries from
    full-face pinches to corner grips.
    """
    faces = mesh.surface_faces
    corners = mesh.nodes[faces]
    cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    normals = cross / (2.0 * areas[:, None])
    probs = areas / areas.sum()
    # pads sized against the second-smallest extent: sizing against the
    # smallest leaves flat objects with pads thinner than a mesh cell
    extents = np.sort(mesh.nodes.max(axis=0) - mesh.nodes.min(axis=0))
    base_half = 0.45 * float(extents[1])

    out = []
    for _ in range(count):
        fi = int(rng.choice(len(faces), p=probs))
        # random barycentric point on the face, biased toward the centroid
        bary = rng.dirichlet((2.0, 2.0, 2.0))
        point = bary @ corners[fi]
        axis = normals[fi]
        t1, t2 = orthonormal_tangents(axis)
        tilt1, tilt2 = rng.uniform(-0.15, 0.15, size=2)
        axis = axis + tilt1 * t1 + tilt2 * t2
        axis = axis / np.linalg.norm(axis)
        proj = (mesh.nodes - point) @ axis
        center = point + axis * (float(proj.min()) + float(proj.max())) / 2.0
        t1, t2 = orthonormal_tangents(axis)
        halfwidth = base_half * rng.uniform(0.5, 1.1)
        center = center + t1 * rng.uniform(-1.0, 1.0) * halfwidth
        center = center + t2 * rng.uniform(-1.0, 1.0) * halfwidth
        out.append(
            GraspCandidate(
                grasp_center=center,
                approach_axis=axis,
                finger_halfwidth=halfwidth,
                max_force=rc.desired_force * 1.5,
                force_steps=1,
            )
        )
    return out


def run_bench(object_names, grasps_per_object: int, rc: RunConfig, jobs: int = 1):
    """Monotonicity table rows (object, n, eps, vol, grav) plus ordering count."""
    # candidates are squeezed mid-air: the protocol compares grasps on a held
    # object, so no platform sits under it
    rc = dataclasses.replace(rc, platform_height=-1.0)
    rows = []
    for obj_idx, name in enumerate(object_names):
        mesh = bench_mesh(name)
        rng = np.random.default_rng([rc.seed, obj_idx])
        candidates = sample_grasps(mesh, grasps_per_object, rng, rc)
        payloads = [(i, mesh, cand, rc) for i, cand in enumerate(candidates)]
        evals = _map_jobs(_run_candidate, payloads, jobs)
        proxy = np.array([e.proxy for e in evals])
        scores = {}
        for metric in METRIC_CHOICES:
            vals = np.array([getattr(e, metric) for e in evals])
            with np.errstate(invalid="ignore"):
                scores[metric] = monotonicity(vals, proxy)
        rows.append((name, len(evals), scores["epsilon"], scores["volume"], scores["gravity"]))
        logger.info("bench %s: %s", name, scores)
    ordered = sum(
        1
        for (_, _, eps, vol, grav) in rows
        if np.isfinite(eps) and np.isfinite(vol) and np.isfinite(grav)
        and grav >= vol >= eps
    )
    return rows, ordered


def cmd_bench(args, rc: RunConfig) -> int:
    names = [n.strip() for n in args.objects.split(",") if n.strip()]
    if not names:
        raise ConfigError("no bench objects given")
    for name in names:
        if name not in BENCH_OBJECTS:
            raise ConfigError(
                f"unknown bench object {name!r} (available: {', '.join(sorted(BENCH_OBJECTS))})"
            )
    import warnings as _warnings

    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")  # constant-series NaNs are reported in the table
        rows, ordered = run_bench(names, args.grasps_per_object, rc, jobs=args.jobs)
    _emit(("object", "grasps", "epsilon", "volume", "gravity"))
    for row in rows:
        _emit(row)
    print(f"# ordering gravity>=volume>=epsilon on {ordered}/{len(rows)} objects")
    return 0


# ---------------------------------------------------------------------------
# hull-info


def cmd_hull_info(args, rc: RunConfig) -> int:
    from .contact import build_gws

    traj = fileio.load_trajectory(args.trajectory)
    frames = list(traj.frames)
    rho = rc.torque_scale_rho if rc.torque_scale_rho is not None else traj.header.torque_scale_rho
    wcfg = rc.wrench_config(rho)
    gcfg = rc.gravity_config()
    _emit((
        "frame", "time", "contacts", "vertices", "facets", "affine_rank",
        "epsilon", "volume", "gravity",
    ))
    for i, frame in enumerate(frames):
        gws = build_gws(frame, wcfg)
        _emit((
            i,
            frame.time,
            len(frame.contacts),
            gws.vertices.shape[0],
            gws.facet_offsets.shape[0],
            gws.affine_rank,
            min_facet_distance(gws),
            polytope_volume(gws),
            gravity_resistant_quality(frame, wcfg, gcfg),
        ))
    return 0


# ---------------------------------------------------------------------------
# Parser and entry point.


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softgrasp",
        description="Wrench-space grasp quality for deformable objects",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value run configuration file")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("-v", "--verbose", action="store_true", help="info-level diagnostics")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="squeeze grasps, write trajectories")
    p.add_argument("--node", required=True, help="tetgen .node file")
    p.add_argument("--ele", required=True, help="tetgen .ele file")
    p.add_argument("--grasps", required=True, help="grasp candidate JSONL file")
    p.add_argument("--out-dir", required=True, help="directory for trajectory files")
    p.add_argument("--object-name", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metric", parents=[common], help="evaluate metrics on a trajectory")
    p.add_argument("--trajectory", required=True)
    p.add_argument("--metric", default="all", choices=("all",) + METRIC_CHOICES)
    p.add_argument("--desired-force", type=float, default=None)
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("rank", parents=[common], help="rank grasp candidates on a mesh")
    p.add_argument("--node", required=True)
    p.add_argument("--ele", required=True)
    p.add_argument("--grasps", required=True)
    p.add_argument("--metric", default="gravity", choices=METRIC_CHOICES)
    p.add_argument("--desired-force", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("bench", parents=[common], help="metric monotonicity benchmark")
    p.add_argument("--objects", default="box,slab,cylinder,sphere")
    p.add_argument("--grasps-per-object", type=int, default=15)
    p.add_argument("--desired-force", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("hull-info", parents=[common], help="per-frame wrench hull statistics")
    p.add_argument("--trajectory", required=True)
    p.set_defaults(func=cmd_hull_info)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        rc = load_run_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be >= 0")
            rc = dataclasses.replace(rc, seed=args.seed)
        if getattr(args, "desired_force", None) is not None:
            if args.desired_force <= 0:
                raise ConfigError("desired force must be > 0")
            rc = dataclasses.replace(rc, desired_force=args.desired_force)
        return args.func(args, rc)
    except (ConfigError, ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
