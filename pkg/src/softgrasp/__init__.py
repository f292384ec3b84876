"""Time-dependent grasp wrench spaces and quality metrics for soft objects.

The pipeline: simulate a parallel-jaw squeeze on a tetrahedral FEM mesh
(fem), turn each contact snapshot into a friction-cone wrench hull
(contact, geom), and score grasps with epsilon, volume, and
gravity-resistant quality metrics (metrics).  fileio persists meshes,
trajectories, and grasp candidates; cli ties it all together.
"""

from .contact import (
    ContactPoint,
    TrajectoryFrame,
    WrenchSpaceConfig,
    build_gws,
    contact_centroid,
    contact_wrench,
    default_torque_scale,
    frame_wrenches,
    friction_pyramid,
    orthonormal_tangents,
)
from .errors import (
    ConfigError,
    DegenerateInputError,
    EmptyFrameError,
    InvalidInputError,
    MeshError,
    ParseError,
    SoftGraspError,
    SolverError,
    UndefinedCorrelationWarning,
    UnsupportedVersionError,
)
from .fem import (
    GraspCandidate,
    MaterialParams,
    SimConfig,
    StepReport,
    TetMesh,
    assemble_model,
    assemble_stiffness,
    generate_primitive_mesh,
    mesh_center_of_mass,
    quasi_static_step,
    run_squeeze,
    run_squeeze_assembled,
    tet_volumes,
)
from .fileio import (
    TrajectoryFile,
    TrajectoryHeader,
    load_grasp_candidates,
    load_tet_mesh,
    load_trajectory,
    parse_grasp_candidates,
    parse_tet_mesh,
    read_trajectory,
    save_trajectory,
    write_grasp_candidates,
    write_trajectory,
)
from .geom import (
    Hyperplane,
    Polytope,
    affine_rank_of,
    convex_hull,
    halfspace_intersection_distance,
    min_facet_distance,
    polytope_volume,
    ray_exit_distance,
    ray_exit_distances,
    support_function,
)
from .metrics import (
    GravityConfig,
    QualityTrace,
    desired_force_index,
    epsilon_metric,
    fibonacci_sphere,
    gravity_directions,
    gravity_polytope,
    gravity_resistant_quality,
    instability_proxy,
    monotonicity,
    quality_trace,
    saturation_index,
    volume_metric,
)

__version__ = "0.1.0"
