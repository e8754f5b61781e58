"""Local surface parameterizations on implicit surfaces.

Trace geodesic-like radial curves from a seed point using only field values
and gradients, smooth them through wedge holonomy, interpolate with splines,
and answer forward (exp-like) and inverse (log-like) map queries.
"""

from .cloudfield import PointCloudField, build_point_cloud_field, load_ply, load_xyz
from .curves import (
    Chart,
    SurfaceCurve,
    build_chart,
    chart_transition,
    eval_curve,
    sample_curve,
    solve_closed_curve,
)
from .distortion import (
    EnergyReport,
    lscm_energy,
    map_error_experiment,
    sphere_error_experiment,
    sphere_exp_map,
    symmetric_dirichlet,
)
from .errors import GeoExpError
from .holonomy import (
    FrontAngles,
    SmoothingSolve,
    change_in_angles,
    strip_smoothing_solve,
    wedge_holonomy,
    wedge_smoothing_solve,
)
from .implicit import (
    CsgNode,
    ImplicitSurface,
    ProjectionConfig,
    SmoothingConfig,
    build_csg_field,
    normal,
    project,
    smoothed_gradient,
)
from .logmap import (
    LogQueryConfig,
    MapMesh,
    build_map_mesh,
    export_obj,
    fold_report,
    log,
    multivalued_log,
    select_preimage,
)
from .meshfield import MeshDistanceField, build_mesh_field, load_obj
from .scene import load_scene, parse_scene
from .splinemap import LocalMap, PeriodicSpline, fit
from .tracer import (
    TangentFrame,
    TraceParams,
    TraceResult,
    dump_trace_csv,
    full_step,
    initial_tangents,
    radial_trace,
    seed_frame,
    solve_alignment,
    transport_rotation,
)

__version__ = "0.1.0"
