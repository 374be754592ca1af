"""polyvem: first-order virtual elements on polygonal meshes inside a
co-rotational nonlinear solver for 2D elasticity and plane-stress plasticity.
"""

from .mesh import (
    MeshError,
    PolyMesh,
    ElementGeometry,
    polygon_geometry,
    validate_mesh,
    generate_mesh,
    generate_rect,
    generate_annulus,
    generate_arch,
    load_mesh,
    save_mesh,
)
from .vem import (
    ElementError,
    MonomialBasis,
    ModularMatrix,
    ElementProjection,
    elastic_moduli,
    build_projection,
    consistency_stiffness,
    stability_stiffness,
    element_stiffness,
    recover_strain,
)
from .materials import (
    ConstitutiveError,
    J2Params,
    MaterialState,
    ReturnMapResult,
    initial_state,
    yield_function,
    radial_return_plane_stress,
)
from .corotation import (
    KinematicError,
    CorotReference,
    CorotFrame,
    Transform,
    spin_vector,
    make_reference,
    corot_angle,
    local_displacements,
    transformation,
    element_tangent,
    internal_force,
)
from .assembly import CorotModel, ElasticMaterial, ElementStates, StabilizationOptions
from .continuation import ArcLengthConfig, ArcLengthStepper, PathError, StepRecord
from .analysis import (
    AnalysisResult,
    Constraint,
    PointLoad,
    Problem,
    ProblemError,
    SolverConfig,
    run_analysis,
)
from .config import ConfigError, RunConfig, parse_config
from .output import write_history_csv, write_vtk_fields

__version__ = "0.1.0"
