"""Numerical laboratory for the explicit central extension of the loop group
of the 3-sphere group, its fusion product, and the lifting-gerbe calculus.

The core objects are sampled disk maps with circle phases (extension
elements), sphere and ball meshes for the circle-valued action functional,
and a trivial sampled bundle for the gerbe-level structure checks.
"""

from .errors import (
    ActionConditionViolated,
    AntipodalSingularity,
    BaseMismatch,
    BoundaryMismatch,
    ConfigError,
    EndpointMismatch,
    FusionContextMismatch,
    IndeterminateEquivalence,
    LoopExtError,
    MeshMismatch,
    MiddleMismatch,
    NonConvergence,
)
from .lie import (
    AlgElement,
    CircleValue,
    GroupElement,
    KAPPA_UNIT_TOTAL,
    Pairing,
    bracket,
    circle_distance,
    exp_map,
    group_mul,
    h_density,
    log_map,
    rho_density,
)
from .mesh import (
    BallMap,
    DiskMap,
    PathTriple,
    Resolution,
    SampledLoop,
    SampledPath,
    SphereMap,
    extend_to_ball,
    fill_disk,
    glue_sphere,
    loop_join,
    random_map,
    random_path_system,
    random_path_triple,
    trisect_sphere,
)
from .wz import (
    QuadratureConfig,
    calibrate_pairing,
    integrate_h_ball,
    integrate_rho_disk,
    wz_action,
)
from .extension import (
    EquivalenceConfig,
    ExtElement,
    FusionContext,
    equivalent,
    fusion,
    identity_element,
    inverse,
    product,
    project,
    scalar_mul,
)
from .lifting import (
    BundleLoop,
    FiberElement,
    FusionLiftModel,
    GerbeElement,
    SampledBundle,
    Trivialization,
    canonical_fusion_lift,
    check_action_condition,
    check_fusion_equivalence,
    difference_loop,
    gerbe_mu,
    internal_fusion,
    lift_from_trivialization,
    trivialization_from_lift,
)
from .checks import SuiteConfig, run_convergence, run_suite

__version__ = "0.1.0"
