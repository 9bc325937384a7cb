"""perplab: common perpendiculars between convex sets in the hyperbolic plane."""

from .errors import (
    PerpLabError,
    EqualEndpoints,
    SetsTooClose,
    EndpointInSet,
    LatticeOverflow,
    BudgetExceeded,
    NoReductionRule,
    QuadratureDiverged,
    UnsupportedSet,
    NotConverged,
    UnsupportedPotential,
    InsufficientData,
)
from .geometry import (
    Point,
    BoundaryPoint,
    INFINITY,
    UnitTangent,
    HopfCoords,
    Moebius,
    MoebiusInt,
    dist,
    busemann,
    visual_dist,
    poisson_kernel,
    hopf_coords,
    vector_from_hopf,
    flow,
    flip,
    direction_at,
    closest_point_on_line,
    standardize_line,
)
from .convex import (
    ConvexSet,
    PointSet,
    GeodesicLine,
    Horoball,
    Disk,
    CommonPerp,
    point_set,
    geodesic,
    horoball,
    disk,
    common_perp,
    set_dist,
    contains_point,
    closest_point,
    transform_set,
    geom_key,
)
from .lattice import (
    DEFAULT_BUDGET,
    GAMMA2,
    PSL2Z,
    LatticeGroup,
    get_group,
    enumerate_ball,
    bfs_ball,
    scan_pairs,
    reduce_fd,
    reduce_points,
    fd_copies,
)
from .census import CensusTable, PerpRecord, census_table
from .measures import (
    MassQuadrature,
    MeasureContext,
    SkinningMeasure,
    bm_integrate,
    bm_total_mass,
    bm_vector_density,
    bm_line_density,
    liouville_total,
    measure_context,
    ps_density,
    skinning_measure,
)
from .gibbs import (
    ConstantPotential,
    GibbsContext,
    HeightBandPotential,
    amplitude,
    amplitude_along,
    delta_F_estimate,
    gibbs_cocycle,
    gibbs_context,
    potential_from_config,
    reweight_table,
    weighted_context,
)
from .lab import (
    ExperimentConfig,
    ExperimentReport,
    ReportRow,
    TestFunction,
    builtin_test_functions,
    config_from_toml,
    convex_from_config,
    leb_integrate,
    leb_table_sums,
    mass_plateau,
    read_census_csv,
    render_loops_svg,
    residual_fit,
    run_count,
    run_directions,
    run_equi,
    run_weighted,
    write_census_csv,
    write_report_csv,
)

__version__ = "0.1.0"
