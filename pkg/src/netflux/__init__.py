"""Metric networks, calculus on networks, and conservative transport."""

from .network import (
    CoordinateOutOfRange,
    Disconnected,
    DuplicateEdgeKey,
    Edge,
    EdgeInterior,
    IsolatedVertex,
    Network,
    NetworkError,
    NetworkPath,
    NetworkPoint,
    NonPositiveWeight,
    RegularityReport,
    UnknownEdge,
    UnknownVertex,
    Vertex,
    WeightedGraph,
    build_network,
    canonicalize,
    distance,
    incidence,
    locate,
    shortest_path,
    validate_regularity,
    vertex_distances,
)

from .calculus import (
    AtomOffNetwork,
    C1Report,
    DiscreteMeasure,
    GridFunction,
    Mesh,
    MeshMismatch,
    bin_discrete_measure,
    check_c1,
    edge_boundary_sum,
    integrate,
    integration_by_parts_residual,
    read_discrete_measure_csv,
    spatial_derivative,
    total_measure,
    vertex_boundary_sum,
    write_grid_function_csv,
)

from .solver import (
    CFLViolation,
    Constant,
    DensityOutOfRange,
    DensityState,
    JunctionRule,
    LWRFlux,
    LedgerEntry,
    MeshTooCoarse,
    QuasiLinear,
    RuleShapeMismatch,
    SpaceTime,
    SupportTooWide,
    TestFunction,
    TooFewCells,
    boundary_trace,
    cfl_dt,
    init_state,
    junction_fluxes,
    kirchhoff_residual,
    numerical_flux,
    run,
    step,
    total_mass,
    weak_residual,
)

from .kernels import BACKEND

__version__ = "0.1.0"
