"""Exact-arithmetic analysis of utility-optimal differentially private
mechanisms over finite queries: constraint graphs, exact LP solving,
mechanism algebra, derivability, and universal-optimality verdicts."""

from .analysis import (
    CertifiedVerdict,
    DerivabilityResult,
    OptimalResult,
    RefutedByAnchor,
    RefutedByForcedStructure,
    UniversalityReport,
    UnknownVerdict,
    best_remapping,
    check_derivable,
    optimal_mechanism,
    universality_check,
)
from .consumer import (
    Bayesian,
    BinLoss,
    Consumer,
    ExplicitMatrixLoss,
    GraphMonotoneLoss,
    RiskAverse,
    expected_loss,
    loss_value,
    uniform_bayesian,
    worst_case_loss,
)
from .errors import (
    ConstructionError,
    DpoptError,
    InconsistencyError,
    InputError,
    PreconditionError,
    SizeError,
    UnknownScenarioError,
)
from .exactlp import (
    Constraint,
    LinearProgram,
    LpOutcome,
    LpStatus,
    Relation,
    Sense,
    probe_face_uniqueness,
    solve_linear_system,
    solve_lp,
)
from .mechanism import (
    ColumnGraph,
    DpViolation,
    Mechanism,
    Remapping,
    apply_remapping,
    clique_optimal,
    column_graphs,
    cycle_optimal,
    extend_by_labels,
    geometric_path,
    identity_remapping,
    is_maximally_general,
    label_for_anchors,
    label_for_cycle,
    star_candidate,
    star_center_coefficient,
    verify_dp,
)
from .querydomain import (
    ConstraintGraph,
    Count,
    ExplicitTable,
    Histogram,
    ModCycle,
    QueryTable,
    Star,
    Sum,
    build_constraint_graph,
    bundle_of_counts,
    enumerate_query,
    find_smallest_cycle,
    graph_distance,
    graph_for,
    graph_from_edges,
    induced_subgraph,
    is_connected,
    max_degree,
    to_dot,
)
from .rationals import parse_alpha, rat, rat_str
from .scenarios import ScenarioResult, repro_scenario, run_all, scenario_names

__version__ = "0.1.0"
