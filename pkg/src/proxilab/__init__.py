"""proxilab: a numerical laboratory for best-proximity iteration of impulsive
cyclic self-mappings on unions of convex regions."""

__version__ = "0.1.0"

from .errors import (
    ConvergenceFailureError,
    DimensionMismatchError,
    ImageEscapeError,
    InconclusiveError,
    InvalidSpecError,
    MembershipError,
    ProxilabError,
    SamplingFailureError,
    UnsupportedCapabilityError,
)
from .spaces import (
    Ball,
    Box,
    CyclePartition,
    NormSpec,
    Polytope,
    build_partition,
    contains,
    cyclic_successor,
    metric_distance,
    project,
    proximity_pair,
    region_distance,
)
from .mappings import (
    GainSchedule,
    ImpulseSpec,
    InnerMapSpec,
    MappingClass,
    SemiCyclicMapping,
    apply_composite,
    apply_impulse,
    apply_inner,
    build_anchor_impulse,
    build_anchor_inner,
    build_projection_inner,
    classify,
    identity_impulse,
)
from .orbit import (
    BoundLedger,
    DeltaTrace,
    DistanceTrace,
    IndicatorSets,
    Orbit,
    bound_unroll,
    delta_trace,
    distance_trace,
    indicator_sets,
    iterate,
    tail_limsup,
)
from .audit import (
    AuditReport,
    ContractionProfile,
    PairSample,
    Verdict,
    audit_cyclic_floor,
    audit_gain,
    audit_inner_contraction,
    audit_membership,
    audit_strict,
    estimate_eps0,
    estimate_khat,
    probe_orbits_for,
    run_audit,
    sample_adjacent_pairs,
)
from .proximity import (
    FixedPointResult,
    LimitingSet,
    ProximityVerdict,
    UniquenessResult,
    detect_limit,
    extract_limiting_set,
    fixed_point_check,
    result4_check,
    uniqueness_check,
)
from .impulsive import (
    ImpulsiveSystemSpec,
    StabilityResult,
    build_impulsive_system,
    simulate_stability,
    stability_sweep,
)
from .scenario import ScenarioConfig, bundled_scenario_names, parse_scenario, resolve_scenario_path
from .report import RunReport, emit_report, execute, run_pipeline
