"""Discrete-time simulator for signalized junction networks with finite queues.

Queues live on movements (origin node, destination node). Each slot every
junction picks one phase, flows are released subject to downstream blocking,
and arrivals enter at boundary nodes. Controllers range from fixed signal
cycles to pressure-driven phase selection.
"""

from .control import (
    BACK_PRESSURE,
    CAPACITY_AWARE,
    CONTROLLER_KINDS,
    FIXED_CYCLE,
    ControllerConfig,
    JunctionObservation,
    PhaseDecision,
    compute_weights,
    decide_all,
    explain_junction,
    fixed_cycle_decide,
    observe,
    phase_objectives,
    select_phase,
    work_conservation_audit,
)
from .dynamics import (
    ARRIVAL_KINDS,
    BERNOULLI_BATCH,
    DETERMINISTIC_FLUID,
    FLUID,
    INTEGER,
    MODES,
    POISSON,
    ArrivalProcess,
    FlowRealization,
    QueueState,
    RoutingSpec,
    blocking_indicator,
    compute_flows,
    route_inflow,
    sample_arrivals,
    step,
    validate_state,
)
from .engine import (
    CONTROLLER_PRESETS,
    SWEEP_HEADER,
    TRACE_HEADER,
    MetricsRow,
    Scenario,
    SimulationTrace,
    SweepCell,
    dump_scenario_dict,
    fingerprint,
    fixture_deadlock_ring,
    fixture_grid4x4_peak,
    fixture_theorem1,
    make_peak_profile,
    run,
    sweep,
    sweep_csv,
    trace_csv,
    validate_scenario,
)
from .errors import ConfigurationError
from .pressure import (
    ConvexityReport,
    FairnessReport,
    PressureFunction,
    PressureParams,
    check_convexity,
    check_fairness,
    evaluate,
)
from .scenario import (
    SCHEMA_VERSION,
    ParseIssue,
    ParseResult,
    ScenarioDocument,
    canonical_fixtures,
    parse_scenario,
    serialize_scenario,
)
from .topology import (
    GridDefaults,
    JunctionSpec,
    LinkSpec,
    NetworkTopology,
    NodeSpec,
    PhaseSpec,
    generate_grid,
    validate_topology,
)

__version__ = "1.0.0"

__all__ = [
    "ARRIVAL_KINDS",
    "BACK_PRESSURE",
    "BERNOULLI_BATCH",
    "CAPACITY_AWARE",
    "CONTROLLER_KINDS",
    "CONTROLLER_PRESETS",
    "DETERMINISTIC_FLUID",
    "FIXED_CYCLE",
    "FLUID",
    "INTEGER",
    "MODES",
    "POISSON",
    "SCHEMA_VERSION",
    "SWEEP_HEADER",
    "TRACE_HEADER",
    "ArrivalProcess",
    "ConfigurationError",
    "ControllerConfig",
    "ConvexityReport",
    "FairnessReport",
    "FlowRealization",
    "GridDefaults",
    "JunctionObservation",
    "JunctionSpec",
    "LinkSpec",
    "MetricsRow",
    "NetworkTopology",
    "NodeSpec",
    "ParseIssue",
    "ParseResult",
    "PhaseDecision",
    "PhaseSpec",
    "PressureFunction",
    "PressureParams",
    "QueueState",
    "RoutingSpec",
    "Scenario",
    "ScenarioDocument",
    "SimulationTrace",
    "SweepCell",
    "blocking_indicator",
    "canonical_fixtures",
    "check_convexity",
    "check_fairness",
    "compute_flows",
    "compute_weights",
    "decide_all",
    "dump_scenario_dict",
    "evaluate",
    "explain_junction",
    "fingerprint",
    "fixed_cycle_decide",
    "fixture_deadlock_ring",
    "fixture_grid4x4_peak",
    "fixture_theorem1",
    "generate_grid",
    "make_peak_profile",
    "observe",
    "parse_scenario",
    "phase_objectives",
    "route_inflow",
    "run",
    "sample_arrivals",
    "select_phase",
    "serialize_scenario",
    "step",
    "sweep",
    "sweep_csv",
    "trace_csv",
    "validate_scenario",
    "validate_state",
    "validate_topology",
    "work_conservation_audit",
]
