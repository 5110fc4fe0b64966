"""Per-junction signal controllers and the work-conservation audit.

Back-pressure control scores each phase by sum of W_ab * mu_ab, where
W_ab = d_ab * max(Pi_a - Pi_b, 0) and Pi is a pressure function of the
node's total occupancy and capacity.  The controller sees only its own
junction: input/output totals, capacities, occupancy bits, and its phase
tables.  The fixed-cycle controller ignores state entirely.

Tie handling: phases whose objective lies within tie_epsilon of the best
form the tie set; among those, phases that can actually move a vehicle
(some served movement with waiting vehicles and an unfull destination)
are preferred, and the remaining choice falls to the lowest phase index.
The preference is what turns saturation of the normalized pressure into
a work-conservation guarantee; without it a zero-objective tie may pick
a phase that moves nothing.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple, Union

from .dynamics import FlowRealization, QueueState
from .errors import ConfigurationError
from .pressure import PressureFunction
from .topology import JunctionSpec, Movement, NetworkTopology

FIXED_CYCLE = "fixed-cycle"
BACK_PRESSURE = "back-pressure"
CAPACITY_AWARE = "capacity-aware"
CONTROLLER_KINDS = (FIXED_CYCLE, BACK_PRESSURE, CAPACITY_AWARE)

Cycle = Tuple[Tuple[str, int], ...]


@dataclass(frozen=True)
class JunctionObservation:
    """Everything a junction's controller is allowed to see."""

    junction_id: str
    queue_lengths: Mapping[str, float]  # per input and output node: sum_b Q_nb
    occupancy: Mapping[Movement, int]  # d_ab = 1 iff Q_ab > 0
    capacities: Mapping[str, int]
    phases: Tuple

    def movable(self, phase) -> bool:
        """True if the phase would transfer at least one vehicle now."""
        for (a, b), mu in phase.service.items():
            if mu > 0 and self.occupancy.get((a, b)) and self.queue_lengths[b] < self.capacities[b]:
                return True
        return False


@dataclass(frozen=True)
class ControllerConfig:
    kind: str
    pressure: Optional[PressureFunction] = None
    cycle: Optional[Cycle] = None
    tie_epsilon: float = 1e-9

    def __post_init__(self):
        if self.kind not in CONTROLLER_KINDS:
            raise ConfigurationError(f"unknown controller kind {self.kind!r}")
        if self.tie_epsilon < 0:
            raise ConfigurationError(f"tie_epsilon must be >= 0, got {self.tie_epsilon}")
        if self.kind == FIXED_CYCLE:
            if self.cycle is not None:
                cycle = tuple((str(p), int(n)) for p, n in self.cycle)
                if not cycle or any(n < 1 for _p, n in cycle):
                    raise ConfigurationError("cycle entries need >= 1 slot each")
                object.__setattr__(self, "cycle", cycle)
        elif self.pressure is None:
            raise ConfigurationError(f"{self.kind} controller requires a pressure function")

    @classmethod
    def fixed_cycle(cls, cycle: Optional[Cycle] = None, **kw) -> "ControllerConfig":
        """Open-loop program; with no explicit cycle, each phase of the
        junction gets one slot, in phase-list order."""
        return cls(FIXED_CYCLE, cycle=cycle, **kw)

    @classmethod
    def back_pressure(cls, **kw) -> "ControllerConfig":
        return cls(BACK_PRESSURE, pressure=PressureFunction.linear(), **kw)

    @classmethod
    def capacity_aware(cls, m: float = 2.0, c_infinity: float = 200.0, **kw) -> "ControllerConfig":
        return cls(CAPACITY_AWARE, pressure=PressureFunction.normalized(m, c_infinity), **kw)


@dataclass(frozen=True)
class PhaseDecision:
    junction_id: str
    phase_id: str
    objective: Optional[float]  # None for open-loop control
    tie_break_used: bool = False


def observe(state: QueueState, topology: NetworkTopology, junction_id: str) -> JunctionObservation:
    """Extract the local view of one junction from the global state."""
    junction = topology.junction_by_id.get(junction_id)
    if junction is None:
        raise ConfigurationError(f"unknown junction {junction_id!r}")
    totals = state.node_totals(topology)
    return _observe(state, topology, junction, totals)


def _observe(
    state: QueueState,
    topology: NetworkTopology,
    junction: JunctionSpec,
    node_totals: Mapping[str, float],
) -> JunctionObservation:
    local_nodes = set(junction.inputs) | set(junction.outputs)
    movements = topology.junction_movements(junction.id)
    return JunctionObservation(
        junction_id=junction.id,
        queue_lengths={n: node_totals[n] for n in local_nodes},
        occupancy={m: 1 if state.counts[m] > 0 else 0 for m in movements},
        capacities={n: topology.capacity(n) for n in local_nodes},
        phases=junction.phases,
    )


def compute_weights(
    obs: JunctionObservation, pressure: PressureFunction
) -> Dict[Movement, float]:
    """W_ab = d_ab * max(Pi_a - Pi_b, 0) over the junction's movements."""
    pi = {n: pressure.evaluate(q, obs.capacities[n]) for n, q in obs.queue_lengths.items()}
    return {
        (a, b): obs.occupancy[(a, b)] * max(pi[a] - pi[b], 0.0)
        for (a, b) in obs.occupancy
    }


def phase_objectives(
    obs: JunctionObservation, weights: Mapping[Movement, float]
) -> List[float]:
    return [
        sum(w * p.service.get(m, 0) for m, w in weights.items())
        for p in obs.phases
    ]


def select_phase(
    obs: JunctionObservation,
    weights: Mapping[Movement, float],
    config: ControllerConfig,
) -> PhaseDecision:
    """Argmax of the weighted service sum, with the movability tie-break."""
    objectives = phase_objectives(obs, weights)
    best = max(objectives)
    ties = [i for i, v in enumerate(objectives) if v >= best - config.tie_epsilon]
    tie_break_used = False
    if len(ties) > 1:
        movable = [i for i in ties if obs.movable(obs.phases[i])]
        if movable:
            ties = movable
            tie_break_used = True
    choice = ties[0]
    return PhaseDecision(
        junction_id=obs.junction_id,
        phase_id=obs.phases[choice].id,
        objective=objectives[choice],
        tie_break_used=tie_break_used,
    )


def fixed_cycle_decide(config: ControllerConfig, slot: int) -> str:
    """Phase active at the given slot, walking the (phase, slots) program."""
    if not config.cycle:
        raise ConfigurationError("fixed-cycle controller has no cycle program")
    period = sum(n for _p, n in config.cycle)
    k = slot % period
    for phase_id, n in config.cycle:
        if k < n:
            return phase_id
        k -= n
    raise AssertionError("unreachable: k < period by construction")


ConfigMap = Union[ControllerConfig, Mapping[str, ControllerConfig]]


def _config_for(configs: ConfigMap, junction_id: str) -> ControllerConfig:
    if isinstance(configs, ControllerConfig):
        return configs
    try:
        return configs[junction_id]
    except KeyError:
        raise ConfigurationError(f"no controller configured for junction {junction_id!r}")


def decide_all(
    state: QueueState,
    topology: NetworkTopology,
    configs: ConfigMap,
    slot: int,
    node_totals: Optional[Mapping[str, float]] = None,
) -> Dict[str, PhaseDecision]:
    """Run every junction's controller against the slot-start state."""
    if node_totals is None:
        node_totals = state.node_totals(topology)
    decisions = {}
    for junction in topology.junctions:
        config = _config_for(configs, junction.id)
        if config.kind == FIXED_CYCLE:
            cycle = config.cycle or tuple((p.id, 1) for p in junction.phases)
            resolved = config if config.cycle else ControllerConfig.fixed_cycle(cycle)
            decisions[junction.id] = PhaseDecision(
                junction_id=junction.id,
                phase_id=fixed_cycle_decide(resolved, slot),
                objective=None,
            )
        else:
            obs = _observe(state, topology, junction, node_totals)
            weights = compute_weights(obs, config.pressure)
            decisions[junction.id] = select_phase(obs, weights, config)
    return decisions


def work_conservation_audit(
    state: QueueState,
    topology: NetworkTopology,
    decisions: Mapping[str, PhaseDecision],
    flows: FlowRealization,
    node_totals: Optional[Mapping[str, float]] = None,
) -> Dict[str, bool]:
    """Flag junctions that moved nothing although some phase could have.

    A junction violates work conservation at a slot when its total flow is
    zero yet some phase serves a movement (a, b) with vehicles waiting
    (Q_ab > 0) and room downstream (Q_b < C_b), all judged against the
    slot-start state the decision saw.
    """
    if node_totals is None:
        node_totals = state.node_totals(topology)
    flags = {}
    for junction in topology.junctions:
        moved = sum(flows.flows[m] for m in topology.junction_movements(junction.id))
        if moved > 0:
            flags[junction.id] = False
            continue
        could_have = any(
            mu > 0
            and state.counts[(a, b)] > 0
            and node_totals[b] < topology.capacity(b)
            for p in junction.phases
            for (a, b), mu in p.service.items()
        )
        flags[junction.id] = could_have
    return flags


def explain_junction(
    obs: JunctionObservation, config: ControllerConfig, slot: int = 0
) -> Dict[str, object]:
    """Decision breakdown for one junction: pressures, weights, objectives."""
    if config.kind == FIXED_CYCLE:
        cycle = config.cycle or tuple((p.id, 1) for p in obs.phases)
        resolved = ControllerConfig.fixed_cycle(cycle)
        return {
            "junction": obs.junction_id,
            "kind": config.kind,
            "cycle": cycle,
            "decision": PhaseDecision(obs.junction_id, fixed_cycle_decide(resolved, slot), None),
        }
    weights = compute_weights(obs, config.pressure)
    pi = {n: config.pressure.evaluate(q, obs.capacities[n]) for n, q in obs.queue_lengths.items()}
    objectives = dict(zip((p.id for p in obs.phases), phase_objectives(obs, weights)))
    return {
        "junction": obs.junction_id,
        "kind": config.kind,
        "pressures": pi,
        "weights": weights,
        "objectives": objectives,
        "decision": select_phase(obs, weights, config),
    }
