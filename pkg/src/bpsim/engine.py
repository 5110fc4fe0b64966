"""Simulation loop, metrics, canonical fixtures, and experiment sweeps.

A run advances slot by slot: controllers decide against the slot-start
state, flows realize, the work-conservation audit inspects the outcome,
the state steps, and one metrics row is recorded.  Everything downstream
of the seed is deterministic, so a trace is identified by the content
hash of its scenario.
"""
from __future__ import annotations

import concurrent.futures
import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .control import (
    BACK_PRESSURE,
    CAPACITY_AWARE,
    FIXED_CYCLE,
    ConfigMap,
    ControllerConfig,
    decide_all,
    work_conservation_audit,
)
from .dynamics import (
    DETERMINISTIC_FLUID,
    FLUID,
    INTEGER,
    MODES,
    ArrivalProcess,
    QueueState,
    RoutingSpec,
    compute_flows,
    sample_arrivals,
    step,
)
from .errors import ConfigurationError
from .pressure import NORMALIZED
from .topology import (
    JunctionSpec,
    LinkSpec,
    Movement,
    NetworkTopology,
    NodeSpec,
    PhaseSpec,
    generate_grid,
    validate_topology,
)

TRACE_HEADER = (
    "slot,total_queue,avg_time_spent_slots,avg_time_spent_seconds,"
    "served_flow,arrivals,exits,wc_violations"
)
SWEEP_HEADER = (
    "multiplier,seed,controller,time_avg_total_queue,"
    "final_avg_time_spent_slots,final_avg_time_spent_seconds,wc_violations"
)

CONTROLLER_PRESETS: Dict[str, ControllerConfig] = {
    "fc": ControllerConfig.fixed_cycle(),
    "bp": ControllerConfig.back_pressure(),
    "bpc": ControllerConfig.capacity_aware(),
}


@dataclass(frozen=True)
class Scenario:
    name: str
    topology: NetworkTopology
    arrivals: ArrivalProcess
    routing: RoutingSpec
    controllers: ConfigMap
    horizon: int
    seed: int = 0
    mode: str = INTEGER
    slot_seconds: float = 15.0
    initial_counts: Mapping[Movement, float] = field(default_factory=dict)

    def with_controller(self, controller: Union[str, ConfigMap]) -> "Scenario":
        if isinstance(controller, str):
            if controller not in CONTROLLER_PRESETS:
                raise ConfigurationError(
                    f"unknown controller preset {controller!r}; have {sorted(CONTROLLER_PRESETS)}"
                )
            if (
                controller == "fc"
                and isinstance(self.controllers, Mapping)
                and self.controllers
                and all(c.kind == FIXED_CYCLE for c in self.controllers.values())
            ):
                # The scenario ships its own signal plan (e.g. coordinated
                # offsets); "fc" means that plan, not the generic preset.
                return self
            controller = CONTROLLER_PRESETS[controller]
        return replace(self, controllers=controller)


@dataclass(frozen=True)
class MetricsRow:
    slot: int
    total_queue: float
    avg_time_spent_slots: float
    avg_time_spent_seconds: float
    served_flow: float
    arrivals: float
    exits: float
    wc_violations: int


@dataclass(frozen=True)
class SimulationTrace:
    fingerprint: str
    rows: List[MetricsRow]
    final_summary: Dict[str, float]
    violations: List[Tuple[int, str]]  # (slot, junction id)


def _iter_configs(scenario: Scenario):
    if isinstance(scenario.controllers, ControllerConfig):
        return [scenario.controllers]
    return list(scenario.controllers.values())


def validate_scenario(scenario: Scenario) -> List[str]:
    """Collect every reason this scenario cannot run; empty means runnable."""
    problems: List[str] = []
    c_inf = None
    for cfg in _iter_configs(scenario):
        if cfg.pressure is not None and cfg.pressure.kind == NORMALIZED:
            m = cfg.pressure.params.c_infinity
            c_inf = m if c_inf is None else min(c_inf, m)
    problems += validate_topology(scenario.topology, c_infinity=c_inf)
    problems += scenario.routing.validate(scenario.topology)
    if scenario.horizon < 1:
        problems.append(f"horizon must be >= 1, got {scenario.horizon}")
    if scenario.mode not in MODES:
        problems.append(f"unknown mode {scenario.mode!r}")
    if scenario.slot_seconds <= 0:
        problems.append(f"slot_seconds must be positive, got {scenario.slot_seconds}")
    if scenario.arrivals.kind == DETERMINISTIC_FLUID and scenario.mode == INTEGER:
        problems.append("deterministic-fluid arrivals need fluid mode")
    nodes = scenario.topology.node_by_id
    for n, lam in scenario.arrivals.rates.items():
        if n not in nodes:
            problems.append(f"arrival rate for unknown node {n!r}")
        elif lam > 0 and not nodes[n].is_boundary:
            problems.append(
                f"arrival rate at non-boundary node {n!r}; mark it is_boundary to allow this"
            )
    movements = set(scenario.topology.movements)
    for m, q in scenario.initial_counts.items():
        if m not in movements:
            problems.append(f"initial queue for unknown movement {m[0]}->{m[1]}")
        elif q < 0:
            problems.append(f"initial queue for {m[0]}->{m[1]} must be >= 0, got {q}")
        elif scenario.mode == INTEGER and q != int(q):
            problems.append(f"initial queue for {m[0]}->{m[1]} must be whole in integer mode")
    if isinstance(scenario.controllers, ControllerConfig):
        configured = {j.id: scenario.controllers for j in scenario.topology.junctions}
    else:
        configured = dict(scenario.controllers)
        for j in scenario.topology.junctions:
            if j.id not in configured:
                problems.append(f"no controller configured for junction {j.id!r}")
    for jid, cfg in configured.items():
        junction = scenario.topology.junction_by_id.get(jid)
        if junction is None:
            problems.append(f"controller for unknown junction {jid!r}")
            continue
        if cfg.kind == FIXED_CYCLE and cfg.cycle is not None:
            known = {p.id for p in junction.phases}
            for phase_id, _n in cfg.cycle:
                if phase_id not in known:
                    problems.append(
                        f"cycle for junction {jid!r} names unknown phase {phase_id!r}"
                    )
    return problems


def run(scenario: Scenario) -> SimulationTrace:
    """Simulate the full horizon; aborts on validation problems."""
    problems = validate_scenario(scenario)
    if problems:
        raise ConfigurationError("scenario invalid:\n" + "\n".join(problems))
    topo = scenario.topology
    rng = np.random.default_rng(scenario.seed)
    state = QueueState.initial(topo, scenario.initial_counts, mode=scenario.mode)
    rows: List[MetricsRow] = []
    vlog: List[Tuple[int, str]] = []
    total_violations = 0
    for k in range(scenario.horizon):
        node_totals = state.node_totals(topo)
        decisions = decide_all(state, topo, scenario.controllers, k, node_totals)
        phase_map = {j: d.phase_id for j, d in decisions.items()}
        flows = compute_flows(state, topo, phase_map, node_totals=node_totals)
        flags = work_conservation_audit(state, topo, decisions, flows, node_totals)
        arrived = sample_arrivals(scenario.arrivals, k, rng)
        state, flows, exits = step(
            state, topo, phase_map, arrived, scenario.routing, scenario.mode, rng, flows=flows
        )
        total = state.total()
        if total > 0:
            mass = sum(state.entry_mass.values())
            avg_slots = (state.slot * total - mass) / total
        else:
            avg_slots = 0.0
        wc = sum(flags.values())
        total_violations += wc
        rows.append(
            MetricsRow(
                slot=k,
                total_queue=total,
                avg_time_spent_slots=avg_slots,
                avg_time_spent_seconds=avg_slots * scenario.slot_seconds,
                served_flow=flows.total(),
                arrivals=sum(arrived.values()),
                exits=exits,
                wc_violations=wc,
            )
        )
        for j, flagged in flags.items():
            if flagged:
                vlog.append((k, j))
    last = rows[-1]
    summary = {
        "slots": scenario.horizon,
        "total_queue": last.total_queue,
        "avg_time_spent_slots": last.avg_time_spent_slots,
        "avg_time_spent_seconds": last.avg_time_spent_seconds,
        "wc_violations": total_violations,
    }
    return SimulationTrace(
        fingerprint=fingerprint(scenario), rows=rows, final_summary=summary, violations=vlog
    )


def trace_csv(trace: SimulationTrace) -> str:
    lines = [TRACE_HEADER]
    for r in trace.rows:
        lines.append(
            f"{r.slot},{r.total_queue},{r.avg_time_spent_slots},"
            f"{r.avg_time_spent_seconds},{r.served_flow},{r.arrivals},"
            f"{r.exits},{r.wc_violations}"
        )
    return "\n".join(lines) + "\n"


# Scenario serialization to plain data.  Movement keys flatten to "a>b";
# node ids therefore must not contain ">".  The same dictionary feeds the
# content hash and the scenario file layer.
def _movement_key(m: Movement) -> str:
    return f"{m[0]}>{m[1]}"


def _controller_dict(cfg: ControllerConfig) -> dict:
    out: dict = {"kind": cfg.kind, "tie_epsilon": cfg.tie_epsilon}
    if cfg.pressure is not None:
        p: dict = {"kind": cfg.pressure.kind}
        if cfg.pressure.params is not None:
            p["m"] = cfg.pressure.params.m
            p["C_inf"] = cfg.pressure.params.c_infinity
        out["pressure"] = p
    if cfg.cycle is not None:
        out["cycle"] = [[pid, n] for pid, n in cfg.cycle]
    return out


def dump_scenario_dict(scenario: Scenario) -> dict:
    t = scenario.topology
    if isinstance(scenario.controllers, ControllerConfig):
        controllers = {"all": _controller_dict(scenario.controllers)}
    else:
        controllers = {
            "per_junction": {j: _controller_dict(c) for j, c in scenario.controllers.items()}
        }
    doc = {
        "version": 1,
        "name": scenario.name,
        "topology": {
            "nodes": [
                {"id": n.id, "C": n.capacity, "boundary": n.is_boundary} for n in t.nodes
            ],
            "links": [
                {"from": l.from_node, "to": l.to_node, "junction": l.junction}
                for l in t.links
            ],
            "junctions": [
                {
                    "id": j.id,
                    "inputs": list(j.inputs),
                    "outputs": list(j.outputs),
                    "phases": [
                        {"id": p.id, "mu": {_movement_key(m): v for m, v in p.service.items()}}
                        for p in j.phases
                    ],
                }
                for j in t.junctions
            ],
        },
        "arrivals": {
            "kind": scenario.arrivals.kind,
            "lambda": dict(scenario.arrivals.rates),
            "profile": list(scenario.arrivals.profile)
            if scenario.arrivals.profile is not None
            else None,
        },
        "routing": {"r": {_movement_key(m): v for m, v in scenario.routing.ratios.items()}},
        "controllers": controllers,
        "run": {
            "horizon": scenario.horizon,
            "seed": scenario.seed,
            "mode": scenario.mode,
            "slot_seconds": scenario.slot_seconds,
        },
        "initial_queues": {
            _movement_key(m): v for m, v in scenario.initial_counts.items()
        },
    }
    return doc


def fingerprint(scenario: Scenario) -> str:
    payload = json.dumps(dump_scenario_dict(scenario), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()


def fixture_theorem1() -> Scenario:
    """Two-phase crossing whose argmax phase is blocked.

    The middle junction faces a full output b (capacity 50) behind the
    long queue a (60 waiting), while the feasible crossing movement c->d
    carries the smaller pressure difference.  Linear pressures pick the
    blocked phase and move nothing; saturation-aware pressures zero the
    blocked weight and the tie-break picks the phase that moves.  Nodes
    b and d keep their load in frozen movements toward x (never served),
    fed by the permanently empty boundary road w.
    """
    nodes = (
        NodeSpec("a", 200, is_boundary=True),
        NodeSpec("c", 200, is_boundary=True),
        NodeSpec("b", 50),
        NodeSpec("d", 200),
        NodeSpec("x", 200),
        NodeSpec("w", 10, is_boundary=True),
    )
    links = (
        LinkSpec("a", "b", "mid"),
        LinkSpec("c", "d", "mid"),
        LinkSpec("b", "x", "down"),
        LinkSpec("d", "x", "down"),
        LinkSpec("w", "x", "down"),
    )
    junctions = (
        JunctionSpec(
            "mid",
            ("a", "c"),
            ("b", "d"),
            (PhaseSpec("p_ab", {("a", "b"): 1}), PhaseSpec("p_cd", {("c", "d"): 1})),
        ),
        JunctionSpec(
            "down",
            ("b", "d", "w"),
            ("x",),
            (PhaseSpec("hold", {("b", "x"): 0, ("d", "x"): 0, ("w", "x"): 1}),),
        ),
    )
    topology = NetworkTopology(nodes, links, junctions)
    return Scenario(
        name="theorem1",
        topology=topology,
        arrivals=ArrivalProcess(rates={}),
        routing=RoutingSpec({("a", "b"): 1.0, ("c", "d"): 1.0, ("b", "x"): 1.0, ("d", "x"): 1.0}),
        controllers=ControllerConfig.back_pressure(),
        horizon=1,
        seed=0,
        initial_counts={("a", "b"): 60, ("c", "d"): 10, ("b", "x"): 50, ("d", "x"): 20},
    )


def fixture_deadlock_ring() -> Scenario:
    """Three junctions in a ring of full nodes.

    Each ring node n_i is at capacity, most of its load pointing forward
    along the ring in a movement no phase serves.  The external queues
    e_i are long, so linear pressures keep selecting the blocked inbound
    phase A_i forever: a deadlock with zero flow.  Saturated ring nodes
    exert maximal normalized pressure, which zeroes the inbound weights
    and lets the crossing phases B_i drain the ring.
    """
    nodes = []
    links = []
    junctions = []
    ring = 3
    for i in range(ring):
        nodes += [
            NodeSpec(f"e{i}", 200, is_boundary=True),
            NodeSpec(f"n{i}", 50),
            NodeSpec(f"s{i}", 200),
        ]
    for i in range(ring):
        nxt = (i + 1) % ring
        links += [
            LinkSpec(f"e{i}", f"n{nxt}", f"J{i}"),
            LinkSpec(f"n{i}", f"s{i}", f"J{i}"),
            LinkSpec(f"n{i}", f"n{nxt}", f"J{i}"),
        ]
        junctions.append(
            JunctionSpec(
                f"J{i}",
                (f"e{i}", f"n{i}"),
                (f"n{nxt}", f"s{i}"),
                (
                    PhaseSpec("A", {(f"e{i}", f"n{nxt}"): 1}),
                    PhaseSpec("B", {(f"n{i}", f"s{i}"): 1}),
                ),
            )
        )
    topology = NetworkTopology(tuple(nodes), tuple(links), tuple(junctions))
    ratios = {}
    counts = {}
    for i in range(ring):
        nxt = (i + 1) % ring
        ratios[(f"e{i}", f"n{nxt}")] = 1.0
        ratios[(f"n{i}", f"s{i}")] = 1.0
        counts[(f"e{i}", f"n{nxt}")] = 120
        counts[(f"n{i}", f"n{nxt}")] = 40
        counts[(f"n{i}", f"s{i}")] = 10
    return Scenario(
        name="deadlock_ring",
        topology=topology,
        arrivals=ArrivalProcess(rates={}),
        routing=RoutingSpec(ratios),
        controllers=ControllerConfig.back_pressure(),
        horizon=60,
        seed=0,
        initial_counts=counts,
    )


def make_peak_profile(horizon: int, low: float = 0.5, high: float = 1.5) -> List[float]:
    """Triangular demand shape: low at the edges, peaking mid-horizon."""
    if horizon < 1:
        raise ConfigurationError(f"horizon must be >= 1, got {horizon}")
    if horizon == 1:
        return [high]
    mid = (horizon - 1) / 2
    return [high - (high - low) * abs(k - mid) / mid for k in range(horizon)]


def fixture_grid4x4_peak() -> Scenario:
    """4x4 alternating-lane grid under a morning-peak demand profile.

    Demand is a morning-commute pattern: eastbound boundary approaches
    receive Poisson arrivals of 3 vehicles per lane per slot at
    multiplier 1, southbound ones 1.5, the counter-directions 0.02,
    all shaped by a triangular profile over the 3-hour horizon.  At
    each hop 85% of the inflow continues straight, 8% turns right, 5%
    turns left and 2% ends its trip at the node.

    The built-in fixed-time plan is coordinated: each junction cycles
    through all four phases one slot each, with the cycle start offset
    by row plus column so eastbound and southbound through traffic
    both meet a green wave.
    """
    topology = generate_grid(4, 4, lane_pattern=(2, 1), road_length_m=150.0)
    horizon = 720
    ratios: Dict[Movement, float] = {}
    by_origin: Dict[str, List[str]] = {}
    for a, b in topology.movements:
        by_origin.setdefault(a, []).append(b)
    for a, dests in by_origin.items():
        if len(dests) != 3:
            for b in dests:
                ratios[(a, b)] = 0.5 / len(dests)
            continue
        # Classify destinations by phase structure: straight has the
        # largest service rate, the right turn shares its phase, the
        # left turn is served in a phase of its own.
        junction = topology.junction_by_id[topology.junction_of_movement[(a, dests[0])]]
        mus: Dict[str, int] = {}
        phase_of: Dict[str, str] = {}
        for p in junction.phases:
            for (x, b), mu in p.service.items():
                if x == a and mu > 0:
                    mus[b] = max(mus.get(b, 0), mu)
                    phase_of[b] = p.id
        straight_b = max(sorted(mus), key=lambda b: mus[b])
        for b in dests:
            if b == straight_b:
                ratios[(a, b)] = 0.85
            elif phase_of[b] == phase_of[straight_b]:
                ratios[(a, b)] = 0.08
            else:
                ratios[(a, b)] = 0.05
    boundary_rates = {}
    # keyed by the side the approach enters from: W carries eastbound
    # traffic, N southbound
    lane_rates = {"W": 3.0, "N": 1.5, "E": 0.02, "S": 0.02}
    for node in topology.nodes:
        if node.is_boundary:
            lanes = round(node.capacity / 20)  # 20 vehicles per lane at 150 m
            approach_dir = node.id.split(":")[1][0]
            boundary_rates[node.id] = lane_rates[approach_dir] * lanes
    plan: Dict[str, ControllerConfig] = {}
    order = ("a", "b", "c", "d")
    for junction in topology.junctions:
        row, col = (int(part) for part in junction.id[1:].split("_"))
        cycle = tuple((order[(i - row - col) % 4], 1) for i in range(4))
        plan[junction.id] = ControllerConfig.fixed_cycle(cycle)
    return Scenario(
        name="grid4x4_peak",
        topology=topology,
        arrivals=ArrivalProcess(
            rates=boundary_rates, kind="poisson", profile=make_peak_profile(horizon)
        ),
        routing=RoutingSpec(ratios),
        controllers=plan,
        horizon=horizon,
        seed=7,
    )


@dataclass(frozen=True)
class SweepCell:
    multiplier: float
    seed: int
    controller: str
    time_avg_total_queue: float
    final_avg_time_spent_slots: float
    final_avg_time_spent_seconds: float
    wc_violations: int


def _run_cell(args) -> SweepCell:
    scenario, multiplier, seed, label = args
    cell_scenario = replace(
        scenario.with_controller(label),
        arrivals=scenario.arrivals.scaled(multiplier),
        seed=seed,
    )
    trace = run(cell_scenario)
    avg_queue = sum(r.total_queue for r in trace.rows) / len(trace.rows)
    last = trace.rows[-1]
    return SweepCell(
        multiplier=multiplier,
        seed=seed,
        controller=label,
        time_avg_total_queue=avg_queue,
        final_avg_time_spent_slots=last.avg_time_spent_slots,
        final_avg_time_spent_seconds=last.avg_time_spent_seconds,
        wc_violations=int(trace.final_summary["wc_violations"]),
    )


def sweep(
    scenario: Scenario,
    multipliers: Sequence[float],
    seeds: Sequence[int],
    controllers: Sequence[str],
    jobs: int = 1,
) -> List[SweepCell]:
    """Run every (multiplier, seed, controller) cell.

    Within a cell the same seed drives all controllers, so differences are
    attributable to control and not to demand realizations.  Cells are
    independent; jobs > 1 runs them in worker processes.
    """
    if not multipliers or not seeds or not controllers:
        raise ConfigurationError("sweep needs at least one multiplier, seed and controller")
    if len(set(controllers)) != len(controllers):
        raise ConfigurationError(f"duplicate controller labels: {list(controllers)}")
    tasks = [
        (scenario, m, s, label)
        for m in multipliers
        for s in seeds
        for label in controllers
    ]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_cell, tasks))
    return [_run_cell(t) for t in tasks]


def sweep_csv(cells: Sequence[SweepCell]) -> str:
    lines = [SWEEP_HEADER]
    for c in cells:
        lines.append(
            f"{c.multiplier},{c.seed},{c.controller},{c.time_avg_total_queue},"
            f"{c.final_avg_time_spent_slots},{c.final_avg_time_spent_seconds},"
            f"{c.wc_violations}"
        )
    return "\n".join(lines) + "\n"
