"""Scenario files: parsing with positioned errors, serialization, and
canonical fixture documents.

The file format is YAML with a fixed schema (version 1).  Field names
follow the model's symbols: node capacity is `C`, arrival rates sit
under `lambda`, routing ratios under `r`, phase service tables under
`mu`.  Movement keys flatten to "from>to", so node ids must not
contain ">".  Parsing is total: it returns a result object carrying
either a document or a list of positioned issues, and never raises on
malformed input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import yaml

from .control import CONTROLLER_KINDS, ControllerConfig
from .dynamics import ARRIVAL_KINDS, INTEGER, MODES, ArrivalProcess, RoutingSpec
from .engine import Scenario, dump_scenario_dict, validate_scenario
from .errors import ConfigurationError
from .pressure import KINDS as PRESSURE_KINDS
from .pressure import NORMALIZED, PressureFunction
from .topology import (
    GridDefaults,
    JunctionSpec,
    LinkSpec,
    Movement,
    NetworkTopology,
    NodeSpec,
    PhaseSpec,
    generate_grid,
)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ParseIssue:
    """One problem found while reading a scenario file."""

    path: str
    message: str
    line: Optional[int] = None
    column: Optional[int] = None

    def __str__(self) -> str:
        where = self.path or "document"
        if self.line is not None:
            where += f" (line {self.line}, column {self.column})"
        return f"{where}: {self.message}"


@dataclass(frozen=True)
class ScenarioDocument:
    version: int
    scenario: Scenario


@dataclass
class ParseResult:
    document: Optional[ScenarioDocument]
    issues: List[ParseIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.document is not None and not self.issues


class _Collector:
    def __init__(self) -> None:
        self.issues: List[ParseIssue] = []

    def add(self, path: str, message: str) -> None:
        self.issues.append(ParseIssue(path=path, message=message))


def _is_num(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _get_map(c: _Collector, parent: Mapping, key: str, path: str, required: bool = True):
    if key not in parent:
        if required:
            c.add(path, "required section is missing")
        return None
    value = parent[key]
    if not isinstance(value, Mapping):
        c.add(path, f"expected a mapping, got {type(value).__name__}")
        return None
    return value


def _check_known(c: _Collector, mapping: Mapping, known: Tuple[str, ...], path: str) -> None:
    for key in mapping:
        if key not in known:
            c.add(f"{path}.{key}" if path else str(key), "unknown field")


def _movement(c: _Collector, key: Any, path: str) -> Optional[Movement]:
    if not isinstance(key, str) or key.count(">") != 1:
        c.add(path, f"movement key must look like 'from>to', got {key!r}")
        return None
    a, b = key.split(">")
    if not a or not b:
        c.add(path, f"movement key must name both nodes, got {key!r}")
        return None
    return (a, b)


def _parse_topology(c: _Collector, section: Mapping) -> Optional[NetworkTopology]:
    if "grid" in section:
        _check_known(c, section, ("grid",), "topology")
        grid = _get_map(c, section, "grid", "topology.grid")
        if grid is None:
            return None
        known = (
            "rows",
            "cols",
            "lane_pattern",
            "road_length_m",
            "mu_straight",
            "mu_turn",
            "meters_per_vehicle",
        )
        _check_known(c, grid, known, "topology.grid")
        rows, cols = grid.get("rows"), grid.get("cols")
        if not _is_int(rows) or not _is_int(cols):
            c.add("topology.grid", "rows and cols must be integers")
            return None
        lane_pattern = grid.get("lane_pattern", (2, 1))
        if isinstance(lane_pattern, list):
            lane_pattern = tuple(lane_pattern)
        defaults = GridDefaults(
            mu_straight=grid.get("mu_straight", GridDefaults.mu_straight),
            mu_turn=grid.get("mu_turn", GridDefaults.mu_turn),
            meters_per_vehicle=grid.get("meters_per_vehicle", GridDefaults.meters_per_vehicle),
        )
        try:
            return generate_grid(
                rows,
                cols,
                lane_pattern=lane_pattern,
                road_length_m=grid.get("road_length_m", 150.0),
                defaults=defaults,
            )
        except (ConfigurationError, TypeError, ValueError) as err:
            c.add("topology.grid", str(err))
            return None

    _check_known(c, section, ("nodes", "links", "junctions"), "topology")
    nodes: List[NodeSpec] = []
    raw_nodes = section.get("nodes")
    if not isinstance(raw_nodes, list):
        c.add("topology.nodes", "required list is missing")
        return None
    for i, raw in enumerate(raw_nodes):
        path = f"topology.nodes[{i}]"
        if not isinstance(raw, Mapping):
            c.add(path, "expected a mapping")
            continue
        _check_known(c, raw, ("id", "C", "boundary"), path)
        node_id = raw.get("id")
        if not isinstance(node_id, str) or not node_id:
            c.add(path, "id must be a non-empty string")
            continue
        if ">" in node_id:
            c.add(path, f"node id {node_id!r} must not contain '>'")
            continue
        cap = raw.get("C")
        if not _is_num(cap):
            c.add(path, "C must be a number")
            continue
        boundary = raw.get("boundary", False)
        if not isinstance(boundary, bool):
            c.add(path, "boundary must be true or false")
            continue
        nodes.append(NodeSpec(node_id, cap, is_boundary=boundary))

    links: List[LinkSpec] = []
    raw_links = section.get("links")
    if not isinstance(raw_links, list):
        c.add("topology.links", "required list is missing")
        return None
    for i, raw in enumerate(raw_links):
        path = f"topology.links[{i}]"
        if not isinstance(raw, Mapping):
            c.add(path, "expected a mapping")
            continue
        _check_known(c, raw, ("from", "to", "junction"), path)
        parts = raw.get("from"), raw.get("to"), raw.get("junction")
        if not all(isinstance(p, str) and p for p in parts):
            c.add(path, "from, to and junction must be non-empty strings")
            continue
        links.append(LinkSpec(*parts))

    junctions: List[JunctionSpec] = []
    raw_junctions = section.get("junctions")
    if not isinstance(raw_junctions, list):
        c.add("topology.junctions", "required list is missing")
        return None
    for i, raw in enumerate(raw_junctions):
        path = f"topology.junctions[{i}]"
        if not isinstance(raw, Mapping):
            c.add(path, "expected a mapping")
            continue
        _check_known(c, raw, ("id", "inputs", "outputs", "phases"), path)
        jid = raw.get("id")
        inputs = raw.get("inputs")
        outputs = raw.get("outputs")
        raw_phases = raw.get("phases")
        if not isinstance(jid, str) or not jid:
            c.add(path, "id must be a non-empty string")
            continue
        if not isinstance(inputs, list) or not isinstance(outputs, list):
            c.add(path, "inputs and outputs must be lists of node ids")
            continue
        if not isinstance(raw_phases, list) or not raw_phases:
            c.add(f"{path}.phases", "expected a non-empty list")
            continue
        phases: List[PhaseSpec] = []
        broken = False
        for k, rp in enumerate(raw_phases):
            ppath = f"{path}.phases[{k}]"
            if not isinstance(rp, Mapping):
                c.add(ppath, "expected a mapping")
                broken = True
                continue
            _check_known(c, rp, ("id", "mu"), ppath)
            pid = rp.get("id")
            mu = rp.get("mu")
            if not isinstance(pid, str) or not pid:
                c.add(ppath, "id must be a non-empty string")
                broken = True
                continue
            if not isinstance(mu, Mapping):
                c.add(f"{ppath}.mu", "expected a mapping of 'from>to' keys")
                broken = True
                continue
            service: Dict[Movement, float] = {}
            for key, rate in mu.items():
                m = _movement(c, key, f"{ppath}.mu.{key}")
                if m is None:
                    broken = True
                    continue
                if not _is_num(rate) or rate < 0:
                    c.add(f"{ppath}.mu.{key}", f"service rate must be >= 0, got {rate!r}")
                    broken = True
                    continue
                service[m] = rate
            if not broken:
                phases.append(PhaseSpec(pid, service))
        if broken:
            continue
        junctions.append(JunctionSpec(jid, tuple(inputs), tuple(outputs), tuple(phases)))

    if c.issues:
        return None
    return NetworkTopology(tuple(nodes), tuple(links), tuple(junctions))


def _parse_arrivals(c: _Collector, section: Optional[Mapping]) -> ArrivalProcess:
    if section is None:
        return ArrivalProcess(rates={})
    _check_known(c, section, ("kind", "lambda", "profile"), "arrivals")
    kind = section.get("kind", "poisson")
    if kind not in ARRIVAL_KINDS:
        c.add("arrivals.kind", f"unknown kind {kind!r}; have {sorted(ARRIVAL_KINDS)}")
        kind = "poisson"
    rates: Dict[str, float] = {}
    raw = section.get("lambda", {})
    if not isinstance(raw, Mapping):
        c.add("arrivals.lambda", "expected a mapping of node id to rate")
        raw = {}
    for node, rate in raw.items():
        if not isinstance(node, str):
            c.add("arrivals.lambda", f"node id must be a string, got {node!r}")
        elif not _is_num(rate) or rate < 0:
            c.add(f"arrivals.lambda.{node}", f"rate must be >= 0, got {rate!r}")
        else:
            rates[node] = float(rate)
    profile = section.get("profile")
    if profile is not None:
        if not isinstance(profile, list) or not all(_is_num(v) and v >= 0 for v in profile):
            c.add("arrivals.profile", "expected a list of non-negative numbers")
            profile = None
        else:
            profile = [float(v) for v in profile]
    return ArrivalProcess(rates=rates, kind=kind, profile=profile)


def _parse_routing(c: _Collector, section: Optional[Mapping]) -> RoutingSpec:
    if section is None:
        return RoutingSpec({})
    _check_known(c, section, ("r",), "routing")
    ratios: Dict[Movement, float] = {}
    raw = section.get("r", {})
    if not isinstance(raw, Mapping):
        c.add("routing.r", "expected a mapping of 'from>to' keys")
        raw = {}
    for key, ratio in raw.items():
        m = _movement(c, key, f"routing.r.{key}")
        if m is None:
            continue
        if not _is_num(ratio):
            c.add(f"routing.r.{key}", f"ratio must be a number, got {ratio!r}")
            continue
        ratios[m] = float(ratio)
    return RoutingSpec(ratios)


def _parse_controller(c: _Collector, raw: Any, path: str) -> Optional[ControllerConfig]:
    if not isinstance(raw, Mapping):
        c.add(path, "expected a mapping")
        return None
    _check_known(c, raw, ("kind", "tie_epsilon", "pressure", "cycle"), path)
    kind = raw.get("kind")
    if kind not in CONTROLLER_KINDS:
        c.add(f"{path}.kind", f"unknown kind {kind!r}; have {sorted(CONTROLLER_KINDS)}")
        return None
    pressure = None
    if "pressure" in raw:
        p = raw["pressure"]
        if not isinstance(p, Mapping):
            c.add(f"{path}.pressure", "expected a mapping")
            return None
        _check_known(c, p, ("kind", "m", "C_inf"), f"{path}.pressure")
        pkind = p.get("kind")
        if pkind not in PRESSURE_KINDS:
            c.add(
                f"{path}.pressure.kind",
                f"unknown kind {pkind!r}; have {sorted(PRESSURE_KINDS)}",
            )
            return None
        try:
            if pkind == NORMALIZED:
                pressure = PressureFunction.normalized(p.get("m"), p.get("C_inf"))
            else:
                pressure = PressureFunction(kind=pkind)
        except (ConfigurationError, TypeError) as err:
            c.add(f"{path}.pressure", str(err))
            return None
    cycle = None
    if "cycle" in raw and raw["cycle"] is not None:
        entries = raw["cycle"]
        if not isinstance(entries, list):
            c.add(f"{path}.cycle", "expected a list of [phase, slots] pairs")
            return None
        cycle = []
        for i, entry in enumerate(entries):
            if (
                not isinstance(entry, (list, tuple))
                or len(entry) != 2
                or not isinstance(entry[0], str)
                or not _is_int(entry[1])
            ):
                c.add(f"{path}.cycle[{i}]", f"expected [phase, slots], got {entry!r}")
                return None
            cycle.append((entry[0], entry[1]))
        cycle = tuple(cycle)
    kwargs: Dict[str, Any] = {"kind": kind, "pressure": pressure, "cycle": cycle}
    if "tie_epsilon" in raw:
        if not _is_num(raw["tie_epsilon"]):
            c.add(f"{path}.tie_epsilon", "expected a number")
            return None
        kwargs["tie_epsilon"] = float(raw["tie_epsilon"])
    try:
        return ControllerConfig(**kwargs)
    except ConfigurationError as err:
        c.add(path, str(err))
        return None


def _parse_controllers(c: _Collector, section: Mapping):
    _check_known(c, section, ("all", "per_junction"), "controllers")
    if ("all" in section) == ("per_junction" in section):
        c.add("controllers", "exactly one of 'all' or 'per_junction' is required")
        return None
    if "all" in section:
        return _parse_controller(c, section["all"], "controllers.all")
    raw = section["per_junction"]
    if not isinstance(raw, Mapping):
        c.add("controllers.per_junction", "expected a mapping of junction id to config")
        return None
    configs: Dict[str, ControllerConfig] = {}
    for jid, entry in raw.items():
        cfg = _parse_controller(c, entry, f"controllers.per_junction.{jid}")
        if cfg is not None:
            configs[jid] = cfg
    return configs


_PROBLEM_PATHS = (
    ("routing ratio", "routing.r"),
    ("routing ratios", "routing.r"),
    ("arrival rate", "arrivals.lambda"),
    ("initial queue", "initial_queues"),
    ("cycle for junction", "controllers"),
    ("controller", "controllers"),
    ("horizon", "run.horizon"),
    ("mode", "run.mode"),
    ("slot_seconds", "run.slot_seconds"),
    ("deterministic-fluid", "run.mode"),
)


def _path_for_problem(message: str) -> str:
    for needle, path in _PROBLEM_PATHS:
        if needle in message:
            return path
    return "topology"


def parse_scenario(text: str) -> ParseResult:
    """Read a scenario file; never raises on malformed input."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        issue = ParseIssue(
            path="",
            message=f"not valid YAML: {getattr(err, 'problem', err)}",
            line=None if mark is None else mark.line + 1,
            column=None if mark is None else mark.column + 1,
        )
        return ParseResult(document=None, issues=[issue])
    if not isinstance(data, Mapping):
        return ParseResult(
            document=None,
            issues=[ParseIssue(path="", message="scenario file must be a mapping")],
        )

    c = _Collector()
    known = (
        "version",
        "name",
        "topology",
        "arrivals",
        "routing",
        "controllers",
        "run",
        "initial_queues",
    )
    _check_known(c, data, known, "")

    version = data.get("version")
    if version != SCHEMA_VERSION:
        c.add("version", f"expected schema version {SCHEMA_VERSION}, got {version!r}")

    name = data.get("name", "scenario")
    if not isinstance(name, str) or not name:
        c.add("name", "expected a non-empty string")
        name = "scenario"

    topology = None
    topo_section = _get_map(c, data, "topology", "topology")
    if topo_section is not None:
        topology = _parse_topology(c, topo_section)

    arrivals = _parse_arrivals(c, _get_map(c, data, "arrivals", "arrivals", required=False))
    routing = _parse_routing(c, _get_map(c, data, "routing", "routing", required=False))

    controllers = None
    ctrl_section = _get_map(c, data, "controllers", "controllers")
    if ctrl_section is not None:
        controllers = _parse_controllers(c, ctrl_section)

    run_section = _get_map(c, data, "run", "run")
    horizon, seed, mode, slot_seconds = 1, 0, INTEGER, 15.0
    if run_section is not None:
        _check_known(c, run_section, ("horizon", "seed", "mode", "slot_seconds"), "run")
        horizon = run_section.get("horizon")
        if not _is_int(horizon) or horizon < 1:
            c.add("run.horizon", f"expected an integer >= 1, got {horizon!r}")
            horizon = 1
        seed = run_section.get("seed", 0)
        if not _is_int(seed):
            c.add("run.seed", f"expected an integer, got {seed!r}")
            seed = 0
        mode = run_section.get("mode", INTEGER)
        if mode not in MODES:
            c.add("run.mode", f"unknown mode {mode!r}; have {sorted(MODES)}")
            mode = INTEGER
        slot_seconds = run_section.get("slot_seconds", 15.0)
        if not _is_num(slot_seconds) or slot_seconds <= 0:
            c.add("run.slot_seconds", f"expected a positive number, got {slot_seconds!r}")
            slot_seconds = 15.0

    initial: Dict[Movement, float] = {}
    raw_initial = data.get("initial_queues", {})
    if not isinstance(raw_initial, Mapping):
        c.add("initial_queues", "expected a mapping of 'from>to' keys")
    else:
        for key, q in raw_initial.items():
            m = _movement(c, key, f"initial_queues.{key}")
            if m is None:
                continue
            if not _is_num(q) or q < 0:
                c.add(f"initial_queues.{key}", f"queue must be >= 0, got {q!r}")
                continue
            initial[m] = q

    if c.issues or topology is None or controllers is None:
        return ParseResult(document=None, issues=c.issues)

    scenario = Scenario(
        name=name,
        topology=topology,
        arrivals=arrivals,
        routing=routing,
        controllers=controllers,
        horizon=horizon,
        seed=seed,
        mode=mode,
        slot_seconds=slot_seconds,
        initial_counts=initial,
    )
    for problem in validate_scenario(scenario):
        c.add(_path_for_problem(problem), problem)
    if c.issues:
        return ParseResult(document=None, issues=c.issues)
    return ParseResult(document=ScenarioDocument(version=SCHEMA_VERSION, scenario=scenario))


def serialize_scenario(scenario: Union[Scenario, ScenarioDocument]) -> str:
    if isinstance(scenario, ScenarioDocument):
        scenario = scenario.scenario
    return yaml.safe_dump(dump_scenario_dict(scenario), sort_keys=False, width=100)


_FIXTURE_NOTES = {
    "theorem1": (
        "# Hand-built crossing for the work-conservation failure: the\n"
        "# heaviest-pressure movement a>b faces a full output node, the\n"
        "# feasible crossing c>d carries a smaller pressure difference.\n"
        "# Linear pressures select the blocked phase and move nothing;\n"
        "# saturation-aware pressures serve the crossing instead.\n"
    ),
    "deadlock_ring": (
        "# Three-junction ring of full nodes.  Most of each ring node's\n"
        "# load points forward along the ring in a movement no phase\n"
        "# serves, so linear pressures hold every junction on its blocked\n"
        "# inbound phase forever.  Saturation-aware pressures zero those\n"
        "# weights and drain the ring through the crossing phases.\n"
    ),
    "grid4x4_peak": (
        "# 4x4 grid with alternating 2- and 1-lane roads under a\n"
        "# triangular morning-peak profile.  Demand is a commuter pattern\n"
        "# (heavy eastbound, medium southbound); the built-in fixed-time\n"
        "# plan is offset per junction so both heavy directions ride a\n"
        "# green wave.\n"
    ),
}


def canonical_fixtures() -> Dict[str, str]:
    """Serialized forms of the built-in scenarios, ready to write to disk."""
    from .engine import fixture_deadlock_ring, fixture_grid4x4_peak, fixture_theorem1

    fixtures = {
        "theorem1": fixture_theorem1(),
        "deadlock_ring": fixture_deadlock_ring(),
        "grid4x4_peak": fixture_grid4x4_peak(),
    }
    return {
        name: _FIXTURE_NOTES[name] + serialize_scenario(scenario)
        for name, scenario in fixtures.items()
    }
