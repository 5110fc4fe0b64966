"""Static network structure: nodes, directed links, junctions and phases.

A node is a directed road segment with finite storage; a junction owns a
set of links (input node, output node) and a list of phases, each phase
being a table of per-slot max transfer counts for the movements it serves.
Everything here is immutable after construction; validation reports
structural problems as data rather than raising.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import ConfigurationError

Movement = Tuple[str, str]


@dataclass(frozen=True)
class NodeSpec:
    id: str
    capacity: int
    is_boundary: bool = False


@dataclass(frozen=True)
class LinkSpec:
    from_node: str
    to_node: str
    junction: str


@dataclass(frozen=True)
class PhaseSpec:
    """One signal phase: the movements it serves and their per-slot caps."""

    id: str
    service: Mapping[Movement, int] = field(default_factory=dict)

    def mu(self, a: str, b: str) -> int:
        return self.service.get((a, b), 0)


@dataclass(frozen=True)
class JunctionSpec:
    id: str
    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...]
    phases: Tuple[PhaseSpec, ...]

    def phase(self, phase_id: str) -> PhaseSpec:
        for p in self.phases:
            if p.id == phase_id:
                return p
        raise ConfigurationError(f"junction {self.id} has no phase {phase_id!r}")


@dataclass(frozen=True)
class NetworkTopology:
    nodes: Tuple[NodeSpec, ...]
    links: Tuple[LinkSpec, ...]
    junctions: Tuple[JunctionSpec, ...]

    @cached_property
    def node_by_id(self) -> Dict[str, NodeSpec]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def junction_by_id(self) -> Dict[str, JunctionSpec]:
        return {j.id: j for j in self.junctions}

    @cached_property
    def movements(self) -> Tuple[Movement, ...]:
        return tuple((l.from_node, l.to_node) for l in self.links)

    @cached_property
    def junction_of_movement(self) -> Dict[Movement, str]:
        return {(l.from_node, l.to_node): l.junction for l in self.links}

    def capacity(self, node_id: str) -> int:
        return self.node_by_id[node_id].capacity

    def junction_movements(self, junction_id: str) -> List[Movement]:
        return [(l.from_node, l.to_node) for l in self.links if l.junction == junction_id]


def validate_topology(
    t: NetworkTopology, c_infinity: Optional[float] = None
) -> List[str]:
    """Check every structural invariant; return the violations found.

    An empty list means the topology is valid.  Passing c_infinity also
    checks that no node capacity exceeds it (required before pairing the
    network with a normalized pressure function).
    """
    violations: List[str] = []
    seen_nodes = set()
    for n in t.nodes:
        if n.id in seen_nodes:
            violations.append(f"duplicate node id {n.id!r}")
        seen_nodes.add(n.id)
        if n.capacity < 1:
            violations.append(f"node {n.id!r}: capacity must be >= 1, got {n.capacity}")
        if c_infinity is not None and n.capacity > c_infinity:
            violations.append(
                f"node {n.id!r}: capacity {n.capacity} exceeds reference capacity {c_infinity}"
            )
    node_ids = {n.id for n in t.nodes}

    junction_ids = set()
    for j in t.junctions:
        if j.id in junction_ids:
            violations.append(f"duplicate junction id {j.id!r}")
        junction_ids.add(j.id)

    seen_movements: Dict[Movement, str] = {}
    for l in t.links:
        if l.from_node not in node_ids:
            violations.append(f"link {l.from_node}->{l.to_node}: unknown node {l.from_node!r}")
        if l.to_node not in node_ids:
            violations.append(f"link {l.from_node}->{l.to_node}: unknown node {l.to_node!r}")
        if l.junction not in junction_ids:
            violations.append(
                f"link {l.from_node}->{l.to_node}: unknown junction {l.junction!r}"
            )
        key = (l.from_node, l.to_node)
        if key in seen_movements:
            violations.append(
                f"link {l.from_node}->{l.to_node}: partition violated, assigned to both "
                f"{seen_movements[key]!r} and {l.junction!r}"
            )
        seen_movements[key] = l.junction

    for j in t.junctions:
        own_links = [l for l in t.links if l.junction == j.id]
        if set(j.inputs) != {l.from_node for l in own_links}:
            violations.append(
                f"junction {j.id!r}: inputs do not match the from-nodes of its links"
            )
        if set(j.outputs) != {l.to_node for l in own_links}:
            violations.append(
                f"junction {j.id!r}: outputs do not match the to-nodes of its links"
            )
        if not j.phases:
            violations.append(f"junction {j.id!r}: phase list is empty")
        movement_set = {(l.from_node, l.to_node) for l in own_links}
        any_positive = False
        phase_ids = set()
        for p in j.phases:
            if p.id in phase_ids:
                violations.append(f"junction {j.id!r}: duplicate phase id {p.id!r}")
            phase_ids.add(p.id)
            for (a, b), mu in p.service.items():
                if mu < 0 or mu != int(mu):
                    violations.append(
                        f"junction {j.id!r} phase {p.id!r}: service for {a}->{b} must be a "
                        f"non-negative integer, got {mu}"
                    )
                if (a, b) not in movement_set:
                    violations.append(
                        f"junction {j.id!r} phase {p.id!r}: service entry {a}->{b} is not a "
                        f"link of this junction"
                    )
                if mu > 0:
                    any_positive = True
        if j.phases and not any_positive:
            violations.append(f"junction {j.id!r}: no phase serves any movement")
    return violations


# Grid generation.  Directions are N/E/S/W; "approach from d" means the road
# entering a junction from compass direction d.  Axis 1 is east-west.
_DIRS = ("N", "E", "S", "W")
_OPPOSITE = {"N": "S", "S": "N", "E": "W", "W": "E"}
# traveling direction of an approach from d, then its right/left turn targets
_STRAIGHT = {"N": "S", "S": "N", "E": "W", "W": "E"}
_RIGHT = {"N": "W", "S": "E", "E": "N", "W": "S"}
_LEFT = {"N": "E", "S": "W", "E": "S", "W": "N"}


@dataclass(frozen=True)
class GridDefaults:
    """Per-lane service rates used by generated phases (vehicles per slot)."""

    mu_straight: int = 5
    mu_turn: int = 3
    meters_per_vehicle: float = 7.5


def generate_grid(
    rows: int,
    cols: int,
    lane_pattern: Union[int, Sequence[int]] = (2, 1),
    road_length_m: float = 150.0,
    defaults: GridDefaults = GridDefaults(),
) -> NetworkTopology:
    """Build a rows x cols grid of 4-way junctions with bi-directional roads.

    Each directed road is one node; its capacity is
    floor(lanes * road_length_m / meters_per_vehicle).  Lane counts alternate
    along the pattern: horizontal roads take lane_pattern[row % len], vertical
    roads lane_pattern[col % len].  Every junction gets four phases, listed in
    signal-plan order: 'a' (east-west straight and right), 'c' (east-west
    left), 'b' (north-south straight and right), 'd' (north-south left).
    Roads at the grid edge continue outward: inbound edge roads are boundary
    nodes (arrivals may enter there), outbound edge roads are exit roads.
    """
    if rows < 1 or cols < 1:
        raise ConfigurationError(f"grid dimensions must be >= 1, got {rows}x{cols}")
    if road_length_m <= 0:
        raise ConfigurationError(f"road length must be positive, got {road_length_m}")
    if isinstance(lane_pattern, int):
        lane_pattern = (lane_pattern,)
    lane_pattern = tuple(lane_pattern)
    if not lane_pattern or any(l < 1 for l in lane_pattern):
        raise ConfigurationError(f"lane pattern entries must be >= 1, got {lane_pattern}")

    def jid(r: int, c: int) -> str:
        return f"J{r}_{c}"

    def neighbor(r: int, c: int, d: str) -> Optional[Tuple[int, int]]:
        r2, c2 = {"N": (r - 1, c), "S": (r + 1, c), "E": (r, c + 1), "W": (r, c - 1)}[d]
        if 0 <= r2 < rows and 0 <= c2 < cols:
            return r2, c2
        return None

    def lanes_of(r: int, c: int, d: str) -> int:
        # A road along the east-west axis belongs to its row, a north-south
        # road to its column.
        if d in ("E", "W"):
            return lane_pattern[r % len(lane_pattern)]
        return lane_pattern[c % len(lane_pattern)]

    def approach_id(r: int, c: int, d: str) -> str:
        return f"{jid(r, c)}:{d}i"

    def exit_id(r: int, c: int, d: str) -> str:
        return f"{jid(r, c)}:{d}o"

    def out_node(r: int, c: int, d: str) -> str:
        # The road leaving junction (r,c) toward d: either the neighbor's
        # approach from the opposite side, or an exit road off the grid.
        n = neighbor(r, c, d)
        if n is None:
            return exit_id(r, c, d)
        return approach_id(n[0], n[1], _OPPOSITE[d])

    nodes: List[NodeSpec] = []
    links: List[LinkSpec] = []
    junctions: List[JunctionSpec] = []
    for r in range(rows):
        for c in range(cols):
            for d in _DIRS:
                lanes = lanes_of(r, c, d)
                cap = int(lanes * road_length_m / defaults.meters_per_vehicle)
                nodes.append(
                    NodeSpec(approach_id(r, c, d), cap, is_boundary=neighbor(r, c, d) is None)
                )
                if neighbor(r, c, d) is None:
                    nodes.append(NodeSpec(exit_id(r, c, d), cap))

            inputs = tuple(approach_id(r, c, d) for d in _DIRS)
            outputs = tuple(out_node(r, c, d) for d in _DIRS)
            service_ew: Dict[Movement, int] = {}
            service_ns: Dict[Movement, int] = {}
            left_ew: Dict[Movement, int] = {}
            left_ns: Dict[Movement, int] = {}
            for d in _DIRS:
                a = approach_id(r, c, d)
                lanes = lanes_of(r, c, d)
                straight = (a, out_node(r, c, _STRAIGHT[d]))
                right = (a, out_node(r, c, _RIGHT[d]))
                left = (a, out_node(r, c, _LEFT[d]))
                links.extend(LinkSpec(m[0], m[1], jid(r, c)) for m in (straight, right, left))
                through = service_ew if d in ("E", "W") else service_ns
                turn = left_ew if d in ("E", "W") else left_ns
                through[straight] = defaults.mu_straight * lanes
                through[right] = defaults.mu_turn * lanes
                turn[left] = defaults.mu_turn * lanes
            junctions.append(
                JunctionSpec(
                    id=jid(r, c),
                    inputs=inputs,
                    outputs=outputs,
                    phases=(
                        PhaseSpec("a", service_ew),
                        PhaseSpec("c", left_ew),
                        PhaseSpec("b", service_ns),
                        PhaseSpec("d", left_ns),
                    ),
                )
            )
    return NetworkTopology(tuple(nodes), tuple(links), tuple(junctions))
