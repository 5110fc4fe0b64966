"""One simulation slot: blocking-limited transfers, arrivals, routing, update.

The slot transition is pure: ``step`` maps a state plus inputs to a fresh
state (shared sub-structures are copied before mutation).  All blocking
decisions read the slot-start state only; a destination that fills up
mid-slot keeps accepting transfers until the next slot, and exogenous
arrivals are never blocked at all, so a node can exceed its capacity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from .errors import ConfigurationError
from .topology import Movement, NetworkTopology

INTEGER = "integer"
FLUID = "fluid"
MODES = (INTEGER, FLUID)

POISSON = "poisson"
BERNOULLI_BATCH = "bernoulli-batch"
DETERMINISTIC_FLUID = "deterministic-fluid"
ARRIVAL_KINDS = (POISSON, BERNOULLI_BATCH, DETERMINISTIC_FLUID)


@dataclass(frozen=True)
class QueueState:
    """Per-movement queue contents at the start of a slot.

    counts[(a, b)] is the number of vehicles at node a waiting to move to
    node b.  In integer mode entry_slots[(a, b)] lists, oldest first, the
    slot at which each of those vehicles entered the network; entry_mass
    holds the same information as a per-movement sum so the time-spent
    metric is O(movements), and is the only record kept in fluid mode.
    """

    counts: Dict[Movement, float]
    entry_slots: Dict[Movement, List[int]]
    entry_mass: Dict[Movement, float]
    slot: int = 0

    @classmethod
    def initial(
        cls,
        topology: NetworkTopology,
        counts: Optional[Mapping[Movement, float]] = None,
        mode: str = INTEGER,
        slot: int = 0,
    ) -> "QueueState":
        """Dense state over every movement of the topology.

        Pre-loaded vehicles are stamped with the starting slot as their
        network-entry slot.
        """
        counts = dict(counts or {})
        unknown = set(counts) - set(topology.movements)
        if unknown:
            raise ConfigurationError(f"counts for movements not in topology: {sorted(unknown)}")
        full: Dict[Movement, float] = {}
        entry_slots: Dict[Movement, List[int]] = {}
        entry_mass: Dict[Movement, float] = {}
        for m in topology.movements:
            q = counts.get(m, 0)
            if q < 0:
                raise ConfigurationError(f"negative queue for {m}: {q}")
            if mode == INTEGER:
                q = int(q)
                entry_slots[m] = [slot] * q
            full[m] = q
            entry_mass[m] = float(slot) * q
        return cls(counts=full, entry_slots=entry_slots, entry_mass=entry_mass, slot=slot)

    def total(self) -> float:
        return sum(self.counts.values())

    def node_totals(self, topology: NetworkTopology) -> Dict[str, float]:
        """Q_b per node: vehicles stored at b across all its movements."""
        totals = dict.fromkeys(topology.node_by_id, 0.0)
        for (a, _b), q in self.counts.items():
            totals[a] += q
        return totals


@dataclass(frozen=True)
class ArrivalProcess:
    """Exogenous demand: per-node mean arrivals per slot, optionally shaped.

    kinds: poisson draws counts; bernoulli-batch draws a whole batch of
    ceil(lambda) vehicles with the probability that preserves the mean;
    deterministic-fluid emits lambda itself (fluid mode only).  The profile
    multiplies the rates slot by slot and is treated as 1 past its end.
    """

    rates: Mapping[str, float]
    kind: str = POISSON
    profile: Optional[Sequence[float]] = None

    def __post_init__(self):
        if self.kind not in ARRIVAL_KINDS:
            raise ConfigurationError(f"unknown arrival kind {self.kind!r}")
        for node, lam in self.rates.items():
            if lam < 0:
                raise ConfigurationError(f"arrival rate for {node!r} must be >= 0, got {lam}")
        if self.profile is not None and any(m < 0 for m in self.profile):
            raise ConfigurationError("profile multipliers must be >= 0")

    @cached_property
    def _nodes(self) -> Tuple[str, ...]:
        return tuple(sorted(self.rates))

    @cached_property
    def _rate_vector(self) -> np.ndarray:
        return np.array([self.rates[n] for n in self._nodes], dtype=float)

    def multiplier(self, slot: int) -> float:
        if self.profile is None or slot >= len(self.profile):
            return 1.0
        return float(self.profile[slot])

    def scaled(self, factor: float) -> "ArrivalProcess":
        if factor < 0:
            raise ConfigurationError(f"arrival scale must be >= 0, got {factor}")
        return ArrivalProcess(
            rates={n: lam * factor for n, lam in self.rates.items()},
            kind=self.kind,
            profile=self.profile,
        )


def sample_arrivals(
    process: ArrivalProcess, slot: int, rng: np.random.Generator
) -> Dict[str, float]:
    """A_a for one slot, keyed like process.rates; reproducible from rng."""
    lam = process._rate_vector * process.multiplier(slot)
    if process.kind == DETERMINISTIC_FLUID:
        values = lam
    elif process.kind == POISSON:
        values = rng.poisson(lam) if lam.size else lam
    else:
        batch = np.ceil(lam)
        prob = np.divide(lam, batch, out=np.zeros_like(lam), where=batch > 0)
        values = (rng.random(lam.size) < prob) * batch
    if process.kind == DETERMINISTIC_FLUID:
        return {n: float(v) for n, v in zip(process._nodes, values)}
    return {n: int(v) for n, v in zip(process._nodes, values)}


@dataclass(frozen=True)
class RoutingSpec:
    """Per-origin split ratios r_ab; the remainder 1 - sum_b r_ab exits."""

    ratios: Mapping[Movement, float]

    @cached_property
    def _by_origin(self) -> Dict[str, Tuple[Tuple[str, ...], np.ndarray]]:
        # destinations sorted per origin; probability vector carries the
        # implicit exit share as its last entry.
        grouped: Dict[str, List[Tuple[str, float]]] = {}
        for (a, b), r in self.ratios.items():
            grouped.setdefault(a, []).append((b, r))
        table = {}
        for a, pairs in grouped.items():
            pairs.sort()
            total = sum(r for _b, r in pairs)
            if total > 1.0 + 1e-9:
                raise ConfigurationError(f"routing ratios at {a!r} sum to {total} > 1")
            dests = tuple(b for b, _r in pairs)
            probs = np.array([r for _b, r in pairs] + [max(0.0, 1.0 - total)], dtype=float)
            table[a] = (dests, probs)
        return table

    def validate(self, topology: NetworkTopology) -> List[str]:
        violations = []
        movements = set(topology.movements)
        by_origin: Dict[str, float] = {}
        for (a, b), r in self.ratios.items():
            if not 0.0 <= r <= 1.0:
                violations.append(f"routing ratio {a}->{b} must lie in [0,1], got {r}")
            if r > 0 and (a, b) not in movements:
                violations.append(f"routing ratio {a}->{b}: no such junction link")
            by_origin[a] = by_origin.get(a, 0.0) + r
        for a, total in by_origin.items():
            if total > 1.0 + 1e-9:
                violations.append(f"routing ratios at {a!r} sum to {total} > 1")
        return violations


@dataclass(frozen=True)
class FlowRealization:
    """Vehicles actually transferred this slot, and what blocking stopped."""

    flows: Dict[Movement, float]
    blocked: Set[Movement] = field(default_factory=set)

    def total(self) -> float:
        return sum(self.flows.values())


def blocking_indicator(q: float, c: float) -> int:
    """1 while the node still has room (q < c), else 0."""
    return 1 if q < c else 0


def compute_flows(
    state: QueueState,
    topology: NetworkTopology,
    phases: Mapping[str, str],
    cap_inflow: bool = False,
    service_scale: float = 1.0,
    node_totals: Optional[Mapping[str, float]] = None,
) -> FlowRealization:
    """f_ab = delta(Q_b, C_b) * min(Q_ab, mu_ab(p)) for the selected phases.

    delta reads slot-start totals only.  cap_inflow additionally trims
    transfers (in sorted movement order) so no destination is pushed past
    its capacity within the slot; off by default, since joint overshoot is
    the documented semantics.  service_scale derates every mu (floored in
    integer mode), modeling lost green time.  node_totals, if given, must
    be state.node_totals(topology); callers that already computed it can
    pass it to skip the recomputation.
    """
    if node_totals is None:
        node_totals = state.node_totals(topology)
    flows: Dict[Movement, float] = dict.fromkeys(topology.movements, 0)
    blocked: Set[Movement] = set()
    integer_mode = bool(state.entry_slots)
    for junction in topology.junctions:
        if junction.id not in phases:
            raise ConfigurationError(f"no phase selected for junction {junction.id!r}")
        phase = junction.phase(phases[junction.id])
        for (a, b), mu in phase.service.items():
            if mu <= 0:
                continue
            if service_scale != 1.0:
                mu = mu * service_scale
                if integer_mode:
                    mu = math.floor(mu)
            q_ab = state.counts[(a, b)]
            if node_totals[b] >= topology.capacity(b):
                if q_ab > 0:
                    blocked.add((a, b))
                continue
            flows[(a, b)] = min(q_ab, mu)
    if cap_inflow:
        headroom = {
            n: max(0.0, topology.capacity(n) - node_totals[n]) for n in node_totals
        }
        for (a, b) in sorted(m for m, f in flows.items() if f > 0):
            allowed = min(flows[(a, b)], headroom[b])
            if integer_mode:
                allowed = math.floor(allowed)
            flows[(a, b)] = allowed
            headroom[b] -= allowed
    return FlowRealization(flows=flows, blocked=blocked)


def route_inflow(
    node: str,
    inflow: float,
    routing: RoutingSpec,
    mode: str,
    rng: np.random.Generator,
) -> Tuple[Dict[str, float], float]:
    """Split one node's inflow into per-destination increments plus exits.

    Integer mode draws a multinomial over destinations and the implicit
    exit; fluid mode splits proportionally.  Increments and exits sum to
    the inflow exactly.
    """
    if inflow < 0:
        raise ConfigurationError(f"inflow must be >= 0, got {inflow}")
    entry = routing._by_origin.get(node)
    if entry is None:
        return {}, inflow
    dests, probs = entry
    if inflow == 0:
        return {b: 0 for b in dests}, 0
    if mode == FLUID:
        shares = {b: inflow * probs[i] for i, b in enumerate(dests)}
        return shares, inflow * probs[-1]
    draw = rng.multinomial(int(inflow), probs)
    return {b: int(draw[i]) for i, b in enumerate(dests)}, int(draw[-1])


def step(
    state: QueueState,
    topology: NetworkTopology,
    phases: Mapping[str, str],
    arrivals: Mapping[str, float],
    routing: RoutingSpec,
    mode: str,
    rng: np.random.Generator,
    flows: Optional[FlowRealization] = None,
    cap_inflow: bool = False,
    service_scale: float = 1.0,
) -> Tuple["QueueState", FlowRealization, float]:
    """Advance one slot; returns (next state, flows, exit count).

    Transfers leave each queue oldest-first and keep their original
    network-entry slot; exogenous arrivals are stamped with the current
    slot.  Pass a precomputed FlowRealization to avoid recomputing it when
    the caller already needed the flows (it must match state and phases).
    """
    if mode not in MODES:
        raise ConfigurationError(f"unknown mode {mode!r}")
    if mode == INTEGER and not all(float(a) == int(a) for a in arrivals.values()):
        raise ConfigurationError("integer mode requires whole-vehicle arrivals")
    if flows is None:
        flows = compute_flows(state, topology, phases, cap_inflow, service_scale)
    k = state.slot
    counts = dict(state.counts)
    entry_slots = dict(state.entry_slots)
    entry_mass = dict(state.entry_mass)

    # Departures: pull the oldest entry stamps out of each served queue and
    # pool them at the receiving node.
    pool_slots: Dict[str, List[int]] = {}
    pool_mass: Dict[str, float] = {}
    pool_count: Dict[str, float] = {}
    for (a, b), f in flows.flows.items():
        if f <= 0:
            continue
        counts[(a, b)] -= f
        if mode == INTEGER:
            old = entry_slots[(a, b)]
            moved, entry_slots[(a, b)] = old[:f], old[f:]
            moved_mass = float(sum(moved))
            pool_slots.setdefault(b, []).extend(moved)
        else:
            q_before = state.counts[(a, b)]
            moved_mass = entry_mass[(a, b)] if f >= q_before else entry_mass[(a, b)] * (f / q_before)
        entry_mass[(a, b)] -= moved_mass
        pool_mass[b] = pool_mass.get(b, 0.0) + moved_mass
        pool_count[b] = pool_count.get(b, 0.0) + f

    for node, a_n in arrivals.items():
        if a_n <= 0:
            continue
        if mode == INTEGER:
            pool_slots.setdefault(node, [])  # sorted below, then stamped last
        pool_mass[node] = pool_mass.get(node, 0.0) + float(k) * a_n
        pool_count[node] = pool_count.get(node, 0.0) + a_n

    exits = 0.0
    for node in sorted(pool_count):
        inflow = pool_count[node]
        endogenous = pool_slots.get(node)
        if endogenous is not None:
            endogenous.sort()
            endogenous.extend([k] * int(arrivals.get(node, 0)))
        shares, exited = route_inflow(node, inflow, routing, mode, rng)
        exits += exited
        taken = 0
        for dest in sorted(shares):
            n = shares[dest]
            if n <= 0:
                continue
            counts[(node, dest)] += n
            if mode == INTEGER:
                chunk = endogenous[taken : taken + int(n)]
                taken += int(n)
                merged = entry_slots[(node, dest)] + chunk
                merged.sort()
                entry_slots[(node, dest)] = merged
                entry_mass[(node, dest)] += float(sum(chunk))
            else:
                entry_mass[(node, dest)] += pool_mass[node] * (n / inflow)
    next_state = QueueState(
        counts=counts, entry_slots=entry_slots, entry_mass=entry_mass, slot=k + 1
    )
    if mode == INTEGER:
        exits = int(exits)
    return next_state, flows, exits


def validate_state(state: QueueState, topology: NetworkTopology) -> List[str]:
    """Structural check used by tests: counts, stamp lists and masses agree."""
    problems = []
    for m in topology.movements:
        q = state.counts[m]
        if q < 0:
            problems.append(f"negative count for {m}")
        stamps = state.entry_slots.get(m)
        if stamps is not None and state.entry_slots:
            if len(stamps) != q:
                problems.append(f"stamp count mismatch for {m}: {len(stamps)} != {q}")
            if any(s2 < s1 for s1, s2 in zip(stamps, stamps[1:])):
                problems.append(f"stamps out of order for {m}")
            if any(s > state.slot for s in stamps):
                problems.append(f"stamp from the future for {m}")
            if abs(state.entry_mass[m] - sum(stamps)) > 1e-6:
                problems.append(f"entry mass mismatch for {m}")
    return problems
