"""Shared builders for controller fuzz tests and acceptance checks."""
import numpy as np

from bpsim.dynamics import QueueState
from bpsim.topology import (
    JunctionSpec,
    LinkSpec,
    NetworkTopology,
    NodeSpec,
    PhaseSpec,
    validate_topology,
)

C_INF = 200


def random_junction_instance(rng, all_capacities_equal=None, cap_occupancy=None):
    """One controllable junction with randomly loaded inputs and outputs.

    Output nodes store their vehicles in movements toward a frozen storage
    junction (all service rates zero there, plus a permanently empty served
    feeder w so the storage junction stays valid and unflaggable).  Returns
    (topology, state).  all_capacities_equal forces every capacity to that
    value; cap_occupancy limits each node's load to its capacity when True.
    """
    n_in = int(rng.integers(2, 5))
    n_out = int(rng.integers(2, 5))
    inputs = [f"in{i}" for i in range(n_in)]
    outputs = [f"out{i}" for i in range(n_out)]

    def cap():
        if all_capacities_equal is not None:
            return all_capacities_equal
        return int(rng.integers(5, 51))

    caps = {n: cap() for n in inputs + outputs}
    movements = [
        (a, b) for a in inputs for b in outputs if rng.random() < 0.6
    ]
    for a in inputs:
        if not any(m[0] == a for m in movements):
            movements.append((a, outputs[int(rng.integers(0, n_out))]))
    used_outputs = sorted({b for _a, b in movements})

    # Narrow phases (1-3 movements each) are what make work-conservation
    # interesting: a phase whose only movements are blocked can win the
    # argmax while some other phase could move.
    n_phases = int(rng.integers(2, 5))
    phases = []
    for p in range(n_phases):
        n_m = min(len(movements), int(rng.integers(1, 4)))
        chosen = rng.choice(len(movements), size=n_m, replace=False)
        service = {movements[i]: int(rng.integers(1, 6)) for i in chosen}
        phases.append(PhaseSpec(f"p{p}", service))

    nodes = [NodeSpec(n, caps[n], is_boundary=n in inputs) for n in inputs]
    nodes += [NodeSpec(n, caps[n]) for n in used_outputs]
    nodes += [NodeSpec("sink", C_INF), NodeSpec("w", 10, is_boundary=True)]
    links = [LinkSpec(a, b, "J") for a, b in movements]
    links += [LinkSpec(b, "sink", "S") for b in used_outputs]
    links += [LinkSpec("w", "sink", "S")]
    storage_service = {(b, "sink"): 0 for b in used_outputs}
    storage_service[("w", "sink")] = 1
    junctions = [
        JunctionSpec("J", tuple(sorted(inputs)), tuple(used_outputs), tuple(phases)),
        JunctionSpec(
            "S",
            tuple(used_outputs + ["w"]),
            ("sink",),
            (PhaseSpec("hold", storage_service),),
        ),
    ]
    t = NetworkTopology(tuple(nodes), tuple(links), tuple(junctions))
    assert validate_topology(t, c_infinity=C_INF) == []

    counts = {}
    for a in inputs:
        mine = [m for m in movements if m[0] == a]
        budget = caps[a] if cap_occupancy else int(caps[a] * 1.2)
        # Loading styles: empty, light, heavy, or exactly full.
        style = rng.random()
        if style < 0.2:
            load = 0
        elif style < 0.6:
            load = int(rng.integers(0, budget + 1))
        elif style < 0.8:
            load = budget
        else:
            load = int(rng.integers(budget // 2, budget + 1))
        for m in mine:
            counts[m] = 0
        remaining = load
        for m in mine[:-1]:
            take = int(rng.integers(0, remaining + 1))
            counts[m] = take
            remaining -= take
        counts[mine[-1]] = remaining
    for b in used_outputs:
        budget = caps[b] if cap_occupancy else int(caps[b] * 1.2)
        style = rng.random()
        if style < 0.3:
            load = 0
        elif style < 0.6:
            load = int(rng.integers(0, budget + 1))
        else:
            load = budget  # full outputs are where blocking bites
        counts[(b, "sink")] = load
    state = QueueState.initial(t, counts)
    return t, state


def decisions_to_phase_ids(decisions):
    return {j: d.phase_id for j, d in decisions.items()}
