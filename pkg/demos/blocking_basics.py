"""Blocking in one picture: a feeder pouring into a short road.

Node b holds at most 5 vehicles and its onward movement is never served,
so b fills up and the gate closes: once b is full at the start of a slot,
the a->b flow is suppressed entirely for that slot, no matter how many
vehicles wait on a.  The slot-start rule also shows the one-slot lag:
vehicles that leave b during a slot free room for the NEXT slot only.

Run: python3 demos/blocking_basics.py
"""

from bpsim import (
    ArrivalProcess,
    ControllerConfig,
    JunctionSpec,
    LinkSpec,
    NetworkTopology,
    NodeSpec,
    PhaseSpec,
    QueueState,
    RoutingSpec,
    Scenario,
    blocking_indicator,
    run,
)


def build() -> Scenario:
    topology = NetworkTopology(
        nodes=(
            NodeSpec("a", 100, is_boundary=True),
            NodeSpec("b", 5),
            NodeSpec("z", 100),
        ),
        links=(LinkSpec("a", "b", "J"), LinkSpec("b", "z", "K")),
        junctions=(
            JunctionSpec("J", ("a",), ("b",), (PhaseSpec("go", {("a", "b"): 3}),)),
            # downstream junction serves b -> z at rate 1, every second slot
            JunctionSpec(
                "K",
                ("b",),
                ("z",),
                (PhaseSpec("drain", {("b", "z"): 1}), PhaseSpec("idle", {("b", "z"): 0})),
            ),
        ),
    )
    return Scenario(
        name="blocking_basics",
        topology=topology,
        arrivals=ArrivalProcess(rates={}),
        routing=RoutingSpec({("a", "b"): 1.0, ("b", "z"): 1.0}),
        controllers={
            "J": ControllerConfig.fixed_cycle((("go", 1),)),
            "K": ControllerConfig.fixed_cycle((("drain", 1), ("idle", 1))),
        },
        horizon=12,
        initial_counts={("a", "b"): 30},
    )


def main() -> None:
    scenario = build()
    topo = scenario.topology
    state = QueueState.initial(topo, scenario.initial_counts)
    print(f"capacity of b: {topo.capacity('b')}, service rate a->b: 3, b->z drains 1 every 2nd slot")
    print(f"{'slot':>4} {'Q(a->b)':>8} {'Q(b)':>5} {'gate':>5} {'moved a->b':>10}")
    trace = run(scenario)
    # replay the per-slot node states to show the gate; run() already
    # validated the scenario so the manual loop below mirrors it
    import numpy as np

    from bpsim import decide_all, sample_arrivals, step

    rng = np.random.default_rng(scenario.seed)
    for k in range(scenario.horizon):
        totals = state.node_totals(topo)
        gate = blocking_indicator(totals["b"], topo.capacity("b"))
        before = state.counts[("a", "b")]
        decisions = decide_all(state, topo, scenario.controllers, k)
        arrived = sample_arrivals(scenario.arrivals, k, rng)
        state, flows, _ = step(
            state,
            topo,
            {j: d.phase_id for j, d in decisions.items()},
            arrived,
            scenario.routing,
            scenario.mode,
            rng,
        )
        print(
            f"{k:>4} {before:>8g} {totals['b']:>5g} "
            f"{'open' if gate else 'SHUT':>5} {flows.flows[('a', 'b')]:>10g}"
        )
    print(
        "\nThe gate shuts whenever b starts a slot full; vehicles drained from b"
        "\nthat same slot only reopen it one slot later.  Note slot 2: the gate"
        "\nis judged at slot START, so a slot that begins with room may push b"
        "\npast its capacity (3 in while only part fits).  Capacity bounds the"
        "\ngate, not the landing."
        f"\nFinal network total after {scenario.horizon} slots: "
        f"{trace.final_summary['total_queue']:g} vehicles."
    )


if __name__ == "__main__":
    main()
