"""A deadlock the controller never escapes, and the fix.

Three junctions form a ring of short roads, each full at 50 vehicles,
most of the load pointing forward along the ring in movements no phase
serves.  Long external queues keep the inbound phases' linear scores
high, so linear back-pressure selects them forever; every destination is
full, nothing moves, and the network is frozen although each junction
also has a crossing phase that could drain a ring road immediately.

Saturated roads exert maximal capacity-aware pressure, which zeroes the
inbound weights; the crossing phases win and the ring empties.

Run: python3 demos/deadlock_ring.py
"""

from bpsim import fixture_deadlock_ring, run


def main() -> None:
    base = fixture_deadlock_ring()
    traces = {
        "linear bp": run(base.with_controller("bp")),
        "capacity-aware": run(base.with_controller("bpc")),
    }
    start = sum(base.initial_counts.values())
    print(f"initial network total: {start} vehicles; ring roads full at 50\n")
    print(f"{'slot':>4}  {'linear bp':>20}  {'capacity-aware':>20}")
    print(f"{'':>4}  {'total':>9} {'served':>10}  {'total':>9} {'served':>10}")
    for k in (0, 1, 2, 5, 10, 20, 40, 59):
        row = [f"{k:>4}"]
        for label in ("linear bp", "capacity-aware"):
            r = traces[label].rows[k]
            row.append(f"{r.total_queue:>9g} {r.served_flow:>10g}")
        print("  ".join(row))
    frozen = all(r.served_flow == 0 for r in traces["linear bp"].rows[:50])
    print(
        f"\nlinear bp served nothing for 50 straight slots: {frozen}"
        f"\ncapacity-aware violations: "
        f"{int(traces['capacity-aware'].final_summary['wc_violations'])}, "
        f"final total {traces['capacity-aware'].final_summary['total_queue']:g}"
        f" (external queues remain; the ring itself is clear)"
    )


if __name__ == "__main__":
    main()
