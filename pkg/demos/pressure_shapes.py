"""The three pressure shapes, side by side.

Linear pressure is the raw count Q.  Relative pressure is occupancy Q/C,
which treats a short full road and a long full road alike but inflates
small roads' influence.  The normalized family keeps the same 1/C_inf
slope near zero for EVERY capacity (so lightly loaded roads compete
fairly) yet saturates exactly at 1 when the road fills, which is what
lets a controller see a full road as unpushable.

Run: python3 demos/pressure_shapes.py
For figures: bpsim pressure-table --out table.csv
             bpreport --kind pressure_curves --in table.csv --out curves.png
"""

from bpsim import PressureFunction


def main() -> None:
    c_inf = 500.0
    normalized = {c: PressureFunction.normalized(m=4, c_infinity=c_inf) for c in (50, 100)}
    relative = PressureFunction.relative()

    print(f"normalized pressure, C_inf={c_inf:g}, m=4")
    print(f"{'q':>6} {'P(q, C=50)':>12} {'P(q, C=100)':>12} {'q/C_inf':>10}")
    for q in (0, 5, 10, 25, 40, 50, 75, 100):
        row = [f"{q:>6}"]
        for c in (50, 100):
            row.append(f"{normalized[c].evaluate(min(q, c), c):>12.4f}")
        row.append(f"{q / c_inf:>10.4f}")
        print(" ".join(row))

    print("\nnear zero every capacity shares the slope 1/C_inf:")
    for c in (50, 100, 200, 500):
        f = PressureFunction.normalized(m=4, c_infinity=c_inf)
        slope = f.evaluate(0.001, c) / 0.001
        print(f"  C={c:<4} slope {slope:.6f}  (1/C_inf = {1 / c_inf:.6f})")

    print("\nrelative pressure has no such fairness; its slope is 1/C:")
    for c in (50, 100):
        print(f"  C={c:<4} slope {relative.evaluate(1, c):.4f}")

    print("\nsaturation is exact: P(C, C) =", normalized[50].evaluate(50, 50))


if __name__ == "__main__":
    main()
