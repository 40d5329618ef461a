"""Welch's t-test reference values at 50 significant digits with mpmath.

p = I_{dof/(dof+t^2)}(dof/2, 1/2), the two-tailed Student-t tail.
Run from this directory: python3 make_welch_fixture.py
"""
import json
import random

import mpmath as mp

mp.mp.dps = 50


def welch(x, y):
    x = [mp.mpf(v) for v in x]
    y = [mp.mpf(v) for v in y]
    mx, my = sum(x) / len(x), sum(y) / len(y)
    vx = sum((v - mx) ** 2 for v in x) / (len(x) - 1)
    vy = sum((v - my) ** 2 for v in y) / (len(y) - 1)
    ax, ay = vx / len(x), vy / len(y)
    t = (mx - my) / mp.sqrt(ax + ay)
    dof = (ax + ay) ** 2 / (ax ** 2 / (len(x) - 1) + ay ** 2 / (len(y) - 1))
    p = mp.betainc(dof / 2, mp.mpf(1) / 2, 0, dof / (dof + t ** 2), regularized=True)
    return {"t": float(t), "dof": float(dof), "p": float(p), "mean_x": float(mx), "mean_y": float(my),
            "std_x": float(mp.sqrt(vx)), "std_y": float(mp.sqrt(vy))}


def main():
    rng = random.Random(8)
    cases = []
    # Likert-scale score samples like the human-vs-model comparison.
    for n1, n2, shift in [(40, 40, 0.45), (120, 95, 0.1), (25, 60, -0.3), (300, 300, 0.05), (8, 5, 1.2)]:
        x = [min(5, max(1, round(rng.gauss(2.6, 1.1)))) for _ in range(n1)]
        y = [min(5, max(1, round(rng.gauss(2.6 - shift, 0.9)))) for _ in range(n2)]
        cases.append({"x": x, "y": y})
    # Continuous samples, including a far tail.
    for n1, n2, d in [(12, 17, 0.8), (30, 9, 3.5), (6, 6, 0.0)]:
        x = [round(rng.gauss(0, 1), 6) for _ in range(n1)]
        y = [round(rng.gauss(d, 2), 6) for _ in range(n2)]
        cases.append({"x": x, "y": y})
    for c in cases:
        c.update(welch(c["x"], c["y"]))
    with open("welch_oracle.json", "w") as f:
        json.dump(cases, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
