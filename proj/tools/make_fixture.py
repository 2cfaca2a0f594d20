#!/usr/bin/env python3
"""Writes the synthetic HMD-format fixture used by the tests.

The rates follow a Lee-Carter shape with a linear period index plus noise,
for a made-up population, so no real HMD data is bundled. Two cells are
damaged on purpose: one missing total ('.') and one zero total.
"""
import math
import random
import sys
from pathlib import Path

FIRST, LAST = 1950, 2009
MAX_AGE = 110


def rates(rng):
    years = list(range(FIRST, LAST + 1))
    n = len(years)
    out = {}
    for sex, shift in (("female", -0.25), ("male", 0.2)):
        for t, year in enumerate(years):
            kappa = -1.6 * (t - (n - 1) / 2)
            for age in range(MAX_AGE + 1):
                a = -9.2 + 0.088 * age + 3.2 * math.exp(-age / 1.5) + shift
                b = (0.012 + 0.01 * math.exp(-age / 30.0)) * (1.0 - age / 160.0)
                log_m = a + b * kappa + rng.gauss(0.0, 0.03)
                out[sex, year, age] = min(math.exp(log_m), 1.8)
    return out


def exposures(rng):
    out = {}
    for sex, scale in (("female", 51000.0), ("male", 49000.0)):
        for year in range(FIRST, LAST + 1):
            growth = 1.0 + 0.004 * (year - FIRST)
            for age in range(MAX_AGE + 1):
                surv = math.exp(-((age / 82.0) ** 6))
                out[sex, year, age] = max(scale * growth * surv * (1.0 + rng.gauss(0.0, 0.01)), 0.0)
    return out


def write(path, title, table, total_fn, fmt, damage=None):
    damage = damage or {}
    lines = [title, "", "  Year          Age             Female            Male           Total"]
    for year in range(FIRST, LAST + 1):
        for age in range(MAX_AGE + 1):
            f, m = table["female", year, age], table["male", year, age]
            tot = total_fn(year, age)
            label = f"{age}+" if age == MAX_AGE else str(age)
            cells = [fmt(f), fmt(m), damage.get((year, age), fmt(tot))]
            lines.append(f"  {year}  {label:>11}  {cells[0]:>17}  {cells[1]:>14}  {cells[2]:>14}")
    Path(path).write_text("\n".join(lines) + "\n")


def main(out_dir):
    rng = random.Random(20250101)
    mx = rates(rng)
    ex = exposures(rng)

    def total_mx(year, age):
        ef, em = ex["female", year, age], ex["male", year, age]
        return (mx["female", year, age] * ef + mx["male", year, age] * em) / (ef + em)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write(out / "Synthland_Mx_1x1.txt",
          "Synthland, Death rates (period 1x1), \tLast modified: 01 Jan 2025;  Methods Protocol: v6 (2017)",
          mx, total_mx, lambda v: f"{v:.6f}", damage={(1961, 97): ".", (1983, 99): "0.000000"})
    write(out / "Synthland_Exposures_1x1.txt",
          "Synthland, Exposure to risk (period 1x1), \tLast modified: 01 Jan 2025;  Methods Protocol: v6 (2017)",
          ex, lambda y, a: ex["female", y, a] + ex["male", y, a], lambda v: f"{v:.2f}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else str(Path(__file__).resolve().parent.parent / "tests" / "data"))
