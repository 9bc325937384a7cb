"""
Counting common perpendiculars
==============================

The census enumerates every common perpendicular between two convex
sets up to a length cutoff, one row per orbit representative. Counts
grow like a constant times e^t, and for cusp pairs the constant is
elementary.
"""

import math

from perplab import (
    INFINITY,
    PSL2Z,
    ExperimentConfig,
    census_table,
    common_perp,
    disk,
    horoball,
    point_set,
    run_count,
)

# A single common perpendicular between two disjoint convex sets: its
# length realizes the distance between them and its feet are the unit
# normal tangents at both ends.
perp = common_perp(horoball(INFINITY, 4.0), disk(0.0, 1.0, 0.5))
print("perpendicular length:", round(perp.length, 6),
      " feet heights:", round(perp.u.base.y, 6), round(perp.v.base.y, 6))

# Loops based at a generic point: one perpendicular per nontrivial
# group element.
loops = census_table(PSL2Z, point_set(0, 2), point_set(0, 2), 6.0)
print("loops up to length 6:", len(loops))
print("shortest loop length:", round(float(loops.length.min()), 6),
      " 2 asinh(1/4) =", round(2 * math.asinh(0.25), 6))

# Cusp-to-cusp perpendiculars of the standard horoball have length
# exactly two log c over integers c, one orbit per fraction p/c,
# so the count up to 2 log C is a totient sum.
H = horoball(INFINITY, 1.0)
cusp = census_table(PSL2Z, H, H, 2 * math.log(50))
print("cusp pairs up to 2 log 50:", len(cusp))


def phi_sum(n):
    phi = list(range(n + 1))
    for i in range(2, n + 1):
        if phi[i] == i:
            for j in range(i, n + 1, i):
                phi[j] -= phi[j] // i
    return sum(phi[2 : n + 1])


print("totient sum to 50:      ", phi_sum(50))

# The counting report normalizes N(t) by the predicted constant times
# e^t. The normalized column should drift toward one.
cfg = ExperimentConfig(
    set_minus={"kind": "horoball", "center": "inf", "height": 1.0},
    set_plus={"kind": "horoball", "center": "inf", "height": 1.0},
    t_grid=(2 * math.log(50), 2 * math.log(200), 2 * math.log(1000)),
)
report = run_count(cfg)
print("predicted constant:", report.meta["constant"], " three over pi^2:",
      3 / math.pi**2)
for row in report.rows:
    print(f"  t={row.t:7.3f}  N={row.n_weighted:9.0f}  "
          f"normalized={row.n_normalized:.5f}")
