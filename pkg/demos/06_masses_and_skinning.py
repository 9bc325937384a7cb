"""
Invariant masses and skinning totals
====================================

The counting constant is built from three masses: the total invariant
measure of the unit tangent bundle of the quotient, and one skinning
total per convex set. All three have independent cross-checks here.
"""

import math

from perplab import (
    GAMMA2,
    INFINITY,
    PSL2Z,
    bm_total_mass,
    disk,
    horoball,
    liouville_total,
    measure_context,
    point_set,
    skinning_measure,
)
from perplab.measures import bm_total_mass_line_chart

# The total mass for the modular group, with the built-in dual-cutoff
# diagnostic, against the closed form 4 pi^2 / 3.
value, diag = bm_total_mass(PSL2Z)
print("modular total mass:  ", value)
print("closed form:         ", 4 * math.pi**2 / 3)
print("dual-cutoff spread:  ", diag["rel_spread"])

# An independent route in line coordinates agrees to quadrature
# accuracy.
print("line-chart route:    ", bm_total_mass_line_chart(PSL2Z))

# The level-two group covers the modular quotient six times.
value2, _ = bm_total_mass(GAMMA2)
print("congruence mass ratio:", value2 / value)

# The phase volume is 2 pi times the hyperbolic area.
print("phase volume:        ", liouville_total(PSL2Z), "=",
      2 * math.pi * math.pi / 3)

# Skinning totals. A point spreads 2 pi over its directions, divided by
# the order of its stabilizer; the standard cusp horoball carries its
# boundary mass per period; disks obey an exponential law in the
# radius.
print("point at (0,2):      ", skinning_measure(PSL2Z, point_set(0, 2)).induced_total)
print("fixed point at i:    ", skinning_measure(PSL2Z, point_set(0, 1)).induced_total)
print("standard horoball:   ",
      skinning_measure(PSL2Z, horoball(INFINITY, 1.0)).induced_total)
sk = skinning_measure(PSL2Z, disk(0.0, 2.0, 1.0))
print("unit-radius disk:    ", sk.total, "=", 2 * math.pi * math.e)

# The measure context bundles these numbers and caches them as JSON.
ctx = measure_context(PSL2Z)
print("context:", ctx.group_name, " delta =", ctx.delta,
      " total =", round(ctx.bm_total, 12))
