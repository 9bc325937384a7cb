"""
A tour of the upper half-plane and the modular lattice
======================================================

Distances, horocycle cocycles, geodesic flow, and exact reduction into
the standard fundamental domain.
"""

import math

from perplab import (
    GAMMA2,
    PSL2Z,
    BoundaryPoint,
    MoebiusInt,
    Point,
    UnitTangent,
    busemann,
    dist,
    flow,
    ps_density,
    reduce_fd,
    visual_dist,
)

# Two points on the same vertical line sit at hyperbolic distance
# log of the height ratio.
p = Point(0.0, 1.0)
q = Point(0.0, 7.5)
print("dist((0,1),(0,7.5)) =", dist(p, q), " log 7.5 =", math.log(7.5))

# The Busemann cocycle at a boundary point measures signed horocyclic
# "altitude" change. Toward the cusp at infinity it is again a log of
# heights, and the Poisson kernel ratio exponentiates it.
xi = BoundaryPoint(0.25)
r = Point(1.3, 0.4)
print("busemann cocycle:", busemann(xi, p, r))
print("kernel ratio:    ", math.log(ps_density(r, xi) / ps_density(p, xi)))

# Flowing a unit tangent for time t lands at distance exactly t.
v = UnitTangent(Point(-0.3, 2.0), 0.9)
w = flow(v, 1.75)
print("flow preserves arc length:", dist(v.base, w.base))

# The visual distance between two boundary points, seen from x, is
# controlled by the distance from x to the geodesic joining them.
print("visual_dist from i:", visual_dist(p, BoundaryPoint(-1.0), BoundaryPoint(1.0)))

# Integer Moebius maps compose and invert exactly. The standard
# generators of the modular group:
T = MoebiusInt(1, 1, 0, 1)
S = MoebiusInt(0, -1, 1, 0)
word = T @ S @ T @ T @ S
print("word:", (word.a, word.b, word.c, word.d))
print("word @ inverse is identity:", word @ word.inverse() == MoebiusInt.identity())

# Reduction finds the domain representative of any point, together with
# the group element that carries it back.
z = Point(17.31, 0.002)
zr, g = reduce_fd(PSL2Z, z)
print("reduced point:", (round(zr.x, 6), round(zr.y, 6)))
print("carried back: ", dist(g.to_float()(zr), z))

# The level-two congruence group needs six copies of the modular
# domain, so its reduced points spread over a larger region.
zr2, g2 = reduce_fd(GAMMA2, z)
print("congruence-group representative height:", round(zr2.y, 6))
