"""Convex subsets of the hyperbolic plane and their common perpendiculars.

Four kinds of closed convex sets are supported: single points, complete
geodesic lines, horoballs, and metric disks. For every ordered pair there
is a closed-form distance and, when the sets are disjoint, a closed-form
common perpendicular segment (feet plus unit tangents at both ends).

Set data may be stored as exact rationals (Fractions) or floats. Group
elements act on sets through transform_set, which stays exact when both
the element and the set data are exact; orbit deduplication in the lattice
layer relies on that via geom_key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .errors import EndpointInSet, EqualEndpoints, SetsTooClose, UnsupportedSet
from .geometry import (
    INFINITY,
    BoundaryPoint,
    Moebius,
    MoebiusInt,
    Point,
    UnitTangent,
    angle_toward,
    bpoint,
    closest_point_on_line,
    direction_at,
    dist,
    flip,
    flow,
    point_toward,
    standardize_line,
)

# feet and tangents are float geometry; below this separation the feet
# formulas lose all digits, so the perpendicular is treated as missing
MIN_SEPARATION = 1e-9


@dataclass(frozen=True)
class PointSet:
    """Single interior point; coordinates may be exact rationals."""

    x: object
    y: object

    kind = "point"

    def __post_init__(self) -> None:
        if not self.y > 0:
            raise ValueError("point must lie in the upper half-plane")

    @property
    def point(self) -> Point:
        return Point(float(self.x), float(self.y))


@dataclass(frozen=True)
class GeodesicLine:
    """Complete geodesic with two distinct endpoints at infinity."""

    e1: BoundaryPoint
    e2: BoundaryPoint

    kind = "geodesic"

    def __post_init__(self) -> None:
        if self.e1 == self.e2:
            raise EqualEndpoints("geodesic needs two distinct endpoints")


@dataclass(frozen=True)
class Horoball:
    """Closed horoball.

    size is the height of the horizontal boundary when the center is
    infinity, and the Euclidean diameter of the tangent circle otherwise.
    """

    center: BoundaryPoint
    size: object

    kind = "horoball"

    def __post_init__(self) -> None:
        if not self.size > 0:
            raise ValueError("horoball size must be positive")


@dataclass(frozen=True)
class Disk:
    """Closed metric disk of hyperbolic radius r around an interior point."""

    x: object
    y: object
    radius: float

    kind = "disk"

    def __post_init__(self) -> None:
        if not self.y > 0:
            raise ValueError("disk center must lie in the upper half-plane")
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")

    @property
    def point(self) -> Point:
        return Point(float(self.x), float(self.y))


ConvexSet = PointSet | GeodesicLine | Horoball | Disk

_RANK = {"point": 0, "geodesic": 1, "horoball": 2, "disk": 3}


def point_set(x, y) -> PointSet:
    return PointSet(x, y)


def geodesic(a, b) -> GeodesicLine:
    return GeodesicLine(bpoint(a), bpoint(b))


def horoball(center, size) -> Horoball:
    return Horoball(bpoint(center), size)


def disk(x, y, radius: float) -> Disk:
    return Disk(x, y, radius)


@dataclass(frozen=True)
class CommonPerp:
    """Common perpendicular segment between two disjoint convex sets.

    u is the unit tangent at the foot on the first set pointing toward the
    second set; v is the unit tangent at the foot on the second set with
    the same orientation (pointing away from the first set).
    """

    u: UnitTangent
    v: UnitTangent
    length: float


def _horoball_matrix(hb: Horoball) -> Moebius:
    """Float unit-determinant map sending the horoball {y >= 1} onto hb."""
    s = float(hb.size)
    if hb.center.is_infinity:
        r = math.sqrt(s)
        return Moebius.from_entries(r, 0.0, 0.0, 1.0 / r)
    xi = hb.center.as_float()
    r = math.sqrt(s)
    return Moebius.from_entries(xi / r, -r, 1.0 / r, 0.0)


def _hb_top(hb: Horoball) -> Point:
    """Highest point of a finite-center horoball (its top in the chart)."""
    if hb.center.is_infinity:
        raise ValueError("horoball at infinity has no top point")
    return Point(hb.center.as_float(), float(hb.size))


def boundary_contains(D: ConvexSet, eta: BoundaryPoint) -> bool:
    """Whether eta belongs to the boundary at infinity of D."""
    if isinstance(D, GeodesicLine):
        return eta == D.e1 or eta == D.e2
    if isinstance(D, Horoball):
        return eta == D.center
    return False


def contains_point(D: ConvexSet, q: Point) -> bool:
    """Whether the interior point q lies in the (closed) set D."""
    if isinstance(D, PointSet):
        p = D.point
        return abs(p.x - q.x) == 0.0 and abs(p.y - q.y) == 0.0
    if isinstance(D, GeodesicLine):
        return dist_to_set(D, q) == 0.0
    if isinstance(D, Horoball):
        if D.center.is_infinity:
            return q.y >= float(D.size)
        xi, s = D.center.as_float(), float(D.size)
        dx = q.x - xi
        # inside iff |z - xi|^2 <= s * y
        return dx * dx + q.y * q.y <= s * q.y
    if isinstance(D, Disk):
        return dist(D.point, q) <= D.radius
    raise UnsupportedSet(type(D).__name__)


def dist_to_set(D: ConvexSet, q: Point) -> float:
    """Distance from the interior point q to the set D (0 if inside)."""
    if isinstance(D, PointSet):
        return dist(D.point, q)
    if isinstance(D, GeodesicLine):
        g = standardize_line(D.e1, D.e2)
        w = g(q)
        return math.asinh(abs(w.x) / w.y)
    if isinstance(D, Horoball):
        if D.center.is_infinity:
            return max(0.0, math.log(float(D.size) / q.y))
        xi, s = D.center.as_float(), float(D.size)
        dx = q.x - xi
        return max(0.0, math.log((dx * dx + q.y * q.y) / (s * q.y)))
    if isinstance(D, Disk):
        return max(0.0, dist(D.point, q) - D.radius)
    raise UnsupportedSet(type(D).__name__)


def closest_point(D: ConvexSet, q: Point) -> Point:
    """Point of D closest to q (q itself when q lies in D)."""
    if isinstance(D, PointSet):
        return D.point
    if isinstance(D, GeodesicLine):
        return closest_point_on_line(D.e1, D.e2, q)
    if isinstance(D, Horoball):
        if D.center.is_infinity:
            h = float(D.size)
            return q if q.y >= h else Point(q.x, h)
        m = _horoball_matrix(D)
        w = m.inverse()(q)
        if w.y >= 1.0:
            return q
        return m(Point(w.x, 1.0))
    if isinstance(D, Disk):
        c = D.point
        d = dist(c, q)
        if d <= D.radius:
            return q
        return point_toward(c, q, D.radius)
    raise UnsupportedSet(type(D).__name__)


def normal_from_boundary(D: ConvexSet, eta: BoundaryPoint) -> UnitTangent:
    """Unit tangent leaving the boundary of D along the geodesic toward eta.

    The base point is where that geodesic exits D; the vector points toward
    eta. Raises EndpointInSet when eta lies in the boundary at infinity of D.
    """
    if boundary_contains(D, eta):
        raise EndpointInSet(f"{eta} lies in the ideal boundary of the set")
    if isinstance(D, PointSet):
        return UnitTangent(D.point, direction_at(D.point, eta))
    if isinstance(D, GeodesicLine):
        g = standardize_line(D.e1, D.e2)
        w = g(eta)
        # rays perpendicular to the axis are the semicircles |z| = const
        foot = Point(0.0, abs(w.as_float()))
        return g.inverse()(UnitTangent(foot, direction_at(foot, w)))
    if isinstance(D, Horoball):
        m = _horoball_matrix(D)
        w = m.inverse()(eta)
        # rays perpendicular to {y = 1} are the verticals, pointing down
        foot = Point(w.as_float(), 1.0)
        return m(UnitTangent(foot, -0.5 * math.pi))
    if isinstance(D, Disk):
        v = UnitTangent(D.point, direction_at(D.point, eta))
        return flow(v, D.radius)
    raise UnsupportedSet(type(D).__name__)


def set_dist(A: ConvexSet, B: ConvexSet) -> float:
    """Distance between two convex sets (0 when they meet)."""
    if _RANK[A.kind] > _RANK[B.kind]:
        return set_dist(B, A)
    ka, kb = A.kind, B.kind

    if ka == "point":
        if kb == "point":
            return dist(A.point, B.point)
        return dist_to_set(B, A.point)

    if ka == "geodesic":
        g = standardize_line(A.e1, A.e2)
        if kb == "geodesic":
            a = g(B.e1)
            b = g(B.e2)
            if a.is_infinity or b.is_infinity:
                return 0.0
            av, bv = a.as_float(), b.as_float()
            if av * bv <= 0.0:
                return 0.0
            lo, hi = sorted((abs(av), abs(bv)))
            return math.acosh((hi + lo) / (hi - lo))
        if kb == "horoball":
            hb = transform_set(g, B)
            if hb.center.is_infinity:
                return 0.0
            xi = hb.center.as_float()
            if xi == 0.0:
                return 0.0
            return max(0.0, math.log(2.0 * abs(xi) / float(hb.size)))
        if kb == "disk":
            w = g(B.point)
            return max(0.0, math.asinh(abs(w.x) / w.y) - B.radius)

    if ka == "horoball":
        if kb == "horoball":
            if A.center == B.center:
                return 0.0
            if A.center.is_infinity:
                h, s = float(A.size), float(B.size)
                return max(0.0, math.log(h / s))
            if B.center.is_infinity:
                return set_dist(B, A)
            sep = B.center.as_float() - A.center.as_float()
            return max(0.0, math.log(sep * sep / (float(A.size) * float(B.size))))
        if kb == "disk":
            return max(0.0, dist_to_set(A, B.point) - B.radius)

    if ka == "disk" and kb == "disk":
        return max(0.0, dist(A.point, B.point) - A.radius - B.radius)

    raise UnsupportedSet(f"{A.kind}/{B.kind}")


def _feet(A: ConvexSet, B: ConvexSet) -> tuple[Point, Point]:
    """Feet of the common perpendicular, assuming positive separation."""
    if _RANK[A.kind] > _RANK[B.kind]:
        fb, fa = _feet(B, A)
        return fa, fb
    ka, kb = A.kind, B.kind

    if ka == "point":
        p = A.point
        if kb == "point":
            return p, B.point
        return p, closest_point(B, p)

    if ka == "geodesic":
        g = standardize_line(A.e1, A.e2)
        gi = g.inverse()
        if kb == "geodesic":
            av = g(B.e1).as_float()
            bv = g(B.e2).as_float()
            m = math.sqrt(av * bv)
            xb = 2.0 * av * bv / (av + bv)
            yb = m * abs(av - bv) / abs(av + bv)
            return gi(Point(0.0, m)), gi(Point(xb, yb))
        if kb == "horoball":
            hb = transform_set(g, B)
            xi = hb.center.as_float()
            dd = float(hb.size)
            q = 4.0 * xi * xi
            fa = Point(0.0, abs(xi))
            fb = Point(xi * (q - dd * dd) / (q + dd * dd), q * dd / (q + dd * dd))
            return gi(fa), gi(fb)
        if kb == "disk":
            w = g(B.point)
            fa = gi(Point(0.0, math.hypot(w.x, w.y)))
            return fa, point_toward(B.point, fa, B.radius)

    if ka == "horoball":
        if A.center.is_infinity:
            h = float(A.size)
            if kb == "horoball":
                top = _hb_top(B)
                return Point(top.x, h), top
            if kb == "disk":
                c = B.point
                return Point(c.x, h), Point(c.x, c.y * math.exp(B.radius))
        else:
            # send this horoball's center to infinity, solve there, pull back
            xi = A.center.as_float()
            g = Moebius.from_entries(0.0, -1.0, 1.0, -xi)
            fa, fb = _feet(transform_set(g, A), transform_set(g, B))
            gi = g.inverse()
            return gi(fa), gi(fb)

    if ka == "disk" and kb == "disk":
        c1, c2 = A.point, B.point
        return point_toward(c1, c2, A.radius), point_toward(c2, c1, B.radius)

    raise UnsupportedSet(f"{A.kind}/{B.kind}")


def common_perp(A: ConvexSet, B: ConvexSet) -> CommonPerp:
    """Common perpendicular segment from A to B.

    Raises SetsTooClose when the sets meet or are closer than the float
    feet formulas can resolve.
    """
    d = set_dist(A, B)
    if d < MIN_SEPARATION:
        raise SetsTooClose(f"separation {d} below {MIN_SEPARATION}")
    fa, fb = _feet(A, B)
    u = UnitTangent(fa, angle_toward(fa, fb))
    v = flip(UnitTangent(fb, angle_toward(fb, fa)))
    return CommonPerp(u, v, d)


def _is_rational(v) -> bool:
    return isinstance(v, Rational)


def _exact_boundary(b: BoundaryPoint) -> bool:
    return b.is_infinity or _is_rational(b.value)


def _transform_boundary(g, b: BoundaryPoint) -> BoundaryPoint:
    return g(b)


def transform_set(g, D: ConvexSet) -> ConvexSet:
    """Image of a convex set under a Moebius or MoebiusInt map.

    Exact when g is a MoebiusInt and the set data is rational; otherwise
    float. The horoball rule: a horoball at finite xi with diameter s maps
    to one at g(xi) with diameter s/(c xi + d)^2, or to a horoball at
    infinity of height (a xi + b)^2 / s when c xi + d = 0; a horoball at
    infinity of height h maps to one at a/c of diameter 1/(c^2 h), or
    stays at infinity with height a^2 h when c = 0.
    """
    exact = isinstance(g, MoebiusInt)

    if isinstance(D, PointSet):
        if exact and _is_rational(D.x) and _is_rational(D.y):
            nx, ny = g((Fraction(D.x), Fraction(D.y)))
            return PointSet(nx, ny)
        w = (g.to_float() if exact else g)(D.point)
        return PointSet(w.x, w.y)

    if isinstance(D, GeodesicLine):
        return GeodesicLine(g(D.e1), g(D.e2))

    if isinstance(D, Disk):
        if exact and _is_rational(D.x) and _is_rational(D.y):
            nx, ny = g((Fraction(D.x), Fraction(D.y)))
            return Disk(nx, ny, D.radius)
        w = (g.to_float() if exact else g)(D.point)
        return Disk(w.x, w.y, D.radius)

    if isinstance(D, Horoball):
        if exact and _exact_boundary(D.center) and _is_rational(D.size):
            a, b, c, d = g.a, g.b, g.c, g.d
            s = Fraction(D.size)
            if D.center.is_infinity:
                if c == 0:
                    return Horoball(INFINITY, a * a * s)
                return Horoball(BoundaryPoint(Fraction(a, c)), Fraction(1, c * c) / s)
            xi = Fraction(D.center.value)
            den = c * xi + d
            if den == 0:
                num = a * xi + b
                return Horoball(INFINITY, num * num / s)
            return Horoball(BoundaryPoint((a * xi + b) / den), s / (den * den))
        gm = g.to_float() if exact else g
        a, b, c, d = gm.a, gm.b, gm.c, gm.d
        s = float(D.size)
        if D.center.is_infinity:
            if c == 0.0:
                return Horoball(INFINITY, a * a * s)
            return Horoball(BoundaryPoint(a / c), 1.0 / (c * c * s))
        xi = D.center.as_float()
        den = c * xi + d
        if den == 0.0:
            num = a * xi + b
            return Horoball(INFINITY, num * num / s)
        return Horoball(BoundaryPoint((a * xi + b) / den), s / (den * den))

    raise UnsupportedSet(type(D).__name__)


def _boundary_key(b: BoundaryPoint):
    if b.is_infinity:
        return (1, 0)
    return (0, b.value)


def geom_key(D: ConvexSet):
    """Hashable identity key for orbit deduplication.

    Exact (collision-free) when the set data is rational; for float data
    the key is the raw float tuple, adequate for small hand-built configs.
    """
    if isinstance(D, PointSet):
        return ("pt", D.x, D.y)
    if isinstance(D, GeodesicLine):
        k1, k2 = sorted((_boundary_key(D.e1), _boundary_key(D.e2)))
        return ("geo", k1, k2)
    if isinstance(D, Horoball):
        return ("hb", _boundary_key(D.center), D.size)
    if isinstance(D, Disk):
        return ("disk", D.x, D.y, D.radius)
    raise UnsupportedSet(type(D).__name__)
