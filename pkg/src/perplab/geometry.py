"""Upper half-plane model of the hyperbolic plane.

Points are z = x + iy with y > 0, the boundary circle is R union {infinity},
and orientation-preserving isometries act as real Moebius transformations
(a z + b) / (c z + d) with a d - b c = 1.

All closed forms below are written in numerically stable shapes: distances go
through arcsinh of a half-chord ratio rather than arccosh, and every formula
involving the point at infinity gets its own branch instead of a limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .errors import EqualEndpoints

TWO_PI = 2.0 * math.pi

# Tolerance tiers. Geometric comparisons (feet, distances, angles) get 1e-9;
# algebraic identities that only lose a few ulps (cocycles, determinants)
# get 1e-12. Tests rely on these same values.
TOL_GEOMETRIC = 1e-9
TOL_ALGEBRAIC = 1e-12

# Direction angles with |cos theta| below this are snapped to vertical when
# converting a unit tangent to geodesic endpoints; the endpoint formulas
# divide by cos theta and a snapped vertical is better than a 1e14 radius.
VERTICAL_SNAP = 1e-12


def angle_norm(a: float) -> float:
    """Normalize an angle to [0, 2*pi)."""
    a = a % TWO_PI
    # a == TWO_PI can survive the modulo when a was a tiny negative number
    return 0.0 if a >= TWO_PI else a


def angle_diff(a: float, b: float) -> float:
    """Signed difference a - b wrapped to (-pi, pi]."""
    d = (a - b) % TWO_PI
    return d - TWO_PI if d > math.pi else d


@dataclass(frozen=True)
class Point:
    """Interior point x + iy of the upper half-plane, y > 0."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not self.y > 0:
            raise ValueError(f"point must have positive imaginary part, got y={self.y}")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @classmethod
    def from_complex(cls, z: complex) -> "Point":
        return cls(z.real, z.imag)


@dataclass(frozen=True)
class BoundaryPoint:
    """Point of the circle at infinity: a real value, or None for infinity.

    The value may be an int, float or Fraction; exact rational values are
    used by the lattice layer so that orbit dedup keys are exact.
    """

    value: object = None

    @property
    def is_infinity(self) -> bool:
        return self.value is None

    def as_float(self) -> float:
        if self.value is None:
            raise ValueError("the point at infinity has no float value")
        return float(self.value)


INFINITY = BoundaryPoint(None)


def bpoint(v) -> BoundaryPoint:
    """Coerce a real number, None, or BoundaryPoint to a BoundaryPoint."""
    if isinstance(v, BoundaryPoint):
        return v
    if v is None:
        return INFINITY
    if isinstance(v, float) and math.isinf(v):
        return INFINITY
    return BoundaryPoint(v)


@dataclass(frozen=True)
class UnitTangent:
    """Unit tangent vector: base point plus chart direction angle.

    The angle is measured in the Euclidean chart (0 points right, pi/2
    points up) and is stored normalized to [0, 2*pi). Because the chart
    is conformal this is also the hyperbolic direction.
    """

    base: Point
    angle: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "angle", angle_norm(self.angle))


@dataclass(frozen=True)
class HopfCoords:
    """Hopf parametrization of a unit tangent vector.

    v_minus, v_plus are the backward and forward endpoints of the geodesic,
    and s is the signed time from the point of the geodesic closest to the
    basepoint to the foot of the vector.
    """

    v_minus: BoundaryPoint
    v_plus: BoundaryPoint
    s: float
    basepoint: Point


def _canonical_sign4(a, b, c, d):
    # flip the overall sign so the first nonzero entry is positive; this
    # picks one matrix out of the pair {M, -M} representing an isometry
    for v in (a, b, c, d):
        if v != 0:
            if v < 0:
                return (-a, -b, -c, -d)
            return (a, b, c, d)
    raise ValueError("zero matrix")


@dataclass(frozen=True)
class Moebius:
    """Float Moebius transformation z -> (a z + b)/(c z + d), det = 1."""

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def from_entries(cls, a: float, b: float, c: float, d: float) -> "Moebius":
        det = a * d - b * c
        if not det > 0:
            raise ValueError(f"need positive determinant, got {det}")
        s = 1.0 / math.sqrt(det)
        return cls(*_canonical_sign4(a * s, b * s, c * s, d * s))

    @classmethod
    def identity(cls) -> "Moebius":
        return cls(1.0, 0.0, 0.0, 1.0)

    def inverse(self) -> "Moebius":
        return Moebius(*_canonical_sign4(self.d, -self.b, -self.c, self.a))

    def __matmul__(self, other: "Moebius") -> "Moebius":
        return Moebius.from_entries(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def _apply_point(self, p: Point) -> Point:
        x, y = p.x, p.y
        cd = self.c * x + self.d
        den = cd * cd + (self.c * y) ** 2
        nx = (self.a * x + self.b) * cd + self.a * self.c * y * y
        return Point(nx / den, y / den)

    def _apply_boundary(self, b: BoundaryPoint) -> BoundaryPoint:
        if b.is_infinity:
            if self.c == 0.0:
                return INFINITY
            return BoundaryPoint(self.a / self.c)
        v = b.as_float()
        den = self.c * v + self.d
        if den == 0.0:
            return INFINITY
        return BoundaryPoint((self.a * v + self.b) / den)

    def _apply_tangent(self, v: UnitTangent) -> UnitTangent:
        p = v.base
        # derivative of the map at z has argument -2 arg(c z + d)
        darg = -2.0 * math.atan2(self.c * p.y, self.c * p.x + self.d)
        return UnitTangent(self._apply_point(p), v.angle + darg)

    def __call__(self, obj):
        if isinstance(obj, Point):
            return self._apply_point(obj)
        if isinstance(obj, BoundaryPoint):
            return self._apply_boundary(obj)
        if isinstance(obj, UnitTangent):
            return self._apply_tangent(obj)
        raise TypeError(f"cannot apply Moebius to {type(obj).__name__}")


@dataclass(frozen=True)
class MoebiusInt:
    """Integer Moebius transformation with determinant exactly 1.

    The sign is canonicalized (first nonzero entry positive) so equality
    and hashing identify M with -M, matching the quotient by the center.
    Python integers never overflow, so exactness is unconditional; the
    lattice layer enforces its own 64-bit bounds where it matters.
    """

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self) -> None:
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError("determinant must be exactly 1")
        a, b, c, d = _canonical_sign4(self.a, self.b, self.c, self.d)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @classmethod
    def identity(cls) -> "MoebiusInt":
        return cls(1, 0, 0, 1)

    def key(self) -> tuple:
        return (self.a, self.b, self.c, self.d)

    def inverse(self) -> "MoebiusInt":
        return MoebiusInt(self.d, -self.b, -self.c, self.a)

    def __matmul__(self, other: "MoebiusInt") -> "MoebiusInt":
        return MoebiusInt(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def to_float(self) -> Moebius:
        return Moebius(float(self.a), float(self.b), float(self.c), float(self.d))

    def _apply_rational(self, v):
        den = self.c * v + self.d
        if den == 0:
            return None
        return Fraction(self.a * v + self.b, 1) / den

    def __call__(self, obj):
        if isinstance(obj, BoundaryPoint):
            if obj.is_infinity:
                if self.c == 0:
                    return INFINITY
                return BoundaryPoint(Fraction(self.a, self.c))
            v = obj.value
            if isinstance(v, Rational):
                w = self._apply_rational(Fraction(v))
                return INFINITY if w is None else BoundaryPoint(w)
            return self.to_float()(obj)
        if isinstance(obj, Rational):
            w = self._apply_rational(Fraction(obj))
            if w is None:
                raise ZeroDivisionError("rational argument maps to infinity")
            return w
        if isinstance(obj, (Point, UnitTangent)):
            return self.to_float()(obj)
        if isinstance(obj, tuple) and len(obj) == 2:
            # exact interior point (x, y) as a Fraction pair
            x, y = Fraction(obj[0]), Fraction(obj[1])
            cd = self.c * x + self.d
            den = cd * cd + self.c * self.c * y * y
            nx = (self.a * x + self.b) * cd + self.a * self.c * y * y
            return (nx / den, y / den)
        raise TypeError(f"cannot apply MoebiusInt to {type(obj).__name__}")


def dist(p: Point, q: Point) -> float:
    """Hyperbolic distance, stable for both tiny and huge separations."""
    dx = p.x - q.x
    dy = p.y - q.y
    return 2.0 * math.asinh(math.sqrt((dx * dx + dy * dy) / (4.0 * p.y * q.y)))


def poisson_kernel(z: Point, xi: BoundaryPoint) -> float:
    """P(z, xi) = y / ((x - xi)^2 + y^2), and P(z, infinity) = y.

    Normalized so P(i, xi) integrates the chart correctly for the
    conformal densities below; only ratios and logs of P ever matter.
    """
    if xi.is_infinity:
        return z.y
    dx = z.x - xi.as_float()
    return z.y / (dx * dx + z.y * z.y)


def busemann(xi: BoundaryPoint, p: Point, q: Point) -> float:
    """Busemann cocycle beta_xi(p, q) = lim_t d(ray(t), p) - d(ray(t), q).

    Positive when q is closer to xi than p is. Computed as
    log(P(q, xi) / P(p, xi)), which is exact for the half-plane model.
    """
    return math.log(poisson_kernel(q, xi) / poisson_kernel(p, xi))


def standardize_line(xi: BoundaryPoint, eta: BoundaryPoint) -> Moebius:
    """Unit-determinant map sending xi -> 0 and eta -> infinity.

    The entry signs are chosen so the determinant is positive for every
    endpoint configuration (a naive (z - xi)/(z - eta) has negative
    determinant when xi < eta and would land in the lower half-plane).
    """
    if xi == eta:
        raise EqualEndpoints(f"endpoints coincide: {xi}")
    if xi.is_infinity:
        return Moebius.from_entries(0.0, -1.0, 1.0, -eta.as_float())
    if eta.is_infinity:
        return Moebius.from_entries(1.0, -xi.as_float(), 0.0, 1.0)
    a, e = xi.as_float(), eta.as_float()
    if a < e:
        return Moebius.from_entries(1.0, -a, -1.0, e)
    return Moebius.from_entries(1.0, -a, 1.0, -e)


def closest_point_on_line(xi: BoundaryPoint, eta: BoundaryPoint, p: Point) -> Point:
    """Orthogonal projection of p onto the geodesic with endpoints xi, eta."""
    g = standardize_line(xi, eta)
    w = g(p)
    h = math.hypot(w.x, w.y)
    return g.inverse()(Point(0.0, h))


def dist_to_line(xi: BoundaryPoint, eta: BoundaryPoint, p: Point) -> float:
    """Distance from p to the geodesic ]xi, eta[."""
    g = standardize_line(xi, eta)
    w = g(p)
    return math.asinh(abs(w.x) / w.y)


def visual_dist(x: Point, xi: BoundaryPoint, eta: BoundaryPoint) -> float:
    """Visual distance between boundary points seen from x.

    Defined through the Busemann cocycles at the projection of x to the
    geodesic ]xi, eta[; equals 1/cosh d(x, ]xi,eta[), so it is 1 when x
    lies on the connecting geodesic and decays like exp(-d) far from it.
    """
    if xi == eta:
        raise EqualEndpoints("visual distance needs distinct boundary points")
    y = closest_point_on_line(xi, eta, x)
    return math.exp(-0.5 * (busemann(xi, x, y) + busemann(eta, x, y)))


def direction_at(p: Point, eta: BoundaryPoint) -> float:
    """Chart angle at p of the geodesic ray from p to the boundary point eta."""
    if eta.is_infinity:
        return 0.5 * math.pi
    e = eta.as_float()
    if e == p.x:
        return angle_norm(-0.5 * math.pi)
    # geodesic through p ending at e: semicircle centered at c on the real axis
    c = (p.x * p.x + p.y * p.y - e * e) / (2.0 * (p.x - e))
    phi = math.atan2(p.y, p.x - c)
    if e > c:
        return angle_norm(phi - 0.5 * math.pi)
    return angle_norm(phi + 0.5 * math.pi)


def angle_toward(p: Point, q: Point) -> float:
    """Chart angle at p of the geodesic ray from p through the point q."""
    if p.x == q.x:
        if p.y == q.y:
            raise ValueError("coincident points have no direction")
        return 0.5 * math.pi if q.y > p.y else angle_norm(-0.5 * math.pi)
    c = (q.x * q.x + q.y * q.y - p.x * p.x - p.y * p.y) / (2.0 * (q.x - p.x))
    phi = math.atan2(p.y, p.x - c)
    if q.x > p.x:
        return angle_norm(phi - 0.5 * math.pi)
    return angle_norm(phi + 0.5 * math.pi)


def geodesic_endpoints(v: UnitTangent) -> tuple[BoundaryPoint, BoundaryPoint]:
    """Backward and forward endpoints of the geodesic tangent to v.

    Directions within VERTICAL_SNAP of vertical are treated as exactly
    vertical; otherwise the carrying semicircle has center x + y tan(theta)
    and radius y/|cos theta|.
    """
    p, th = v.base, v.angle
    co, si = math.cos(th), math.sin(th)
    if abs(co) < VERTICAL_SNAP:
        foot = BoundaryPoint(p.x)
        if si > 0:
            return foot, INFINITY
        return INFINITY, foot
    c = p.x + p.y * si / co
    r = p.y / abs(co)
    left, right = BoundaryPoint(c - r), BoundaryPoint(c + r)
    if co > 0:
        return left, right
    return right, left


def flip(v: UnitTangent) -> UnitTangent:
    """Reverse a unit tangent vector in place."""
    return UnitTangent(v.base, v.angle + math.pi)


def hopf_coords(v: UnitTangent, basepoint: Point) -> HopfCoords:
    """Hopf coordinates (endpoints and signed time from the closest point)."""
    bwd, fwd = geodesic_endpoints(v)
    g = standardize_line(bwd, fwd)
    w = g(v.base)
    wb = g(basepoint)
    s = math.log(math.hypot(w.x, w.y)) - math.log(math.hypot(wb.x, wb.y))
    return HopfCoords(bwd, fwd, s, basepoint)


def vector_from_hopf(h: HopfCoords) -> UnitTangent:
    """Inverse of hopf_coords for the same basepoint."""
    g = standardize_line(h.v_minus, h.v_plus)
    wb = g(h.basepoint)
    h0 = math.hypot(wb.x, wb.y)
    up = UnitTangent(Point(0.0, h0 * math.exp(h.s)), 0.5 * math.pi)
    return g.inverse()(up)


def flow(v: UnitTangent, t: float) -> UnitTangent:
    """Geodesic flow for time t (unit speed, t may be negative)."""
    if t == 0.0:
        return v
    bwd, fwd = geodesic_endpoints(v)
    g = standardize_line(bwd, fwd)
    w = g(v.base)
    h = math.hypot(w.x, w.y)
    up = UnitTangent(Point(0.0, h * math.exp(t)), 0.5 * math.pi)
    return g.inverse()(up)


def point_toward(p: Point, target, s: float) -> Point:
    """Point at arc length s from p along the geodesic toward target.

    target may be an interior Point or a BoundaryPoint; s may be negative
    to move away from the target.
    """
    if isinstance(target, BoundaryPoint):
        ang = direction_at(p, target)
    else:
        ang = angle_toward(p, target)
    return flow(UnitTangent(p, ang), s).base
