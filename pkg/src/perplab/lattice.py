"""Arithmetic lattices acting on the hyperbolic plane.

Two presets are provided: the full modular group PSL2Z and its principal
congruence subgroup GAMMA2 of level 2 (matrices congruent to the identity
mod 2, up to sign). Everything here works with exact integer matrices;
floating point only enters through distance thresholds, and every
candidate produced by a window estimate is re-checked against an exact
integer quadratic form before being accepted.

The central primitive is a row scan: elements gamma with d(z0, gamma p)
at most t are grouped by their bottom row (c, d), each row is completed
to determinant 1, and the completions form an arithmetic progression
along which the squared chord length is an integer quadratic in the
stride index. That gives every qualifying element exactly once, with no
dedup pass, in time proportional to the output size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .convex import (
    ConvexSet,
    Disk,
    GeodesicLine,
    Horoball,
    PointSet,
    geom_key,
    dist_to_set,
    transform_set,
)
from .errors import (
    BudgetExceeded,
    LatticeOverflow,
    NoReductionRule,
    NotConverged,
    UnsupportedSet,
)
from .geometry import (
    INFINITY,
    BoundaryPoint,
    MoebiusInt,
    Point,
)

DEFAULT_BUDGET = 50_000_000

# beyond this the integer criterion no longer fits the int64 columns used
# by the census tables, and float thresholds lose integer resolution
MAX_CRIT = 4.0e18

T_GEN = MoebiusInt(1, 1, 0, 1)
S_GEN = MoebiusInt(0, -1, 1, 0)
IDENTITY = MoebiusInt(1, 0, 0, 1)


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """Extended gcd with the gcd normalized to be nonnegative."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        return -old_r, -old_s, -old_t
    return old_r, old_s, old_t


@dataclass(frozen=True)
class LatticeGroup:
    """Finite presentation data for a preset lattice.

    cusp_width is the translation length of the stabilizer of infinity:
    1 for PSL2Z, 2 for GAMMA2. cusps lists one representative per cusp
    class of the quotient.
    """

    name: str
    gens: tuple[MoebiusInt, ...]
    cusp_width: int
    cusps: tuple[BoundaryPoint, ...]
    covolume: float

    def contains(self, g: MoebiusInt) -> bool:
        if self.name == "PSL2Z":
            return True
        return g.b % 2 == 0 and g.c % 2 == 0

    def row_allowed(self, c: int, d: int) -> bool:
        """Whether (c, d) can be the bottom row of a group element."""
        if self.name == "PSL2Z":
            return True
        return c % 2 == 0 and d % 2 == 1

    def column_class(self, p: int, q: int) -> tuple[int, int]:
        """Mod-2 class that a first column must match (PSL2Z: any)."""
        if self.name == "PSL2Z":
            return (-1, -1)
        return (p % 2, q % 2)


PSL2Z = LatticeGroup(
    "PSL2Z",
    (S_GEN, T_GEN),
    1,
    (INFINITY,),
    math.pi / 3.0,
)

GAMMA2 = LatticeGroup(
    "GAMMA2",
    (MoebiusInt(1, 2, 0, 1), MoebiusInt(1, 0, 2, 1)),
    2,
    (INFINITY, BoundaryPoint(0), BoundaryPoint(1)),
    2.0 * math.pi,
)

_GROUPS = {"PSL2Z": PSL2Z, "GAMMA2": GAMMA2}


def get_group(name: str) -> LatticeGroup:
    key = name.replace("(", "").replace(")", "").replace("_", "").upper()
    if key in ("PSL2Z", "PSL2ZZ", "MODULAR"):
        return PSL2Z
    if key in ("GAMMA2", "GAMMA"):
        return GAMMA2
    raise KeyError(f"unknown group {name!r}; presets: {sorted(_GROUPS)}")


def critical_exponent(group: LatticeGroup) -> float:
    """Critical exponent of the Poincare series; 1 for these lattices."""
    if group.name not in _GROUPS:
        raise KeyError(group.name)
    return 1.0


def _as_fractions(point) -> tuple[Fraction, Fraction]:
    """Exact rational coordinates of an interior point."""
    if isinstance(point, Point):
        return Fraction(point.x), Fraction(point.y)
    if isinstance(point, PointSet):
        return Fraction(point.x), Fraction(point.y)
    if isinstance(point, tuple) and len(point) == 2:
        return Fraction(point[0]), Fraction(point[1])
    if isinstance(point, complex):
        return Fraction(point.real), Fraction(point.imag)
    raise TypeError(f"cannot read coordinates from {type(point).__name__}")


def _pair_forms(source, target):
    """Integerized linear forms for the chord criterion.

    With z0 = x0 + i y0 and p = px + i py, the element gamma = (a b; c d)
    satisfies cosh d(z0, gamma p) - 1 = |W|^2 / (2 y0 py) where
    W = c z0 p + d z0 - a p - b. Scaling by the common denominator N
    makes Re(W) N and Im(W) N integer linear forms in (a, b, c, d).
    """
    x0, y0 = source
    px, py = target
    u = x0 * px - y0 * py
    v = x0 * py + y0 * px
    N = 1
    for q in (u, v, x0, y0, px, py):
        N = N * q.denominator // math.gcd(N, q.denominator)
    ints = [int(q * N) for q in (u, v, x0, y0, px, py)]
    return (N, *ints)


def _scan_rows(group, source, target, t, budget):
    """Yield (a, b, c, d, crit) for all gamma with d(z0, gamma p) <= t.

    crit is the exact integer |W N|^2; the acceptance threshold is the
    float B = 2 (cosh t - 1) Y0 PY, so the boundary d(z0, gamma p) == t
    is decided at float resolution of the threshold (callers that care
    nudge t by 1e-9).
    """
    N, U, V, X0, Y0, PX, PY = _pair_forms(source, target)
    cosh1 = math.cosh(t) - 1.0
    B = 2.0 * cosh1 * float(Y0 * PY)
    if B > MAX_CRIT:
        raise LatticeOverflow(f"criterion bound {B:.3g} exceeds int64-safe range")
    P = group.cusp_width

    # row window: |c p + d|^2 <= (py / y0) e^t, integerized and padded
    row_rhs = float(PY * N * N) / float(Y0) * math.exp(t) * (1.0 + 1e-9) + 4.0
    cmax = int(math.sqrt(row_rhs) / PY) + 1
    spent = 0

    for c in range(0, cmax + 1):
        cpy2 = (c * PY) ** 2
        rem = row_rhs - cpy2
        if rem < 0.0:
            break
        half = math.sqrt(rem)
        cpx = c * PX
        dlo = math.floor((-half - cpx) / N) - 1
        dhi = math.ceil((half - cpx) / N) + 1
        spent += dhi - dlo + 1
        if spent > budget:
            raise BudgetExceeded(f"row scan visited more than {budget} candidates")
        for d in range(dlo, dhi + 1):
            if c == 0:
                if d != 1:
                    continue
            if math.gcd(c, d) != 1:
                continue
            if not group.row_allowed(c, d):
                continue
            g, xx, yy = egcd(c, d)
            a0, b0 = yy, -xx
            # a0 d - b0 c == 1 by construction (gcd sign normalized)
            if group.name == "GAMMA2" and b0 % 2 != 0:
                # slide one ordinary T step to reach the even-b completion;
                # a0 stays odd because c is even on allowed rows
                a0 += c
                b0 += d
            R0 = c * U + d * X0 - a0 * PX - b0 * N
            I0 = c * V + d * Y0 - a0 * PY
            s1 = P * (cpx + d * N)
            s2 = P * c * PY
            A2 = s1 * s1 + s2 * s2
            kc = (R0 * s1 + I0 * s2) / A2
            m = R0 * s2 - I0 * s1
            floor_val = (m * m) / A2
            radsq = (B - floor_val) / A2
            if radsq < 0.0:
                continue
            rad = math.sqrt(radsq)
            klo = math.floor(kc - rad) - 1
            khi = math.ceil(kc + rad) + 1
            spent += khi - klo + 1
            if spent > budget:
                raise BudgetExceeded(f"row scan visited more than {budget} candidates")
            for k in range(klo, khi + 1):
                rr = R0 - k * s1
                ii = I0 - k * s2
                crit = rr * rr + ii * ii
                if crit <= B:
                    yield (a0 + k * P * c, b0 + k * P * d, c, d, crit)


def scan_pairs(group, source, target, t, *, budget=DEFAULT_BUDGET):
    """Elements gamma with d(z0, gamma p) <= t, sorted by matrix key.

    source and target are interior points with exact rational coordinates
    (Point, PointSet, complex or (x, y) tuple; floats are taken exactly).
    """
    src = _as_fractions(source)
    tgt = _as_fractions(target)
    out = [
        MoebiusInt(a, b, c, d)
        for a, b, c, d, _ in _scan_rows(group, src, tgt, t, budget)
    ]
    out.sort(key=lambda g: g.key())
    return out


def enumerate_ball(group, basepoint, t, *, budget=DEFAULT_BUDGET):
    """Orbit ball: all gamma with d(x0, gamma x0) <= t, sorted."""
    return scan_pairs(group, basepoint, basepoint, t, budget=budget)


def bfs_ball(group, basepoint, t, *, budget=DEFAULT_BUDGET):
    """Same ball as enumerate_ball, grown by breadth-first word search.

    Independent of the row scan: candidates come from multiplying
    generators, with pruning at radius t + 2 max_g d(x0, g x0). Used as
    the cross-validation oracle for enumerate_ball.
    """
    src = _as_fractions(basepoint)
    N, U, V, X0, Y0, PX, PY = _pair_forms(src, src)

    def crit_of(g: MoebiusInt) -> int:
        rr = g.c * U + g.d * X0 - g.a * PX - g.b * N
        ii = g.c * V + g.d * Y0 - g.a * PY
        return rr * rr + ii * ii

    def dist_of(g: MoebiusInt) -> float:
        return math.acosh(1.0 + crit_of(g) / (2.0 * float(Y0 * PY)))

    gens = []
    for g in group.gens:
        gens.append(g)
        gens.append(g.inverse())
    gmax = max(dist_of(g) for g in gens)
    prune = t + 2.0 * gmax + 0.5
    b_accept = 2.0 * (math.cosh(t) - 1.0) * float(Y0 * PY)
    b_prune = 2.0 * (math.cosh(prune) - 1.0) * float(Y0 * PY)

    seen = {IDENTITY.key()}
    frontier = [IDENTITY]
    accepted = [IDENTITY] if crit_of(IDENTITY) <= b_accept else []
    spent = 0
    while frontier:
        nxt = []
        for h in frontier:
            for g in gens:
                w = h @ g
                k = w.key()
                if k in seen:
                    continue
                seen.add(k)
                spent += 1
                if spent > budget:
                    raise BudgetExceeded("bfs ball exceeded candidate budget")
                c = crit_of(w)
                if c > b_prune:
                    continue
                nxt.append(w)
                if c <= b_accept:
                    accepted.append(w)
        frontier = nxt
    accepted.sort(key=lambda g: g.key())
    return accepted


def _primitive_lowest(center: BoundaryPoint) -> tuple[int, int]:
    """Primitive column (p, q), q >= 0, representing a rational cusp."""
    if center.is_infinity:
        return (1, 0)
    v = Fraction(center.value)
    p, q = v.numerator, v.denominator
    if q < 0:
        p, q = -p, -q
    return (p, q)


def _complete_column(m: int, n: int) -> MoebiusInt:
    """Some determinant-1 matrix with first column (m, n)."""
    g, al, be = egcd(m, n)
    if g != 1:
        raise ValueError(f"column ({m}, {n}) is not primitive")
    # al*m + be*n == 1, so (m, -be; n, al) has determinant 1
    return MoebiusInt(m, -be, n, al)


def _column_rep(group, m, n, base_matrix):
    """Group element sending base_matrix's horoball to the (m, n) column."""
    M = _complete_column(m, n)
    rep = M @ base_matrix.inverse()
    if not group.contains(rep):
        M = MoebiusInt(M.a, M.b + M.a, M.c, M.d + M.c)
        rep = M @ base_matrix.inverse()
    if not group.contains(rep):
        raise NoReductionRule(f"no group completion for column ({m}, {n})")
    return rep


def _horoball_column_data(D: Horoball):
    """Base column, invariant weight w, and base matrix of a horoball.

    The orbit of D consists of horoballs HB(m/n, w/n^2) for realizable
    primitive columns (m, n), with (1, 0) standing for the horoball at
    infinity of height 1/w.
    """
    p, q = _primitive_lowest(D.center)
    if q == 0:
        w = 1 / Fraction(D.size)
    else:
        w = Fraction(D.size) * q * q
    return (p, q), w, _complete_column(p, q)


def _horoball_from_column(m: int, n: int, w: Fraction) -> Horoball:
    if n == 0:
        return Horoball(INFINITY, 1 / w)
    return Horoball(BoundaryPoint(Fraction(m, n)), w / (n * n))


def _horoball_translates(group, D, source, t, budget):
    """(rep, horoball) translates with d(x0, horoball) <= t."""
    x0, y0 = source
    (p, q), w, base = _horoball_column_data(D)
    want = group.column_class(p, q)

    M0 = x0.denominator * y0.denominator // math.gcd(
        x0.denominator, y0.denominator
    )
    X = int(x0 * M0)
    Y = int(y0 * M0)
    # condition outside the ball: |n z0 - m|^2 <= w y0 e^t, integerized
    bound = float(w * y0) * math.exp(t) * float(M0 * M0) * (1.0 + 1e-12)
    out = []
    spent = 0

    # column (1, 0): the horoball at infinity, height 1/w
    if want in ((-1, -1), (1, 0)):
        hb = _horoball_from_column(1, 0, w)
        # distance max(0, log(1/(w y0))) <= t
        if float(w * y0) >= math.exp(-t) * (1.0 - 1e-12):
            out.append((_column_rep(group, 1, 0, base), hb))

    nmax = int(math.sqrt(bound) / Y) + 1
    for n in range(1, nmax + 1):
        ny2 = (n * Y) ** 2
        rem = bound - ny2
        if rem < 0.0:
            break
        half = math.sqrt(rem)
        nx = n * X
        mlo = math.floor((nx - half) / M0) - 1
        mhi = math.ceil((nx + half) / M0) + 1
        spent += mhi - mlo + 1
        if spent > budget:
            raise BudgetExceeded("horoball translate scan exceeded budget")
        for m in range(mlo, mhi + 1):
            if math.gcd(m, n) != 1:
                continue
            if want != (-1, -1) and (m % 2, n % 2) != want:
                continue
            lhs = (n * X - m * M0) ** 2 + ny2
            if lhs <= bound:
                out.append(
                    (_column_rep(group, m, n, base), _horoball_from_column(m, n, w))
                )
    out.sort(key=lambda pair: pair[0].key())
    return out


def enumerate_translates(group, D, basepoint, t, *, pad=6.0, budget=DEFAULT_BUDGET):
    """Orbit translates of D within distance t of the basepoint.

    Returns a list of (rep, translate) pairs sorted by the representative
    matrix, one per distinct translate (the first representative in sort
    order is kept when the set has a stabilizer).

    Point, disk and horoball translates are complete by construction.
    Geodesic translates use a ball search around the basepoint of radius
    t + d(x0, D) + pad, which can miss translates whose nearest group
    image of the basepoint rides far along the line; pad should exceed
    the translation length of the stabilizer of D for closed geodesics.
    """
    src = _as_fractions(basepoint)
    x0p = Point(float(src[0]), float(src[1]))

    if isinstance(D, PointSet):
        reps = scan_pairs(group, src, (Fraction(D.x), Fraction(D.y)), t, budget=budget)
        pairs = [(g, transform_set(g, D)) for g in reps]
    elif isinstance(D, Disk):
        ctr = (Fraction(D.x), Fraction(D.y))
        reps = scan_pairs(group, src, ctr, t + D.radius, budget=budget)
        pairs = [(g, transform_set(g, D)) for g in reps]
    elif isinstance(D, Horoball):
        pairs = _horoball_translates(group, D, src, t, budget)
    elif isinstance(D, GeodesicLine):
        radius = t + dist_to_set(D, x0p) + pad
        reps = scan_pairs(group, src, src, radius, budget=budget)
        pairs = []
        for g in reps:
            img = transform_set(g, D)
            if dist_to_set(img, x0p) <= t + 1e-9:
                pairs.append((g, img))
    else:
        raise UnsupportedSet(type(D).__name__)

    seen = set()
    out = []
    for g, s in pairs:
        k = geom_key(s)
        if k in seen:
            continue
        seen.add(k)
        out.append((g, s))
    return out


# ---------------------------------------------------------------------------
# fundamental domain reduction


def _psl2z_reduce_scalar(x: float, y: float):
    """Reduce to the standard modular domain.

    Returns (x_red, y_red, g) where g is the integer matrix mapping the
    original point to the reduced one.
    """
    a, b, c, d = 1, 0, 0, 1
    for _ in range(500):
        k = math.floor(x + 0.5)
        if k != 0:
            x -= k
            a -= k * c
            b -= k * d
        n2 = x * x + y * y
        if n2 > 1.0 or (n2 == 1.0 and x <= 0.0):
            return x, y, (a, b, c, d)
        # apply S: z -> -1/z
        x, y = -x / n2, y / n2
        a, b, c, d = -c, -d, a, b
    raise NotConverged("fundamental domain reduction did not terminate")


_COSET_REPS = (
    IDENTITY,
    T_GEN,
    S_GEN,
    T_GEN @ S_GEN,
    S_GEN @ T_GEN,
    S_GEN @ T_GEN @ S_GEN,
)

_PARITY_TO_REP = {
    (r.a % 2, r.b % 2, r.c % 2, r.d % 2): i for i, r in enumerate(_COSET_REPS)
}


def fd_copies(group: LatticeGroup) -> tuple[MoebiusInt, ...]:
    """Coset transversal tiling the group's fundamental domain by copies
    of the standard modular domain (a single copy for PSL2Z)."""
    if group.name == "PSL2Z":
        return (IDENTITY,)
    if group.name == "GAMMA2":
        return _COSET_REPS
    raise NoReductionRule(group.name)


def reduce_fd(group: LatticeGroup, z) -> tuple[Point, MoebiusInt]:
    """Reduce a point into the group's fundamental domain.

    Returns (z_reduced, gamma) with gamma in the group and
    gamma(z_reduced) = z. For PSL2Z the domain is the standard strip
    |Re| <= 1/2 outside the unit circle (half-open boundary convention:
    Re in [-1/2, 1/2), and on |z| = 1 the nonpositive-Re half is kept).
    For GAMMA2 the domain is the union of the six coset copies of the
    standard domain under fd_copies.
    """
    if isinstance(z, Point):
        x, y = z.x, z.y
    else:
        zz = complex(z)
        x, y = zz.real, zz.imag
    if not y > 0:
        raise ValueError("can only reduce interior points")

    rx, ry, (a, b, c, d) = _psl2z_reduce_scalar(x, y)
    gmat = MoebiusInt(a, b, c, d)
    word = gmat.inverse()
    if group.name == "PSL2Z":
        return Point(rx, ry), word
    if group.name != "GAMMA2":
        raise NoReductionRule(group.name)

    pk = (word.a % 2, word.b % 2, word.c % 2, word.d % 2)
    rep = _COSET_REPS[_PARITY_TO_REP[pk]]
    gamma = word @ rep.inverse()
    if not group.contains(gamma):
        raise NoReductionRule("coset decomposition failed")
    red = rep.to_float()(Point(rx, ry))
    return red, gamma


def in_fundamental_domain(group: LatticeGroup, z, tol: float = 1e-9) -> bool:
    """Membership test for the (closed, tol-thickened) fundamental domain."""
    if isinstance(z, Point):
        x, y = z.x, z.y
    else:
        zz = complex(z)
        x, y = zz.real, zz.imag
    if group.name == "PSL2Z":
        return abs(x) <= 0.5 + tol and x * x + y * y >= 1.0 - tol
    if group.name == "GAMMA2":
        for r in _COSET_REPS:
            w = r.inverse().to_float()(Point(x, y))
            if in_fundamental_domain(PSL2Z, w, tol):
                return True
        return False
    raise NoReductionRule(group.name)


def reduce_points(group: LatticeGroup, x, y, max_iter: int = 200):
    """Vectorized fundamental-domain reduction with derivative phase.

    x, y are float arrays (modified copies are returned). The result is
    (x_red, y_red, phase) where phase accumulates the argument of the
    derivative of the reducing map at each point, i.e. the amount by
    which a tangent direction at z must be rotated to follow the
    reduction. Matches reduce_fd pointwise away from domain boundaries.
    """
    x = np.array(x, dtype=np.float64, copy=True)
    y = np.array(y, dtype=np.float64, copy=True)
    if x.shape != y.shape:
        raise ValueError("coordinate arrays must have matching shapes")
    phase = np.zeros_like(x)
    a = np.ones_like(x, dtype=np.int64)
    b = np.zeros_like(a)
    c = np.zeros_like(a)
    d = np.ones_like(a)

    done_all = False
    for _ in range(max_iter):
        k = np.floor(x + 0.5)
        nz = k != 0.0
        if nz.any():
            ki = k.astype(np.int64)
            x -= k
            a -= ki * c
            b -= ki * d
        n2 = x * x + y * y
        inside = (n2 < 1.0) | ((n2 == 1.0) & (x > 0.0))
        if not inside.any():
            done_all = True
            break
        ix = np.where(inside)
        xi, yi, ni = x[ix], y[ix], n2[ix]
        phase[ix] += -2.0 * np.arctan2(yi, xi)
        x[ix] = -xi / ni
        y[ix] = yi / ni
        ai, bi = a[ix].copy(), b[ix].copy()
        a[ix], b[ix] = -c[ix], -d[ix]
        c[ix], d[ix] = ai, bi
    if not done_all:
        raise NotConverged("vectorized reduction hit the iteration cap")

    if group.name == "PSL2Z":
        return x, y, phase
    if group.name != "GAMMA2":
        raise NoReductionRule(group.name)

    # word = g^{-1} has entries (d, -b, -c, a); only parities matter
    pk = ((d & 1) << 3) | ((b & 1) << 2) | ((c & 1) << 1) | (a & 1)
    lut = np.full(16, -1, dtype=np.int64)
    for i, r in enumerate(_COSET_REPS):
        code = ((r.a % 2) << 3) | ((r.b % 2) << 2) | ((r.c % 2) << 1) | (r.d % 2)
        lut[code] = i
    rep_idx = lut[pk]
    for i, r in enumerate(_COSET_REPS):
        if i == 0:
            continue
        sel = rep_idx == i
        if not sel.any():
            continue
        ra, rb, rc, rd = float(r.a), float(r.b), float(r.c), float(r.d)
        xs, ys = x[sel], y[sel]
        if rc != 0.0:
            phase[sel] += -2.0 * np.arctan2(rc * ys, rc * xs + rd)
        den = (rc * xs + rd) ** 2 + (rc * ys) ** 2
        x[sel] = ((ra * xs + rb) * (rc * xs + rd) + ra * rc * ys * ys) / den
        y[sel] = ys / den
    return x, y, phase
