"""Census of common perpendiculars between convex-set orbits.

perp_census enumerates, for a base set D- and the orbit of a set D+ under
a lattice, every common perpendicular of length in (0, t] between D- and
a translate of D+, one record per perpendicular modulo the stabilizer of
D-. Records carry the translate's representative matrix, the length, the
unit tangents at both feet, and a multiplicity (1 over the order of the
pairwise stabilizer).

Two storage layers share one enumeration: census_table builds columnar
numpy arrays (cheap at half a million records), and perp_census
materializes dataclass records from the table, so both views always
agree. Configurations with nontrivial point stabilizers or geodesic
targets drop to a scalar path; the high-volume cases (point-to-point
loops, cusp-to-cusp, cusp-to-point, cusp-to-disk) are vectorized.
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
    common_perp,
    geom_key,
    set_dist,
    transform_set,
)
from .errors import BudgetExceeded, LatticeOverflow, SetsTooClose, UnsupportedSet
from .geometry import (
    MoebiusInt,
    Point,
    UnitTangent,
    angle_norm,
)
from .lattice import (
    DEFAULT_BUDGET,
    LatticeGroup,
    _complete_column,
    _column_rep,
    _horoball_column_data,
    _horoball_translates,
    _pair_forms,
    _scan_rows,
    egcd,
    enumerate_ball,
    enumerate_translates,
    scan_pairs,
)

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class PerpRecord:
    """One common perpendicular between the base set and a translate."""

    rep: MoebiusInt
    translate: ConvexSet
    length: float
    u: UnitTangent
    v: UnitTangent
    multiplicity: float = 1.0
    weight: float = 1.0


@dataclass
class CensusTable:
    """Columnar census storage; rows sorted by representative matrix."""

    group: LatticeGroup
    set_minus: ConvexSet
    set_plus: ConvexSet
    t: float
    rep_a: np.ndarray
    rep_b: np.ndarray
    rep_c: np.ndarray
    rep_d: np.ndarray
    length: np.ndarray
    ux: np.ndarray
    uy: np.ndarray
    uangle: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    vangle: np.ndarray
    multiplicity: np.ndarray
    weight: np.ndarray

    def __len__(self) -> int:
        return len(self.length)

    def count(self) -> float:
        """Total number of perpendiculars, weighted by multiplicity."""
        return float(self.multiplicity.sum())

    def record(self, i: int) -> PerpRecord:
        rep = MoebiusInt(
            int(self.rep_a[i]), int(self.rep_b[i]), int(self.rep_c[i]), int(self.rep_d[i])
        )
        return PerpRecord(
            rep=rep,
            translate=transform_set(rep, self.set_plus),
            length=float(self.length[i]),
            u=UnitTangent(Point(float(self.ux[i]), float(self.uy[i])), float(self.uangle[i])),
            v=UnitTangent(Point(float(self.vx[i]), float(self.vy[i])), float(self.vangle[i])),
            multiplicity=float(self.multiplicity[i]),
            weight=float(self.weight[i]),
        )

    def records(self) -> list[PerpRecord]:
        return [self.record(i) for i in range(len(self))]


def _sorted_table(group, dm, dp, t, cols) -> CensusTable:
    """Assemble a table from parallel columns and lex-sort by matrix."""
    a, b, c, d, length, ux, uy, ua, vx, vy, va, mult, wt = cols
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)
    d = np.asarray(d, dtype=np.int64)
    order = np.lexsort((d, c, b, a))
    mk = lambda v: np.asarray(v, dtype=np.float64)[order]
    return CensusTable(
        group, dm, dp, t,
        a[order], b[order], c[order], d[order],
        mk(length), mk(ux), mk(uy), mk(ua), mk(vx), mk(vy), mk(va),
        mk(mult), mk(wt),
    )


def _table_from_records(group, dm, dp, t, recs) -> CensusTable:
    cols = (
        [r.rep.a for r in recs],
        [r.rep.b for r in recs],
        [r.rep.c for r in recs],
        [r.rep.d for r in recs],
        [r.length for r in recs],
        [r.u.base.x for r in recs],
        [r.u.base.y for r in recs],
        [r.u.angle for r in recs],
        [r.v.base.x for r in recs],
        [r.v.base.y for r in recs],
        [r.v.angle for r in recs],
        [r.multiplicity for r in recs],
        [r.weight for r in recs],
    )
    return _sorted_table(group, dm, dp, t, cols)


def _stab_elements(group, point_xy) -> list[MoebiusInt]:
    """Exact stabilizer of a rational point: the radius-0 orbit ball."""
    return enumerate_ball(group, point_xy, 0.0)


# ---------------------------------------------------------------------------
# vectorized fast paths


def _angles_between(px, py, qx, qy):
    """Chart angles at p toward q and at q away from p, vectorized.

    Both points are on the same geodesic; the formulas reuse the common
    circle center. Vertical pairs (equal x) are handled by masks.
    """
    px = np.asarray(px, dtype=np.float64)
    qx = np.asarray(qx, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    qy = np.asarray(qy, dtype=np.float64)
    dxq = qx - px
    vert = dxq == 0.0
    safe = np.where(vert, 1.0, dxq)
    cc = (qx * qx + qy * qy - px * px - py * py) / (2.0 * safe)
    phi_p = np.arctan2(py, px - cc)
    phi_q = np.arctan2(qy, qx - cc)
    right = qx > px
    ua = np.where(right, phi_p - HALF_PI, phi_p + HALF_PI)
    # at q, the direction of travel continues away from p
    va = np.where(right, phi_q - HALF_PI, phi_q + HALF_PI)
    up_ = qy > py
    ua = np.where(vert, np.where(up_, HALF_PI, -HALF_PI), ua)
    va = np.where(vert, np.where(up_, HALF_PI, -HALF_PI), va)
    return ua % TWO_PI, va % TWO_PI


def _table_pt_pt(group, dm: PointSet, dp: PointSet, t, budget) -> CensusTable:
    src = (Fraction(dm.x), Fraction(dm.y))
    tgt = (Fraction(dp.x), Fraction(dp.y))
    N, U, V, X0, Y0, PX, PY = _pair_forms(src, tgt)
    den = 2.0 * float(Y0 * PY)

    A, B, C, D, CRIT = [], [], [], [], []
    for a, b, c, d, crit in _scan_rows(group, src, tgt, t, budget):
        if crit == 0:
            continue  # zero length: the translate meets the base point
        A.append(a)
        B.append(b)
        C.append(c)
        D.append(d)
        CRIT.append(crit)
    a = np.array(A, dtype=np.int64)
    b = np.array(B, dtype=np.int64)
    c = np.array(C, dtype=np.int64)
    d = np.array(D, dtype=np.int64)
    crit = np.array(CRIT, dtype=np.float64)

    length = 2.0 * np.arcsinh(np.sqrt(crit / (2.0 * den)))
    pxf, pyf = float(tgt[0]), float(tgt[1])
    x0f, y0f = float(src[0]), float(src[1])
    af = a.astype(np.float64)
    bf = b.astype(np.float64)
    cf = c.astype(np.float64)
    df = d.astype(np.float64)
    cd = cf * pxf + df
    den2 = cd * cd + (cf * pyf) ** 2
    qx = ((af * pxf + bf) * cd + af * cf * pyf * pyf) / den2
    qy = pyf / den2
    ua, va = _angles_between(np.full_like(qx, x0f), np.full_like(qy, y0f), qx, qy)
    n = len(a)
    ones = np.ones(n)
    return _sorted_table(
        group, dm, dp, t,
        (a, b, c, d, length,
         np.full(n, x0f), np.full(n, y0f), ua, qx, qy, va, ones, ones.copy()),
    )


def _table_cusp_hb(group, dm: Horoball, dp: Horoball, t, budget) -> CensusTable:
    h = Fraction(dm.size)
    (p0, q0), w, base = _horoball_column_data(dp)
    want = group.column_class(p0, q0)
    P = group.cusp_width
    ratio = h / w  # length = log(ratio * n^2)
    ratio_f = float(ratio)

    # boundary shells at length exactly t must survive float rounding
    hi_pad = float(w / h) * math.exp(t) * (1.0 + 1e-12)
    nmax = int(math.sqrt(hi_pad)) + 1
    rows = []
    spent = 0
    for n in range(1, nmax + 1):
        nn = n * n
        if nn * h <= w:
            continue  # inside or touching the base horoball
        if nn > hi_pad:
            continue
        spent += P * n
        if spent > budget:
            raise BudgetExceeded("cusp census exceeded budget")
        for m in range(0, P * n):
            if math.gcd(m, n) != 1:
                continue
            if want != (-1, -1) and (m % 2, n % 2) != want:
                continue
            rows.append((m, n))

    A, B, C, D = [], [], [], []
    length, ux, vy = [], [], []
    for m, n in rows:
        rep = _column_rep(group, m, n, base)
        A.append(rep.a)
        B.append(rep.b)
        C.append(rep.c)
        D.append(rep.d)
        # exact ratio to float, then one log: integer census identities
        # like length == log(n^2) survive the float round trip
        length.append(math.log(ratio_f * (n * n)))
        ux.append(m / n)
        vy.append(float(w) / (n * n))
    k = len(A)
    hf = float(h)
    down = angle_norm(-HALF_PI)
    ux = np.array(ux)
    cols = (
        A, B, C, D, length,
        ux, np.full(k, hf), np.full(k, down),
        ux.copy(), np.array(vy), np.full(k, down),
        np.ones(k), np.ones(k),
    )
    return _sorted_table(group, dm, dp, t, cols)


def _cusp_point_rows(group, h, target, t, budget, radius_shift=0.0):
    """Rows for translates of a point (or disk center) seen from H(inf, h).

    Yields (rep, re_exact, im_exact, q_exact) with the representative
    already shifted so Re lies in [0, cusp_width). The distance window is
    radius_shift < log(h / im) <= t + radius_shift.
    """
    px, py = target
    Np = px.denominator * py.denominator // math.gcd(px.denominator, py.denominator)
    PXp, PYp = int(px * Np), int(py * Np)
    P = group.cusp_width
    lo_f = math.exp(radius_shift)
    hi_f = math.exp(t + radius_shift)
    hf, pyf = float(h), float(py)

    # q = |c p + d|^2 in (py/h * lo, py/h * hi]
    qmax = pyf / hf * hi_f * (1.0 + 1e-12)
    cmax = int(math.sqrt(qmax * Np * Np) / PYp) + 1
    spent = 0
    for c in range(0, cmax + 1):
        cpy2 = (c * PYp) ** 2
        rem = qmax * Np * Np - cpy2
        if rem < 0.0:
            break
        half = math.sqrt(rem)
        cpx = c * PXp
        dlo = math.floor((-half - cpx) / Np) - 1
        dhi = math.ceil((half - cpx) / Np) + 1
        spent += dhi - dlo + 1
        if spent > budget:
            raise BudgetExceeded("cusp point census exceeded budget")
        for d in range(dlo, dhi + 1):
            if c == 0:
                if d != 1:
                    continue
            if math.gcd(c, d) != 1:
                continue
            if not group.row_allowed(c, d):
                continue
            Q = (cpx + d * Np) ** 2 + cpy2
            q = Fraction(Q, Np * Np)
            im = py / q
            ratio = h / im  # e^{distance} when the point is below the horoball
            # strict lower end of the window (exact when radius_shift is 0)
            if not ratio > lo_f:
                continue
            if not ratio <= hi_f:
                continue
            g, xx, yy = egcd(c, d)
            a0, b0 = yy, -xx
            if group.name == "GAMMA2" and b0 % 2 != 0:
                a0 += c
                b0 += d
            # exact Re of the translate, then shift into [0, P)
            cdv = c * px + d
            re = ((a0 * px + b0) * cdv + a0 * c * py * py) / q
            j = math.floor(re / P)
            if j:
                a0 -= j * P * c
                b0 -= j * P * d
                re -= j * P
            yield MoebiusInt(a0, b0, c, d), re, im, q


def _table_cusp_pt(group, dm: Horoball, dp: PointSet, t, budget) -> CensusTable:
    h = Fraction(dm.size)
    tgt = (Fraction(dp.x), Fraction(dp.y))
    seen = set()
    A, B, C, D = [], [], [], []
    length, ux, vy = [], [], []
    for rep, re, im, _q in _cusp_point_rows(group, h, tgt, t, budget):
        key = (re, im)
        if key in seen:
            continue  # distinct rows can hit the same point when it is elliptic
        seen.add(key)
        A.append(rep.a)
        B.append(rep.b)
        C.append(rep.c)
        D.append(rep.d)
        length.append(math.log(float(h / im)))
        ux.append(float(re))
        vy.append(float(im))
    k = len(A)
    down = angle_norm(-HALF_PI)
    ux = np.array(ux)
    cols = (
        A, B, C, D, length,
        ux, np.full(k, float(h)), np.full(k, down),
        ux.copy(), np.array(vy), np.full(k, down),
        np.ones(k), np.ones(k),
    )
    return _sorted_table(group, dm, dp, t, cols)


def _table_cusp_disk(group, dm: Horoball, dp: Disk, t, budget) -> CensusTable:
    h = Fraction(dm.size)
    ctr = (Fraction(dp.x), Fraction(dp.y))
    rho = float(dp.radius)
    seen = set()
    A, B, C, D = [], [], [], []
    length, ux, vy = [], [], []
    for rep, re, im, _q in _cusp_point_rows(
        group, h, ctr, t, budget, radius_shift=rho
    ):
        key = (re, im)
        if key in seen:
            continue
        seen.add(key)
        A.append(rep.a)
        B.append(rep.b)
        C.append(rep.c)
        D.append(rep.d)
        length.append(math.log(float(h / im)) - rho)
        ux.append(float(re))
        vy.append(float(im) * math.exp(rho))
    k = len(A)
    down = angle_norm(-HALF_PI)
    ux = np.array(ux)
    cols = (
        A, B, C, D, length,
        ux, np.full(k, float(h)), np.full(k, down),
        ux.copy(), np.array(vy), np.full(k, down),
        np.ones(k), np.ones(k),
    )
    return _sorted_table(group, dm, dp, t, cols)


# ---------------------------------------------------------------------------
# scalar path


def _orbit_canonical(stab, translate):
    """Canonical key of the translate's orbit under the base stabilizer,
    plus the order of the subgroup of stab fixing the translate."""
    keys = []
    fix = 0
    own = geom_key(translate)
    for s in stab:
        img = transform_set(s, translate)
        k = geom_key(img)
        keys.append(k)
        if k == own:
            fix += 1
    return min(keys), own, fix


def _census_records_scalar(group, dm, dp, t, budget, pad) -> list[PerpRecord]:
    if isinstance(dm, GeodesicLine):
        raise UnsupportedSet("geodesic base sets are not supported in the census")

    if isinstance(dm, Horoball):
        return _cusp_scalar_records(group, dm, dp, t, budget, pad)

    # point or disk base: distances measured from the anchor point
    if isinstance(dm, PointSet):
        anchor = (Fraction(dm.x), Fraction(dm.y))
        lo = 0.0
    elif isinstance(dm, Disk):
        anchor = (Fraction(dm.x), Fraction(dm.y))
        lo = float(dm.radius)
    else:
        raise UnsupportedSet(type(dm).__name__)

    stab = _stab_elements(group, anchor)

    candidates: list[tuple[MoebiusInt, ConvexSet]] = []
    if isinstance(dp, PointSet):
        tgt = (Fraction(dp.x), Fraction(dp.y))
        for g in scan_pairs(group, anchor, tgt, t + lo, budget=budget):
            candidates.append((g, transform_set(g, dp)))
    elif isinstance(dp, Disk):
        tgt = (Fraction(dp.x), Fraction(dp.y))
        for g in scan_pairs(group, anchor, tgt, t + lo + dp.radius, budget=budget):
            candidates.append((g, transform_set(g, dp)))
    elif isinstance(dp, Horoball):
        candidates = _horoball_translates(group, dp, anchor, t + lo, budget)
    elif isinstance(dp, GeodesicLine):
        x0p = Point(float(anchor[0]), float(anchor[1]))
        for g, img in enumerate_translates(
            group, dp, x0p, t + lo, pad=pad, budget=budget
        ):
            candidates.append((g, img))
    else:
        raise UnsupportedSet(type(dp).__name__)

    recs = []
    seen = set()
    for g, translate in candidates:
        d = set_dist(dm, translate)
        if not (d > 0.0 and d <= t + 1e-12):
            continue
        canon, own, fix = _orbit_canonical(stab, translate)
        if own != canon:
            continue  # its stabilizer-partner is the canonical representative
        if own in seen:
            continue
        seen.add(own)
        try:
            cp = common_perp(dm, translate)
        except SetsTooClose:
            continue  # separation below float resolution: treat as touching
        recs.append(
            PerpRecord(g, translate, cp.length, cp.u, cp.v, 1.0 / fix, 1.0)
        )
    recs.sort(key=lambda r: r.rep.key())
    return recs


def _cusp_scalar_records(group, dm, dp, t, budget, pad) -> list[PerpRecord]:
    """Horoball base at infinity with a geodesic target (other targets
    have vectorized tables); quotient by the cusp translation."""
    if not dm.center.is_infinity:
        raise ValueError("finite-cusp bases are conjugated before this point")
    if not isinstance(dp, GeodesicLine):
        raise UnsupportedSet(type(dp).__name__)
    P = group.cusp_width
    h = float(dm.size)
    x0p = Point(0.0, h)
    recs = []
    seen = set()
    for g, img in enumerate_translates(group, dp, x0p, t + pad, pad=pad, budget=budget):
        d = set_dist(dm, img)
        if not (d > 0.0 and d <= t + 1e-12):
            continue
        # shift the translate so its midpoint falls in [0, P)
        pts = [e for e in (img.e1, img.e2)]
        if any(e.is_infinity for e in pts):
            continue  # vertical lines meet the horoball
        mid = 0.5 * (pts[0].as_float() + pts[1].as_float())
        j = math.floor(mid / P)
        if j:
            shift = MoebiusInt(1, -j * P, 0, 1)
            g = shift @ g
            img = transform_set(shift, img)
        key = tuple(
            round(v, 9)
            for v in sorted((img.e1.as_float(), img.e2.as_float()))
        )
        if key in seen:
            continue
        seen.add(key)
        try:
            cp = common_perp(dm, img)
        except SetsTooClose:
            continue
        recs.append(PerpRecord(g, img, cp.length, cp.u, cp.v, 1.0, 1.0))
    recs.sort(key=lambda r: r.rep.key())
    return recs


# ---------------------------------------------------------------------------
# conjugation of finite-cusp bases and the public entry points


def _apply_moebius_arrays(mat, x, y, ang):
    """Vectorized action of a float Moebius map on unit tangents."""
    a, b, c, d = mat.a, mat.b, mat.c, mat.d
    cd = c * x + d
    den = cd * cd + (c * y) ** 2
    nx = (a * x + b) * cd + a * c * y * y
    nang = ang - 2.0 * np.arctan2(c * y, cd)
    return nx / den, y / den, nang % TWO_PI


def _conjugate_table(tbl: CensusTable, g0: MoebiusInt, dm, dp) -> CensusTable:
    """Undo the coordinate change that sent the base cusp to infinity."""
    g1 = g0.inverse()
    a, b, c, d = tbl.rep_a, tbl.rep_b, tbl.rep_c, tbl.rep_d
    if max(
        np.abs(a).max(initial=0),
        np.abs(b).max(initial=0),
        np.abs(c).max(initial=0),
        np.abs(d).max(initial=0),
    ) > 2**31:
        raise LatticeOverflow("census entries too large to conjugate in int64")
    p0, q0, r0, s0 = g0.a, g0.b, g0.c, g0.d
    p1, q1, r1, s1 = g1.a, g1.b, g1.c, g1.d
    # rep' = g1 @ rep @ g0
    e = a * p0 + b * r0
    f = a * q0 + b * s0
    gg = c * p0 + d * r0
    hh = c * q0 + d * s0
    na = p1 * e + q1 * gg
    nb = p1 * f + q1 * hh
    nc = r1 * e + s1 * gg
    nd = r1 * f + s1 * hh
    # canonical sign: first nonzero of (a, b, c, d) positive
    sign = np.where(
        na != 0, np.sign(na),
        np.where(nb != 0, np.sign(nb), np.where(nc != 0, np.sign(nc), np.sign(nd))),
    ).astype(np.int64)
    na, nb, nc, nd = na * sign, nb * sign, nc * sign, nd * sign

    gm = g1.to_float()
    ux, uy, ua = _apply_moebius_arrays(gm, tbl.ux, tbl.uy, tbl.uangle)
    vx, vy, va = _apply_moebius_arrays(gm, tbl.vx, tbl.vy, tbl.vangle)
    return _sorted_table(
        tbl.group, dm, dp, tbl.t,
        (na, nb, nc, nd, tbl.length, ux, uy, ua, vx, vy, va,
         tbl.multiplicity, tbl.weight),
    )


def census_table(
    group: LatticeGroup,
    set_minus: ConvexSet,
    set_plus: ConvexSet,
    t: float,
    *,
    budget: int = DEFAULT_BUDGET,
    pad: float = 6.0,
) -> CensusTable:
    """Columnar census of common perpendiculars of length in (0, t]."""
    dm, dp = set_minus, set_plus

    if isinstance(dm, Horoball) and not dm.center.is_infinity:
        # move the base cusp to infinity; the conjugator lies in PSL2Z and
        # both presets are normal in it, so the group is unchanged
        v = Fraction(dm.center.value)
        p, q = v.numerator, v.denominator
        if q < 0:
            p, q = -p, -q
        g0 = _complete_column(p, q).inverse()
        tbl = census_table(
            group, transform_set(g0, dm), transform_set(g0, dp), t,
            budget=budget, pad=pad,
        )
        return _conjugate_table(tbl, g0, dm, dp)

    if isinstance(dm, Horoball):
        if isinstance(dp, Horoball):
            return _table_cusp_hb(group, dm, dp, t, budget)
        if isinstance(dp, PointSet):
            return _table_cusp_pt(group, dm, dp, t, budget)
        if isinstance(dp, Disk):
            return _table_cusp_disk(group, dm, dp, t, budget)
        recs = _census_records_scalar(group, dm, dp, t, budget, pad)
        return _table_from_records(group, dm, dp, t, recs)

    if isinstance(dm, PointSet) and isinstance(dp, PointSet):
        stab_m = _stab_elements(group, (Fraction(dm.x), Fraction(dm.y)))
        stab_p = _stab_elements(group, (Fraction(dp.x), Fraction(dp.y)))
        if len(stab_m) == 1 and len(stab_p) == 1:
            return _table_pt_pt(group, dm, dp, t, budget)

    recs = _census_records_scalar(group, dm, dp, t, budget, pad)
    return _table_from_records(group, dm, dp, t, recs)


def perp_census(
    group: LatticeGroup,
    set_minus: ConvexSet,
    set_plus: ConvexSet,
    t: float,
    *,
    budget: int = DEFAULT_BUDGET,
    pad: float = 6.0,
) -> list[PerpRecord]:
    """Census as a list of records (materialized from the columnar table)."""
    return census_table(
        group, set_minus, set_plus, t, budget=budget, pad=pad
    ).records()
