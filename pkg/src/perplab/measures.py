"""Conformal densities and the flow-invariant measure on the unit tangent bundle.

The boundary density ps_density is the unit-exponent conformal family
normalized so the total mass seen from any interior point is 2 pi. From
it, the flow-invariant measure on line space is assembled as

    density(xi) * density(eta) * visual_dist(xi, eta)^{-2}  d xi d eta dt,

a product that collapses to 4 / |xi - eta|^2, independent of the viewing
point. Nothing below assumes that collapse: the integrators evaluate the
three-factor product and a chart Jacobian pointwise, and the tests check
that the product matches the closed form (that independence is exactly
the conformal cocycle identity, so it doubles as a consistency check).

Two independent total-mass routes are provided. The primary route
integrates the assembled density over the quotient domain in base
coordinates (position, direction), with the cusp parts above a height
cutoff added in closed form. The second route works in unordered-line
coordinates (c, r) = (center, radius) of the carrying semicircle, where
the measure is (4 / r^2) ell(c, r) dc dr with ell the time the line
spends in the domain below the cutoff; it needs radial tail corrections
and is kept for the modular chart as a cross-check.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import roots_legendre

from .convex import ConvexSet, Disk, GeodesicLine, Horoball, PointSet, geom_key
from .errors import QuadratureDiverged, UnsupportedSet
from .geometry import (
    BoundaryPoint,
    Point,
    UnitTangent,
    flow,
    geodesic_endpoints,
    hopf_coords,
    visual_dist,
)
from .lattice import LatticeGroup, enumerate_ball, fd_copies, get_group

TWO_PI = 2.0 * math.pi


def ps_density(x: Point, xi: BoundaryPoint) -> float:
    """Conformal density at the boundary seen from x; total mass 2 pi.

    In the boundary chart at a finite point this is 2 y / |z - xi|^2.
    At infinity the value is reported in the inverted chart w = -1/xi,
    in which it equals 2 y; ratios and totals are chart-consistent.
    """
    if xi.is_infinity:
        return 2.0 * x.y
    dx = x.x - xi.as_float()
    return 2.0 * x.y / (dx * dx + x.y * x.y)


def ps_total(x: Point) -> float:
    """Total boundary mass seen from x (closed form)."""
    return TWO_PI


def bm_line_density(x: Point, xi: BoundaryPoint, eta: BoundaryPoint) -> float:
    """Invariant line-space density at (xi, eta), evaluated from x.

    The product ps(x, xi) ps(x, eta) / visual_dist(x, xi, eta)^2; the
    value does not depend on x (tested, not assumed) and equals
    4 / |xi - eta|^2 in the finite chart.
    """
    vd = visual_dist(x, xi, eta)
    return ps_density(x, xi) * ps_density(x, eta) / (vd * vd)


def bm_vector_density(v: UnitTangent, basepoint: Point) -> float:
    """Same density expressed through the Hopf coordinates of a vector."""
    h = hopf_coords(v, basepoint)
    return bm_line_density(basepoint, h.v_minus, h.v_plus)


def hopf_jacobian(v: UnitTangent) -> float:
    """|d(xi, eta, s) / d(x, y, theta)| for the Hopf chart, closed form.

    Equals |xi - eta|^2 / (2 y^2); a finite-difference check lives in the
    tests. Infinite-endpoint (vertical) vectors are excluded.
    """
    bwd, fwd = geodesic_endpoints(v)
    if bwd.is_infinity or fwd.is_infinity:
        raise ValueError("the chart Jacobian needs finite endpoints")
    sep = fwd.as_float() - bwd.as_float()
    return sep * sep / (2.0 * v.base.y * v.base.y)


def _chart_density(x, y, co, si):
    """Invariant density in the (x, y, theta) chart, assembled pointwise.

    Conformal product times visual^{-2} times the line-chart Jacobian,
    all evaluated from the formulas; no collapsed form is substituted.
    Vectorized; near-vertical directions are given their limit value
    since the line-chart factors degenerate there while the product does
    not.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        cgeo = x + y * si / co
        rgeo = y / np.abs(co)
        fwd = np.where(co > 0, cgeo + rgeo, cgeo - rgeo)
        bwd = np.where(co > 0, cgeo - rgeo, cgeo + rgeo)
        dxf = x - fwd
        dxb = x - bwd
        qf = dxf * dxf + y * y
        qb = dxb * dxb + y * y
        psf = 2.0 * y / qf
        psb = 2.0 * y / qb
        vd2 = (y * y) * (fwd - bwd) ** 2 / (qf * qb)
        jac = (fwd - bwd) ** 2 / (2.0 * y * y)
        dens = psf * psb / vd2 * jac
    limit = 2.0 / (y * y)
    return np.where(np.abs(co) < 1e-8, limit, np.where(np.isfinite(dens), dens, limit))


def _gauss_panels(lo: float, hi: float, n_panels: int, order: int):
    """Nodes and weights of composite Gauss panels on [lo, hi]."""
    xg, wg = roots_legendre(order)
    edges = np.linspace(lo, hi, n_panels + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    halfs = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mids[:, None] + halfs[:, None] * xg[None, :]).ravel()
    weights = (halfs[:, None] * wg[None, :]).ravel()
    return nodes, weights


def bm_integrate(
    group: LatticeGroup,
    psi,
    y_cap: float,
    *,
    nx: int = 12,
    ny_per_unit: int = 4,
    ntheta_panels: int = 12,
    gauss_order: int = 6,
) -> float:
    """Integral of psi against the invariant measure over the quotient.

    psi(x, y, theta) must accept numpy arrays of positions and
    directions and is treated as supported below height y_cap over every
    standard domain copy of the group (in the copy's own cusp chart).
    Each copy is parametrized through the modular domain; the density is
    evaluated at the image points and the volume element carries the
    explicit conformal factor of the copy map, so no invariance of the
    measure is assumed anywhere.
    """
    copies = fd_copies(group)
    xs, xw = _gauss_panels(-0.5, 0.5, nx, gauss_order)
    # direction panels end at multiples of pi/2 so no node is vertical
    nsec = 4 * max(1, ntheta_panels // 4)
    ths, thw = _gauss_panels(0.0, TWO_PI, nsec, gauss_order)

    total = 0.0
    for xi_node, wx in zip(xs, xw):
        y_floor = math.sqrt(max(1.0 - xi_node * xi_node, 1e-12))
        s_lo, s_hi = math.log(y_floor), math.log(y_cap)
        if s_hi <= s_lo:
            continue
        npan = max(2, int(math.ceil((s_hi - s_lo) * ny_per_unit)))
        ss, sw = _gauss_panels(s_lo, s_hi, npan, gauss_order)
        ys = np.exp(ss)
        yw = sw * ys

        Y2, TH2 = np.meshgrid(ys, ths, indexing="ij")
        WY, WTH = np.meshgrid(yw, thw, indexing="ij")
        CO = np.cos(TH2)
        SI = np.sin(TH2)
        X2 = np.full_like(Y2, xi_node)

        for rep in copies:
            if rep.key() == (1, 0, 0, 1):
                dens = _chart_density(X2, Y2, CO, SI)
                vals = psi(X2, Y2, TH2)
                vol = 1.0
            else:
                m = rep.to_float()
                cd = m.c * X2 + m.d
                den = cd * cd + (m.c * Y2) ** 2
                xx = ((m.a * X2 + m.b) * cd + m.a * m.c * Y2 * Y2) / den
                yy = Y2 / den
                tt = (TH2 - 2.0 * np.arctan2(m.c * Y2, cd)) % TWO_PI
                dens = _chart_density(xx, yy, np.cos(tt), np.sin(tt))
                vals = psi(xx, yy, tt)
                vol = 1.0 / (den * den)
            total += wx * float((vals * dens * vol * WY * WTH).sum())
    return total


# ---------------------------------------------------------------------------
# total mass of the invariant measure over a quotient


@dataclass(frozen=True)
class MassQuadrature:
    """Knobs for the total-mass quadratures.

    y_clip is the height cutoff below which the domain is integrated
    numerically (the cusp parts above it are added in closed form);
    y_clip_check reruns everything at a second cutoff and the two values
    must agree to self_check_tol. The line-chart knobs (dc, r_tail,
    radial panel counts) only affect the cross-check route.
    """

    y_clip: float = 5.0
    y_clip_check: float = 10.0
    self_check_tol: float = 1e-4
    nx: int = 12
    ny_per_unit: int = 4
    ntheta_panels: int = 12
    gauss_order: int = 6
    r_tail: float = 8000.0
    dc: float = 0.0125
    panels_mid: int = 160
    panels_tail: int = 120


def _cusp_tail(group, Y: float) -> float:
    """Exact mass of the domain copies above height Y (one cusp chart
    each): the density integrates to 2 / y^2 in the chart, so each copy
    contributes 2 * 2 pi / Y."""
    return len(fd_copies(group)) * 2.0 * TWO_PI / Y


def bm_total_mass(group: LatticeGroup, quad: MassQuadrature | None = None):
    """Total mass of the invariant measure over the quotient.

    Returns (value, diagnostics). Computed independently at two height
    cutoffs; disagreement beyond self_check_tol raises
    QuadratureDiverged. No proportionality between the preset groups is
    assumed: each is integrated over its own domain copies.
    """
    if quad is None:
        quad = MassQuadrature()

    def ones(x, y, th):
        return np.ones_like(x)

    vals = {}
    for Y in (quad.y_clip, quad.y_clip_check):
        below = bm_integrate(
            group,
            ones,
            Y,
            nx=quad.nx,
            ny_per_unit=quad.ny_per_unit,
            ntheta_panels=quad.ntheta_panels,
            gauss_order=quad.gauss_order,
        )
        vals[Y] = below + _cusp_tail(group, Y)
    v1, v2 = vals[quad.y_clip], vals[quad.y_clip_check]
    rel = abs(v1 - v2) / max(abs(v1), 1e-300)
    if rel > quad.self_check_tol:
        raise QuadratureDiverged(
            f"mass values at the two cutoffs differ by {rel:.2e}"
        )
    diag = {
        "value_primary": v1,
        "value_check": v2,
        "rel_spread": rel,
        "y_clip": quad.y_clip,
        "y_clip_check": quad.y_clip_check,
    }
    return v1, diag


def liouville_total(group: LatticeGroup) -> float:
    """Mass of the position-direction volume (round angle x covolume)."""
    return TWO_PI * group.covolume


# ---------------------------------------------------------------------------
# cross-check route in line coordinates (modular chart)


def _ell_below(c, r, Y):
    """Time the line (c, r) spends in the modular domain below height Y.

    Vectorized over both c and r. Unit-speed time along the semicircle
    is artanh(cos phi), so each admissible u = cos phi window contributes
    a difference of artanh values. The windows: |x| <= 1/2 gives a u
    interval, |z| >= 1 cuts at u = (1 - c^2 - r^2)/(2 c r) depending on
    the sign of c, and y <= Y keeps |u| >= sqrt(1 - (Y/r)^2) when r > Y.
    """
    c = np.asarray(c, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    c, r = np.broadcast_arrays(c, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        u1 = np.maximum((-0.5 - c) / r, -1.0)
        u2 = np.minimum((0.5 - c) / r, 1.0)
        tcut = (1.0 - c * c - r * r) / (2.0 * r)
        lo_extra = np.where(c > 0, tcut / c, -np.inf)
        hi_extra = np.where(c < 0, tcut / c, np.inf)
    zc = np.abs(c) < 1e-300
    lo = np.where(zc, np.where(r >= 1.0, u1, 1.0), np.maximum(u1, lo_extra))
    hi = np.where(zc, np.where(r >= 1.0, u2, -1.0), np.minimum(u2, hi_extra))
    lo = np.clip(lo, -1.0 + 1e-16, 1.0 - 1e-16)
    hi = np.clip(hi, -1.0 + 1e-16, 1.0 - 1e-16)
    # height cutoff; uy = 0 when r <= Y, in which case the two half
    # windows abut at u = 0 and their artanh sums telescope exactly
    with np.errstate(invalid="ignore"):
        uy = np.sqrt(np.clip(1.0 - (Y / r) ** 2, 0.0, None))
    l1 = np.minimum(hi, -uy)
    l2 = np.maximum(lo, uy)
    with np.errstate(invalid="ignore"):
        res1 = np.where(l1 > lo, np.arctanh(l1) - np.arctanh(lo), 0.0)
        res2 = np.where(hi > l2, np.arctanh(hi) - np.arctanh(l2), 0.0)
    return np.where(hi > lo, res1 + res2, 0.0)


def _line_c_nodes(r: float, Y: float, dc: float):
    """Sample centers for radius r: full cover while arcs can dip into
    the domain, tip windows (plus mirror) once only grazing arcs reach
    below the cutoff."""
    if r <= max(2.0 * Y, 8.0):
        lo, hi = -0.5 - r, 0.5 + r
        n = max(8, int((hi - lo) / dc))
        cs = lo + (np.arange(n) + 0.5) * (hi - lo) / n
        return cs, (hi - lo) / n
    uy = math.sqrt(max(0.0, 1.0 - (Y / r) ** 2))
    lo, hi = r * uy - 1.0, r + 0.5
    if hi <= lo:
        lo, hi = r - 1.0, r + 0.5
    n = max(8, int((hi - lo) / dc))
    h = (hi - lo) / n
    right = lo + (np.arange(n) + 0.5) * h
    cs = np.concatenate([-right[::-1], right])
    return cs, h


def bm_total_mass_line_chart(
    group: LatticeGroup, quad: MassQuadrature | None = None
) -> float:
    """Independent mass route in line coordinates (modular group only).

    Integrates (4 / r^2) ell(c, r) over radii in [0.82, r_tail] at the
    primary cutoff, then adds the closed-form cusp part 4 pi / Y and the
    grazing remainder 8 L(Y) / r_tail where L(Y) is the strip integral
    of log(Y / floor height). Other groups would need radial windows at
    each finite cusp, which this route does not implement.
    """
    if group.name != "PSL2Z":
        raise ValueError("the line-chart mass route covers the modular chart only")
    if quad is None:
        quad = MassQuadrature()
    Y = quad.y_clip
    xg, wg = roots_legendre(quad.gauss_order)

    def panel_sum(s_lo, s_hi, n_panels):
        total = 0.0
        edges = np.linspace(s_lo, s_hi, n_panels + 1)
        for i in range(n_panels):
            mid = 0.5 * (edges[i] + edges[i + 1])
            half = 0.5 * (edges[i + 1] - edges[i])
            for q in range(quad.gauss_order):
                r = math.exp(mid + half * xg[q])
                cs, h = _line_c_nodes(r, Y, quad.dc)
                ell = _ell_below(cs, r, Y)
                total += wg[q] * half * (4.0 / r) * float(ell.sum()) * h
        return total

    r_mid = max(2.0 * Y, 8.0)
    below = panel_sum(math.log(0.82), math.log(r_mid), quad.panels_mid)
    below += panel_sum(math.log(r_mid), math.log(quad.r_tail), quad.panels_tail)
    # strip integral of log sqrt(1 - x^2), exactly
    i2 = 0.5 * math.log(0.75) - 1.0 + math.log(3.0)
    graze = 8.0 * (math.log(Y) - i2) / quad.r_tail
    return below + 4.0 * math.pi / Y + graze


# ---------------------------------------------------------------------------
# skinning measures


@dataclass(frozen=True)
class SkinningMeasure:
    """Outward unit-normal measure of a convex set, with its total.

    total is the mass before dividing by the stabilizer order;
    induced_total divides by it (for cusp stabilizers the total is
    already per period, and the two coincide).
    """

    total: float
    stabilizer_order: int
    kind: str

    @property
    def induced_total(self) -> float:
        return self.total / self.stabilizer_order


def _stab_order(group: LatticeGroup, x: float, y: float) -> int:
    return len(enumerate_ball(group, (Fraction(x), Fraction(y)), 0.0))


def _disk_skinning_total(D: Disk, n_nodes: int = 512) -> float:
    """Quadrature over outward directions from the center.

    The outward normal at parameter theta is the radius-rho flow of the
    direction theta at the center; the density at each foot integrates
    against d theta as ps(foot, endpoint) / ps(center, endpoint), a
    smooth periodic integrand (trapezoid converges fast).
    """
    c = D.point
    total = 0.0
    for i in range(n_nodes):
        th = TWO_PI * (i + 0.5) / n_nodes
        v = flow(UnitTangent(c, th), D.radius)
        _, fwd = geodesic_endpoints(v)
        total += ps_density(v.base, fwd) / ps_density(c, fwd)
    return total * TWO_PI / n_nodes


def skinning_measure(
    group: LatticeGroup, D: ConvexSet, *, period: float | None = None
) -> SkinningMeasure:
    """Total skinning (unit normal) mass of a convex set in the quotient.

    Points carry 2 pi spread over the round directions; a horoball at a
    cusp carries density 2 / height per unit boundary chart, totalling
    2 * cusp_width / height over one period; disks integrate the
    conformal ratio; geodesics have density 1 per unit length and side,
    so a closed-geodesic quotient of length L carries 2 L (pass the
    period explicitly, there is no stabilizer bookkeeping for lines).
    """
    if isinstance(D, PointSet):
        return SkinningMeasure(TWO_PI, _stab_order(group, D.x, D.y), "point")
    if isinstance(D, Horoball):
        # conjugating a finite cusp to infinity preserves the total
        if D.center.is_infinity:
            h = float(D.size)
        else:
            q = Fraction(D.center.value).denominator
            h = 1.0 / (float(D.size) * q * q)
        return SkinningMeasure(2.0 * group.cusp_width / h, 1, "horoball")
    if isinstance(D, Disk):
        order = _stab_order(group, D.x, D.y)
        return SkinningMeasure(_disk_skinning_total(D), order, "disk")
    if isinstance(D, GeodesicLine):
        if period is None:
            raise UnsupportedSet(
                "geodesic skinning totals need an explicit period length"
            )
        return SkinningMeasure(2.0 * period, 1, "geodesic")
    raise UnsupportedSet(type(D).__name__)


# ---------------------------------------------------------------------------
# cached context bundling the expensive totals


@dataclass
class MeasureContext:
    """Precomputed masses for a group, with a small JSON cache."""

    group_name: str
    delta: float
    bm_total: float
    diagnostics: dict
    skinning_totals: dict = field(default_factory=dict)

    @property
    def group(self) -> LatticeGroup:
        return get_group(self.group_name)

    def skinning(self, D: ConvexSet, *, period: float | None = None) -> SkinningMeasure:
        key = str(geom_key(D))
        if key in self.skinning_totals:
            total, order, kind = self.skinning_totals[key]
            return SkinningMeasure(total, int(order), kind)
        sk = skinning_measure(self.group, D, period=period)
        self.skinning_totals[key] = [sk.total, sk.stabilizer_order, sk.kind]
        return sk

    def to_json(self) -> str:
        return json.dumps(
            {
                "group": self.group_name,
                "delta": self.delta,
                "bm_total": self.bm_total,
                "diagnostics": self.diagnostics,
                "skinning_totals": self.skinning_totals,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "MeasureContext":
        d = json.loads(text)
        return cls(
            group_name=d["group"],
            delta=d["delta"],
            bm_total=d["bm_total"],
            diagnostics=d["diagnostics"],
            skinning_totals=d.get("skinning_totals", {}),
        )


def measure_context(
    group: LatticeGroup | str,
    quad: MassQuadrature | None = None,
    cache_path: str | None = None,
) -> MeasureContext:
    """Build (or load) the measure context for a preset group.

    The cache stores only derived numbers; it is keyed by group name and
    the primary height cutoff, and silently recomputed on mismatch.
    """
    g = get_group(group) if isinstance(group, str) else group
    if quad is None:
        quad = MassQuadrature()
    if cache_path is not None and os.path.exists(cache_path):
        try:
            with open(cache_path, "r", encoding="utf-8") as fh:
                ctx = MeasureContext.from_json(fh.read())
            if (
                ctx.group_name == g.name
                and ctx.diagnostics.get("y_clip") == quad.y_clip
            ):
                return ctx
        except (ValueError, KeyError):
            pass
    total, diag = bm_total_mass(g, quad)
    ctx = MeasureContext(g.name, 1.0, total, diag)
    if cache_path is not None:
        with open(cache_path, "w", encoding="utf-8") as fh:
            fh.write(ctx.to_json())
    return ctx
