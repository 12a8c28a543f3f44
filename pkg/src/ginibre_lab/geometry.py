"""Planar domains and the geometric primitives behind cell statistics.

Domains: disks, annuli, finite disk unions, and the "flower" of a
configuration (union of disks through the origin centered at the Voronoi
vertices).  Union areas come from an exact arc decomposition (Green's
theorem over uncovered boundary arcs) with a Monte Carlo fallback.

Half-plane intersections are clipped against a huge bounding square;
a cell is declared unbounded exactly when a square edge survives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mc_engine import MCEstimate, stream

BOUNDING_SQUARE_SIDE = 1e6
EDGE_LENGTH_TOL = 1e-9


class GeometryError(ValueError):
    pass


class UnboundedCellError(GeometryError):
    """Flower or cell statistics requested for an unbounded cell."""


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float
    quadrature_budget: int | None = None

    def area(self) -> float:
        return math.pi * self.radius**2

    def contains(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        return np.abs(w - self.center) <= self.radius


@dataclass(frozen=True)
class Annulus:
    center: complex
    r_inner: float
    r_outer: float
    quadrature_budget: int | None = None

    def __post_init__(self):
        if not 0 <= self.r_inner < self.r_outer:
            raise GeometryError("need 0 <= r_inner < r_outer")

    def area(self) -> float:
        return math.pi * (self.r_outer**2 - self.r_inner**2)

    def contains(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        d = np.abs(w - self.center)
        return (d > self.r_inner) & (d <= self.r_outer)


@dataclass(frozen=True)
class DiskUnion:
    centers: tuple
    radii: tuple
    quadrature_budget: int | None = None

    @classmethod
    def of(cls, disks, quadrature_budget: int | None = None) -> "DiskUnion":
        centers = tuple(complex(c) for c, _ in disks)
        radii = tuple(float(r) for _, r in disks)
        if any(r <= 0 for r in radii):
            raise GeometryError("disk radii must be positive")
        return cls(centers=centers, radii=radii, quadrature_budget=quadrature_budget)

    @classmethod
    def from_points(cls, points, quadrature_budget: int | None = None) -> "DiskUnion":
        """Union of disks B(z, |z|), each passing through the origin."""
        pts = np.asarray(points, dtype=complex).ravel()
        if pts.size == 0:
            raise GeometryError("need at least one point")
        if np.any(np.abs(pts) <= 0):
            raise GeometryError("points must be nonzero")
        return cls.of([(z, abs(z)) for z in pts], quadrature_budget)

    @property
    def n_disks(self) -> int:
        return len(self.radii)

    def contains(self, w) -> np.ndarray:
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        inside = np.zeros(w.shape, dtype=bool)
        for c, r in zip(self.centers, self.radii):
            inside |= np.abs(w - c) <= r
        return inside

    def bounding_box(self) -> tuple[float, float, float, float]:
        cs = np.asarray(self.centers)
        rs = np.asarray(self.radii)
        return (
            float((cs.real - rs).min()),
            float((cs.real + rs).max()),
            float((cs.imag - rs).min()),
            float((cs.imag + rs).max()),
        )

    def area(self) -> float:
        return union_area(self)


class Flower(DiskUnion):
    """Disk union attached to a bounded cell: one through-origin disk per
    cell vertex.  Covers every disk B(u, |u|) with u in the cell."""


# ---------------------------------------------------------------------------
# disk union area
# ---------------------------------------------------------------------------


def lens_area(d: float, r1: float, r2: float) -> float:
    """Area of the intersection of two disks with center distance d."""
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        r = min(r1, r2)
        return math.pi * r * r
    x1 = (d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)
    x2 = (d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)
    x1 = min(1.0, max(-1.0, x1))
    x2 = min(1.0, max(-1.0, x2))
    s = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)
    return (
        r1 * r1 * math.acos(x1)
        + r2 * r2 * math.acos(x2)
        - 0.5 * math.sqrt(max(s, 0.0))
    )


def _merge_intervals(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Merge intervals on [0, 2pi) given mod-2pi endpoints (may wrap)."""
    two_pi = 2.0 * math.pi
    flat: list[tuple[float, float]] = []
    for lo, hi in intervals:
        lo %= two_pi
        hi %= two_pi
        if hi >= lo:
            flat.append((lo, hi))
        else:  # wraps through 0
            flat.append((lo, two_pi))
            flat.append((0.0, hi))
    flat.sort()
    merged: list[tuple[float, float]] = []
    for lo, hi in flat:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def _green_arc(c: complex, r: float, t1: float, t2: float) -> float:
    """Green's-theorem contribution of the CCW arc t1..t2 of circle (c, r)."""
    return 0.5 * (
        r * r * (t2 - t1)
        + c.real * r * (math.sin(t2) - math.sin(t1))
        - c.imag * r * (math.cos(t2) - math.cos(t1))
    )


def union_area_exact(domain: DiskUnion) -> float:
    """Exact area of a finite union of disks via arc decomposition.

    Boundary of the union = arcs of each circle not strictly inside another
    disk; duplicates and fully contained disks are dropped first.
    """
    centers = list(domain.centers)
    radii = list(domain.radii)
    n = len(radii)
    tol = 1e-12 * max(radii)
    alive = []
    for i in range(n):
        swallowed = False
        for j in range(n):
            if i == j:
                continue
            d = abs(centers[i] - centers[j])
            contains_ij = d + radii[i] <= radii[j] + tol
            contains_ji = d + radii[j] <= radii[i] + tol
            if contains_ij and (not contains_ji or j < i):
                swallowed = True
                break
        if not swallowed:
            alive.append(i)

    two_pi = 2.0 * math.pi
    total = 0.0
    for i in alive:
        ci, ri = centers[i], radii[i]
        covered: list[tuple[float, float]] = []
        for j in alive:
            if i == j:
                continue
            cj, rj = centers[j], radii[j]
            d = abs(ci - cj)
            if d >= ri + rj:
                continue
            cos_half = (d * d + ri * ri - rj * rj) / (2.0 * d * ri)
            cos_half = min(1.0, max(-1.0, cos_half))
            half = math.acos(cos_half)
            theta = math.atan2((cj - ci).imag, (cj - ci).real)
            covered.append((theta - half, theta + half))
        if not covered:
            total += math.pi * ri * ri
            continue
        merged = _merge_intervals(covered)
        if len(merged) == 1 and merged[0][0] <= 0.0 and merged[0][1] >= two_pi:
            continue  # circle entirely interior
        # complement arcs contribute to the boundary integral
        cursor = 0.0
        for lo, hi in merged:
            if lo > cursor:
                total += _green_arc(ci, ri, cursor, lo)
            cursor = max(cursor, hi)
        if cursor < two_pi:
            total += _green_arc(ci, ri, cursor, two_pi)
    return total


def union_area_mc(domain: DiskUnion, budget: int, seed: int,
                  stream_id: int = 0) -> MCEstimate:
    """Monte Carlo union area: uniform points in the bounding box."""
    x0, x1, y0, y1 = domain.bounding_box()
    box = (x1 - x0) * (y1 - y0)
    rng = stream(seed, stream_id)
    xs = rng.uniform(x0, x1, size=budget)
    ys = rng.uniform(y0, y1, size=budget)
    hit = domain.contains(xs + 1j * ys)
    p = float(hit.mean())
    return MCEstimate(
        value=box * p,
        stderr=box * math.sqrt(max(p * (1.0 - p), 0.0) / budget),
        n_samples=budget,
        seed=seed,
        method="union_area_mc",
    )


def union_area(domain: DiskUnion, method: str = "auto", budget: int = 200_000,
               seed: int = 0):
    """Area of a disk union.  'exact_arc' returns a float, 'mc' an MCEstimate;
    'auto' uses the exact path up to 64 disks (quadratic pair cost)."""
    if method == "auto":
        method = "exact_arc" if domain.n_disks <= 64 else "mc"
    if method == "exact_arc":
        return union_area_exact(domain)
    if method == "mc":
        return union_area_mc(domain, budget=budget, seed=seed)
    raise GeometryError(f"unknown union area method {method!r}")


def domain_area(domain) -> float:
    if isinstance(domain, (Disk, Annulus)):
        return domain.area()
    if isinstance(domain, DiskUnion):
        return union_area_exact(domain)
    raise GeometryError(f"unsupported domain {type(domain)!r}")


# ---------------------------------------------------------------------------
# half-plane intersections and the origin cell
# ---------------------------------------------------------------------------


@dataclass
class HalfPlanePolygon:
    """Intersection of half-planes {w: Re(w conj(z_i)) <= |z_i|^2/2}, one per
    generator z_i: the region closer to 0 than to any z_i.  Vertices are CCW;
    an unbounded region keeps the surviving bounding-square corners."""

    generators: np.ndarray
    vertices: np.ndarray
    bounded: bool
    contributing: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))

    @property
    def side_count(self) -> int:
        return int(self.contributing.size)

    def area(self) -> float:
        if not self.bounded:
            return math.inf
        return shoelace_area(self.vertices)

    def perimeter(self) -> float:
        if not self.bounded:
            return math.inf
        v = self.vertices
        return float(np.sum(np.abs(np.roll(v, -1) - v)))

    def contains(self, w, slack: float = 0.0) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        ok = np.ones(w.shape, dtype=bool)
        for z in self.generators:
            ok &= (w * np.conj(z)).real <= 0.5 * abs(z) ** 2 + slack
        return ok


def shoelace_area(vertices: np.ndarray) -> float:
    v = np.asarray(vertices, dtype=complex)
    if v.size < 3:
        return 0.0
    x, y = v.real, v.imag
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _clip_halfplane(poly: list[complex], normal: complex, offset: float) -> list[complex]:
    """Sutherland-Hodgman step for {w: Re(w conj(normal)) <= offset}."""
    if not poly:
        return poly
    out: list[complex] = []
    m = len(poly)
    nc = normal.conjugate()
    for k in range(m):
        cur = poly[k]
        nxt = poly[(k + 1) % m]
        f_cur = (cur * nc).real - offset
        f_nxt = (nxt * nc).real - offset
        if f_cur <= 0.0:
            out.append(cur)
        if (f_cur > 0.0) != (f_nxt > 0.0) and f_cur != f_nxt:
            t = f_cur / (f_cur - f_nxt)
            if 0.0 < t < 1.0:
                out.append(cur + t * (nxt - cur))
    return out


def halfplane_intersection(points) -> HalfPlanePolygon:
    """Clip the perpendicular-bisector half-planes of 0 and each generator.

    Generators within 1e-12 of the origin are ignored (they coincide with
    the germ).  Unboundedness is detected by a surviving bounding-square
    vertex.
    """
    gens = np.asarray(points, dtype=complex).ravel()
    gens = gens[np.abs(gens) > 1e-12]
    half = 0.5 * BOUNDING_SQUARE_SIDE
    poly: list[complex] = [
        complex(half, -half),
        complex(half, half),
        complex(-half, half),
        complex(-half, -half),
    ]
    for z in gens:
        poly = _clip_halfplane(poly, z, 0.5 * abs(z) ** 2)
        if not poly:
            break
    # drop repeated vertices from tangent clips
    cleaned: list[complex] = []
    for v in poly:
        if not cleaned or abs(v - cleaned[-1]) > 1e-12 * max(1.0, abs(v)):
            cleaned.append(v)
    if len(cleaned) > 1 and abs(cleaned[0] - cleaned[-1]) <= 1e-12 * max(1.0, abs(cleaned[0])):
        cleaned.pop()
    verts = np.asarray(cleaned, dtype=complex)
    bounded = bool(verts.size) and bool(np.all(np.maximum(np.abs(verts.real), np.abs(verts.imag)) < half * 0.99))
    contributing = _contributing_generators(gens, verts) if bounded else np.array([], dtype=np.int64)
    return HalfPlanePolygon(generators=gens, vertices=verts, bounded=bounded,
                            contributing=contributing)


def _contributing_generators(gens: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Indices of generators whose bisector carries an edge longer than the
    tolerance."""
    if verts.size < 3 or gens.size == 0:
        return np.array([], dtype=np.int64)
    nxt = np.roll(verts, -1)
    out = []
    for i, z in enumerate(gens):
        scale = abs(z) * (np.abs(verts) + abs(z)) + 1.0
        res_cur = np.abs((verts * z.conjugate()).real - 0.5 * abs(z) ** 2)
        res_nxt = np.abs((nxt * z.conjugate()).real - 0.5 * abs(z) ** 2)
        on_line = (res_cur <= 1e-7 * scale) & (res_nxt <= 1e-7 * scale)
        long_enough = np.abs(nxt - verts) > EDGE_LENGTH_TOL
        if np.any(on_line & long_enough):
            out.append(i)
    return np.asarray(out, dtype=np.int64)


@dataclass
class VoronoiCell:
    """Cell of a germ at the origin against a finite configuration."""

    germ: complex
    polygon: HalfPlanePolygon
    area: float
    perimeter: float
    side_count: int
    neighbor_indices: np.ndarray
    determinacy_radius: float

    @property
    def bounded(self) -> bool:
        return self.polygon.bounded

    @property
    def vertices(self) -> np.ndarray:
        return self.polygon.vertices


def voronoi_cell_at_origin(points) -> VoronoiCell:
    """Voronoi cell of the origin germ within {0} union points.

    determinacy_radius = 2 max |vertex|: configuration points beyond it
    cannot alter the cell, so a finite window of that radius suffices.
    """
    poly = halfplane_intersection(points)
    if poly.bounded:
        area = poly.area()
        perim = poly.perimeter()
        det_radius = 2.0 * float(np.max(np.abs(poly.vertices)))
    else:
        area = math.inf
        perim = math.inf
        det_radius = math.inf
    return VoronoiCell(
        germ=0.0 + 0.0j,
        polygon=poly,
        area=area,
        perimeter=perim,
        side_count=poly.side_count,
        neighbor_indices=poly.contributing,
        determinacy_radius=det_radius,
    )


def flower(points) -> Flower:
    """Union over the cell of the origin of the disks B(u, |u|), u in cell.

    The union is attained at the cell vertices: for u in the convex cell,
    B(u, |u|) is covered by the vertex disks (checked by a sampling invariant
    in the tests, raising here would need a counterexample to convexity).
    """
    poly = halfplane_intersection(points)
    if not poly.bounded:
        raise UnboundedCellError("flower requested for an unbounded cell")
    verts = poly.vertices
    keep = np.abs(verts) > 1e-12
    disks = [(complex(v), float(abs(v))) for v in verts[keep]]
    if not disks:
        raise GeometryError("cell degenerate to the origin")
    return Flower.of(disks)


# ---------------------------------------------------------------------------
# polygon/disk intersection (for cell moments inside a ball)
# ---------------------------------------------------------------------------


def _circle_crossings(a: complex, b: complex, radius: float) -> list[float]:
    """Sorted parameters s in (0,1) where a + s(b-a) meets |w| = radius."""
    d = b - a
    aa = d.real * d.real + d.imag * d.imag
    if aa == 0.0:
        return []
    bb = 2.0 * (a.real * d.real + a.imag * d.imag)
    cc = a.real * a.real + a.imag * a.imag - radius * radius
    disc = bb * bb - 4.0 * aa * cc
    if disc <= 0.0:
        return []
    sq = math.sqrt(disc)
    out = [s for s in ((-bb - sq) / (2 * aa), (-bb + sq) / (2 * aa)) if 0.0 < s < 1.0]
    return sorted(out)


def convex_polygon_disk_area(vertices, radius: float) -> float:
    """Area of (convex polygon containing the origin) intersect B(0, radius).

    Star-shaped decomposition: per edge, split at circle crossings; inside
    pieces add triangle areas, outside pieces add circular sectors.
    """
    if radius <= 0.0:
        return 0.0
    verts = np.asarray(vertices, dtype=complex)
    if verts.size < 3:
        return 0.0
    total = 0.0
    m = verts.size
    for k in range(m):
        a = complex(verts[k])
        b = complex(verts[(k + 1) % m])
        cuts = [0.0] + _circle_crossings(a, b, radius) + [1.0]
        for s0, s1 in zip(cuts[:-1], cuts[1:]):
            if s1 - s0 <= 1e-15:
                continue
            p = a + s0 * (b - a)
            q = a + s1 * (b - a)
            mid = a + 0.5 * (s0 + s1) * (b - a)
            # strict test: a segment tangent from outside (|mid| == radius)
            # contributes a sector, not a chord triangle
            if abs(mid) < radius:
                total += 0.5 * (p.real * q.imag - p.imag * q.real)
            else:
                dtheta = math.atan2((q * p.conjugate()).imag, (q * p.conjugate()).real)
                total += 0.5 * radius * radius * dtheta
    return total
